"""Boundary traces, canonical ``K``-conditions and their classification.

Traces of a quasi-state pair ``w_a = (y(a), D¹y(a))``, ``w_b`` are::

    Γ1 y = (D¹y(a), -D¹y(b))        Γ2 y = (y(a), y(b))

and a bounded ``K`` on C² defines the condition
``(K - I) Γ1 y + i (K + I) Γ2 y = 0``. Unitary ``K`` give exactly the
self-adjoint realizations, contractions the maximal dissipative ones, and
diagonal ``K`` exactly the separated conditions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._numerics import singular_values2, spectral_norm2
from .coefficients import parse_complex
from .errors import ValidationError

__all__ = [
    "TwoPointBC",
    "CanonicalK",
    "BoundaryTraces",
    "Classification",
    "SeparatedParameters",
    "gamma_maps",
    "canonical_to_two_point",
    "classify",
    "separated_parameters",
    "dirichlet",
    "parse_matrix",
    "matrix_to_json",
    "DEFAULT_TOL",
]

DEFAULT_TOL = 1e-9
RANK_TOL = 1e-10


def parse_matrix(data, field_name="matrix") -> np.ndarray:
    """2x2 complex matrix from ``[[re, im] x 4]`` (row-major).

    Nested ``[[m00, m01], [m10, m11]]`` with number or ``[re, im]`` entries
    is accepted as well.
    """
    if not isinstance(data, list):
        raise ValidationError("expected a list", field_name)
    if len(data) == 4:
        vals = [parse_complex(v, field_name) for v in data]
        return np.array(vals, dtype=complex).reshape(2, 2)
    if len(data) == 2 and all(isinstance(r, list) and len(r) == 2 for r in data):
        return np.array(
            [[parse_complex(v, field_name) for v in row] for row in data], dtype=complex
        )
    raise ValidationError("expected four [re, im] entries in row-major order", field_name)


def matrix_to_json(M):
    return [[float(z.real), float(z.imag)] for z in np.asarray(M, dtype=complex).ravel()]


@dataclass(frozen=True, eq=False)
class TwoPointBC:
    """``α w(a) + β w(b) = 0`` with ``w = (y, D¹y)``."""

    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        alpha = np.array(self.alpha, dtype=complex)
        beta = np.array(self.beta, dtype=complex)
        if alpha.shape != (2, 2) or beta.shape != (2, 2):
            raise ValidationError("α and β must be 2x2", "alpha/beta")
        if not (np.all(np.isfinite(alpha)) and np.all(np.isfinite(beta))):
            raise ValidationError("α and β must be finite", "alpha/beta")
        alpha.flags.writeable = False
        beta.flags.writeable = False
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        if self.rank() < 2:
            raise ValidationError("stacked [α | β] has rank < 2", "alpha/beta")

    def rank(self, tol=RANK_TOL) -> int:
        s = np.linalg.svd(np.hstack([self.alpha, self.beta]), compute_uv=False)
        return int(np.sum(s > tol * max(1.0, s[0])))

    def residual(self, w_a, w_b):
        return self.alpha @ np.asarray(w_a) + self.beta @ np.asarray(w_b)

    def distance(self, other: TwoPointBC) -> float:
        """``‖α - α'‖ + ‖β - β'‖`` in the spectral norm."""
        return float(
            spectral_norm2(self.alpha - other.alpha) + spectral_norm2(self.beta - other.beta)
        )


def dirichlet() -> TwoPointBC:
    return TwoPointBC(np.array([[1, 0], [0, 0]]), np.array([[0, 0], [1, 0]]))


@dataclass(frozen=True, eq=False)
class CanonicalK:
    K: np.ndarray

    def __post_init__(self):
        K = np.array(self.K, dtype=complex)
        if K.shape != (2, 2) or not np.all(np.isfinite(K)):
            raise ValidationError("K must be a finite 2x2 matrix", "K")
        K.flags.writeable = False
        object.__setattr__(self, "K", K)

    @classmethod
    def separated(cls, K_a, K_b):
        return cls(np.diag([complex(K_a), complex(K_b)]))


class BoundaryTraces(NamedTuple):
    Gamma1: np.ndarray
    Gamma2: np.ndarray


def gamma_maps(w_a, w_b) -> BoundaryTraces:
    """``Γ1 = (D¹y(a), -D¹y(b))``, ``Γ2 = (y(a), y(b))``."""
    w_a = np.asarray(w_a, dtype=complex)
    w_b = np.asarray(w_b, dtype=complex)
    return BoundaryTraces(
        np.array([w_a[1], -w_b[1]], dtype=complex), np.array([w_a[0], w_b[0]], dtype=complex)
    )


def canonical_residual(K, traces: BoundaryTraces):
    K = _as_matrix(K)
    eye = np.eye(2)
    return (K - eye) @ traces.Gamma1 + 1j * (K + eye) @ traces.Gamma2


def _as_matrix(K):
    return K.K if isinstance(K, CanonicalK) else np.asarray(K, dtype=complex)


def canonical_to_two_point(K) -> TwoPointBC:
    """Rewrite ``(K - I) Γ1 y + i (K + I) Γ2 y = 0`` as ``α w(a) + β w(b) = 0``.

    Row ``j`` reads ``(K-I)_{j1} D¹y(a) - (K-I)_{j2} D¹y(b)
    + i (K+I)_{j1} y(a) + i (K+I)_{j2} y(b) = 0``.

    Raises
    ------
    ValidationError
        If the resulting condition set is degenerate (rank < 2).
    """
    K = _as_matrix(K)
    Km, Kp = K - np.eye(2), K + np.eye(2)
    alpha = np.column_stack([1j * Kp[:, 0], Km[:, 0]])
    beta = np.column_stack([1j * Kp[:, 1], -Km[:, 1]])
    return TwoPointBC(alpha, beta)


class Classification(NamedTuple):
    kind: str  # "selfadjoint" | "maximal_dissipative_strict" | "none"
    separated: bool

    @property
    def selfadjoint(self):
        return self.kind == "selfadjoint"

    @property
    def dissipative(self):
        return self.kind in ("selfadjoint", "maximal_dissipative_strict")

    def __str__(self):
        return f"{self.kind}, {'separated' if self.separated else 'coupled'}"


def classify(K, tol=DEFAULT_TOL) -> Classification:
    """Unitary vs contractive vs neither, plus the separated flag.

    ``K`` is unitary when ``‖K*K - I‖ <= tol``; a non-unitary ``K`` with
    largest singular value ``<= 1 + tol`` is a strict contraction (the
    boundary ``‖K‖ = 1`` included). Separated means both off-diagonal moduli
    are ``<= tol``.
    """
    if not tol > 0:
        raise ValidationError("tolerance must be positive", "tol")
    K = _as_matrix(K)
    gram = K.conj().T @ K - np.eye(2)
    if spectral_norm2(gram) <= tol:
        kind = "selfadjoint"
    elif singular_values2(K)[0] <= 1 + tol:
        kind = "maximal_dissipative_strict"
    else:
        kind = "none"
    separated = abs(K[0, 1]) <= tol and abs(K[1, 0]) <= tol
    return Classification(kind, bool(separated))


class SeparatedParameters(NamedTuple):
    K_a: complex
    K_b: complex
    selfadjoint_a: bool
    selfadjoint_b: bool
    dissipative_a: bool
    dissipative_b: bool

    @property
    def selfadjoint(self):
        return self.selfadjoint_a and self.selfadjoint_b


def separated_parameters(K, tol=DEFAULT_TOL) -> SeparatedParameters:
    """Diagonal entries ``K_a, K_b`` of a separated ``K`` with per-end flags.

    Raises
    ------
    ValidationError
        If ``K`` is not diagonal within ``tol``.
    """
    M = _as_matrix(K)
    if not classify(M, tol).separated:
        raise ValidationError("K is not diagonal, so the conditions are coupled", "K")
    K_a, K_b = complex(M[0, 0]), complex(M[1, 1])
    return SeparatedParameters(
        K_a,
        K_b,
        abs(abs(K_a) - 1) <= tol,
        abs(abs(K_b) - 1) <= tol,
        abs(K_a) <= 1 + tol,
        abs(K_b) <= 1 + tol,
    )


def random_unitary(rng) -> np.ndarray:
    """Haar-distributed 2x2 unitary."""
    Z = (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))) / np.sqrt(2)
    Qm, R = np.linalg.qr(Z)
    d = np.diag(R)
    return Qm * (d / np.abs(d))


def random_contraction(rng, strict=True) -> np.ndarray:
    """``U diag(σ) V`` with singular values drawn from ``[0, 1)``."""
    U, V = random_unitary(rng), random_unitary(rng)
    s = rng.uniform(0.0, 1.0, size=2)
    if not strict:
        s[0] = 1.0
    return U @ np.diag(s) @ V
