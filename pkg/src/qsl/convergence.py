"""Resolvent convergence experiments for coefficient and boundary families.

For a family ``(p_ε, Q_ε, α(ε), β(ε))`` the report tracks the four
condition columns (L1 distances of the three ratios and the boundary
matrix distance), the sup-norm gap between scalar Green kernels at a fixed
resolvent point, and the operator-norm bound ``(b - a) * sup |Γ_ε - Γ_0|``.
A Monte-Carlo estimate of ``‖(R_ε - R_0) f‖₂`` over random unit ``f``
accompanies the bound as a lower-side sanity check.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._numerics import composite_nodes, refine_mesh
from ._parallel import parallel_map
from .boundary import TwoPointBC
from .coefficients import (
    QUAD_EPSABS,
    QUAD_EPSREL,
    CoefficientFamily,
    Coefficients,
    l1_distance,
    l1_norm,
)
from .errors import EigenvalueCollision, NumericalError, ValidationError
from .ode_core import DEFAULT_CONFIG, IntegratorConfig
from .spectral import GreenKernel, green_function, green_matrix, resolvent_apply

__all__ = [
    "DEFAULT_EPS",
    "ConvergenceCase",
    "ConvergenceRow",
    "ConvergenceReport",
    "kernel_sup_distance",
    "resolvent_gap_bound",
    "monte_carlo_gap",
    "mu_shift_residual",
    "run_case",
]

DEFAULT_EPS = (0.2, 0.1, 0.05, 0.025)
CSV_COLUMNS = ("eps", "c1_l1", "c2_l1", "c3_l1", "c4_bc", "kernel_gap", "resolvent_bound")


@dataclass
class ConvergenceCase:
    """A family plus boundary data and the resolvent point ``λ``.

    ``bc_family`` is either a fixed :class:`TwoPointBC` or a callable
    ``ε -> TwoPointBC``.
    """

    family: CoefficientFamily
    bc_family: TwoPointBC | Callable[[float], TwoPointBC]
    lam: complex = -1.0
    grid_size: int = 201
    mc_samples: int = 20
    seed: int = 0
    cfg: IntegratorConfig = DEFAULT_CONFIG

    def __post_init__(self):
        if not isinstance(self.family, CoefficientFamily):
            raise ValidationError("family must be a CoefficientFamily", "family")
        if int(self.grid_size) < 3:
            raise ValidationError("grid_size must be at least 3", "grid")
        if int(self.mc_samples) < 0:
            raise ValidationError("mc_samples must be non-negative", "mc_samples")
        intervals = {m.interval for _, m in self.family}
        if len(intervals) != 1:
            raise ValidationError("family members live on different intervals", "family")
        self.lam = complex(self.lam)
        self.grid_size = int(self.grid_size)

    def bc(self, eps) -> TwoPointBC:
        bc = self.bc_family(eps) if callable(self.bc_family) else self.bc_family
        if not isinstance(bc, TwoPointBC):
            raise ValidationError("boundary family must produce TwoPointBC values", "boundary")
        return bc


@dataclass(frozen=True)
class ConvergenceRow:
    eps: float
    c1_l1: float
    c2_l1: float
    c3_l1: float
    c4_bc: float
    kernel_gap: float
    resolvent_bound: float
    mc_gap: float = 0.0
    mu_shift_residual: float = 0.0

    def columns(self):
        return tuple(getattr(self, name) for name in CSV_COLUMNS)


@dataclass
class ConvergenceReport:
    rows: list
    lam: complex
    interval: tuple
    grid_size: int
    mu: float = 0.0
    notes: list = field(default_factory=list)

    def column(self, name) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows], dtype=float)

    @property
    def final_bound(self) -> float:
        """Bound of the smallest positive ``ε`` (the ``ε = 0`` row is trivially 0)."""
        positive = [r for r in self.rows if r.eps > 0]
        return positive[-1].resolvent_bound if positive else 0.0

    def strictly_decreasing(self, name) -> bool:
        col = self.column(name)
        return bool(np.all(np.diff(col) < 0))

    def non_increasing(self, name) -> bool:
        col = self.column(name)
        return bool(np.all(np.diff(col) <= 0))

    def to_csv(self, fmt=None) -> str:
        fmt = fmt or (lambda x: format(float(x), ".15g"))
        buf = io.StringIO()
        buf.write(",".join(CSV_COLUMNS) + "\n")
        for r in self.rows:
            buf.write(",".join(fmt(v) for v in r.columns()) + "\n")
        return buf.getvalue()


def kernel_sup_distance(kernel_eps: GreenKernel, kernel_0: GreenKernel, grid_size=201) -> float:
    """``max |Γ_ε - Γ_0|`` over a uniform ``grid_size x grid_size`` grid."""
    if not np.allclose(kernel_eps.interval, kernel_0.interval, rtol=0, atol=1e-12):
        raise ValidationError("kernels live on different intervals", "interval")
    if kernel_eps.lam != kernel_0.lam:
        raise ValidationError("kernels are evaluated at different λ", "lambda")
    _, _, v1 = kernel_eps.grid(grid_size)
    _, _, v0 = kernel_0.grid(grid_size)
    return float(np.max(np.abs(v1 - v0)))


def resolvent_gap_bound(kernel_gap: float, interval_length: float) -> float:
    """``(b - a) * sup |Γ_ε - Γ_0|``, an upper bound for ``‖R_ε - R_0‖``."""
    if kernel_gap < 0 or interval_length < 0:
        raise ValidationError("inputs must be non-negative", "kernel_gap")
    return float(interval_length) * float(kernel_gap)


def _random_unit_functions(rng, interval, count, modes=8):
    """Random trigonometric polynomials normalized to unit L2 norm."""
    a, b = interval
    L = b - a
    out = []
    for _ in range(count):
        coef = rng.standard_normal(modes) + 1j * rng.standard_normal(modes)
        coef /= np.arange(1, modes + 1)
        # cosine basis sqrt(2/L) cos(kπ(t-a)/L) is orthonormal for k >= 1, so
        # the L2 norm is the Euclidean norm of the coefficients
        coef /= np.linalg.norm(coef)
        k = np.arange(1, modes + 1)

        def f(t, coef=coef):
            t = np.asarray(t, dtype=float)
            basis = np.sqrt(2 / L) * np.cos(np.pi * k * (t[..., None] - a) / L)
            return basis @ coef

        out.append(f)
    return out


def _l2_nodes(interval, mesh, n_cells=64):
    m = refine_mesh(np.asarray(mesh, dtype=float), interval, n_cells)
    nodes, weights = composite_nodes(m)
    return nodes.ravel(), weights.ravel()


def monte_carlo_gap(kernel_eps: GreenKernel, kernel_0: GreenKernel, fs) -> float:
    """``max_f ‖(R_ε - R_0) f‖₂`` over the supplied unit-norm ``f``."""
    mesh = np.union1d(kernel_eps.coefficients.mesh, kernel_0.coefficients.mesh)
    nodes, weights = _l2_nodes(kernel_eps.interval, mesh)
    worst = 0.0
    for f in fs:
        diff = resolvent_apply(kernel_eps, f)(nodes) - resolvent_apply(kernel_0, f)(nodes)
        worst = max(worst, float(np.sqrt(np.sum(weights * np.abs(diff) ** 2))))
    return worst


def mu_shift_residual(c_eps: Coefficients, c_0: Coefficients, mu: float):
    """Compare both sides of the μ-shift expansion in the L1 norm.

    Returns ``(|lhs - rhs|, tolerance)`` where ``lhs`` is
    ``‖(Q_ε+μ)²/p_ε - (Q_0+μ)²/p_0‖₁`` and ``rhs`` the norm of the expanded
    combination of the three ratio differences.
    """
    pe, qe, p0, q0 = c_eps.p, c_eps.Q, c_0.p, c_0.Q
    points = np.union1d(c_eps.mesh, c_0.mesh)

    def lhs_fn(t):
        return (qe(t) + mu) ** 2 / pe(t) - (q0(t) + mu) ** 2 / p0(t)

    def rhs_fn(t):
        d3 = qe(t) ** 2 / pe(t) - q0(t) ** 2 / p0(t)
        d2 = qe(t) / pe(t) - q0(t) / p0(t)
        d1 = 1 / pe(t) - 1 / p0(t)
        return d3 + 2 * mu * d2 + mu**2 * d1

    lhs = l1_norm(lhs_fn, c_0.interval, points=points)
    rhs = l1_norm(rhs_fn, c_0.interval, points=points)
    tol = 10 * (QUAD_EPSABS * max(1, len(points)) + QUAD_EPSREL * max(lhs, rhs))
    return abs(lhs - rhs), tol


def _ratio_distances(c_eps: Coefficients, c_0: Coefficients):
    pts = np.union1d(c_eps.mesh, c_0.mesh)
    pe, qe, p0, q0 = c_eps.p, c_eps.Q, c_0.p, c_0.Q
    d1 = l1_distance(lambda t: 1 / pe(t), lambda t: 1 / p0(t), c_0.interval, points=pts)
    d2 = l1_distance(lambda t: qe(t) / pe(t), lambda t: q0(t) / p0(t), c_0.interval, points=pts)
    d3 = l1_distance(
        lambda t: qe(t) ** 2 / pe(t), lambda t: q0(t) ** 2 / p0(t), c_0.interval, points=pts
    )
    return d1, d2, d3


def run_case(case: ConvergenceCase) -> ConvergenceReport:
    """Evaluate every family member against the ``ε = 0`` limit.

    Raises
    ------
    NumericalError
        ``λ`` is (numerically) an eigenvalue of the limit problem, a member
        integration fails, or the μ-shift expansion disagrees beyond
        quadrature tolerance.
    """
    family = case.family
    c0 = family.limit
    bc0 = case.bc(0.0)
    try:
        kernel0 = green_function(green_matrix(bc0, c0, case.lam, case.cfg))
    except EigenvalueCollision as exc:
        raise NumericalError(f"λ is in the spectrum of the limit problem: {exc}") from None
    kernel0.grid(case.grid_size)

    rng = np.random.default_rng(case.seed)
    mu = float(rng.uniform(-3.0, 3.0))
    fs = _random_unit_functions(rng, c0.interval, case.mc_samples)
    length = c0.length

    def evaluate(item):
        eps, member = item
        bc = case.bc(eps)
        if eps == 0.0:
            return ConvergenceRow(0.0, 0.0, 0.0, 0.0, bc.distance(bc0), 0.0, 0.0, 0.0, 0.0)
        try:
            kernel = green_function(green_matrix(bc, member, case.lam, case.cfg))
        except EigenvalueCollision as exc:
            raise NumericalError(f"λ is an eigenvalue of the ε = {eps} member: {exc}") from None
        d1, d2, d3 = _ratio_distances(member, c0)
        gap = kernel_sup_distance(kernel, kernel0, case.grid_size)
        mc = monte_carlo_gap(kernel, kernel0, fs) if fs else 0.0
        res, tol = mu_shift_residual(member, c0, mu)
        if res > tol:
            raise NumericalError(
                f"μ-shift expansion mismatch at ε = {eps}: residual {res:.3g} > {tol:.3g}"
            )
        return ConvergenceRow(
            float(eps), d1, d2, d3, bc.distance(bc0), gap, resolvent_gap_bound(gap, length), mc, res
        )

    rows = parallel_map(evaluate, list(family))
    report = ConvergenceReport(rows, case.lam, c0.interval, case.grid_size, mu)
    for r in rows:
        if r.mc_gap > r.resolvent_bound + 1e-6:
            report.notes.append(
                f"Monte-Carlo gap {r.mc_gap:.3g} exceeds the bound {r.resolvent_bound:.3g} at ε = {r.eps}"
            )
    return report
