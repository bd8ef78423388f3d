"""Quasi-derivatives and the first-order system behind ``l[y] = λ y + f``.

With ``D¹y = p y' - Q y`` the scalar equation becomes
``w' = A_λ w + φ`` for ``w = (y, D¹y)``, where::

    A_λ = [[ Q/p,          1/p ],
           [-Q²/p - λ,    -Q/p ]]      φ = (0, -f)

``D²y = (D¹y)' + (Q/p) D¹y + (Q²/p) y`` is never differentiated
numerically; along a solution it equals ``-(λ y + f)``.
"""

from __future__ import annotations

import warnings

import numpy as np
from scipy import integrate

from ._numerics import composite_nodes, refine_mesh
from .coefficients import Coefficients, RatioSet
from .errors import NumericalError, ValidationError

__all__ = [
    "MatrixField",
    "SystemMatrixField",
    "ForcingField",
    "QuasiState",
    "Trajectory",
    "system_matrix",
    "quasi_derivative_1",
    "scalar_rhs_to_system",
    "lagrange_sides",
    "lagrange_defect",
]


def _as_vectorized(f):
    def wrapped(t):
        t = np.asarray(t, dtype=float)
        return np.broadcast_to(np.asarray(f(t), dtype=complex), t.shape)

    wrapped.breakpoints = getattr(f, "breakpoints", None)
    return wrapped


def _quad_complex(fn, lo, hi):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            re, _ = integrate.quad(lambda x: fn(x).real, lo, hi, epsabs=0.0, epsrel=1e-10)
            im, _ = integrate.quad(lambda x: fn(x).imag, lo, hi, epsabs=0.0, epsrel=1e-10)
        except integrate.IntegrationWarning as exc:
            raise NumericalError(f"quadrature failed on [{lo}, {hi}]: {exc}") from None
    return complex(re, im)


class MatrixField:
    """Evaluable map ``t -> 2x2`` complex matrix on ``[a, b]``.

    The base class wraps an arbitrary vectorized callable; ``constant``
    marks fields that never vary (these are propagated exactly).
    """

    def __init__(self, fn, interval, mesh=None, constant=None, lam=None):
        self._fn = fn
        self.interval = tuple(float(x) for x in interval)
        self.mesh = np.asarray(mesh if mesh is not None else self.interval, dtype=float)
        self._constant = None if constant is None else np.asarray(constant, dtype=complex)
        self.lam = lam

    @classmethod
    def constant(cls, matrix, interval):
        m = np.asarray(matrix, dtype=complex)
        return cls(lambda t: np.broadcast_to(m, np.shape(t) + (2, 2)), interval, constant=m)

    def __call__(self, t):
        return np.asarray(self._fn(np.asarray(t, dtype=float)), dtype=complex)

    def constant_on(self, lo, hi):
        return self._constant

    def singular_ends(self, lo, hi):
        return False, False

    def integral(self, lo, hi):
        """``∫_lo^hi A(t) dt`` entrywise."""
        out = np.empty((2, 2), dtype=complex)
        for i in range(2):
            for j in range(2):
                out[i, j] = _quad_complex(lambda x: self(x)[..., i, j], lo, hi)
        return out


class SystemMatrixField(MatrixField):
    """``A_λ(t)`` assembled from a :class:`RatioSet`."""

    def __init__(self, r: RatioSet, lam: complex):
        self.ratios = r
        self.coefficients: Coefficients = r.coefficients
        super().__init__(None, r.interval, r.mesh, lam=complex(lam))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        r1, r2, r3 = self.ratios.r1(t), self.ratios.r2(t), self.ratios.r3(t)
        out = np.empty(t.shape + (2, 2), dtype=complex)
        out[..., 0, 0] = r2
        out[..., 0, 1] = r1
        out[..., 1, 0] = -r3 - self.lam
        out[..., 1, 1] = -r2
        return out

    def _matrix(self, pv, qv):
        return np.array([[qv / pv, 1 / pv], [-qv * qv / pv - self.lam, -qv / pv]], dtype=complex)

    def constant_on(self, lo, hi):
        p_rule, q_rule = self.coefficients.rules_on(lo, hi)
        pv, qv = p_rule.constant_on(lo, hi), q_rule.constant_on(lo, hi)
        if pv is None or qv is None:
            return None
        return self._matrix(pv, qv)

    def singular_ends(self, lo, hi):
        p_rule, q_rule = self.coefficients.rules_on(lo, hi)

        def bad(x):
            with np.errstate(divide="ignore", invalid="ignore"):
                pv, qv = p_rule(np.array(x)), q_rule(np.array(x))
                vals = np.array([1 / pv, qv / pv, qv * qv / pv])
            return not np.all(np.isfinite(vals))

        return bad(lo), bad(hi)

    def integral(self, lo, hi):
        r = self.ratios
        i1 = _quad_complex(r.r1, lo, hi)
        i2 = _quad_complex(r.r2, lo, hi)
        i3 = _quad_complex(r.r3, lo, hi)
        return np.array([[i2, i1], [-i3 - self.lam * (hi - lo), -i2]], dtype=complex)


def system_matrix(r: RatioSet, lam: complex) -> SystemMatrixField:
    """The matrix field ``A_λ`` of the first-order system."""
    return SystemMatrixField(r, lam)


def quasi_derivative_1(p_val, Q_val, y, yprime):
    """``D¹y = p y' - Q y`` at a point."""
    return p_val * yprime - Q_val * y


class ForcingField:
    """``φ(t) = (0, -f(t))``; keeps ``f`` for identities that need it."""

    def __init__(self, f):
        self.f = _as_vectorized(f)
        self.breakpoints = getattr(f, "breakpoints", None)

    def __call__(self, t):
        fv = self.f(t)
        out = np.zeros(np.shape(fv) + (2,), dtype=complex)
        out[..., 1] = -fv
        return out


def scalar_rhs_to_system(f) -> ForcingField:
    """Lift a scalar right-hand side ``f`` to the system forcing ``(0, -f)``."""
    return ForcingField(f)


class QuasiState:
    """``(t, (y(t), D¹y(t)))``."""

    __slots__ = ("t", "w")

    def __init__(self, t, w):
        w = np.asarray(w, dtype=complex).reshape(2)
        if not np.all(np.isfinite(w)):
            raise ValidationError("quasi-state must be finite", "w")
        self.t = float(t)
        self.w = w

    def __repr__(self):
        return f"QuasiState(t={self.t}, w={self.w})"


class Trajectory:
    """Solution samples ``(t_i, w_i)`` with dense evaluation in between.

    Between consecutive knots the state is recomputed by a single step of
    the propagator that produced the knots, so dense values carry the same
    local accuracy as the stored ones. Steps start from the knot nearer the
    initial point ``origin``, which keeps growing solutions free of
    cancellation.

    Parameters
    ----------
    t : ndarray, shape (n,)
        Strictly increasing knots covering the interval.
    w : ndarray, shape (n, 2, m)
        States at the knots (``m = 1`` for a single solution, ``m = 2`` for
        a fundamental matrix).
    propagate : callable
        ``propagate(idx, t, w, from_right)`` advances states ``w`` inside knot
        interval ``idx``, starting from its right knot where ``from_right``.
    origin : float, optional
        Initial point of the integration; defaults to the first knot.
    """

    def __init__(self, t, w, propagate, rhs=None, lam=None, field=None, origin=None):
        self.t = np.asarray(t, dtype=float)
        self.w = np.asarray(w, dtype=complex)
        if self.w.ndim == 2:
            self.w = self.w[..., None]
        if np.any(np.diff(self.t) <= 0):
            raise ValidationError("trajectory knots must be strictly increasing", "t")
        self._propagate = propagate
        self.rhs = rhs
        self.lam = lam
        self.field = field
        self.origin = float(self.t[0]) if origin is None else float(origin)

    @property
    def interval(self):
        return float(self.t[0]), float(self.t[-1])

    @property
    def is_vector(self):
        return self.w.shape[-1] == 1

    def states(self, t):
        """Full ``(..., 2, m)`` states at ``t``."""
        t = np.asarray(t, dtype=float)
        flat = t.ravel()
        n = len(self.t)
        idx = np.clip(np.searchsorted(self.t, flat, side="right") - 1, 0, n - 2)
        out = np.empty((flat.size,) + self.w.shape[1:], dtype=complex)
        at_left = flat == self.t[idx]
        at_right = flat == self.t[idx + 1]
        out[at_left] = self.w[idx[at_left]]
        out[at_right & ~at_left] = self.w[idx[at_right & ~at_left] + 1]
        rest = ~(at_left | at_right)
        if rest.any():
            ir = idx[rest]
            right = (self.t[ir + 1] <= self.origin).astype(int)
            out[rest] = self._propagate(ir, flat[rest], self.w[ir + right], right)
        return out.reshape(t.shape + self.w.shape[1:])

    def __call__(self, t):
        s = self.states(t)
        return s[..., 0] if self.is_vector else s

    def column(self, j) -> Trajectory:
        return Trajectory(
            self.t, self.w[..., j : j + 1], self._propagate, self.rhs, self.lam, self.field,
            self.origin,
        )

    def __len__(self):
        return len(self.t)


def lagrange_sides(y: Trajectory, z: Trajectory, c: Coefficients, lam, n_base=64):
    """Both sides of the Lagrange identity for the quasi-differential expression.

    Left: ``∫ (D²y · conj z - y · conj D²z) dt`` by composite 10-point
    Gauss-Legendre quadrature on the coefficient mesh. Right:
    ``(-y · conj D¹z + D¹y · conj z)`` evaluated between ``a`` and ``b``.
    ``D²`` is recovered from ``D²y = -(λ y + f_y)``.
    """
    if not np.allclose(y.interval, z.interval, rtol=0, atol=1e-12) or not np.allclose(
        y.interval, c.interval, rtol=0, atol=1e-12
    ):
        raise ValidationError("trajectories live on different intervals", "trajectory")
    lam = complex(lam)
    points = [c.mesh]
    for traj in (y, z):
        bp = getattr(traj.rhs, "breakpoints", None)
        if bp is not None:
            points.append(np.asarray(bp))
    mesh = refine_mesh(np.concatenate(points), c.interval, n_base)
    nodes, weights = composite_nodes(mesh)
    wy, wz = y(nodes), z(nodes)
    fy = y.rhs(nodes) if y.rhs is not None else 0.0
    fz = z.rhs(nodes) if z.rhs is not None else 0.0
    d2y = -(lam * wy[..., 0] + fy)
    d2z = -(lam * wz[..., 0] + fz)
    integrand = d2y * np.conj(wz[..., 0]) - wy[..., 0] * np.conj(d2z)
    lhs = complex(np.sum(weights * integrand))

    a, b = c.interval
    ya, yb = y(np.array([a, b]))
    za, zb = z(np.array([a, b]))

    def bracket(u, v):
        return -u[0] * np.conj(v[1]) + u[1] * np.conj(v[0])

    rhs = complex(bracket(yb, zb) - bracket(ya, za))
    return lhs, rhs


def lagrange_defect(y: Trajectory, z: Trajectory, c: Coefficients, lam) -> complex:
    """Left side minus right side of the Lagrange identity."""
    lhs, rhs = lagrange_sides(y, z, c, lam)
    return lhs - rhs
