"""Cauchy problems for ``w' = A(t) w + φ(t)`` with piecewise-analytic ``A``.

The interval is cut at every coefficient breakpoint and each cell is
handled by the cheapest exact-enough method:

* ``const`` -- ``A`` constant and no forcing: closed-form 2x2 exponential;
* ``rk`` -- adaptive Dormand-Prince 5(4);
* ``magnus`` -- the innermost cell of a geometric refinement towards an
  endpoint where ``1/p``, ``Q/p`` or ``Q²/p`` blows up; one exponential of
  ``∫A`` (first-order Magnus), which keeps ``det W = 1`` exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._numerics import det2, expm2, inv2
from .errors import NumericalError, ValidationError
from .quasi_system import ForcingField, MatrixField, Trajectory

__all__ = [
    "IntegratorConfig",
    "FundamentalMatrix",
    "solve_cauchy",
    "fundamental_matrix",
    "fundamental_matrix_distance",
]


@dataclass(frozen=True)
class IntegratorConfig:
    rtol: float = 1e-10
    atol: float = 1e-12
    max_steps: int = 1_000_000
    singularity_refinement_depth: int = 40
    exact_constant_segments: bool = True

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise ValidationError("tolerances must be positive", "rtol/atol")
        if self.singularity_refinement_depth < 1:
            raise ValidationError("refinement depth must be >= 1", "singularity_refinement_depth")
        if self.max_steps < 1:
            raise ValidationError("max_steps must be >= 1", "max_steps")


DEFAULT_CONFIG = IntegratorConfig()

# Dormand-Prince 5(4)
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)
_E = _B5 - _B4


def _dp_step(field, forcing, t, h, w):
    """One Dormand-Prince step for a batch of states.

    ``t`` and ``h`` have shape ``(n,)``; ``w`` has shape ``(n, 2, m)``.
    Returns the 5th-order update and the embedded error estimate.
    """
    times = t[:, None] + _C[None, :] * h[:, None]
    A = field(times)
    phi = forcing(times)[..., None] if forcing is not None else None
    hh = h[:, None, None]
    k = []
    for i in range(7):
        wi = w
        for j, a in enumerate(_A[i]):
            if a:
                wi = wi + hh * a * k[j]
        ki = A[:, i] @ wi
        if phi is not None:
            ki = ki + phi[:, i]
        k.append(ki)
    w5 = w + hh * sum(b * kk for b, kk in zip(_B5, k) if b)
    err = hh * sum(e * kk for e, kk in zip(_E, k) if e)
    return w5, err


def _cells(field, lo, hi, cfg, homogeneous):
    """Split ``[lo, hi]`` into ``(lo, hi, kind, payload)`` cells."""
    mesh = field.mesh
    pts = np.unique(np.concatenate([[lo, hi], mesh[(mesh > lo) & (mesh < hi)]]))
    out = []
    for c0, c1 in zip(pts[:-1], pts[1:]):
        if homogeneous and cfg.exact_constant_segments:
            m = field.constant_on(c0, c1)
            if m is not None:
                out.append((c0, c1, "const", m))
                continue
        left, right = field.singular_ends(c0, c1)
        if not (left or right):
            out.append((c0, c1, "rk", None))
            continue
        if left and right:
            mid = 0.5 * (c0 + c1)
            out.extend(_geometric(c0, mid, cfg.singularity_refinement_depth, towards="lo"))
            out.extend(_geometric(mid, c1, cfg.singularity_refinement_depth, towards="hi"))
        else:
            out.extend(
                _geometric(c0, c1, cfg.singularity_refinement_depth, "lo" if left else "hi")
            )
    return out


def _geometric(lo, hi, depth, towards):
    length = hi - lo
    fracs = 0.5 ** np.arange(depth, -1, -1)  # 2^-depth ... 1
    if towards == "lo":
        pts = np.concatenate([[lo], lo + length * fracs])
        pts[-1] = hi
        cells = [(pts[0], pts[1], "magnus", None)]
        cells += [(x0, x1, "rk", None) for x0, x1 in zip(pts[1:-1], pts[2:])]
    else:
        pts = np.concatenate([[hi], hi - length * fracs])[::-1]
        pts[0] = lo
        cells = [(x0, x1, "rk", None) for x0, x1 in zip(pts[:-2], pts[1:-1])]
        cells += [(pts[-2], pts[-1], "magnus", None)]
    return cells


class _Integrator:
    def __init__(self, field, forcing, cfg):
        self.field = field
        self.forcing = forcing
        self.cfg = cfg
        self.steps = 0
        self.h_prev = None

    def _check(self, w, t):
        if not np.all(np.isfinite(w)):
            raise NumericalError(f"non-finite state at t={t}")

    def run(self, t_from, t_to, w0):
        """Integrate from ``t_from`` to ``t_to``; returns knots, states and
        per-interval kinds, all ordered by increasing ``t``."""
        lo, hi = min(t_from, t_to), max(t_from, t_to)
        cells = _cells(self.field, lo, hi, self.cfg, self.forcing is None)
        forward = t_to >= t_from
        if not forward:
            cells = cells[::-1]
        ts, ws, kinds = [t_from], [w0], []
        w = w0
        for c0, c1, kind, payload in cells:
            start, end = (c0, c1) if forward else (c1, c0)
            if kind == "const":
                w = expm2((end - start) * payload) @ w
                self._check(w, end)
                ts.append(end)
                ws.append(w)
                kinds.append(("const", payload))
            elif kind == "magnus":
                M = self.field.integral(c0, c1)
                if forward:
                    w = expm2(M) @ w
                    if self.forcing is not None:
                        w = w + self._forcing_integral(c0, c1)[:, None]
                else:
                    if self.forcing is not None:
                        w = w - self._forcing_integral(c0, c1)[:, None]
                    w = expm2(-M) @ w
                self._check(w, end)
                ts.append(end)
                ws.append(w)
                kinds.append(("magnus", None))
            else:
                w = self._rk_cell(start, end, w, ts, ws, kinds)
        if not forward:
            ts, ws, kinds = ts[::-1], ws[::-1], kinds[::-1]
        return ts, ws, kinds

    def _forcing_integral(self, lo, hi):
        from .quasi_system import _quad_complex

        return np.array([0.0, -_quad_complex(self.forcing.f, lo, hi)], dtype=complex)

    def _initial_step(self, start, end, w):
        length = end - start
        A0 = self.field(np.array([start]))[0]
        scale = max(float(np.max(np.abs(A0))), 1e-300)
        h = min(abs(length), 0.25 * self.cfg.rtol**0.2 / scale * 10.0)
        if self.h_prev is not None:
            h = min(abs(length), max(h, abs(self.h_prev)))
        return h if length > 0 else -h

    def _rk_cell(self, start, end, w, ts, ws, kinds):
        cfg = self.cfg
        t = start
        h = self._initial_step(start, end, w)
        direction = 1.0 if end > start else -1.0
        span = abs(end - start)
        h_min = 1e-14 * max(1.0, abs(start), abs(end))
        while direction * (end - t) > 0:
            remaining = end - t
            if abs(h) >= abs(remaining) or abs(remaining - h) < 0.01 * abs(h):
                h = remaining
                last = True
            else:
                last = False
            w_new, err = _dp_step(self.field, self.forcing, np.array([t]), np.array([h]), w[None])
            w_new, err = w_new[0], err[0]
            self.steps += 1
            if self.steps > cfg.max_steps:
                raise NumericalError(f"exceeded max_steps={cfg.max_steps} near t={t}")
            scale = cfg.atol + cfg.rtol * np.maximum(np.abs(w), np.abs(w_new))
            en = float(np.max(np.abs(err) / scale))
            if not np.isfinite(en):
                raise NumericalError(f"non-finite state near t={t}")
            if en <= 1.0:
                t = end if last else t + h
                w = w_new
                ts.append(t)
                ws.append(w)
                kinds.append(("rk", None))
                self.h_prev = h
                factor = 5.0 if en == 0 else min(5.0, max(0.2, 0.9 * en**-0.2))
                h = h * factor
            else:
                h = h * max(0.1, 0.9 * en**-0.2)
                if abs(h) < h_min and span > h_min:
                    raise NumericalError(
                        f"step size underflow at t={t}; integrable singularity needs more "
                        "refinement depth"
                    )
        return w


def _make_propagator(field, forcing, kinds, knots_t):
    kind_names = np.array([k for k, _ in kinds])
    payloads = [p for _, p in kinds]

    def propagate(idx, t, w, from_right=None):
        out = np.empty_like(w)
        start = idx if from_right is None else idx + from_right
        names = kind_names[idx]
        for name in ("const", "rk", "magnus"):
            sel = names == name
            if not sel.any():
                continue
            ii, tt, ww = idx[sel], t[sel], w[sel]
            t0 = knots_t[start[sel]]
            dt = tt - t0
            if name == "const":
                mats = np.stack([payloads[i] for i in ii])
                out[sel] = expm2(dt[:, None, None] * mats) @ ww
            elif name == "rk":
                out[sel] = _dp_step(field, forcing, t0, dt, ww)[0]
            else:
                res = []
                for t_0, t1, w1 in zip(t0, tt, ww):
                    v = expm2(field.integral(t_0, t1)) @ w1
                    if forcing is not None:
                        from .quasi_system import _quad_complex

                        v = v + np.array([0.0, -_quad_complex(forcing.f, t_0, t1)])[:, None]
                    res.append(v)
                out[sel] = np.stack(res)
        return out

    return propagate


def _integrate(field, forcing, c, w0, cfg):
    a, b = field.interval
    if not a <= c <= b:
        raise ValidationError(f"initial point {c} outside [{a}, {b}]", "c")
    w0 = np.asarray(w0, dtype=complex)
    if w0.ndim == 1:
        w0 = w0[:, None]
    if w0.shape[0] != 2:
        raise ValidationError("initial state must have two rows", "w0")
    ts, ws, kinds = [c], [w0], []
    if c < b:
        integ = _Integrator(field, forcing, cfg)
        ts, ws, kinds = integ.run(c, b, w0)
    if c > a:
        integ = _Integrator(field, forcing, cfg)
        bt, bw, bk = integ.run(c, a, w0)
        if c < b:
            ts, ws, kinds = bt[:-1] + ts, bw[:-1] + ws, bk + kinds
        else:
            ts, ws, kinds = bt, bw, bk
    knots_t = np.array(ts, dtype=float)
    knots_w = np.stack(ws)
    return knots_t, knots_w, kinds


def solve_cauchy(A: MatrixField, phi, c, w0, cfg: IntegratorConfig = DEFAULT_CONFIG) -> Trajectory:
    """Solve ``w' = A w + φ``, ``w(c) = w0`` on the whole interval.

    Integration runs from ``c`` to both endpoints. Knots include every
    breakpoint of ``A``. ``phi`` may be ``None`` (homogeneous problem), a
    :class:`~qsl.quasi_system.ForcingField` or any vectorized callable
    returning ``(..., 2)`` arrays.

    Raises
    ------
    NumericalError
        Step-size underflow, too many steps or a non-finite state.
    """
    forcing = phi
    if phi is not None and not isinstance(phi, ForcingField):
        forcing = _GenericForcing(phi)
    w0 = np.asarray(w0, dtype=complex)
    knots_t, knots_w, kinds = _integrate(A, forcing, float(c), w0, cfg)
    prop = _make_propagator(A, forcing, kinds, knots_t)
    rhs = forcing.f if isinstance(forcing, ForcingField) else None
    return Trajectory(knots_t, knots_w, prop, rhs=rhs, lam=A.lam, field=A, origin=float(c))


class _GenericForcing:
    def __init__(self, phi):
        self._phi = phi
        self.breakpoints = getattr(phi, "breakpoints", None)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return np.broadcast_to(np.asarray(self._phi(t), dtype=complex), t.shape + (2,))

    def f(self, t):
        return -self(t)[..., 1]


class FundamentalMatrix:
    """``W(t; λ)`` with ``W(a) = I``; evaluable at any ``t`` in ``[a, b]``."""

    def __init__(self, field: MatrixField, trajectory: Trajectory):
        self.field = field
        self.lam = field.lam
        self.trajectory = trajectory
        self.interval = field.interval

    def __call__(self, t):
        return self.trajectory.states(t)

    def inverse(self, t):
        return inv2(self(t))

    @property
    def at_end(self):
        return self.trajectory.w[-1]

    @property
    def columns(self):
        return self.trajectory.column(0), self.trajectory.column(1)

    def det(self, t):
        return det2(self(t))


def fundamental_matrix(A: MatrixField, cfg: IntegratorConfig = DEFAULT_CONFIG) -> FundamentalMatrix:
    """Matrix solution of ``W' = A W`` with ``W(a) = I``."""
    a, _ = A.interval
    traj = solve_cauchy(A, None, a, np.eye(2, dtype=complex), cfg)
    return FundamentalMatrix(A, traj)


def fundamental_matrix_distance(W_eps: FundamentalMatrix, W0: FundamentalMatrix, grid_size=201):
    """Max entrywise modulus of ``W_eps - W0`` over a uniform grid."""
    if not np.allclose(W_eps.interval, W0.interval, rtol=0, atol=1e-12):
        raise ValidationError("fundamental matrices on different intervals", "interval")
    t = np.linspace(*W0.interval, int(grid_size))
    return float(np.max(np.abs(W_eps(t) - W0(t))))
