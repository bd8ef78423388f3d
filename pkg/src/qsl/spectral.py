"""Characteristic determinant, eigenvalues, Green kernels and resolvents.

For a two-point condition ``α w(a) + β w(b) = 0`` and the fundamental
matrix ``W(t; λ)`` (``W(a) = I``) the characteristic function is
``Δ(λ) = det(α + β W(b; λ))``; its zeros are the eigenvalues. Away from
them the Green matrix is::

    G(t, s) =  W(t) D⁻¹ α W(s)⁻¹            s < t
    G(t, s) = -W(t) D⁻¹ β W(b) W(s)⁻¹       s > t,     D = α + β W(b)

and the scalar resolvent kernel is ``Γ = -G₁₂``.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, NamedTuple

import numpy as np
from scipy import optimize

from ._numerics import composite_nodes, det2, expm2, inv2, refine_mesh, spectral_norm2
from .boundary import CanonicalK, TwoPointBC, canonical_to_two_point
from .coefficients import Coefficients, l1_norm, ratios
from .errors import EigenvalueCollision, NumericalError, ValidationError
from .ode_core import DEFAULT_CONFIG, FundamentalMatrix, IntegratorConfig, fundamental_matrix
from .ode_core import solve_cauchy
from .quasi_system import scalar_rhs_to_system, system_matrix

__all__ = [
    "fundamental_for",
    "characteristic_determinant",
    "CharacteristicFunction",
    "Eigenvalue",
    "EigenvalueReport",
    "eigenvalues",
    "GreenMatrix",
    "GreenKernel",
    "ResolventSolution",
    "green_matrix",
    "green_function",
    "resolvent_apply",
    "generalized_resolvent_apply",
]

ROOT_TOL = 1e-9
DEGENERACY_TOL = 1e-12
MULTIPLE_TOL = 1e-6


@lru_cache(maxsize=8192)
def _fundamental_cached(c: Coefficients, lam: complex, cfg: IntegratorConfig) -> FundamentalMatrix:
    return fundamental_matrix(system_matrix(ratios(c), lam), cfg)


def fundamental_for(c: Coefficients, lam, cfg: IntegratorConfig | None = None) -> FundamentalMatrix:
    """Fundamental matrix of the coefficient problem at ``λ`` (memoized)."""
    return _fundamental_cached(c, complex(lam), cfg or DEFAULT_CONFIG)


def _as_bc(bc) -> TwoPointBC:
    if isinstance(bc, TwoPointBC):
        return bc
    if isinstance(bc, CanonicalK):
        return canonical_to_two_point(bc)
    raise ValidationError(f"expected TwoPointBC or CanonicalK, got {type(bc).__name__}", "boundary")


def _require_real(c: Coefficients, what):
    if not c.is_real:
        raise ValidationError(f"{what} needs real-valued p and Q", "coefficients")


def characteristic_determinant(bc, c: Coefficients, lam, cfg=None) -> complex:
    """``det(α + β W(b; λ))``."""
    bc = _as_bc(bc)
    Wb = fundamental_for(c, lam, cfg).at_end
    return complex(det2(bc.alpha + bc.beta @ Wb))


def _constant_cells(c: Coefficients):
    """``(length, p, Q)`` per mesh cell, or ``None`` if some cell is not constant."""
    cells = []
    for lo, hi in zip(c.mesh[:-1], c.mesh[1:]):
        p_rule, q_rule = c.rules_on(lo, hi)
        pv, qv = p_rule.constant_on(lo, hi), q_rule.constant_on(lo, hi)
        if pv is None or qv is None or pv == 0:
            return None
        cells.append((hi - lo, complex(pv), complex(qv)))
    return cells


class CharacteristicFunction:
    """``λ -> Δ(λ)`` for a fixed problem; fundamental matrices are memoized."""

    def __init__(self, bc, c: Coefficients, cfg=None):
        self.bc = _as_bc(bc)
        self.coefficients = c
        self.cfg = cfg or DEFAULT_CONFIG
        self._cells = _constant_cells(c) if self.cfg.exact_constant_segments else None

    def __call__(self, lam):
        lam_arr = np.asarray(lam, dtype=complex)
        if lam_arr.ndim == 0:
            return characteristic_determinant(self.bc, self.coefficients, complex(lam_arr), self.cfg)
        if self._cells is not None:
            # piecewise-constant problem: W(b) is a product of closed-form exponentials
            Wb = np.broadcast_to(np.eye(2, dtype=complex), lam_arr.shape + (2, 2))
            for length, pv, qv in self._cells:
                A = np.empty(lam_arr.shape + (2, 2), dtype=complex)
                A[..., 0, 0], A[..., 0, 1] = qv / pv, 1 / pv
                A[..., 1, 0], A[..., 1, 1] = -qv * qv / pv - lam_arr, -qv / pv
                Wb = expm2(A * length) @ Wb
            return det2(self.bc.alpha + self.bc.beta @ Wb)
        out = np.empty(lam_arr.shape, dtype=complex)
        for idx, z in np.ndenumerate(lam_arr):
            out[idx] = characteristic_determinant(self.bc, self.coefficients, complex(z), self.cfg)
        return out

    def derivative(self, lam, h=None):
        lam = complex(lam)
        h = 1e-6 * (1 + abs(lam)) if h is None else h
        return (self(lam + h) - self(lam - h)) / (2 * h)


# --------------------------------------------------------------------------
# Eigenvalues


class Eigenvalue(NamedTuple):
    value: complex
    possibly_multiple: bool
    residual: float
    multiplicity: int = 1


@dataclass
class EigenvalueReport:
    """Zeros of ``Δ`` found in a window.

    ``expected_count`` is the argument-principle count (complex windows
    only); ``warnings`` lists suspected misses and boundary contacts.
    """

    entries: list
    window: tuple
    step: float
    mode: str
    expected_count: int | None = None
    warnings: list = field(default_factory=list)

    @property
    def values(self) -> np.ndarray:
        return np.array([e.value for e in self.entries], dtype=complex)

    @property
    def count(self) -> int:
        return sum(e.multiplicity for e in self.entries)

    @property
    def complete(self) -> bool:
        return self.expected_count is None or self.expected_count == self.count

    def to_csv(self, fmt=None) -> str:
        fmt = fmt or (lambda x: format(float(x), ".15g"))
        buf = io.StringIO()
        buf.write("lambda_re,lambda_im,residual,possibly_multiple\n")
        for e in self.entries:
            buf.write(
                f"{fmt(e.value.real)},{fmt(e.value.imag)},{fmt(e.residual)},"
                f"{str(bool(e.possibly_multiple)).lower()}\n"
            )
        return buf.getvalue()


def _default_step(c: Coefficients, re_lo, re_hi):
    """``0.05 * width / count`` with a Weyl-type count estimate."""
    width = re_hi - re_lo
    try:
        root_mass = l1_norm(lambda t: np.abs(1.0 / c.p(t)) ** 0.5, c.interval)
    except NumericalError:
        root_mass = c.length
    count = 1.0 + root_mass * math.sqrt(max(abs(re_lo), abs(re_hi))) / math.pi
    return min(0.05 * width / count, width / 200.0)


def _parse_window(window):
    w = tuple(window)
    if len(w) == 2 and all(isinstance(x, (int, float, np.floating, np.integer)) for x in w):
        lo, hi = float(w[0]), float(w[1])
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise ValidationError("window must be a bounded interval lo < hi", "window")
        return "real", (lo, hi)
    if len(w) == 2 and all(len(x) == 2 for x in w):
        (a, b), (c, d) = w
        a, b, c, d = (float(x) for x in (a, b, c, d))
        if not (all(math.isfinite(x) for x in (a, b, c, d)) and a < b and c < d):
            raise ValidationError("window must be a bounded rectangle", "window")
        return "complex", ((a, b), (c, d))
    raise ValidationError("window is (lo, hi) or ((re_lo, re_hi), (im_lo, im_hi))", "window")


def eigenvalues(bc, c: Coefficients, window, *, step=None, cfg=None, root_tol=ROOT_TOL):
    """Locate all zeros of the characteristic determinant in ``window``.

    Real windows ``(lo, hi)`` are scanned on a uniform grid; sign changes of
    the phase-normalized determinant are polished with Brent's method, and
    local dips of ``|Δ|`` without a sign change are minimized to catch
    double roots. Complex rectangles ``((re_lo, re_hi), (im_lo, im_hi))``
    use grid minima of ``|Δ|`` as seeds for deflated Newton iterations,
    checked against the argument-principle count on the boundary.

    ``bc`` may be a :class:`TwoPointBC` or a :class:`CanonicalK` (the latter
    requires real coefficients).
    """
    if isinstance(bc, CanonicalK):
        _require_real(c, "a canonical K condition")
    fn = CharacteristicFunction(bc, c, cfg)
    mode, win = _parse_window(window)
    if mode == "real":
        lo, hi = win
        step = step or _default_step(c, lo, hi)
        return _real_roots(fn, lo, hi, step, root_tol)
    (a, b), (lo_im, hi_im) = win
    step = step or _default_step(c, a, b)
    return _complex_roots(fn, a, b, lo_im, hi_im, step, root_tol)


def _multiple_flag(fn, lam, scale):
    return abs(fn.derivative(lam)) / scale < MULTIPLE_TOL


def _real_roots(fn, lo, hi, step, root_tol):
    n = max(int(math.ceil((hi - lo) / step)), 2)
    grid = np.linspace(lo, hi, n + 1)
    vals = fn(grid)
    mags = np.abs(vals)
    scale = float(mags.max()) or 1.0
    theta = 0.5 * np.angle(np.sum(vals**2))
    rot = np.exp(-1j * theta)
    g = (rot * vals).real / scale
    tol = root_tol * max(1.0, float(mags[0]), float(mags[-1]))
    report = EigenvalueReport([], (lo, hi), float(grid[1] - grid[0]), "real")
    if mags[0] <= tol or mags[-1] <= tol:
        report.warnings.append("a zero of the determinant touches the window boundary")

    def gfun(x):
        return (rot * fn(complex(x))).real / scale

    found = []
    bracketed = np.zeros(len(grid), dtype=bool)
    for j in range(len(grid) - 1):
        if g[j] == 0.0 and 0 < j:
            root = float(grid[j])
        elif g[j] * g[j + 1] < 0:
            root = optimize.brentq(gfun, grid[j], grid[j + 1], xtol=1e-14, rtol=4 * np.finfo(float).eps)
        else:
            continue
        bracketed[j] = bracketed[j + 1] = True
        res = abs(fn(complex(root)))
        if res <= tol:
            found.append(Eigenvalue(complex(root), _multiple_flag(fn, root, scale), float(res)))
        else:
            report.warnings.append(f"rejected sign change near {root:.6g} (|Δ| = {res:.3g})")

    dip_threshold = 1e-3
    for j in range(1, len(grid) - 1):
        if not (mags[j] <= mags[j - 1] and mags[j] <= mags[j + 1]) or bracketed[j]:
            continue
        if bracketed[j - 1] or bracketed[j + 1]:
            continue
        opt = optimize.minimize_scalar(
            lambda x: abs(fn(complex(x))),
            bounds=(grid[j - 1], grid[j + 1]),
            method="bounded",
            options={"xatol": 1e-13 * max(1.0, abs(grid[j]))},
        )
        res = float(opt.fun)
        if res <= tol:
            if all(abs(e.value - opt.x) > 1e-6 * (1 + abs(opt.x)) for e in found):
                mult = _multiple_flag(fn, opt.x, scale)
                found.append(Eigenvalue(complex(opt.x), mult, res, 2 if mult else 1))
        elif res / scale < dip_threshold:
            report.warnings.append(
                f"suspected missed root near {opt.x:.6g}: |Δ| dips to {res:.3g} without a sign change"
            )
    report.entries = sorted(found, key=lambda e: e.value.real)
    return report


def _winding_number(fn, corners, base_step, max_rounds=16):
    pts = []
    for z0, z1 in zip(corners, corners[1:] + corners[:1]):
        n = max(8, int(math.ceil(abs(z1 - z0) / base_step)))
        pts.extend(z0 + (z1 - z0) * np.arange(n) / n)
    pts = np.array(pts, dtype=complex)
    vals = fn(pts)
    for _ in range(max_rounds):
        dphi = np.angle(np.roll(vals, -1) / vals)
        bad = np.nonzero(np.abs(dphi) > np.pi / 4)[0]
        if bad.size == 0:
            break
        mids = 0.5 * (pts[bad] + np.roll(pts, -1)[bad])
        # wrap-around midpoint of the closing edge
        mids[bad == len(pts) - 1] = 0.5 * (pts[-1] + pts[0])
        pts = np.insert(pts, bad + 1, mids)
        vals = np.insert(vals, bad + 1, fn(mids))
    total = float(np.sum(np.angle(np.roll(vals, -1) / vals)))
    return int(round(total / (2 * np.pi))), float(np.min(np.abs(vals))), float(np.max(np.abs(vals)))


def _newton(fn, z, roots, max_iter=60):
    """Deflated Newton iteration from ``z``; ``None`` if it fails to settle."""
    for _ in range(max_iter):
        f = fn(z)
        if f == 0:
            return z
        d = fn.derivative(z)
        denom = d / f - sum(1.0 / (z - r) for r in roots)
        if denom == 0 or not np.isfinite(denom):
            return None
        dz = 1.0 / denom
        z = z - dz
        if not np.isfinite(z):
            return None
        if abs(dz) <= 1e-13 * (1 + abs(z)):
            return z
    return None


def _polish(fn, z, iters=4):
    for _ in range(iters):
        f = fn(z)
        d = fn.derivative(z)
        if f == 0 or d == 0:
            break
        dz = f / d
        if abs(dz) > 1e-6 * (1 + abs(z)):
            break
        z = z - dz
        if abs(dz) <= 1e-15 * (1 + abs(z)):
            break
    return z


def _complex_roots(fn, re_lo, re_hi, im_lo, im_hi, step, root_tol):
    corners = [
        complex(re_lo, im_lo),
        complex(re_hi, im_lo),
        complex(re_hi, im_hi),
        complex(re_lo, im_hi),
    ]
    expected, bmin, bmax = _winding_number(fn, corners, step * 2)
    report = EigenvalueReport([], ((re_lo, re_hi), (im_lo, im_hi)), step, "complex", expected)
    tol = root_tol * max(1.0, bmax)
    if bmin <= 1e3 * tol:
        report.warnings.append("a zero of the determinant lies on or near the window boundary")

    def inside(z, margin=0.0):
        return (re_lo - margin <= z.real <= re_hi + margin) and (im_lo - margin <= z.imag <= im_hi + margin)

    roots = []  # with multiplicity
    entries = {}
    scale = max(bmax, 1e-300)
    im_step = min(4 * step, (im_hi - im_lo) / 4)
    for refinement in range(3):
        nx = int(math.ceil((re_hi - re_lo) / step * 2**refinement)) + 1
        ny = int(math.ceil((im_hi - im_lo) / im_step * 2**refinement)) + 1
        X, Y = np.meshgrid(np.linspace(re_lo, re_hi, nx), np.linspace(im_lo, im_hi, ny))
        Z = X + 1j * Y
        M = np.abs(fn(Z))
        padded = np.pad(M, 1, constant_values=np.inf)
        is_min = np.ones_like(M, dtype=bool)
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                if dy or dx:
                    is_min &= M <= padded[1 + dy : 1 + dy + ny, 1 + dx : 1 + dx + nx]
        seeds = Z[is_min]
        seeds = seeds[np.argsort(M[is_min])]
        for seed in seeds:
            if len(roots) >= expected:
                break
            z = _newton(fn, complex(seed), roots)
            if z is None or not inside(z, margin=1e-9 * (1 + abs(z))):
                continue
            z = _polish(fn, z)
            res = abs(fn(z))
            if res > tol:
                continue
            dup = next((k for k in entries if abs(k - z) <= 1e-6 * (1 + abs(z))), None)
            if dup is not None:
                e = entries[dup]
                entries[dup] = e._replace(possibly_multiple=True, multiplicity=e.multiplicity + 1)
                roots.append(dup)
            else:
                entries[z] = Eigenvalue(z, _multiple_flag(fn, z, scale), float(res))
                roots.append(z)
        if len(roots) >= expected:
            break
    if len(roots) != expected:
        report.warnings.append(
            f"argument principle counts {expected} zeros but {len(roots)} were located"
        )
    report.entries = sorted(entries.values(), key=lambda e: (e.value.real, e.value.imag))
    return report


def _nearest_eigenvalue(fn, lam):
    z = _newton(fn, complex(lam), [], max_iter=40)
    return z


# --------------------------------------------------------------------------
# Green matrix / kernel


class GreenMatrix:
    """Variation-of-constants kernel of ``w' = A_λ w + φ``, ``α w(a) + β w(b) = 0``.

    ``lower`` and ``upper`` are the middle factors in ``W(t) M W(s)^{-1}``
    for the basis with ``W(a) = I``. That product loses about
    ``e^{κ(t + s)}`` in accuracy when solutions grow like ``e^{κ t}``, so
    pointwise evaluation uses multiple shooting instead: the interval is cut
    into cells with a fundamental matrix normalized at each cell midpoint,
    and for every ``s`` a small block system couples the cells through
    continuity, the boundary condition and the unit jump at ``t = s``.
    """

    def __init__(self, bc: TwoPointBC, c: Coefficients, lam, W: FundamentalMatrix, D, cfg=None):
        self.bc = bc
        self.coefficients = c
        self.lam = complex(lam)
        self.W = W
        self.D = D
        self.cfg = cfg or DEFAULT_CONFIG
        self.determinant = complex(det2(D))
        Dinv = inv2(D)
        self.lower = Dinv @ bc.alpha  # s < t
        self.upper = -Dinv @ bc.beta @ W.at_end  # s > t
        a, b = self.interval
        Wb = W.at_end
        growth = math.log(max(np.abs(Wb).max(), np.abs(inv2(Wb)).max(), 1.0))
        n = int(min(64, max(1, math.ceil(growth / 2))))
        self.edges = np.linspace(a, b, n + 1)
        self._bases = None

    @property
    def interval(self):
        return self.coefficients.interval

    def _cell_bases(self):
        if self._bases is None:
            if len(self.edges) == 2:
                self._bases = [self.W]
            else:
                A = self.W.field
                mids = 0.5 * (self.edges[:-1] + self.edges[1:])
                eye = np.eye(2, dtype=complex)
                self._bases = [FundamentalMatrix(A, solve_cauchy(A, None, m, eye, self.cfg)) for m in mids]
        return self._bases

    def _cell(self, x):
        n = len(self.edges) - 1
        return np.clip(np.searchsorted(self.edges, x, side="right") - 1, 0, n - 1)

    def _coefficients_for(self, s):
        """Block coefficients ``C`` (``(len(s), n + 1, 2, 2)``) for each source point."""
        F = self._cell_bases()
        n = len(F)
        e = self.edges
        js = self._cell(s)
        m = len(s)
        size = 2 * (n + 1)
        L = np.zeros((m, size, size), dtype=complex)
        R = np.zeros((m, size, 2), dtype=complex)
        left = np.arange(n)[None, :] + (np.arange(n)[None, :] > js[:, None])
        right = np.arange(n)[None, :] + (np.arange(n)[None, :] >= js[:, None])
        rows = np.arange(m)

        def put(row, col_blocks, M):
            for r in range(2):
                for q in range(2):
                    L[rows, row + r, 2 * col_blocks + q] = M[..., r, q]

        put(0, left[:, 0], np.broadcast_to(self.bc.alpha @ F[0](e[0]), (m, 2, 2)))
        put(0, right[:, -1], np.broadcast_to(self.bc.beta @ F[-1](e[-1]), (m, 2, 2)))
        for k in range(n - 1):
            row = 2 + 2 * k
            put(row, right[:, k], np.broadcast_to(F[k](e[k + 1]), (m, 2, 2)))
            put(row, left[:, k + 1], np.broadcast_to(-F[k + 1](e[k + 1]), (m, 2, 2)))
        Fs = np.empty((m, 2, 2), dtype=complex)
        for k in np.unique(js):
            sel = js == k
            Fs[sel] = F[k](s[sel])
        put(size - 2, js + 1, Fs)
        put(size - 2, js, -Fs)
        R[:, size - 2 :, :] = np.eye(2)
        C = np.linalg.solve(L, R)
        return C.reshape(m, n + 1, 2, 2)

    def __call__(self, t, s):
        t, s = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(s, dtype=float))
        shape = t.shape
        t, s = t.ravel(), s.ravel()
        s_unique, inv = np.unique(s, return_inverse=True)
        C = self._coefficients_for(s_unique)[inv]
        kt, js = self._cell(t), self._cell(s)
        # block index of the piece holding t: cells past the source cell shift by one,
        # and inside it the "+" piece covers t > s
        block = kt + (kt > js) + ((kt == js) & (t > s))
        coef = C[np.arange(len(t)), block]
        out = np.empty((len(t), 2, 2), dtype=complex)
        F = self._cell_bases()
        for k in np.unique(kt):
            sel = kt == k
            out[sel] = F[k](t[sel]) @ coef[sel]
        return out.reshape(shape + (2, 2))


def green_matrix(bc, c: Coefficients, lam, cfg=None) -> GreenMatrix:
    """Green matrix of the first-order boundary problem at ``λ``.

    Raises
    ------
    EigenvalueCollision
        When ``|det(α + β W(b))|`` is below ``1e-12`` times its natural
        scale, i.e. ``λ`` is numerically an eigenvalue.
    """
    bc = _as_bc(bc)
    W = fundamental_for(c, lam, cfg)
    BW = bc.beta @ W.at_end
    D = bc.alpha + BW
    scale = max(1.0, float(np.linalg.norm(bc.alpha) + np.linalg.norm(BW))) ** 2
    if abs(det2(D)) <= DEGENERACY_TOL * scale:
        fn = CharacteristicFunction(bc, c, cfg)
        near = _nearest_eigenvalue(fn, lam)
        hint = f"; nearest eigenvalue ≈ {near:.10g}" if near is not None else ""
        raise EigenvalueCollision(
            f"λ = {complex(lam):.10g} is (numerically) an eigenvalue: |Δ(λ)| = {abs(det2(D)):.3g}{hint}",
            near,
        )
    return GreenMatrix(bc, c, lam, W, D, cfg)


class GreenKernel:
    """Scalar kernel ``Γ(t, s) = -G₁₂(t, s)`` of the resolvent."""

    def __init__(self, G: GreenMatrix):
        self.G = G
        self.lam = G.lam
        self.interval = G.interval
        self.coefficients = G.coefficients
        self._snapshots = {}

    def __call__(self, t, s):
        return -self.G(t, s)[..., 0, 1]

    def grid(self, n=201):
        """``(t, s, values)`` with ``values[i, j] = Γ(t_i, s_j)`` on a uniform grid."""
        n = int(n)
        if n not in self._snapshots:
            x = np.linspace(*self.interval, n)
            T, S = np.meshgrid(x, x, indexing="ij")
            values = -self.G(T, S)[..., 0, 1]
            self._snapshots[n] = (x, x.copy(), values)
        return self._snapshots[n]

    def symmetry_defect(self, n=51):
        """``sup |Γ(t, s) - conj Γ(s, t)|`` on an ``n x n`` grid."""
        _, _, v = self.grid(n)
        return float(np.max(np.abs(v - v.T.conj())))

    def sup_norm(self, n=201):
        return float(np.max(np.abs(self.grid(n)[2])))


def green_function(G: GreenMatrix) -> GreenKernel:
    return GreenKernel(G)


class ResolventSolution:
    """``y = ∫ Γ(·, s) f(s) ds`` as an evaluable function.

    Evaluation inserts the query points into the quadrature mesh so the
    kink of the kernel on the diagonal always sits on a cell boundary;
    each cell gets 10-point Gauss-Legendre quadrature.
    """

    def __init__(self, kernel: GreenKernel, f, n_base=64):
        self.kernel = kernel
        self.f = _vectorize(f)
        self.lam = kernel.lam
        self.n_base = n_base
        pts = [kernel.coefficients.mesh]
        bp = getattr(f, "breakpoints", None)
        if bp is not None:
            pts.append(np.asarray(bp, dtype=float))
        self.breakpoints = np.unique(np.concatenate(pts))

    @property
    def interval(self):
        return self.kernel.interval

    def quasi(self, t):
        """``(y(t), D¹y(t))`` stacked in the last axis."""
        t = np.asarray(t, dtype=float)
        flat = t.ravel()
        a, b = self.interval
        if flat.size and (flat.min() < a - 1e-12 or flat.max() > b + 1e-12):
            raise ValidationError("evaluation point outside the interval", "t")
        G = self.kernel.G
        mesh = refine_mesh(np.concatenate([self.breakpoints, flat]), self.interval, self.n_base)
        nodes, weights = composite_nodes(mesh)
        fv = self.f(nodes)
        if len(G.edges) > 2:
            # growing solutions: integrate the stable pointwise Green matrix directly
            x = np.clip(flat, a, b)
            col = G(x[:, None], nodes.ravel()[None, :])[..., :, 1]  # (m, N, 2)
            wf = (weights * fv).ravel()
            w = -np.einsum("mni,n->mi", col, wf)
            return w.reshape(t.shape + (2,))
        Winv = G.W.inverse(nodes)  # (cells, n, 2, 2)
        # W(s)^{-1} φ(s) with φ = (0, -f)
        integrand = -Winv[..., :, 1] * fv[..., None]
        cell = np.sum(weights[..., None] * integrand, axis=1)
        cum = np.concatenate([np.zeros((1, 2), dtype=complex), np.cumsum(cell, axis=0)])
        k = np.searchsorted(mesh, np.clip(flat, a, b))
        k = np.minimum(k, len(mesh) - 1)
        J_a = cum[k]
        J_b = cum[-1] - J_a
        Wt = G.W(np.clip(flat, a, b))
        inner = J_a @ G.lower.T + J_b @ G.upper.T
        w = np.einsum("nij,nj->ni", Wt, inner)
        return w.reshape(t.shape + (2,))

    def __call__(self, t):
        return self.quasi(t)[..., 0]

    def residual(self, n_samples=41, cfg=None):
        """Self-check against the Cauchy problem started from ``w(a)``.

        Returns the max deviation of ``w`` along the interval (relative to
        ``max(1, sup|w|)``) and the boundary-condition residual.
        """
        a, b = self.interval
        ts = np.linspace(a, b, n_samples)
        w = self.quasi(ts)
        A = self.kernel.G.W.field
        traj = solve_cauchy(A, scalar_rhs_to_system(self.f), a, w[0], cfg or DEFAULT_CONFIG)
        dev = np.max(np.abs(traj(ts) - w)) / max(1.0, float(np.max(np.abs(w))))
        bc = self.kernel.G.bc
        bc_res = float(np.max(np.abs(bc.residual(w[0], w[-1]))))
        return float(dev), bc_res


def _vectorize(f):
    if isinstance(f, (int, float, complex)):
        value = complex(f)
        return lambda t: np.full(np.shape(t), value, dtype=complex)

    def wrapped(t):
        t = np.asarray(t, dtype=float)
        return np.broadcast_to(np.asarray(f(t), dtype=complex), t.shape)

    return wrapped


def resolvent_apply(kernel: GreenKernel, f, n_base=64) -> ResolventSolution:
    """Apply the resolvent: the solution of ``l[y] - λ y = f`` with the kernel's condition."""
    return ResolventSolution(kernel, f, n_base)


def generalized_resolvent_apply(
    Kfun, lam, h, c: Coefficients, cfg=None, tol=1e-9, n_base=64
) -> ResolventSolution:
    """Solve ``l[y] = λ y + h`` with ``(K(λ) - I) Γ1 y + i (K(λ) + I) Γ2 y = 0``.

    ``Kfun`` is a callable ``λ -> 2x2`` (or a fixed matrix). Only
    ``‖K(λ)‖ <= 1`` is checked; analyticity in the lower half-plane is the
    caller's responsibility.

    Raises
    ------
    ValidationError
        ``Im λ >= 0``, complex coefficients or a non-contractive ``K(λ)``.
    NumericalError
        A degenerate determinant, which cannot happen for exact data and so
        signals integration inaccuracy.
    """
    lam = complex(lam)
    if not lam.imag < 0:
        raise ValidationError("generalized resolvents are evaluated at Im λ < 0", "lambda")
    _require_real(c, "a generalized resolvent")
    K = np.asarray(Kfun(lam) if callable(Kfun) else Kfun, dtype=complex)
    norm = float(spectral_norm2(K))
    if norm > 1 + tol:
        raise ValidationError(f"K(λ) is not a contraction (‖K‖ = {norm:.6g})", "K")
    bc = canonical_to_two_point(K)
    try:
        G = green_matrix(bc, c, lam, cfg)
    except EigenvalueCollision as exc:
        raise NumericalError(
            f"degenerate determinant for a contractive K at Im λ < 0 (integration inaccuracy?): {exc}"
        ) from None
    return resolvent_apply(green_function(G), h, n_base)
