"""Singular coefficients ``p`` and ``Q`` of the expression ``-(p y')' + Q' y``.

The potential is never handled as a distribution: only its primitive ``Q``
is stored, so a delta interaction of strength ``h`` at ``t0`` is just a jump
of height ``h`` in ``Q``. Coefficients are piecewise analytic with an
explicit breakpoint list, which the integrator uses as hard step
boundaries.

Everything here is immutable. Rules and piecewise functions are frozen
dataclasses and hash by value, so coefficient objects can key caches.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import integrate

from .errors import NumericalError, ValidationError

__all__ = [
    "Constant",
    "Polynomial",
    "ScaledPower",
    "MollifiedStep",
    "Segment",
    "PiecewiseFunction",
    "Coefficients",
    "RatioSet",
    "CoefficientFamily",
    "build_coefficients",
    "ratios",
    "l1_distance",
    "l1_norm",
    "mollify",
    "mollified_family",
    "adjoint_coefficients",
    "parse_complex",
]

QUAD_EPSABS = 1e-10
QUAD_EPSREL = 1e-10
QUAD_LIMIT = 10_000


def parse_complex(value, field_name=None) -> complex:
    """Read a JSON scalar: a plain number or a ``[re, im]`` pair."""
    if isinstance(value, bool):
        raise ValidationError("expected a number", field_name)
    if isinstance(value, (int, float, complex)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        try:
            return complex(float(value[0]), float(value[1]))
        except (TypeError, ValueError):
            pass
    raise ValidationError(f"expected a number or [re, im] pair, got {value!r}", field_name)


def _complex_json(z: complex):
    z = complex(z)
    return z.real if z.imag == 0 else [z.real, z.imag]


# --------------------------------------------------------------------------
# Segment rules


@dataclass(frozen=True)
class Constant:
    value: complex

    kind = "constant"

    def __call__(self, t):
        return np.full(np.shape(t), self.value, dtype=complex)

    def conjugate(self):
        return Constant(complex(self.value).conjugate())

    def kinks(self):
        return ()

    def constant_on(self, lo, hi):
        return complex(self.value)

    def to_json(self):
        return {"kind": self.kind, "value": _complex_json(self.value)}


@dataclass(frozen=True)
class Polynomial:
    """``sum_k coeffs[k] * (t - origin)**k``."""

    coeffs: tuple
    origin: float = 0.0

    kind = "polynomial"

    def __post_init__(self):
        if len(self.coeffs) == 0:
            raise ValidationError("polynomial needs at least one coefficient", "rule.coeffs")
        object.__setattr__(self, "coeffs", tuple(complex(c) for c in self.coeffs))

    def __call__(self, t):
        x = np.asarray(t, dtype=float) - self.origin
        return np.polynomial.polynomial.polyval(x, np.asarray(self.coeffs)).astype(complex)

    def conjugate(self):
        return Polynomial(tuple(c.conjugate() for c in self.coeffs), self.origin)

    def kinks(self):
        return ()

    def constant_on(self, lo, hi):
        if all(c == 0 for c in self.coeffs[1:]):
            return self.coeffs[0]
        return None

    def to_json(self):
        out = {"kind": self.kind, "coeffs": [_complex_json(c) for c in self.coeffs]}
        if self.origin:
            out["origin"] = self.origin
        return out


@dataclass(frozen=True)
class ScaledPower:
    """``c * |t - t0|**gamma`` with ``gamma > -1``.

    The centre must not lie strictly inside the segment carrying the rule, so
    the only possible singularity sits at a segment endpoint.
    """

    c: complex
    t0: float
    gamma: float

    kind = "scaled-power"

    def __post_init__(self):
        if not self.gamma > -1:
            raise ValidationError(
                f"exponent gamma={self.gamma} is not integrable (need gamma > -1)", "rule.gamma"
            )

    def __call__(self, t):
        x = np.abs(np.asarray(t, dtype=float) - self.t0)
        with np.errstate(divide="ignore"):
            return (self.c * x**self.gamma).astype(complex)

    def conjugate(self):
        return ScaledPower(complex(self.c).conjugate(), self.t0, self.gamma)

    def kinks(self):
        return ()

    def constant_on(self, lo, hi):
        return complex(self.c) if self.gamma == 0 else None

    def to_json(self):
        return {"kind": self.kind, "c": _complex_json(self.c), "t0": self.t0, "gamma": self.gamma}


@dataclass(frozen=True)
class MollifiedStep:
    """A step of height ``height`` at ``t0`` smeared into a linear ramp.

    The ramp runs over ``[t0 - width/2, t0 + width/2]``; the value is
    ``base`` to the left and ``base + height`` to the right.
    """

    t0: float
    height: complex
    width: float
    base: complex = 0.0

    kind = "mollified-step"

    def __post_init__(self):
        if not self.width > 0:
            raise ValidationError("ramp width must be positive", "rule.width")

    def __call__(self, t):
        x = (np.asarray(t, dtype=float) - self.t0) / self.width + 0.5
        return self.base + self.height * np.clip(x, 0.0, 1.0).astype(complex)

    def conjugate(self):
        return MollifiedStep(
            self.t0, complex(self.height).conjugate(), self.width, complex(self.base).conjugate()
        )

    def kinks(self):
        return (self.t0 - self.width / 2, self.t0 + self.width / 2)

    def constant_on(self, lo, hi):
        left, right = self.kinks()
        if hi <= left:
            return complex(self.base)
        if lo >= right:
            return complex(self.base + self.height)
        return None

    def to_json(self):
        out = {
            "kind": self.kind,
            "t0": self.t0,
            "height": _complex_json(self.height),
            "width": self.width,
        }
        if self.base:
            out["base"] = _complex_json(self.base)
        return out


Rule = Constant | Polynomial | ScaledPower | MollifiedStep


def rule_from_json(data, field_name="rule"):
    if not isinstance(data, dict) or "kind" not in data:
        raise ValidationError("rule must be an object with a 'kind'", field_name)
    kind = data["kind"]
    try:
        if kind == "constant":
            return Constant(parse_complex(data["value"], f"{field_name}.value"))
        if kind == "polynomial":
            coeffs = [parse_complex(c, f"{field_name}.coeffs") for c in data["coeffs"]]
            return Polynomial(tuple(coeffs), float(data.get("origin", 0.0)))
        if kind == "scaled-power":
            return ScaledPower(
                parse_complex(data["c"], f"{field_name}.c"), float(data["t0"]), float(data["gamma"])
            )
        if kind == "mollified-step":
            return MollifiedStep(
                float(data["t0"]),
                parse_complex(data["height"], f"{field_name}.height"),
                float(data["width"]),
                parse_complex(data.get("base", 0.0), f"{field_name}.base"),
            )
    except KeyError as exc:
        raise ValidationError(f"missing parameter {exc.args[0]!r}", field_name) from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(str(exc), field_name) from None
    raise ValidationError(f"unknown rule kind {kind!r}", field_name)


# --------------------------------------------------------------------------
# Piecewise functions


@dataclass(frozen=True)
class Segment:
    lo: float
    hi: float
    rule: Rule


@dataclass(frozen=True)
class PiecewiseFunction:
    """Complex function on ``[a, b]`` assembled from analytic segments.

    Interior breakpoints take the value of the segment to their right; the
    value at ``b`` is the left limit of the last segment.

    Parameters
    ----------
    interval : (float, float)
        Endpoints ``a < b``.
    segments : sequence of Segment
        Ordered, contiguous, covering ``[a, b]`` exactly.
    """

    interval: tuple
    segments: tuple
    _starts: np.ndarray = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        a, b = (float(x) for x in self.interval)
        if not (math.isfinite(a) and math.isfinite(b)) or not a < b:
            raise ValidationError(f"empty or invalid interval [{a}, {b}]", "interval")
        segs = tuple(self.segments)
        if not segs:
            raise ValidationError("no segments", "segments")
        if not math.isclose(segs[0].lo, a, abs_tol=1e-14) or not math.isclose(
            segs[-1].hi, b, abs_tol=1e-14
        ):
            raise ValidationError("segments do not cover the interval", "segments")
        for k, seg in enumerate(segs):
            if not seg.lo < seg.hi:
                raise ValidationError(f"segment {k} has empty range", f"segments[{k}].range")
            if k and not math.isclose(segs[k - 1].hi, seg.lo, abs_tol=1e-14):
                raise ValidationError(
                    f"gap or overlap between segments {k - 1} and {k}", f"segments[{k}].range"
                )
            if isinstance(seg.rule, ScaledPower) and seg.lo < seg.rule.t0 < seg.hi:
                raise ValidationError(
                    "scaled-power centre must not lie inside its segment", f"segments[{k}].rule.t0"
                )
        object.__setattr__(self, "interval", (a, b))
        object.__setattr__(self, "segments", segs)
        object.__setattr__(self, "_starts", np.array([s.lo for s in segs]))

    # construction helpers
    @classmethod
    def constant(cls, value, interval):
        return cls(interval, (Segment(interval[0], interval[1], Constant(complex(value))),))

    @classmethod
    def from_rule(cls, rule, interval):
        return cls(interval, (Segment(interval[0], interval[1], rule),))

    @classmethod
    def step(cls, t0, height, interval, base=0.0):
        """``base`` left of ``t0`` and ``base + height`` from ``t0`` on."""
        a, b = interval
        if not a < t0 < b:
            raise ValidationError("step location must be interior", "t0")
        return cls(
            interval,
            (
                Segment(a, t0, Constant(complex(base))),
                Segment(t0, b, Constant(complex(base + height))),
            ),
        )

    @classmethod
    def from_json(cls, data, interval, field_name="segments"):
        if not isinstance(data, list) or not data:
            raise ValidationError("expected a non-empty list of segments", field_name)
        segs = []
        for k, item in enumerate(data):
            name = f"{field_name}[{k}]"
            if not isinstance(item, dict) or "range" not in item or "rule" not in item:
                raise ValidationError("segment needs 'range' and 'rule'", name)
            rng = item["range"]
            if not isinstance(rng, list) or len(rng) != 2:
                raise ValidationError("range must be [lo, hi]", f"{name}.range")
            segs.append(
                Segment(float(rng[0]), float(rng[1]), rule_from_json(item["rule"], f"{name}.rule"))
            )
        try:
            return cls(tuple(interval), tuple(segs))
        except ValidationError as exc:
            if exc.field and not exc.field.startswith(field_name):
                raise ValidationError(str(exc).split(": ", 1)[-1], f"{field_name}") from None
            raise

    def to_json(self):
        return [{"range": [s.lo, s.hi], "rule": s.rule.to_json()} for s in self.segments]

    # evaluation
    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if len(self.segments) == 1:
            return self.segments[0].rule(t)
        idx = np.clip(np.searchsorted(self._starts, t, side="right") - 1, 0, len(self.segments) - 1)
        out = np.empty(t.shape, dtype=complex)
        for k, seg in enumerate(self.segments):
            mask = idx == k
            if mask.any():
                out[mask] = seg.rule(t[mask])
        return out

    def rule_at(self, t: float) -> Rule:
        """Rule in force at ``t`` (right-continuous convention)."""
        idx = int(np.searchsorted(self._starts, t, side="right")) - 1
        return self.segments[min(max(idx, 0), len(self.segments) - 1)].rule

    @property
    def breakpoints(self) -> np.ndarray:
        """Segment boundaries plus interior kinks of the rules, endpoints included."""
        pts = {self.interval[0], self.interval[1]}
        for seg in self.segments:
            pts.update((seg.lo, seg.hi))
            pts.update(x for x in seg.rule.kinks() if seg.lo < x < seg.hi)
        return np.array(sorted(pts))

    def conjugate(self) -> PiecewiseFunction:
        return PiecewiseFunction(
            self.interval, tuple(Segment(s.lo, s.hi, s.rule.conjugate()) for s in self.segments)
        )

    @property
    def is_real(self) -> bool:
        return self == self.conjugate()

    @property
    def is_piecewise_constant(self) -> bool:
        return all(isinstance(s.rule, Constant) for s in self.segments)


# --------------------------------------------------------------------------
# Quadrature


def _mesh_of(*funcs, interval, points=()):
    a, b = interval
    pts = {a, b}
    for f in funcs:
        bp = getattr(f, "breakpoints", None)
        if bp is not None:
            pts.update(float(x) for x in bp)
    pts.update(float(x) for x in points)
    return np.array(sorted(x for x in pts if a <= x <= b))


def _quad_cells(integrand, mesh, epsabs, epsrel, limit, what):
    total = 0.0
    err_total = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        for lo, hi in zip(mesh[:-1], mesh[1:]):
            try:
                val, err = integrate.quad(
                    integrand, lo, hi, epsabs=epsabs, epsrel=epsrel, limit=limit
                )
            except integrate.IntegrationWarning as exc:
                raise NumericalError(f"quadrature of {what} failed on [{lo}, {hi}]: {exc}") from None
            if not math.isfinite(val):
                raise NumericalError(f"{what} is not finite on [{lo}, {hi}]")
            total += val
            err_total += err
    return total, err_total


def l1_norm(f, interval, *, points=(), epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=QUAD_LIMIT):
    """``∫_a^b |f|`` by adaptive Gauss-Kronrod quadrature split at breakpoints."""
    mesh = _mesh_of(f, interval=interval, points=points)
    val, _ = _quad_cells(
        lambda x: float(abs(f(x))), mesh, epsabs, epsrel, limit, "|f|"
    )
    return val


def l1_distance(
    f,
    g,
    interval,
    *,
    points=(),
    epsabs=QUAD_EPSABS,
    epsrel=QUAD_EPSREL,
    limit=QUAD_LIMIT,
    full_output=False,
):
    """L1 distance ``∫_a^b |f - g| dt``.

    Breakpoints advertised by ``f`` and ``g`` (attribute ``breakpoints``)
    and any extra ``points`` split the integration range, so jumps and
    kinks never sit inside a quadrature cell.

    Returns
    -------
    float, or (float, float) with the summed error estimate when
    ``full_output`` is true.

    Raises
    ------
    NumericalError
        If QUADPACK reports non-convergence within ``limit`` subintervals.
    """
    mesh = _mesh_of(f, g, interval=interval, points=points)
    val, err = _quad_cells(
        lambda x: float(abs(f(x) - g(x))), mesh, epsabs, epsrel, limit, "|f - g|"
    )
    return (val, err) if full_output else val


# --------------------------------------------------------------------------
# Coefficients


class _MeshFunction:
    """Vectorized pointwise expression that carries a breakpoint list."""

    def __init__(self, fn, breakpoints, name=""):
        self._fn = fn
        self.breakpoints = breakpoints
        self.name = name

    def __call__(self, t):
        with np.errstate(divide="ignore", invalid="ignore"):
            return self._fn(np.asarray(t, dtype=float))

    def __repr__(self):
        return f"<{self.name}>"


@dataclass(frozen=True)
class RatioSet:
    """``r1 = 1/p``, ``r2 = Q/p``, ``r3 = Q**2/p`` on the shared mesh."""

    r1: Callable
    r2: Callable
    r3: Callable
    mesh: np.ndarray = field(compare=False, hash=False)
    coefficients: "Coefficients" = field(compare=False, hash=False, repr=False)

    @property
    def interval(self):
        return self.coefficients.interval


@dataclass(frozen=True)
class Coefficients:
    """The pair ``(p, Q)`` on a common interval.

    ``norms`` holds ``∫|1/p|, ∫|Q/p|, ∫|Q²/p|`` when the object came from
    :func:`build_coefficients`; it is excluded from equality and hashing.
    """

    p: PiecewiseFunction
    Q: PiecewiseFunction
    norms: dict | None = field(default=None, compare=False, hash=False, repr=False)

    def __post_init__(self):
        if not np.allclose(self.p.interval, self.Q.interval, rtol=0, atol=1e-14):
            raise ValidationError(
                f"p lives on {self.p.interval} but Q on {self.Q.interval}", "interval"
            )

    @property
    def interval(self):
        return self.p.interval

    @property
    def length(self):
        a, b = self.interval
        return b - a

    @property
    def mesh(self) -> np.ndarray:
        return np.union1d(self.p.breakpoints, self.Q.breakpoints)

    @property
    def is_real(self) -> bool:
        return self.p.is_real and self.Q.is_real

    def rules_on(self, lo, hi):
        """Rules of ``p`` and ``Q`` governing the open cell ``(lo, hi)``."""
        mid = 0.5 * (lo + hi)
        return self.p.rule_at(mid), self.Q.rule_at(mid)

    def shifted(self, c) -> Coefficients:
        """Same ``p``, ``Q + c`` (Q given as a constant shift on every segment)."""
        segs = []
        for s in self.Q.segments:
            segs.append(Segment(s.lo, s.hi, _shift_rule(s.rule, complex(c))))
        return build_coefficients(self.p, PiecewiseFunction(self.Q.interval, tuple(segs)))

    def to_json(self):
        return {"interval": list(self.interval), "p": self.p.to_json(), "Q": self.Q.to_json()}

    @classmethod
    def from_json(cls, data, field_name="coefficients"):
        if not isinstance(data, dict):
            raise ValidationError("expected an object", field_name)
        for key in ("interval", "p", "Q"):
            if key not in data:
                raise ValidationError(f"missing '{key}'", field_name)
        interval = data["interval"]
        if not isinstance(interval, list) or len(interval) != 2:
            raise ValidationError("interval must be [a, b]", f"{field_name}.interval")
        if not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in interval):
            raise ValidationError("interval endpoints must be numbers", f"{field_name}.interval")
        interval = (float(interval[0]), float(interval[1]))
        if not (math.isfinite(interval[0]) and math.isfinite(interval[1]) and interval[0] < interval[1]):
            raise ValidationError("interval must be finite with a < b", f"{field_name}.interval")
        return build_coefficients(
            _as_piecewise(data["p"], interval, f"{field_name}.p"),
            _as_piecewise(data["Q"], interval, f"{field_name}.Q"),
            interval,
        )


def _shift_rule(rule, c):
    if isinstance(rule, Constant):
        return Constant(rule.value + c)
    if isinstance(rule, Polynomial):
        return Polynomial((rule.coeffs[0] + c,) + rule.coeffs[1:], rule.origin)
    if isinstance(rule, MollifiedStep):
        return MollifiedStep(rule.t0, rule.height, rule.width, rule.base + c)
    raise ValidationError("cannot shift a scaled-power rule by a constant", "Q")


def _as_piecewise(raw, interval, name):
    if isinstance(raw, PiecewiseFunction):
        return raw
    if isinstance(raw, bool):
        raise ValidationError("expected a number or a segment list", name)
    if isinstance(raw, (int, float, complex)):
        return PiecewiseFunction.constant(raw, interval)
    if isinstance(raw, list):
        return PiecewiseFunction.from_json(raw, interval, name)
    raise ValidationError(f"cannot interpret {type(raw).__name__} as a piecewise function", name)


def build_coefficients(p_spec, Q_spec, interval=None) -> Coefficients:
    """Validate ``(p, Q)`` and compute the three L1 norms of the ratios.

    ``p_spec`` and ``Q_spec`` may be :class:`PiecewiseFunction` objects,
    numbers (constants) or JSON segment lists.

    Raises
    ------
    ValidationError
        Empty interval, mismatched intervals, a non-integrable rule or a
        ratio whose L1 norm diverges.
    """
    if interval is None:
        for raw in (p_spec, Q_spec):
            if isinstance(raw, PiecewiseFunction):
                interval = raw.interval
                break
        else:
            raise ValidationError("interval is required", "interval")
    interval = tuple(float(x) for x in interval)
    if len(interval) != 2 or not interval[0] < interval[1]:
        raise ValidationError(f"empty or invalid interval {interval}", "interval")
    p = _as_piecewise(p_spec, interval, "p")
    Q = _as_piecewise(Q_spec, interval, "Q")
    if not np.allclose(p.interval, interval, rtol=0, atol=1e-14) or not np.allclose(
        Q.interval, interval, rtol=0, atol=1e-14
    ):
        raise ValidationError("p, Q and the declared interval disagree", "interval")
    coeffs = Coefficients(p, Q)
    norms = {}
    r = _ratio_functions(coeffs)
    for label, fn in zip(("1/p", "Q/p", "Q^2/p"), r):
        try:
            norms[label] = l1_norm(fn, interval)
        except NumericalError as exc:
            raise ValidationError(f"∫|{label}| does not converge ({exc})", label) from None
    return Coefficients(p, Q, norms)


def _ratio_functions(c: Coefficients):
    p, Q, mesh = c.p, c.Q, c.mesh
    return (
        _MeshFunction(lambda t: 1.0 / p(t), mesh, "1/p"),
        _MeshFunction(lambda t: Q(t) / p(t), mesh, "Q/p"),
        _MeshFunction(lambda t: Q(t) ** 2 / p(t), mesh, "Q^2/p"),
    )


def ratios(c: Coefficients) -> RatioSet:
    """Ratio functions feeding the first-order system matrix."""
    if c.norms is None:
        c = build_coefficients(c.p, c.Q)
    r1, r2, r3 = _ratio_functions(c)
    return RatioSet(r1, r2, r3, c.mesh, c)


def adjoint_coefficients(c: Coefficients) -> Coefficients:
    """Coefficients of the formally adjoint expression (complex conjugates)."""
    return Coefficients(c.p.conjugate(), c.Q.conjugate(), c.norms)


# --------------------------------------------------------------------------
# Families


def _merged_constant_pieces(f: PiecewiseFunction):
    pieces = []
    for s in f.segments:
        v = complex(s.rule.value)
        if pieces and pieces[-1][2] == v:
            pieces[-1][1] = s.hi
        else:
            pieces.append([s.lo, s.hi, v])
    return pieces


def mollify(f: PiecewiseFunction, width: float) -> PiecewiseFunction:
    """Replace every jump of a piecewise-constant ``f`` by a centred linear ramp.

    Raises
    ------
    ValidationError
        If ``f`` is not piecewise constant or a ramp would overlap a
        neighbouring jump or stick out of the interval.
    """
    if not f.is_piecewise_constant:
        raise ValidationError("only piecewise-constant functions can be mollified", "Q0")
    if not width > 0:
        raise ValidationError("ramp width must be positive", "widths")
    pieces = _merged_constant_pieces(f)
    a, b = f.interval
    half = width / 2
    jumps = [p[1] for p in pieces[:-1]]
    edges = [a] + jumps + [b]
    for k, j in enumerate(jumps):
        if j - edges[k] < (half if k == 0 else width) - 1e-15 or (
            k == len(jumps) - 1 and b - j < half - 1e-15
        ):
            raise ValidationError(
                f"ramp width {width} exceeds the room around the jump at {j}", "widths"
            )
    segs = []
    cursor = a
    for k, j in enumerate(jumps):
        left, right = pieces[k][2], pieces[k + 1][2]
        if j - half > cursor:
            segs.append(Segment(cursor, j - half, Constant(left)))
        segs.append(Segment(j - half, j + half, MollifiedStep(j, right - left, width, left)))
        cursor = j + half
    if cursor < b:
        segs.append(Segment(cursor, b, Constant(pieces[-1][2])))
    return PiecewiseFunction(f.interval, tuple(segs))


@dataclass(frozen=True)
class CoefficientFamily:
    """Coefficients indexed by ``ε``, ordered strictly decreasing down to ``0``."""

    eps: tuple
    members: tuple

    def __post_init__(self):
        eps = tuple(float(e) for e in self.eps)
        if len(eps) != len(self.members):
            raise ValidationError("one member per ε value is required", "eps")
        if not eps or eps[-1] != 0.0:
            raise ValidationError("the ε = 0 member is required", "eps")
        if any(not e1 > e2 for e1, e2 in zip(eps[:-1], eps[1:])):
            raise ValidationError("ε values must be strictly decreasing", "eps")
        object.__setattr__(self, "eps", eps)
        object.__setattr__(self, "members", tuple(self.members))

    @classmethod
    def from_generator(cls, generator: Callable[[float], Coefficients], eps: Sequence[float]):
        eps = _check_widths(eps)
        return cls(tuple(eps) + (0.0,), tuple(generator(e) for e in eps) + (generator(0.0),))

    def __getitem__(self, eps) -> Coefficients:
        return self.members[self.eps.index(float(eps))]

    def __iter__(self):
        return iter(zip(self.eps, self.members))

    def __len__(self):
        return len(self.eps)

    @property
    def limit(self) -> Coefficients:
        return self.members[-1]


def _check_widths(widths: Iterable[float]):
    widths = [float(w) for w in widths]
    if any(not w > 0 for w in widths):
        raise ValidationError("ε values must be positive", "eps")
    if any(not w1 > w2 for w1, w2 in zip(widths[:-1], widths[1:])):
        raise ValidationError("ε values must be strictly decreasing", "eps")
    return widths


def mollified_family(Q0, widths, p=None, mollify_p=False) -> CoefficientFamily:
    """Family whose ``ε`` member smears every jump of ``Q0`` over width ``ε``.

    Parameters
    ----------
    Q0 : PiecewiseFunction
        Piecewise-constant primitive of the limit potential.
    widths : sequence of float
        Positive, strictly decreasing ramp widths; ``ε = 0`` is appended.
    p : PiecewiseFunction, optional
        Leading coefficient, ``1`` by default.
    mollify_p : bool
        Also smear the jumps of a piecewise-constant ``p``.
    """
    widths = _check_widths(widths)
    if not isinstance(Q0, PiecewiseFunction):
        raise ValidationError("Q0 must be a piecewise function", "Q0")
    if p is None:
        p = PiecewiseFunction.constant(1.0, Q0.interval)
    if mollify_p and not p.is_piecewise_constant:
        raise ValidationError("mollify_p needs a piecewise-constant p", "p")
    members = [
        build_coefficients(mollify(p, w) if mollify_p else p, mollify(Q0, w)) for w in widths
    ]
    members.append(build_coefficients(p, Q0))
    return CoefficientFamily(tuple(widths) + (0.0,), tuple(members))
