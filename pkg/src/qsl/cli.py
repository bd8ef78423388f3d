"""Command-line front end: ``qsl {spectrum,green,resolve,classify,converge} DOC``.

A problem document is JSON with four sections::

    {
      "coefficients": {"interval": [a, b], "p": ..., "Q": ...},
      "boundary": {"K": M} | {"alpha": M, "beta": M} | {"K_a": z, "K_b": z}
                  | {"K_lambda": {"K0": M, "K1": M}},
      "task": {"window": ..., "lambda": z, "grid": n, "f": ..., ...},
      "output": {"path": "result.csv"}
    }

``p`` and ``Q`` are numbers or segment lists; matrices are four ``[re, im]``
pairs in row-major order. Exit codes: 0 success, 2 invalid input,
3 numerical failure. Output files are written atomically after all
computation succeeds.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile

import numpy as np

from .boundary import (
    CanonicalK,
    TwoPointBC,
    canonical_to_two_point,
    classify,
    matrix_to_json,
    parse_matrix,
    separated_parameters,
    DEFAULT_TOL,
)
from .coefficients import (
    CoefficientFamily,
    Coefficients,
    PiecewiseFunction,
    build_coefficients,
    mollified_family,
    parse_complex,
)
from .convergence import DEFAULT_EPS, ConvergenceCase, run_case
from .errors import EigenvalueCollision, NumericalError, QSLError, ValidationError
from .spectral import (
    eigenvalues,
    generalized_resolvent_apply,
    green_function,
    green_matrix,
    resolvent_apply,
)

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3


def fmt(x) -> str:
    """At most 15 significant digits, shortest form, no negative zero."""
    x = float(x)
    if x == 0:
        return "0"
    return format(x, ".15g")


def _num(x):
    x = float(x)
    if not math.isfinite(x):
        return None
    return 0.0 if x == 0 else float(format(x, ".15g"))


def _cnum(z):
    z = complex(z)
    return [_num(z.real), _num(z.imag)]


# --------------------------------------------------------------------------
# Document parsing


class Boundary:
    """Parsed boundary section; exactly one representation is present."""

    def __init__(self, bc: TwoPointBC, K=None, K0=None, K1=None):
        self.bc = bc
        self.K = K
        self.K0 = K0
        self.K1 = K1

    @property
    def depends_on_lambda(self):
        return self.K1 is not None

    def K_at(self, lam):
        return self.K0 + complex(lam) * self.K1


def _parse_boundary(data) -> Boundary:
    if not isinstance(data, dict):
        raise ValidationError("expected an object", "boundary")
    forms = [
        k
        for k, present in (
            ("K", "K" in data),
            ("alpha/beta", "alpha" in data or "beta" in data),
            ("K_a/K_b", "K_a" in data or "K_b" in data),
            ("K_lambda", "K_lambda" in data),
        )
        if present
    ]
    if len(forms) != 1:
        raise ValidationError(
            f"exactly one of K, alpha/beta, K_a/K_b, K_lambda is required (got {forms or 'none'})",
            "boundary",
        )
    form = forms[0]
    if form == "K":
        K = parse_matrix(data["K"], "boundary.K")
        return Boundary(canonical_to_two_point(K), K=K)
    if form == "alpha/beta":
        if "alpha" not in data or "beta" not in data:
            raise ValidationError("alpha and beta must both be given", "boundary")
        alpha = parse_matrix(data["alpha"], "boundary.alpha")
        beta = parse_matrix(data["beta"], "boundary.beta")
        return Boundary(TwoPointBC(alpha, beta))
    if form == "K_a/K_b":
        if "K_a" not in data or "K_b" not in data:
            raise ValidationError("K_a and K_b must both be given", "boundary")
        K = CanonicalK.separated(
            parse_complex(data["K_a"], "boundary.K_a"), parse_complex(data["K_b"], "boundary.K_b")
        ).K
        return Boundary(canonical_to_two_point(K), K=np.array(K))
    raw = data["K_lambda"]
    if not isinstance(raw, dict) or "K0" not in raw:
        raise ValidationError("K_lambda needs K0 (and optionally K1)", "boundary.K_lambda")
    K0 = parse_matrix(raw["K0"], "boundary.K_lambda.K0")
    K1 = parse_matrix(raw.get("K1", [[0, 0]] * 4), "boundary.K_lambda.K1")
    return Boundary(None, K0=K0, K1=K1)


def _task(doc):
    task = doc.get("task", {})
    if not isinstance(task, dict):
        raise ValidationError("expected an object", "task")
    return task


def _coefficients(doc) -> Coefficients:
    if "coefficients" not in doc:
        raise ValidationError("section is required", "coefficients")
    return Coefficients.from_json(doc["coefficients"])


def _window(task):
    if "window" not in task:
        raise ValidationError("window is required", "task.window")
    w = task["window"]
    if isinstance(w, list) and len(w) == 2:
        if all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in w):
            return (float(w[0]), float(w[1]))
        if all(isinstance(x, list) and len(x) == 2 for x in w):
            return tuple((float(x[0]), float(x[1])) for x in w)
    raise ValidationError("expected [lo, hi] or [[re_lo, re_hi], [im_lo, im_hi]]", "task.window")


def _lambda(task):
    if "lambda" not in task:
        raise ValidationError("lambda is required", "task.lambda")
    return parse_complex(task["lambda"], "task.lambda")


def _grid(task, args, default):
    n = args.grid if args.grid is not None else task.get("grid", default)
    if not isinstance(n, int) or isinstance(n, bool) or n < 2:
        raise ValidationError("grid must be an integer >= 2", "task.grid")
    return n


_PRESETS = {
    "zero": lambda t: np.zeros_like(t),
    "one": lambda t: np.ones_like(t),
    "t": lambda t: t,
}


def _forcing(task, interval):
    f = task.get("f", 1.0)
    if isinstance(f, str):
        if f not in _PRESETS:
            raise ValidationError(f"unknown preset {f!r} (expected {sorted(_PRESETS)})", "task.f")
        return _PRESETS[f]
    if isinstance(f, (int, float)) and not isinstance(f, bool):
        return PiecewiseFunction.constant(float(f), interval)
    if isinstance(f, list) and len(f) == 2 and all(isinstance(x, (int, float)) for x in f):
        return PiecewiseFunction.constant(parse_complex(f, "task.f"), interval)
    if isinstance(f, list):
        return PiecewiseFunction.from_json(f, interval, "task.f")
    raise ValidationError("expected a number, [re, im], a segment list or a preset name", "task.f")


def _family(task, coeffs):
    raw = task.get("family", {"kind": "mollified"})
    if not isinstance(raw, dict):
        raise ValidationError("expected an object", "task.family")
    eps = task.get("eps", list(DEFAULT_EPS))
    if not isinstance(eps, list) or not eps:
        raise ValidationError("eps must be a non-empty list", "task.eps")
    eps = [float(e) for e in eps]
    if eps[-1] == 0.0:
        eps = eps[:-1]
    if any(not e > 0 for e in eps) or any(not e1 > e2 for e1, e2 in zip(eps[:-1], eps[1:])):
        raise ValidationError("eps must be positive and strictly decreasing", "task.eps")
    kind = raw.get("kind", "mollified")
    if kind == "constant":
        return CoefficientFamily.from_generator(lambda _e: coeffs, eps)
    if kind == "mollified":
        return mollified_family(
            coeffs.Q, eps, p=coeffs.p, mollify_p=bool(raw.get("mollify_p", False))
        )
    raise ValidationError(f"unknown family kind {kind!r}", "task.family.kind")


# --------------------------------------------------------------------------
# Commands


def _classification_text(boundary: Boundary, tol):
    if boundary.K is None:
        return "n/a (alpha/beta form)"
    return str(classify(boundary.K, tol))


def cmd_spectrum(doc, args):
    coeffs = _coefficients(doc)
    boundary = _parse_boundary(doc.get("boundary"))
    task = _task(doc)
    window = _window(task)
    step = task.get("step")
    if step is not None and not (isinstance(step, (int, float)) and step > 0):
        raise ValidationError("step must be positive", "task.step")
    if boundary.depends_on_lambda:
        raise ValidationError("spectra need a λ-independent boundary condition", "boundary")
    tol = args.tol if args.tol is not None else DEFAULT_TOL
    if boundary.K is not None and not coeffs.is_real:
        raise ValidationError("canonical K conditions need real coefficients", "coefficients")

    def run():
        report = eigenvalues(boundary.bc, coeffs, window, step=step)
        lines = [f"count: {report.count}", f"classification: {_classification_text(boundary, tol)}"]
        if report.expected_count is not None:
            lines.append(f"argument-principle count: {report.expected_count}")
        lines += [f"warning: {w}" for w in report.warnings]
        return report.to_csv(fmt), lines

    return run


def cmd_green(doc, args):
    coeffs = _coefficients(doc)
    boundary = _parse_boundary(doc.get("boundary"))
    task = _task(doc)
    lam = _lambda(task)
    n = _grid(task, args, 201)
    bc = canonical_to_two_point(boundary.K_at(lam)) if boundary.depends_on_lambda else boundary.bc

    def run():
        kernel = green_function(green_matrix(bc, coeffs, lam))
        t, s, v = kernel.grid(n)
        payload = {
            "lambda": _cnum(lam),
            "t": [_num(x) for x in t],
            "s": [_num(x) for x in s],
            "gamma_re": [[_num(x) for x in row] for row in v.real],
            "gamma_im": [[_num(x) for x in row] for row in v.imag],
        }
        lines = [
            f"sup|Gamma|: {fmt(np.max(np.abs(v)))}",
            f"symmetry defect: {fmt(np.max(np.abs(v - v.T.conj())))}",
        ]
        return json.dumps(payload, separators=(",", ":")) + "\n", lines

    return run


def cmd_resolve(doc, args):
    coeffs = _coefficients(doc)
    boundary = _parse_boundary(doc.get("boundary"))
    task = _task(doc)
    lam = _lambda(task)
    n = _grid(task, args, 101)
    f = _forcing(task, coeffs.interval)
    if boundary.depends_on_lambda and not lam.imag < 0:
        raise ValidationError("λ-dependent K requires Im λ < 0", "task.lambda")

    def run():
        if boundary.depends_on_lambda:
            sol = generalized_resolvent_apply(boundary.K_at, lam, f, coeffs)
        else:
            sol = resolvent_apply(green_function(green_matrix(boundary.bc, coeffs, lam)), f)
        ts = np.linspace(*coeffs.interval, n)
        w = sol.quasi(ts)
        out = ["t,re_y,im_y,re_d1y,im_d1y"]
        for tk, (y, d) in zip(ts, w):
            out.append(",".join(fmt(x) for x in (tk, y.real, y.imag, d.real, d.imag)))
        dev, bc_res = sol.residual()
        return "\n".join(out) + "\n", [f"residual: {fmt(dev)}", f"boundary residual: {fmt(bc_res)}"]

    return run


def cmd_classify(doc, args):
    boundary = _parse_boundary(doc.get("boundary"))
    tol = args.tol if args.tol is not None else float(_task(doc).get("tol", DEFAULT_TOL))
    if not tol > 0:
        raise ValidationError("tolerance must be positive", "tol")
    if boundary.K is None:
        raise ValidationError("classification needs a K matrix (K or K_a/K_b)", "boundary")

    def run():
        cls = classify(boundary.K, tol)
        payload = {
            "selfadjoint": cls.selfadjoint,
            "dissipative": cls.dissipative,
            "separated": cls.separated,
            "K_a": None,
            "K_b": None,
            "classification": str(cls),
        }
        if cls.separated:
            sp = separated_parameters(boundary.K, tol)
            payload["K_a"], payload["K_b"] = _cnum(sp.K_a), _cnum(sp.K_b)
        return json.dumps(payload, sort_keys=False) + "\n", [f"classification: {cls}"]

    return run


def cmd_converge(doc, args):
    coeffs = _coefficients(doc)
    boundary = _parse_boundary(doc.get("boundary"))
    if boundary.depends_on_lambda:
        raise ValidationError("convergence runs need a λ-independent boundary condition", "boundary")
    task = _task(doc)
    lam = parse_complex(task.get("lambda", -1.0), "task.lambda")
    n = _grid(task, args, 201)
    family = _family(task, coeffs)
    bc0 = boundary.bc
    raw = task.get("family", {}) if isinstance(task.get("family"), dict) else {}
    if "E" in raw:
        E = parse_matrix(raw["E"], "task.family.E")

        def bc_family(eps):
            return TwoPointBC(bc0.alpha + eps * E, bc0.beta)

    else:
        bc_family = bc0
    samples = task.get("samples", 20)
    if not isinstance(samples, int) or samples < 0:
        raise ValidationError("samples must be a non-negative integer", "task.samples")
    case = ConvergenceCase(family, bc_family, lam, n, samples)

    def run():
        report = run_case(case)
        lines = [f"final resolvent bound: {fmt(report.final_bound)}"]
        lines += [f"warning: {note}" for note in report.notes]
        return report.to_csv(fmt), lines

    return run


COMMANDS = {
    "spectrum": cmd_spectrum,
    "green": cmd_green,
    "resolve": cmd_resolve,
    "classify": cmd_classify,
    "converge": cmd_converge,
}


def _write_atomic(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".qsl-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def build_parser():
    parser = argparse.ArgumentParser(prog="qsl", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("document", help="JSON problem document")
        p.add_argument("--out", help="output path (overrides output.path; '-' for stdout)")
        p.add_argument("--grid", type=int, help="grid size override")
        p.add_argument("--tol", type=float, help="classification tolerance override")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        try:
            with open(args.document, encoding="utf-8") as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise ValidationError(str(exc), "document") from None
        except json.JSONDecodeError as exc:
            raise ValidationError(f"invalid JSON ({exc})", "document") from None
        if not isinstance(doc, dict):
            raise ValidationError("top level must be an object", "document")
        output = doc.get("output", {})
        if not isinstance(output, dict):
            raise ValidationError("expected an object", "output")
        path = args.out if args.out is not None else output.get("path")
        if args.tol is not None and not args.tol > 0:
            raise ValidationError("tolerance must be positive", "--tol")
        run = COMMANDS[args.command](doc, args)
        text, lines = run()
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except EigenvalueCollision as exc:
        print(f"error: eigenvalue proximity: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except QSLError as exc:  # pragma: no cover - defensive
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        _write_atomic(path, text)
    for line in lines:
        print(line, file=sys.stderr if path in (None, "-") else sys.stdout)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
