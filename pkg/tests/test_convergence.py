import math

import numpy as np
import pytest

from qsl.boundary import TwoPointBC, dirichlet
from qsl.coefficients import CoefficientFamily, PiecewiseFunction, build_coefficients, mollified_family
from qsl.convergence import (
    CSV_COLUMNS,
    ConvergenceCase,
    kernel_sup_distance,
    mu_shift_residual,
    resolvent_gap_bound,
    run_case,
)
from qsl.errors import NumericalError, ValidationError
from qsl.spectral import green_function, green_matrix

UNIT = (0.0, 1.0)
EPS = [0.2, 0.1, 0.05, 0.025]


def free_kernel(t, s):
    """Dirichlet kernel of -y'' + y on (0, 1)."""
    lo, hi = np.minimum(t, s), np.maximum(t, s)
    return np.sinh(lo) * np.sinh(1 - hi) / np.sinh(1)


def delta_kernel(t, s, c):
    """Rank-one update of the free kernel by a delta of strength c at 1/2."""
    g = free_kernel
    return g(t, s) - c * g(t, 0.5) * g(0.5, s) / (1 + c * g(0.5, 0.5))


@pytest.fixture(scope="module")
def canonical_report():
    fam = mollified_family(PiecewiseFunction.step(0.5, 1.0, UNIT), EPS)
    return run_case(ConvergenceCase(fam, dirichlet(), -1.0, 201, mc_samples=5))


class TestKernelDistance:
    def test_identical(self):
        c = build_coefficients(1.0, PiecewiseFunction.step(0.5, 1.0, UNIT))
        k = green_function(green_matrix(dirichlet(), c, -1.0))
        assert kernel_sup_distance(k, k) == 0.0

    def test_free_vs_delta_closed_form(self):
        c_free = build_coefficients(1.0, 0.0, UNIT)
        h = 2.0
        c_delta = build_coefficients(1.0, PiecewiseFunction.step(0.5, h, UNIT))
        k0 = green_function(green_matrix(dirichlet(), c_free, -1.0))
        k1 = green_function(green_matrix(dirichlet(), c_delta, -1.0))
        t = np.linspace(0, 1, 101)
        T, S = np.meshgrid(t, t, indexing="ij")
        assert np.max(np.abs(k0.grid(101)[2] - free_kernel(T, S))) < 1e-10
        assert np.max(np.abs(k1.grid(101)[2] - delta_kernel(T, S, h))) < 1e-10
        expected = np.max(np.abs(delta_kernel(T, S, h) - free_kernel(T, S)))
        assert kernel_sup_distance(k1, k0, 101) == pytest.approx(expected, abs=1e-10)

    def test_mismatched_lambda(self):
        c = build_coefficients(1.0, 0.0, UNIT)
        a = green_function(green_matrix(dirichlet(), c, -1.0))
        b = green_function(green_matrix(dirichlet(), c, -2.0))
        with pytest.raises(ValidationError):
            kernel_sup_distance(a, b)

    def test_mismatched_interval(self):
        a = green_function(green_matrix(dirichlet(), build_coefficients(1.0, 0.0, UNIT), -1.0))
        b = green_function(green_matrix(dirichlet(), build_coefficients(1.0, 0.0, (0, 2)), -1.0))
        with pytest.raises(ValidationError):
            kernel_sup_distance(a, b)


class TestBound:
    def test_zero(self):
        assert resolvent_gap_bound(0.0, 7.0) == 0.0

    def test_unit_interval(self):
        assert resolvent_gap_bound(0.1, 1.0) == pytest.approx(0.1)

    def test_negative_rejected(self):
        with pytest.raises(ValidationError):
            resolvent_gap_bound(-1.0, 1.0)


class TestRunCase:
    def test_constant_family(self):
        c = build_coefficients(1.0, PiecewiseFunction.step(0.5, 1.0, UNIT))
        fam = CoefficientFamily.from_generator(lambda _e: c, EPS)
        rep = run_case(ConvergenceCase(fam, dirichlet(), mc_samples=3))
        for name in CSV_COLUMNS[1:]:
            assert np.all(rep.column(name) == 0)

    def test_canonical_family_columns(self, canonical_report):
        rep = canonical_report
        assert list(rep.column("eps")) == EPS + [0.0]
        # triangle areas: ∫|Q_ε - Q_0| = ε/4; with Q_ε = 1/2 + x/ε on |x| < ε/2,
        # ∫|Q_ε² - Q_0²| = ε ∫_0^{1/2} u² du + ε ∫_{1/2}^1 (1 - u²) du = ε (1/24 + 5/24)
        eps = np.array(EPS)
        assert np.allclose(rep.column("c2_l1")[:-1], eps / 4, atol=1e-11)
        assert np.allclose(rep.column("c3_l1")[:-1], eps / 4, atol=1e-11)
        assert np.all(rep.column("c1_l1") == 0) and np.all(rep.column("c4_bc") == 0)
        for name in ("c2_l1", "c3_l1", "kernel_gap", "resolvent_bound"):
            assert rep.non_increasing(name)
            assert rep.strictly_decreasing(name)

    def test_grid_stability(self, canonical_report):
        fam = mollified_family(PiecewiseFunction.step(0.5, 1.0, UNIT), EPS)
        fine = run_case(ConvergenceCase(fam, dirichlet(), -1.0, 401, mc_samples=0))
        a, b = canonical_report.column("kernel_gap")[:-1], fine.column("kernel_gap")[:-1]
        assert np.all(np.abs(a - b) <= 0.05 * b)

    def test_mc_below_bound(self, canonical_report):
        for row in canonical_report.rows:
            assert row.mc_gap <= row.resolvent_bound + 1e-6
        assert not canonical_report.notes

    def test_bc_family_column(self):
        c = build_coefficients(1.0, PiecewiseFunction.step(0.5, 1.0, UNIT))
        fam = CoefficientFamily.from_generator(lambda _e: c, EPS)
        d = dirichlet()
        E = np.array([[0.0, 1.0], [0.0, 0.0]])
        rep = run_case(
            ConvergenceCase(fam, lambda e: TwoPointBC(d.alpha + e * E, d.beta), mc_samples=0)
        )
        # ‖εE‖₂ = ε for this E
        assert np.allclose(rep.column("c4_bc"), EPS + [0.0], atol=1e-15)

    def test_lambda_in_limit_spectrum(self):
        fam = mollified_family(PiecewiseFunction.step(0.5, 1.0, UNIT), EPS)
        lam0 = 11.77185916375068781
        with pytest.raises(NumericalError, match="spectrum"):
            run_case(ConvergenceCase(fam, dirichlet(), lam0, mc_samples=0))

    def test_csv(self, canonical_report):
        lines = canonical_report.to_csv().splitlines()
        assert lines[0] == "eps,c1_l1,c2_l1,c3_l1,c4_bc,kernel_gap,resolvent_bound"
        assert len(lines) == 6 and lines[-1] == "0,0,0,0,0,0,0"

    def test_final_bound(self, canonical_report):
        assert canonical_report.final_bound == canonical_report.rows[-2].resolvent_bound > 0


def test_mu_shift_identity():
    p0 = PiecewiseFunction.step(0.3, 1.0, UNIT, base=1.0)
    fam = mollified_family(PiecewiseFunction.step(0.5, 2.0, UNIT), [0.1], p=p0, mollify_p=True)
    for mu in (-2.3, 0.0, math.pi):
        res, tol = mu_shift_residual(fam[0.1], fam[0.0], mu)
        assert res <= tol


def test_case_validation():
    fam = mollified_family(PiecewiseFunction.step(0.5, 1.0, UNIT), EPS)
    with pytest.raises(ValidationError):
        ConvergenceCase(fam, dirichlet(), grid_size=2)
    with pytest.raises(ValidationError):
        ConvergenceCase("not a family", dirichlet())
