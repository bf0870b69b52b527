import numpy as np
import pytest

from dtoda import cylinder, forward_moments
from dtoda.conformal import ExteriorMap, univalence_check
from dtoda.errors import NonMonotone
from dtoda.inverse import cold_start_map
from dtoda.identities import (check_dkdv, check_gradient,
                              check_green_from_tau, check_hirota,
                              check_homogeneity, check_parameter_derivative,
                              check_third_derivative, check_w_from_tau,
                              run_suite)
from dtoda.moments import MomentVector


@pytest.fixture(scope="module")
def base_s1():
    return MomentVector(1.0, np.array([0.0, 0.05 + 0.02j, 0.01], complex))


@pytest.fixture(scope="module")
def base_cyl():
    return MomentVector(6.0, np.array([0.02 - 0.01j, 0.04], complex))


def _check_report(rep, name):
    assert rep.name == name
    assert rep.passed, "%s residual %.3e > tol %.3e" % (
        name, rep.residual, rep.tolerance)
    j = rep.to_json_dict()
    assert type(j["residual"]) is float
    assert type(j["tolerance"]) is float
    assert type(j["passed"]) is bool
    assert isinstance(j["configuration"], dict)


def test_gradient_identity(base_s1, base_cyl, sigma1, cyl):
    _check_report(check_gradient(base_s1, sigma1), "gradient")
    _check_report(check_gradient(base_cyl, cyl), "gradient")


def test_green_identity(base_s1, sigma1):
    # at N = 4 the series tail estimate always lands above 1e-6 for points
    # near the curve, so the advisory warning is part of the contract here
    from dtoda.errors import TruncationWarning
    with pytest.warns(TruncationWarning):
        rep = check_green_from_tau(base_s1, sigma1, 2.4 + 0.9j, -1.8 - 1.7j)
    _check_report(rep, "green")
    assert rep.residual < 1e-3


def test_green_rejects_bad_points(base_s1, sigma1):
    with pytest.raises(ValueError):
        check_green_from_tau(base_s1, sigma1, 3.0, 3.0 + 0.01j)  # too close
    with pytest.raises(ValueError):
        check_green_from_tau(base_s1, sigma1, 0.1, 3.0)  # inside the curve


def test_w_identity(base_cyl, cyl):
    rep = check_w_from_tau(base_cyl, cyl, 2.0 * 2.6 * np.exp(0.4j))
    _check_report(rep, "w")
    assert rep.residual < 1e-3


def test_hirota_identity(base_s1, sigma1):
    z1, z2 = 3.1 * np.exp(0.7j), 3.6 * np.exp(-1.9j)
    rep = check_hirota(base_s1, sigma1, z1, z2)
    _check_report(rep, "hirota")
    assert rep.residual < 1e-3
    with pytest.raises(ValueError):
        check_hirota(base_s1, sigma1, z1, z1)
    with pytest.raises(ValueError):
        check_hirota(base_s1, sigma1, 1.1, z2)  # too close to the boundary


def test_third_derivative_identity(base_s1, sigma1):
    rep = check_third_derivative(base_s1, sigma1)
    _check_report(rep, "third")
    assert rep.residual < 1e-3
    with pytest.raises(ValueError):
        check_third_derivative(base_s1, sigma1, M=128)


def test_parameter_derivative_homogeneous(base_s1, sigma1):
    rep = check_parameter_derivative(base_s1, sigma1, "c", 1e-3)
    _check_report(rep, "parameter:c")


def test_parameter_derivative_cylinder(base_cyl, cyl):
    beta = check_parameter_derivative(base_cyl, cyl, "beta", 1e-3 * 2.0)
    _check_report(beta, "parameter:beta")
    # the cylinder beta check also carries the moment-side identities
    assert "cut_and_join_residual" in beta.configuration
    assert "explicit_2f_residual" in beta.configuration
    assert beta.configuration["cut_and_join_residual"] < 1e-2
    assert beta.configuration["explicit_2f_residual"] < 1e-2
    r0 = check_parameter_derivative(base_cyl, cyl, "log_r0_sq", 1e-3)
    _check_report(r0, "parameter:log_r0_sq")


def test_parameter_derivative_general(gen4):
    base = MomentVector(1.6, np.array([0.0, 0.03 + 0.01j], complex))
    rep = check_parameter_derivative(base, gen4, "C0", 1e-3)
    _check_report(rep, "parameter:C0")


def test_homogeneity(base_s1, base_cyl, sigma1, cyl, gen4):
    _check_report(check_homogeneity(base_s1, sigma1), "homogeneity")
    _check_report(check_homogeneity(base_cyl, cyl), "homogeneity")
    with pytest.raises(ValueError):
        check_homogeneity(base_s1, gen4)


def test_homogeneity_exact_on_t0_line(sigma1):
    base = MomentVector(1.44, np.zeros(3, complex))
    rep = check_homogeneity(base, sigma1)
    assert rep.passed and rep.residual < 1e-10


# -- dKdV ----------------------------------------------------------------------

def test_dkdv_identity_and_fd_crosscheck():
    rep = check_dkdv([0.5, 0.25], 1.3, 3)
    _check_report(rep, "dkdv")
    assert rep.residual < 1e-10
    cfg = rep.configuration
    assert abs(cfg["fd_du_dt0"] - cfg["du_dt0"]) < 1e-6
    assert abs(cfg["fd_du_dtau"] - cfg["du_dtau"]) < 1e-6


def test_dkdv_quadratic_is_exact():
    # curly-U = tau2 X^2 alone: u = t0 / (2 tau2), all relations linear
    rep = check_dkdv([0.7], 0.9, 2)
    assert rep.passed and rep.residual == 0.0
    cfg = rep.configuration
    assert abs(cfg["u"] - 0.9 / 1.4) < 1e-12
    assert abs(cfg["du_dt0"] - 1.0 / 1.4) < 1e-12


def test_dkdv_rejects_folded_branch():
    # potential with a non-monotone P(u): two admissible roots at this t0
    with pytest.raises(NonMonotone):
        check_dkdv([0.5, -0.5, 0.1], 0.1, 3)


def test_tolerance_override():
    rep = check_dkdv([0.5, 0.25], 1.0, 3, tol=1e-3)
    assert rep.tolerance == 1e-3


def test_identities_hold_far_from_unit_radius():
    # regression: with conformal radius ~ 1.5 the tau-lattice solves used
    # to stall at the highest-order nodes, and the displaced-density
    # derivative carried a bias from moment orders the solves left afloat
    d = cylinder(2.0, 0.04, 100.0)
    circle = cold_start_map(MomentVector(8.0, np.zeros(0, complex)), d, J=3)
    r = circle.conformal_radius
    rng = np.random.default_rng(5)
    raw = rng.uniform(-1.0, 1.0, (4, 2))
    m = ExteriorMap(r, (raw[:, 0] + 1j * raw[:, 1])
                    * (0.2 * r / np.arange(2.0, 6.0)))
    assert univalence_check(m)
    base = forward_moments(m, d, 4, verify=False)
    _check_report(check_gradient(base, d, base_map=m), "gradient")
    for lam in ("beta", "log_r0_sq"):
        _check_report(check_parameter_derivative(base, d, lam, 1e-3,
                                                 base_map=m),
                      "parameter:" + lam)


# -- suite runner -----------------------------------------------------------------

def test_run_suite_rejects_unknown(base_s1, sigma1):
    with pytest.raises(ValueError):
        run_suite(base_s1, sigma1, suite="everything")


def test_run_suite_single(base_s1, sigma1):
    reps = run_suite(base_s1, sigma1, suite="dkdv", max_workers=1)
    assert len(reps) == 1 and reps[0].name == "dkdv" and reps[0].passed


def test_run_suite_sorted_and_warm_start(base_cyl, cyl, tilted_map):
    reps = run_suite(base_cyl, cyl, suite="parameter", base_map=None,
                     max_workers=2)
    names = [r.name for r in reps]
    assert names == sorted(names)
    assert set(names) == {"parameter:beta", "parameter:log_r0_sq"}
    assert all(r.passed for r in reps)
