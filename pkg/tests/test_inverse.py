import numpy as np
import pytest

from dtoda import forward_moments
from dtoda.conformal import ExteriorMap
from dtoda.errors import (LeftAnnulus, MaxIterExceeded, OutOfAdmissibleInterval,
                          UnivalenceLost)
from dtoda.inverse import (InverseProblem, InverseSolution, cold_start_map,
                           solve_domain)
from dtoda.moments import MomentVector


def _map_close(a, b, tol):
    if abs(a.conformal_radius - b.conformal_radius) > tol:
        return False
    J = max(a.J, b.J)
    ca = np.concatenate([a.coeffs, np.zeros(J + 1 - a.coeffs.shape[0], complex)])
    cb = np.concatenate([b.coeffs, np.zeros(J + 1 - b.coeffs.shape[0], complex)])
    return np.max(np.abs(ca - cb)) <= tol


@pytest.mark.parametrize("fixture_map,fixture_d", [
    ("pert_map", "sigma1"), ("tilted_map", "cyl"), ("ellipse_map", "sigma1"),
])
def test_cold_roundtrip(request, fixture_map, fixture_d):
    m = request.getfixturevalue(fixture_map)
    d = request.getfixturevalue(fixture_d)
    targets = forward_moments(m, d, m.J + 1)
    sol = solve_domain(InverseProblem(targets, d, cold_start_map(targets, d)))
    assert _map_close(sol.map, m, 1e-8)
    assert sol.residual_norm <= 1e-12
    assert sol.jacobian_condition > 0.0
    back = forward_moments(sol.map, d, m.J + 1)
    assert abs(back.t0 - targets.t0) < 1e-10
    assert np.max(np.abs(back.t - targets.t)) < 1e-10


def test_roundtrip_general_family(gen4):
    m = ExteriorMap(1.2, np.array([0.0, 0.1 + 0.05j], complex))
    targets = forward_moments(m, gen4, 2)
    sol = solve_domain(InverseProblem(targets, gen4, cold_start_map(targets, gen4)))
    assert _map_close(sol.map, m, 1e-8)


def test_warm_start_takes_no_iterations(sigma1, pert_map):
    targets = forward_moments(pert_map, sigma1, 3)
    sol = solve_domain(InverseProblem(targets, sigma1, pert_map))
    assert sol.iterations == 0
    assert _map_close(sol.map, pert_map, 1e-12)


def test_symmetric_targets_give_real_coefficients(sigma1):
    # targets invariant under conjugation force a domain symmetric about
    # the real axis, hence real map coefficients
    targets = MomentVector(1.1, np.array([0.02, 0.05, 0.004], complex))
    sol = solve_domain(InverseProblem(targets, sigma1, cold_start_map(targets, sigma1)))
    assert np.max(np.abs(sol.map.coeffs.imag)) <= 1e-9


def test_cold_start_map_properties(cyl):
    targets = MomentVector(4.0, np.zeros(2, complex))
    m = cold_start_map(targets, cyl)
    assert m.J == 1 and np.all(m.coeffs == 0)
    assert abs(float(cyl.x_dU(m.conformal_radius ** 2)) - 4.0) < 1e-12
    with pytest.raises(OutOfAdmissibleInterval):
        cold_start_map(MomentVector(1e6, np.zeros(1, complex)), cyl)


def test_problem_validation(sigma1, pert_map):
    targets = MomentVector(1.0, np.zeros(4, complex))
    with pytest.raises(ValueError):
        InverseProblem(targets, sigma1, pert_map)  # pert_map carries 3 coeffs
    targets = MomentVector(1.0, np.zeros(2, complex))
    with pytest.raises(ValueError):
        InverseProblem(targets, sigma1, pert_map, tol=1e-14)


def test_infeasible_targets_fail_loudly(sigma1):
    # t2 = 0.5 t0 wants the ellipse u1 = r^2, the cusp limit; no univalent
    # domain has these moments, and the solver must say so rather than
    # return a fold
    targets = MomentVector(1.0, np.array([0.0, 0.5], complex))
    with pytest.raises((UnivalenceLost, MaxIterExceeded, LeftAnnulus)):
        solve_domain(InverseProblem(targets, sigma1, cold_start_map(targets, sigma1)))


def test_annulus_escape_is_reported(request):
    from dtoda import cylinder
    tight = cylinder(2.0, 0.04, 1.9)
    # admissible circle radii stop at sqrt(1.9); ask for a strongly
    # elliptical domain whose long axis must cross that line
    t0 = float(tight.x_dU(1.65))
    targets = MomentVector(t0, np.array([0.0, 0.35], complex))
    with pytest.raises((LeftAnnulus, MaxIterExceeded, UnivalenceLost)):
        solve_domain(InverseProblem(targets, tight, cold_start_map(targets, tight)))
