import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dtoda.conformal import (ExteriorMap, boundary_curve, eval_map,
                             eval_map_deriv, green, green_from_w, invert_batch,
                             invert_point, map_from_json_dict,
                             univalence_check, univalence_report,
                             winding_number)
from dtoda.errors import (CoincidentPoints, DegenerateTangent, InsideDisk,
                          PointInside)


def test_eval_matches_direct_series(pert_map):
    w = 1.7 * np.exp(1j * np.linspace(0, 2 * np.pi, 9, endpoint=False))
    direct = (pert_map.conformal_radius * w
              + sum(u * w ** (-j) for j, u in enumerate(pert_map.coeffs)))
    assert np.max(np.abs(pert_map(w) - direct)) < 1e-14
    # scalar in, scalar out
    assert isinstance(eval_map(pert_map, 2.0 + 0.0j), complex)


def test_eval_rejects_interior_points(pert_map):
    with pytest.raises(InsideDisk):
        eval_map(pert_map, 0.5)
    with pytest.raises(InsideDisk):
        eval_map_deriv(pert_map, np.array([1.5, 0.9j]))


def test_deriv_matches_finite_difference(tilted_map):
    w = np.array([1.2, 1.3 * np.exp(0.7j), 2.0 - 1.1j])
    h = 1e-6
    fd = (eval_map(tilted_map, w + h) - eval_map(tilted_map, w - h)) / (2 * h)
    assert np.max(np.abs(eval_map_deriv(tilted_map, w) - fd)) < 1e-8


def test_coefficient_pruning_and_defaults():
    m = ExteriorMap(1.0, np.array([1e-15, 0.1], complex))
    assert m.coeffs[0] == 0.0 and m.J == 1
    m = ExteriorMap(2.0, np.zeros(0, complex))
    assert m.J == 0
    with pytest.raises(ValueError):
        ExteriorMap(0.0, np.zeros(1, complex))


def test_json_roundtrip(tilted_map):
    m2 = map_from_json_dict(tilted_map.to_json_dict())
    assert m2.conformal_radius == tilted_map.conformal_radius
    assert np.array_equal(m2.coeffs, tilted_map.coeffs)


# -- inversion ----------------------------------------------------------------

@settings(max_examples=40, deadline=None)
@given(rho=st.floats(1.0, 4.0), phi=st.floats(0.0, 2 * np.pi),
       a_re=st.floats(-0.15, 0.15), a_im=st.floats(-0.15, 0.15))
def test_invert_roundtrip_property(rho, phi, a_re, a_im):
    m = ExteriorMap(1.0, np.array([0.05j, a_re + 1j * a_im], complex))
    w = rho * np.exp(1j * phi)
    back = invert_point(m, eval_map(m, w))
    assert abs(back - w) < 1e-9 * max(1.0, rho)


def test_invert_rejects_enclosed_point(ellipse_map):
    with pytest.raises(PointInside):
        invert_point(ellipse_map, 0.1 + 0.05j)


def test_invert_batch_reports_failures(ellipse_map):
    z = np.array([3.0 + 0.0j, 0.0 + 0.0j])
    w, ok = invert_batch(ellipse_map, z)
    assert ok[0] and not ok[1]
    assert abs(eval_map(ellipse_map, w[0]) - z[0]) < 1e-10


def test_winding_number():
    theta = np.linspace(0, 2 * np.pi, 200, endpoint=False)
    circle = np.exp(1j * theta)
    assert winding_number(circle, 0.2 + 0.1j) == 1
    assert winding_number(circle, 2.0) == 0
    assert winding_number(circle[::-1], 0.0) == -1


# -- Green's function -----------------------------------------------------------

def test_green_symmetry_and_negativity(pert_map):
    pts = [2.0 + 0.3j, -1.6 + 1.1j, 0.4 - 2.2j]
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            a = green(pert_map, pts[i], pts[j])
            b = green(pert_map, pts[j], pts[i])
            assert abs(a - b) < 1e-12
            assert a < 0.0


def test_green_vanishes_on_boundary(pert_map):
    zeta = 2.5 - 0.7j
    wz = np.exp(0.9j)  # boundary preimage
    g = green_from_w(wz, invert_point(pert_map, zeta))
    assert abs(g) < 1e-12


def test_green_disk_closed_form():
    # circle of radius r: G = log |r (wz - wzeta) / (wz wzeta~ - 1)| - log r
    r = 1.3
    m = ExteriorMap(r, np.zeros(1, complex))
    z, zeta = 2.6 + 0.5j, -1.9 + 2.0j
    wz, wzeta = z / r, zeta / r
    want = np.log(abs((wz - wzeta) / (wz * np.conj(wzeta) - 1.0)))
    assert abs(green(m, z, zeta) - want) < 1e-13


def test_green_coincident_points(pert_map):
    with pytest.raises(CoincidentPoints):
        green(pert_map, 2.0, 2.0)


# -- univalence -----------------------------------------------------------------

def test_univalence_accepts_small_perturbations(pert_map, ellipse_map, tilted_map):
    for m in (pert_map, ellipse_map, tilted_map):
        assert univalence_check(m)


def test_univalence_rejects_folded_map():
    # |u1| > r^2 puts zeros of z' outside the unit circle; the image of
    # |w| = 1 is still a simple ellipse, so only the argument principle
    # can catch this one
    bad = ExteriorMap(1.0, np.array([0.0, 1.2], complex))
    ok, reason = univalence_report(bad)
    assert not ok and reason


def test_univalence_rejects_self_intersection():
    bad = ExteriorMap(1.0, np.array([0.0, 0.0, 0.0, 0.4], complex))
    assert not univalence_check(bad)


# -- boundary sampling ------------------------------------------------------------

def test_boundary_curve_geometry(tilted_map):
    M = 128
    b = boundary_curve(tilted_map, M)
    assert b.M == M
    # samples agree with the map on |w| = 1
    theta = 2.0 * np.pi * np.arange(M) / M
    assert np.max(np.abs(b.samples - eval_map(tilted_map, np.exp(1j * theta)))) < 1e-13
    # tangents differentiate the samples in theta
    fd = (np.roll(b.samples, -1) - np.roll(b.samples, 1)) / (2 * (theta[1] - theta[0]))
    assert np.max(np.abs(b.tangents - fd)) < 1e-2
    # normals are unit and orthogonal to tangents
    assert np.max(np.abs(np.abs(b.normals) - 1.0)) < 1e-12
    inner = (b.normals * np.conj(b.tangents)).real
    assert np.max(np.abs(inner)) < 1e-10


def test_boundary_normals_point_outward(pert_map):
    b = boundary_curve(pert_map, 64)
    probe = b.samples + 1e-3 * b.normals
    assert all(winding_number(b.samples, z) == 0 for z in probe)
    probe_in = b.samples - 1e-3 * b.normals
    assert all(winding_number(b.samples, z) == 1 for z in probe_in)


def test_boundary_degenerate_tangent():
    # z' = r (1 - w^-2) vanishes at w = +-1 when u1 = r
    cusp = ExteriorMap(1.0, np.array([0.0, 1.0], complex))
    with pytest.raises(DegenerateTangent):
        boundary_curve(cusp, 64)
