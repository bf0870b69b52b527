"""Forward and dual moments against independently computed region integrals.

Expected values below were produced by a standalone oracle that never calls
into this package: star-shaped boundary radii from 8192-point resampling plus
Newton refinement, interior integrals in polar coordinates (trapezoid in the
angle, Gauss-Legendre in x = rho^2), exterior integrals in the w-plane with a
log substitution, and Stokes-theorem self-checks for the constant density.
"""

import math

import numpy as np
import pytest

from dtoda import cauchy_transform, dual_moments, forward_moments
from dtoda.conformal import ExteriorMap
from dtoda.errors import OutOfAnnulus, QuadratureNotConverged, TooCloseToBoundary
from dtoda.moments import MomentVector, moments_from_json_dict, potential_field


def _assert_close(got, want, tol):
    assert abs(got - want) < tol, "got %r want %r" % (got, want)


# -- sigma = 1 ---------------------------------------------------------------

def test_sigma1_perturbed_map(sigma1, pert_map):
    mv = forward_moments(pert_map, sigma1, 4)
    dm = dual_moments(pert_map, sigma1, 4)
    _assert_close(mv.t0, 0.9832, 5e-9)
    _assert_close(mv.t[0], -0.0048 - 0.0016j, 5e-9)
    _assert_close(mv.t[1], 0.06 - 0.02j, 5e-9)
    _assert_close(mv.t[2], 6.666666666666667e-3, 5e-9)
    _assert_close(mv.t[3], 0.0, 5e-9)
    _assert_close(dm.v0, -0.9836, 5e-9)
    _assert_close(dm.v[0], -2.656e-3 + 6.08e-4j, 5e-9)
    _assert_close(dm.v[1], 0.117888 + 0.039296j, 5e-9)
    _assert_close(dm.v[2], 0.01896992 - 6.656e-5j, 5e-9)
    _assert_close(dm.v[3], 0.02503296 + 0.01887872j, 5e-9)
    assert dm.u0 == 0.0


def test_sigma1_ellipse(sigma1, ellipse_map):
    mv = forward_moments(ellipse_map, sigma1, 4)
    dm = dual_moments(ellipse_map, sigma1, 4)
    _assert_close(mv.t0, 0.91, 5e-9)
    _assert_close(mv.t[1], 0.15, 5e-9)
    _assert_close(dm.v0, -0.91, 5e-9)
    _assert_close(dm.v[1], 0.273, 5e-9)
    _assert_close(dm.v[3], 0.1638, 5e-9)
    for val in (mv.t[0], mv.t[2], mv.t[3], dm.v[0], dm.v[2]):
        assert abs(val) < 5e-12


def test_circle_trivial_moments(sigma1):
    # unit circle, sigma = 1: t0 = r^2, every t_k = 0
    mv = forward_moments(ExteriorMap(1.0, np.zeros(1, complex)), sigma1, 8)
    _assert_close(mv.t0, 1.0, 1e-13)
    assert np.max(np.abs(mv.t)) < 1e-13


# -- cylinder ------------------------------------------------------------------

def test_cylinder_tilted_map(cyl, tilted_map):
    mv = forward_moments(tilted_map, cyl, 4)
    dm = dual_moments(tilted_map, cyl, 4)
    _assert_close(mv.t0, 6.775211603721, 5e-9)
    _assert_close(mv.t[0], 1.325551031060e-2 - 9.068656241346e-2j, 5e-9)
    _assert_close(mv.t[1], 7.580934519776e-2 + 3.537307450641e-3j, 5e-9)
    _assert_close(mv.t[2], -1.439997726355e-2 - 7.042090895045e-3j, 5e-9)
    _assert_close(mv.t[3], -1.085047405098e-3 - 5.756619821632e-4j, 5e-9)
    _assert_close(dm.v0, -10.30976191743, 5e-8)
    _assert_close(dm.v[0], 1.103305785124e-2 + 1.017355371901e-1j, 5e-9)
    _assert_close(dm.v[1], 2.129281914657e-1 - 2.387698586162e-3j, 5e-9)
    _assert_close(dm.v[2], -6.966405687887e-2 + 6.910897048719e-2j, 5e-9)
    _assert_close(dm.v[3], 2.593512938065e-2 - 1.064385722213e-2j, 5e-9)
    assert dm.u0 == 0.0  # cylinder potential vanishes to second order at r0


# -- general family ---------------------------------------------------------------

def test_general_family_symmetric_map(gen4):
    m = ExteriorMap(1.2, np.array([0.0, 0.1 + 0.05j], complex))
    mv = forward_moments(m, gen4, 4)
    dm = dual_moments(m, gen4, 4)
    # t0 = x U'(x) counts the density mass from the edge of the support
    # (where C1 log x + C0 = 0), not from r0; the region integral over
    # D intersect annulus equals t0 minus g0 = r0^2 U'(r0^2).
    g0 = 1.5 * math.sqrt(math.log(0.65) + 0.5)
    _assert_close(mv.t0, 0.98182094492 + g0, 5e-9)
    _assert_close(mv.t[1], 2.416401464660e-2 - 1.208200732330e-2j, 5e-9)
    _assert_close(mv.t[3], -4.270108288683e-4 + 5.693477718244e-4j, 5e-9)
    _assert_close(dm.v0, -0.1065720068845, 5e-9)
    _assert_close(dm.v[1], 9.662544838876e-2 + 4.831272419438e-2j, 5e-9)
    _assert_close(dm.v[3], 1.042685974542e-2 + 1.390247966056e-2j, 5e-9)
    # odd orders vanish for a map with only even symmetry breaking
    for val in (mv.t[0], mv.t[2], dm.v[0], dm.v[2]):
        assert abs(val) < 1e-12


# -- guard rails -----------------------------------------------------------------

def test_forward_rejects_boundary_outside_annulus():
    from dtoda import cylinder
    tight = cylinder(2.0, 0.04, 1.0)  # r1 too small for the curve
    with pytest.raises(OutOfAnnulus):
        forward_moments(ExteriorMap(1.1, np.zeros(1, complex)), tight, 2)


def test_forward_verify_catches_underresolved(sigma1):
    # J = 25 wiggle with only 32 nodes aliases badly; doubling M moves the result
    rng = np.random.default_rng(3)
    u = np.zeros(26, complex)
    u[25] = 0.004
    m = ExteriorMap(1.0, u)
    with pytest.raises(QuadratureNotConverged):
        forward_moments(m, sigma1, 6, M=32)
    mv = forward_moments(m, sigma1, 6)  # default M resolves it
    # area/pi of the image of |w| = 1 under r w + u_J w^-J is r^2 - J |u_J|^2
    assert abs(mv.t0 - (1.0 - 25 * 0.004 ** 2)) < 1e-12


def test_moment_vector_roundtrip():
    mv = MomentVector(1.5, np.array([0.1 + 0.2j, -0.3j]))
    mv2 = moments_from_json_dict(mv.to_json_dict())
    assert mv2.t0 == mv.t0 and np.array_equal(mv2.t, mv.t)
    assert mv2.N == 2


# -- Cauchy transform and potential ------------------------------------------------

def test_cauchy_transform_expansions(sigma1, pert_map):
    N = 14
    mv = forward_moments(pert_map, sigma1, N)
    dm = dual_moments(pert_map, sigma1, N)
    # far outside: C(z) = -(t0 / z + sum v_k z^(-k-1))
    z = 6.0 + 2.0j
    k = np.arange(1, N + 1)
    want = -(mv.t0 / z + np.sum(dm.v * z ** (-k - 1.0)))
    assert abs(cauchy_transform(pert_map, sigma1, z) - want) < 1e-12
    # inside the curve: C(z) = sum k t_k z^(k-1)
    z = 0.2 - 0.1j
    want = np.sum(k * mv.t * z ** (k - 1.0))
    assert abs(cauchy_transform(pert_map, sigma1, z) - want) < 1e-10


def test_cauchy_transform_guards_contour(sigma1, pert_map):
    with pytest.raises(TooCloseToBoundary):
        cauchy_transform(pert_map, sigma1, 1.1001 + 0.0j, M=64)


@pytest.mark.filterwarnings("ignore::dtoda.errors.TruncationWarning")
def test_potential_field_continuous_across_boundary(cyl, tilted_map):
    N = 24
    mv = forward_moments(tilted_map, cyl, N)
    dm = dual_moments(tilted_map, cyl, N)
    theta = 0.83
    zb = tilted_map(complex(np.exp(1j * theta)))
    n = zb / abs(zb)
    eps = 1e-4
    inner = potential_field(tilted_map, mv, dm, cyl, zb - eps * n)
    outer = potential_field(tilted_map, mv, dm, cyl, zb + eps * n)
    assert abs(inner - outer) < 1e-3


@pytest.mark.filterwarnings("ignore::dtoda.errors.TruncationWarning")
def test_potential_field_matches_expansion_values(sigma1, ellipse_map):
    mv = forward_moments(ellipse_map, sigma1, 6)
    dm = dual_moments(ellipse_map, sigma1, 6)
    z = 4.0 + 1.0j
    k = np.arange(1, 7)
    want = dm.v0 + np.sum(2.0 * np.real(dm.v * z ** (-k.astype(float))) / k)
    assert abs(potential_field(ellipse_map, mv, dm, sigma1, z) - want) < 1e-14
    z = 0.3 + 0.2j
    x = abs(z) ** 2
    want = (-x + mv.t0 * np.log(x)
            + np.sum(2.0 * np.real(mv.t * z ** k)))
    assert abs(potential_field(ellipse_map, mv, dm, sigma1, z) - want) < 1e-14


def test_potential_field_warns_on_slow_truncation(sigma1, pert_map):
    mv = forward_moments(pert_map, sigma1, 2)
    dm = dual_moments(pert_map, sigma1, 2)
    from dtoda.errors import TruncationWarning
    with pytest.warns(TruncationWarning):
        potential_field(pert_map, mv, dm, sigma1, 1.5 + 0.4j)


def test_potential_field_rejects_point_below_annulus(gen4):
    m = ExteriorMap(1.2, np.zeros(1, complex))
    mv = forward_moments(m, gen4, 4)
    dm = dual_moments(m, gen4, 4)
    with pytest.raises(OutOfAnnulus):
        potential_field(m, mv, dm, gen4, 0.1 + 0.1j)
