"""Exterior conformal maps truncated to a Laurent polynomial.

z(w) = r w + sum_{j=0..J} u_j w^(-j) maps the exterior of the unit circle
onto the exterior of a closed curve.  r > 0 is the conformal radius and
fixes the rotational gauge (no rotation: the coefficient of w is real
positive).
"""

from dataclasses import dataclass

import numpy as np
import shapely

from . import backend
from .errors import (CoincidentPoints, DegenerateTangent, InsideDisk,
                     NoConvergence, PointInside)

_PRUNE = 1e-13
_NEWTON_TOL = 1e-12
_NEWTON_MAXIT = 50


@dataclass(frozen=True)
class ExteriorMap:
    conformal_radius: float
    coeffs: np.ndarray  # u_0 .. u_J, complex

    def __post_init__(self):
        if self.conformal_radius <= 0:
            raise ValueError("conformal radius must be positive")
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=np.complex128)).copy()
        if c.size == 0:
            c = np.zeros(1, dtype=np.complex128)
        # prune negligible coefficients; the declared truncation J is kept
        c[np.abs(c) < _PRUNE] = 0.0
        object.__setattr__(self, "coeffs", c)
        c.setflags(write=False)

    @property
    def J(self):
        return self.coeffs.shape[0] - 1

    def __call__(self, w):
        return eval_map(self, w)

    def to_json_dict(self):
        return {"r": float(self.conformal_radius),
                "coeffs": [[float(u.real), float(u.imag)] for u in self.coeffs]}


def map_from_json_dict(d):
    coeffs = np.array([complex(re, im) for re, im in d["coeffs"]],
                      dtype=np.complex128)
    if coeffs.size == 0:
        coeffs = np.zeros(1, dtype=np.complex128)
    return ExteriorMap(float(d["r"]), coeffs)


@dataclass(frozen=True)
class BoundaryCurve:
    """Discretized closed curve with tangents and outward unit normals."""

    samples: np.ndarray
    tangents: np.ndarray
    normals: np.ndarray

    @property
    def M(self):
        return self.samples.shape[0]


# ----------------------------------------------------------------------
# evaluation and inversion
# ----------------------------------------------------------------------

def eval_map(m, w):
    """z(w) for |w| >= 1; scalar in, scalar out."""
    scalar = np.isscalar(w)
    wa = np.atleast_1d(np.asarray(w, dtype=np.complex128))
    if np.any(np.abs(wa) < 1.0 - 1e-12):
        raise InsideDisk("map evaluation requires |w| >= 1")
    z = backend.laurent_eval(m.conformal_radius, m.coeffs, wa)
    return complex(z[0]) if scalar else z


def eval_map_deriv(m, w):
    """z'(w) for |w| >= 1; scalar in, scalar out."""
    scalar = np.isscalar(w)
    wa = np.atleast_1d(np.asarray(w, dtype=np.complex128))
    if np.any(np.abs(wa) < 1.0 - 1e-12):
        raise InsideDisk("map evaluation requires |w| >= 1")
    d = backend.laurent_deriv(m.conformal_radius, m.coeffs, wa)
    return complex(d[0]) if scalar else d


def _eval_free(m, w):
    """Evaluation without the |w| >= 1 guard (internal iteration use)."""
    return backend.laurent_eval(m.conformal_radius, m.coeffs,
                                np.asarray(w, dtype=np.complex128))


def winding_number(samples, z):
    """Winding of a closed polyline around z (nearest integer)."""
    rel = np.angle(np.concatenate([samples, samples[:1]]) - z)
    d = np.diff(rel)
    d = (d + np.pi) % (2.0 * np.pi) - np.pi
    return int(round(d.sum() / (2.0 * np.pi)))


def _start_guess(z, r):
    """Initial Newton iterate z / r, pushed onto the unit circle if inside."""
    w0 = np.asarray(z, dtype=np.complex128) / r
    a = np.abs(w0)
    small = a < 1.0
    if np.any(small):
        w0 = w0.copy()
        # keep the phase where defined; w = 0 has none, use 1
        denom = np.where(a[small] == 0.0, 1.0, a[small])
        w0[small] = np.where(a[small] == 0.0, 1.0, w0[small] / denom)
    return w0


def invert_point(m, z):
    """Solve z(w) = z by Newton from w0 = z / r; z must lie outside the curve."""
    z = complex(z)
    w0 = _start_guess(np.array([z]), m.conformal_radius)
    w, ok = backend.newton_invert(m.conformal_radius, m.coeffs,
                                  np.array([z]), w0, _NEWTON_TOL, _NEWTON_MAXIT)
    if ok[0] and abs(w[0]) >= 1.0 - 1e-9:
        return complex(w[0])
    # failure: decide between an interior target and a genuine stall
    M = max(512, 8 * (m.J + 1))
    theta = 2.0 * np.pi * np.arange(M) / M
    boundary = _eval_free(m, np.exp(1j * theta))
    if winding_number(boundary, z) != 0:
        raise PointInside("z=%s is enclosed by the boundary" % z)
    if ok[0]:
        raise PointInside("Newton landed inside the unit disk for z=%s" % z)
    raise NoConvergence("map inversion did not converge for z=%s" % z)


def invert_batch(m, z, w0=None):
    """Vectorized Newton inversion; returns (w, ok) without raising."""
    z = np.asarray(z, dtype=np.complex128)
    if w0 is None:
        w0 = _start_guess(z, m.conformal_radius)
    return backend.newton_invert(m.conformal_radius, m.coeffs, z,
                                 np.asarray(w0, dtype=np.complex128),
                                 _NEWTON_TOL, _NEWTON_MAXIT)


# ----------------------------------------------------------------------
# Green's function
# ----------------------------------------------------------------------

def green(m, z, zeta):
    """Dirichlet Green's function of the exterior domain.

    G(z, zeta) = log | (w(z) - w(zeta)) / (w(z) conj(w(zeta)) - 1) |
    """
    z = complex(z)
    zeta = complex(zeta)
    if abs(z - zeta) < 1e-14:
        raise CoincidentPoints("Green's function needs distinct arguments")
    wz = invert_point(m, z)
    wzeta = invert_point(m, zeta)
    return green_from_w(wz, wzeta)


def green_from_w(wz, wzeta):
    """Green's function directly from preimages (bypasses inversion)."""
    return float(np.log(abs((wz - wzeta) / (wz * np.conj(wzeta) - 1.0))))


# ----------------------------------------------------------------------
# univalence and boundary sampling
# ----------------------------------------------------------------------

def univalence_check(m, M=None):
    """True iff the truncated map is injective outside the unit disk.

    Three tests: z' bounded away from zero on |w| = 1, the boundary image
    is a simple curve, and z' has no zeros outside (argument principle on
    a slightly inflated circle).
    """
    ok, _ = univalence_report(m, M)
    return ok


def univalence_report(m, M=None):
    if M is None:
        M = max(256, 4 * (m.J + 1))
    theta = 2.0 * np.pi * np.arange(M) / M
    w = np.exp(1j * theta)
    dz = backend.laurent_deriv(m.conformal_radius, m.coeffs, w)
    if np.min(np.abs(dz)) <= 1e-10:
        return False, "z' vanishes on the unit circle"
    s = _eval_free(m, w)
    pts = np.column_stack([s.real, s.imag])
    ring = shapely.LineString(np.vstack([pts, pts[:1]]))
    if not ring.is_simple:
        return False, "boundary curve self-intersects"
    dz_out = backend.laurent_deriv(m.conformal_radius, m.coeffs,
                                   (1.0 + 1e-6) * w)
    ang = np.unwrap(np.angle(np.concatenate([dz_out, dz_out[:1]])))
    wind = int(round((ang[-1] - ang[0]) / (2.0 * np.pi)))
    if wind != 0:
        return False, "z' has zeros outside the unit circle"
    return True, ""


def boundary_curve(m, M):
    """Sample the boundary at w = exp(2 pi i m / M)."""
    theta = 2.0 * np.pi * np.arange(M) / M
    w = np.exp(1j * theta)
    samples = _eval_free(m, w)
    dz = backend.laurent_deriv(m.conformal_radius, m.coeffs, w)
    tangents = 1j * w * dz  # d z / d theta
    mags = np.abs(tangents)
    if np.min(mags) < 1e-12:
        raise DegenerateTangent("boundary tangent vanishes at a sample point")
    normals = -1j * tangents / mags
    return BoundaryCurve(samples, tangents, normals)
