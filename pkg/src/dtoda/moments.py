"""Harmonic moments of the exterior domain complement and their duals.

With dbar U = sigma on the annulus and gamma the image of the unit circle,

    t_k = 1/(2 pi i k) oint z^(-k) dU dz      (k >= 1)
    t0  = 1/(2 pi i)   oint dU dz
    v_k = 1/(2 pi i)   oint z^(+k) dU dz
    v0  = 1/(2 pi i)   oint (log|z|^2 dU - U/z) dz  -  u0

where dU = conj(z) U'(|z|^2) restricted to gamma.  All contour integrals
use the trapezoid rule in the map parameter, which is spectrally accurate
for analytic curves.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from . import backend, conformal
from .errors import (OutOfAnnulus, QuadratureNotConverged, TooCloseToBoundary,
                     TruncationWarning)


@dataclass(frozen=True)
class MomentVector:
    t0: float
    t: np.ndarray  # t_1 .. t_N, complex

    def __post_init__(self):
        arr = np.array(self.t, dtype=np.complex128)
        object.__setattr__(self, "t", arr)
        arr.setflags(write=False)

    @property
    def N(self):
        return self.t.shape[0]

    def to_json_dict(self):
        return {"t0": float(self.t0),
                "t": [[float(v.real), float(v.imag)] for v in self.t]}


def moments_from_json_dict(d):
    t = np.array([complex(re, im) for re, im in d.get("t", [])],
                 dtype=np.complex128)
    return MomentVector(float(d["t0"]), t)


@dataclass(frozen=True)
class DualMoments:
    v0: float
    v: np.ndarray  # v_1 .. v_N, complex
    u0: float

    def __post_init__(self):
        arr = np.array(self.v, dtype=np.complex128)
        object.__setattr__(self, "v", arr)
        arr.setflags(write=False)

    @property
    def N(self):
        return self.v.shape[0]

    def to_json_dict(self):
        return {"v0": float(self.v0), "u0": float(self.u0),
                "v": [[float(v.real), float(v.imag)] for v in self.v]}


# ----------------------------------------------------------------------

def _contour_data(m, d, M):
    bc = conformal.boundary_curve(m, M)
    x = np.abs(bc.samples) ** 2
    if not np.all(d.annulus.contains(x)):
        raise OutOfAnnulus("boundary curve leaves the annulus")
    g = np.conj(bc.samples) * d.dU(x) * bc.tangents
    return bc, x, g


def _raw_moments(m, d, N, M):
    bc, _, g = _contour_data(m, d, M)
    P, _ = backend.power_sums(bc.samples, g, N)
    t0 = P[0] / (1j * M)
    k = np.arange(1, N + 1)
    t = P[1:] / (1j * k * M)
    # roundoff floor of each sum: |z|^-k amplifies cancellation noise when
    # the domain sits inside the unit circle, so t_k that vanish exactly
    # still come back as eps * sum|g| * |z|^-k
    ag = np.abs(g)
    floor = np.empty(N + 1)
    floor[0] = ag.sum() / M
    if N:
        floor[1:] = (ag * np.abs(bc.samples) ** (-k[:, None])).sum(1) / (k * M)
    return t0, t, floor * np.finfo(float).eps


def _contour_samples(m, M):
    theta = 2.0 * np.pi * np.arange(M) / M
    return conformal._eval_free(m, np.exp(1j * theta))


def forward_moments(m, d, N, M=None, verify=True):
    """Moments t0, t_1..t_N of the map's exterior complement in (d)."""
    if M is None:
        M = max(256, 8 * N)
    t0, t, fl = _raw_moments(m, d, N, M)
    if verify:
        t0b, tb, flb = _raw_moments(m, d, N, 2 * M)
        gate = 1e-9 + 32.0 * np.maximum(fl, flb)
        bad = abs(t0b - t0) > gate[0]
        if N:
            bad = bad or bool(np.any(np.abs(tb - t) > gate[1:]))
        if bad:
            drift = max(abs(t0b - t0),
                        float(np.max(np.abs(tb - t))) if N else 0.0)
            raise QuadratureNotConverged(
                "moments changed by %.3e when doubling M=%d" % (drift, M))
        t0, t = t0b, tb
    if abs(t0.imag) > 1e-10:
        raise QuadratureNotConverged("Im t0 = %.3e exceeds 1e-10" % t0.imag)
    return MomentVector(float(t0.real), t)


def dual_moments(m, d, N, M=None):
    """Dual moments v0, v_1..v_N; v0 includes the inner-circle correction."""
    if M is None:
        M = max(256, 8 * N)
    bc, x, g = _contour_data(m, d, M)
    _, Q = backend.power_sums(bc.samples, g, N)
    k = np.arange(1, N + 1)
    v = Q[1:] / (1j * M)
    h = (np.log(x) * np.conj(bc.samples) * d.dU(x)
         - d.potential(x) / bc.samples) * bc.tangents
    v0c = h.sum() / (1j * M)
    if abs(v0c.imag) > 1e-9:
        raise QuadratureNotConverged("Im v0 = %.3e exceeds 1e-9" % v0c.imag)
    return DualMoments(float(v0c.real) - d.u0(), v, d.u0())


def potential_field(m, mv, dm, d, z):
    """The modified potential at z, from the interior or exterior expansion.

    Interior of the curve (and inside the annulus):
        -U(|z|^2) - u0 + t0 log|z|^2 + sum (t_k z^k + conj)
    Exterior:
        v0 + sum (v_k z^-k + conj) / k
    """
    z = complex(z)
    x = abs(z) ** 2
    M = max(512, 8 * (m.J + 1))
    boundary = _contour_samples(m, M)
    inside = conformal.winding_number(boundary, z) != 0
    if inside:
        if not d.annulus.contains(x):
            raise OutOfAnnulus("interior evaluation point below r0")
        k = np.arange(1, mv.N + 1)
        terms = 2.0 * np.real(mv.t * z ** k)
        val = -float(d.potential(x)) - d.u0() + mv.t0 * np.log(x) + terms.sum()
        _warn_truncation(terms, val)
        return float(val)
    k = np.arange(1, dm.N + 1)
    terms = 2.0 * np.real(dm.v * z ** (-k.astype(float))) / k
    val = dm.v0 + terms.sum()
    _warn_truncation(terms, val)
    return float(val)


def _warn_truncation(terms, total):
    if terms.size and abs(terms[-1]) > 1e-8 * max(1.0, abs(total)):
        warnings.warn("last series term %.3e is not negligible" % terms[-1],
                      TruncationWarning, stacklevel=3)


def cauchy_transform(m, d, z, M=None):
    """C(z) = 1/(2 pi i) oint dU(zeta) / (zeta - z) dzeta."""
    z = complex(z)
    if M is None:
        M = max(512, 8 * (m.J + 1))
    bc, x, g = _contour_data(m, d, M)
    step = float(np.max(np.abs(np.diff(np.concatenate([bc.samples,
                                                       bc.samples[:1]])))))
    if np.min(np.abs(bc.samples - z)) < 5.0 * step:
        raise TooCloseToBoundary(
            "z within five arc steps of the contour; refine M")
    return complex(np.sum(g / (bc.samples - z)) / (1j * M))
