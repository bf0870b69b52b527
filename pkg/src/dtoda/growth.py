"""Laplacian growth driven by t0, by two independent methods.

Moment-driven: t0 advances in fixed increments while t_k (k >= 1) are held
exactly at their initial values; each step solves the inverse moment
problem warm-started from the previous map.

Front-tracking: markers advance along outward normals with Darcy speed
V_n = |w'(z)| / (2 sigma), where |w'(z)| = 1 / |z'(w)| on the boundary;
each step refits a truncated exterior map to the markers, which keeps the
parametrization quasi-uniform and provides the normal field.
"""

from dataclasses import dataclass

import numpy as np
import shapely
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from . import backend, conformal
from .errors import (AdmissibleIntervalExceeded, BranchAmbiguity,
                     DegenerateTangent, FitResidualTooLarge, SelfIntersection)
from .inverse import InverseProblem, solve_domain
from .moments import MomentVector, forward_moments

_FIT_TOL = 1e-6  # relative residual threshold for map refitting


@dataclass(frozen=True)
class GrowthState:
    map: conformal.ExteriorMap
    t0: float
    conserved: MomentVector  # moments recorded at trajectory start
    step_index: int


@dataclass(frozen=True)
class Trajectory:
    states: list
    method: str  # MomentDriven | FrontTracking
    drift_report: np.ndarray  # (n_states, N) of |t_k - t_k(0)|


def initial_state(m, d, N=None):
    """Wrap a map as a trajectory start, recording its moments."""
    if N is None:
        N = m.J + 1
    mv = forward_moments(m, d, N)
    return GrowthState(m, mv.t0, mv, 0)


# ----------------------------------------------------------------------
# moment-driven growth
# ----------------------------------------------------------------------

def grow_moment_driven(s0, d, dt0, steps):
    if dt0 <= 0:
        raise ValueError("growth needs dt0 > 0 (suction is ill-posed)")
    lo, hi = d.admissible_t0()
    if not (lo < s0.t0 + steps * dt0 < hi):
        raise AdmissibleIntervalExceeded(
            "final t0=%g leaves the admissible interval (%g, %g)"
            % (s0.t0 + steps * dt0, lo, hi))
    states = [s0]
    m_prev = s0.map
    if m_prev.J + 1 < s0.conserved.N:
        m_prev = conformal.ExteriorMap(
            m_prev.conformal_radius,
            np.concatenate([m_prev.coeffs,
                            np.zeros(s0.conserved.N - m_prev.J - 1,
                                     np.complex128)]))
    for i in range(1, steps + 1):
        targets = MomentVector(s0.t0 + i * dt0, s0.conserved.t)
        sol = solve_domain(InverseProblem(targets, d, m_prev))
        m_prev = sol.map
        states.append(GrowthState(m_prev, targets.t0, s0.conserved, i))
    drift = np.zeros((steps + 1, s0.conserved.N))
    return Trajectory(states, "MomentDriven", drift)


# ----------------------------------------------------------------------
# front tracking
# ----------------------------------------------------------------------

def fit_map(markers, J, guess=None, iters=8):
    """Exterior map of truncation J through markers, by orthogonal-distance
    Gauss-Newton: marker angles carry the tangential slack, the map
    parameters absorb only the normal residual.  Returns (map, relative
    rms orthogonal distance).  The gauge r real > 0 is built into the
    unknown layout.
    """
    z = np.asarray(markers, dtype=np.complex128)
    M = z.shape[0]
    scale = float(np.max(np.abs(z - z.mean()))) or 1.0
    if guess is None:
        c = np.fft.fft(z) / M
        delta = np.angle(c[1])
        r = max(abs(c[1]), 1e-6 * scale)
        u = np.zeros(J + 1, dtype=np.complex128)
        j = np.arange(min(J + 1, M // 2))
        u[:j.shape[0]] = c[(-j) % M] * np.exp(1j * j * delta)
        th = 2.0 * np.pi * np.arange(M) / M + delta
    else:
        r = guess.conformal_radius
        u = np.zeros(J + 1, dtype=np.complex128)
        u[:min(J + 1, guess.J + 1)] = guess.coeffs[:J + 1]
        w0, _ = conformal.invert_batch(guess, z, w0=z / r)
        th = np.angle(w0)
    jj = np.arange(J + 1)
    resid = np.inf
    for _ in range(iters):
        for _ in range(2):  # closest-point sweep at fixed map
            w = np.exp(1j * th)
            zc = backend.laurent_eval(r, u, w)
            zt = 1j * w * backend.laurent_deriv(r, u, w)
            th = th - np.real((zc - z) * np.conj(zt)) / np.abs(zt) ** 2
        w = np.exp(1j * th)
        zc = backend.laurent_eval(r, u, w)
        zt = 1j * w * backend.laurent_deriv(r, u, w)
        n = -1j * zt / np.abs(zt)
        res_n = np.real((zc - z) * np.conj(n))
        new_resid = float(np.sqrt(np.mean(res_n ** 2))) / scale
        if new_resid <= 1e-10 or new_resid > 0.7 * resid:
            resid = min(resid, new_resid)
            break
        resid = new_resid
        en = np.exp(-1j * th[:, None] * jj[None, :]) * np.conj(n)[:, None]
        A = np.empty((M, 2 * J + 3))
        A[:, 0] = np.real(w * np.conj(n))
        A[:, 1::2] = en.real
        A[:, 2::2] = -en.imag
        delta_p, *_ = np.linalg.lstsq(A, -res_n, rcond=None)
        r += delta_p[0]
        if r <= 0:
            raise FitResidualTooLarge("fit collapsed to non-positive radius")
        u += delta_p[1::2] + 1j * delta_p[2::2]
    return conformal.ExteriorMap(float(r), u), resid


def _check_simple(samples):
    pts = np.column_stack([samples.real, samples.imag])
    ring = shapely.LineString(np.vstack([pts, pts[:1]]))
    if not ring.is_simple:
        raise SelfIntersection("advancing front self-intersects")


def grow_front_tracking(c0, d, dt, steps, refit_J, heun=False):
    markers = np.asarray(c0.samples, dtype=np.complex128)
    M = markers.shape[0]
    states = []
    drift_rows = []
    conserved = None
    m_fit = None
    for step in range(steps + 1):
        m_fit, resid = fit_map(markers, refit_J,
                               guess=m_fit if step else None)
        if resid > _FIT_TOL:
            raise FitResidualTooLarge(
                "marker fit residual %.3e exceeds %.0e at step %d"
                % (resid, _FIT_TOL, step))
        bc = conformal.boundary_curve(m_fit, M)
        _check_simple(bc.samples)
        mv = forward_moments(m_fit, d, refit_J + 1, verify=False)
        if conserved is None:
            conserved = mv
        states.append(GrowthState(m_fit, mv.t0, conserved, step))
        drift_rows.append(np.abs(mv.t - conserved.t))
        if step == steps:
            break
        markers = _advance(bc, m_fit, d, dt, heun, refit_J)
    return Trajectory(states, "FrontTracking", np.asarray(drift_rows))


def _speeds(bc, m, d):
    theta = 2.0 * np.pi * np.arange(bc.M) / bc.M
    dz = backend.laurent_deriv(m.conformal_radius, m.coeffs,
                               np.exp(1j * theta))
    sig = d.sigma(np.abs(bc.samples) ** 2)
    return 1.0 / (np.abs(dz) * 2.0 * sig), np.abs(dz), sig


def _advance(bc, m_fit, d, dt, heun, refit_J):
    V, absdz, sig = _speeds(bc, m_fit, d)
    spacing = absdz * (2.0 * np.pi / bc.M)
    cfl = 0.1 * float(np.min(sig * spacing * absdz))
    if dt > cfl:
        raise ValueError("dt=%g exceeds the CFL-like bound %g" % (dt, cfl))
    pred = bc.samples + dt * V * bc.normals
    if not heun:
        return pred
    m_pred, resid = fit_map(pred, refit_J, guess=m_fit)
    if resid > _FIT_TOL:
        raise FitResidualTooLarge("Heun predictor fit residual %.3e" % resid)
    bc2 = conformal.boundary_curve(m_pred, bc.M)
    V2, _, _ = _speeds(bc2, m_pred, d)
    return bc.samples + 0.5 * dt * (V * bc.normals + V2 * bc2.normals)


# ----------------------------------------------------------------------
# cone and cylinder images
# ----------------------------------------------------------------------

def _axis_crossing(samples):
    """Parametrize the closed curve by sample index and locate the first
    upward crossing of arg z through a multiple of 2 pi."""
    s = np.asarray(samples, dtype=np.complex128)
    wind = conformal.winding_number(s, 0.0)
    if wind == -1:  # enforce counterclockwise orientation
        s = s[::-1].copy()
    elif wind != 1:
        raise ValueError("curve must wind once around the origin")
    u = np.unwrap(np.angle(s))
    M = s.shape[0]
    tau = np.arange(M + 1, dtype=float)
    u_ext = np.append(u, u[0] + 2.0 * np.pi)
    sx = CubicSpline(tau, np.append(s.real, s.real[0]), bc_type="periodic")
    sy = CubicSpline(tau, np.append(s.imag, s.imag[0]), bc_type="periodic")
    su = CubicSpline(tau, u_ext)
    target = 2.0 * np.pi * np.ceil(u[0] / (2.0 * np.pi))
    if abs(u[0] - target) < 1e-14:
        tau_star = 0.0
    else:
        hits = [t for t in np.atleast_1d(su.solve(target, extrapolate=False))
                if 0.0 <= t <= M]
        if not hits:
            raise ValueError("curve never crosses the positive real axis")
        tau_star = float(min(hits))
    slope = float(su(tau_star, 1))
    mean_slope = 2.0 * np.pi / M
    if abs(slope) < 1e-8 * mean_slope:
        raise BranchAmbiguity("curve crosses the positive real axis tangentially")
    return sx, sy, su, tau_star, target, M


def _open_curve(samples):
    """Resampled closed curve starting at the axis crossing.

    Returns (z, phase, dz_dtau) arrays of length M+1; phase runs 0..2 pi.
    """
    sx, sy, su, tau_star, target, M = _axis_crossing(samples)
    tau = tau_star + np.arange(M + 1, dtype=float)
    wrap = tau > M
    tw = np.where(wrap, tau - M, tau)
    z = sx(tw) + 1j * sy(tw)
    phase = np.where(wrap, su(tw) + 2.0 * np.pi, su(tw)) - target
    dz = sx(tw, 1) + 1j * sy(tw, 1)
    # endpoints are the same physical point on the two sides of the cut
    phase[0] = 0.0
    phase[-1] = 2.0 * np.pi
    return z, phase, dz


def _image_curve(Z, dZ):
    mags = np.abs(dZ)
    if np.min(mags) < 1e-12:
        raise DegenerateTangent("image tangent vanishes at a sample point")
    return conformal.BoundaryCurve(Z, dZ, -1j * dZ / mags)


def map_to_cone(c, alpha):
    """Image of the curve under Z = z^alpha with a continuous branch.

    The cut lies along arg z = 0; the returned open curve starts and ends
    on the sector's boundary rays at the same distance from the origin.
    """
    z, phase, dz = _open_curve(c.samples)
    Z = np.abs(z) ** alpha * np.exp(1j * alpha * phase)
    dZ = alpha * Z * dz / z
    return _image_curve(Z, dZ)


def map_to_cylinder(c, R, r0):
    """Image under Z = R log(z / r0); Im Z unwrapped into [0, 2 pi R)."""
    z, phase, dz = _open_curve(c.samples)
    Z = R * (np.log(np.abs(z) / r0) + 1j * phase)
    if abs(Z[0].real - Z[-1].real) > 1e-8:
        raise BranchAmbiguity("strip endpoints disagree in Re Z: %.3e"
                              % abs(Z[0].real - Z[-1].real))
    dZ = R * dz / z
    return _image_curve(Z, dZ)
