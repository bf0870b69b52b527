"""Recover an exterior map from prescribed moments by damped Newton.

Unknowns are the conformal radius and the complex coefficients u_0 ..
u_{N-1}; residuals are the mismatches in (t0, Re t_k, Im t_k), k = 1..N.
The Jacobian is assembled by forward differences with step 1e-6 * r.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import conformal
from .density import BackgroundDensity
from .errors import (LeftAnnulus, MaxIterExceeded, OutOfAdmissibleInterval,
                     SingularJacobian, UnivalenceLost)
from .moments import MomentVector, forward_moments

_FD_REL = 1e-6
_COND_LIMIT = 1e12


@dataclass(frozen=True)
class InverseProblem:
    targets: MomentVector
    density: BackgroundDensity
    initial: conformal.ExteriorMap
    max_iter: int = 40
    tol: float = 1e-12

    def __post_init__(self):
        if self.tol < 1e-12:
            raise ValueError("tol below 1e-12 is not resolvable by the quadrature")
        if self.targets.N > self.initial.J + 1:
            raise ValueError("targets want %d coefficients, initial map carries %d"
                             % (self.targets.N, self.initial.J + 1))


@dataclass(frozen=True)
class InverseSolution:
    map: conformal.ExteriorMap
    residual_norm: float
    iterations: int
    jacobian_condition: float


def cold_start_map(targets, d, J=None):
    """Circle matching t0 alone: bisect x U'(x) = t0 over the annulus."""
    lo, hi = d.admissible_t0()
    if not (lo < targets.t0 < hi):
        raise OutOfAdmissibleInterval(
            "t0=%g outside admissible interval (%g, %g)" % (targets.t0, lo, hi))
    a = d.annulus.r0_sq if d.annulus.r0_sq > 0 else d.annulus.r1_sq * 1e-14
    x = brentq(lambda s: float(d.x_dU(s)) - targets.t0, a, d.annulus.r1_sq,
               xtol=1e-15, rtol=8.9e-16)
    J = targets.N - 1 if J is None else J
    return conformal.ExteriorMap(float(np.sqrt(x)), np.zeros(max(J + 1, 1),
                                                             dtype=np.complex128))


def _pack(m, N):
    p = np.zeros(1 + 2 * N)
    p[0] = m.conformal_radius
    head = m.coeffs[:N]
    p[1:1 + 2 * head.shape[0]:2] = head.real
    p[2:2 + 2 * head.shape[0]:2] = head.imag
    return p


def _unpack(p, tail):
    N = (p.shape[0] - 1) // 2
    coeffs = p[1::2] + 1j * p[2::2]
    if tail.shape[0] > N:
        coeffs = np.concatenate([coeffs, tail[N:]])
    return conformal.ExteriorMap(float(p[0]), coeffs)


def _residual(m, prob, M):
    mv = forward_moments(m, prob.density, prob.targets.N, M=M, verify=False)
    r = np.zeros(1 + 2 * prob.targets.N)
    r[0] = mv.t0 - prob.targets.t0
    dt = mv.t - prob.targets.t
    r[1::2] = dt.real
    r[2::2] = dt.imag
    return r


def _cheap_valid(m, d):
    """Fast sanity checks used while damping (full check done at the end)."""
    if m.conformal_radius <= 0:
        return False, "radius"
    M = max(128, 4 * (m.J + 1))
    theta = 2.0 * np.pi * np.arange(M) / M
    w = np.exp(1j * theta)
    try:
        s = conformal._eval_free(m, w)
    except Exception:
        return False, "eval"
    x = np.abs(s) ** 2
    if not np.all(d.annulus.contains(x)):
        return False, "annulus"
    from . import backend
    dz = backend.laurent_deriv(m.conformal_radius, m.coeffs, w)
    if np.min(np.abs(dz)) <= 1e-10:
        return False, "univalence"
    return True, ""


def solve_domain(prob, M=None):
    """Newton iteration with residual-based halving; raises on stall."""
    N = prob.targets.N
    if M is None:
        M = max(256, 8 * max(N, 1))
    tail = prob.initial.coeffs
    p = _pack(prob.initial, N)
    if p[0] <= 0:
        raise ValueError("initial map must have positive radius")
    r = _residual(_unpack(p, tail), prob, M)
    cond = 0.0
    for it in range(1, prob.max_iter + 1):
        if np.max(np.abs(r)) <= prob.tol:
            m = _unpack(p, tail)
            if not conformal.univalence_check(m):
                raise UnivalenceLost("converged map failed the univalence check")
            return InverseSolution(m, float(np.max(np.abs(r))), it - 1, float(cond))
        h = _FD_REL * p[0]
        Jm = np.empty((r.shape[0], p.shape[0]))
        for a in range(p.shape[0]):
            pa = p.copy()
            pa[a] += h
            Jm[:, a] = (_residual(_unpack(pa, tail), prob, M) - r) / h
        cond = np.linalg.cond(Jm)
        if not np.isfinite(cond) or cond > _COND_LIMIT:
            raise SingularJacobian("Jacobian condition number %.3e" % cond)
        step = np.linalg.solve(Jm, -r)
        scale = 1.0
        accepted = False
        last_reason = ""
        for _ in range(12):
            pn = p + scale * step
            if pn[0] <= 0:  # trial radius collapsed; halve, don't construct
                last_reason = "radius"
                scale *= 0.5
                continue
            mn = _unpack(pn, tail)
            okc, reason = _cheap_valid(mn, prob.density)
            if okc:
                rn = _residual(mn, prob, M)
                if np.max(np.abs(rn)) < np.max(np.abs(r)) or np.max(np.abs(rn)) <= prob.tol:
                    p, r = pn, rn
                    accepted = True
                    break
                last_reason = "residual"
            else:
                last_reason = reason
            scale *= 0.5
        if not accepted:
            if last_reason == "annulus":
                raise LeftAnnulus("damped steps cannot keep the curve in the annulus")
            if last_reason in ("univalence", "radius", "eval"):
                raise UnivalenceLost("damped steps cannot restore a univalent map")
            raise MaxIterExceeded("Newton stalled at residual %.3e" % np.max(np.abs(r)))
    if np.max(np.abs(r)) <= prob.tol:
        m = _unpack(p, tail)
        if not conformal.univalence_check(m):
            raise UnivalenceLost("converged map failed the univalence check")
        return InverseSolution(m, float(np.max(np.abs(r))), prob.max_iter, float(cond))
    raise MaxIterExceeded("no convergence in %d iterations (residual %.3e)"
                          % (prob.max_iter, float(np.max(np.abs(r)))))
