"""Three routes to the tau-function F and finite differences on the moment lattice.

F = -(1/pi^2) int int sigma(z) log|1/z - 1/zeta| sigma(zeta) d2z d2zeta
over (A intersect D)^2.

Routes:
* DoubleIntegral - honest quadrature.  On the t0-line the angular
  integrals collapse and F becomes a single radial integral with the
  closed primitive x U'(x) log x - U(x); off the line the domain is split
  into the largest centered disk plus a polar shell whose log-kernel is
  expanded in an angular Fourier series of the inside-arc indicator.
* MomentIdentity - 2F = -(1/pi) int Uo d2z + t0 v0 + sum(t_k v_k + conj)
  - u0 t0 + u0 r0^2 U'(r0^2), with the U-sigma integral reduced to a
  contour integral for the homogeneous and cylinder families.
* ClosedForm - per-family F(t0) on the t0-line.

Derivatives of F treat (t0, Re t_k, Im t_k) as independent coordinates:
every stencil node re-solves the inverse problem and re-evaluates F.
"""

from dataclasses import dataclass
from itertools import product

import numpy as np

from . import backend, conformal, quadrature
from .errors import (DtodaError, NoiseFloor, OutOfAdmissibleInterval,
                     OutOfAnnulus, QuadratureNotConverged, StencilInfeasible,
                     ToleranceNotReached)
from .inverse import InverseProblem, cold_start_map, solve_domain
from .moments import MomentVector, dual_moments, forward_moments


@dataclass(frozen=True)
class TauSample:
    value: float
    method: str  # DoubleIntegral | MomentIdentity | ClosedForm
    moments: MomentVector
    estimated_error: float


@dataclass(frozen=True)
class DerivativeStencil:
    """FD configuration; step_tk is the prefactor of r^k for the t_k axes."""

    base: MomentVector
    step_t0: float = 0.0  # 0 -> default 1e-3 * max(1, |t0|)
    step_tk: float = 1e-3
    scheme: str = "Central2"

    def __post_init__(self):
        if self.scheme not in ("Central2", "Central4"):
            raise ValueError("scheme must be Central2 or Central4")


@dataclass(frozen=True)
class T0LineProfile:
    """Closed-form F and its first three t0-derivatives on the t0-line."""

    F: float
    v0: float
    log_r_sq: float
    F3: float


# ----------------------------------------------------------------------
# closed forms on the t0-line
# ----------------------------------------------------------------------

def t0_line_profile(d, t0):
    d.radius_sq_from_t0(t0)  # admissibility; raises OutOfAdmissibleInterval
    p = d.params
    u0 = d.u0()
    if d.family == "homogeneous":
        c, al = p["c"], p["alpha"]
        x0 = d.annulus.r0_sq
        c0 = (c * c * x0 ** (2.0 * al) / (4.0 * al ** 3)) \
            * (2.0 * al * np.log(x0) - 1.0) if x0 > 0 else 0.0
        lg = np.log(al * t0 / c)
        F = (t0 * t0 / (2.0 * al)) * lg - 3.0 * t0 * t0 / (4.0 * al) - u0 * t0 + c0
        v0 = (t0 / al) * (lg - 1.0) - u0
        return T0LineProfile(float(F), float(v0), float(lg / al), float(1.0 / (al * t0)))
    if d.family == "cylinder":
        R = p["R"]
        s = np.log(d.annulus.r0_sq)
        F = t0 ** 3 / (6.0 * R) + 0.5 * t0 * t0 * s
        v0 = t0 * t0 / (2.0 * R) + t0 * s
        return T0LineProfile(float(F), float(v0), float(t0 / R + s), float(1.0 / R))
    if d.family == "general":
        C1, C0, k = p["C1"], p["C0"], p["k"]
        nu = (k - 1.0) / (k - 2.0)
        s = np.log(d.annulus.r0_sq)
        B0 = C1 * s + C0
        a_k = (1.0 / k) * (k - 2.0) ** (k - 2.0) / (k - 1.0) ** (k - 1.0)
        K0 = (C1 * C1 * nu * nu / (2.0 * nu - 1.0)) * B0 ** (2.0 * nu - 2.0) \
            * ((nu - 1.0) * s - C0 / (2.0 * C1))
        A = a_k / C1 ** (k - 1.0)
        F = A * t0 ** k - (C0 / (2.0 * C1)) * t0 * t0 - u0 * t0 + K0
        v0 = k * A * t0 ** (k - 1.0) - (C0 / C1) * t0 - u0
        F2 = k * (k - 1.0) * A * t0 ** (k - 2.0) - C0 / C1
        F3 = k * (k - 1.0) * (k - 2.0) * A * t0 ** (k - 3.0)
        return T0LineProfile(float(F), float(v0), float(F2), float(F3))
    raise ValueError("no closed form for the %r family" % d.family)


def tau_t0_closed(d, t0):
    prof = t0_line_profile(d, t0)
    mv = MomentVector(float(t0), np.zeros(0, dtype=np.complex128))
    return TauSample(prof.F, "ClosedForm", mv, 1e-14 * (1.0 + abs(prof.F)))


# ----------------------------------------------------------------------
# the U-sigma area integral
# ----------------------------------------------------------------------

def u_sigma_over_pi(m, d, M=2048, force=None, tol=1e-11):
    """(1/pi) * double integral of U sigma over A intersect D.

    Contour route (homogeneous: U sigma proportional to dbar(U dU);
    cylinder: U sigma = dbar(U dU)/3) when available, polar shell
    quadrature otherwise.
    """
    route = force or ("contour" if d.family in ("homogeneous", "cylinder")
                      else "shell")
    if route == "contour":
        bc = conformal.boundary_curve(m, M)
        x = np.abs(bc.samples) ** 2
        if not np.all(d.annulus.contains(x)):
            raise OutOfAnnulus("boundary curve leaves the annulus")
        f = d.x_dU(x)
        if d.family == "homogeneous":
            c, al = d.params["c"], d.params["alpha"]
            x0 = d.annulus.r0_sq
            ring = np.sum(f * f * bc.tangents / bc.samples) / (1j * M)
            inner = c * c * x0 ** (2.0 * al) / (2.0 * al ** 3) if x0 > 0 else 0.0
            val = ring / (2.0 * al) - inner
        else:
            beta = 1.0 / d.params["R"]
            ring = np.sum(f ** 3 * bc.tangents / bc.samples) / (1j * M)
            val = beta * ring / 6.0
        if abs(val.imag) > 1e-9 * (1.0 + abs(val.real)):
            raise QuadratureNotConverged("Im of contour U-sigma integral %.3e"
                                         % val.imag)
        return float(val.real)
    # polar shell route, valid for every family on star-shaped curves
    bc = conformal.boundary_curve(m, max(M, 1024))
    x = np.abs(bc.samples) ** 2
    if not np.all(d.annulus.contains(x)):
        raise OutOfAnnulus("boundary curve leaves the annulus")
    pb = quadrature.PolarBoundary(bc.samples)
    if pb.rho_max - pb.rho_min <= 1e-12 * pb.rho_max:
        inner, _ = quadrature.radial_sigma_adaptive(
            d, d.annulus.r0_sq, pb.rho_max ** 2,
            lambda s: d.potential(s), tol)
        return float(inner)
    m_x = pb.rho_min ** 2
    inner, _ = quadrature.radial_sigma_adaptive(
        d, d.annulus.r0_sq, m_x, lambda s: d.potential(s), tol)
    total = np.pi * inner
    prev = None
    n_panel = 32
    for _ in range(6):
        rho, wt = quadrature.shell_rule(d, pb, n_panel)
        c0, _ = pb.fourier_arcs(rho, 0)
        shell = float(np.sum(wt * c0 * d.potential(rho * rho)))
        if prev is not None and abs(shell - prev) <= tol * (1.0 + abs(shell)):
            prev = shell
            break
        prev = shell
        n_panel *= 2
    return (total + prev) / np.pi


# ----------------------------------------------------------------------
# route 1: moment identity
# ----------------------------------------------------------------------

def tau_via_moments(mv, dm, d, m, M=None):
    """2F = -(1/pi) int U sigma + t0 v0 + sum(t_k v_k + conj) - u0 t0 + u0 g0."""
    if mv.N != dm.N:
        raise ValueError("moment and dual truncations differ")
    g0 = float(d.x_dU(d.annulus.r0_sq)) if d.annulus.r0_sq > 0 else 0.0
    iu = u_sigma_over_pi(m, d, M=M or 2048)
    cross = float(np.sum(2.0 * np.real(mv.t * dm.v)))
    twoF = -iu + mv.t0 * dm.v0 + cross + d.u0() * (g0 - mv.t0)
    F = 0.5 * twoF
    tail = abs(mv.t[-1] * dm.v[-1]) if mv.N else 0.0
    err = 0.5 * tail + 1e-12 * (1.0 + abs(F))
    return TauSample(float(F), "MomentIdentity", mv, float(err))


def tau_via_moments_auto(m, d, N=None, M=None, verify=True):
    """Convenience wrapper computing the moments and duals from the map."""
    if N is None:
        N = max(16, 2 * (m.J + 1))
    mv = forward_moments(m, d, N, M=M, verify=verify)
    dm = dual_moments(m, d, N, M=M)
    return tau_via_moments(mv, dm, d, m, M=M)


# ----------------------------------------------------------------------
# route 2: double integral
# ----------------------------------------------------------------------

def tau_double_integral(m, d, tol=1e-6):
    if np.all(m.coeffs == 0.0):
        return _tau_radial(m, d, tol)
    return _tau_polar(m, d, tol)


def _tau_radial(m, d, tol):
    x1 = m.conformal_radius ** 2
    if not d.annulus.contains(x1):
        raise OutOfAnnulus("circle radius outside the annulus")
    u0 = d.u0()

    def g(x):
        return d.sigma_log_primitive(x) - u0

    val, err = quadrature.radial_sigma_adaptive(
        d, d.annulus.r0_sq, x1, g, 0.25 * tol, n0=32, nmax=8192)
    if err > tol * (1.0 + abs(val)):
        raise ToleranceNotReached(
            "radial integral stabilized to %.3e > tol %.3e" % (err, tol))
    mv = MomentVector(float(d.x_dU(x1)), np.zeros(0, dtype=np.complex128))
    return TauSample(float(val), "DoubleIntegral", mv, float(err))


_POLAR_LEVELS = ((24, 192), (48, 768), (96, 3072), (192, 12288))


def _tau_polar(m, d, tol):
    bc = conformal.boundary_curve(m, 1024)
    x = np.abs(bc.samples) ** 2
    if not np.all(d.annulus.contains(x)):
        raise OutOfAnnulus("boundary curve leaves the annulus")
    pb = quadrature.PolarBoundary(bc.samples)
    r0sq = d.annulus.r0_sq
    m_x = pb.rho_min ** 2
    if pb.rho_max - pb.rho_min <= 1e-12 * pb.rho_max:
        # coefficients negligible: concentric-circle reduction
        u0 = d.u0()
        val, err = quadrature.radial_sigma_adaptive(
            d, r0sq, m_x, lambda s: d.sigma_log_primitive(s) - u0, 0.25 * tol)
        mv = forward_moments(m, d, max(4, m.J + 1), verify=False)
        return TauSample(float(val), "DoubleIntegral", mv, float(err))
    g0 = float(d.x_dU(r0sq)) if r0sq > 0 else 0.0
    P = d.sigma_primitive
    Qp = d.sigma_log_primitive

    # energy of the fully-circular inner region against itself
    if m_x > r0sq * (1.0 + 1e-14) or r0sq == 0.0:
        def g_in(s):
            return np.log(s) * (P(s) - g0)
        e_in, _ = quadrature.radial_sigma_adaptive(d, r0sq, m_x, g_in,
                                                   0.02 * tol)
        E_in_in = np.pi ** 2 * e_in
    else:
        E_in_in = 0.0
    Q_in = np.pi * (float(P(m_x)) - g0)
    L_in = 0.5 * np.pi * (float(Qp(m_x)) - float(Qp(r0sq)))

    prev = None
    est = np.inf
    for n_panel, nmax in _POLAR_LEVELS:
        rho, wt = quadrature.shell_rule(d, pb, n_panel)
        c0, C = pb.fourier_arcs(rho, nmax)
        logrho = np.log(rho)
        L_shell = float(np.sum(wt * c0 * logrho))
        I_shell = float(np.sum(wt * c0))
        E_ss = backend.log_energy_pairs(rho, wt, c0, C, nmax)
        E = E_in_in + 2.0 * Q_in * L_shell + E_ss
        I_A = Q_in + I_shell
        L = L_in + L_shell
        F = -(E - 2.0 * I_A * L) / np.pi ** 2
        if prev is not None:
            est = abs(F - prev)
            if est <= tol * (1.0 + abs(F)):
                mv = forward_moments(m, d, max(4, m.J + 1), verify=False)
                return TauSample(float(F), "DoubleIntegral", mv, float(est))
        prev = F
    raise ToleranceNotReached(
        "polar refinement stalled at %.3e > tol %.3e" % (est, tol))


# ----------------------------------------------------------------------
# finite differences over the moment lattice
# ----------------------------------------------------------------------

class TauLattice:
    """Cache of F evaluations at displaced moment vectors.

    Axis layout: 0 -> t0, 2k-1 -> Re t_k, 2k -> Im t_k (k = 1..N).
    Displacements are half-steps of the per-axis step h, so Richardson
    pairs share nodes.
    """

    def __init__(self, d, base, base_map=None, step_t0=0.0, step_tk=1e-3,
                 scheme="Central2", n_tau=None, m_quad=None, solver_tol=1e-12):
        self.d = d
        self.base = base
        N = base.N
        if base_map is None:
            prob = InverseProblem(base, d, cold_start_map(base, d), tol=solver_tol)
            base_map = solve_domain(prob).map
        if base_map.J + 1 < N:
            base_map = conformal.ExteriorMap(
                base_map.conformal_radius,
                np.concatenate([base_map.coeffs,
                                np.zeros(N - base_map.J - 1, np.complex128)]))
        self.m0 = base_map
        self.scheme = scheme
        self.solver_tol = solver_tol
        r = base_map.conformal_radius
        h = np.zeros(2 * N + 1)
        h[0] = step_t0 if step_t0 > 0 else 1e-3 * max(1.0, abs(base.t0))
        # a boundary wiggle of amplitude a in mode k moves t_k by
        # (sigma/k) r^(1-k) a, so equal-geometry steps must shrink with k
        # and follow r^(2-k); the clamp guards degenerate densities
        x_b = min(max(r * r, d.annulus.r0_sq * (1 + 1e-9)),
                  d.annulus.r1_sq * (1 - 1e-9))
        sigma_b = float(d.sigma(x_b))
        for k in range(1, N + 1):
            pref = min(10.0, max(0.1, sigma_b / k))
            h[2 * k - 1] = h[2 * k] = step_tk * pref * r ** (2 - k)
        self.h = h
        self.n_tau = n_tau if n_tau is not None else max(12, 2 * N + 4)
        self.m_quad = m_quad if m_quad is not None else max(512, 8 * self.n_tau)
        self._cache = {}
        self._lo, self._hi = d.admissible_t0()
        self.f_noise = 1e-12 * (1.0 + abs(self.value(np.zeros(2 * N + 1))))

    # -- node evaluation -------------------------------------------------

    def value(self, delta):
        key = tuple(float(np.round(v, 14)) for v in delta)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        t0 = self.base.t0 + delta[0]
        if not (self._lo < t0 < self._hi):
            raise StencilInfeasible("stencil node t0=%g leaves the admissible"
                                    " interval (%g, %g)" % (t0, self._lo, self._hi))
        t = self.base.t + (delta[1::2] + 1j * delta[2::2])
        targets = MomentVector(float(t0), t)
        try:
            sol = solve_domain(InverseProblem(targets, self.d, self.m0,
                                              tol=self.solver_tol))
            sample = tau_via_moments_auto(sol.map, self.d, N=self.n_tau,
                                          M=self.m_quad, verify=False)
        except StencilInfeasible:
            raise
        except DtodaError as exc:
            raise StencilInfeasible("stencil node failed: %s" % exc) from exc
        self._cache[key] = sample.value
        return sample.value

    def _node(self, offsets_half):
        """offsets_half: integer half-step offsets per axis."""
        return self.value(np.asarray(offsets_half, float) * (0.5 * self.h))

    # -- real-axis stencils ------------------------------------------------

    def _axis_stencil(self, p, scale_half):
        """1D central stencil for the p-th derivative.

        Returns (offsets in half-units, coefficients including 1/h^p);
        scale_half = 2 evaluates at step h, 1 at step h/2.
        """
        s = scale_half
        if self.scheme == "Central2":
            if p == 1:
                return (np.array([-s, s]), np.array([-0.5, 0.5]))
            if p == 2:
                return (np.array([-s, 0, s]), np.array([1.0, -2.0, 1.0]))
            if p == 3:
                return (np.array([-2 * s, -s, s, 2 * s]),
                        np.array([-0.5, 1.0, -1.0, 0.5]))
        else:
            if p == 1:
                return (np.array([-2 * s, -s, s, 2 * s]),
                        np.array([1.0 / 12, -8.0 / 12, 8.0 / 12, -1.0 / 12]))
            if p == 2:
                return (np.array([-2 * s, -s, 0, s, 2 * s]),
                        np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0)
            if p == 3:
                return (np.array([-3 * s, -2 * s, -s, s, 2 * s, 3 * s]),
                        np.array([-1.0, 8.0, -13.0, 13.0, -8.0, 1.0]) / 8.0)
        raise ValueError("stencil order must be 1..3")

    def fd_real(self, axes, scale_half):
        """Central FD of F along a multiset of real axes at step scale."""
        counts = {}
        for a in axes:
            counts[a] = counts.get(a, 0) + 1
        dims = sorted(counts)
        offs = [self._axis_stencil(counts[a], scale_half)[0] for a in dims]
        cofs = [self._axis_stencil(counts[a], scale_half)[1] for a in dims]
        n_ax = self.h.shape[0]
        total = 0.0
        abs_sum = 0.0
        for combo in product(*[range(o.shape[0]) for o in offs]):
            vec = np.zeros(n_ax)
            coeff = 1.0
            for d_i, a in enumerate(dims):
                vec[a] = offs[d_i][combo[d_i]]
                coeff *= cofs[d_i][combo[d_i]]
            if coeff == 0.0:
                continue
            denom = 1.0
            for a in dims:
                denom *= (0.5 * scale_half * self.h[a]) ** counts[a]
            total += (coeff / denom) * self._node(vec)
            abs_sum += abs(coeff / denom)
        return total, abs_sum

    def derivative_real(self, axes):
        """Richardson-extrapolated derivative along real axes, with error."""
        d_h, _ = self.fd_real(axes, 2)
        d_h2, abs_sum = self.fd_real(axes, 1)
        q = 2 if self.scheme == "Central2" else 4
        fac = 2.0 ** q
        extrap = (fac * d_h2 - d_h) / (fac - 1.0)
        fd_err = abs(d_h2 - d_h) / (fac - 1.0)
        noise = self.f_noise * abs_sum
        order = len(axes)
        if (noise > 0.5 * max(abs(extrap), fd_err)
                and noise > 1e-4 * (1.0 + abs(self._node(np.zeros(self.h.shape[0]))))
                and order >= 2):
            raise NoiseFloor("quadrature noise %.2e dominates FD signal %.2e"
                             % (noise, abs(extrap)))
        return extrap, fd_err + noise

    # -- complex assembly ---------------------------------------------------

    def derivative(self, which):
        """Derivative for a multi-index over (t0, t_k, conj t_k).

        Tokens: 0 means d/dt0, +k means d/dt_k, -k means d/d conj(t_k).
        Returns (value, error_bound); value is complex unless the index is
        pure t0.
        """
        if len(which) > 3:
            raise ValueError("derivatives above order 3 are not supported")
        N = self.base.N
        terms = {(): 1.0 + 0.0j}
        for tok in which:
            if tok == 0:
                parts = [(0, 1.0 + 0.0j)]
            else:
                k = abs(tok)
                if k > N:
                    raise ValueError("moment index %d beyond truncation %d" % (k, N))
                sgn = -1.0j if tok > 0 else 1.0j
                parts = [(2 * k - 1, 0.5 + 0.0j), (2 * k, 0.5 * sgn)]
            new = {}
            for axes, cf in terms.items():
                for a, ca in parts:
                    key = tuple(sorted(axes + (a,)))
                    new[key] = new.get(key, 0.0 + 0.0j) + cf * ca
            terms = new
        val = 0.0 + 0.0j
        err = 0.0
        for axes, cf in terms.items():
            v, e = self.derivative_real(axes)
            val += cf * v
            err += abs(cf) * e
        if all(tok == 0 for tok in which):
            return float(val.real), float(err)
        return complex(val), float(err)

    # -- aggregates used by the identity checks -----------------------------

    def gradient(self):
        """Real-axis gradient (2N+1,) with per-entry error bounds."""
        n = self.h.shape[0]
        g = np.zeros(n)
        e = np.zeros(n)
        for a in range(n):
            g[a], e[a] = self.derivative_real((a,))
        return g, e

    def hessian(self):
        """Real-axis Hessian (2N+1, 2N+1), Richardson-extrapolated."""
        n = self.h.shape[0]
        H = np.zeros((n, n))
        E = np.zeros((n, n))
        for a in range(n):
            for b in range(a, n):
                axes = (a, a) if a == b else (a, b)
                H[a, b], E[a, b] = self.derivative_real(axes)
                H[b, a], E[b, a] = H[a, b], E[a, b]
        return H, E

    def directional_third(self, dirs, h_scale=1.0):
        """Third directional derivative along three real direction vectors."""
        g1, g2, g3 = [np.asarray(g, float) for g in dirs]
        h = h_scale * self.h[0] * 10.0  # widened step: order-3 noise budget

        def fd(step):
            acc = 0.0
            for s1 in (-1.0, 1.0):
                for s2 in (-1.0, 1.0):
                    for s3 in (-1.0, 1.0):
                        delta = step * (s1 * g1 + s2 * g2 + s3 * g3)
                        acc += s1 * s2 * s3 * self.value(delta)
            return acc / (8.0 * step ** 3)

        d_h = fd(h)
        d_h2 = fd(0.5 * h)
        extrap = (4.0 * d_h2 - d_h) / 3.0
        return extrap, abs(d_h2 - d_h) / 3.0 + self.f_noise / (0.5 * h) ** 3


def tau_derivative(stencil, d, which, base_map=None):
    """Finite-difference derivative of F over the moment lattice.

    which: sequence of tokens (0 for t0, +k for t_k, -k for conj t_k),
    up to order 3.  Order-3 requests widen the steps tenfold to stay above
    the quadrature noise floor.  Returns (value, error_bound).
    """
    which = tuple(int(t) for t in which)
    widen = 10.0 if len(which) >= 3 else 1.0
    step_t0 = stencil.step_t0 if stencil.step_t0 > 0 \
        else 1e-3 * max(1.0, abs(stencil.base.t0))
    lat = TauLattice(d, stencil.base, base_map=base_map,
                     step_t0=widen * step_t0, step_tk=widen * stencil.step_tk,
                     scheme=stencil.scheme)
    return lat.derivative(which)
