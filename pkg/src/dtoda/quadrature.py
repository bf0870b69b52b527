"""Quadrature helpers: sigma-weighted radial rules and polar shell panels.

The double-integral tau evaluation decomposes the domain into the largest
centered disk plus a polar shell, where the boundary curve is described by
a periodic spline rho(phi).  The curve must be star-shaped with respect to
the origin for this description to apply.
"""

from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicSpline


@lru_cache(maxsize=64)
def _leggauss(n):
    return np.polynomial.legendre.leggauss(n)


def gauss_nodes(a, b, n):
    """Gauss-Legendre nodes and weights on (a, b)."""
    x, w = _leggauss(n)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return mid + half * x, half * w


def radial_rule(d, a, b, n):
    """Nodes x_i and weights W_i with sum W_i f(x_i) ~ int_a^b f(x) sigma(x) dx.

    Uses a log-radius transform; when a == 0 (homogeneous family with
    alpha > 0) the substitution xi = x^alpha makes the weight constant.
    """
    if a == 0.0:
        alpha = d.params["alpha"]
        c = d.params["c"]
        xi, wg = gauss_nodes(0.0, b ** alpha, n)
        x = xi ** (1.0 / alpha)
        return x, wg * (c / alpha)
    X, wg = gauss_nodes(np.log(a), np.log(b), n)
    x = np.exp(X)
    return x, wg * x * d.sigma(x)


def radial_sigma_integral(d, a, b, g, n):
    x, W = radial_rule(d, a, b, n)
    return float(np.dot(W, g(x)))


def radial_sigma_adaptive(d, a, b, g, tol, n0=32, nmax=4096):
    """Adaptive (doubling) version; returns (value, error_estimate)."""
    val = radial_sigma_integral(d, a, b, g, n0)
    n = n0
    err = np.inf
    while n < nmax:
        n *= 2
        new = radial_sigma_integral(d, a, b, g, n)
        err = abs(new - val)
        val = new
        if err <= tol * (1.0 + abs(val)):
            break
    return val, err


class PolarBoundary:
    """Periodic spline rho(phi) through curve samples; star-shaped required."""

    def __init__(self, samples):
        phi = np.unwrap(np.angle(samples))
        if phi[-1] < phi[0]:
            phi = phi[::-1]
            samples = samples[::-1]
        if np.any(np.diff(phi) <= 0):
            raise ValueError("curve is not star-shaped with respect to the origin")
        rho = np.abs(samples)
        self.phi0 = phi[0]
        phi_ext = np.append(phi, phi[0] + 2.0 * np.pi)
        rho_ext = np.append(rho, rho[0])
        self.spline = CubicSpline(phi_ext, rho_ext, bc_type="periodic")
        ext = self.spline.derivative().roots(extrapolate=False)
        cand = np.concatenate([self.spline(ext), [rho.min(), rho.max()]])
        self.rho_min = float(np.min(cand))
        self.rho_max = float(np.max(cand))
        self._crit = np.unique(np.concatenate([self.spline(ext),
                                               [self.rho_min, self.rho_max]]))

    def rho(self, phi):
        phi = np.asarray(phi, dtype=float)
        shifted = self.phi0 + np.mod(phi - self.phi0, 2.0 * np.pi)
        return self.spline(shifted)

    def critical_radii(self):
        """Sorted distinct radii where the arc structure changes."""
        vals = [self._crit[0]]
        for v in self._crit[1:]:
            if v - vals[-1] > 1e-12 * max(1.0, abs(v)):
                vals.append(v)
        return np.asarray(vals)

    def arcs(self, rho_val):
        """Angular intervals (a, b) with rho(phi) > rho_val, as unwrapped pairs."""
        if rho_val <= self.rho_min:
            return [(self.phi0, self.phi0 + 2.0 * np.pi)]
        if rho_val >= self.rho_max:
            return []
        roots = np.sort(self.spline.solve(rho_val, extrapolate=False))
        roots = roots[(roots >= self.phi0) & (roots < self.phi0 + 2.0 * np.pi)]
        if roots.size == 0:
            full = self.spline(self.phi0) > rho_val
            return [(self.phi0, self.phi0 + 2.0 * np.pi)] if full else []
        out = []
        for i in range(roots.size):
            a = roots[i]
            b = roots[i + 1] if i + 1 < roots.size else roots[0] + 2.0 * np.pi
            mid = 0.5 * (a + b)
            if self.rho(mid) > rho_val:
                out.append((a, b))
        return out

    def fourier_arcs(self, rho_vals, nmax):
        """Indicator measure c0 and Fourier coefficients of the inside arcs.

        c0(rho) = total angular measure, C[i, n-1] = sum over arcs of
        (exp(i n b) - exp(i n a)) / (i n).
        """
        rho_vals = np.asarray(rho_vals, dtype=float)
        c0 = np.zeros(rho_vals.shape[0])
        C = np.zeros((rho_vals.shape[0], nmax), dtype=np.complex128)
        n = np.arange(1, nmax + 1)
        for i, rv in enumerate(rho_vals):
            for a, b in self.arcs(rv):
                c0[i] += b - a
                C[i, :] += (np.exp(1j * n * b) - np.exp(1j * n * a)) / (1j * n)
        return c0, C


def shell_rule(d, pb, n_per_panel):
    """Radial nodes and sigma-weighted dRho weights over the polar shell.

    Panels split at the critical radii; inside each panel the substitution
    rho = a + (b - a) sin^2(pi s / 2) clusters nodes at both ends, where the
    arc measure has square-root kinks.  Weights are w * drho/ds * rho *
    sigma(rho^2), so sums against f(rho) approximate
    int rho sigma(rho^2) f(rho) drho over the shell.
    """
    crit = pb.critical_radii()
    if len(crit) < 2:  # concentric circle: the shell has zero width
        return np.zeros(0), np.zeros(0)
    rho_all = []
    wt_all = []
    for a, b in zip(crit[:-1], crit[1:]):
        s, ws = gauss_nodes(0.0, 1.0, n_per_panel)
        half = np.sin(0.5 * np.pi * s)
        rho = a + (b - a) * half * half
        drho = (b - a) * np.pi * half * np.cos(0.5 * np.pi * s)
        rho_all.append(rho)
        wt_all.append(ws * drho * rho * d.sigma(rho * rho))
    return np.concatenate(rho_all), np.concatenate(wt_all)
