"""Radial background densities on an annulus.

A background is a rotation-invariant potential U(|z|^2) with density
sigma(|z|^2) = (x U'(x))' where x = |z|^2.  Four families are supported:

* homogeneous:  U = (c / alpha^2) x^alpha,      sigma = c x^(alpha-1)
* cylinder:     U = (R / 2) log^2(x / r0^2),    sigma = R / x
* general:      U = (C1 log x + C0)^nu,         nu = (k-1)/(k-2)
* tabulated:    natural cubic spline through samples of U on a
                log-radius grid (no extrapolation)

All families expose closed-form primitives used by the quadrature layer:
integral of sigma dx is x U'(x), integral of sigma log x dx is
x U'(x) log x - U(x).
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .errors import NonPositiveDensity, OutOfAdmissibleInterval, OutOfAnnulus

_FAMILIES = ("homogeneous", "cylinder", "general", "tabulated")

# relative slack when testing annulus membership
_ANNULUS_RTOL = 1e-9


@dataclass(frozen=True)
class Annulus:
    """Annulus r0 <= |z| <= r1 described by the squared radii."""

    r0_sq: float
    r1_sq: float

    def __post_init__(self):
        if not (0.0 <= self.r0_sq < self.r1_sq):
            raise ValueError("need 0 <= r0_sq < r1_sq, got (%g, %g)"
                             % (self.r0_sq, self.r1_sq))

    def contains(self, x):
        lo = self.r0_sq * (1.0 - _ANNULUS_RTOL)
        hi = self.r1_sq * (1.0 + _ANNULUS_RTOL)
        return np.logical_and(x >= lo, x <= hi)


@dataclass(frozen=True)
class BackgroundDensity:
    """A radial background on an annulus; construct via the factory helpers."""

    family: str
    params: dict
    annulus: Annulus
    _spline: object = field(default=None, repr=False, compare=False)

    # -- elementary evaluations ----------------------------------------

    def potential(self, x):
        x = np.asarray(x, dtype=float)
        p = self.params
        if self.family == "homogeneous":
            return (p["c"] / p["alpha"] ** 2) * x ** p["alpha"]
        if self.family == "cylinder":
            return 0.5 * p["R"] * np.log(x / self.annulus.r0_sq) ** 2
        if self.family == "general":
            nu = _nu(p["k"])
            return (p["C1"] * np.log(x) + p["C0"]) ** nu
        return self._spline(np.log(x))

    def dU(self, x):
        """U'(x)."""
        x = np.asarray(x, dtype=float)
        p = self.params
        if self.family == "homogeneous":
            return (p["c"] / p["alpha"]) * x ** (p["alpha"] - 1.0)
        if self.family == "cylinder":
            return p["R"] * np.log(x / self.annulus.r0_sq) / x
        if self.family == "general":
            nu = _nu(p["k"])
            base = p["C1"] * np.log(x) + p["C0"]
            return nu * p["C1"] * base ** (nu - 1.0) / x
        return self._spline(np.log(x), 1) / x

    def x_dU(self, x):
        """x U'(x); equals t0 when x is the squared boundary radius."""
        return np.asarray(x, dtype=float) * self.dU(x)

    def sigma(self, x):
        x = np.asarray(x, dtype=float)
        p = self.params
        if self.family == "homogeneous":
            return p["c"] * x ** (p["alpha"] - 1.0)
        if self.family == "cylinder":
            return p["R"] / x
        if self.family == "general":
            nu = _nu(p["k"])
            base = p["C1"] * np.log(x) + p["C0"]
            return p["C1"] ** 2 * nu * (nu - 1.0) * base ** (nu - 2.0) / x
        return self._spline(np.log(x), 2) / x

    # -- derived quantities ---------------------------------------------

    def u0(self):
        """u0 = r0^2 log(r0^2) U'(r0^2) - U(r0^2); zero in the r0 -> 0 limit."""
        x0 = self.annulus.r0_sq
        if x0 == 0.0:
            return 0.0
        return float(x0 * np.log(x0) * self.dU(x0) - self.potential(x0))

    def sigma_primitive(self, x):
        """Antiderivative of sigma: x U'(x)."""
        return self.x_dU(x)

    def sigma_log_primitive(self, x):
        """Antiderivative of sigma(x) log x: x U'(x) log x - U(x)."""
        x = np.asarray(x, dtype=float)
        # at x = 0 (homogeneous, alpha > 0) the primitive tends to 0
        with np.errstate(divide="ignore", invalid="ignore"):
            val = self.x_dU(x) * np.log(x) - self.potential(x)
        return np.where(x == 0.0, 0.0, val)

    def admissible_t0(self):
        """Open interval of t0 values whose circle |z|^2 = x fits the annulus."""
        lo = 0.0 if self.annulus.r0_sq == 0.0 else float(self.x_dU(self.annulus.r0_sq))
        hi = float(self.x_dU(self.annulus.r1_sq))
        return lo, hi

    def radius_sq_from_t0(self, t0):
        """Invert t0 = x U'(x) for x; monotone since sigma > 0."""
        lo, hi = self.admissible_t0()
        if not (lo < t0 < hi):
            raise OutOfAdmissibleInterval(
                "t0=%g outside admissible interval (%g, %g)" % (t0, lo, hi))
        p = self.params
        if self.family == "homogeneous":
            return float((p["alpha"] * t0 / p["c"]) ** (1.0 / p["alpha"]))
        if self.family == "cylinder":
            return float(self.annulus.r0_sq * np.exp(t0 / p["R"]))
        if self.family == "general":
            nu = _nu(p["k"])
            base = (t0 / (p["C1"] * nu)) ** (p["k"] - 2.0)
            return float(np.exp((base - p["C0"]) / p["C1"]))
        a, b = self.annulus.r0_sq, self.annulus.r1_sq
        return float(brentq(lambda x: float(self.x_dU(x)) - t0, a, b,
                            xtol=1e-15, rtol=1e-15))

    # -- parameter derivatives (used by identity checks) -----------------

    def with_param(self, name, value):
        """Return a copy with one named family parameter replaced."""
        p = dict(self.params)
        ann = self.annulus
        if name == "beta":
            if self.family != "cylinder":
                raise ValueError("beta is a cylinder parameter")
            p["R"] = 1.0 / value
        elif name == "log_r0_sq":
            ann = Annulus(float(np.exp(value)), ann.r1_sq)
        elif name in p:
            p[name] = value
        else:
            raise ValueError("unknown parameter %r for family %r" % (name, self.family))
        return _build(self.family, p, ann)

    def param_value(self, name):
        if name == "beta":
            return 1.0 / self.params["R"]
        if name == "log_r0_sq":
            return float(np.log(self.annulus.r0_sq))
        return self.params[name]

    def dU_dparam(self, name, x):
        """Partial of U(x) with respect to a named parameter, at fixed x."""
        x = np.asarray(x, dtype=float)
        p = self.params
        if self.family == "homogeneous":
            if name == "c":
                return x ** p["alpha"] / p["alpha"] ** 2
        if self.family == "cylinder":
            L = np.log(x / self.annulus.r0_sq)
            if name == "R":
                return 0.5 * L ** 2
            if name == "beta":
                return -0.5 * p["R"] ** 2 * L ** 2
            if name == "log_r0_sq":
                return -p["R"] * L
        if self.family == "general":
            nu = _nu(p["k"])
            base = p["C1"] * np.log(x) + p["C0"]
            if name == "C0":
                return nu * base ** (nu - 1.0)
            if name == "C1":
                return nu * base ** (nu - 1.0) * np.log(x)
        raise ValueError("no analytic dU for parameter %r of %r" % (name, self.family))

    def du0_dparam(self, name):
        p = self.params
        x0 = self.annulus.r0_sq
        if self.family == "cylinder":
            # U and U' both vanish at r0^2 for every R and r0
            if name in ("R", "beta", "log_r0_sq"):
                return 0.0
        if self.family == "homogeneous":
            if name == "c":
                return self.u0() / p["c"]
        if self.family == "general":
            nu = _nu(p["k"])
            s = np.log(x0)
            b0 = p["C1"] * s + p["C0"]
            if name == "C0":
                return float(s * p["C1"] * nu * (nu - 1.0) * b0 ** (nu - 2.0)
                             - nu * b0 ** (nu - 1.0))
            if name == "C1":
                return float(p["C1"] * nu * (nu - 1.0) * b0 ** (nu - 2.0) * s ** 2)
        raise ValueError("no analytic du0 for parameter %r of %r" % (name, self.family))

    # -- serialization ---------------------------------------------------

    def to_json_dict(self):
        d = {"family": self.family,
             "r0_sq": self.annulus.r0_sq, "r1_sq": self.annulus.r1_sq}
        if self.family == "tabulated":
            d["log_x"] = list(map(float, self.params["log_x"]))
            d["U"] = list(map(float, self.params["U"]))
        else:
            d.update({k: float(v) for k, v in self.params.items()})
        return d


def _nu(k):
    return (k - 1.0) / (k - 2.0)


def _build(family, params, annulus):
    """Validate and construct; all factories funnel through here."""
    spline = None
    if family == "homogeneous":
        c, alpha = params["c"], params["alpha"]
        if c <= 0 or alpha == 0:
            raise ValueError("homogeneous needs c > 0 and alpha != 0")
        if alpha < 0 and annulus.r0_sq == 0.0:
            raise ValueError("alpha < 0 requires r0 > 0")
    elif family == "cylinder":
        if params["R"] <= 0:
            raise ValueError("cylinder needs R > 0")
        if annulus.r0_sq == 0.0:
            raise ValueError("cylinder requires r0 > 0")
    elif family == "general":
        C1, C0, k = params["C1"], params["C0"], params["k"]
        if C1 <= 0 or k <= 2:
            raise ValueError("general family needs C1 > 0 and k > 2")
        if annulus.r0_sq == 0.0 or np.log(annulus.r0_sq) * C1 + C0 <= 0:
            raise NonPositiveDensity(
                "general family needs r0_sq > exp(-C0/C1) so the base stays positive")
    elif family == "tabulated":
        X = np.asarray(params["log_x"], dtype=float)
        Uvals = np.asarray(params["U"], dtype=float)
        if X.ndim != 1 or X.size < 4 or np.any(np.diff(X) <= 0):
            raise ValueError("tabulated grid must be increasing with >= 4 points")
        if annulus.r0_sq == 0.0:
            raise ValueError("tabulated requires r0 > 0")
        if np.log(annulus.r0_sq) < X[0] - 1e-12 or np.log(annulus.r1_sq) > X[-1] + 1e-12:
            raise OutOfAnnulus("annulus exceeds the tabulated grid; no extrapolation")
        spline = CubicSpline(X, Uvals, bc_type="natural")
    else:
        raise ValueError("unknown family %r" % family)

    d = BackgroundDensity(family, dict(params), annulus, spline)
    _check_positive(d)
    return d


def _check_positive(d):
    a, b = d.annulus.r0_sq, d.annulus.r1_sq
    lo = a if a > 0 else b * 1e-12
    grid = np.exp(np.linspace(np.log(lo), np.log(b), 64))
    s = d.sigma(grid)
    if not np.all(s > 0):
        raise NonPositiveDensity("sigma not strictly positive on the annulus")


# -- factories ------------------------------------------------------------

def homogeneous(c, alpha, r0_sq, r1_sq):
    return _build("homogeneous", {"c": float(c), "alpha": float(alpha)},
                  Annulus(float(r0_sq), float(r1_sq)))


def cylinder(R, r0_sq, r1_sq):
    return _build("cylinder", {"R": float(R)}, Annulus(float(r0_sq), float(r1_sq)))


def general_family(C1, C0, k, r0_sq, r1_sq):
    return _build("general", {"C1": float(C1), "C0": float(C0), "k": float(k)},
                  Annulus(float(r0_sq), float(r1_sq)))


def tabulated_radial(log_x, U, r0_sq, r1_sq):
    return _build("tabulated", {"log_x": np.asarray(log_x, float),
                                "U": np.asarray(U, float)},
                  Annulus(float(r0_sq), float(r1_sq)))


def density_from_json_dict(d):
    fam = d["family"]
    if fam == "homogeneous":
        return homogeneous(d["c"], d["alpha"], d["r0_sq"], d["r1_sq"])
    if fam == "cylinder":
        return cylinder(d["R"], d["r0_sq"], d["r1_sq"])
    if fam == "general":
        return general_family(d["C1"], d["C0"], d["k"], d["r0_sq"], d["r1_sq"])
    if fam == "tabulated":
        return tabulated_radial(d["log_x"], d["U"], d["r0_sq"], d["r1_sq"])
    raise ValueError("unknown family %r" % fam)


# -- spec-level ops --------------------------------------------------------

def _check_in_annulus(d, x):
    if not np.all(d.annulus.contains(x)):
        raise OutOfAnnulus("argument outside [r0^2, r1^2]")


def eval_potential(d, x):
    """U(x) for x = |z|^2 inside the annulus."""
    _check_in_annulus(d, x)
    out = d.potential(x)
    return float(out) if np.isscalar(x) else out


def eval_sigma(d, x):
    """sigma(x) for x = |z|^2 inside the annulus."""
    _check_in_annulus(d, x)
    out = d.sigma(x)
    return float(out) if np.isscalar(x) else out


def u0_constant(d):
    """The additive constant r0^2 log(r0^2) U'(r0^2) - U(r0^2)."""
    return d.u0()
