"""Hot numerical kernels with a numba fast path and a pure-numpy fallback.

The backend is picked once at import time from the DTODA_BACKEND
environment variable ("numba" or "numpy").  When unset, numba is used if
it imports, numpy otherwise.  Both implementations are kept in sync and
are exercised against each other in the test suite.
"""

import math
import os

import numpy as np

__all__ = [
    "BACKEND",
    "laurent_eval",
    "laurent_deriv",
    "newton_invert",
    "power_sums",
    "log_energy_pairs",
    "warmup",
]

# Newton iterates falling below this modulus are abandoned: the target
# point is being pulled deep inside the unit disk.
_MIN_MODULUS = 0.05


# ----------------------------------------------------------------------
# pure numpy reference implementations
# ----------------------------------------------------------------------

def _np_laurent_eval(r, u, w):
    v = 1.0 / w
    acc = np.full_like(w, u[-1])
    for j in range(u.shape[0] - 2, -1, -1):
        acc = acc * v + u[j]
    return r * w + acc


def _np_laurent_deriv(r, u, w):
    J = u.shape[0] - 1
    if J == 0:
        return np.full_like(w, r + 0j)
    v = 1.0 / w
    acc = np.full_like(w, J * u[J])
    for j in range(J - 1, 0, -1):
        acc = acc * v + j * u[j]
    return r - acc * v * v


def _np_newton_invert(r, u, z, w0, tol, maxit):
    w = w0.astype(np.complex128).copy()
    ok = np.zeros(z.shape[0], dtype=bool)
    active = np.ones(z.shape[0], dtype=bool)
    scale = 1.0 + np.abs(z)
    for _ in range(maxit):
        if not active.any():
            break
        wa = w[active]
        f = _np_laurent_eval(r, u, wa) - z[active]
        done = np.abs(f) <= tol * scale[active]
        idx = np.flatnonzero(active)
        ok[idx[done]] = True
        still = ~done
        if not still.any():
            active[idx] = False
            continue
        df = _np_laurent_deriv(r, u, wa[still])
        step = np.where(np.abs(df) < 1e-300, 0.0, f[still] / df)
        wn = wa[still] - step
        w[idx[still]] = wn
        bad = (np.abs(wn) < _MIN_MODULUS) | (np.abs(df) < 1e-300)
        active[idx[done]] = False
        active[idx[still][bad]] = False
    return w, ok


def _np_power_sums(z, g, N):
    P = np.zeros(N + 1, dtype=np.complex128)
    Q = np.zeros(N + 1, dtype=np.complex128)
    P[0] = Q[0] = g.sum()
    a = g.copy()
    b = g.copy()
    iv = 1.0 / z
    for k in range(1, N + 1):
        a = a * iv
        b = b * z
        P[k] = a.sum()
        Q[k] = b.sum()
    return P, Q


def _np_log_energy_pairs(rho, wt, c0, C, nmax):
    big = np.maximum.outer(rho, rho)
    q = np.minimum.outer(rho, rho) / big
    a0 = wt * c0
    S = a0 @ np.log(big) @ a0
    qn = np.ones_like(q)
    cmax2 = float(np.max(np.abs(C))) ** 2 if C.size else 0.0
    for n in range(1, nmax + 1):
        qn = qn * q
        a = wt * C[:, n - 1]
        S -= (np.conj(a) @ (qn @ a)).real / n
        if n > 8 and cmax2 * np.max(qn * (1.0 - np.eye(len(rho)))) < 1e-17 * n:
            # off-diagonal tail negligible; finish the diagonal (q == 1) terms only
            rest = 0.0
            for m in range(n + 1, nmax + 1):
                rest += np.sum(wt * wt * np.abs(C[:, m - 1]) ** 2) / m
            S -= rest
            break
    return float(S)


# ----------------------------------------------------------------------
# numba twins
# ----------------------------------------------------------------------

def _build_numba():
    from numba import njit

    @njit(cache=True)
    def nb_laurent_eval(r, u, w):
        out = np.empty_like(w)
        J = u.shape[0] - 1
        for m in range(w.shape[0]):
            v = 1.0 / w[m]
            acc = u[J]
            for j in range(J - 1, -1, -1):
                acc = acc * v + u[j]
            out[m] = r * w[m] + acc
        return out

    @njit(cache=True)
    def nb_laurent_deriv(r, u, w):
        out = np.empty_like(w)
        J = u.shape[0] - 1
        for m in range(w.shape[0]):
            if J == 0:
                out[m] = r + 0j
                continue
            v = 1.0 / w[m]
            acc = J * u[J] + 0j
            for j in range(J - 1, 0, -1):
                acc = acc * v + j * u[j]
            out[m] = r - acc * v * v
        return out

    @njit(cache=True)
    def nb_newton_invert(r, u, z, w0, tol, maxit):
        n = z.shape[0]
        J = u.shape[0] - 1
        w = w0.copy()
        ok = np.zeros(n, dtype=np.bool_)
        for m in range(n):
            wm = w0[m]
            zt = z[m]
            scale = 1.0 + abs(zt)
            for _ in range(maxit):
                v = 1.0 / wm
                acc = u[J]
                for j in range(J - 1, -1, -1):
                    acc = acc * v + u[j]
                f = r * wm + acc - zt
                if abs(f) <= tol * scale:
                    ok[m] = True
                    break
                if J == 0:
                    df = r + 0j
                else:
                    acc2 = J * u[J] + 0j
                    for j in range(J - 1, 0, -1):
                        acc2 = acc2 * v + j * u[j]
                    df = r - acc2 * v * v
                if abs(df) < 1e-300:
                    break
                wm = wm - f / df
                if abs(wm) < _MIN_MODULUS:
                    break
            w[m] = wm
        return w, ok

    @njit(cache=True)
    def nb_power_sums(z, g, N):
        P = np.zeros(N + 1, dtype=np.complex128)
        Q = np.zeros(N + 1, dtype=np.complex128)
        for m in range(z.shape[0]):
            zm = z[m]
            gm = g[m]
            P[0] += gm
            Q[0] += gm
            iv = 1.0 / zm
            a = gm
            b = gm
            for k in range(1, N + 1):
                a = a * iv
                b = b * zm
                P[k] += a
                Q[k] += b
        return P, Q

    @njit(cache=True)
    def nb_log_energy_pairs(rho, wt, c0, C, nmax):
        n_nodes = rho.shape[0]
        cmax = 0.0
        for i in range(n_nodes):
            for n in range(C.shape[1]):
                a = abs(C[i, n])
                if a > cmax:
                    cmax = a
        cmax2 = cmax * cmax
        S = 0.0
        for i in range(n_nodes):
            for j in range(i + 1):
                ri = rho[i]
                rj = rho[j]
                if ri >= rj:
                    big = ri
                    q = rj / ri
                else:
                    big = rj
                    q = ri / rj
                val = c0[i] * c0[j] * math.log(big)
                qn = 1.0
                for n in range(1, nmax + 1):
                    qn *= q
                    ci = C[i, n - 1]
                    cj = C[j, n - 1]
                    val -= (qn / n) * (ci.real * cj.real + ci.imag * cj.imag)
                    if qn * cmax2 < 1e-17 * n:
                        break
                if i == j:
                    S += wt[i] * wt[j] * val
                else:
                    S += 2.0 * wt[i] * wt[j] * val
        return S

    return {
        "laurent_eval": nb_laurent_eval,
        "laurent_deriv": nb_laurent_deriv,
        "newton_invert": nb_newton_invert,
        "power_sums": nb_power_sums,
        "log_energy_pairs": nb_log_energy_pairs,
    }


_NUMPY_IMPL = {
    "laurent_eval": _np_laurent_eval,
    "laurent_deriv": _np_laurent_deriv,
    "newton_invert": _np_newton_invert,
    "power_sums": _np_power_sums,
    "log_energy_pairs": _np_log_energy_pairs,
}


def _select():
    choice = os.environ.get("DTODA_BACKEND", "").strip().lower()
    if choice not in ("", "numba", "numpy"):
        raise ValueError("DTODA_BACKEND must be 'numba' or 'numpy', got %r" % choice)
    if choice == "numpy":
        return "numpy", _NUMPY_IMPL
    try:
        impl = _build_numba()
        return "numba", impl
    except ImportError:
        if choice == "numba":
            raise
        return "numpy", _NUMPY_IMPL


BACKEND, _IMPL = _select()

laurent_eval = _IMPL["laurent_eval"]
laurent_deriv = _IMPL["laurent_deriv"]
newton_invert = _IMPL["newton_invert"]
power_sums = _IMPL["power_sums"]
log_energy_pairs = _IMPL["log_energy_pairs"]


def warmup():
    """Trigger JIT compilation of every kernel (no-op on numpy)."""
    w = np.exp(2j * np.pi * np.linspace(0.0, 1.0, 8, endpoint=False)) * 1.5
    u = np.array([0.1 + 0.05j, 0.02j], dtype=np.complex128)
    z = laurent_eval(1.0, u, w)
    laurent_deriv(1.0, u, w)
    newton_invert(1.0, u, z, w.copy(), 1e-12, 50)
    power_sums(z, np.ones_like(z), 4)
    rho = np.array([1.0, 1.2, 1.4])
    C = np.array([[0.3 + 0.1j, 0.05j], [0.2, 0.1], [0.1, 0.0j]], dtype=np.complex128)
    log_energy_pairs(rho, np.ones(3), np.ones(3), C, 8)
