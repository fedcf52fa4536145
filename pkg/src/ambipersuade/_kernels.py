"""Hot loops with a numba path and a pure-numpy fallback.

Set ``AMBIPERSUADE_DISABLE_NUMBA=1`` to force the numpy versions. Both paths
return identical results up to floating point reassociation.
"""

from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("AMBIPERSUADE_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes"}

try:
    if _DISABLED:
        raise ImportError
    from numba import njit

    NUMBA_ENABLED = True
except ImportError:  # pragma: no cover - exercised via the env flag
    NUMBA_ENABLED = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


def backend() -> str:
    return "numba" if NUMBA_ENABLED else "numpy"


# ---------------------------------------------------------------- pivoting


def _pivot_np(T, r, c):
    T[r] /= T[r, c]
    col = T[:, c].copy()
    col[r] = 0.0
    nz = np.nonzero(col)[0]
    if nz.size:
        T[nz] -= np.outer(col[nz], T[r])


@njit(cache=True)
def _pivot_nb(T, r, c):
    m, n = T.shape
    piv = T[r, c]
    for j in range(n):
        T[r, j] /= piv
    for i in range(m):
        if i == r:
            continue
        f = T[i, c]
        if f != 0.0:
            for j in range(n):
                T[i, j] -= f * T[r, j]


def pivot(T: np.ndarray, r: int, c: int) -> None:
    """Gauss-Jordan pivot of tableau ``T`` on entry (r, c), in place."""
    if NUMBA_ENABLED:
        _pivot_nb(T, r, c)
    else:
        _pivot_np(T, r, c)


# ------------------------------------------------------- batch evaluation


def _batch_payoffs_np(K, prior, U):
    return np.einsum("nwa,w,aw->n", K, prior, U)


@njit(cache=True)
def _batch_payoffs_nb(K, prior, U):
    n, w, a = K.shape
    out = np.zeros(n)
    for k in range(n):
        acc = 0.0
        for i in range(w):
            row = 0.0
            for j in range(a):
                row += K[k, i, j] * U[j, i]
            acc += prior[i] * row
        out[k] = acc
    return out


def batch_payoffs(K: np.ndarray, prior: np.ndarray, U: np.ndarray) -> np.ndarray:
    """Expected payoff under obedience for a stack of kernels ``K[n, state, action]``."""
    K = np.ascontiguousarray(K, dtype=np.float64)
    if NUMBA_ENABLED:
        return _batch_payoffs_nb(K, np.ascontiguousarray(prior, dtype=np.float64), np.ascontiguousarray(U, dtype=np.float64))
    return _batch_payoffs_np(K, prior, U)


def _batch_obedience_np(K, prior, R):
    D = R[:, None, :] - R[None, :, :]  # (a, b, w)
    out = np.einsum("nwa,w,abw->nab", K, prior, D)
    return out.reshape(K.shape[0], -1)


@njit(cache=True)
def _batch_obedience_nb(K, prior, R):
    n, w, a = K.shape
    out = np.zeros((n, a * a))
    for k in range(n):
        for x in range(a):
            for y in range(a):
                acc = 0.0
                for i in range(w):
                    acc += prior[i] * K[k, i, x] * (R[x, i] - R[y, i])
                out[k, x * a + y] = acc
    return out


def batch_obedience(K: np.ndarray, prior: np.ndarray, R: np.ndarray) -> np.ndarray:
    """Obedience slacks, one row per kernel, column ``a*|A|+b`` for recommendation a versus b."""
    K = np.ascontiguousarray(K, dtype=np.float64)
    if NUMBA_ENABLED:
        return _batch_obedience_nb(K, np.ascontiguousarray(prior, dtype=np.float64), np.ascontiguousarray(R, dtype=np.float64))
    return _batch_obedience_np(K, prior, R)


# ------------------------------------------------- binary splitting oracle


def _lam_interval(oi, oj, tol):
    # feasible lam in [0, 1] with lam*oi + (1-lam)*oj >= -tol componentwise
    lo, hi = 0.0, 1.0
    for k in range(oi.shape[0]):
        h = oi[k]
        l = oj[k]
        slope = h - l
        rhs = -tol - l
        if abs(slope) < 1e-15:
            if l < -tol:
                return 1.0, 0.0
            continue
        t = rhs / slope
        if slope > 0:
            if t > lo:
                lo = t
        else:
            if t < hi:
                hi = t
    return lo, hi


_lam_interval_nb = njit(cache=True)(_lam_interval)


@njit(cache=True)
def _best_split_nb(fs, d, O, tol):
    n = fs.shape[0]
    best = -np.inf
    bi, bj, bl = -1, -1, 0.0
    for i in range(n):
        for j in range(i, n):
            lo, hi = _lam_interval_nb(O[i], O[j], tol)
            if lo > hi:
                continue
            lam = hi if fs[i] >= fs[j] else lo
            wi = lam / d[i]
            wj = (1.0 - lam) / d[j]
            mu = wi / (wi + wj)
            v = mu * fs[i] + (1.0 - mu) * fs[j]
            if v > best:
                best = v
                bi, bj, bl = i, j, lam
    return best, bi, bj, bl


def _best_split_np(fs, d, O, tol):
    n = fs.shape[0]
    best, arg = -np.inf, (-1, -1, 0.0)
    for i in range(n):
        oj = O[i:]
        slope = O[i][None, :] - oj
        rhs = -tol - oj
        with np.errstate(divide="ignore", invalid="ignore"):
            t = rhs / slope
        flat = np.abs(slope) < 1e-15
        pos = (slope > 0) & ~flat
        neg = (slope < 0) & ~flat
        lo = np.max(np.where(pos, t, 0.0), axis=1, initial=0.0)
        hi = np.min(np.where(neg, t, 1.0), axis=1, initial=1.0)
        bad = np.any(flat & (oj < -tol), axis=1)
        ok = (lo <= hi) & ~bad
        if not np.any(ok):
            continue
        fj = fs[i:]
        lam = np.where(fs[i] >= fj, hi, lo)
        wi = lam / d[i]
        wj = (1.0 - lam) / d[i:]
        mu = wi / (wi + wj)
        v = np.where(ok, mu * fs[i] + (1.0 - mu) * fj, -np.inf)
        k = int(np.argmax(v))
        if v[k] > best:
            best, arg = float(v[k]), (i, i + k, float(lam[k]))
    return best, arg[0], arg[1], arg[2]


def best_binary_split(fs: np.ndarray, d: np.ndarray, O: np.ndarray, tol: float = 1e-9):
    """Best two-point ambiguous experiment over a finite kernel list.

    ``fs`` holds the sender's phi-transformed payoffs, ``d`` the receiver's
    phi derivative at each kernel's payoff and ``O`` the obedience slack rows.
    For a pair (i, j) with effective weight lam on i, obedience is linear in
    lam and the sender's value is monotone in lam, so the optimum sits at an
    end of the feasible interval. Returns ``(value, i, j, lam)`` where value is
    the mixed phi-transformed payoff.
    """
    fs = np.ascontiguousarray(fs, dtype=np.float64)
    d = np.ascontiguousarray(d, dtype=np.float64)
    O = np.ascontiguousarray(O, dtype=np.float64)
    if NUMBA_ENABLED:
        v, i, j, lam = _best_split_nb(fs, d, O, tol)
    else:
        v, i, j, lam = _best_split_np(fs, d, O, tol)
    return float(v), int(i), int(j), float(lam)
