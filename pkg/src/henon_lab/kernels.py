"""Hot loops: orbit iteration and certified escape-rate evaluation.

Each kernel exists twice: a scalar routine compiled with ``numba.njit`` and
a vectorized pure-numpy routine.  ``HENON_LAB_DISABLE_JIT=1`` (or a missing
numba) selects the numpy path; both follow the same arithmetic order.
``HENON_LAB_THREADS`` caps the numba worker pool.
"""
from __future__ import annotations

import math
import os
import warnings

import numpy as np

try:
    import numba
    from numba import njit, prange
    _HAVE_NUMBA = True
    # an old system TBB makes numba fall back to another layer; say nothing
    warnings.filterwarnings("ignore", message=".*TBB threading layer.*")
except ImportError:  # pragma: no cover - exercised only without numba
    _HAVE_NUMBA = False

STATUS_BOUNDED = 0
STATUS_ESCAPED = 1
STATUS_MAXITER = 2
STATUS_OVERFLOW = 3

OVERFLOW_NORM = 1e150


def jit_enabled() -> bool:
    flag = os.environ.get("HENON_LAB_DISABLE_JIT", "0").strip().lower()
    return _HAVE_NUMBA and flag not in ("1", "true", "yes", "on")


def configure_threads() -> int:
    """Apply ``HENON_LAB_THREADS``; returns the worker count in effect."""
    raw = os.environ.get("HENON_LAB_THREADS", "").strip()
    if not _HAVE_NUMBA:
        return 1
    if raw:
        n = max(1, min(int(raw), numba.config.NUMBA_NUM_THREADS))
        numba.set_num_threads(n)
    return numba.get_num_threads()


def _identity_decorator(*args, **kwargs):
    if args and callable(args[0]):
        return args[0]
    return lambda fn: fn


if not _HAVE_NUMBA:  # pragma: no cover
    njit = _identity_decorator
    prange = range


# ---------------------------------------------------------------------------
# scalar kernels (numba)
# ---------------------------------------------------------------------------


@njit(cache=True, inline="always")
def _eval_poly(ei, ej, cf, xp, yp):
    acc = 0j
    for k in range(cf.shape[0]):
        acc += cf[k] * (xp[ei[k]] * yp[ej[k]])
    return acc


@njit(cache=True, inline="always")
def _fill_powers(z, buf):
    buf[0] = 1.0 + 0j
    for k in range(1, buf.shape[0]):
        buf[k] = buf[k - 1] * z


@njit(cache=True, inline="always")
def _step(ei0, ej0, c0, ei1, ej1, c1, x, y, xp, yp):
    _fill_powers(x, xp)
    _fill_powers(y, yp)
    return _eval_poly(ei0, ej0, c0, xp, yp), _eval_poly(ei1, ej1, c1, xp, yp)


@njit(cache=True, inline="always")
def _green_point(ei0, ej0, c0, ei1, ej1, c1, esc, log_lead, lead_abs, radius, s_rest,
                 k_up, d, x, y, n_max, tol, xp, yp):
    """Returns (value, error_bound, iterations, status) for one starting point."""
    scale = 1.0
    ub = 0.0
    for n in range(n_max + 1):
        ax = abs(x)
        ay = abs(y)
        if esc == 1:
            ze = ay
            zo = ax
        else:
            ze = ax
            zo = ay
        if ze >= zo and ze >= radius:
            t = s_rest / (lead_abs * ze)
            dev = -math.log(1.0 - t)
            err = scale * dev / (d - 1.0)
            val = scale * (math.log(ze) + log_lead / (d - 1.0))
            if err <= tol or ze > 1e150:
                return val, err, n, 1
        else:
            nrm = ax if ax > ay else ay
            lp = math.log(nrm) if nrm > 1.0 else 0.0
            ub = scale * (lp + k_up)
            if ub <= tol:
                return 0.0, ub, n, 0
            if nrm > 1e150:
                return 0.5 * ub, 0.5 * ub, n, 3
        if n == n_max:
            break
        x, y = _step(ei0, ej0, c0, ei1, ej1, c1, x, y, xp, yp)
        scale = scale / d
    # cap reached: report the conservative bracket [0, ub] or the V+ estimate
    ax = abs(x)
    ay = abs(y)
    ze = ay if esc == 1 else ax
    zo = ax if esc == 1 else ay
    if ze >= zo and ze >= radius:
        t = s_rest / (lead_abs * ze)
        dev = -math.log(1.0 - t)
        return scale * (math.log(ze) + log_lead / (d - 1.0)), scale * dev / (d - 1.0), n_max, 2
    nrm = ax if ax > ay else ay
    lp = math.log(nrm) if nrm > 1.0 else 0.0
    return 0.0, scale * (lp + k_up), n_max, 2


@njit(cache=True, parallel=True)
def _green_batch_jit(ei0, ej0, c0, ei1, ej1, c1, maxe, esc, log_lead, lead_abs, radius,
                     s_rest, k_up, d, xs, ys, n_max, tol):
    n = xs.shape[0]
    val = np.empty(n)
    err = np.empty(n)
    its = np.empty(n, dtype=np.int64)
    st = np.empty(n, dtype=np.int64)
    # one scratch buffer per chunk; per-point allocation dominates otherwise
    chunk = 256
    n_chunks = (n + chunk - 1) // chunk
    for c in prange(n_chunks):
        xp = np.empty(maxe + 1, dtype=np.complex128)
        yp = np.empty(maxe + 1, dtype=np.complex128)
        for i in range(c * chunk, min(n, (c + 1) * chunk)):
            v, e, k, s = _green_point(ei0, ej0, c0, ei1, ej1, c1, esc, log_lead, lead_abs, radius,
                                      s_rest, k_up, d, xs[i], ys[i], n_max, tol, xp, yp)
            val[i] = v
            err[i] = e
            its[i] = k
            st[i] = s
    return val, err, its, st


@njit(cache=True)
def _orbit_jit(ei0, ej0, c0, ei1, ej1, c1, maxe, x, y, n):
    out = np.empty((n + 1, 2), dtype=np.complex128)
    xp = np.empty(maxe + 1, dtype=np.complex128)
    yp = np.empty(maxe + 1, dtype=np.complex128)
    out[0, 0] = x
    out[0, 1] = y
    for k in range(n):
        x, y = _step(ei0, ej0, c0, ei1, ej1, c1, x, y, xp, yp)
        out[k + 1, 0] = x
        out[k + 1, 1] = y
    return out


# ---------------------------------------------------------------------------
# numpy fallback
# ---------------------------------------------------------------------------


def _powers_np(z: np.ndarray, maxe: int) -> list:
    out = [np.ones_like(z)]
    for _ in range(maxe):
        out.append(out[-1] * z)
    return out


def _eval_poly_np(ei, ej, cf, xp, yp):
    acc = np.zeros_like(xp[0])
    for k in range(cf.shape[0]):
        acc = acc + cf[k] * (xp[ei[k]] * yp[ej[k]])
    return acc


def _step_np(m, maxe, x, y):
    xp = _powers_np(x, maxe)
    yp = _powers_np(y, maxe)
    return _eval_poly_np(m[0], m[1], m[2], xp, yp), _eval_poly_np(m[3], m[4], m[5], xp, yp)


def _green_batch_np(m, maxe, esc, log_lead, lead_abs, radius, s_rest, k_up, d, xs, ys, n_max, tol):
    n = xs.shape[0]
    val = np.zeros(n)
    err = np.zeros(n)
    its = np.full(n, n_max, dtype=np.int64)
    st = np.full(n, STATUS_MAXITER, dtype=np.int64)
    active = np.ones(n, dtype=bool)
    x = xs.astype(np.complex128).copy()
    y = ys.astype(np.complex128).copy()
    scale = 1.0
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for k in range(n_max + 1):
            idx = np.nonzero(active)[0]
            if idx.size == 0:
                break
            ax, ay = np.abs(x[idx]), np.abs(y[idx])
            ze, zo = (ay, ax) if esc == 1 else (ax, ay)
            inside = (ze >= zo) & (ze >= radius)
            t = s_rest / (lead_abs * np.where(inside, ze, 1.0))
            dev = -np.log(1.0 - np.where(inside, t, 0.0))
            e_in = scale * dev / (d - 1.0)
            v_in = scale * (np.log(np.where(inside, ze, 1.0)) + log_lead / (d - 1.0))
            nrm = np.maximum(ax, ay)
            lp = np.where(nrm > 1.0, np.log(np.where(nrm > 1.0, nrm, 1.0)), 0.0)
            ub = scale * (lp + k_up)
            done_in = inside & ((e_in <= tol) | (ze > OVERFLOW_NORM))
            done_out = (~inside) & (ub <= tol)
            over = (~inside) & (~done_out) & (nrm > OVERFLOW_NORM)
            last = k == n_max
            for mask, code in ((done_in, STATUS_ESCAPED), (done_out, STATUS_BOUNDED), (over, STATUS_OVERFLOW)):
                sel = idx[mask]
                if code == STATUS_ESCAPED:
                    val[sel], err[sel] = v_in[mask], e_in[mask]
                elif code == STATUS_BOUNDED:
                    val[sel], err[sel] = 0.0, ub[mask]
                else:
                    val[sel], err[sel] = 0.5 * ub[mask], 0.5 * ub[mask]
                its[sel] = k
                st[sel] = code
                active[sel] = False
            if last:
                rem = ~(done_in | done_out | over)
                sel = idx[rem]
                val[sel] = np.where(inside[rem], v_in[rem], 0.0)
                err[sel] = np.where(inside[rem], e_in[rem], ub[rem])
                break
            keep = idx[~(done_in | done_out | over)]
            if keep.size:
                nx, ny = _step_np(m, maxe, x[keep], y[keep])
                x[keep], y[keep] = nx, ny
            scale = scale / d
    return val, err, its, st


def _orbit_np(m, maxe, x, y, n):
    out = np.empty((n + 1, 2), dtype=np.complex128)
    xa = np.array([x], dtype=np.complex128)
    ya = np.array([y], dtype=np.complex128)
    out[0] = (x, y)
    with np.errstate(all="ignore"):  # escaping orbits overflow to inf/nan, as in the jit path
        for k in range(n):
            xa, ya = _step_np(m, maxe, xa, ya)
            out[k + 1] = (xa[0], ya[0])
    return out


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------


def green_batch(m: tuple, maxe: int, esc: int, lead: complex, radius: float, s_rest: float,
                k_up: float, d: int, xs, ys, n_max: int, tol: float, use_jit: bool | None = None):
    """Certified escape rate for each point; ``m`` is the 6-tuple of map arrays."""
    xs = np.ascontiguousarray(xs, dtype=np.complex128)
    ys = np.ascontiguousarray(ys, dtype=np.complex128)
    log_lead = math.log(abs(lead))
    args = (esc, log_lead, abs(lead), float(radius), float(s_rest), float(k_up), float(d))
    if jit_enabled() if use_jit is None else (use_jit and _HAVE_NUMBA):
        configure_threads()
        return _green_batch_jit(*m, maxe, *args, xs, ys, int(n_max), float(tol))
    return _green_batch_np(m, maxe, *args, xs, ys, int(n_max), float(tol))


def orbit(m: tuple, maxe: int, x: complex, y: complex, n: int, use_jit: bool | None = None) -> np.ndarray:
    """``(n + 1, 2)`` array of the forward orbit."""
    if jit_enabled() if use_jit is None else (use_jit and _HAVE_NUMBA):
        return _orbit_jit(*m, maxe, complex(x), complex(y), int(n))
    return _orbit_np(m, maxe, complex(x), complex(y), int(n))
