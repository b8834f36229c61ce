"""Local dynamics at saddle points.

Power-series parametrizations of the invariant manifolds, a finite-order
adapted chart in which the map reads ``(u x (1 + x y g1), s y (1 + x y g2))``,
Hölder exponents of the Green functions along the manifolds, and the
renormalization probe ``f^n(x / u^n, y) -> (x, 0)``.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import convolve2d

from .automorphism import PolyAuto
from .errors import ChartOverflow, DegenerateData, Resonance
from .green import GreenValue, green_system
from .numeric import PairEval, iterate, iterate_with_jacobian
from .periodic import SADDLE, PeriodicPoint, SaddleData, classify_point, fixed_points_of_iterate

STABLE = "stable"
UNSTABLE = "unstable"
RESONANCE_TOL = 1e-12


def saddle_data(pp: PeriodicPoint) -> SaddleData:
    u, s = pp.multipliers
    return SaddleData(pp, u, s)


def saddles(f: PolyAuto, n: int) -> list[SaddleData]:
    """Saddle points of exact period dividing ``n``, in periodic-module order."""
    return [saddle_data(p) for p in fixed_points_of_iterate(f, n) if p.type == SADDLE]


def saddle_at(f: PolyAuto, p, n: int = 1) -> SaddleData:
    pp = classify_point(f, p, n)
    if pp.type != SADDLE:
        raise DegenerateData(f"point {p} is a {pp.type} periodic point, not a saddle")
    return saddle_data(pp)


# ---------------------------------------------------------------------------
# univariate series
# ---------------------------------------------------------------------------


def _smul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.convolve(a, b)[: len(a)]


def _apply_series(terms, xs: np.ndarray, ys: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Polynomial pair evaluated on truncated power series."""
    maxe = max([max(i, j) for t in terms for i, j, _ in t] + [1])
    one = np.zeros_like(xs)
    one[0] = 1.0
    xp, yp = [one], [one]
    for _ in range(maxe):
        xp.append(_smul(xp[-1], xs))
        yp.append(_smul(yp[-1], ys))
    out = []
    for t in terms:
        acc = np.zeros_like(xs)
        for i, j, c in t:
            acc = acc + c * _smul(xp[i], yp[j])
        out.append(acc)
    return out[0], out[1]


def _unit_eigenvector(m: np.ndarray, lam: complex) -> np.ndarray:
    a = m - lam * np.eye(2)
    # null vector of the rank-one matrix a
    row = a[0] if np.abs(a[0]).max() >= np.abs(a[1]).max() else a[1]
    v = np.array([-row[1], row[0]], dtype=np.complex128)
    v /= np.linalg.norm(v)
    k = int(np.argmax(np.abs(v)))
    return v * (abs(v[k]) / v[k])


@dataclass
class ManifoldSeries:
    side: str
    eigenvalue: complex
    other: complex
    base: tuple[complex, complex]
    coefficients: np.ndarray  # shape (N, 2): c_1 .. c_N
    order: int
    period: int
    residuals: np.ndarray = field(default_factory=lambda: np.zeros(0))
    radius: float = 0.0

    def __call__(self, zeta):
        z = np.asarray(zeta, dtype=np.complex128)
        acc_x = np.zeros_like(z)
        acc_y = np.zeros_like(z)
        for k in range(self.order, 0, -1):
            acc_x = (acc_x + self.coefficients[k - 1, 0]) * z
            acc_y = (acc_y + self.coefficients[k - 1, 1]) * z
        return self.base[0] + acc_x, self.base[1] + acc_y

    def to_json(self) -> dict:
        c = lambda z: [z.real, z.imag]
        return {
            "side": self.side,
            "eigenvalue": c(self.eigenvalue),
            "base": [c(self.base[0]), c(self.base[1])],
            "order": self.order,
            "period": self.period,
            "radius": self.radius,
            "coefficients": [[c(a), c(b)] for a, b in self.coefficients],
            "max_residual": float(self.residuals.max()) if self.residuals.size else 0.0,
        }


def _compose_series(terms, k: int, xs, ys):
    for _ in range(k):
        xs, ys = _apply_series(terms, xs, ys)
    return xs, ys


def manifold_series(f: PolyAuto, saddle: SaddleData, side: str, N: int = 10) -> ManifoldSeries:
    """Solve ``F(phi(z)) = phi(lambda z)`` order by order, ``F = f^period``."""
    if side not in (STABLE, UNSTABLE):
        raise ValueError(f"side must be {STABLE!r} or {UNSTABLE!r}")
    base = saddle.base.point
    k = saddle.base.exact_period
    lam, mu = (saddle.u, saddle.s) if side == UNSTABLE else (saddle.s, saddle.u)
    for j in range(2, N + 1):
        gap = abs(lam ** j - mu)
        if gap < RESONANCE_TOL:
            raise Resonance(j, gap)
    ev = PairEval(f.forward)
    _, m = iterate_with_jacobian(ev, base, k)
    terms = ev.terms
    xs = np.zeros(N + 1, dtype=np.complex128)
    ys = np.zeros(N + 1, dtype=np.complex128)
    xs[0], ys[0] = base
    v = _unit_eigenvector(m, lam)
    xs[1], ys[1] = v
    for j in range(2, N + 1):
        fx, fy = _compose_series(terms, k, xs[: j + 1].copy(), ys[: j + 1].copy())
        rhs = -np.array([fx[j], fy[j]])
        c = np.linalg.solve(m - lam ** j * np.eye(2), rhs)
        xs[j], ys[j] = c
    fx, fy = _compose_series(terms, k, xs.copy(), ys.copy())
    powers = lam ** np.arange(N + 1)
    scale = np.maximum(1.0, np.abs(xs) + np.abs(ys))
    res = np.maximum(np.abs(fx - xs * powers), np.abs(fy - ys * powers)) / scale
    ms = ManifoldSeries(side, complex(lam), complex(mu), (complex(base[0]), complex(base[1])),
                        np.stack([xs[1:], ys[1:]], axis=1), N, k, res[1:])
    ms.radius = _validity_radius(ms, ev)
    return ms


def _validity_radius(ms: ManifoldSeries, ev: PairEval, tol: float = 1e-10) -> float:
    """Largest dyadic radius on which the functional equation holds to ``tol``."""
    theta = np.exp(2j * np.pi * (np.arange(32) + 0.5) / 32)
    r = 1.0
    lam = ms.eigenvalue
    for _ in range(40):
        z = r * theta
        # the image must stay inside the disk where the series is trusted
        zz = z if abs(lam) < 1 else z / lam
        px, py = ms(zz)
        fx, fy = px.copy(), py.copy()
        for _ in range(ms.period):
            fx, fy = _vec_eval(ev, fx, fy)
        qx, qy = ms(lam * zz)
        err = np.max(np.maximum(np.abs(fx - qx), np.abs(fy - qy)))
        if err <= tol * max(1.0, float(np.max(np.abs(px)))):
            return r
        r /= 2
    return r


def _vec_eval(ev: PairEval, x: np.ndarray, y: np.ndarray):
    xp, yp = [np.ones_like(x)], [np.ones_like(y)]
    for _ in range(ev.maxe):
        xp.append(xp[-1] * x)
        yp.append(yp[-1] * y)
    return tuple(sum((c * xp[i] * yp[j] for i, j, c in t), np.zeros_like(x)) for t in ev.terms)


def manifold_point(f: PolyAuto, ms: ManifoldSeries, zeta: complex):
    """``phi(zeta)``, pushed through the functional equation beyond the series radius."""
    zeta = complex(zeta)
    lam = ms.eigenvalue
    steps = 0
    while abs(zeta) > ms.radius and steps < 200:
        zeta /= lam
        steps += 1
    x, y = ms(zeta)
    if steps:
        # unstable: phi(l z) = F(phi(z)); stable: phi(z / s) = F^-1(phi(z))
        pair = f.forward if abs(lam) > 1 else f.inverse
        ev = PairEval(pair)
        x, y = iterate(ev, (complex(x), complex(y)), steps * ms.period)
    return complex(x), complex(y)


def green_on_manifold(f: PolyAuto, ms: ManifoldSeries, zeta, tol: float = 1e-12,
                      max_iter: int | None = None) -> GreenValue:
    """``G+`` along the unstable manifold, ``G-`` along the stable one."""
    p = manifold_point(f, ms, zeta)
    gs = green_system(f)
    return gs.plus(p, tol, max_iter) if ms.side == UNSTABLE else gs.minus(p, tol, max_iter)


# ---------------------------------------------------------------------------
# Hölder exponent
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HolderEstimate:
    exponent: float
    r_range: tuple[float, float]
    regression_residual: float
    predicted: float
    intercept: float = 0.0
    radii: tuple = ()
    sups: tuple = ()
    discarded: int = 0

    @property
    def relative_error(self) -> float:
        return abs(self.exponent - self.predicted) / self.predicted

    def to_json(self) -> dict:
        return {
            "exponent": self.exponent,
            "predicted": self.predicted,
            "relative_error": self.relative_error,
            "r_range": list(self.r_range),
            "regression_residual": self.regression_residual,
            "intercept": self.intercept,
            "discarded_top_radii": self.discarded,
        }


def default_radii(ms: ManifoldSeries, count: int = 24) -> list[float]:
    return [ms.radius * 2.0 ** (-k) for k in range(count)]


def circle_sup(f: PolyAuto, ms: ManifoldSeries, r: float, samples: int, tol: float,
               max_iter: int | None = None) -> float:
    """Max of the Green function over ``|zeta| = r`` (subharmonic: equals the disk sup)."""
    gs = green_system(f)
    theta = np.exp(2j * np.pi * np.arange(samples) / samples)
    z = r * theta
    if r <= ms.radius:
        px, py = ms(z)
        pts = np.stack([px, py], axis=1)
    else:
        pts = np.array([manifold_point(f, ms, zz) for zz in z])
    vals = (gs.plus_batch if ms.side == UNSTABLE else gs.minus_batch)(pts, tol, max_iter)[0]
    return float(np.max(vals))


def _fit(lr: np.ndarray, ls: np.ndarray):
    A = np.stack([lr, np.ones_like(lr)], axis=1)
    coef, *_ = np.linalg.lstsq(A, ls, rcond=None)
    resid = ls - A @ coef
    return coef, resid


def holder_exponent(f: PolyAuto, saddle: SaddleData, side: str = UNSTABLE, radii=None,
                    N: int = 10, samples: int = 128, tol: float = 1e-12,
                    max_iter: int | None = None) -> HolderEstimate:
    """Least-squares slope of ``log sup_{|z| <= r} g`` against ``log r``.

    The two largest radii are dropped when their residuals exceed three
    times the RMS residual of the remaining points.
    """
    ms = manifold_series(f, saddle, side, N)
    radii = sorted(default_radii(ms) if radii is None else [float(r) for r in radii], reverse=True)
    if len(radii) < 8:
        raise DegenerateData("need at least 8 radii")
    sups = np.array([circle_sup(f, ms, r, samples, tol, max_iter) for r in radii])
    floor = 10 * tol
    keep = sups > floor
    if keep.sum() < 2:
        raise DegenerateData("all sampled sups are below the noise floor")
    r_arr = np.array(radii)[keep]
    s_arr = sups[keep]
    lr, ls = np.log(r_arr), np.log(s_arr)
    coef, resid = _fit(lr, ls)
    discarded = 0
    if len(lr) >= 10:
        coef2, resid2 = _fit(lr[2:], ls[2:])
        rms = math.sqrt(float(np.mean(resid2 ** 2))) if len(resid2) else 0.0
        top = np.abs(ls[:2] - (coef2[0] * lr[:2] + coef2[1]))
        if rms > 0 and np.all(top > 3 * rms):
            coef, resid, discarded = coef2, resid2, 2
            r_arr = r_arr[2:]
    k = saddle.base.exact_period
    d = f.degree
    lam = abs(ms.eigenvalue)
    predicted = k * math.log(d) / abs(math.log(lam))
    return HolderEstimate(float(coef[0]), (float(r_arr.min()), float(r_arr.max())),
                          float(np.sqrt(np.mean(resid ** 2))), predicted, float(coef[1]),
                          tuple(radii), tuple(float(v) for v in sups), discarded)


# ---------------------------------------------------------------------------
# adapted chart
# ---------------------------------------------------------------------------


def _mask(K: int) -> np.ndarray:
    a = np.arange(K + 1)
    return (a[:, None] + a[None, :]) <= K


def _bmul(a: np.ndarray, b: np.ndarray, mask: np.ndarray) -> np.ndarray:
    K = a.shape[0]
    return convolve2d(a, b)[:K, :K] * mask


def _bcompose(terms, X: np.ndarray, Y: np.ndarray, mask: np.ndarray):
    """Polynomial pair applied to bivariate truncated series."""
    maxe = max([max(i, j) for t in terms for i, j, _ in t] + [1])
    one = np.zeros_like(X)
    one[0, 0] = 1.0
    xp, yp = [one], [one]
    for _ in range(maxe):
        xp.append(_bmul(xp[-1], X, mask))
        yp.append(_bmul(yp[-1], Y, mask))
    out = []
    for t in terms:
        acc = np.zeros_like(X)
        for i, j, c in t:
            acc = acc + c * _bmul(xp[i], yp[j], mask)
        out.append(acc)
    return out


def _series_terms(S: np.ndarray):
    """Bivariate series coefficients as ``(i, j, c)`` terms."""
    ii, jj = np.nonzero(S)
    return [(int(i), int(j), complex(S[i, j])) for i, j in zip(ii, jj)]


@dataclass
class AdaptedChart:
    """``Psi(xi, eta) = p + L (xi, eta) + h.o.t.`` with ``F o Psi = Psi o Nf``."""

    base: tuple[complex, complex]
    u: complex
    s: complex
    L: np.ndarray
    psi: tuple[np.ndarray, np.ndarray]
    normal: tuple[np.ndarray, np.ndarray]
    order: int
    period: int
    radius: float = 0.0

    def __call__(self, xi, eta):
        xi = np.asarray(xi, dtype=np.complex128)
        eta = np.asarray(eta, dtype=np.complex128)
        w = [np.zeros_like(xi), np.zeros_like(xi)]
        K = self.order + 1
        xp = [np.ones_like(xi)]
        ep = [np.ones_like(eta)]
        for _ in range(K):
            xp.append(xp[-1] * xi)
            ep.append(ep[-1] * eta)
        for c in range(2):
            S = self.psi[c]
            for i, j in zip(*np.nonzero(S)):
                w[c] = w[c] + S[i, j] * xp[i] * ep[j]
        x = self.base[0] + self.L[0, 0] * w[0] + self.L[0, 1] * w[1]
        y = self.base[1] + self.L[1, 0] * w[0] + self.L[1, 1] * w[1]
        return x, y

    def jacobian(self, xi: complex, eta: complex) -> np.ndarray:
        d = np.zeros((2, 2), dtype=np.complex128)
        for c in range(2):
            S = self.psi[c]
            for i, j in zip(*np.nonzero(S)):
                if i:
                    d[c, 0] += S[i, j] * i * xi ** (i - 1) * eta ** j
                if j:
                    d[c, 1] += S[i, j] * j * xi ** i * eta ** (j - 1)
        return self.L @ d

    def inverse(self, p, guess=(0j, 0j), iters: int = 50):
        """Chart coordinates of a plane point by Newton iteration."""
        z = np.array(guess, dtype=np.complex128)
        Linv = np.linalg.inv(self.L)
        if not np.any(z):
            z = Linv @ (np.array(p, dtype=np.complex128) - np.array(self.base))
        for _ in range(iters):
            x, y = self(z[0], z[1])
            r = np.array([complex(x) - p[0], complex(y) - p[1]])
            step = np.linalg.solve(self.jacobian(z[0], z[1]), r)
            z = z - step
            if np.max(np.abs(step)) <= 1e-16 * max(1.0, float(np.max(np.abs(z)))):
                break
        return complex(z[0]), complex(z[1])

    def metadata(self) -> dict:
        return {"chart_order": self.order, "validity_radius": self.radius,
                "u": [self.u.real, self.u.imag], "s": [self.s.real, self.s.imag]}


def adapted_chart(f: PolyAuto, saddle: SaddleData, order: int = 12) -> AdaptedChart:
    """Finite-order chart; monomials ``xi^a eta^b`` with ``a >= 2, b >= 1`` (first
    component) or ``a >= 1, b >= 2`` (second) stay in the normal form, all others
    are removed by the homological equation."""
    if order < 5:
        raise ValueError("chart order must be at least 5")
    base = saddle.base.point
    k = saddle.base.exact_period
    u, s = saddle.u, saddle.s
    ev = PairEval(f.forward)
    _, m = iterate_with_jacobian(ev, base, k)
    L = np.stack([_unit_eigenvector(m, u), _unit_eigenvector(m, s)], axis=1)
    Linv = np.linalg.inv(L)
    K = order + 1
    mask = _mask(order)
    # F~(w) = L^-1 (F(p + L w) - p) as a bivariate series
    X = np.zeros((K, K), dtype=np.complex128)
    Y = np.zeros((K, K), dtype=np.complex128)
    X[0, 0], Y[0, 0] = base
    X[1, 0], X[0, 1] = L[0, 0], L[0, 1]
    Y[1, 0], Y[0, 1] = L[1, 0], L[1, 1]
    FX, FY = X, Y
    for _ in range(k):
        FX, FY = _bcompose(ev.terms, FX, FY, mask)
    FX = FX.copy()
    FY = FY.copy()
    FX[0, 0] -= base[0]
    FY[0, 0] -= base[1]
    Ft = (Linv[0, 0] * FX + Linv[0, 1] * FY, Linv[1, 0] * FX + Linv[1, 1] * FY)
    Ft_terms = [_series_terms(Ft[0]), _series_terms(Ft[1])]
    psi = [np.zeros((K, K), dtype=np.complex128) for _ in range(2)]
    nf = [np.zeros((K, K), dtype=np.complex128) for _ in range(2)]
    psi[0][1, 0] = psi[1][0, 1] = 1.0
    nf[0][1, 0], nf[1][0, 1] = u, s
    lam = (u, s)
    for deg in range(2, order + 1):
        lhs = _bcompose(Ft_terms, psi[0], psi[1], mask)
        rhs = _bcompose([_series_terms(psi[0]), _series_terms(psi[1])], nf[0], nf[1], mask)
        for a in range(deg + 1):
            b = deg - a
            for c in range(2):
                R = lhs[c][a, b] - rhs[c][a, b]
                keep = (a >= 2 and b >= 1) if c == 0 else (a >= 1 and b >= 2)
                if keep:
                    nf[c][a, b] = R
                else:
                    psi[c][a, b] = -R / (lam[c] - u ** a * s ** b)
    chart = AdaptedChart((complex(base[0]), complex(base[1])), complex(u), complex(s), L,
                         (psi[0], psi[1]), (nf[0], nf[1]), order, k)
    chart.radius = _chart_radius(chart, ev)
    return chart


def _chart_radius(chart: AdaptedChart, ev: PairEval, tol: float = 1e-9) -> float:
    """Largest dyadic bidisk radius where ``F o Psi = Psi o Nf`` holds to ``tol``."""
    th = np.exp(2j * np.pi * (np.arange(12) + 0.5) / 12)
    xi = (th[:, None] * np.ones(12)[None, :]).ravel()
    eta = (np.ones(12)[:, None] * th[None, :] * np.exp(0.3j)).ravel()
    nf_terms = [_series_terms(chart.normal[0]), _series_terms(chart.normal[1])]
    r = 1.0
    for _ in range(40):
        a, b = r * xi, r * eta
        px, py = chart(a, b)
        for _ in range(chart.period):
            px, py = _vec_eval(ev, px, py)
        na = sum(c * a ** i * b ** j for i, j, c in nf_terms[0])
        nb = sum(c * a ** i * b ** j for i, j, c in nf_terms[1])
        qx, qy = chart(na, nb)
        err = float(np.max(np.maximum(np.abs(px - qx), np.abs(py - qy))))
        if err <= tol:
            return r
        r /= 2
    return r


@dataclass(frozen=True)
class RenormRow:
    x: complex
    y0: complex
    n: int
    deviation: float
    envelope: float


@dataclass(frozen=True)
class RenormTable:
    rows: tuple[RenormRow, ...]
    rho: float
    K: float
    chart: dict

    def within_envelope(self) -> bool:
        return all(r.deviation <= self.K * r.envelope * (1 + 1e-9) for r in self.rows if r.n >= 1)

    def monotone_beyond(self, n0: int = 4) -> bool:
        by = {}
        for r in self.rows:
            by.setdefault((r.x, r.y0), []).append((r.n, r.deviation))
        for seq in by.values():
            seq.sort()
            tail = [d for n, d in seq if n >= n0]
            if any(b > a for a, b in zip(tail, tail[1:])):
                return False
        return True

    def to_json(self) -> dict:
        return {
            "rho": self.rho, "K": self.K, "chart": self.chart,
            "rows": [{"x": [r.x.real, r.x.imag], "y0": [r.y0.real, r.y0.imag], "n": r.n,
                      "deviation": r.deviation, "envelope": r.envelope} for r in self.rows],
        }


def renorm_probe(f: PolyAuto, saddle: SaddleData, x_list, n_list, y0_list=(0.01, 0.05),
                 order: int = 12, fit_n: int = 4) -> RenormTable:
    """Distance in chart coordinates between ``f^n(x / u^n, y0)`` and ``(x, 0)``.

    ``K`` is the largest ratio ``deviation / (n rho^n)`` over ``1 <= n <= fit_n``.
    """
    chart = adapted_chart(f, saddle, order)
    u, s = chart.u, chart.s
    rho = max(1 / abs(u), abs(s))
    ev = PairEval(f.forward)
    rows = []
    for x in x_list:
        for y0 in y0_list:
            x, y0 = complex(x), complex(y0)
            for n in n_list:
                if max(abs(x), abs(y0)) > chart.radius:
                    raise ChartOverflow(f"start ({x}, {y0}) outside chart radius {chart.radius}")
                p = chart(x / u ** n, y0)
                q = iterate(ev, (complex(p[0]), complex(p[1])), n * chart.period)
                z = chart.inverse(q, guess=(x, s ** n * y0))
                if max(abs(z[0]), abs(z[1])) > chart.radius:
                    raise ChartOverflow(f"orbit left the chart at n = {n}")
                dev = max(abs(z[0] - x), abs(z[1]))
                rows.append(RenormRow(x, y0, n, float(dev), n * rho ** n if n else 0.0))
    ratios = [r.deviation / r.envelope for r in rows if 1 <= r.n <= fit_n]
    K = max(ratios) if ratios else 0.0
    return RenormTable(tuple(rows), rho, K, chart.metadata())


def write_table(path, header: dict, columns: list[str], rows) -> None:
    """CSV with a one-line JSON metadata header prefixed by ``#``."""
    with open(path, "w", newline="") as fh:
        fh.write("# " + json.dumps(header, sort_keys=True) + "\n")
        w = csv.writer(fh)
        w.writerow(columns)
        for r in rows:
            w.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in r])
