"""Periodic points by exact elimination, multiplier classification, and
periodic points of reversible maps on the diagonal."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np

from .automorphism import (
    PolyAuto,
    affine_auto,
    is_henon_type,
    reversible_henon,
    swap,
    to_regular_form,
)
from .errors import EliminationDegenerate, InputError, NotHenonType, NotOnDiagonal, NotPeriodic
from .numeric import PairEval, iterate, iterate_with_jacobian, iterate_with_jacobian_mp, multipliers
from .polyalg import (
    BivarPoly,
    UnivarPoly,
    X,
    Y,
    companion_roots,
    complex_roots,
    rat,
    resultant_y,
    square_free_decomposition,
)

MAX_COUNT = 10_000
DEDUPE = 1e-8
PERIOD_TOL = 1e-9
TYPE_EPS = 1e-9
MP_DPS = 60

SADDLE = "saddle"
SINK = "sink"
SOURCE = "source"
INDIFFERENT = "indifferent"


@dataclass(frozen=True)
class PeriodicPoint:
    point: tuple[complex, complex]
    period_dividing: int
    exact_period: int
    multiplicity: int
    multipliers: tuple[complex, complex]
    type: str
    residual: float = 0.0

    def to_json(self) -> dict:
        c = lambda z: [z.real, z.imag]
        return {
            "point": [c(self.point[0]), c(self.point[1])],
            "multiplicity": self.multiplicity,
            "exact_period": self.exact_period,
            "multipliers": [c(self.multipliers[0]), c(self.multipliers[1])],
            "type": self.type,
        }


@dataclass(frozen=True)
class SaddleData:
    base: PeriodicPoint
    u: complex
    s: complex

    def __post_init__(self):
        if not abs(self.u) > 1 > abs(self.s):
            raise ValueError("not a saddle: need |u| > 1 > |s|")


@dataclass(frozen=True)
class ReversiblePair:
    f: PolyAuto
    sigma: PolyAuto


@dataclass(frozen=True)
class DiagonalPoint:
    point: tuple[complex, complex]
    parameter: complex
    multiplicity: int
    residual: float

    def to_json(self) -> dict:
        return {
            "point": [[z.real, z.imag] for z in self.point],
            "parameter": [self.parameter.real, self.parameter.imag],
            "multiplicity": self.multiplicity,
            "residual": self.residual,
        }


def _sort_key(p):
    return tuple(round(v, 9) for z in p for v in (z.real, z.imag))


def _norm(v) -> float:
    return max(abs(v[0]), abs(v[1]))


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------


def _type_tag(u: complex, s: complex) -> str:
    au, as_ = abs(u), abs(s)
    if au > 1 + TYPE_EPS and as_ < 1 - TYPE_EPS:
        return SADDLE
    if au < 1 - TYPE_EPS:
        return SINK
    if as_ > 1 + TYPE_EPS:
        return SOURCE
    return INDIFFERENT


def _rational_point(p):
    """Exact rational coordinates when ``p`` is numerically rational."""
    out = []
    for z in p:
        if abs(z.imag) > 1e-10:
            return None
        q = Fraction(z.real).limit_denominator(10**6)
        if abs(float(q) - z.real) > 1e-10 * max(1.0, abs(z.real)):
            return None
        out.append(rat(q))
    return tuple(out)


def _exact_period(f: PolyAuto, ev: PairEval, p, n: int) -> int:
    q = _rational_point(p)
    if q is not None and _exact_iterate(f, q, n) == q:
        for k in range(1, n):
            if n % k == 0 and _exact_iterate(f, q, k) == q:
                return k
        return n
    scale = max(1.0, _norm(p))
    for k in range(1, n):
        if n % k == 0:
            fk = iterate(ev, p, k)
            if _norm((fk[0] - p[0], fk[1] - p[1])) <= PERIOD_TOL * scale:
                return k
    return n


def _exact_iterate(f: PolyAuto, q, k: int):
    x, y = q
    for _ in range(k):
        x, y = f.forward[0](x, y), f.forward[1](x, y)
    return x, y


def classify_point(f: PolyAuto, p, n: int, tol: float = 1e-8, multiplicity: int = 1) -> PeriodicPoint:
    """Multipliers of ``D(f^k)`` along the orbit, ``k`` the exact period."""
    ev = PairEval(f.forward)
    p = (complex(p[0]), complex(p[1]))
    fn = iterate(ev, p, n)
    res = _norm((fn[0] - p[0], fn[1] - p[1]))
    if not res <= tol * max(1.0, _norm(p)):
        raise NotPeriodic(f"|f^{n}(p) - p| = {res:.3e}")
    q = _rational_point(p)
    if q is not None and _exact_iterate(f, q, n) == q:
        p = (complex(float(q[0])), complex(float(q[1])))
        res = 0.0
    k = _exact_period(f, ev, p, n)
    _, m = iterate_with_jacobian(ev, p, k)
    u, s = multipliers(m)
    return PeriodicPoint(p, n, k, multiplicity, (u, s), _type_tag(u, s), res)


# ---------------------------------------------------------------------------
# elimination
# ---------------------------------------------------------------------------


def _newton2(ev: PairEval, p, n: int, iters: int = 40):
    """Newton on ``f^n(p) - p``; keeps the best iterate."""
    best = p
    best_res = math.inf
    for _ in range(iters):
        (fx, fy), m = iterate_with_jacobian(ev, p, n)
        r = np.array([fx - p[0], fy - p[1]])
        res = float(np.max(np.abs(r)))
        if not np.isfinite(res):
            break
        if res < best_res:
            best, best_res = p, res
        if res <= 1e-15 * max(1.0, _norm(p)):
            break
        try:
            step = np.linalg.solve(m - np.eye(2), -r)
        except np.linalg.LinAlgError:
            break
        p = (p[0] + step[0], p[1] + step[1])
        if float(np.max(np.abs(step))) <= 1e-17 * max(1.0, _norm(p)):
            break
    return best, best_res


def ev_np(ev: PairEval, x: np.ndarray, y: np.ndarray):
    xp = [np.ones_like(x)]
    yp = [np.ones_like(y)]
    for _ in range(ev.maxe):
        xp.append(xp[-1] * x)
        yp.append(yp[-1] * y)
    return tuple(sum((c * xp[i] * yp[j] for i, j, c in t), np.zeros_like(x)) for t in ev.terms)


SHEARS = (0, rat("1/2"), rat("-2/3"), rat("3/4"), rat("-5/7"), rat("7/11"))
SIMPLE_GAP = 1e-6


def _is_simple(ev: PairEval, p, n: int) -> bool:
    """Transversal fixed point: ``D(f^n) - I`` well conditioned."""
    _, m = iterate_with_jacobian(ev, p, n)
    sv = np.linalg.svd(m - np.eye(2), compute_uv=False)
    return sv[-1] > SIMPLE_GAP * max(1.0, sv[0])


def _lift(ev: PairEval, xs, ys, n: int):
    """Points over each x-root, with multiplicities; ``None`` if ambiguous."""
    yarr = np.array([y for y, _ in ys], dtype=np.complex128)
    pts = []
    for x0, mult in xs:
        with np.errstate(all="ignore"):
            px, py = np.full_like(yarr, x0), yarr.copy()
            for _ in range(n):
                px, py = ev_np(ev, px, py)
            res = np.maximum(np.abs(px - x0), np.abs(py - yarr))
        res = np.where(np.isfinite(res), res, np.inf)
        scale = np.maximum(1.0, np.maximum(abs(x0), np.abs(yarr)))
        cand = set(np.nonzero(res <= 1e-6 * scale)[0].tolist()) | {int(np.argmin(res))}
        found = []
        for j in sorted(cand):
            q, r = _newton2(ev, (complex(x0), complex(yarr[j])), n)
            sc = max(1.0, _norm(q))
            if r > 1e-8 * sc or abs(q[0] - x0) > 1e-6 * sc:
                continue
            if all(_norm((q[0] - o[0], q[1] - o[1])) > DEDUPE * sc for o in found):
                found.append(q)
        if not found:
            return None
        if len(found) == 1:
            pts.append((found[0], mult))
            if mult > 1 and _is_simple(ev, found[0], n):
                return None
            continue
        simple = [q for q in found if _is_simple(ev, q, n)]
        multiple = [q for q in found if not _is_simple(ev, q, n)]
        if len(multiple) > 1 or (not multiple and len(simple) != mult):
            return None
        pts.extend((q, 1) for q in simple)
        if multiple:
            if mult - len(simple) < 2:
                return None
            pts.append((multiple[0], mult - len(simple)))
    return pts


def _fixed_points_regular(g: PolyAuto, n: int, D: int, tol: float, max_iter: int):
    """Fixed points of ``g^n`` with multiplicities, for a regular ``g``.

    The first coordinate is eliminated exactly; points sharing a first
    coordinate are separated numerically and, when their multiplicities
    cannot be told apart, the projection is sheared and the solve repeated.
    """
    swp = swap()
    for k in SHEARS:
        shear = affine_auto(1, k, 0, 1)
        h = shear.inv().compose(g).compose(shear) if k else g
        hn = h.power(n)
        rx = resultant_y(hn.forward[0] - X, hn.forward[1] - Y)
        if rx.is_zero():
            raise EliminationDegenerate("resultant vanishes identically")
        if rx.degree != D:
            continue
        hs = swp.compose(hn).compose(swp)
        ry = resultant_y(hs.forward[0] - X, hs.forward[1] - Y)
        xs = [(r.value, r.multiplicity) for r in complex_roots(rx, tol, max_iter)]
        ys = [(r.value, r.multiplicity) for r in complex_roots(ry, tol, max_iter)]
        pts = _lift(PairEval(h.forward), xs, ys, n)
        if pts is None or sum(m for _, m in pts) != D:
            continue
        kf = complex(float(k))
        return [((p[0] + kf * p[1], p[1]), m) for p, m in pts]
    raise EliminationDegenerate("no projection separates the fixed points")


def _apply_numeric(f: PolyAuto, p):
    return f.forward[0](p[0], p[1]), f.forward[1](p[0], p[1])


def fixed_points_of_iterate(f: PolyAuto, n: int, tol: float = 1e-12, max_iter: int = 100) -> list[PeriodicPoint]:
    """All solutions of ``f^n(p) = p`` counted with multiplicity."""
    if n < 1:
        raise InputError("n must be a positive integer")
    if not is_henon_type(f):
        raise NotHenonType(f"{f!r} is not of Henon type")
    form = to_regular_form(f)
    g = form.composed()
    D = g.degree ** n
    if D > MAX_COUNT:
        raise InputError(f"d^n = {D} exceeds the cap {MAX_COUNT}")
    pts = _fixed_points_regular(g, n, D, tol, max_iter)
    conj = form.conjugator
    ev = PairEval(f.forward)
    out = []
    for q, mult in pts:
        p = _apply_numeric(conj, q)
        p, _ = _newton2(ev, (complex(p[0]), complex(p[1])), n, iters=8)
        out.append(classify_point(f, p, n, tol=1e-6, multiplicity=mult))
    out.sort(key=lambda pp: _sort_key(pp.point))
    return out


# ---------------------------------------------------------------------------
# reversible maps
# ---------------------------------------------------------------------------


def make_reversible(P: UnivarPoly) -> ReversiblePair:
    if P.degree < 2:
        raise InputError("reversible Henon map needs deg P >= 2")
    f = reversible_henon(P)
    sigma = swap()
    if sigma.compose(sigma).forward != (X, Y):
        raise AssertionError("sigma is not an involution")
    if sigma.compose(f).compose(sigma).forward != f.inverse:
        raise AssertionError("sigma does not reverse f")
    return ReversiblePair(f, sigma)


def _univ_eval(p: BivarPoly, a: UnivarPoly, b: UnivarPoly) -> UnivarPoly:
    xp, yp = [UnivarPoly([1])], [UnivarPoly([1])]
    for _ in range(p.deg_x):
        xp.append(xp[-1] * a)
    for _ in range(p.deg_y):
        yp.append(yp[-1] * b)
    acc = UnivarPoly()
    for (i, j), c in p.items():
        acc = acc + xp[i] * yp[j] * UnivarPoly([c])
    return acc


def diagonal_polynomials(f: PolyAuto, n: int) -> tuple[UnivarPoly, UnivarPoly]:
    """``f^n(t, t) = (A_n(t), B_n(t))`` exactly."""
    a = b = UnivarPoly([0, 1])
    for _ in range(n):
        a, b = _univ_eval(f.forward[0], a, b), _univ_eval(f.forward[1], a, b)
    return a, b


def _mp_poly(q: UnivarPoly):
    return [mpmath.mpf(int(c.numerator)) / int(c.denominator) for c in q.coeffs]


def _mp_newton(coeffs, z, iters: int = 60):
    z = mpmath.mpc(z)
    for _ in range(iters):
        p = dp = mpmath.mpc(0)
        for c in reversed(coeffs):
            dp = dp * z + p
            p = p * z + c
        if dp == 0:
            break
        step = p / dp
        z -= step
        if abs(step) <= mpmath.mpf(10) ** (-MP_DPS + 5) * max(1, abs(z)):
            break
    return z


def _diag_newton(ev: PairEval, n: int, t, iters: int = 60):
    """Newton on ``t -> x_n - y_n`` with ``(x_n, y_n) = f^n(t, t)``."""
    t = mpmath.mpc(t)
    eps = mpmath.mpf(10) ** (-MP_DPS + 8)
    for _ in range(iters):
        (x, y), m = iterate_with_jacobian_mp(ev, (t, t), n)
        val = x - y
        der = (m[0, 0] + m[0, 1]) - (m[1, 0] + m[1, 1])
        if der == 0:
            break
        step = val / der
        t -= step
        if abs(step) <= eps * max(1, abs(t)):
            break
    return t


def _diag_logderiv(ev: PairEval, n: int, t: np.ndarray) -> np.ndarray:
    """``F'/F`` for ``F(t) = x_n - y_n``, ``(x_n, y_n) = f^n(t, t)``, vectorized."""
    x, y = t.copy(), t.copy()
    dx, dy = np.ones_like(t), np.ones_like(t)
    for _ in range(n):
        xp, yp = [np.ones_like(x)], [np.ones_like(y)]
        for _ in range(ev.maxe):
            xp.append(xp[-1] * x)
            yp.append(yp[-1] * y)
        vals, ders = [], []
        for terms in ev.terms:
            v = np.zeros_like(x)
            d = np.zeros_like(x)
            for i, j, c in terms:
                v = v + c * xp[i] * yp[j]
                if i:
                    d = d + c * i * xp[i - 1] * yp[j] * dx
                if j:
                    d = d + c * j * xp[i] * yp[j - 1] * dy
            vals.append(v)
            ders.append(d)
        (x, y), (dx, dy) = vals, ders
    return (dx - dy) / (x - y)


def _aberth(ev: PairEval, n: int, z: np.ndarray, others, iters: int = 200) -> np.ndarray:
    """Simultaneous refinement of the simple roots of ``F / prod(g^m)``."""
    z = z.astype(np.complex128).copy()
    k = len(z)
    for _ in range(iters):
        with np.errstate(all="ignore"):
            ld = _diag_logderiv(ev, n, z)
            for g, m in others:
                gc = np.array([complex(c) for c in g.coeffs])
                dg = np.polynomial.polynomial.polyval(z, np.polynomial.polynomial.polyder(gc))
                ld = ld - m * dg / np.polynomial.polynomial.polyval(z, gc)
            newton = 1.0 / ld
            diff = z[:, None] - z[None, :]
            np.fill_diagonal(diff, 1.0)
            inv = 1.0 / diff
            np.fill_diagonal(inv, 0.0)
            w = newton / (1.0 - newton * inv.sum(axis=1))
        w = np.where(np.isfinite(w), w, 0.0)
        z = z - w
        if k == 0 or np.max(np.abs(w) / np.maximum(1.0, np.abs(z))) < 1e-14:
            break
    return z


def diagonal_intersections(rp: ReversiblePair, n: int, tol: float = 1e-12,
                           max_iter: int = 100) -> list[DiagonalPoint]:
    """Points ``f^n(t, t)`` on the diagonal, one per root of ``A_n - B_n``.

    Simple roots are refined simultaneously (Aberth) on the iterated map and
    then by Newton in extended precision; repeated roots on their exact
    square-free factor.
    """
    f = rp.f
    if f.degree ** n > MAX_COUNT:
        raise InputError(f"d^n = {f.degree ** n} exceeds the cap {MAX_COUNT}")
    a, b = diagonal_polynomials(f, n)
    q = a - b
    if q.is_zero():
        raise EliminationDegenerate("the diagonal is invariant under f^n")
    ev = PairEval(f.forward, mp=True)
    ev_d = PairEval(f.forward)
    sqf = square_free_decomposition(q)
    out = []
    for factor, mult in sqf:
        z0 = companion_roots(factor.to_complex())
        if mult == 1:
            others = [(g, m) for g, m in sqf if m != 1]
            starts = _aberth(ev_d, n, z0, others)
        else:
            starts = [complex_roots(factor, tol, max_iter)[i].value for i in range(factor.degree)]
        rmax = max([abs(complex(r)) for r in starts] + [2.0])
        dps = MP_DPS if mult == 1 else MP_DPS + int(factor.degree * math.log10(rmax))
        with mpmath.workdps(dps):
            coeffs = _mp_poly(factor)
            for t0 in starts:
                t0 = complex(t0)
                t = _diag_newton(ev, n, t0) if mult == 1 else _mp_newton(coeffs, t0)
                p = iterate(ev, (t, t), n)
                p2 = iterate(ev, p, 2 * n)
                res = float(max(abs(p2[0] - p[0]), abs(p2[1] - p[1])))
                out.append(DiagonalPoint((complex(p[0]), complex(p[1])), complex(t), mult, res))
    out.sort(key=lambda d: _sort_key(d.point))
    return out


def multiplicity_at(q: UnivarPoly, t0) -> int:
    """Order of vanishing of ``q`` at ``t0`` (exact when ``t0`` is rational)."""
    if isinstance(t0, (complex, float)):
        tr = _rational_point((complex(t0), 0j))
        if tr is None:
            for factor, mult in square_free_decomposition(q):
                roots = companion_roots(factor.to_complex())
                if roots.size and np.min(np.abs(roots - t0)) <= 1e-8 * max(1.0, abs(t0)):
                    return mult
            return 0
        t0 = tr[0]
    t0 = rat(t0)
    lin = UnivarPoly([-t0, 1])
    k = 0
    while not q.is_zero():
        quo, rem = q.divmod(lin)
        if not rem.is_zero():
            break
        q, k = quo, k + 1
    return k


def multiplicity_boundedness_probe(rp: ReversiblePair, p, n_range) -> list[int]:
    """Intersection multiplicity of the diagonal and ``f^n`` of it at a fixed point."""
    x0, y0 = (rat(c) for c in p)
    if x0 != y0:
        raise NotOnDiagonal(f"({x0}, {y0}) is not on the diagonal")
    if _exact_iterate(rp.f, (x0, y0), 1) != (x0, y0):
        raise InputError("probe point must be fixed by f")
    out = []
    for n in n_range:
        a, b = diagonal_polynomials(rp.f, n)
        out.append(multiplicity_at(a - b, x0))
    return out
