"""Places of Q, Weil heights and the dynamical height of rational points.

Finite places are handled purely through exact valuations of exact rational
coordinates.  Logarithms enter only at the end, as ``k * log p``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import total_ordering

import gmpy2
import numpy as np
import sympy
from gmpy2 import mpq

from .automorphism import PolyAuto, is_henon_type, is_regular, to_regular_form
from .errors import InputError, NotHenonType, OverflowHorizon
from .green import green_system
from .kernels import configure_threads
from .polyalg import rat

MEMORY_CAP = 64 * 2**20  # bytes of numerator/denominator digits per orbit


@total_ordering
@dataclass(frozen=True)
class PlaceQ:
    """``p = None`` is the archimedean place."""

    p: int | None = None

    def __post_init__(self):
        if self.p is not None and not sympy.isprime(self.p):
            raise InputError(f"{self.p} is not prime")

    @property
    def archimedean(self) -> bool:
        return self.p is None

    def __lt__(self, other: "PlaceQ") -> bool:
        # infinity first, then primes ascending
        return (self.p is not None, self.p or 0) < (other.p is not None, other.p or 0)

    def __str__(self) -> str:
        return "inf" if self.p is None else str(self.p)

    @staticmethod
    def parse(s: str) -> "PlaceQ":
        return PlaceQ(None) if s in ("inf", "infinity", "oo") else PlaceQ(int(s))


INFINITY = PlaceQ(None)


def valuation(x, p: int) -> int:
    """``v_p(x)`` for nonzero rational ``x``."""
    x = rat(x)
    if x == 0:
        raise InputError("valuation of zero")
    return int(gmpy2.remove(x.numerator, p)[1]) - int(gmpy2.remove(x.denominator, p)[1])


def abs_at_place(x, v: PlaceQ) -> float:
    x = rat(x)
    if v.archimedean:
        return float(abs(x))
    if x == 0:
        return 0.0
    return float(mpq(v.p) ** -valuation(x, v.p))


def log_abs_exact(x, v: PlaceQ) -> dict[int, int]:
    """``log|x|_v`` as an integer combination ``{q: k_q}`` of ``log q``."""
    x = rat(x)
    if x == 0:
        raise InputError("log of zero")
    if v.archimedean:
        out: dict[int, int] = {}
        for q, k in sympy.factorint(abs(int(x.numerator))).items():
            out[q] = out.get(q, 0) + k
        for q, k in sympy.factorint(int(x.denominator)).items():
            out[q] = out.get(q, 0) - k
        return out
    k = -valuation(x, v.p)
    return {v.p: k} if k else {}


def places_of(x) -> list[PlaceQ]:
    x = rat(x)
    primes = set(sympy.primefactors(int(x.numerator))) | set(sympy.primefactors(int(x.denominator)))
    return [INFINITY] + [PlaceQ(q) for q in sorted(primes)]


def product_formula_residual(x) -> dict[int, int]:
    """Sum of ``log|x|_v`` over all places, in the ``log q`` basis.

    Only places where ``|x|_v != 1`` contribute.  The result is ``{}`` when
    the product formula holds.
    """
    total: dict[int, int] = {}
    for v in places_of(x):
        for q, k in log_abs_exact(x, v).items():
            total[q] = total.get(q, 0) + k
    return {q: k for q, k in total.items() if k}


@dataclass(frozen=True)
class HeightValue:
    value: float
    error_bound: float
    local_contributions: dict = field(default_factory=dict)
    n_used: int = 0
    place_sum: float | None = None
    place_contributions: dict = field(default_factory=dict)
    agreement_gap: float | None = None
    combined_error: float | None = None

    @property
    def lower(self) -> float:
        return max(self.value - self.error_bound, 0.0)

    def agrees(self) -> bool:
        return self.agreement_gap is not None and self.agreement_gap <= self.combined_error

    def to_json(self) -> dict:
        out = {
            "value": self.value,
            "error_bound": self.error_bound,
            "contributions": [{"place": str(v), "value": c}
                              for v, c in sorted(self.local_contributions.items())],
            "n_used": self.n_used,
        }
        if self.place_sum is not None:
            out["place_sum"] = self.place_sum
            out["place_contributions"] = [{"place": str(v), "value": c}
                                          for v, c in sorted(self.place_contributions.items())]
            out["agreement_gap"] = self.agreement_gap
            out["combined_error"] = self.combined_error
        return out


def _log_rat(x) -> float:
    """``log|x|`` for a nonzero big rational without overflow."""
    return math.log(abs(int(x.numerator))) - math.log(int(x.denominator))


def _local_log_plus(point, v: PlaceQ) -> float:
    """``log+ max_i |x_i|_v``."""
    nz = [rat(c) for c in point if rat(c) != 0]
    if not nz:
        return 0.0
    if v.archimedean:
        return max(0.0, max(_log_rat(c) for c in nz))
    k = max(0, max(-valuation(c, v.p) for c in nz))
    return k * math.log(v.p)


def _denominator_primes(values) -> set[int]:
    out: set[int] = set()
    for c in values:
        out |= set(sympy.primefactors(int(rat(c).denominator)))
    return out


def naive_height_exact(point) -> mpq:
    """``prod_v max(1, ||point||_v)``; ``naive_height`` is its logarithm."""
    pts = [rat(c) for c in point]
    h = max([mpq(1)] + [abs(c) for c in pts])
    for q in sorted(_denominator_primes(pts)):
        k = max(0, max(-valuation(c, q) for c in pts if c != 0))
        h *= mpq(q) ** k
    return h


def lcm_height_exact(point) -> mpq:
    """Classical form ``max(|a_1|, ..., |a_k|, c)`` with ``c`` the common denominator."""
    pts = [rat(c) for c in point]
    c = 1
    for x in pts:
        c = math.lcm(c, int(x.denominator))
    return mpq(max([c] + [abs(int(x * c)) for x in pts]))


def naive_height(point) -> HeightValue:
    pts = [rat(c) for c in point]
    places = [INFINITY] + [PlaceQ(q) for q in sorted(_denominator_primes(pts))]
    contrib = {v: _local_log_plus(pts, v) for v in places}
    return HeightValue(math.fsum(contrib.values()), 0.0, contrib)


# ---------------------------------------------------------------------------
# dynamics
# ---------------------------------------------------------------------------


def _point_bytes(q) -> int:
    return sum((int(c.numerator).bit_length() + int(c.denominator).bit_length() + 7) // 8 for c in q)


def exact_orbit(pair, p, n: int, cap: int = MEMORY_CAP, strict: bool = True) -> list:
    """``[p, g(p), ..., g^n(p)]`` in exact rationals; stops at the memory cap.

    With ``strict`` the cap raises ``OverflowHorizon``; otherwise the orbit
    is returned truncated.
    """
    q = (rat(p[0]), rat(p[1]))
    out = [q]
    for k in range(n):
        q = (pair[0](*q), pair[1](*q))
        if _point_bytes(q) > cap:
            if strict:
                raise OverflowHorizon(f"orbit coordinates exceed {cap} bytes at step {k + 1}")
            break
        out.append(q)
    return out


def dynamical_degree(f: PolyAuto) -> int:
    if not is_henon_type(f):
        raise NotHenonType(f"{f!r} is not of Henon type")
    return to_regular_form(f).degree


def support_set(f: PolyAuto, p) -> list[PlaceQ]:
    """Finite places that can carry a nonzero local Green function at ``p``."""
    primes = set(f.coefficient_denominators) | _denominator_primes(p)
    primes = {q for d in primes for q in sympy.primefactors(d)} if primes else set()
    return [PlaceQ(q) for q in sorted(primes)]


def local_green(f: PolyAuto, p, v: PlaceQ, n: int, sign: int = 1, cap: int = MEMORY_CAP) -> float:
    """``d^-n log+ ||f^{sign n}(p)||_v`` from the exact orbit."""
    d = dynamical_degree(f)
    if not v.archimedean and v not in support_set(f, p):
        return 0.0
    pair = f.forward if sign > 0 else f.inverse
    p = (rat(p[0]), rat(p[1]))
    orbit = exact_orbit(pair, p, n, cap)
    if p in orbit[1:]:
        return 0.0
    return _local_log_plus(orbit[-1], v) / d**n


def _place_constant(f: PolyAuto, v: PlaceQ, d: int) -> float:
    """``sup |G_v - log+||.||_v|`` at a finite place of bad reduction.

    From ``|f(q)|_v <= max|c|_v ||q||_v^d`` in both time directions and the
    mirrored lower bound through the inverse.
    """
    worst = 0
    for pair in (f.forward, f.inverse):
        for poly in pair:
            for _, c in poly.items():
                worst = max(worst, -valuation(c, v.p))
    return 2.0 * worst * math.log(v.p) * d / (d - 1)


def _green_archimedean(f: PolyAuto, p, tol: float, max_iter: int | None):
    """Certified ``(G+, G-)`` at ``p``; ``None`` unless ``f`` is regular."""
    if not is_regular(f):
        return None
    gs = green_system(f)
    pt = (complex(float(p[0])), complex(float(p[1])))
    return gs.plus(pt, tol, max_iter), gs.minus(pt, tol, max_iter), gs


def dyn_height(f: PolyAuto, p, n: int, tol: float = 1e-12, max_iter: int | None = None,
               cap: int = MEMORY_CAP) -> HeightValue:
    """Pair-orbit estimate ``d^-n h(f^n p, f^-n p)`` with its place decomposition.

    The returned ``value`` is the pair-orbit estimate; ``place_sum`` is
    ``sum_v max(G+_v, G-_v)`` computed independently (certified escape-rate
    iteration at infinity, exact valuations at finite places).
    """
    if n < 0:
        raise InputError("n must be non-negative")
    d = dynamical_degree(f)
    p = (rat(p[0]), rat(p[1]))
    fwd = exact_orbit(f.forward, p, n, cap, strict=False)
    bwd = exact_orbit(f.inverse, p, n, cap, strict=False)
    n_used = min(len(fwd), len(bwd)) - 1
    if n_used < n and n_used == 0:
        raise OverflowHorizon("memory cap reached before the first iterate")
    places = [INFINITY] + support_set(f, p)
    if p in fwd[1:]:
        # periodic orbit: h_f vanishes exactly
        zero = {v: 0.0 for v in places}
        return HeightValue(0.0, 0.0, zero, n_used, 0.0, dict(zero), 0.0, 0.0)
    qf, qb = fwd[n_used], bwd[n_used]
    scale = float(d) ** -n_used
    both = (*qf, *qb)

    def pair_part(v):
        return _local_log_plus(both, v) * scale

    workers = configure_threads()
    with ThreadPoolExecutor(max_workers=max(1, min(workers, len(places)))) as ex:
        pair_parts = list(ex.map(pair_part, places))
    contrib = dict(zip(places, pair_parts))
    value = math.fsum(pair_parts)

    consts = {v: _place_constant(f, v, d) for v in places[1:]}
    arch = _green_archimedean(f, p, tol, max_iter)
    if arch is None:
        # non-regular: the distortion of the conjugator is not tracked
        return HeightValue(value, float("nan"), contrib, n_used)
    gp, gm, gs = arch
    consts[INFINITY] = gs.log_plus_constant
    place_contrib = {INFINITY: max(gp.value, gm.value)}
    for v in places[1:]:
        # finite places: each time direction on its own, then the max
        place_contrib[v] = max(_local_log_plus(qf, v), _local_log_plus(qb, v)) * scale
    err = math.fsum(consts.values()) * scale
    place_sum = math.fsum(place_contrib.values())
    gap = abs(value - place_sum)
    finite_err = math.fsum(consts[v] for v in places[1:]) * scale
    combined = err + max(gp.error_bound, gm.error_bound) + finite_err + 1e-12
    return HeightValue(value, err, contrib, n_used, place_sum, place_contrib, gap, combined)


PERIODIC = "Periodic"
POSITIVE_HEIGHT = "PositiveHeight"
UNDECIDED = "Undecided"


@dataclass(frozen=True)
class HeightVerdict:
    verdict: str
    period: int | None = None
    height: HeightValue | None = None

    def to_json(self) -> dict:
        out = {"verdict": self.verdict}
        if self.period is not None:
            out["period"] = self.period
        if self.height is not None:
            out["height"] = self.height.to_json()
        return out


def periodicity_from_height(f: PolyAuto, p, threshold: float, n: int = 10,
                            cap: int = MEMORY_CAP) -> HeightVerdict:
    p = (rat(p[0]), rat(p[1]))
    q = p
    for k in range(1, n + 1):
        q = f(*q)
        if q == p:
            return HeightVerdict(PERIODIC, k)
        if _point_bytes(q) > cap:
            break
    h = dyn_height(f, p, n, cap=cap)
    if h.lower > threshold:
        return HeightVerdict(POSITIVE_HEIGHT, None, h)
    return HeightVerdict(UNDECIDED, None, h)


def random_rationals(count: int, seed: int = 0, bound: int = 10**6) -> list[mpq]:
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        a = int(rng.integers(-bound, bound + 1))
        b = int(rng.integers(1, bound + 1))
        if a:
            out.append(mpq(a, b))
    return out
