"""Polynomial automorphisms of the plane and their Jung factorizations."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from gmpy2 import mpq

from .errors import InputError, NonConstantJacobian, NotHenonType, NotInverse
from .polyalg import BivarPoly, Rational, UnivarPoly, X, Y, rat, rat_str

Pair = tuple[BivarPoly, BivarPoly]

_IDENTITY: Pair = (X, Y)


def compose_pairs(f: Pair, g: Pair) -> Pair:
    """Forward components of ``f o g``."""
    return (f[0].compose2(g[0], g[1]), f[1].compose2(g[0], g[1]))


def _jacobian_poly(f: Pair) -> BivarPoly:
    return f[0].partial_x() * f[1].partial_y() - f[0].partial_y() * f[1].partial_x()


@dataclass(frozen=True, eq=False)
class PolyAuto:
    """A polynomial automorphism with its (verified) polynomial inverse."""

    forward: Pair
    inverse: Pair
    degree: int
    jacobian: Rational

    def __eq__(self, other) -> bool:
        return isinstance(other, PolyAuto) and self.forward == other.forward

    def __hash__(self) -> int:
        return hash(self.forward)

    def compose(self, other: "PolyAuto") -> "PolyAuto":
        """``self o other``."""
        fwd = compose_pairs(self.forward, other.forward)
        inv = compose_pairs(other.inverse, self.inverse)
        return _trusted(fwd, inv, self.jacobian * other.jacobian)

    def __matmul__(self, other: "PolyAuto") -> "PolyAuto":
        return self.compose(other)

    def inv(self) -> "PolyAuto":
        return _trusted(self.inverse, self.forward, 1 / self.jacobian)

    def power(self, n: int) -> "PolyAuto":
        base = self if n >= 0 else self.inv()
        n = abs(n)
        result = identity()
        while n:
            if n & 1:
                result = result.compose(base)
            n >>= 1
            if n:
                base = base.compose(base)
        return result

    def __call__(self, x, y):
        return self.forward[0](x, y), self.forward[1](x, y)

    def apply_inverse(self, x, y):
        return self.inverse[0](x, y), self.inverse[1](x, y)

    def is_affine(self) -> bool:
        return self.degree <= 1

    @cached_property
    def coefficient_denominators(self) -> set[int]:
        out: set[int] = set()
        for p in (*self.forward, *self.inverse):
            out |= p.denominators()
        return out

    def numeric(self) -> "NumericMap":
        return NumericMap.from_pair(self.forward)

    def numeric_inverse(self) -> "NumericMap":
        return NumericMap.from_pair(self.inverse)

    def to_json(self) -> dict:
        return {
            "forward": [p.to_json() for p in self.forward],
            "inverse": [p.to_json() for p in self.inverse],
        }

    def __repr__(self) -> str:
        return f"PolyAuto(({self.forward[0]}, {self.forward[1]}))"


def _trusted(forward: Pair, inverse: Pair, jac) -> PolyAuto:
    return PolyAuto(forward, inverse, max(forward[0].degree, forward[1].degree), rat(jac))


def identity() -> PolyAuto:
    return _trusted(_IDENTITY, _IDENTITY, 1)


def make_auto(forward: Sequence[BivarPoly], inverse: Sequence[BivarPoly]) -> PolyAuto:
    """Validate a forward/inverse pair exactly and attach degree and Jacobian."""
    fwd = (forward[0], forward[1])
    inv = (inverse[0], inverse[1])
    if compose_pairs(fwd, inv) != _IDENTITY or compose_pairs(inv, fwd) != _IDENTITY:
        raise NotInverse("forward o inverse is not the identity")
    jac = _jacobian_poly(fwd)
    if not jac.is_constant() or jac.is_zero():
        raise NonConstantJacobian(f"Jacobian determinant {jac} is not a nonzero constant")
    return _trusted(fwd, inv, jac.constant_value())


def jacobian(f: PolyAuto) -> Rational:
    return f.jacobian


def auto_from_json(obj) -> PolyAuto:
    try:
        fwd = [BivarPoly.from_json(p) for p in obj["forward"]]
        inv = [BivarPoly.from_json(p) for p in obj["inverse"]]
    except (KeyError, TypeError) as exc:
        raise InputError("automorphism needs 'forward' and 'inverse' polynomial pairs") from exc
    if len(fwd) != 2 or len(inv) != 2:
        raise InputError("'forward' and 'inverse' must each hold two polynomials")
    return make_auto(fwd, inv)


class NumericMap:
    """Complex-double evaluation data for a polynomial pair (kernel input)."""

    def __init__(self, ei0, ej0, c0, ei1, ej1, c1):
        self.ei0, self.ej0, self.c0 = ei0, ej0, c0
        self.ei1, self.ej1, self.c1 = ei1, ej1, c1

    @classmethod
    def from_pair(cls, pair: Pair) -> "NumericMap":
        return cls(*pair[0].to_arrays(), *pair[1].to_arrays())


# ---------------------------------------------------------------------------
# Affine, elementary and Henon constructors
# ---------------------------------------------------------------------------


def affine_auto(m11, m12, m21, m22, t1=0, t2=0) -> PolyAuto:
    m11, m12, m21, m22, t1, t2 = map(rat, (m11, m12, m21, m22, t1, t2))
    det = m11 * m22 - m12 * m21
    if not det:
        raise InputError("singular affine map")
    fwd = (m11 * X + m12 * Y + t1, m21 * X + m22 * Y + t2)
    i11, i12, i21, i22 = m22 / det, -m12 / det, -m21 / det, m11 / det
    inv = (
        i11 * (X - t1) + i12 * (Y - t2),
        i21 * (X - t1) + i22 * (Y - t2),
    )
    return _trusted(fwd, inv, det)


def swap() -> PolyAuto:
    return affine_auto(0, 1, 1, 0)


def elementary_auto(a, b, P: UnivarPoly) -> PolyAuto:
    """``(x, y) -> (a x + b, y + P(x))``."""
    a, b = rat(a), rat(b)
    if not a:
        raise InputError("elementary map needs a != 0")
    Px = BivarPoly.from_univariate(P, "x")
    fwd = (a * X + b, Y + Px)
    xin = (X - b) * (1 / a)
    inv = (xin, Y - Px.compose2(xin, Y))
    return _trusted(fwd, inv, a)


def henon_auto(a, P: UnivarPoly) -> PolyAuto:
    """Generalized Henon map ``(x, y) -> (a y, x + P(y))``."""
    a = rat(a)
    if not a:
        raise InputError("Henon factor needs a != 0")
    Py = BivarPoly.from_univariate(P, "y")
    fwd = (a * Y, X + Py)
    # x' = a y, y' = x + P(y)  =>  y = x'/a, x = y' - P(x'/a)
    inv = (Y - Py.compose2(X, X * (1 / a)), X * (1 / a))
    return _trusted(fwd, inv, -a)


def reversible_henon(P: UnivarPoly) -> PolyAuto:
    """``(x, y) -> (P(x) - y, x)`` with inverse ``(y, P(y) - x)``."""
    Px = BivarPoly.from_univariate(P, "x")
    Py = BivarPoly.from_univariate(P, "y")
    return _trusted((Px - Y, X), (Y, Py - X), 1)


# ---------------------------------------------------------------------------
# Jung factors and words
# ---------------------------------------------------------------------------

AFFINE = "affine"
ELEMENTARY = "elementary"


@dataclass(frozen=True)
class JungFactor:
    """Affine ``(M (x,y) + t)`` or elementary ``(a x + b, y + P(x))`` factor."""

    kind: str
    matrix: tuple = ()
    translation: tuple = ()
    a: Rational = mpq(1)
    b: Rational = mpq(0)
    P: UnivarPoly = field(default_factory=UnivarPoly)

    @staticmethod
    def affine(m11, m12, m21, m22, t1=0, t2=0) -> "JungFactor":
        m = tuple(map(rat, (m11, m12, m21, m22)))
        if not m[0] * m[3] - m[1] * m[2]:
            raise InputError("affine factor must be invertible")
        return JungFactor(AFFINE, matrix=m, translation=(rat(t1), rat(t2)))

    @staticmethod
    def elementary(a, b, P: UnivarPoly) -> "JungFactor":
        if not rat(a):
            raise InputError("elementary factor needs a != 0")
        return JungFactor(ELEMENTARY, a=rat(a), b=rat(b), P=P)

    @property
    def is_affine(self) -> bool:
        return self.kind == AFFINE

    def is_triangular(self) -> bool:
        """Membership in the intersection of the affine and elementary groups."""
        return self.kind == ELEMENTARY or self.matrix[1] == 0

    def to_auto(self) -> PolyAuto:
        if self.kind == AFFINE:
            return affine_auto(*self.matrix, *self.translation)
        return elementary_auto(self.a, self.b, self.P)

    def to_json(self) -> dict:
        if self.kind == AFFINE:
            return {
                "kind": AFFINE,
                "matrix": [[rat_str(self.matrix[0]), rat_str(self.matrix[1])],
                           [rat_str(self.matrix[2]), rat_str(self.matrix[3])]],
                "translation": [rat_str(t) for t in self.translation],
            }
        return {"kind": ELEMENTARY, "a": rat_str(self.a), "b": rat_str(self.b), "P": self.P.to_json()}

    @staticmethod
    def from_json(obj) -> "JungFactor":
        if obj.get("kind") == AFFINE:
            (m11, m12), (m21, m22) = obj["matrix"]
            return JungFactor.affine(m11, m12, m21, m22, *obj["translation"])
        if obj.get("kind") == ELEMENTARY:
            return JungFactor.elementary(obj["a"], obj["b"], UnivarPoly(rat(c) for c in obj["P"]))
        raise InputError(f"unknown factor kind {obj.get('kind')!r}")


@dataclass(frozen=True)
class JungWord:
    """``factors[0] o factors[1] o ... o factors[-1]``."""

    factors: tuple[JungFactor, ...]

    def recompose(self) -> PolyAuto:
        out = identity()
        for fac in self.factors:
            out = out.compose(fac.to_auto())
        return out

    def inverse(self) -> "JungWord":
        return JungWord(tuple(_factor_inverse(f) for f in reversed(self.factors)))

    def __len__(self) -> int:
        return len(self.factors)

    def to_json(self) -> list:
        return [f.to_json() for f in self.factors]


# Internal representations used by the normalizer.
#   affine:     ("A", (m11, m12, m21, m22), (t1, t2))
#   elementary: ("E", Q)   meaning (x, y + Q(x)), Q with only degree >= 2 terms


def _aff(m, t):
    return ("A", tuple(m), tuple(t))


def _aff_compose(f, g):
    """Affine ``f o g``."""
    (a11, a12, a21, a22), (s1, s2) = f[1], f[2]
    (b11, b12, b21, b22), (t1, t2) = g[1], g[2]
    m = (
        a11 * b11 + a12 * b21,
        a11 * b12 + a12 * b22,
        a21 * b11 + a22 * b21,
        a21 * b12 + a22 * b22,
    )
    t = (a11 * t1 + a12 * t2 + s1, a21 * t1 + a22 * t2 + s2)
    return _aff(m, t)


def _aff_inverse(f):
    (m11, m12, m21, m22), (t1, t2) = f[1], f[2]
    det = m11 * m22 - m12 * m21
    i = (m22 / det, -m12 / det, -m21 / det, m11 / det)
    return _aff(i, (-(i[0] * t1 + i[1] * t2), -(i[2] * t1 + i[3] * t2)))


def _aff_is_identity(f) -> bool:
    return f[1] == (1, 0, 0, 1) and f[2] == (0, 0)


def _split_low(P: UnivarPoly) -> tuple[UnivarPoly, UnivarPoly]:
    cs = list(P.coeffs)
    low = cs[:2]
    high = [mpq(0), mpq(0)] + cs[2:] if len(cs) > 2 else []
    return UnivarPoly(low), UnivarPoly(high)


def _poly_affine_subst(P: UnivarPoly, alpha, beta) -> UnivarPoly:
    """``P(alpha x + beta)``."""
    out = UnivarPoly()
    lin = UnivarPoly([beta, alpha])
    for c in reversed(P.coeffs):
        out = out * lin + UnivarPoly([c])
    return out


def _triangular_split(alpha, beta, gamma, R: UnivarPoly) -> list:
    """``(alpha x + beta, gamma y + R(x)) = L o (x, y + Q(x))`` with L affine."""
    low, high = _split_low(R)
    c0 = low.coeffs[0] if low.degree >= 0 else mpq(0)
    c1 = low.coeffs[1] if low.degree >= 1 else mpq(0)
    L = _aff((alpha, mpq(0), c1, gamma), (beta, c0))
    if high.is_zero():
        return [L]
    return [L, ("E", high * (1 / gamma))]


def _raw_from_factor(fac: JungFactor) -> list:
    if fac.kind == AFFINE:
        return [_aff(fac.matrix, fac.translation)]
    # (a x + b, y + P(x)) = (a x + b, y + P_low(x)) o (x, y + P_high(x))
    return _triangular_split(fac.a, fac.b, mpq(1), fac.P)


def _to_factor(item) -> JungFactor:
    if item[0] == "A":
        return JungFactor(AFFINE, matrix=item[1], translation=item[2])
    return JungFactor(ELEMENTARY, a=mpq(1), b=mpq(0), P=item[1])


def _factor_inverse(fac: JungFactor) -> JungFactor:
    if fac.kind == AFFINE:
        return _to_factor(_aff_inverse(_aff(fac.matrix, fac.translation)))
    # (a x + b, y + P(x))^-1 = ((x - b)/a, y - P((x - b)/a))
    inv_a = 1 / fac.a
    return JungFactor.elementary(inv_a, -fac.b * inv_a, -_poly_affine_subst(fac.P, inv_a, -fac.b * inv_a))


def _is_tri(item) -> bool:
    return item[0] == "E" or item[1][1] == 0


def _normalize_items(items: list) -> list:
    """Merge, absorb and re-split until the alternating normal form is reached."""
    items = list(items)
    changed = True
    while changed:
        changed = False
        out: list = []
        for it in items:
            if out and out[-1][0] == it[0]:
                prev = out.pop()
                if it[0] == "A":
                    merged = _aff_compose(prev, it)
                    if not _aff_is_identity(merged):
                        out.append(merged)
                else:
                    q = prev[1] + it[1]
                    if not q.is_zero():
                        out.append(("E", q))
                changed = True
                continue
            if it[0] == "A" and _aff_is_identity(it):
                changed = True
                continue
            out.append(it)
        items = out
        # absorb interior triangular affines: E_P o T o E_Q is triangular
        for k in range(1, len(items) - 1):
            mid = items[k]
            if mid[0] == "A" and mid[1][1] == 0 and items[k - 1][0] == "E" and items[k + 1][0] == "E":
                P, Q = items[k - 1][1], items[k + 1][1]
                (alpha, _, delta, gamma), (beta, eps) = mid[1], mid[2]
                R = Q * gamma + UnivarPoly([eps, delta]) + _poly_affine_subst(P, alpha, beta)
                items = items[: k - 1] + _triangular_split(alpha, beta, gamma, R) + items[k + 2:]
                changed = True
                break
    return items


def normalize_word(word: JungWord) -> JungWord:
    items = []
    for fac in word.factors:
        items.extend(_raw_from_factor(fac))
    items = _normalize_items(items)
    if not items:
        items = [_aff((mpq(1), mpq(0), mpq(0), mpq(1)), (mpq(0), mpq(0)))]
    return JungWord(tuple(_to_factor(it) for it in items))


def jung_decompose(f: PolyAuto) -> JungWord:
    """Factor ``f`` into an alternating word of affine and elementary maps.

    Left reduction: whenever ``deg f2 > deg f1`` the top part of ``f2`` is a
    power of the top part of ``f1`` and an elementary map lowers it; equal
    degrees are resolved by a linear elimination, ``deg f1 > deg f2`` by the
    swap.  Each step strictly lowers the pair of degrees.
    """
    g = f.forward
    prefix: list = []
    sw = _aff((mpq(0), mpq(1), mpq(1), mpq(0)), (mpq(0), mpq(0)))
    while max(g[0].degree, g[1].degree) > 1:
        d1, d2 = g[0].degree, g[1].degree
        if d1 > d2:
            prefix.append(sw)
            g = (g[1], g[0])
            continue
        top1, top2 = g[0].homogeneous_part(d1), g[1].homogeneous_part(d2)
        if d1 == d2:
            m, c = next(iter(top1.items()))
            ratio = top2.coeff(*m) / c
            if top2 != top1 * ratio:
                raise NotInverse("top-degree parts are not proportional")
            prefix.append(_aff((mpq(1), mpq(0), ratio, mpq(1)), (mpq(0), mpq(0))))
            g = (g[0], g[1] - g[0] * ratio)
            continue
        if d1 < 1 or d2 % d1:
            raise NotInverse("degrees violate the automorphism divisibility condition")
        k = d2 // d1
        powk = top1 ** k
        m, c = next(iter(powk.items()))
        ratio = top2.coeff(*m) / c
        if top2 != powk * ratio:
            raise NotInverse("top-degree part is not a power of the other")
        prefix.append(("E", UnivarPoly([0] * k + [ratio])))
        g = (g[0], g[1] - g[0] ** k * ratio)
    lin = [[g[r].coeff(1, 0), g[r].coeff(0, 1), g[r].coeff(0, 0)] for r in (0, 1)]
    if lin[0][0] * lin[1][1] - lin[0][1] * lin[1][0] == 0:
        raise NotInverse("linear part is singular")
    prefix.append(_aff((lin[0][0], lin[0][1], lin[1][0], lin[1][1]), (lin[0][2], lin[1][2])))
    items = _normalize_items(prefix)
    if not items:
        items = [_aff((mpq(1), mpq(0), mpq(0), mpq(1)), (mpq(0), mpq(0)))]
    return JungWord(tuple(_to_factor(it) for it in items))


def items_degree(items: list) -> int:
    """Degree of a normalized word: the product of its elementary degrees."""
    d = 1
    for it in items:
        if it[0] == "E":
            d *= it[1].degree
    return d


def word_power_degree(f: PolyAuto, n: int) -> int:
    """``deg(f^n)`` read off the normal form of the n-fold word (no expansion)."""
    items = _items_of(jung_decompose(f))
    if n < 0:
        items = _items_of(JungWord(tuple(_to_factor(it) for it in items)).inverse())
        n = -n
    return items_degree(_normalize_items(items * n)) if n else 1


def is_henon_type(f: PolyAuto) -> bool:
    """Furter's criterion ``deg(f o f) > deg f``.

    ``deg(f o f)`` is read from the reduced Jung word of ``f o f`` rather than
    by expanding the composite.
    """
    if f.degree <= 1:
        return False
    return word_power_degree(f, 2) > f.degree


def is_regular(f: PolyAuto) -> bool:
    """``deg(f o f) = deg(f)**2`` with ``deg f >= 2``."""
    if f.degree < 2:
        return False
    return word_power_degree(f, 2) == f.degree ** 2


# ---------------------------------------------------------------------------
# Conjugation to a composition of generalized Henon maps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RegularForm:
    """``conjugator^-1 o f o conjugator = g_1 o ... o g_m``, ``g_i = (a_i y, x + P_i(y))``."""

    conjugator: PolyAuto
    generalized_henon_factors: tuple[tuple[Rational, UnivarPoly], ...]

    def composed(self) -> PolyAuto:
        out = identity()
        for a, P in self.generalized_henon_factors:
            out = out.compose(henon_auto(a, P))
        return out

    @property
    def degree(self) -> int:
        d = 1
        for _, P in self.generalized_henon_factors:
            d *= P.degree
        return d

    def to_json(self) -> dict:
        return {
            "conjugator": self.conjugator.to_json(),
            "factors": [{"a": rat_str(a), "P": P.to_json()} for a, P in self.generalized_henon_factors],
        }


def _syllables(items: list) -> list[list]:
    """Group normal-form items into amalgam syllables (boundary triangular affines join E)."""
    groups: list[list] = []
    for it in items:
        kind = "E" if it[0] == "E" else "A"
        if kind == "A" and _is_tri(it):
            kind = "T"
        groups.append([kind, it])
    syl: list[list] = []
    for kind, it in groups:
        if kind == "T":
            if syl and syl[-1][0] == "E":
                syl[-1][1].append(it)
            else:
                syl.append(["E", [it]])
            continue
        if kind == "E" and syl and syl[-1][0] == "E":
            syl[-1][1].append(it)
            continue
        syl.append([kind, [it]])
    return syl


def syllables(word: JungWord) -> list[tuple[str, list[JungFactor]]]:
    items = [_raw_from_factor(f) for f in word.factors]
    flat = _normalize_items([x for it in items for x in it])
    return [(k, [_to_factor(x) for x in its]) for k, its in _syllables(flat)]


def _items_of(word: JungWord) -> list:
    out = []
    for f in word.factors:
        out.extend(_raw_from_factor(f))
    return _normalize_items(out)


def cyclic_reduce_items(items: list) -> tuple[list, list]:
    """Returns (conjugator items, reduced items) with w = c o r o c^-1."""
    conj: list = []
    items = _normalize_items(items)
    while True:
        syl = _syllables(items)
        if len(syl) <= 1 or syl[0][0] != syl[-1][0]:
            return conj, items
        first = syl[0][1]
        conj = conj + first
        items = _normalize_items(items[len(first):] + first)


def _items_auto(items: list) -> PolyAuto:
    return JungWord(tuple(_to_factor(it) for it in items)).recompose()


def _tri_of_syllable(items: list):
    """Compose an E-syllable into (alpha, beta, gamma, R): (alpha x + beta, gamma y + R(x))."""
    alpha, beta, gamma, R = mpq(1), mpq(0), mpq(1), UnivarPoly()
    for it in items:
        if it[0] == "E":
            # (alpha x+beta, gamma y + R(x)) o (x, y + Q(x))
            R = R + it[1] * gamma
        else:
            (m11, _, m21, m22), (t1, t2) = it[1], it[2]
            # (alpha x + beta, gamma y + R(x)) o (m11 x + t1, m21 x + m22 y + t2)
            R = UnivarPoly([gamma * t2, gamma * m21]) + _poly_affine_subst(R, m11, t1)
            beta = alpha * t1 + beta
            alpha = alpha * m11
            gamma = gamma * m22
    return alpha, beta, gamma, R


def _tri_compose(s, t):
    """Triangular ``s o t``."""
    a1, b1, g1, R1 = s
    a2, b2, g2, R2 = t
    return (a1 * a2, a1 * b2 + b1, g1 * g2, R2 * g1 + _poly_affine_subst(R1, a2, b2))


def _bruhat(aff) -> tuple:
    """``a = t o swap o t'`` with t, t' triangular affine; requires m12 != 0."""
    (m11, m12, m21, m22), (v1, v2) = aff[1], aff[2]
    t_prime = (mpq(1), mpq(0), m12, UnivarPoly([v1, m11]))  # (x, m12 y + m11 x + v1)
    c_y = m21 - m22 * m11 / m12
    t = (mpq(1), mpq(0), c_y, UnivarPoly([v2 - m22 * v1 / m12, m22 / m12]))
    return t, t_prime


def _tri_direct(alpha, beta, gamma, R) -> PolyAuto:
    Rx = BivarPoly.from_univariate(R, "x")
    fwd = (alpha * X + beta, gamma * Y + Rx)
    xin = (X - beta) * (1 / alpha)
    inv = (xin, (Y - Rx.compose2(xin, Y)) * (1 / gamma))
    return _trusted(fwd, inv, alpha * gamma)


def to_regular_form(f: PolyAuto) -> RegularForm:
    """Conjugate a Henon-type map to a composition of ``(a y, x + P(y))`` maps."""
    if not is_henon_type(f):
        raise NotHenonType(f"{f!r} is not of Henon type")
    conj_items, r = cyclic_reduce_items(_items_of(jung_decompose(f)))
    conj = _items_auto(conj_items) if conj_items else identity()
    syl = _syllables(r)
    if syl[0][0] == "A":
        first = syl[0][1]
        conj = conj.compose(_items_auto(first))
        r = _normalize_items(r[len(first):] + first)
        syl = _syllables(r)
    # r = E_1 A_1 E_2 A_2 ... E_m A_m
    es = [_tri_of_syllable(s[1]) for s in syl if s[0] == "E"]
    As = [s[1][0] for s in syl if s[0] == "A"]
    m = len(es)
    assert len(As) == m and m >= 1
    ts, tps = zip(*(_bruhat(a) for a in As))
    # e'_i = t'_{i-1} o E_i o t_i, with t'_0 := t'_m
    eps = []
    for i in range(m):
        prev = tps[i - 1]
        eps.append(_tri_compose(_tri_compose(prev, es[i]), ts[i]))
    conj = conj.compose(_tri_direct(*tps[m - 1]).inv())
    # h_i = e'_i o swap = (alpha y + beta, gamma x + P(y)); D_i = (x + beta_{i+1}, gamma_{i+1} y)
    alphas = [e[0] for e in eps]
    betas = [e[1] for e in eps]
    gammas = [e[2] for e in eps]
    Ps = [e[3] for e in eps]
    factors = []
    for i in range(m):
        nxt = (i + 1) % m
        q_i, r_i = betas[nxt], gammas[nxt]
        a_i = alphas[i] * r_i
        P_t = _poly_affine_subst(Ps[i], r_i, mpq(0)) * (1 / gammas[i]) + UnivarPoly([q_i])
        factors.append((a_i, P_t))
    D0 = affine_auto(1, 0, 0, gammas[0], betas[0], 0)
    conj = conj.compose(D0)
    form = RegularForm(conj, tuple(factors))
    lhs = conj.inv().compose(f).compose(conj)
    if lhs.forward != form.composed().forward:
        raise AssertionError("regular form failed exact verification")
    return form
