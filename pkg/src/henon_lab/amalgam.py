"""Bass-Serre tree combinatorics for the affine/elementary amalgam.

Translation length is the syllable count of the cyclically reduced word:
a syllable is a maximal run lying in the elementary group, or a single
affine factor outside the triangular intersection.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .automorphism import (
    JungWord,
    PolyAuto,
    _items_of,
    _normalize_items,
    _syllables,
    _to_factor,
    cyclic_reduce_items,
    is_henon_type,
    jung_decompose,
    word_power_degree,
)
from .errors import NotHenonType

ELLIPTIC = "Elliptic"
HYPERBOLIC = "Hyperbolic"


@dataclass(frozen=True)
class AmalgamWord:
    word: JungWord
    cyclically_reduced: bool

    @property
    def syllable_count(self) -> int:
        return len(_syllables(_items_of(self.word)))


@dataclass(frozen=True)
class TreeClassification:
    kind: str
    translation_length: int
    reduced_word: JungWord

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "translation_length": self.translation_length,
            "reduced_word": self.reduced_word.to_json(),
        }


def _word(items) -> JungWord:
    return JungWord(tuple(_to_factor(it) for it in items))


def amalgam_word(w: JungWord) -> AmalgamWord:
    syl = _syllables(_items_of(w))
    return AmalgamWord(w, len(syl) <= 1 or syl[0][0] != syl[-1][0])


def cyclic_reduce(w: AmalgamWord | JungWord) -> tuple[JungWord, AmalgamWord]:
    """Return ``(c, r)`` with ``w = c o r o c^-1`` and ``r`` cyclically reduced."""
    word = w.word if isinstance(w, AmalgamWord) else w
    conj, red = cyclic_reduce_items(_items_of(word))
    if not red:
        red = _normalize_items(_items_of(JungWord(())))
    return _word(conj), AmalgamWord(_word(red), True)


def classify(f: PolyAuto) -> TreeClassification:
    _, red = cyclic_reduce(jung_decompose(f))
    n = red.syllable_count
    if n >= 2:
        return TreeClassification(HYPERBOLIC, n, red.word)
    return TreeClassification(ELLIPTIC, 0, red.word)


def translation_length(f: PolyAuto) -> int:
    return classify(f).translation_length


def ping_pong_pair(f: PolyAuto, g: PolyAuto, N: int) -> tuple[PolyAuto, PolyAuto]:
    """``(f^N g^N, f^2N g^2N)``, each checked to be of Henon type."""
    if N < 1:
        raise ValueError("N must be positive")
    if not (is_henon_type(f) and is_henon_type(g)):
        raise NotHenonType("ping-pong needs two Henon-type maps")
    fN, gN = f.power(N), g.power(N)
    h1 = fN.compose(gN)
    h2 = fN.compose(fN).compose(gN).compose(gN)
    for h in (h1, h2):
        if not is_henon_type(h):
            raise NotHenonType(f"composite fails deg(h^2) > deg(h) at N = {N}")
    return h1, h2


def common_iterate(f: PolyAuto, g: PolyAuto, bound: int) -> Optional[tuple[int, int]]:
    """Smallest ``(|n|, |m|)`` (lexicographic) with ``f^n = g^m``.

    Sign convention: ``n > 0`` always; for equal ``|m|`` the positive ``m``
    is tried first.
    """
    f_deg = {n: word_power_degree(f, n) for n in range(1, bound + 1)}
    g_deg = {m: word_power_degree(g, m) for m in range(1, bound + 1)}
    cache: dict = {}

    def power(h, k):
        key = (id(h), k)
        if key not in cache:
            cache[key] = h.power(k)
        return cache[key]

    for n in range(1, bound + 1):
        for am in range(1, bound + 1):
            # deg g^-m = deg g^m in dimension two
            if g_deg[am] != f_deg[n]:
                continue
            fn = power(f, n)
            for m in (am, -am):
                if power(g, m).forward == fn.forward:
                    return n, m
    return None
