import random

import pytest

from conftest import P, corpus_specs, random_jung_word
from henon_lab.amalgam import (
    ELLIPTIC,
    HYPERBOLIC,
    classify,
    common_iterate,
    cyclic_reduce,
    ping_pong_pair,
    translation_length,
)
from henon_lab.automorphism import affine_auto, elementary_auto, henon_auto, is_henon_type, jung_decompose
from henon_lab.errors import NotHenonType


def test_classification_matches_furter_on_corpus():
    for name, spec in corpus_specs().items():
        kind = classify(spec.f).kind
        assert (kind == HYPERBOLIC) == is_henon_type(spec.f), name


def test_elliptic_for_triangular():
    assert classify(elementary_auto(1, 0, P(0, 0, 1))).kind == ELLIPTIC
    assert translation_length(affine_auto(0, 1, 1, 0)) == 0


@pytest.mark.parametrize("n", [-3, -2, -1, 1, 2, 3])
def test_translation_length_scales(n):
    f = henon_auto(1, P(0, 0, 1)).compose(henon_auto(1, P(1, 0, 0, 1)))
    assert translation_length(f.power(n)) == abs(n) * translation_length(f)


def test_translation_length_conjugation_invariant():
    f = henon_auto(1, P(0, 0, 1))
    phi = elementary_auto(1, 2, P(0, 0, 0, 1))
    assert translation_length(phi.compose(f).compose(phi.inv())) == translation_length(f) == 2


@pytest.mark.parametrize("seed", range(8))
def test_cyclic_reduce_recomposes(seed):
    rng = random.Random(100 + seed)
    w = random_jung_word(rng, rng.randint(2, 6))
    c, r = cyclic_reduce(w)
    assert c.recompose().compose(r.word.recompose()).compose(c.recompose().inv()) == w.recompose()


def test_common_iterate_examples():
    f = henon_auto(1, P(0, 0, 1))
    assert common_iterate(f, f.power(3), 4) == (3, 1)
    assert common_iterate(f, f.power(-2), 4) == (2, -1)
    assert common_iterate(f, henon_auto(1, P(0, 0, 0, 1)), 3) is None


def test_ping_pong():
    f = henon_auto(1, P(0, 0, 1))
    g = henon_auto(1, P(0, 0, 0, 1))
    h1, h2 = ping_pong_pair(f, g, 1)
    assert is_henon_type(h1) and is_henon_type(h2)
    with pytest.raises(NotHenonType):
        ping_pong_pair(f, affine_auto(1, 0, 0, 1), 1)
    assert len(jung_decompose(h1).factors) >= 3
