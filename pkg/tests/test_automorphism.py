import random

import pytest
from gmpy2 import mpq

from conftest import P, corpus_specs, random_jung_word
from henon_lab.automorphism import (
    affine_auto,
    elementary_auto,
    henon_auto,
    is_henon_type,
    is_regular,
    jung_decompose,
    make_auto,
    reversible_henon,
    swap,
    to_regular_form,
    word_power_degree,
)
from henon_lab.errors import NotHenonType, NotInverse
from henon_lab.polyalg import X, Y, rat


def test_make_auto_validates():
    with pytest.raises(NotInverse):
        make_auto((X + Y**2, Y), (X + Y**2, Y))
    with pytest.raises(NotInverse):
        make_auto((X**3, Y), (X, Y))


def test_jacobians():
    assert reversible_henon(P(0, 0, 1)).jacobian == 1
    assert reversible_henon(P(1, -3, 0, 5)).jacobian == 1
    assert henon_auto(rat("3/10"), P(0, 0, 1)).jacobian == mpq(-3, 10)
    assert swap().jacobian == -1
    # (x, y) -> (-y, p(y^2) - x) with p = t^2 + t + 1 has Jacobian -1
    f = make_auto((-Y, (Y**2) ** 2 + Y**2 + 1 - X), (((X**2) ** 2 + X**2 + 1) - Y, -X))
    assert f.jacobian == -1


def test_jacobian_multiplicative(quadratic, dissipative):
    h = quadratic.compose(dissipative)
    assert h.jacobian == quadratic.jacobian * dissipative.jacobian
    assert dissipative.inv().jacobian == 1 / dissipative.jacobian


@pytest.mark.parametrize("seed", range(20))
def test_jung_roundtrip(seed):
    rng = random.Random(seed)
    f = random_jung_word(rng, rng.randint(1, 5)).recompose()
    word = jung_decompose(f)
    assert word.recompose() == f


def test_jung_word_alternates():
    f = henon_auto(1, P(0, 0, 1)).compose(henon_auto(2, P(1, 0, 0, 1)))
    kinds = [fac.kind for fac in jung_decompose(f).factors]
    assert all(a != b for a, b in zip(kinds, kinds[1:]))


def test_furter_and_regularity():
    f = henon_auto(1, P(0, 0, 1))
    assert is_henon_type(f) and is_regular(f)
    e = elementary_auto(1, 0, P(0, 0, 1))
    assert not is_henon_type(e)
    conj = elementary_auto(1, 0, P(0, 0, 0, 1))
    g = conj.inv().compose(f).compose(conj)
    assert is_henon_type(g) and not is_regular(g)


def test_word_power_degree_matches_composition():
    f = henon_auto(1, P(0, 0, 1)).compose(affine_auto(1, 1, 0, 1))
    for n in (1, 2, 3):
        assert word_power_degree(f, n) == f.power(n).degree


def test_regular_form_pattern():
    f = henon_auto(1, P(0, 0, 1))
    form = to_regular_form(f)
    assert form.composed() == f or form.conjugator.inv().compose(f).compose(form.conjugator) == form.composed()
    assert form.degree == 2


def test_regular_form_recovers_conjugation():
    phi = affine_auto(1, 2, 0, 1, 3, -1)
    base = henon_auto(1, P(0, 0, 1))
    f = phi.compose(base).compose(phi.inv())
    form = to_regular_form(f)
    c = form.conjugator
    g = form.composed()
    assert c.inv().compose(f).compose(c) == g
    for n in (2, 3):
        assert g.power(n).degree == g.degree**n


def test_regular_form_rejects_elementary():
    with pytest.raises(NotHenonType):
        to_regular_form(elementary_auto(1, 0, P(0, 0, 1)))


def test_corpus_parses():
    specs = corpus_specs()
    assert {"quadratic", "cubic", "independent_a", "independent_b"} <= set(specs)
    for spec in specs.values():
        assert spec.f.jacobian != 0
