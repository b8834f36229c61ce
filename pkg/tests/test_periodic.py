import cmath

import numpy as np
import pytest
import sympy
from gmpy2 import mpq

from conftest import P
from henon_lab.automorphism import elementary_auto, henon_auto
from henon_lab.errors import InputError, NotHenonType, NotOnDiagonal, NotPeriodic
from henon_lab.periodic import (
    SADDLE,
    classify_point,
    diagonal_intersections,
    diagonal_polynomials,
    fixed_points_of_iterate,
    make_reversible,
    multiplicity_boundedness_probe,
)
from henon_lab.polyalg import UnivarPoly


def close(p, q, tol=1e-9):
    return abs(p[0] - q[0]) <= tol and abs(p[1] - q[1]) <= tol


def test_fixed_points_quadratic(quadratic):
    pts = fixed_points_of_iterate(quadratic, 1)
    assert [p.point for p in pts] == [(0j, 0j), (2 + 0j, 2 + 0j)]
    saddle = pts[1]
    assert saddle.type == SADDLE
    assert saddle.multipliers[0].real == pytest.approx(2 + 3**0.5, abs=1e-12)


def test_period_two_points(quadratic):
    pts = fixed_points_of_iterate(quadratic, 2)
    assert sum(p.multiplicity for p in pts) == 4
    w = cmath.exp(2j * cmath.pi / 3)
    cycle = [(2 * w, 2 * w**2), (2 * w**2, 2 * w)]
    for c in cycle:
        match = [p for p in pts if close(p.point, c)]
        assert len(match) == 1 and match[0].exact_period == 2


def sympy_fixed_points(f, n):
    x, y = sympy.symbols("x y")

    def to_sym(p):
        return sum(sympy.Rational(int(c.numerator), int(c.denominator)) * x**i * y**j for (i, j), c in p.items())

    fx, fy = to_sym(f.forward[0]), to_sym(f.forward[1])
    gx, gy = x, y
    for _ in range(n):
        gx, gy = (fx.subs({x: gx, y: gy}, simultaneous=True), fy.subs({x: gx, y: gy}, simultaneous=True))
    sols = sympy.solve([gx - x, gy - y], [x, y], dict=True)
    return [(complex(s[x]), complex(s[y])) for s in sols]


def test_cross_check_with_sympy_solve(cubic):
    ref = sympy_fixed_points(cubic, 1)
    ours = fixed_points_of_iterate(cubic, 1)
    assert len(ref) == len(ours) == 3
    for r in ref:
        assert any(close(p.point, r, 1e-10) for p in ours)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_counts_with_multiplicity(dissipative, n):
    pts = fixed_points_of_iterate(dissipative, n)
    assert sum(p.multiplicity for p in pts) == 2**n


def test_multiplier_identity(dissipative):
    for p in fixed_points_of_iterate(dissipative, 3):
        # multipliers belong to the exact period
        u, s = p.multipliers
        k = p.exact_period
        assert abs(abs(u * s) - 2.0**k) <= 1e-8 * 2.0**k


def test_conjugated_map_counts():
    f = henon_auto(1, P(0, 0, 1))
    c = elementary_auto(1, 0, P(0, 0, 0, 1))
    g = c.inv().compose(f).compose(c)
    pts = fixed_points_of_iterate(g, 2)
    assert sum(p.multiplicity for p in pts) == 4


def test_rejects_non_henon():
    with pytest.raises(NotHenonType):
        fixed_points_of_iterate(elementary_auto(1, 0, P(0, 0, 1)), 1)
    with pytest.raises(InputError):
        fixed_points_of_iterate(henon_auto(1, P(0, 0, 1)), 0)


def test_classify_point(quadratic):
    pp = classify_point(quadratic, (2.0, 2.0), 1)
    assert pp.exact_period == 1 and pp.type == SADDLE
    with pytest.raises(NotPeriodic):
        classify_point(quadratic, (1.0, 0.0), 1)


def test_reversible_construction():
    rp = make_reversible(P(0, 0, 1))
    assert rp.sigma.compose(rp.f).compose(rp.sigma) == rp.f.inv()
    with pytest.raises(InputError):
        make_reversible(P(0, 1))


def test_diagonal_polynomial_closed_form():
    rp = make_reversible(P(0, 0, 1))
    a, b = diagonal_polynomials(rp.f, 2)
    assert a - b == UnivarPoly([0, 0, 0, -2, 1])  # t^4 - 2 t^3


def test_diagonal_intersections_quadratic():
    rp = make_reversible(P(0, 0, 1))
    pts = diagonal_intersections(rp, 2)
    assert [(d.point, d.multiplicity) for d in pts] == [((0j, 0j), 3), ((2 + 0j, 2 + 0j), 1)]


@pytest.mark.parametrize("coeffs,d", [((1, 0, 0, 1), 3), ((0, -1, 0, 0, 1), 4)])
def test_diagonal_counts(coeffs, d):
    rp = make_reversible(P(*coeffs))
    for n in (1, 2):
        pts = diagonal_intersections(rp, n)
        assert sum(p.multiplicity for p in pts) == d**n
        assert max(p.residual for p in pts) <= 1e-8


def test_multiplicity_probe():
    rp = make_reversible(P(0, 0, 1))
    assert multiplicity_boundedness_probe(rp, (0, 0), range(1, 7)) == [1, 3, 1, 3, 1, 3]
    assert multiplicity_boundedness_probe(rp, (2, 2), range(1, 5)) == [1, 1, 1, 1]
    with pytest.raises(NotOnDiagonal):
        multiplicity_boundedness_probe(rp, (1, 2), [1])


def test_points_on_diagonal_are_periodic():
    rp = make_reversible(P(1, 0, 0, 1))
    f = rp.f
    for d in diagonal_intersections(rp, 2):
        x, y = d.point
        for _ in range(4):
            x, y = complex(f.forward[0](x, y)), complex(f.forward[1](x, y))
        assert abs(x - d.point[0]) + abs(y - d.point[1]) <= 1e-7 * max(1, abs(d.point[0]))
