"""Scalar evaluation of polynomial maps and their derivatives.

Works with Python ``complex`` or ``mpmath.mpc`` arguments; the coefficient
type follows the ``mp`` flag.
"""
from __future__ import annotations

import mpmath
import numpy as np

from .polyalg import BivarPoly


class PairEval:
    """Value and Jacobian matrix of ``(P, Q)`` at a point."""

    def __init__(self, pair: tuple[BivarPoly, BivarPoly], mp: bool = False):
        self.mp = mp
        conv = (lambda c: mpmath.mpf(int(c.numerator)) / int(c.denominator)) if mp else float
        self.terms = [[(i, j, conv(c)) for (i, j), c in sorted(p.items())] for p in pair]
        self.maxe = max([max(i, j) for t in self.terms for i, j, _ in t] + [1])

    def _powers(self, z):
        out = [z ** 0 if self.mp else 1.0 + 0j]
        for _ in range(self.maxe):
            out.append(out[-1] * z)
        return out

    def __call__(self, x, y):
        xp, yp = self._powers(x), self._powers(y)
        return tuple(sum((c * xp[i] * yp[j] for i, j, c in t), 0 * x) for t in self.terms)

    def value_and_jacobian(self, x, y):
        xp, yp = self._powers(x), self._powers(y)
        vals, rows = [], []
        zero = 0 * x
        for t in self.terms:
            v = dx = dy = zero
            for i, j, c in t:
                v += c * xp[i] * yp[j]
                if i:
                    dx += c * i * xp[i - 1] * yp[j]
                if j:
                    dy += c * j * xp[i] * yp[j - 1]
            vals.append(v)
            rows.append((dx, dy))
        return tuple(vals), rows


def iterate(ev: PairEval, p, n: int):
    x, y = p
    for _ in range(n):
        x, y = ev(x, y)
    return x, y


def iterate_with_jacobian(ev: PairEval, p, n: int):
    """``f^n(p)`` and ``D(f^n)(p)`` by the chain rule (complex doubles)."""
    x, y = complex(p[0]), complex(p[1])
    m = np.eye(2, dtype=np.complex128)
    for _ in range(n):
        (x, y), rows = ev.value_and_jacobian(x, y)
        m = np.array(rows, dtype=np.complex128) @ m
    return (x, y), m


def iterate_with_jacobian_mp(ev: PairEval, p, n: int):
    x, y = mpmath.mpc(p[0]), mpmath.mpc(p[1])
    m = mpmath.eye(2)
    for _ in range(n):
        (x, y), rows = ev.value_and_jacobian(x, y)
        m = mpmath.matrix(rows) * m
    return (x, y), m


def multipliers(m: np.ndarray) -> tuple[complex, complex]:
    """Eigenvalues ``(u, s)`` of a 2x2 matrix with ``|u| >= |s|``.

    The small eigenvalue is taken as ``det / u`` to avoid cancellation.
    """
    tr = m[0, 0] + m[1, 1]
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    disc = np.sqrt(complex(tr * tr - 4 * det))
    a = (tr + disc) / 2
    b = (tr - disc) / 2
    u = a if abs(a) >= abs(b) else b
    if u == 0:
        return 0j, 0j
    return complex(u), complex(det / u)
