"""Exact polynomial arithmetic over Q.

Bivariate polynomials are sparse maps ``(i, j) -> coefficient`` for the
monomial ``x**i * y**j``; univariate polynomials are dense coefficient
tuples, lowest degree first.  Coefficients are :class:`gmpy2.mpq`.

Floating point only enters in :func:`complex_roots`, after the exact
square-free decomposition has fixed every multiplicity.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

import gmpy2
import numpy as np
from gmpy2 import mpq, mpz

from .errors import BothConstantInY, InputError, NonConvergence

Rational = type(mpq(0))

_ZERO = mpq(0)
_ONE = mpq(1)


def rat(value) -> Rational:
    """Coerce ints, Fractions, ``"num/den"`` strings and mpq to mpq."""
    if isinstance(value, Rational):
        return value
    if isinstance(value, bool):
        raise TypeError("bool is not a coefficient")
    if isinstance(value, (int, type(mpz(0)))):
        return mpq(value)
    if isinstance(value, Fraction):
        return mpq(value.numerator, value.denominator)
    if isinstance(value, str):
        s = value.strip()
        if "/" in s:
            num, den = s.split("/", 1)
            den_i = int(den)
            if den_i == 0:
                raise InputError(f"zero denominator in {value!r}")
            return mpq(int(num), den_i)
        return mpq(int(s))
    raise TypeError(f"cannot make an exact rational from {value!r}")


def rat_str(q) -> str:
    q = rat(q)
    return f"{q.numerator}/{q.denominator}"


class BivarPoly:
    """Immutable sparse polynomial in ``x, y`` with rational coefficients."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[tuple[int, int], object] | None = None):
        clean = {}
        if terms:
            for (i, j), c in terms.items():
                if i < 0 or j < 0:
                    raise ValueError("negative exponent")
                c = rat(c)
                if c:
                    clean[(int(i), int(j))] = c
        self._terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, terms: dict) -> "BivarPoly":
        obj = cls.__new__(cls)
        obj._terms = terms
        obj._hash = None
        return obj

    @classmethod
    def const(cls, c) -> "BivarPoly":
        return cls({(0, 0): c})

    @classmethod
    def x(cls) -> "BivarPoly":
        return cls._raw({(1, 0): _ONE})

    @classmethod
    def y(cls) -> "BivarPoly":
        return cls._raw({(0, 1): _ONE})

    @classmethod
    def from_univariate(cls, p: "UnivarPoly", var: str = "x") -> "BivarPoly":
        if var == "x":
            return cls._raw({(k, 0): c for k, c in enumerate(p.coeffs) if c})
        return cls._raw({(0, k): c for k, c in enumerate(p.coeffs) if c})

    # -- inspection -------------------------------------------------------
    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def coeff(self, i: int, j: int) -> Rational:
        return self._terms.get((i, j), _ZERO)

    @property
    def degree(self) -> int:
        if not self._terms:
            return -1
        return max(i + j for i, j in self._terms)

    @property
    def deg_x(self) -> int:
        return max((i for i, _ in self._terms), default=-1)

    @property
    def deg_y(self) -> int:
        return max((j for _, j in self._terms), default=-1)

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(k == (0, 0) for k in self._terms)

    def constant_value(self) -> Rational:
        return self._terms.get((0, 0), _ZERO)

    def homogeneous_part(self, k: int) -> "BivarPoly":
        return BivarPoly._raw({m: c for m, c in self._terms.items() if m[0] + m[1] == k})

    def partial_x(self) -> "BivarPoly":
        return BivarPoly._raw({(i - 1, j): c * i for (i, j), c in self._terms.items() if i})

    def partial_y(self) -> "BivarPoly":
        return BivarPoly._raw({(i, j - 1): c * j for (i, j), c in self._terms.items() if j})

    def coeff_abs_sum(self) -> Rational:
        return sum((abs(c) for c in self._terms.values()), _ZERO)

    def denominators(self) -> set[int]:
        return {int(c.denominator) for c in self._terms.values()}

    # -- arithmetic -------------------------------------------------------
    def _coerce(self, other) -> "BivarPoly":
        if isinstance(other, BivarPoly):
            return other
        return BivarPoly.const(other)

    def __add__(self, other) -> "BivarPoly":
        other = self._coerce(other)
        out = dict(self._terms)
        for m, c in other._terms.items():
            s = out.get(m, _ZERO) + c
            if s:
                out[m] = s
            else:
                out.pop(m, None)
        return BivarPoly._raw(out)

    __radd__ = __add__

    def __neg__(self) -> "BivarPoly":
        return BivarPoly._raw({m: -c for m, c in self._terms.items()})

    def __sub__(self, other) -> "BivarPoly":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "BivarPoly":
        return self._coerce(other) - self

    def __mul__(self, other) -> "BivarPoly":
        if not isinstance(other, BivarPoly):
            c0 = rat(other)
            if not c0:
                return BivarPoly._raw({})
            return BivarPoly._raw({m: c * c0 for m, c in self._terms.items()})
        a, b = self._terms, other._terms
        if len(a) < len(b):
            a, b = b, a
        out: dict = {}
        get = out.get
        for (i2, j2), c2 in b.items():
            for (i1, j1), c1 in a.items():
                key = (i1 + i2, j1 + j2)
                out[key] = get(key, _ZERO) + c1 * c2
        return BivarPoly._raw({m: c for m, c in out.items() if c})

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "BivarPoly":
        if n < 0:
            raise ValueError("negative power")
        result = BivarPoly.const(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, BivarPoly):
            return self._terms == other._terms
        if isinstance(other, (int, Fraction, Rational)):
            return self._terms == BivarPoly.const(other)._terms
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def compose2(self, u: "BivarPoly", v: "BivarPoly") -> "BivarPoly":
        """Return ``self(u(x, y), v(x, y))``."""
        if not self._terms:
            return self
        rows: dict[int, dict[int, Rational]] = {}
        for (i, j), c in self._terms.items():
            rows.setdefault(i, {})[j] = c
        v_pows = _powers(v, self.deg_y)
        u_pows = _powers(u, self.deg_x)
        total = BivarPoly._raw({})
        for i, row in rows.items():
            inner = BivarPoly._raw({})
            for j, c in row.items():
                inner = inner + v_pows[j] * c
            total = total + u_pows[i] * inner
        return total

    def __call__(self, x, y):
        """Evaluate at ring elements (mpq, complex, numpy arrays, ...)."""
        if not self._terms:
            return 0 * x
        xp = [1, x]
        yp = [1, y]
        for _ in range(2, self.deg_x + 1):
            xp.append(xp[-1] * x)
        for _ in range(2, self.deg_y + 1):
            yp.append(yp[-1] * y)
        exact = isinstance(x, (int, Rational, Fraction)) and isinstance(y, (int, Rational, Fraction))
        acc = _ZERO if exact else 0
        for (i, j), c in self._terms.items():
            cc = c if exact else _to_number(c)
            acc = acc + cc * xp[i] * yp[j]
        return acc

    def substitute_x(self, x0) -> "UnivarPoly":
        """Exact specialization ``x = x0``; result is a polynomial in ``y``."""
        x0 = rat(x0)
        coeffs = [_ZERO] * (self.deg_y + 1)
        for (i, j), c in self._terms.items():
            coeffs[j] += c * x0 ** i
        return UnivarPoly(coeffs)

    # -- conversions ------------------------------------------------------
    def as_poly_in_y(self) -> list["UnivarPoly"]:
        """Coefficients (as polynomials in ``x``) of ``y**0, y**1, ...``."""
        cols: list[list] = [[] for _ in range(self.deg_y + 1)]
        for (i, j), c in self._terms.items():
            col = cols[j]
            if len(col) <= i:
                col.extend([_ZERO] * (i + 1 - len(col)))
            col[i] = c
        return [UnivarPoly(c) for c in cols]

    def to_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Exponent and complex coefficient arrays in a fixed (sorted) order."""
        keys = sorted(self._terms)
        ei = np.array([k[0] for k in keys], dtype=np.int64)
        ej = np.array([k[1] for k in keys], dtype=np.int64)
        cf = np.array([_to_number(self._terms[k]) for k in keys], dtype=np.complex128)
        return ei, ej, cf

    def to_json(self) -> dict:
        return {
            "terms": [
                {"i": i, "j": j, "c": rat_str(c)} for (i, j), c in sorted(self._terms.items())
            ]
        }

    @classmethod
    def from_json(cls, obj) -> "BivarPoly":
        if not isinstance(obj, dict) or "terms" not in obj:
            raise InputError("polynomial must be an object with a 'terms' list")
        terms: dict = {}
        for k, t in enumerate(obj["terms"]):
            try:
                key = (int(t["i"]), int(t["j"]))
                c = rat(t["c"]) if isinstance(t["c"], str) else rat(int(t["c"]))
            except (KeyError, TypeError, ValueError) as exc:
                raise InputError(f"bad term #{k}: {t!r}") from exc
            terms[key] = terms.get(key, _ZERO) + c
        return cls(terms)

    def __repr__(self) -> str:
        return f"BivarPoly({self})"

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for (i, j), c in sorted(self._terms.items(), key=lambda kv: (-(kv[0][0] + kv[0][1]), -kv[0][0])):
            mono = "*".join(
                s for s in (_var("x", i), _var("y", j)) if s
            )
            if not mono:
                parts.append(str(c))
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append("-" + mono)
            else:
                parts.append(f"{c}*{mono}")
        return " + ".join(parts).replace("+ -", "- ")


def _var(name: str, k: int) -> str:
    if k == 0:
        return ""
    return name if k == 1 else f"{name}^{k}"


def _powers(p: BivarPoly, n: int) -> list[BivarPoly]:
    out = [BivarPoly.const(1)]
    for _ in range(max(n, 0)):
        out.append(out[-1] * p)
    return out


def _to_number(c) -> float:
    return float(c)


X = BivarPoly.x()
Y = BivarPoly.y()


# ---------------------------------------------------------------------------
# Univariate polynomials over Q
# ---------------------------------------------------------------------------


class UnivarPoly:
    """Dense univariate polynomial over Q, lowest degree first."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable = ()):
        cs = [rat(c) for c in coeffs]
        while cs and not cs[-1]:
            cs.pop()
        self.coeffs: tuple = tuple(cs)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def lc(self) -> Rational:
        return self.coeffs[-1] if self.coeffs else _ZERO

    def __eq__(self, other) -> bool:
        return isinstance(other, UnivarPoly) and self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash(self.coeffs)

    def __add__(self, other: "UnivarPoly") -> "UnivarPoly":
        a, b = self.coeffs, other.coeffs
        n = max(len(a), len(b))
        return UnivarPoly(
            (a[k] if k < len(a) else _ZERO) + (b[k] if k < len(b) else _ZERO) for k in range(n)
        )

    def __neg__(self) -> "UnivarPoly":
        return UnivarPoly(-c for c in self.coeffs)

    def __sub__(self, other: "UnivarPoly") -> "UnivarPoly":
        return self + (-other)

    def __mul__(self, other) -> "UnivarPoly":
        if not isinstance(other, UnivarPoly):
            c0 = rat(other)
            return UnivarPoly(c * c0 for c in self.coeffs)
        a, b = self.coeffs, other.coeffs
        if not a or not b:
            return UnivarPoly()
        out = [_ZERO] * (len(a) + len(b) - 1)
        for i, ai in enumerate(a):
            if ai:
                for j, bj in enumerate(b):
                    out[i + j] += ai * bj
        return UnivarPoly(out)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "UnivarPoly":
        out = UnivarPoly([1])
        for _ in range(n):
            out = out * self
        return out

    def divmod(self, other: "UnivarPoly") -> tuple["UnivarPoly", "UnivarPoly"]:
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        r = list(self.coeffs)
        db = other.degree
        inv = 1 / other.lc
        q = [_ZERO] * max(len(r) - db, 0)
        for k in range(len(r) - 1, db - 1, -1):
            c = r[k] * inv
            if c:
                q[k - db] = c
                for m, bm in enumerate(other.coeffs):
                    r[k - db + m] -= c * bm
        return UnivarPoly(q), UnivarPoly(r[:db] if db > 0 else [])

    def __floordiv__(self, other):
        return self.divmod(other)[0]

    def __mod__(self, other):
        return self.divmod(other)[1]

    def monic(self) -> "UnivarPoly":
        if self.is_zero():
            return self
        inv = 1 / self.lc
        return UnivarPoly(c * inv for c in self.coeffs)

    def derivative(self) -> "UnivarPoly":
        return UnivarPoly(c * k for k, c in enumerate(self.coeffs) if k)

    def __call__(self, t):
        acc = 0 * t
        for c in reversed(self.coeffs):
            acc = acc * t + (c if isinstance(t, (Rational, int)) else float(c))
        return acc

    def to_complex(self) -> np.ndarray:
        """Coefficients (lowest first) as complex doubles, rescaled to max modulus 1."""
        if not self.coeffs:
            return np.zeros(0, dtype=np.complex128)
        big = max(abs(c) for c in self.coeffs)
        return np.array([float(c / big) for c in self.coeffs], dtype=np.complex128)

    def to_json(self) -> list[str]:
        return [rat_str(c) for c in self.coeffs]

    def __repr__(self) -> str:
        return f"UnivarPoly({[str(c) for c in self.coeffs]})"


def poly_gcd(a: UnivarPoly, b: UnivarPoly) -> UnivarPoly:
    """Monic gcd over Q (zero if both are zero)."""
    while not b.is_zero():
        a, b = b, a % b
        if not b.is_zero():
            b = b.monic()
    return a.monic()


def square_free_decomposition(q: UnivarPoly) -> list[tuple[UnivarPoly, int]]:
    """Yun's algorithm: ``q = lc * prod(f_k ** k)`` with each ``f_k`` monic square-free.

    Trivial factors are dropped from the returned list.
    """
    if q.degree < 1:
        return []
    out = []
    qm = q.monic()
    dq = qm.derivative()
    a = poly_gcd(qm, dq)
    b = qm // a
    c = dq // a
    d = c - b.derivative()
    k = 1
    while b.degree > 0:
        a = poly_gcd(b, d)
        if a.degree > 0:
            out.append((a, k))
        b = b // a
        c = d // a
        d = c - b.derivative()
        k += 1
    return out


def recompose(q_lc, factors: list[tuple[UnivarPoly, int]]) -> UnivarPoly:
    out = UnivarPoly([q_lc])
    for f, k in factors:
        out = out * (f ** k)
    return out


# ---------------------------------------------------------------------------
# Resultants: subresultant PRS over Z[x]
# ---------------------------------------------------------------------------
# Elements of Z[x] are lists of Python ints, lowest degree first, no trailing
# zeros; the zero polynomial is [].


def _z_trim(a: list) -> list:
    while a and a[-1] == 0:
        a.pop()
    return a


def _z_add(a: list, b: list) -> list:
    if len(a) < len(b):
        a, b = b, a
    out = list(a)
    for k, bk in enumerate(b):
        out[k] += bk
    return _z_trim(out)


def _z_neg(a: list) -> list:
    return [-c for c in a]


def _z_mul(a: list, b: list) -> list:
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                out[i + j] += ai * bj
    return _z_trim(out)


def _z_pow(a: list, n: int) -> list:
    out = [1]
    base = a
    while n:
        if n & 1:
            out = _z_mul(out, base)
        n >>= 1
        if n:
            base = _z_mul(base, base)
    return out


def _z_exact_div(a: list, b: list) -> list:
    """Quotient ``a / b`` in Z[x]; the division must be exact."""
    if not b:
        raise ZeroDivisionError
    r = list(a)
    db = len(b) - 1
    lb = b[-1]
    if len(r) - 1 < db:
        if r:
            raise ArithmeticError("inexact division in Z[x]")
        return []
    q = [0] * (len(r) - db)
    for k in range(len(r) - 1, db - 1, -1):
        c = r[k]
        if c:
            qk, rem = divmod(c, lb)
            if rem:
                raise ArithmeticError("inexact division in Z[x]")
            q[k - db] = qk
            for m, bm in enumerate(b):
                r[k - db + m] -= qk * bm
    if any(r[:db]):
        raise ArithmeticError("inexact division in Z[x]")
    return _z_trim(q)


def _y_deg(a: list) -> int:
    return len(a) - 1


def _y_trim(a: list) -> list:
    while a and not a[-1]:
        a.pop()
    return a


def _y_prem(a: list, b: list) -> list:
    """Pseudo-remainder in Z[x][y]: ``lc(b)**(da-db+1) * a mod b``."""
    da, db = _y_deg(a), _y_deg(b)
    r = [list(c) for c in a]
    lb = b[-1]
    steps = 0
    while r and _y_deg(r) >= db:
        dr = _y_deg(r)
        lr = r[-1]
        shift = dr - db
        r = [_z_mul(c, lb) for c in r]
        for m, bm in enumerate(b):
            r[shift + m] = _z_add(r[shift + m], _z_neg(_z_mul(lr, bm)))
        _y_trim(r)
        steps += 1
    extra = da - db + 1 - steps
    if extra > 0 and r:
        f = _z_pow(lb, extra)
        r = [_z_mul(c, f) for c in r]
    return r


def _subresultant_resultant(a: list, b: list) -> list:
    """Resultant w.r.t. y of a, b in Z[x][y] (Collins/Brown subresultant PRS)."""
    if not a or not b:
        return []
    da, db = _y_deg(a), _y_deg(b)
    s = 1
    if da < db:
        a, b = b, a
        da, db = db, da
        if da % 2 and db % 2:
            s = -s
    if db == 0:
        return _z_mul([s], _z_pow(b[0], da))
    g = [1]
    h = [1]
    while True:
        da, db = _y_deg(a), _y_deg(b)
        delta = da - db
        if da % 2 and db % 2:
            s = -s
        r = _y_prem(a, b)
        if not r:
            return []
        divisor = _z_mul(g, _z_pow(h, delta))
        a = b
        b = [_z_exact_div(c, divisor) for c in r]
        g = a[-1]
        if delta == 0:
            pass
        else:
            h = _z_exact_div(_z_pow(g, delta), _z_pow(h, delta - 1))
        if _y_deg(b) == 0:
            dA = _y_deg(a)
            if dA == 0:
                return _z_mul([s], h)
            num = _z_pow(b[0], dA)
            res = _z_exact_div(num, _z_pow(h, dA - 1)) if dA > 1 else num
            return _z_mul([s], res)


def _lcm(a: int, b: int) -> int:
    return int(gmpy2.lcm(a, b))


def _to_zy(p: BivarPoly) -> tuple[list, int]:
    """Clear denominators: returns (poly in Z[x][y], D) with p = poly / D."""
    den = 1
    for c in p._terms.values():
        den = _lcm(den, int(c.denominator))
    cols: list[list] = [[] for _ in range(p.deg_y + 1)]
    for (i, j), c in p._terms.items():
        col = cols[j]
        if len(col) <= i:
            col.extend([0] * (i + 1 - len(col)))
        col[i] = int(c * den)
    return [_z_trim(c) for c in cols], den


def resultant_y(p: BivarPoly, q: BivarPoly) -> UnivarPoly:
    """Exact resultant of ``p`` and ``q`` regarded as polynomials in ``y``.

    If exactly one argument is free of ``y`` (degree 0 in y) the usual
    convention ``res(p, c) = c ** deg_y(p)`` applies.
    """
    if p.is_zero() or q.is_zero():
        return UnivarPoly()
    if p.deg_y <= 0 and q.deg_y <= 0:
        raise BothConstantInY("neither polynomial involves y")
    pz, dp = _to_zy(p)
    qz, dq = _to_zy(q)
    r = _subresultant_resultant(pz, qz)
    scale = mpq(1, dp ** q.deg_y * dq ** p.deg_y)
    return UnivarPoly(mpq(c) * scale for c in r)


# ---------------------------------------------------------------------------
# Numerical root isolation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ComplexRoot:
    value: complex
    multiplicity: int
    residual: float


def companion_roots(coeffs: np.ndarray) -> np.ndarray:
    """Eigenvalues of the companion matrix; ``coeffs`` lowest degree first."""
    c = np.trim_zeros(np.asarray(coeffs, dtype=np.complex128), "b")
    n = len(c) - 1
    if n < 1:
        return np.zeros(0, dtype=np.complex128)
    mat = np.zeros((n, n), dtype=np.complex128)
    mat[1:, :-1] = np.eye(n - 1)
    mat[:, -1] = -c[:-1] / c[-1]
    return np.linalg.eigvals(mat)


def _horner(c: np.ndarray, z: complex) -> tuple[complex, complex, float]:
    """Value, derivative and absolute-value scale of a polynomial at z."""
    p = 0j
    dp = 0j
    scale = 0.0
    az = abs(z)
    for ck in c[::-1]:
        dp = dp * z + p
        p = p * z + ck
        scale = scale * az + abs(ck)
    return p, dp, scale


def polish_root(c: np.ndarray, z: complex, tol: float, max_iter: int) -> tuple[complex, float]:
    """Newton iteration on a simple root; returns (root, relative residual)."""
    best, best_res = z, np.inf
    for _ in range(max_iter):
        p, dp, scale = _horner(c, z)
        res = abs(p) / scale if scale else abs(p)
        if res < best_res:
            best, best_res = z, res
        if res < tol * 1e-3 or dp == 0:
            break
        step = p / dp
        z = z - step
        if abs(step) <= 1e-17 * max(abs(z), 1.0):
            p, dp, scale = _horner(c, z)
            res = abs(p) / scale if scale else abs(p)
            if res < best_res:
                best, best_res = z, res
            break
    return complex(best), float(best_res)


def complex_roots(q: UnivarPoly, tol: float = 1e-12, max_iter: int = 100) -> list[ComplexRoot]:
    """All complex roots of ``q`` with exact multiplicities.

    Multiplicities come from the square-free decomposition; each square-free
    factor is solved through its companion matrix and Newton-polished.
    """
    if q.is_zero():
        raise ValueError("zero polynomial has no finite root set")
    out: list[ComplexRoot] = []
    for factor, mult in square_free_decomposition(q):
        c = factor.to_complex()
        for z0 in companion_roots(c):
            z, res = polish_root(c, complex(z0), tol, max_iter)
            if res >= tol:
                raise NonConvergence(f"root {z} of a degree-{factor.degree} factor: residual {res:.2e}")
            out.append(ComplexRoot(z, mult, res))
    out.sort(key=lambda r: (round(r.value.real, 12), round(r.value.imag, 12)))
    return out


def poly_add(p: BivarPoly, q: BivarPoly) -> BivarPoly:
    return p + q


def poly_mul(p: BivarPoly, q: BivarPoly) -> BivarPoly:
    return p * q


def poly_compose2(p: BivarPoly, u: BivarPoly, v: BivarPoly) -> BivarPoly:
    return p.compose2(u, v)
