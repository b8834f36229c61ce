"""Dynamical Green functions with certified error brackets.

A regular map ``f`` is first conjugated by a rational linear change of
coordinates ``A`` so that the top-degree part of ``g = A^-1 f A`` is
``(0, c y^d)`` and that of ``g^-1`` is ``(c' x^d, 0)``.  In these
coordinates the escape sectors are

    V+ = {|y| >= max(|x|, R)}      V- = {|x| >= max(|y|, R)}

and inside ``V+`` one step satisfies
``|log|y'| - d log|y| - log|c|| <= -log(1 - S / (|c| |y|))`` with ``S`` the
absolute coefficient mass of the non-leading monomials.  Summing that
geometric tail gives a two-sided bracket on ``G+``; points that never reach
``V+`` are bracketed by ``0 <= G+ <= d^-n (log+ |g^n p| + K)``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import kernels
from .automorphism import PolyAuto, affine_auto, is_regular
from .errors import NotRegular, VerificationFailed
from .polyalg import BivarPoly, UnivarPoly, rat

DEFAULT_MAX_ITER = 200
SWEEP = 64
MAX_DOUBLINGS = 20


@dataclass(frozen=True)
class Filtration:
    radius: float
    expansion_constant: float
    radius_plus: float
    radius_minus: float
    measured_defect: float
    doublings: int
    runtime_verified: bool = True

    def to_json(self) -> dict:
        return {
            "radius": self.radius,
            "expansion_constant": self.expansion_constant,
            "radius_plus": self.radius_plus,
            "radius_minus": self.radius_minus,
            "measured_defect": self.measured_defect,
            "doublings": self.doublings,
            "verification": "runtime-verified",
        }


@dataclass(frozen=True)
class GreenValue:
    value: float
    error_bound: float
    iterations: int
    status: str = "converged"

    @property
    def lower(self) -> float:
        return max(0.0, self.value - self.error_bound)

    @property
    def upper(self) -> float:
        return self.value + self.error_bound

    def to_json(self) -> dict:
        return {"value": self.value, "error_bound": self.error_bound,
                "iterations": self.iterations, "status": self.status}


BOUNDED_SO_FAR = "BoundedSoFar"
ESCAPES_FORWARD = "EscapesForward"
ESCAPES_BACKWARD = "EscapesBackward"
ESCAPES_BOTH = "EscapesBoth"


@dataclass(frozen=True)
class EscapeStatus:
    status: str
    certificate_n: int
    backward_certificate_n: int = -1

    def to_json(self) -> dict:
        return {"status": self.status, "certificate_n": self.certificate_n,
                "backward_certificate_n": self.backward_certificate_n}


_STATUS_NAMES = {
    kernels.STATUS_BOUNDED: "converged",
    kernels.STATUS_ESCAPED: "converged",
    kernels.STATUS_MAXITER: "MaxIterations",
    kernels.STATUS_OVERFLOW: "Overflow",
}


@dataclass
class _Side:
    """Numeric data for one direction (forward map with escape coordinate ``esc``)."""

    arrays: tuple
    maxe: int
    esc: int
    lead: complex
    s_rest: float
    s_other: float
    k_up: float
    radius: float = 1.0


def _top_direction(f1: BivarPoly, f2: BivarPoly, d: int):
    """Image direction (a, b) and scalar form h with top part (a h, b h)."""
    h1, h2 = f1.homogeneous_part(d), f2.homogeneous_part(d)
    if h1.is_zero():
        return (rat(0), rat(1)), h2
    m, c = next(iter(h1.items()))
    ratio = h2.coeff(*m) / c
    if h2 != h1 * ratio:
        raise NotRegular("top-degree part does not contract the line at infinity to a point")
    return (rat(1), ratio), h1


def _indeterminacy_direction(h: BivarPoly, d: int):
    """Direction where ``h = c * l**d`` vanishes."""
    t = UnivarPoly(h.coeff(k, d - k) for k in range(d + 1))  # h(t, 1)
    if t.degree < d:
        direction = (rat(1), rat(0))
    else:
        t0 = -t.coeffs[d - 1] / (d * t.coeffs[d])
        direction = (t0, rat(1))
    lin = BivarPoly({(1, 0): direction[1], (0, 1): -direction[0]})
    lp = lin ** d
    m, cm = next(iter(lp.items()))
    scale = h.coeff(*m) / cm
    if h != lp * scale:
        raise NotRegular("indeterminacy locus is not a single point")
    return direction


def _side_from_pair(pair, d: int, esc: int) -> _Side:
    comp = pair[esc]
    other = pair[1 - esc]
    lead_key = (0, d) if esc == 1 else (d, 0)
    lead = comp.coeff(*lead_key)
    if not lead or comp.homogeneous_part(d) != BivarPoly({lead_key: lead}) or other.degree >= d:
        raise NotRegular("normalized map does not have the expected top-degree form")
    s_rest = float(sum(abs(c) for m, c in comp.items() if m != lead_key))
    s_other = float(other.coeff_abs_sum())
    s_all = max(float(comp.coeff_abs_sum()), s_other)
    k_up = max(math.log(s_all), 0.0) / (d - 1)
    ei0, ej0, c0 = pair[0].to_arrays()
    ei1, ej1, c1 = pair[1].to_arrays()
    maxe = int(max(ei0.max(initial=0), ej0.max(initial=0), ei1.max(initial=0), ej1.max(initial=0), 1))
    return _Side((ei0, ej0, c0, ei1, ej1, c1), maxe, esc, complex(float(lead)), s_rest, s_other, k_up)


def _eval_np(side: _Side, x: np.ndarray, y: np.ndarray):
    return kernels._step_np(side.arrays, side.maxe, x, y)


def _sweep(side: _Side, radius: float, d: int) -> tuple[bool, float]:
    """Boundary sample of the escape sector; returns (invariance ok, max defect)."""
    phase = np.exp(2j * np.pi * (np.arange(SWEEP) + 0.5) / SWEEP)
    fr = np.repeat(np.linspace(0.0, 1.0, 8), 8)
    fa = np.tile(np.exp(2j * np.pi * (np.arange(8) + 0.25) / 8), 8)
    ok = True
    worst = 0.0
    for scale in (1.0, 2.0, 16.0):
        ze = (radius * scale * phase)[:, None] * np.ones(SWEEP)[None, :]
        zo = (radius * scale) * (fr * fa)[None, :] * np.ones(SWEEP)[:, None]
        ze, zo = ze.ravel(), zo.ravel()
        x, y = (zo, ze) if side.esc == 1 else (ze, zo)
        nx, ny = _eval_np(side, x, y)
        ne, no = (ny, nx) if side.esc == 1 else (nx, ny)
        ae, ao = np.abs(ne), np.abs(no)
        ok &= bool(np.all(ae >= np.maximum(ao, radius)))
        with np.errstate(divide="ignore"):
            defect = np.log(np.abs(ze)) - np.log(ae) / d
        worst = max(worst, float(np.max(defect)))
    return ok, worst


class GreenSystem:
    """Certified ``G+``, ``G-`` and ``G = max(G+, G-)`` for a regular map."""

    def __init__(self, f: PolyAuto, max_iter: int = DEFAULT_MAX_ITER):
        if not is_regular(f):
            raise NotRegular(f"{f!r} is not a regular automorphism of degree >= 2")
        self.f = f
        self.d = f.degree
        self.max_iter = max_iter
        d = self.d
        (a, b), h = _top_direction(*f.forward, d)
        ix, iy = _indeterminacy_direction(h, d)
        # columns: indeterminacy direction -> x axis, attracting direction -> y axis
        self.A = affine_auto(ix, a, iy, b)
        self.g = self.A.inv().compose(f).compose(self.A)
        self.plus_side = _side_from_pair(self.g.forward, d, 1)
        self.minus_side = _side_from_pair(self.g.inverse, d, 0)
        self.filtration = self._build_filtration()
        m = self.A.inverse
        self._ainv = np.array(
            [[float(m[0].coeff(1, 0)), float(m[0].coeff(0, 1))],
             [float(m[1].coeff(1, 0)), float(m[1].coeff(0, 1))]]
        )

    def _build_filtration(self) -> Filtration:
        d = self.d
        radii = []
        measured = 0.0
        analytic = 0.0
        doublings = 0
        for side in (self.plus_side, self.minus_side):
            lead = abs(side.lead)
            r = max(1.0, 2.0 * (1.0 + side.s_rest + side.s_other) / lead)
            for _ in range(MAX_DOUBLINGS + 1):
                ok, worst = _sweep(side, r, d)
                if ok:
                    break
                r *= 2.0
                doublings += 1
            else:
                raise VerificationFailed("escape sector invariance failed after 20 doublings")
            side.radius = r
            radii.append(r)
            measured = max(measured, worst)
            analytic = max(analytic, (math.log(2.0) - math.log(lead)) / d)
        c0 = max(analytic, 2.0 * measured, 1e-12)
        return Filtration(max(radii), c0, radii[0], radii[1], measured, doublings)

    @property
    def log_plus_constant(self) -> float:
        """Bound on ``|max(G+, G-) - log+||p|||`` over the whole plane.

        Box: ``0 <= G <= log R + K``.  Sectors: one step of the escape
        estimate.  The linear normalization adds ``log+`` of its norms.
        """
        d = self.d
        k = max(self.plus_side.k_up, self.minus_side.k_up)
        sector = max((abs(math.log(abs(s.lead))) + math.log(2.0)) / (d - 1)
                     for s in (self.plus_side, self.minus_side))
        c = max(math.log(self.filtration.radius) + k, sector, k)
        a = np.array([[float(self.A.forward[0].coeff(1, 0)), float(self.A.forward[0].coeff(0, 1))],
                      [float(self.A.forward[1].coeff(1, 0)), float(self.A.forward[1].coeff(0, 1))]])
        norms = (np.abs(a).sum(axis=1).max(), np.abs(self._ainv).sum(axis=1).max())
        return c + max(max(math.log(float(v)), 0.0) for v in norms)

    # -- evaluation ------------------------------------------------------
    def to_normal(self, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        pts = np.asarray(pts, dtype=np.complex128).reshape(-1, 2)
        q = pts @ self._ainv.T
        return q[:, 0].copy(), q[:, 1].copy()

    def _batch(self, side: _Side, pts, tol: float, max_iter: int | None):
        qx, qy = self.to_normal(pts)
        return kernels.green_batch(
            side.arrays, side.maxe, side.esc, side.lead, side.radius, side.s_rest,
            side.k_up, self.d, qx, qy, max_iter or self.max_iter, tol,
        )

    def plus_batch(self, pts, tol: float = 1e-10, max_iter: int | None = None):
        return self._batch(self.plus_side, pts, tol, max_iter)

    def minus_batch(self, pts, tol: float = 1e-10, max_iter: int | None = None):
        return self._batch(self.minus_side, pts, tol, max_iter)

    def _single(self, side, p, tol, max_iter) -> GreenValue:
        if tol <= 0:
            raise ValueError("tol must be positive")
        v, e, n, s = self._batch(side, np.array([p], dtype=np.complex128), tol, max_iter)
        return GreenValue(float(v[0]), float(e[0]), int(n[0]), _STATUS_NAMES[int(s[0])])

    def plus(self, p, tol: float = 1e-10, max_iter: int | None = None) -> GreenValue:
        return self._single(self.plus_side, p, tol, max_iter)

    def minus(self, p, tol: float = 1e-10, max_iter: int | None = None) -> GreenValue:
        return self._single(self.minus_side, p, tol, max_iter)

    def max(self, p, tol: float = 1e-10, max_iter: int | None = None) -> GreenValue:
        gp = self.plus(p, tol, max_iter)
        gm = self.minus(p, tol, max_iter)
        hi = gp if gp.value >= gm.value else gm
        lo = gm if hi is gp else gp
        # max is 1-Lipschitz in each argument
        err = max(hi.error_bound, lo.error_bound)
        status = "converged" if gp.status == gm.status == "converged" else "MaxIterations"
        return GreenValue(hi.value, err, max(gp.iterations, gm.iterations), status)

    def escape_status(self, p, n_max: int) -> EscapeStatus:
        fwd = self._first_entry(self.plus_side, p, n_max)
        bwd = self._first_entry(self.minus_side, p, n_max)
        if fwd >= 0 and bwd >= 0:
            return EscapeStatus(ESCAPES_BOTH, fwd, bwd)
        if fwd >= 0:
            return EscapeStatus(ESCAPES_FORWARD, fwd)
        if bwd >= 0:
            return EscapeStatus(ESCAPES_BACKWARD, bwd, bwd)
        return EscapeStatus(BOUNDED_SO_FAR, n_max)

    def _first_entry(self, side: _Side, p, n_max: int) -> int:
        qx, qy = self.to_normal(np.array([p]))
        orb = kernels.orbit(side.arrays, side.maxe, qx[0], qy[0], n_max)
        for k in range(orb.shape[0]):
            x, y = orb[k]
            if not (np.isfinite(x) and np.isfinite(y)):
                return -1
            ze, zo = (abs(y), abs(x)) if side.esc == 1 else (abs(x), abs(y))
            if ze >= zo and ze >= side.radius:
                return k
        return -1


@lru_cache(maxsize=64)
def green_system(f: PolyAuto) -> GreenSystem:
    return GreenSystem(f)


def filtration(f: PolyAuto) -> Filtration:
    return green_system(f).filtration


def green_plus(f: PolyAuto, p, tol: float = 1e-10, max_iter: int | None = None) -> GreenValue:
    return green_system(f).plus(p, tol, max_iter)


def green_minus(f: PolyAuto, p, tol: float = 1e-10, max_iter: int | None = None) -> GreenValue:
    return green_system(f).minus(p, tol, max_iter)


def green_max(f: PolyAuto, p, tol: float = 1e-10, max_iter: int | None = None) -> GreenValue:
    return green_system(f).max(p, tol, max_iter)


def escape_status(f: PolyAuto, p, n_max: int) -> EscapeStatus:
    return green_system(f).escape_status(p, n_max)


def log_plus_norm(p) -> float:
    n = max(abs(complex(p[0])), abs(complex(p[1])))
    return math.log(n) if n > 1.0 else 0.0


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

MAX_CELLS = 4096 * 4096


def grid_points(window, resolution) -> np.ndarray:
    """Cell centres of the real slice; row 0 is the top edge (largest y)."""
    xmin, xmax, ymin, ymax = map(float, window)
    nx, ny = (resolution, resolution) if isinstance(resolution, int) else resolution
    if nx * ny > MAX_CELLS:
        raise ValueError("resolution exceeds 4096^2 cells")
    xs = xmin + (np.arange(nx) + 0.5) * (xmax - xmin) / nx
    ys = ymax - (np.arange(ny) + 0.5) * (ymax - ymin) / ny
    gx, gy = np.meshgrid(xs, ys)
    return np.stack([gx.ravel(), gy.ravel()], axis=1).astype(np.complex128), (ny, nx)


def render_grid(f: PolyAuto, window, resolution, which: str = "Gplus",
                tol: float = 1e-8, max_iter: int | None = None) -> np.ndarray:
    """Row-major matrix of Green values at the cell centres."""
    gs = green_system(f)
    pts, shape = grid_points(window, resolution)
    if which == "Gplus":
        vals = gs.plus_batch(pts, tol, max_iter)[0]
    elif which == "Gminus":
        vals = gs.minus_batch(pts, tol, max_iter)[0]
    elif which == "Gmax":
        vals = np.maximum(gs.plus_batch(pts, tol, max_iter)[0], gs.minus_batch(pts, tol, max_iter)[0])
    else:
        raise ValueError(f"unknown Green function {which!r}")
    return vals.reshape(shape)


def write_ppm(values: np.ndarray, path, meta: dict | None = None) -> dict:
    """P5 grayscale; the affine rescaling is recorded in ``<path>.json``."""
    path = Path(path)
    lo, hi = float(np.min(values)), float(np.max(values))
    scale = 255.0 / (hi - lo) if hi > lo else 0.0
    img = np.clip(np.rint((values - lo) * scale), 0, 255).astype(np.uint8)
    rows, cols = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{cols} {rows}\n255\n".encode("ascii"))
        fh.write(img.tobytes())
    side = {"min": lo, "max": hi, "scale": scale, "offset": -lo * scale,
            "rows": rows, "cols": cols, **(meta or {})}
    with open(str(path) + ".json", "w") as fh:
        json.dump(side, fh, indent=2, sort_keys=True)
    return side


def read_ppm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    cols, rows = map(int, parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(rows, cols)


def write_csv(values: np.ndarray, path) -> None:
    np.savetxt(path, values, delimiter=",", fmt="%.17g")
