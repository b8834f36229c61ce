"""Lyapunov exponents from saddle orbits and Green-function comparisons on curves."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .automorphism import PolyAuto
from .errors import InsufficientSignal, NoSaddles
from .green import green_system
from .periodic import SADDLE, ReversiblePair, fixed_points_of_iterate
from .polyalg import UnivarPoly

IDENTITY_TOL = 1e-9


@dataclass(frozen=True)
class LyapunovEstimate:
    chi_u: float
    chi_s: float
    n_orbits: int
    period: int
    stderr: float
    n_points: int = 0
    identity_gap: float = 0.0

    def to_json(self) -> dict:
        return {
            "chi_u": self.chi_u,
            "chi_s": self.chi_s,
            "n_orbits": self.n_orbits,
            "n_points": self.n_points,
            "period": self.period,
            "stderr": self.stderr,
            "identity_gap": self.identity_gap,
        }


def lyapunov_from_periodic(f: PolyAuto, n: int, tol: float = 1e-12, max_iter: int = 100) -> LyapunovEstimate:
    """Uniform average of ``log|u| / k`` and ``log|s| / k`` over the saddle points
    of ``Fix(f^n)`` (``k`` the exact period)."""
    pts = [p for p in fixed_points_of_iterate(f, n, tol, max_iter) if p.type == SADDLE]
    if not pts:
        raise NoSaddles(f"no saddle points in Fix(f^{n})")
    log_jac = math.log(abs(float(f.jacobian)))
    lu = [math.log(abs(p.multipliers[0])) / p.exact_period for p in pts]
    ls = [math.log(abs(p.multipliers[1])) / p.exact_period for p in pts]
    gap = max(abs(p.exact_period * (a + b) - p.exact_period * log_jac) for p, a, b in zip(pts, lu, ls))
    m = len(pts)
    chi_u = math.fsum(lu) / m
    chi_s = math.fsum(ls) / m
    var = math.fsum((v - chi_u) ** 2 for v in lu) / max(m - 1, 1)
    orbits = int(round(sum(1.0 / p.exact_period for p in pts)))
    return LyapunovEstimate(chi_u, chi_s, orbits, n, math.sqrt(var / m), m, gap)


@dataclass(frozen=True)
class ProportionalityReport:
    alpha_hat: float
    residual_norm: float
    sample_count: int
    raw_alpha: float = float("nan")
    raw_residual: float = float("nan")
    harmonic_coefficients: tuple = ()
    total_samples: int = 0

    def passes(self, tol: float, window=(0.98, 1.02), factor: float = 5.0) -> bool:
        return window[0] <= self.alpha_hat <= window[1] and self.residual_norm <= factor * tol

    def to_json(self) -> dict:
        return {
            "alpha_hat": self.alpha_hat,
            "residual_norm": self.residual_norm,
            "sample_count": self.sample_count,
            "total_samples": self.total_samples,
            "raw_alpha": self.raw_alpha,
            "raw_residual": self.raw_residual,
            "harmonic_coefficients": list(self.harmonic_coefficients),
        }


def _as_callable(component):
    if isinstance(component, UnivarPoly):
        c = np.array([float(v) for v in component.coeffs], dtype=np.complex128)
        return lambda t: np.polynomial.polynomial.polyval(t, c)
    return component


def curve_samples(samples: int, radius: float, seed: int = 0) -> np.ndarray:
    """Deterministic parameters, uniform in the disk ``|t| <= radius``."""
    rng = np.random.default_rng(seed)
    r = radius * np.sqrt(rng.uniform(0, 1, samples))
    a = rng.uniform(0, 2 * np.pi, samples)
    return r * np.exp(1j * a)


def proportionality_test(f: PolyAuto, curve, samples: int = 200, tol: float = 1e-10,
                         radius: float | None = None, seed: int = 0, t_infinity=None,
                         max_iter: int | None = None) -> ProportionalityReport:
    """Fit ``G+ = alpha G- + H`` on a parametrized curve.

    ``H`` ranges over real combinations of ``1, Re t, Im t`` (and
    ``log|t - t_infinity|`` when a pole is given).  The residual is the max
    absolute fit error over samples where both functions exceed ``10 tol``.
    """
    if samples < 50:
        raise ValueError("proportionality test needs at least 50 samples")
    gs = green_system(f)
    if radius is None:
        radius = 2.0 * gs.filtration.radius
    cx, cy = (_as_callable(c) for c in curve)
    t = curve_samples(samples, radius, seed)
    pts = np.stack([cx(t), cy(t)], axis=1).astype(np.complex128)
    gp = gs.plus_batch(pts, tol, max_iter)[0]
    gm = gs.minus_batch(pts, tol, max_iter)[0]
    floor = 10 * tol
    keep = (gp > floor) & (gm > floor)
    if keep.sum() < 10:
        raise InsufficientSignal(f"only {int(keep.sum())} samples clear the noise floor")
    t, gp, gm = t[keep], gp[keep], gm[keep]
    cols = [gm, np.ones_like(gm), t.real, t.imag]
    if t_infinity is not None:
        cols.append(np.log(np.abs(t - complex(t_infinity))))
    A = np.stack(cols, axis=1)
    coef, *_ = np.linalg.lstsq(A, gp, rcond=None)
    resid = float(np.max(np.abs(gp - A @ coef)))
    raw_alpha = float(np.dot(gm, gp) / np.dot(gm, gm))
    raw_resid = float(np.max(np.abs(gp - raw_alpha * gm)))
    return ProportionalityReport(float(coef[0]), resid, int(keep.sum()), raw_alpha, raw_resid,
                                 tuple(float(c) for c in coef[1:]), samples)


@dataclass(frozen=True)
class ConjugacyCheck:
    max_deviation: float
    max_combined_error: float
    within_bounds: bool
    samples: int

    def to_json(self) -> dict:
        return {"max_deviation": self.max_deviation, "max_combined_error": self.max_combined_error,
                "within_bounds": self.within_bounds, "samples": self.samples}


def sigma_conjugacy_check(rp: ReversiblePair, samples: int = 200, tol: float = 1e-10,
                          radius: float = 3.0, seed: int = 0, points=None,
                          max_iter: int | None = None) -> ConjugacyCheck:
    """``max |G+(sigma p) - G-(p)|`` over sample points in the complex bidisk."""
    gs = green_system(rp.f)
    if points is None:
        rng = np.random.default_rng(seed)
        z = rng.uniform(-radius, radius, (samples, 4))
        points = np.stack([z[:, 0] + 1j * z[:, 1], z[:, 2] + 1j * z[:, 3]], axis=1)
    points = np.asarray(points, dtype=np.complex128)
    sig = rp.sigma.forward
    spts = np.stack([sig[0](points[:, 0], points[:, 1]), sig[1](points[:, 0], points[:, 1])], axis=1)
    vp, ep, *_ = gs.plus_batch(spts.astype(np.complex128), tol, max_iter)
    vm, em, *_ = gs.minus_batch(points, tol, max_iter)
    dev = np.abs(vp - vm)
    comb = ep + em
    return ConjugacyCheck(float(dev.max()), float(comb.max()), bool(np.all(dev <= comb + 1e-15)),
                          len(points))
