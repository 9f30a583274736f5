"""Bounded-likelihood intervals, their size and credibility, and estimators.

Once the property likelihood is in hand, every error interval of interest
is a superlevel set: the maximum-likelihood interval of a given size, the
smallest credible interval of a given credibility, and the plausible
interval (the set of property values the data speak for) are all members
of one threshold family.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import erf

from .marginal import LikelihoodCurve
from .properties import PropertyFn
from .sampling import SampleSet
from .statespace import Counts, log_point_likelihood_batch, physicality_batch

__all__ = [
    "DiagnosticError",
    "IntervalUnion",
    "PropertyPriorSpec",
    "IntervalFamily",
    "PointEstimates",
    "GaussianAsymptotics",
    "bli",
    "size_credibility",
    "interval_for_target",
    "plausible_interval",
    "point_estimators",
    "ispe_range",
    "pade_size_fit",
    "gaussian_asymptotics",
]

LAMBDA_GRID_SIZE = 401
QUAD_GRID_SIZE = 8001
LAMBDA_CONSISTENCY_TOL = 0.01


class DiagnosticError(RuntimeError):
    """An internal consistency check failed, signalling an unreliable fit."""


@dataclass(frozen=True)
class IntervalUnion:
    """Ordered union of disjoint closed intervals inside the property range."""

    segments: tuple[tuple[float, float], ...]

    def __post_init__(self):
        segs = tuple((float(a), float(b)) for a, b in self.segments)
        for a, b in segs:
            if b < a:
                raise ValueError(f"segment ({a}, {b}) is reversed")
        for (_, b1), (a2, _) in zip(segs, segs[1:]):
            if a2 < b1:
                raise ValueError("segments must be disjoint and ascending")
        object.__setattr__(self, "segments", segs)

    @property
    def n_segments(self) -> int:
        return len(self.segments)

    @property
    def total_length(self) -> float:
        return sum(b - a for a, b in self.segments)

    def contains(self, f: float, atol: float = 0.0) -> bool:
        return any(a - atol <= f <= b + atol for a, b in self.segments)

    def covers(self, other: "IntervalUnion", atol: float = 0.0) -> bool:
        return all(any(a1 - atol <= a2 and b2 <= b1 + atol
                       for a1, b1 in self.segments)
                   for a2, b2 in other.segments)

    def to_lists(self) -> list[list[float]]:
        return [[a, b] for a, b in self.segments]


@dataclass(frozen=True)
class PropertyPriorSpec:
    """Normalized prior density for the property value itself.

    Either flat over the range or induced from a reference prior on the
    probability space (supplied as a density callable, normalized here).
    """

    kind: str
    frange: tuple[float, float]
    density: Callable[[np.ndarray], np.ndarray]

    @classmethod
    def flat(cls, frange: tuple[float, float]) -> "PropertyPriorSpec":
        width = frange[1] - frange[0]
        return cls("flat", frange, lambda f: np.full_like(np.asarray(f, dtype=float), 1.0 / width))

    @classmethod
    def induced(cls, frange: tuple[float, float],
                density: Callable[[np.ndarray], np.ndarray]) -> "PropertyPriorSpec":
        xs = np.linspace(frange[0], frange[1], QUAD_GRID_SIZE)
        norm = float(np.trapezoid(density(xs), xs))
        if not np.isfinite(norm) or norm <= 0.0:
            raise ValueError("induced prior density is not normalizable")
        return cls("induced", frange, lambda f, _n=norm: density(f) / _n)

    def check_normalization(self, tol: float = 1e-6) -> float:
        xs = np.linspace(self.frange[0], self.frange[1], QUAD_GRID_SIZE)
        total = float(np.trapezoid(self.density(xs), xs))
        if abs(total - 1.0) > tol:
            raise ValueError(f"property prior integrates to {total}, not 1")
        return total


@dataclass(frozen=True)
class PointEstimates:
    f_ml: float
    f_bm: float
    ml_degenerate: bool = False


@dataclass(frozen=True)
class GaussianAsymptotics:
    lambda_crit: float
    size: float
    credibility: float
    applicable: bool


def bli(curve: LikelihoodCurve, lam: float) -> IntervalUnion:
    """Superlevel set {F : L(F) >= lam} of the normalized likelihood.

    Thresholds 0 and 1 give the full range and the degenerate peak; interior
    boundaries are refined by bisection on the fitted curve.
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lambda must be in [0, 1]")
    lo, hi = curve.frange
    if lam == 0.0:
        return IntervalUnion(((lo, hi),))
    xs, vs = curve.fine_grid, curve.fine_values
    above = vs >= lam
    if not above.any():
        # only the polished peak reaches this threshold
        return IntervalUnion(((curve.f_ml, curve.f_ml),))
    if above.all():
        return IntervalUnion(((lo, hi),))

    def refine(below: float, above_pt: float) -> float:
        # bisect the single crossing between a sub- and a super-level point
        for _ in range(60):
            mid = 0.5 * (below + above_pt)
            if float(curve.fn(np.array([mid]))[0]) >= lam:
                above_pt = mid
            else:
                below = mid
        return 0.5 * (below + above_pt)

    segments = []
    idx = 0
    n = len(xs)
    while idx < n:
        if not above[idx]:
            idx += 1
            continue
        start_idx = idx
        while idx + 1 < n and above[idx + 1]:
            idx += 1
        end_idx = idx
        left = xs[start_idx] if start_idx == 0 else refine(xs[start_idx - 1], xs[start_idx])
        right = xs[end_idx] if end_idx == n - 1 else refine(xs[end_idx + 1], xs[end_idx])
        segments.append((left, right))
        idx += 1
    return IntervalUnion(tuple(segments))


class _QuadTables:
    """Cumulative integrals of W0 and W0*L on a fine grid for fast quadrature."""

    def __init__(self, curve: LikelihoodCurve, prior: PropertyPriorSpec):
        lo, hi = curve.frange
        self.xs = np.linspace(lo, hi, QUAD_GRID_SIZE)
        w0 = prior.density(self.xs)
        wl = w0 * curve.fn(self.xs)
        dx = self.xs[1] - self.xs[0]
        self.cum_w0 = np.concatenate([[0.0], np.cumsum(0.5 * (w0[1:] + w0[:-1]) * dx)])
        self.cum_wl = np.concatenate([[0.0], np.cumsum(0.5 * (wl[1:] + wl[:-1]) * dx)])
        self.total_w0 = float(self.cum_w0[-1])
        self.total_wl = float(self.cum_wl[-1])
        self.first_moment_wl = float(np.trapezoid(wl * self.xs, self.xs))

    def _measure(self, cum: np.ndarray, region: IntervalUnion) -> float:
        if region.n_segments == 0:
            return 0.0
        pts = np.array([e for seg in region.segments for e in seg])
        vals = np.interp(pts, self.xs, cum)
        return float((vals[1::2] - vals[0::2]).sum())

    def size(self, region: IntervalUnion) -> float:
        return self._measure(self.cum_w0, region) / self.total_w0

    def credibility(self, region: IntervalUnion) -> float:
        return self._measure(self.cum_wl, region) / self.total_wl


@dataclass(frozen=True)
class IntervalFamily:
    """Bounded-likelihood intervals over a descending threshold grid.

    Carries the size s and credibility c of every member, the critical
    threshold (data likelihood over its maximum), and the point estimators.
    """

    lambdas: np.ndarray
    intervals: tuple[IntervalUnion, ...]
    s: np.ndarray
    c: np.ndarray
    lambda_crit: float
    f_ml: float
    f_bm: float
    curve: LikelihoodCurve
    prior: PropertyPriorSpec
    _tables: _QuadTables

    def size_integral(self) -> float:
        """Integral of the size over thresholds; equals lambda_crit in theory."""
        order = np.argsort(self.lambdas)
        return float(np.trapezoid(self.s[order], self.lambdas[order]))

    def size_of(self, region: IntervalUnion) -> float:
        return self._tables.size(region)

    def credibility_of(self, region: IntervalUnion) -> float:
        return self._tables.credibility(region)

    def interpolate_credibility(self, lam: float) -> float:
        order = np.argsort(self.lambdas)
        return float(np.interp(lam, self.lambdas[order], self.c[order]))

    def to_rows(self) -> list[tuple[float, float, float]]:
        return [(float(l), float(s), float(c))
                for l, s, c in zip(self.lambdas, self.s, self.c)]


def size_credibility(curve: LikelihoodCurve, prior: PropertyPriorSpec,
                     lambda_grid: Sequence[float] | int = LAMBDA_GRID_SIZE) -> IntervalFamily:
    """Size and credibility of every bounded-likelihood interval.

    The size is the prior content of the interval, the credibility its
    posterior content; both are quadratures of the property prior (times
    the likelihood, for the credibility) over the superlevel segments.
    """
    if isinstance(lambda_grid, int):
        lambdas = np.linspace(1.0, 0.0, lambda_grid)
    else:
        lambdas = np.asarray(sorted(lambda_grid, reverse=True), dtype=float)
        if lambdas[0] > 1.0 or lambdas[-1] < 0.0:
            raise ValueError("lambda grid must lie within [0, 1]")
    prior.check_normalization()
    tables = _QuadTables(curve, prior)
    intervals = tuple(bli(curve, float(l)) for l in lambdas)
    s = np.array([tables.size(iv) for iv in intervals])
    c = np.array([tables.credibility(iv) for iv in intervals])
    lambda_crit = tables.total_wl / tables.total_w0
    f_bm = tables.first_moment_wl / tables.total_wl
    return IntervalFamily(lambdas, intervals, s, c, float(lambda_crit),
                          curve.f_ml, float(f_bm), curve, prior, tables)


def interval_for_target(family: IntervalFamily, target: str, value: float) -> IntervalUnion:
    """Smallest credible interval (target "credibility") or maximum-likelihood
    interval (target "size") by monotone threshold lookup."""
    if not 0.0 <= value <= 1.0:
        raise ValueError("target value must be in [0, 1]")
    if target == "credibility":
        series = family.c
    elif target == "size":
        series = family.s
    else:
        raise ValueError("target must be 'credibility' or 'size'")
    achieved_lo, achieved_hi = float(series.min()), float(series.max())
    if value > achieved_hi + 1e-12 or value < achieved_lo - 1e-12:
        raise ValueError(f"{target} {value} outside achieved range "
                         f"[{achieved_lo:.4f}, {achieved_hi:.4f}]")
    order = np.argsort(series, kind="stable")
    lam = float(np.interp(value, series[order], family.lambdas[order]))
    return bli(family.curve, min(max(lam, 0.0), 1.0))


def plausible_interval(family: IntervalFamily) -> tuple[float, IntervalUnion]:
    """The interval of property values the data provide evidence for.

    The critical threshold is computed two ways, as the normalized data
    likelihood and as the threshold integral of the size; disagreement
    beyond 0.01 means the fitted curves are internally inconsistent and is
    raised as a diagnostic failure.
    """
    lam_ratio = family.lambda_crit
    lam_integral = family.size_integral()
    if abs(lam_ratio - lam_integral) > LAMBDA_CONSISTENCY_TOL:
        raise DiagnosticError(
            f"critical-threshold cross-check failed: likelihood ratio gives "
            f"{lam_ratio:.4f}, size integral gives {lam_integral:.4f}")
    lam = min(max(lam_ratio, 0.0), 1.0)
    return lam, bli(family.curve, lam)


def point_estimators(curve: LikelihoodCurve, prior: PropertyPriorSpec) -> PointEstimates:
    """Maximum-likelihood and Bayesian-mean estimators of the property."""
    tables = _QuadTables(curve, prior)
    f_bm = tables.first_moment_wl / tables.total_wl
    return PointEstimates(curve.f_ml, float(f_bm), curve.ml_degenerate)


def ispe_range(prior_sample: SampleSet, posterior_sample: SampleSet, data: Counts,
               prop: PropertyFn, credibility: float,
               n_lambdas: int = LAMBDA_GRID_SIZE) -> IntervalUnion:
    """Property range read off a state-space credible region (indirect route).

    Builds the family of bounded-likelihood regions in probability space,
    using sample fractions for size (prior sample) and credibility
    (posterior sample), picks the region of the requested credibility, and
    returns the span of property values over the posterior points inside.
    Estimating through the state region rather than the property likelihood
    is what makes this indirect, and typically wider, than the direct
    interval at equal credibility.
    """
    if not 0.0 < credibility <= 1.0:
        raise ValueError("credibility must be in (0, 1]")
    if prior_sample.scheme != posterior_sample.scheme:
        raise ValueError("samples must come from the same measurement scheme")
    log_prior = log_point_likelihood_batch(prior_sample.points, data)
    log_post = log_point_likelihood_batch(posterior_sample.points, data)
    log_max = max(log_prior.max(), log_post.max())
    if data.total > 0:
        freq = np.asarray(data.n, dtype=float) / data.total
        phys, _ = physicality_batch(freq[None, :], prior_sample.scheme)
        if phys[0]:
            log_max = max(log_max, float(log_point_likelihood_batch(freq[None, :], data)[0]))

    w_post = posterior_sample.weights / posterior_sample.weights.sum()
    lambdas = np.linspace(1.0, 0.0, n_lambdas)
    cred = np.array([(w_post * (log_post >= math.log(l) + log_max if l > 0.0
                                else np.ones_like(log_post, dtype=bool))).sum()
                     for l in lambdas])
    lam = float(np.interp(credibility, cred, lambdas))
    mask = log_post >= (math.log(lam) + log_max if lam > 0.0 else -np.inf)
    n_in = int(mask.sum())
    if n_in == 0:
        raise ValueError("no posterior sample points inside the requested region")
    if n_in < 100:
        warnings.warn(f"only {n_in} posterior points inside the credible region; "
                      "the indirect interval is unreliable", RuntimeWarning)
    f = np.asarray(prop.fn(posterior_sample.points[mask]), dtype=float)
    return IntervalUnion(((float(f.min()), float(f.max())),))


def pade_size_fit(family: IntervalFamily, order: tuple[int, int] = (3, 3)) -> dict:
    """Rational-function fit of the size curve, for plotting exports only.

    Fits s(lambda) ~ p(lambda)/q(lambda) with deg p = order[0],
    deg q = order[1], q(0) = 1, by linearized least squares.  Nothing in
    the interval construction consumes this.
    """
    m, n = order
    lam = family.lambdas
    s = family.s
    # s*q - p = 0  ->  rows [lam^0..lam^m, -s*lam^1..-s*lam^n] x = s
    cols = [lam ** k for k in range(m + 1)] + [-s * lam ** k for k in range(1, n + 1)]
    a = np.column_stack(cols)
    coef, *_ = np.linalg.lstsq(a, s, rcond=None)
    p = coef[:m + 1]
    q = np.concatenate([[1.0], coef[m + 1:]])
    fit = np.polyval(p[::-1], lam) / np.polyval(q[::-1], lam)
    rmse = float(np.sqrt(np.mean((fit - s) ** 2)))
    return {"numerator": [float(v) for v in p],
            "denominator": [float(v) for v in q],
            "rmse": rmse}


def gaussian_asymptotics(w0_at_fml: float, alpha: float, n_total: int) -> GaussianAsymptotics:
    """Large-count behaviour of the plausible interval for a Gaussian likelihood.

    With likelihood width alpha/sqrt(N) and a smooth property prior, the
    critical threshold is W0 * alpha * sqrt(2 pi / N); the size and
    credibility of the plausible interval follow in closed form.  Only
    meaningful while the predicted threshold stays below 1.
    """
    if n_total < 1:
        raise ValueError("need at least one copy")
    if alpha <= 0.0 or w0_at_fml <= 0.0:
        raise ValueError("alpha and the prior density must be positive")
    lam = w0_at_fml * alpha * math.sqrt(2.0 * math.pi / n_total)
    if lam >= 1.0:
        return GaussianAsymptotics(lam, float("nan"), float("nan"), False)
    log_inv = math.log(1.0 / lam)
    size = 2.0 * lam * math.sqrt(log_inv / math.pi)
    cred = float(erf(math.sqrt(log_inv)))
    return GaussianAsymptotics(lam, size, cred, True)
