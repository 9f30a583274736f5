"""Content curves, smooth fits, the flattening iteration, and the property likelihood.

The cumulative prior/posterior content of a property is the quantity a
Monte Carlo sample estimates well; smooth few-parameter fits make it
differentiable.  Iteratively dividing the sampling density by the current
fitted property density flattens the property distribution, so every part
of the range gets sampled, and the ratio of the fitted posterior and prior
densities under one common reweighting is the property likelihood.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import least_squares, minimize_scalar
from scipy.special import betainc, betaln

from .properties import PropertyFn
from .sampling import DensitySpec, SampleSet, SamplerSettings, bootstrap_unweight, sample
from .statespace import Counts, Scheme

__all__ = [
    "FitError",
    "FitModel",
    "BetaFitPlan",
    "ContentCurve",
    "LikelihoodCurve",
    "ReferenceDensity",
    "IterationRound",
    "ReferenceResult",
    "empirical_content",
    "fit_content",
    "iterate_reference",
    "posterior_content",
    "f_likelihood",
    "likelihood_from_fits",
]

GRID_SIZE = 201          # property grid for content curves
FOURIER_ORDER_CAP = 16
FOURIER_KEEP_FRACTION = 0.01   # drop amplitudes below 1% of the largest kept
DENSITY_NEG_TOL = 1e-6         # fitted derivative below -1e-6 (normalized) is rejected
PRIOR_DENSITY_EPS = 1e-12      # ratio grid points with smaller prior density are excluded


class FitError(RuntimeError):
    """A smooth fit to a content curve failed or produced a bad density."""


def _norm_coord(f: np.ndarray, frange: tuple[float, float]) -> np.ndarray:
    return (np.asarray(f, dtype=float) - frange[0]) / (frange[1] - frange[0])


@dataclass(frozen=True)
class FitModel:
    """Analytic parameterization of a content curve.

    kind "fourier_line": the normalized curve is u + sum_k a_k sin(k pi u),
    pinned to 0 and 1 at the range ends.  kind "beta_mixture": a weighted
    sum of regularized incomplete beta functions I_u(alpha_l+1, beta_l+1),
    with unit weight sum.  ``rmse`` is the root-mean-square residual of the
    fit on its grid.
    """

    kind: str
    frange: tuple[float, float]
    parameters: dict
    rmse: float

    def cdf(self, f: np.ndarray) -> np.ndarray:
        u = np.clip(_norm_coord(f, self.frange), 0.0, 1.0)
        if self.kind == "fourier_line":
            amps = self.parameters["amplitudes"]
            out = u.copy()
            for k, a in enumerate(amps, start=1):
                if a != 0.0:
                    out += a * np.sin(k * math.pi * u)
            return out
        out = np.zeros_like(u)
        for w, a, b in self.parameters["terms"]:
            out += w * betainc(a + 1.0, b + 1.0, u)
        return out

    def density(self, f: np.ndarray) -> np.ndarray:
        """Derivative of the fitted curve, clamped at zero."""
        return np.clip(self.density_raw(f), 0.0, None)

    def density_raw(self, f: np.ndarray) -> np.ndarray:
        width = self.frange[1] - self.frange[0]
        u = np.clip(_norm_coord(f, self.frange), 0.0, 1.0)
        if self.kind == "fourier_line":
            amps = self.parameters["amplitudes"]
            out = np.ones_like(u)
            for k, a in enumerate(amps, start=1):
                if a != 0.0:
                    out += a * k * math.pi * np.cos(k * math.pi * u)
            return out / width
        out = np.zeros_like(u)
        for w, a, b in self.parameters["terms"]:
            # Beta(a+1, b+1) density in u, with care at the endpoints
            logpdf = np.full_like(u, -np.inf)
            inside = (u > 0.0) & (u < 1.0)
            with np.errstate(divide="ignore"):
                logpdf[inside] = (a * np.log(u[inside]) + b * np.log1p(-u[inside])
                                  - betaln(a + 1.0, b + 1.0))
            if a == 0.0:
                logpdf[u == 0.0] = -betaln(a + 1.0, b + 1.0)
            if b == 0.0:
                logpdf[u == 1.0] = -betaln(a + 1.0, b + 1.0)
            out += w * np.exp(logpdf)
        return out / width

    def to_dict(self) -> dict:
        return {"kind": self.kind, "frange": list(self.frange),
                "parameters": self.parameters, "rmse": self.rmse}

    @classmethod
    def from_dict(cls, doc: dict) -> "FitModel":
        return cls(doc["kind"], tuple(doc["frange"]), doc["parameters"], doc["rmse"])


@dataclass(frozen=True)
class BetaFitPlan:
    """Shape constraints for a beta-mixture fit.

    ``alpha_pin``/``beta_pin`` freeze the exponents of the first one or two
    terms (used when the endpoint power laws are known analytically);
    ``alpha_floor``/``beta_floor`` bound all remaining exponents from below;
    ``symmetric`` forces beta = alpha term by term.
    """

    terms: int = 3
    symmetric: bool = False
    alpha_pin: float | None = None
    beta_pin: float | None = None
    alpha_floor: float = -0.95
    beta_floor: float = -0.95


@dataclass(frozen=True)
class ContentCurve:
    """Monte Carlo estimate of the cumulative content of a property.

    ``values[i]`` estimates the weighted fraction of the distribution with
    property value at most ``grid[i]``; ``mc_sigma`` is the binomial
    standard error at the effective sample size.
    """

    grid: np.ndarray
    values: np.ndarray
    mc_sigma: np.ndarray
    frange: tuple[float, float]
    n_effective: float
    fit: FitModel | None = None

    def density(self, f: np.ndarray) -> np.ndarray:
        if self.fit is None:
            raise ValueError("content curve has no fit attached")
        return self.fit.density(f)

    def with_fit(self, fit: FitModel) -> "ContentCurve":
        return replace(self, fit=fit)

    def sup_deviation_from_ramp(self) -> float:
        """Largest deviation from the straight line joining (F_min,0) to (F_max,1)."""
        ramp = _norm_coord(self.grid, self.frange)
        return float(np.abs(self.values - ramp).max())


def empirical_content(s: SampleSet, prop: PropertyFn, grid_size: int = GRID_SIZE) -> ContentCurve:
    """Weighted empirical cumulative content of ``prop`` over the sample.

    The per-point standard error uses the effective sample size: the Kish
    size of the weights, further capped by the sampler's autocorrelation ESS
    when the sample carries one (correlated chains hold less information
    than their length).
    """
    if len(s) == 0:
        raise ValueError("cannot build a content curve from an empty sample")
    f = np.asarray(prop.fn(s.points), dtype=float)
    grid = np.linspace(prop.frange[0], prop.frange[1], grid_size)
    order = np.argsort(f, kind="stable")
    f_sorted = f[order]
    w_sorted = s.weights[order]
    cum = np.cumsum(w_sorted)
    total = cum[-1]
    if total <= 0.0:
        raise ValueError("sample weights sum to zero")
    idx = np.searchsorted(f_sorted, grid, side="right")
    values = np.where(idx > 0, cum[np.clip(idx - 1, 0, None)], 0.0) / total
    n_eff = total * total / np.square(s.weights).sum()
    chain_ess = s.diagnostics.get("ess")
    if chain_ess is not None:
        n_eff = min(n_eff, float(chain_ess))
    sigma = np.sqrt(np.clip(values * (1.0 - values), 0.0, None) / n_eff)
    return ContentCurve(grid, values, sigma, prop.frange, float(n_eff))


# ---------------------------------------------------------------------------
# Fitting
# ---------------------------------------------------------------------------

def _fit_fourier(curve: ContentCurve, order: int, symmetric: bool) -> FitModel:
    u = _norm_coord(curve.grid, curve.frange)
    resid = curve.values - u
    ks = np.arange(1, order + 1)
    if symmetric:
        ks = ks[ks % 2 == 0]  # odd amplitudes vanish for a symmetric density
    basis = np.sin(np.outer(u, ks) * math.pi)
    coef, *_ = np.linalg.lstsq(basis, resid, rcond=None)
    # amplitudes indistinguishable from Monte Carlo noise are dropped along
    # with those below 1% of the largest: the filter exists to remove noise,
    # and on an already-flat curve the largest amplitude is itself noise
    sigma_amp = float(np.mean(curve.mc_sigma)) * math.sqrt(2.0 / len(u))

    def assemble(kept_ks, kept_coef):
        amps = np.zeros(int(kept_ks.max()) if len(kept_ks) else 0)
        for k, a in zip(kept_ks, kept_coef):
            amps[k - 1] = a
        return amps

    while True:
        if len(ks) == 0 or np.abs(coef).max() == 0.0:
            amps = np.zeros(0)
        else:
            largest = np.abs(coef).max()
            floor = max(FOURIER_KEEP_FRACTION * largest, 3.0 * sigma_amp)
            keep = np.abs(coef) >= floor
            ks_kept, coef_kept = ks[keep], coef[keep]
            amps = assemble(ks_kept, coef_kept)
        model = FitModel("fourier_line", curve.frange,
                         {"amplitudes": [float(a) for a in amps]}, 0.0)
        fine = np.linspace(curve.frange[0], curve.frange[1], 2001)
        width = curve.frange[1] - curve.frange[0]
        if model.density_raw(fine).min() * width >= -DENSITY_NEG_TOL:
            break
        # derivative dips negative: drop the highest frequency and refit
        if len(ks) <= 1:
            raise FitError("fourier fit cannot be made non-decreasing")
        ks = ks[:-1]
        basis = np.sin(np.outer(u, ks) * math.pi)
        coef, *_ = np.linalg.lstsq(basis, resid, rcond=None)
    rmse = float(np.sqrt(np.mean((model.cdf(curve.grid) - curve.values) ** 2)))
    return replace(model, rmse=rmse)


def _moment_match_beta(curve: ContentCurve) -> tuple[float, float]:
    """Rough (alpha, beta) from the first two moments of the fitted variable."""
    u = _norm_coord(curve.grid, curve.frange)
    pdf_mass = np.diff(curve.values)
    mids = 0.5 * (u[1:] + u[:-1])
    total = pdf_mass.sum()
    if total <= 0.0:
        return 1.0, 1.0
    mean = float((pdf_mass * mids).sum() / total)
    var = float((pdf_mass * (mids - mean) ** 2).sum() / total)
    mean = min(max(mean, 1e-3), 1.0 - 1e-3)
    var = max(var, 1e-6)
    common = mean * (1.0 - mean) / var - 1.0
    common = max(common, 0.1)
    return max(mean * common - 1.0, -0.5), max((1.0 - mean) * common - 1.0, -0.5)


def _fit_beta_mixture(curve: ContentCurve, plan: BetaFitPlan) -> FitModel:
    u = _norm_coord(curve.grid, curve.frange)
    target = curve.values
    # least squares on arcsin(sqrt(P)): the binomial noise of an empirical
    # content value has constant variance on this scale, so the tails (where
    # the endpoint exponents live) are weighted correctly instead of being
    # drowned out by the bulk
    target_t = np.arcsin(np.sqrt(np.clip(target, 0.0, 1.0)))
    m = plan.terms
    a0, b0 = _moment_match_beta(curve)

    # variable layout: weights via softmax (m-1 free entries, first logit 0),
    # then the free exponents term by term
    exps: list[tuple[str, int]] = []  # ("a"|"b", term index) for each free exponent
    lo: list[float] = []
    hi: list[float] = []
    init: list[float] = []

    def add_exp(which, term, floor, guess):
        exps.append((which, term))
        lo.append(floor)
        hi.append(np.inf)
        init.append(max(guess, floor + 1e-6))

    for t in range(m):
        pinned_a = plan.alpha_pin is not None and t == 0
        pinned_b = plan.beta_pin is not None and t == (1 if m > 1 else 0)
        if plan.symmetric:
            if not pinned_a:
                add_exp("a", t, plan.alpha_floor, (plan.alpha_pin or a0) + 1.7 * t)
        else:
            if not pinned_a:
                add_exp("a", t, plan.alpha_floor, a0 + 1.5 * t)
            if not pinned_b:
                add_exp("b", t, plan.beta_floor, b0 + 1.5 * t)

    n_w = m - 1

    def unpack(x):
        logits = np.concatenate([[0.0], x[:n_w]])
        w = np.exp(logits - logits.max())
        w = w / w.sum()
        alphas = np.empty(m)
        betas = np.empty(m)
        for t in range(m):
            alphas[t] = plan.alpha_pin if (plan.alpha_pin is not None and t == 0) else np.nan
            betas[t] = plan.beta_pin if (plan.beta_pin is not None and t == (1 if m > 1 else 0)) else np.nan
        for val, (which, t) in zip(x[n_w:], exps):
            if which == "a":
                alphas[t] = val
            else:
                betas[t] = val
        if plan.symmetric:
            betas = np.where(np.isnan(betas), alphas, betas)
        return w, alphas, betas

    def model_cdf(x):
        w, alphas, betas = unpack(x)
        out = np.zeros_like(u)
        for t in range(m):
            out += w[t] * betainc(alphas[t] + 1.0, betas[t] + 1.0, u)
        return out

    def residuals(x):
        return np.arcsin(np.sqrt(np.clip(model_cdf(x), 0.0, 1.0))) - target_t

    x0 = np.concatenate([np.zeros(n_w), np.array(init)])
    lob = np.concatenate([np.full(n_w, -12.0), np.array(lo)])
    hib = np.concatenate([np.full(n_w, 12.0), np.array(hi)])
    try:
        res = least_squares(residuals, x0, bounds=(lob, hib),
                            method="trf", xtol=1e-14, ftol=1e-14)
    except Exception as exc:  # pragma: no cover - scipy failure modes
        raise FitError(f"beta-mixture fit failed: {exc}") from exc
    if not np.all(np.isfinite(res.x)):
        raise FitError("beta-mixture fit diverged")
    w, alphas, betas = unpack(res.x)
    order = np.argsort(alphas, kind="stable")
    terms = [[float(w[t]), float(alphas[t]), float(betas[t])] for t in order]
    rmse = float(np.sqrt(np.mean((model_cdf(res.x) - target) ** 2)))
    return FitModel("beta_mixture", curve.frange, {"terms": terms}, rmse)


def fit_content(curve: ContentCurve, model: str, *, order: int = FOURIER_ORDER_CAP,
                plan: BetaFitPlan | None = None, symmetric: bool = False) -> FitModel:
    """Least-squares fit of a smooth parameterization to a content curve.

    ``model`` is "fourier_line" (amplitudes below 1% of the largest kept one
    are truncated; a fit whose derivative dips below -1e-6 is rejected and
    retried with fewer terms) or "beta_mixture" (shape constraints via
    ``plan``).
    """
    if model == "fourier_line":
        return _fit_fourier(curve, order, symmetric)
    if model == "beta_mixture":
        plan = plan or BetaFitPlan()
        if symmetric and not plan.symmetric:
            plan = replace(plan, symmetric=True)
        return _fit_beta_mixture(curve, plan)
    raise ValueError("model must be 'fourier_line' or 'beta_mixture'")


# ---------------------------------------------------------------------------
# Reference-density iteration
# ---------------------------------------------------------------------------

class ReferenceDensity:
    """Product of fitted factors approximating the induced property density.

    The first factor is the initial fit to the raw reference content; each
    iteration appends the fitted density of the flattened residual.  The
    unnormalized product serves as the sampling divisor; ``density`` is the
    normalized estimate.  Fourier factors are corrections of order one, so
    they are floored at a small positive level: truncation ringing near the
    range ends must not zero out the analytic tail of the first factor (nor
    blow up the next round's sampling target).
    """

    FOURIER_FACTOR_FLOOR = 0.05

    def __init__(self, factors: Sequence[FitModel], frange: tuple[float, float]):
        self.factors = list(factors)
        self.frange = frange
        self._norm = None

    def density_unnormalized(self, f: np.ndarray) -> np.ndarray:
        # clip the lookup just inside the range so pinned endpoint zeros of
        # the factors cannot produce literal division by zero in the sampler
        width = self.frange[1] - self.frange[0]
        f = np.clip(f, self.frange[0] + 1e-12 * width, self.frange[1] - 1e-12 * width)
        out = np.ones_like(np.asarray(f, dtype=float))
        for fm in self.factors:
            floor = self.FOURIER_FACTOR_FLOOR / width if fm.kind == "fourier_line" else 1e-300
            out = out * np.clip(fm.density(f), floor, None)
        return out

    @property
    def normalization(self) -> float:
        if self._norm is None:
            xs = np.linspace(self.frange[0], self.frange[1], 8001)
            self._norm = float(np.trapezoid(self.density_unnormalized(xs), xs))
        return self._norm

    def density(self, f: np.ndarray) -> np.ndarray:
        return self.density_unnormalized(f) / self.normalization

    def extended(self, factor: FitModel) -> "ReferenceDensity":
        return ReferenceDensity(self.factors + [factor], self.frange)

    def to_dict(self) -> dict:
        return {"frange": list(self.frange),
                "factors": [fm.to_dict() for fm in self.factors]}

    @classmethod
    def from_dict(cls, doc: dict) -> "ReferenceDensity":
        return cls([FitModel.from_dict(d) for d in doc["factors"]], tuple(doc["frange"]))


@dataclass(frozen=True)
class IterationRound:
    index: int
    sup_dev: float
    n_sample: int
    fit: FitModel
    curve: ContentCurve

    def summary(self) -> dict:
        return {"n": self.index, "sup_dev": self.sup_dev, "n_sample": self.n_sample,
                "fit": self.fit.to_dict()}


@dataclass(frozen=True)
class ReferenceResult:
    """Outcome of the flattening iteration for one reference prior.

    ``divisor`` is the reweighting under which ``final_curve`` was sampled
    (None when the raw reference already produced a flat curve); the
    posterior stage must reuse exactly this divisor so the density ratio
    cancels it.  ``reference_density`` is the accumulated estimate of the
    property density induced by the reference prior.
    """

    prop: PropertyFn
    base: str
    divisor: ReferenceDensity | None
    final_curve: ContentCurve
    final_sample: SampleSet
    reference_density: ReferenceDensity
    rounds: tuple[IterationRound, ...]
    converged: bool

    def trace(self) -> list[dict]:
        return [r.summary() for r in self.rounds]


def _curve_from_sample(s: SampleSet, prop: PropertyFn, grid_size: int,
                       bootstrap_seed: int | None) -> tuple[ContentCurve, int]:
    if not s.has_uniform_weights and bootstrap_seed is not None:
        s = bootstrap_unweight(s, len(s), bootstrap_seed)
    return empirical_content(s, prop, grid_size), len(s)


def _divisor_spec(base: str, prop: PropertyFn, divisor: ReferenceDensity | None,
                  counts: Counts | None) -> DensitySpec:
    if divisor is None:
        return DensitySpec(base, None, None, counts)
    return DensitySpec(base, divisor.density_unnormalized, prop, counts)


def iterate_reference(scheme: Scheme | str, prop: PropertyFn, base: str, rounds: int,
                      seeds: Sequence[int] | int, n_points: int,
                      tolerance: float = 0.01, first_fit: BetaFitPlan | None = None,
                      grid_size: int = GRID_SIZE,
                      settings: SamplerSettings | None = None,
                      use_bootstrap: bool = False) -> ReferenceResult:
    """Flatten the property distribution of a reference prior by iteration.

    Each pass samples the reference prior divided by the current density
    estimate, measures the cumulative content of the property, and exits as
    soon as the curve is within ``tolerance`` (sup-norm) of the straight
    ramp; otherwise the fitted residual density multiplies the estimate and
    the next pass begins.  The raw first pass is fitted with a beta mixture
    (shape constraints from ``first_fit``), later passes with the truncated
    Fourier line.  ``rounds`` bounds the number of reweighted passes; not
    converging within the budget is reported, not raised.
    """
    if rounds < 1:
        raise ValueError("need at least one iteration round")
    if isinstance(seeds, int):
        seeds = [seeds + 7919 * i for i in range(rounds + 1)]
    if len(seeds) < rounds + 1:
        raise ValueError(f"need {rounds + 1} seeds for {rounds} reweighted rounds")

    divisor: ReferenceDensity | None = None
    history: list[IterationRound] = []
    converged = False
    final_curve: ContentCurve | None = None
    final_sample: SampleSet | None = None
    reference: ReferenceDensity | None = None

    for n in range(rounds + 1):
        spec = _divisor_spec(base, prop, divisor, None)
        s = sample(spec, scheme, n_points, seeds[n], settings)
        boot_seed = seeds[n] + 1 if use_bootstrap else None
        curve, n_used = _curve_from_sample(s, prop, grid_size, boot_seed)
        sup_dev = curve.sup_deviation_from_ramp()
        flat_enough = sup_dev <= tolerance
        last_pass = n == rounds
        if n == 0 and not flat_enough:
            # the raw reference content can have hard power-law tails; the
            # shape-constrained mixture handles those, the Fourier line not
            fit = fit_content(curve, "beta_mixture", plan=first_fit,
                              symmetric=prop.symmetric_prior)
        else:
            fit = fit_content(curve, "fourier_line", symmetric=prop.symmetric_prior)
        curve = curve.with_fit(fit)
        history.append(IterationRound(n, sup_dev, n_used, fit, curve))
        if flat_enough or last_pass:
            converged = flat_enough
            final_curve = curve
            final_sample = s
            base_ref = divisor if divisor is not None else ReferenceDensity([], prop.frange)
            reference = base_ref.extended(fit)
            break
        divisor = (divisor.extended(fit) if divisor is not None
                   else ReferenceDensity([fit], prop.frange))

    return ReferenceResult(prop, base, divisor, final_curve, final_sample, reference,
                           tuple(history), converged)


def posterior_content(scheme: Scheme | str, prop: PropertyFn, base: str,
                      divisor: ReferenceDensity | None, counts: Counts,
                      n_points: int, seed: int,
                      plan: BetaFitPlan | None = None,
                      grid_size: int = GRID_SIZE,
                      settings: SamplerSettings | None = None,
                      use_bootstrap: bool = False) -> tuple[ContentCurve, SampleSet]:
    """Posterior content curve under the converged reference divisor.

    One pass suffices once the prior side is flat: the fitted density of
    this sample, divided by the final prior-side density, is the property
    likelihood with the divisor cancelling exactly.
    """
    spec = _divisor_spec(base, prop, divisor, counts)
    s = sample(spec, scheme, n_points, seed, settings)
    boot_seed = seed + 1 if use_bootstrap else None
    curve, _ = _curve_from_sample(s, prop, grid_size, boot_seed)
    # under the divisor the true density is bounded; see the pipeline's
    # ratio-fit plan for why the exponents are floored at zero
    plan = plan or BetaFitPlan(terms=4, alpha_floor=0.0, beta_floor=0.0)
    fit = fit_content(curve, "beta_mixture", plan=plan)
    return curve.with_fit(fit), s


# ---------------------------------------------------------------------------
# Property likelihood
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LikelihoodCurve:
    """Normalized property likelihood: ratio of fitted densities, peak at 1.

    ``excluded`` flags grid points where the prior density was too small to
    divide; their values come from the nearest valid ratio (one-sided
    limit).  ``fn`` evaluates the same normalized ratio anywhere in the
    range.
    """

    grid: np.ndarray
    values: np.ndarray
    f_ml: float
    frange: tuple[float, float]
    fn: Callable[[np.ndarray], np.ndarray]
    excluded: np.ndarray
    fine_grid: np.ndarray
    fine_values: np.ndarray
    ml_degenerate: bool = False


def f_likelihood(prior_curve: ContentCurve, posterior_curve: ContentCurve,
                 fine_size: int = 8001) -> LikelihoodCurve:
    """Pointwise ratio of fitted posterior and prior densities, normalized.

    Both curves must live on a common grid and carry fits obtained under
    the same reweighting, so that the reweighting cancels in the ratio.
    """
    if prior_curve.fit is None or posterior_curve.fit is None:
        raise ValueError("both content curves must carry fits")
    if prior_curve.grid.shape != posterior_curve.grid.shape or \
            not np.allclose(prior_curve.grid, posterior_curve.grid):
        raise ValueError("content curves must share a common grid")
    return likelihood_from_fits(prior_curve.fit, posterior_curve.fit,
                                grid_size=len(prior_curve.grid), fine_size=fine_size)


def likelihood_from_fits(prior_fit: FitModel, posterior_fit: FitModel,
                         grid_size: int = GRID_SIZE,
                         fine_size: int = 8001) -> LikelihoodCurve:
    """Likelihood curve straight from two serialized fits (stage reruns)."""
    if prior_fit.frange != posterior_fit.frange:
        raise ValueError("fits must cover the same property range")
    frange = prior_fit.frange
    lo, hi = frange
    post_fit = posterior_fit

    fine = np.linspace(lo, hi, fine_size)
    wp = prior_fit.density(fine)
    valid = wp > PRIOR_DENSITY_EPS
    if not valid.any():
        raise ValueError("prior density vanishes on the entire grid")
    # interior interval of valid division; endpoints take one-sided limits
    first, last = np.argmax(valid), len(valid) - 1 - np.argmax(valid[::-1])
    f_lo, f_hi = fine[first], fine[last]

    def raw_ratio(f):
        f = np.clip(np.asarray(f, dtype=float), f_lo, f_hi)
        return post_fit.density(f) / np.clip(prior_fit.density(f), PRIOR_DENSITY_EPS, None)

    fine_raw = raw_ratio(fine)
    peak_idx = int(np.argmax(fine_raw))
    # polish the peak on the analytic ratio
    span = (fine[max(peak_idx - 1, 0)], fine[min(peak_idx + 1, fine_size - 1)])
    if span[1] > span[0]:
        res = minimize_scalar(lambda f: -raw_ratio(np.array([f]))[0],
                              bounds=span, method="bounded",
                              options={"xatol": 1e-12 * (hi - lo)})
        f_ml = float(res.x)
        peak = float(raw_ratio(np.array([f_ml]))[0])
        if fine_raw[peak_idx] > peak:
            f_ml, peak = float(fine[peak_idx]), float(fine_raw[peak_idx])
    else:  # pragma: no cover - degenerate one-point grid
        f_ml, peak = float(fine[peak_idx]), float(fine_raw[peak_idx])
    if peak <= 0.0:
        raise ValueError("posterior density vanishes everywhere; likelihood undefined")

    near_peak = fine_raw >= (1.0 - 1e-9) * peak
    # a flat top spanning beyond the peak's neighbors means a non-unique maximum
    ml_degenerate = bool(near_peak.sum() > 3)
    if ml_degenerate:
        f_ml = float(fine[np.argmax(near_peak)])  # leftmost, flagged

    def fn(f):
        return raw_ratio(f) / peak

    fine_values = fine_raw / peak
    grid = np.linspace(lo, hi, grid_size)
    values = fn(grid)
    excluded = (grid < f_lo - 1e-15 * (hi - lo)) | (grid > f_hi + 1e-15 * (hi - lo))
    return LikelihoodCurve(grid, values, f_ml, frange, fn, excluded,
                           fine, fine_values, ml_degenerate)
