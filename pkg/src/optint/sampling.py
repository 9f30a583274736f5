"""Prior and posterior sampling on the constrained probability simplex.

A random-walk Metropolis sampler with a Dirichlet proposal runs many short
chains in lockstep (vectorized across chains); unphysical proposals are
rejected outright, and points carry the constraint weight their scheme
induces (e.g. the feasible completion range for the trine/anti-trine
measurement).  Resampling by weight turns a weighted sample into an
unweighted one.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.special import gammaln

from .properties import PropertyFn
from .statespace import (
    Counts,
    Scheme,
    log_point_likelihood_batch,
    physicality_batch,
    scheme_by_name,
)

__all__ = [
    "DensitySpec",
    "SampleSet",
    "SamplerSettings",
    "sample",
    "bootstrap_unweight",
    "save_samples",
    "load_samples",
]

_PROB_FLOOR = 1e-300  # proposals below this are treated as off-support


@dataclass(frozen=True)
class DensitySpec:
    """Target density on the physical probability space.

    base:        "primitive" (uniform) or "jeffreys" (inverse square root of
                 the probability product).
    reweight:    optional strictly positive function of the property value;
                 the target is divided by ``reweight(reweight_property(p))``,
                 which is how the marginal-content iteration flattens the
                 property distribution.
    posterior_counts: when given, the point likelihood of the click data
                 multiplies the target.
    """

    base: str = "primitive"
    reweight: Callable[[np.ndarray], np.ndarray] | None = None
    reweight_property: PropertyFn | None = None
    posterior_counts: Counts | None = None

    def __post_init__(self):
        if self.base not in ("primitive", "jeffreys"):
            raise ValueError("base must be 'primitive' or 'jeffreys'")
        if (self.reweight is None) != (self.reweight_property is None):
            raise ValueError("reweight and reweight_property must be given together")

    def describe(self) -> dict:
        return {
            "base": self.base,
            "reweight": None if self.reweight_property is None else self.reweight_property.name,
            "posterior_counts": None if self.posterior_counts is None else list(self.posterior_counts.n),
        }

    def log_density(self, points: np.ndarray) -> np.ndarray:
        """Unnormalized log target on an (n, K) batch (without the constraint factor)."""
        pts = np.clip(points, _PROB_FLOOR, None)
        out = np.zeros(points.shape[0])
        if self.base == "jeffreys":
            out -= 0.5 * np.log(pts).sum(axis=1)
        if self.reweight is not None:
            out -= np.log(np.clip(self.reweight(self.reweight_property.fn(points)),
                                  _PROB_FLOOR, None))
        if self.posterior_counts is not None:
            out += log_point_likelihood_batch(points, self.posterior_counts)
        return out


@dataclass(frozen=True)
class SamplerSettings:
    """Knobs for the Metropolis run; defaults suit the shipped pipelines."""

    n_chains: int = 256
    thin: int = 5
    burn_in: float = 0.1          # fraction of the kept chain length
    target_acceptance: float = 0.25
    initial_concentration: float | None = None
    adapt_interval: int = 25
    ess_threshold_fraction: float = 0.1


@dataclass(frozen=True)
class SampleSet:
    """Points on the physical simplex with constraint weights and provenance."""

    points: np.ndarray            # (n, K)
    weights: np.ndarray           # (n,)
    scheme: str
    density: dict                 # description of the DensitySpec sampled from
    seed: int
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if pts.ndim != 2 or w.shape != (pts.shape[0],):
            raise ValueError("points must be (n, K) with one weight per point")
        if np.any(w < 0.0):
            raise ValueError("weights must be non-negative")
        pts = pts.copy()
        w = w.copy()
        pts.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def has_uniform_weights(self) -> bool:
        return bool(len(self) == 0 or np.all(self.weights == self.weights[0]))

    @property
    def effective_size(self) -> float:
        """Kish effective sample size under the carried weights."""
        if len(self) == 0:
            return 0.0
        s = self.weights.sum()
        return float(s * s / np.square(self.weights).sum())


def _initial_points(scheme: Scheme, spec: DensitySpec, n_chains: int,
                    rng: np.random.Generator) -> np.ndarray:
    """Physical starting points, loosely spread around the center of the body."""
    k = scheme.n_outcomes
    center = np.full(k, 1.0 / k)
    if spec.posterior_counts is not None and spec.posterior_counts.total > 0:
        freq = np.asarray(spec.posterior_counts.n, dtype=float) / spec.posterior_counts.total
        center = 0.5 * center + 0.5 * freq
        phys, _ = physicality_batch(center[None, :], scheme)
        if not phys[0]:
            center = np.full(k, 1.0 / k)
    pts = np.tile(center, (n_chains, 1))
    # jitter chains apart; keep only physical placements
    for _ in range(20):
        prop = 0.9 * pts + 0.1 * rng.dirichlet(np.ones(k), size=n_chains)
        phys, _ = physicality_batch(prop, scheme)
        pts = np.where(phys[:, None], prop, pts)
    return pts


def _autocorr_ess(series: np.ndarray) -> float:
    """Effective sample size of (steps, chains) series, summed over chains.

    Uses FFT autocorrelation per chain and the initial-positive-sequence
    cutoff on the pooled correlation.
    """
    steps, chains = series.shape
    if steps < 8:
        return float(steps * chains)
    x = series - series.mean(axis=0, keepdims=True)
    nfft = int(2 ** np.ceil(np.log2(2 * steps)))
    f = np.fft.rfft(x, n=nfft, axis=0)
    acov = np.fft.irfft(f * np.conj(f), n=nfft, axis=0)[:steps].real
    acov /= np.arange(steps, 0, -1)[:, None]
    denom = acov[0].mean()
    if denom <= 0.0:
        return float(steps * chains)
    rho = acov.mean(axis=1) / denom
    # pair-sum cutoff: stop once a consecutive pair of autocorrelations goes negative
    tau = 1.0
    for t in range(1, steps - 1, 2):
        pair = rho[t] + rho[t + 1]
        if pair < 0.0:
            break
        tau += 2.0 * pair
    return float(steps * chains / max(tau, 1.0))


def sample(spec: DensitySpec, scheme: Scheme | str, n_points: int, seed: int,
           settings: SamplerSettings | None = None) -> SampleSet:
    """Draw ``n_points`` from the target density restricted to physical points.

    Random-walk Metropolis with a Dirichlet proposal centered on the current
    point; the proposal concentration adapts toward the target acceptance
    rate during burn-in and is frozen afterwards.  All randomness derives
    from ``seed``, so identical calls reproduce identical samples.  The
    returned diagnostics include the acceptance rate and an autocorrelation
    effective sample size; a low ESS is reported through a warning and the
    ``converged`` flag rather than silently ignored.
    """
    if n_points < 1:
        raise ValueError("n_points must be at least 1")
    scheme = scheme_by_name(scheme) if isinstance(scheme, str) else scheme
    st = settings or SamplerSettings()
    k = scheme.n_outcomes
    n_chains = min(st.n_chains, n_points)
    keep_steps = int(np.ceil(n_points / n_chains))
    run_steps = keep_steps * st.thin
    burn_steps = max(int(np.ceil(st.burn_in * run_steps)), 50)

    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xD15C]))
    pts = _initial_points(scheme, spec, n_chains, rng)
    logpi = spec.log_density(pts)
    _, weights = physicality_batch(pts, scheme)

    conc = st.initial_concentration or 50.0 * k
    eps = 0.5  # Dirichlet regularization; keeps proposal parameters off zero

    def proposal_logpdf(draw, alpha):
        return (gammaln(alpha.sum(axis=1)) - gammaln(alpha).sum(axis=1)
                + ((alpha - 1.0) * np.log(draw)).sum(axis=1))

    kept = np.empty((keep_steps, n_chains, k))
    kept_w = np.empty((keep_steps, n_chains))
    accepted = 0
    proposed = 0
    window_acc = 0
    window_n = 0
    kept_idx = 0

    for step in range(burn_steps + run_steps):
        alpha = conc * pts + eps
        prop = rng.gamma(alpha)
        rowsum = prop.sum(axis=1, keepdims=True)
        ok = (prop > _PROB_FLOOR).all(axis=1) & (rowsum[:, 0] > _PROB_FLOOR)
        prop = np.where(ok[:, None], prop / np.where(rowsum > 0, rowsum, 1.0), pts)

        phys, w_prop = physicality_batch(prop, scheme)
        ok &= phys
        # target evaluated on physical rows only (property maps may reject
        # unphysical arguments)
        logpi_prop = np.full(n_chains, -np.inf)
        if ok.any():
            logpi_prop[ok] = spec.log_density(prop[ok])
        alpha_rev = conc * prop + eps
        with np.errstate(divide="ignore", invalid="ignore"):
            log_fwd = proposal_logpdf(prop, alpha)
            log_rev = proposal_logpdf(pts, alpha_rev)
        log_ratio = logpi_prop - logpi + log_rev - log_fwd
        log_ratio = np.where(ok & np.isfinite(log_ratio), log_ratio, -np.inf)
        accept = np.log(rng.uniform(size=n_chains)) < log_ratio

        pts = np.where(accept[:, None], prop, pts)
        logpi = np.where(accept, logpi_prop, logpi)
        weights = np.where(accept, w_prop, weights)

        in_burn = step < burn_steps
        if in_burn:
            window_acc += int(accept.sum())
            window_n += n_chains
            if (step + 1) % st.adapt_interval == 0:
                rate = window_acc / window_n
                conc = float(np.clip(conc * np.exp(st.target_acceptance - rate), 5.0, 1e7))
                window_acc = window_n = 0
        else:
            accepted += int(accept.sum())
            proposed += n_chains
            offset = step - burn_steps
            if (offset + 1) % st.thin == 0:
                kept[kept_idx] = pts
                kept_w[kept_idx] = weights
                kept_idx += 1

    points = kept.reshape(-1, k)[:n_points]
    wts = kept_w.reshape(-1)[:n_points]

    ess = min(_autocorr_ess(kept[:, :, j]) for j in range(k))
    ess = min(ess, float(n_points))
    ess_threshold = st.ess_threshold_fraction * n_points
    converged = bool(ess >= ess_threshold)
    if not converged:
        warnings.warn(
            f"sampler ESS {ess:.0f} below threshold {ess_threshold:.0f} "
            f"for scheme={scheme.name}; increase thinning or chain length",
            RuntimeWarning,
        )
    diagnostics = {
        "acceptance_rate": accepted / max(proposed, 1),
        "ess": ess,
        "ess_threshold": ess_threshold,
        "converged": converged,
        "n_chains": n_chains,
        "thin": st.thin,
        "burn_in_steps": burn_steps,
        "proposal_concentration": conc,
    }
    return SampleSet(points, wts, scheme.name, spec.describe(), seed, diagnostics)


def bootstrap_unweight(s: SampleSet, n_out: int, seed: int) -> SampleSet:
    """Resample points with probability proportional to their weights.

    The output carries unit weights; with equal input weights this is a
    plain multinomial resample of the empirical distribution.
    """
    if n_out < 0:
        raise ValueError("n_out must be non-negative")
    total = s.weights.sum()
    if len(s) > 0 and total <= 0.0:
        raise ValueError("cannot resample: all weights are zero")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xB007]))
    if n_out == 0 or len(s) == 0:
        idx = np.empty(0, dtype=int)
    else:
        idx = rng.choice(len(s), size=n_out, replace=True, p=s.weights / total)
    diagnostics = dict(s.diagnostics)
    diagnostics["bootstrap"] = {"n_source": len(s), "source_ess": s.effective_size}
    return SampleSet(s.points[idx], np.ones(n_out), s.scheme, s.density, seed, diagnostics)


# ---------------------------------------------------------------------------
# File formats: CSV of points plus a JSON sidecar with provenance
# ---------------------------------------------------------------------------

def _sidecar_path(csv_path: Path) -> Path:
    return csv_path.with_name(csv_path.stem + ".meta.json")


def save_samples(s: SampleSet, csv_path: str | Path, config_sha256: str | None = None) -> None:
    csv_path = Path(csv_path)
    k = s.points.shape[1] if len(s) else 0
    header = ",".join([f"p{i + 1}" for i in range(k)] + ["weight"])
    body = np.concatenate([s.points, s.weights[:, None]], axis=1) if len(s) else np.empty((0, 1))
    lines = [header]
    for row in body:
        lines.append(",".join(repr(float(v)) for v in row))
    csv_path.write_text("\n".join(lines) + "\n")
    meta = {
        "scheme": s.scheme,
        "density": s.density,
        "seed": s.seed,
        "n": len(s),
        "diagnostics": s.diagnostics,
    }
    if config_sha256 is not None:
        meta["config_sha256"] = config_sha256
    _sidecar_path(csv_path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def load_samples(csv_path: str | Path) -> SampleSet:
    csv_path = Path(csv_path)
    meta = json.loads(_sidecar_path(csv_path).read_text())
    raw = np.loadtxt(csv_path, delimiter=",", skiprows=1, ndmin=2)
    if raw.size == 0:
        pts = np.empty((0, 0))
        w = np.empty(0)
    else:
        pts, w = raw[:, :-1], raw[:, -1]
    return SampleSet(pts, w, meta["scheme"], meta["density"], meta["seed"], meta["diagnostics"])
