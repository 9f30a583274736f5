"""Analytic benchmark: first-failure times with a known failure rate.

A process runs flawlessly until time T, then fails at rate r; recorded
first-failure times pin down T.  The model is simple enough that shortest
frequentist confidence intervals (two standard constructions) and the
flat-prior smallest credible interval all have closed or one-dimensional
forms, which makes it a sharp test bed for the interval machinery and for
the difference between coverage and credibility.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc  # regularized lower incomplete gamma

__all__ = [
    "FailureData",
    "shortest_interval_params",
    "ci_type1",
    "ci_type2",
    "sci_flat",
    "bli",
    "credibility",
    "coverage_mc",
    "comparison_table",
    "format_table_text",
]


@dataclass(frozen=True)
class FailureData:
    """First-failure times (in units of 1/rate) and the known failure rate."""

    times: tuple[float, ...]
    rate: float = 1.0

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        if len(times) == 0:
            raise ValueError("need at least one failure time")
        if any(t <= 0.0 for t in times):
            raise ValueError("failure times must be positive")
        if self.rate <= 0.0:
            raise ValueError("failure rate must be positive")
        object.__setattr__(self, "times", times)

    @property
    def n(self) -> int:
        return len(self.times)

    @property
    def t_av(self) -> float:
        return sum(self.times) / len(self.times)

    @property
    def t_min(self) -> float:
        return min(self.times)


def _grow_upper_bracket(fn, lo: float, target: float) -> float:
    hi = lo + 1.0
    while fn(hi) > target:
        hi = lo + 2.0 * (hi - lo)
        if hi > 1e9:
            raise RuntimeError("failed to bracket the matching-density root")
    return hi


def shortest_interval_params(n: int, coverage: float, tol: float = 1e-10) -> tuple[float, float]:
    """Solve for (y1, y2) defining the shortest mean-based confidence set.

    The scaled statistic y = N r (t_av - T) follows a Gamma(N) law, so the
    interval [y2, y1] must hold probability ``coverage`` while the density
    y^(N-1) e^-y takes equal values at both ends; the shortest choice
    satisfies 0 < y2 < N-1 < y1.  Solved by nested bisection.
    """
    if not 0.0 < coverage < 1.0:
        raise ValueError("coverage must be in (0, 1)")
    if n < 2:
        raise ValueError("equal-density construction needs at least two observations")

    def logdens(y):
        return (n - 1) * math.log(y) - y

    def match_upper(y2: float) -> float:
        # y1 > n-1 with the same density value as y2
        target = logdens(y2)
        lo = float(n - 1)
        hi = _grow_upper_bracket(logdens, lo, target)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if logdens(mid) > target:
                lo = mid
            else:
                hi = mid
            if hi - lo < tol:
                break
        return 0.5 * (lo + hi)

    def cov_of(y2: float) -> float:
        y1 = match_upper(y2)
        return float(gammainc(n, y1) - gammainc(n, y2))

    lo, hi = 1e-12, float(n - 1) - 1e-12  # coverage decreases from ~1 to 0 on this range
    if cov_of(lo) < coverage:
        raise RuntimeError("requested coverage is not attainable")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if cov_of(mid) > coverage:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    y2 = 0.5 * (lo + hi)
    return match_upper(y2), y2


def ci_type1(data: FailureData, coverage: float) -> tuple[float, float]:
    """Shortest confidence interval built on the unbiased mean estimator.

    Returns (t_av - y1/(N r), t_av - y2/(N r)); the set has the requested
    coverage but individual intervals can demonstrably miss (or certainly
    contain) the true onset time.
    """
    y1, y2 = shortest_interval_params(data.n, coverage)
    nr = data.n * data.rate
    return (data.t_av - y1 / nr, data.t_av - y2 / nr)


def ci_type2(data: FailureData, coverage: float) -> tuple[float, float]:
    """Shortest confidence interval anchored at the earliest failure time."""
    if not 0.0 <= coverage < 1.0:
        raise ValueError("coverage must be in [0, 1)")
    nr = data.n * data.rate
    return (data.t_min - math.log(1.0 / (1.0 - coverage)) / nr, data.t_min)


def sci_flat(data: FailureData, credibility: float) -> tuple[float, float]:
    """Smallest credible interval for a flat prior on the onset time.

    The posterior is a truncated exponential below t_min; the interval is
    the flat-prior limit of an exponential-prior family.
    """
    if not 0.0 < credibility < 1.0:
        raise ValueError("credibility must be in (0, 1)")
    nr = data.n * data.rate
    damp = math.exp(-nr * data.t_min)
    lo = data.t_min - math.log(1.0 / ((1.0 - credibility) + damp * credibility)) / nr
    return (lo, data.t_min)


def bli(data: FailureData, lam: float) -> tuple[float, float]:
    """Bounded-likelihood interval at threshold lam (relative to the peak)."""
    if not 0.0 < lam <= 1.0:
        raise ValueError("lambda must be in (0, 1]")
    nr = data.n * data.rate
    return (max(0.0, data.t_min - math.log(1.0 / lam) / nr), data.t_min)


def credibility(data: FailureData, lam: float) -> float:
    """Flat-prior credibility of the bounded-likelihood interval at lam."""
    nr = data.n * data.rate
    return min(1.0, (1.0 - lam) / (1.0 - math.exp(-nr * data.t_min)))


def coverage_mc(builder: str, t_true: float, rate: float, n: int, coverage: float,
                trials: int, seed: int) -> float:
    """Monte Carlo coverage of an interval construction at the true onset time.

    ``builder`` is "type1" or "type2".  Simulates ``trials`` datasets of n
    first-failure times and returns the fraction of intervals containing
    ``t_true``.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    rng = np.random.default_rng(seed)
    times = t_true + rng.exponential(scale=1.0 / rate, size=(trials, n))
    nr = n * rate
    if builder == "type1":
        y1, y2 = shortest_interval_params(n, coverage)
        t_av = times.mean(axis=1)
        hit = (t_av - y1 / nr < t_true) & (t_true < t_av - y2 / nr)
    elif builder == "type2":
        width = math.log(1.0 / (1.0 - coverage)) / nr
        t_min = times.min(axis=1)
        hit = (t_min - width < t_true) & (t_true < t_min)
    else:
        raise ValueError("builder must be 'type1' or 'type2'")
    return float(hit.mean())


def comparison_table(data: FailureData, level: float = 0.95) -> dict:
    """All three interval constructions for one dataset, as plain data."""
    i1 = ci_type1(data, level)
    i2 = ci_type2(data, level)
    sc = sci_flat(data, level)
    return {
        "times": list(data.times),
        "rate": data.rate,
        "level": level,
        "intervals": {
            "confidence_mean_based": {"lo": i1[0], "hi": i1[1], "kind": "coverage"},
            "confidence_min_based": {"lo": i2[0], "hi": i2[1], "kind": "coverage"},
            "sci_flat_prior": {"lo": sc[0], "hi": sc[1], "kind": "credibility"},
        },
        "t_min": data.t_min,
        "t_av": data.t_av,
    }


def format_table_text(table: dict) -> str:
    """Aligned text rendering of :func:`comparison_table` output."""
    lines = [
        f"first-failure times: {', '.join(f'{t:g}' for t in table['times'])}   rate: {table['rate']:g}",
        f"level: {table['level']:.3f}   t_min = {table['t_min']:.4f}   t_av = {table['t_av']:.4f}",
        "",
        f"{'construction':<28}{'lower':>12}{'upper':>12}  guarantees",
    ]
    for name, row in table["intervals"].items():
        lines.append(f"{name:<28}{row['lo']:>12.4f}{row['hi']:>12.4f}  {row['kind']}")
    return "\n".join(lines) + "\n"
