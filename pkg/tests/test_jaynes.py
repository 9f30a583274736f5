import numpy as np
import pytest

from optint import jaynes as jx

DATA_LATE = jx.FailureData((10.0, 12.0, 15.0))
DATA_EARLY = jx.FailureData((1.9, 2.1, 2.3))


def test_shortest_interval_params_n3():
    # exact roots of the equal-density + coverage conditions (30-digit solve):
    # y1 = 6.40122204815..., y2 = 0.30350055872...; the quoted 6.400/0.3037
    # are consistent with these at their printed precision
    y1, y2 = jx.shortest_interval_params(3, 0.95)
    assert y1 == pytest.approx(6.40122204815, abs=1e-8)
    assert y2 == pytest.approx(0.30350055872, abs=1e-8)
    assert y1 == pytest.approx(6.400, abs=5e-3)
    assert y2 == pytest.approx(0.3037, abs=5e-4)
    logd = lambda y: 2 * np.log(y) - y
    assert logd(y1) == pytest.approx(logd(y2), abs=1e-8)
    from scipy.special import gammainc
    assert gammainc(3, y1) - gammainc(3, y2) == pytest.approx(0.95, abs=1e-9)


def test_mean_based_interval_values():
    lo, hi = jx.ci_type1(DATA_LATE, 0.95)
    assert lo == pytest.approx(10.19959265, abs=1e-7)
    assert hi == pytest.approx(12.23216648, abs=1e-7)
    lo, hi = jx.ci_type1(DATA_EARLY, 0.95)
    assert lo == pytest.approx(-0.03374068, abs=1e-7)
    assert hi == pytest.approx(1.99883315, abs=1e-7)
    # the first dataset's interval certainly excludes the true onset time
    assert lo < DATA_EARLY.t_min


def test_min_based_interval_values():
    lo, hi = jx.ci_type2(DATA_LATE, 0.95)
    assert lo == pytest.approx(9.0014, abs=0.005)
    assert hi == 10.0
    lo, hi = jx.ci_type2(DATA_EARLY, 0.95)
    assert lo == pytest.approx(0.9014, abs=0.005)
    assert hi == pytest.approx(1.9)
    lo, hi = jx.ci_type2(DATA_LATE, 0.0)
    assert lo == hi == DATA_LATE.t_min


def test_sci_flat_values():
    lo, hi = jx.sci_flat(DATA_LATE, 0.95)
    assert lo == pytest.approx(9.0014, abs=0.005)
    assert hi == 10.0
    lo, hi = jx.sci_flat(DATA_EARLY, 0.95)
    assert lo == pytest.approx(0.922, abs=0.005)
    assert hi == pytest.approx(1.9)


def test_sci_upper_endpoint_is_earliest_failure():
    rng = np.random.default_rng(0)
    for _ in range(50):
        times = tuple(rng.exponential(1.0, size=3) + rng.uniform(0, 5))
        d = jx.FailureData(times)
        c = rng.uniform(0.05, 0.99)
        assert jx.sci_flat(d, c)[1] == d.t_min


def test_sci_flat_approaches_min_based_interval():
    # the two differ only by an exponentially small posterior truncation term
    rng = np.random.default_rng(1)
    for _ in range(50):
        d = jx.FailureData(tuple(rng.exponential(1.0, size=3) + rng.uniform(0.5, 5)))
        c = 0.95
        gap = jx.sci_flat(d, c)[0] - jx.ci_type2(d, c)[0]
        bound = np.exp(-d.n * d.rate * d.t_min) / (d.n * d.rate * (1 - c))
        assert 0.0 <= gap <= bound + 1e-12


def test_bli_and_credibility():
    lam = 0.3
    lo, hi = jx.bli(DATA_LATE, lam)
    assert hi == DATA_LATE.t_min
    assert lo == pytest.approx(DATA_LATE.t_min - np.log(1 / lam) / 3)
    c = jx.credibility(DATA_LATE, lam)
    assert c == pytest.approx((1 - lam) / (1 - np.exp(-3 * DATA_LATE.t_min)), abs=1e-12)


def test_coverage_mc_type2():
    cov = jx.coverage_mc("type2", t_true=2.0, rate=1.0, n=3, coverage=0.95,
                         trials=100_000, seed=7)
    assert cov == pytest.approx(0.95, abs=0.005)


def test_coverage_mc_type1():
    cov = jx.coverage_mc("type1", t_true=2.0, rate=1.0, n=3, coverage=0.95,
                         trials=100_000, seed=8)
    assert cov == pytest.approx(0.95, abs=0.005)


def test_mean_estimator_unbiased():
    rng = np.random.default_rng(9)
    t_true, rate, n = 2.0, 1.0, 3
    times = t_true + rng.exponential(1 / rate, size=(100_000, n))
    est = times.mean(axis=1) - 1 / rate
    se = est.std() / np.sqrt(len(est))
    assert abs(est.mean() - t_true) < 3 * se


def test_min_estimator_bias():
    rng = np.random.default_rng(10)
    t_true, rate, n = 2.0, 1.0, 3
    times = t_true + rng.exponential(1 / rate, size=(100_000, n))
    est = times.min(axis=1)
    se = est.std() / np.sqrt(len(est))
    assert abs(est.mean() - (t_true + 1 / (n * rate))) < 3 * se


def test_comparison_table_render():
    table = jx.comparison_table(DATA_LATE, 0.95)
    text = jx.format_table_text(table)
    assert "confidence_mean_based" in text and "sci_flat_prior" in text
    assert table["intervals"]["sci_flat_prior"]["hi"] == 10.0


def test_input_validation():
    with pytest.raises(ValueError):
        jx.FailureData(())
    with pytest.raises(ValueError):
        jx.FailureData((1.0, -2.0))
    with pytest.raises(ValueError):
        jx.ci_type1(DATA_LATE, 1.5)
    with pytest.raises(ValueError):
        jx.coverage_mc("nope", 1.0, 1.0, 3, 0.95, 10, 0)
