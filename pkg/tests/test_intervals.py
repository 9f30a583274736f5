import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import erf

from optint import intervals as iv
from optint import marginal as mg
from optint import sampling as sp
from optint import statespace as ss
from optint.properties import PropertyFn, property_by_name


def gaussian_likelihood(mu=0.55, sigma=0.04, frange=(0.0, 1.0)):
    """Likelihood curve built from analytic fits: exp Gaussian via fit machinery."""
    lo, hi = frange
    grid = np.linspace(lo, hi, 201)

    def fn(f):
        f = np.asarray(f, dtype=float)
        return np.exp(-0.5 * ((f - mu) / sigma) ** 2)

    fine = np.linspace(lo, hi, 8001)
    return mg.LikelihoodCurve(grid, fn(grid), mu, frange, fn,
                              np.zeros(201, dtype=bool), fine, fn(fine))


def bimodal_likelihood(mu1=0.3, mu2=0.75, h2=0.8, sigma=0.03):
    grid = np.linspace(0, 1, 201)

    def fn(f):
        f = np.asarray(f, dtype=float)
        return (np.exp(-0.5 * ((f - mu1) / sigma) ** 2)
                + h2 * np.exp(-0.5 * ((f - mu2) / sigma) ** 2))

    fine = np.linspace(0, 1, 8001)
    vals = fn(fine)
    peak = vals.max()
    return mg.LikelihoodCurve(grid, fn(grid) / peak, mu1, (0.0, 1.0),
                              lambda f: fn(f) / peak,
                              np.zeros(201, dtype=bool), fine, vals / peak)


# ---------------------------------------------------------------------------
# IntervalUnion
# ---------------------------------------------------------------------------

def test_interval_union_validation():
    with pytest.raises(ValueError):
        iv.IntervalUnion(((0.5, 0.2),))
    with pytest.raises(ValueError):
        iv.IntervalUnion(((0.1, 0.4), (0.3, 0.6)))
    u = iv.IntervalUnion(((0.1, 0.2), (0.5, 0.9)))
    assert u.total_length == pytest.approx(0.5)
    assert u.contains(0.15) and not u.contains(0.3)
    assert u.covers(iv.IntervalUnion(((0.6, 0.8),)))
    assert not u.covers(iv.IntervalUnion(((0.15, 0.55),)))


# ---------------------------------------------------------------------------
# bli
# ---------------------------------------------------------------------------

def test_bli_unimodal_brackets_peak():
    L = gaussian_likelihood()
    region = iv.bli(L, 0.5)
    assert region.n_segments == 1
    (a, b), = region.segments
    half = 0.04 * np.sqrt(2 * np.log(2))
    assert a == pytest.approx(0.55 - half, abs=1e-6)
    assert b == pytest.approx(0.55 + half, abs=1e-6)
    assert region.contains(L.f_ml)


def test_bli_threshold_extremes():
    L = gaussian_likelihood()
    assert iv.bli(L, 0.0).segments == ((0.0, 1.0),)
    degenerate = iv.bli(L, 1.0)
    assert degenerate.total_length < 1e-6
    assert degenerate.contains(0.55, atol=1e-6)


def test_bli_bimodal_keeps_only_tall_peak_at_high_threshold():
    L = bimodal_likelihood()
    high = iv.bli(L, 0.9)
    assert high.n_segments == 1
    assert high.contains(0.3) and not high.contains(0.75)
    low = iv.bli(L, 0.5)
    assert low.n_segments == 2
    assert low.contains(0.3) and low.contains(0.75)
    # fine-grid oracle for the boundaries
    xs = np.linspace(0, 1, 200_001)
    above = xs[L.fn(xs) >= 0.5]
    assert low.segments[0][0] == pytest.approx(above[0], abs=1e-4)
    assert low.segments[1][1] == pytest.approx(above[-1], abs=1e-4)


def test_bli_nesting():
    L = bimodal_likelihood()
    rng = np.random.default_rng(5)
    for _ in range(50):
        l1, l2 = np.sort(rng.uniform(0.01, 0.99, 2))
        inner = iv.bli(L, l2)
        outer = iv.bli(L, l1)
        assert outer.covers(inner, atol=1e-12)


def test_bli_always_contains_maximum_likelihood_point():
    L = bimodal_likelihood()
    for lam in np.linspace(0.0, 0.999, 40):
        assert iv.bli(L, float(lam)).contains(L.f_ml, atol=1e-9)


# ---------------------------------------------------------------------------
# size_credibility
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def gaussian_family():
    L = gaussian_likelihood()
    return iv.size_credibility(L, iv.PropertyPriorSpec.flat((0.0, 1.0)))


def test_family_endpoints(gaussian_family):
    fam = gaussian_family
    assert fam.lambdas[0] == 1.0 and fam.lambdas[-1] == 0.0
    assert fam.s[-1] == pytest.approx(1.0, abs=1e-12)
    assert fam.c[-1] == pytest.approx(1.0, abs=1e-12)
    assert fam.s[0] == pytest.approx(0.0, abs=1e-9)


def test_family_monotone_and_dominated(gaussian_family):
    fam = gaussian_family
    assert np.all(np.diff(fam.s) >= -1e-12)   # descending lambdas: s grows
    assert np.all(np.diff(fam.c) >= -1e-12)
    assert np.all(fam.c >= fam.s - 1e-9)


def test_family_matches_analytic_gaussian(gaussian_family):
    # flat prior: s = interval length; c from the normal integral
    fam = gaussian_family
    mu, sigma = 0.55, 0.04
    norm = quad(lambda f: np.exp(-0.5 * ((f - mu) / sigma) ** 2), 0, 1)[0]
    for lam in (0.9, 0.5, 0.2, 0.05):
        idx = np.argmin(np.abs(fam.lambdas - lam))
        lam_g = fam.lambdas[idx]
        half = sigma * np.sqrt(2 * np.log(1 / lam_g))
        assert fam.s[idx] == pytest.approx(2 * half, abs=1e-4)
        c_exact = quad(lambda f: np.exp(-0.5 * ((f - mu) / sigma) ** 2),
                       mu - half, mu + half)[0] / norm
        assert fam.c[idx] == pytest.approx(c_exact, abs=1e-4)


def test_consistency_identity(gaussian_family):
    # c_lambda reconstructed from the size curve alone
    fam = gaussian_family
    lams = fam.lambdas[::-1]
    s = fam.s[::-1]
    total = np.trapezoid(s, lams)
    for idx in range(0, len(fam.lambdas), 25):
        lam = fam.lambdas[idx]
        upper = np.trapezoid(np.where(lams >= lam, s, 0.0), lams)
        c_pred = (lam * fam.s[idx] + upper) / total
        assert fam.c[idx] == pytest.approx(c_pred, abs=0.01)


def test_evidence_gap_peaks_at_critical_threshold(gaussian_family):
    fam = gaussian_family
    gap = fam.c - fam.s
    lam_at_max = fam.lambdas[np.argmax(gap)]
    assert lam_at_max == pytest.approx(fam.lambda_crit, abs=2.5e-3)  # one grid step


def test_interval_for_target(gaussian_family):
    fam = gaussian_family
    full = iv.interval_for_target(fam, "credibility", 1.0)
    assert full.segments == ((0.0, 1.0),)
    sci = iv.interval_for_target(fam, "credibility", 0.95)
    assert fam.credibility_of(sci) == pytest.approx(0.95, abs=2e-3)
    assert sci.contains(0.55)
    mli = iv.interval_for_target(fam, "size", 0.1)
    assert mli.total_length == pytest.approx(0.1, abs=2e-3)
    (a, b), = mli.segments
    assert 0.5 * (a + b) == pytest.approx(0.55, abs=1e-4)  # symmetric about peak
    with pytest.raises(ValueError):
        iv.interval_for_target(fam, "credibility", 1.5)
    with pytest.raises(ValueError):
        iv.interval_for_target(fam, "nonsense", 0.5)


def test_sci_duality(gaussian_family):
    fam = gaussian_family
    for idx in (40, 200, 320):
        lam = fam.lambdas[idx]
        sci = iv.interval_for_target(fam, "credibility", float(fam.c[idx]))
        direct = fam.intervals[idx]
        for (a1, b1), (a2, b2) in zip(sci.segments, direct.segments):
            assert a1 == pytest.approx(a2, abs=5e-3)
            assert b1 == pytest.approx(b2, abs=5e-3)


def test_plausible_interval_gaussian(gaussian_family):
    fam = gaussian_family
    lam, region = iv.plausible_interval(fam)
    # flat prior, narrow Gaussian: lambda_crit = W0 sigma sqrt(2 pi)
    assert lam == pytest.approx(0.04 * np.sqrt(2 * np.pi), abs=2e-3)
    assert abs(lam - fam.size_integral()) < 0.01
    assert region.contains(0.55)


def test_plausible_interval_constant_likelihood():
    grid = np.linspace(0, 1, 201)
    fine = np.linspace(0, 1, 8001)
    L = mg.LikelihoodCurve(grid, np.ones(201), 0.0, (0.0, 1.0),
                           lambda f: np.ones_like(np.asarray(f, dtype=float)),
                           np.zeros(201, dtype=bool), fine, np.ones(8001))
    fam = iv.size_credibility(L, iv.PropertyPriorSpec.flat((0.0, 1.0)))
    lam, region = iv.plausible_interval(fam)
    assert lam == pytest.approx(1.0, abs=1e-9)
    assert region.segments == ((0.0, 1.0),)


def test_plausible_interval_diagnostic_failure(gaussian_family):
    fam = gaussian_family
    import dataclasses
    broken = dataclasses.replace(fam, lambda_crit=fam.lambda_crit + 0.05)
    with pytest.raises(iv.DiagnosticError):
        iv.plausible_interval(broken)


def test_point_estimators_symmetric_gaussian(gaussian_family):
    L = gaussian_likelihood()
    est = iv.point_estimators(L, iv.PropertyPriorSpec.flat((0.0, 1.0)))
    assert est.f_ml == pytest.approx(0.55, abs=1e-9)
    assert est.f_bm == pytest.approx(0.55, abs=1e-6)
    assert not est.ml_degenerate


def test_degenerate_data_boundary_likelihood_machinery():
    # with every click in outcome 1 the fidelity likelihood is analytic:
    # on the iso-fidelity disks p_1 is constant, so L = ((1 - F^2)/2)^30 up
    # to normalization, peaked exactly on the range endpoint
    grid = np.linspace(0, 1, 201)
    fn = lambda f: (1.0 - np.asarray(f, dtype=float) ** 2) ** 30
    fine = np.linspace(0, 1, 8001)
    L = mg.LikelihoodCurve(grid, fn(grid), 0.0, (0.0, 1.0), fn,
                           np.zeros(201, dtype=bool), fine, fn(fine))
    region = iv.bli(L, 0.5)
    assert region.segments[0][0] == 0.0  # half-open at the boundary
    assert region.segments[0][1] == pytest.approx(np.sqrt(1 - 0.5 ** (1 / 30)), abs=1e-6)
    fam = iv.size_credibility(L, iv.PropertyPriorSpec.flat((0.0, 1.0)))
    lam, plaus = iv.plausible_interval(fam)
    assert plaus.segments[0][0] == 0.0
    est = iv.point_estimators(L, iv.PropertyPriorSpec.flat((0.0, 1.0)))
    assert est.f_ml == 0.0


def test_degenerate_data_boundary_peak_monte_carlo():
    # the sampled pipeline puts the maximum-likelihood estimate at the edge
    # up to funnel-limited Monte Carlo resolution
    d = ss.Counts((30, 0, 0, 0))
    prop = property_by_name("fidelity")
    st = sp.SamplerSettings(n_chains=128, thin=6)
    res = mg.iterate_reference("tetrahedron", prop, "primitive", rounds=2, seeds=31,
                               n_points=30_000, tolerance=0.02, settings=st)
    post, _ = mg.posterior_content("tetrahedron", prop, "primitive", res.divisor,
                                   d, 30_000, 3131, settings=st)
    ratio_fit = mg.fit_content(res.final_curve, "beta_mixture",
                               plan=mg.BetaFitPlan(terms=4, alpha_floor=0.0, beta_floor=0.0))
    L = mg.f_likelihood(res.final_curve.with_fit(ratio_fit), post)
    assert L.f_ml <= 0.05
    region = iv.bli(L, 0.2)
    assert region.segments[0][0] <= 0.02


# ---------------------------------------------------------------------------
# indirect (state-region) estimation
# ---------------------------------------------------------------------------

def test_ispe_full_range_at_tiny_credibility_threshold():
    rng = np.random.default_rng(6)
    pts = rng.dirichlet(np.ones(4), size=4000)
    keep = np.linalg.norm(ss.bloch_from_probabilities(pts), axis=1) <= 1.0
    pts = pts[keep]
    s_pri = sp.SampleSet(pts, np.ones(len(pts)), "tetrahedron", {}, 0)
    d = ss.Counts((2, 10, 11, 13))
    logl = ss.log_point_likelihood_batch(pts, d)
    w = np.exp(logl - logl.max())
    idx = rng.choice(len(pts), size=len(pts), p=w / w.sum())
    s_post = sp.SampleSet(pts[idx], np.ones(len(pts)), "tetrahedron", {}, 0)
    prop = property_by_name("purity")
    full = iv.ispe_range(s_pri, s_post, d, prop, credibility=1.0)
    f = prop.fn(s_post.points)
    assert full.segments[0][0] == pytest.approx(f.min())
    assert full.segments[0][1] == pytest.approx(f.max())


def test_pade_size_export(gaussian_family):
    # plotting export only: the size curve has a root-log rise near zero
    # threshold, which a low-order rational approximates loosely
    fit = iv.pade_size_fit(gaussian_family)
    assert len(fit["numerator"]) == 4 and len(fit["denominator"]) == 4
    assert fit["denominator"][0] == 1.0
    assert fit["rmse"] < 0.05


def test_gaussian_asymptotics_values():
    out = iv.gaussian_asymptotics(1.0, 1.0, int(round(2 * np.pi * 1e4)))
    assert out.applicable
    assert out.lambda_crit == pytest.approx(0.01, abs=1e-6)  # N rounds to an integer
    lam = out.lambda_crit
    assert out.size == pytest.approx(2 * lam * np.sqrt(np.log(1 / lam) / np.pi), rel=1e-12)
    assert out.credibility == pytest.approx(erf(np.sqrt(np.log(1 / lam))), rel=1e-12)


def test_gaussian_asymptotics_scaling_and_flag():
    a = iv.gaussian_asymptotics(1.0, 1.0, 10_000)
    b = iv.gaussian_asymptotics(1.0, 1.0, 40_000)
    assert b.lambda_crit == pytest.approx(a.lambda_crit / 2, rel=1e-12)
    flagged = iv.gaussian_asymptotics(5.0, 5.0, 100)
    assert not flagged.applicable and np.isnan(flagged.size)


def test_gaussian_asymptotics_matches_pipeline_on_synthetic_gaussian():
    sigma = 0.01  # alpha / sqrt(N) with alpha=1, N=1e4
    L = gaussian_likelihood(mu=0.5, sigma=sigma)
    fam = iv.size_credibility(L, iv.PropertyPriorSpec.flat((0.0, 1.0)))
    lam, region = iv.plausible_interval(fam)
    pred = iv.gaussian_asymptotics(1.0, 1.0, 10_000)
    assert lam == pytest.approx(pred.lambda_crit, rel=0.05)
    assert fam.size_of(region) == pytest.approx(pred.size, rel=0.05)
    assert fam.credibility_of(region) == pytest.approx(pred.credibility, rel=0.05)
