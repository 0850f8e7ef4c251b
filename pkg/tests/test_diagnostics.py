import math

import numpy as np
import pytest

from chaos_edgeworth.diagnostics import (
    DENSITY_GRID_HEADER,
    RatePoint,
    RateReport,
    TvEstimate,
    density_grid,
    grid_to_csv,
    kde,
    rate_regression,
    rate_report_to_csv,
    resolve_bandwidth,
    smoothed_measure_density,
    stein_discrepancy_check,
    tv_signed,
)
from chaos_edgeworth.edgeworth import build_measure, density, synthetic_measure
from chaos_edgeworth.errors import DomainError
from chaos_edgeworth.simulate import (
    FbmHermiteModel,
    GoeTraceModel,
    HomogeneousSum,
    SampleBatch,
    complete_graph_sum,
    sample_fbm_hermite,
    sample_goe_trace,
    sample_homogeneous,
)

PHI0 = 1.0 / math.sqrt(2.0 * math.pi)
TRAPZ = getattr(np, "trapezoid", None) or np.trapz

BOUNDED_PANEL = (
    np.cos,
    lambda x: np.sin(1.3 * x),
    np.tanh,
    lambda x: 1.0 / (1.0 + x * x),
    np.arctan,
)


def normal_samples(n, seed=0):
    rng = np.random.Generator(np.random.Philox(key=seed))
    return SampleBatch(model="synthetic-normal", p=1, seed=seed,
                       f_samples=rng.standard_normal(n), gamma_samples=None)


@pytest.fixture(scope="module")
def fbm64_small():
    return sample_fbm_hermite(FbmHermiteModel(0.5, 2, 64), 200_000, seed=101)


# ---------------------------------------------------------------- bandwidth

def test_resolve_bandwidth():
    batch = normal_samples(10_000)
    assert resolve_bandwidth(batch, 0.3) == 0.3
    sigma = float(batch.f_samples.std(ddof=1))
    expect = 1.06 * sigma * 10_000 ** (-0.2)
    assert abs(resolve_bandwidth(batch, "auto") - expect) <= 1e-15
    for bad in (0.0, -1.0, math.inf, "silverman"):
        with pytest.raises(DomainError):
            resolve_bandwidth(batch, bad)
    single = SampleBatch(model="s", p=1, seed=0,
                         f_samples=np.array([0.0]), gamma_samples=None)
    with pytest.raises(DomainError, match="at least 2"):
        resolve_bandwidth(single, "auto")


# ---------------------------------------------------------------------- kde

def test_kde_single_kernel_frozen():
    single = SampleBatch(model="s", p=1, seed=0,
                         f_samples=np.array([0.0]), gamma_samples=None)
    assert abs(kde(single, 0.0, 1.0, 0) - PHI0) <= 1e-14
    assert kde(single, 0.0, 1.0, 1) == 0.0
    assert abs(kde(single, 0.0, 1.0, 2) - (-PHI0)) <= 1e-14
    # one kernel at distance u: value phi(u)/h etc.
    u = 1.5
    assert abs(kde(single, u, 0.5, 0)
               - math.exp(-0.5 * (u / 0.5) ** 2) / math.sqrt(2 * math.pi) / 0.5) \
        <= 1e-14
    arr = kde(single, np.linspace(-1, 1, 5), 1.0, 0)
    assert arr.shape == (5,)


def test_kde_matches_gaussian_density():
    batch = normal_samples(1_000_000, seed=11)
    xs = np.linspace(-3.0, 3.0, 301)
    est = kde(batch, xs, "auto", 0)
    phi = np.exp(-0.5 * xs * xs) / math.sqrt(2 * math.pi)
    assert float(np.max(np.abs(est - phi))) <= 0.01


def test_kde_binned_matches_exact():
    batch = normal_samples(20_000, seed=12)
    xs = np.linspace(-4.0, 4.0, 201)
    for j in range(3):
        exact = kde(batch, xs, 0.3, j, method="exact")
        binned = kde(batch, xs, 0.3, j, method="binned")
        scale = max(1.0, float(np.max(np.abs(exact))))
        assert float(np.max(np.abs(exact - binned))) <= 2e-4 * scale, j


def test_kde_derivatives_match_differences_on_exact_path():
    batch = normal_samples(5000, seed=13)
    xs = np.linspace(-3.0, 3.0, 25)
    h = 1e-5
    d1 = (kde(batch, xs + h, 0.4, 0) - kde(batch, xs - h, 0.4, 0)) / (2 * h)
    d2 = (kde(batch, xs + h, 0.4, 1) - kde(batch, xs - h, 0.4, 1)) / (2 * h)
    np.testing.assert_allclose(kde(batch, xs, 0.4, 1), d1, atol=1e-6)
    np.testing.assert_allclose(kde(batch, xs, 0.4, 2), d2, atol=1e-6)


def test_kde_deterministic():
    batch = normal_samples(50_000, seed=14)
    xs = np.linspace(-5, 5, 101)
    a = kde(batch, xs, "auto", 0, method="binned")
    b = kde(batch, xs, "auto", 0, method="binned")
    np.testing.assert_array_equal(a, b)


def test_kde_rejects():
    batch = normal_samples(100)
    with pytest.raises(DomainError):
        kde(batch, np.zeros(3), 1.0, 3)
    with pytest.raises(DomainError):
        kde(batch, np.array([]), 1.0, 0)
    with pytest.raises(DomainError):
        kde(batch, np.zeros(3), 1.0, 0, method="histogram")


# ------------------------------------------------------- smoothed reference

def test_smoothed_density_pure_gaussian():
    meas = synthetic_measure(1)
    xs = np.linspace(-4, 4, 17)
    for h in (0.1, 0.5, 1.0):
        s = math.sqrt(1 + h * h)
        expect = np.exp(-0.5 * (xs / s) ** 2) / (s * math.sqrt(2 * math.pi))
        np.testing.assert_allclose(smoothed_measure_density(meas, xs, h),
                                   expect, rtol=1e-13)


def test_smoothed_density_matches_numeric_convolution():
    meas = synthetic_measure(2, moments={3: 0.2, 4: 0.1})
    h = 0.35
    u = np.linspace(-10, 10, 20_001)
    raw = density(meas, u, 0)
    for x in (-1.7, 0.0, 0.4, 2.2):
        integrand = raw * np.exp(-0.5 * ((x - u) / h) ** 2) \
            / (h * math.sqrt(2 * math.pi))
        numeric = float(TRAPZ(integrand, u))
        assert abs(smoothed_measure_density(meas, x, h) - numeric) <= 1e-8, x


def test_smoothed_density_small_bandwidth_limit():
    meas = synthetic_measure(1, moments={3: 0.3})
    xs = np.linspace(-3, 3, 13)
    gap = smoothed_measure_density(meas, xs, 0.01) - density(meas, xs, 0)
    assert float(np.max(np.abs(gap))) <= 1e-3


# ------------------------------------------------------------- density grid

def test_density_grid_and_csv(tmp_path, fbm64_small):
    meas = build_measure(fbm64_small, 1)
    grid = density_grid(fbm64_small, meas, (-8.0, 8.0), 801, 0.25)
    assert grid.n_points == 801
    assert grid.bandwidth == 0.25
    path = tmp_path / "grid.csv"
    grid_to_csv(grid, path)
    lines = path.read_text().split("\n")
    assert lines[0] == DENSITY_GRID_HEADER
    assert len(lines) == 803 and lines[-1] == ""
    row = lines[1].split(",")
    assert len(row) == 10
    assert float(row[0]) == grid.x[0]
    assert float(row[3]) == grid.edgeworth[0]


def test_density_grid_rejects_uncovering_bounds(fbm64_small):
    meas = build_measure(fbm64_small, 1)
    with pytest.raises(DomainError, match="integrates"):
        density_grid(fbm64_small, meas, (-2.0, 2.0), 801, 0.25)
    with pytest.raises(DomainError):
        density_grid(fbm64_small, meas, (2.0, -2.0), 801, 0.25)


# ---------------------------------------------------------------- tv_signed

def test_tv_identical_laws_is_small():
    batch = normal_samples(200_000, seed=15)
    meas = synthetic_measure(1, p=1)
    est = tv_signed(batch, meas, (-8.0, 8.0), 1001)
    assert isinstance(est, TvEstimate)
    assert est.value <= 0.01
    assert est.tail_bound <= 1e-6
    assert est.inside_fraction == 1.0


def test_tv_increases_with_moment_distortion():
    batch = normal_samples(200_000, seed=16)
    values = []
    for m4 in (0.5, 1.0, 2.0):
        meas = synthetic_measure(2, p=1, moments={4: m4})
        values.append(tv_signed(batch, meas, (-8.0, 8.0), 1001).value)
    assert values[0] < values[1] < values[2]
    assert values[0] > 0.001


def test_tv_histogram_mode():
    batch = normal_samples(200_000, seed=17)
    pure = synthetic_measure(1, p=1)
    est = tv_signed(batch, pure, (-8.0, 8.0), 1001,
                    density_source="histogram")
    assert est.bandwidth is None
    assert est.value <= 0.05
    skew = synthetic_measure(1, p=1, moments={3: 1.0})
    worse = tv_signed(batch, skew, (-8.0, 8.0), 1001,
                      density_source="histogram")
    assert worse.value > est.value


def test_tv_refinement_stable(fbm_family_1m):
    batch = fbm_family_1m[64]
    meas = build_measure(batch, 1)
    a = tv_signed(batch, meas, (-8.0, 8.0), 1001, bandwidth=0.25).value
    b = tv_signed(batch, meas, (-8.0, 8.0), 2001, bandwidth=0.25).value
    assert abs(a - b) < 1e-3


def test_tv_warns_on_cut_bounds():
    batch = normal_samples(50_000, seed=18)
    meas = synthetic_measure(1, p=1)
    with pytest.warns(RuntimeWarning, match="cover"):
        est = tv_signed(batch, meas, (-1.0, 1.0), 501)
    assert est.inside_fraction < 0.999
    assert est.tail_bound > 0.1


def test_tv_validation():
    batch = normal_samples(2000)
    meas = synthetic_measure(1, p=1)
    with pytest.raises(DomainError):
        tv_signed(batch, meas, (-8.0, 8.0), 500)
    with pytest.raises(DomainError):
        tv_signed(batch, meas, (8.0, -8.0), 501)
    with pytest.raises(DomainError):
        tv_signed(batch, meas, (-8.0, 8.0), 501, density_source="spline")
    with pytest.raises(DomainError):
        tv_signed(batch, meas, (-8.0, 8.0), 501, reference="exact")


# ---------------------------------------------------------- rate regression

def test_rate_regression_exact_fit():
    v = np.array([1.0, 0.25, 1 / 16, 1 / 64])
    pts = [(float(vi), float(0.3 * vi), i, "synthetic")
           for i, vi in enumerate(v, start=1)]
    report = rate_regression(pts, m=1, slope_band=(0.75, 1.25))
    assert abs(report.slope - 1.0) <= 1e-12
    assert abs(report.ci_high - report.ci_low) <= 1e-10
    assert report.target == 1.0
    assert report.passed is True


def test_rate_regression_with_noise():
    rng = np.random.Generator(np.random.Philox(key=5))
    v = 2.0 ** -np.arange(6)
    d = 0.2 * v ** 1.0 * np.exp(0.1 * rng.standard_normal(6))
    pts = [RatePoint(float(vi), float(di), i, "noisy")
           for i, (vi, di) in enumerate(zip(v, d), start=1)]
    report = rate_regression(pts, m=1)
    assert abs(report.slope - 1.0) <= 0.1
    assert report.ci_low < report.slope < report.ci_high
    assert report.passed is None


def test_rate_regression_one_sided_band():
    v = [1.0, 0.1, 0.01]
    pts = [(vi, 0.5 * vi ** 1.5, i, "") for i, vi in enumerate(v, 1)]
    report = rate_regression(pts, m=2, slope_band=(1.2, None))
    assert report.target == 1.5
    assert report.passed is True


def test_rate_regression_rejects():
    good = [(1.0, 0.1, 1, ""), (0.25, 0.03, 2, ""), (0.0625, 0.01, 3, "")]
    with pytest.raises(DomainError, match="3 points"):
        rate_regression(good[:2], m=1)
    flat = [(1.0, 0.1, 1, ""), (0.9, 0.09, 2, ""), (0.8, 0.08, 3, "")]
    with pytest.raises(DomainError, match="degenerate"):
        rate_regression(flat, m=1)
    with pytest.raises(DomainError):
        RatePoint(-1.0, 0.1, 1)
    with pytest.raises(DomainError):
        rate_regression(good, m=0)


def test_rate_report_csv(tmp_path):
    pts = [(1.0, 0.1, 32, "a"), (0.25, 0.03, 64, "b"),
           (0.0625, 0.008, 128, "c")]
    report = rate_regression(pts, m=1)
    path = tmp_path / "rate.csv"
    rate_report_to_csv(report, path)
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "n,var_gamma,d_tv,descriptor"
    assert len(lines) == 4
    assert lines[1].startswith("32,1.0,0.1,")


# ----------------------------------------------------------- stein identity

def test_stein_identity_panel(fbm64_small):
    batches = (
        fbm64_small,
        sample_goe_trace(GoeTraceModel(8), 100_000, seed=21),
        sample_homogeneous(complete_graph_sum(16), 100_000, seed=22),
    )
    for batch in batches:
        for h in BOUNDED_PANEL:
            check = stein_discrepancy_check(batch, h)
            assert check.gap <= 5.0 * check.combined_se, (batch.model, h)


def test_stein_constant_function_is_exact(fbm64_small):
    # Algebraically both sides vanish; numerically the Gaussian mean of a
    # constant carries one rounding of the weight sum.
    check = stein_discrepancy_check(fbm64_small, lambda x: 0.5)
    assert abs(check.lhs.value) <= 1e-15
    assert abs(check.rhs.value) <= 1e-15


def test_stein_gaussian_batch_exact_rhs():
    q = HomogeneousSum.from_coeffs(1, 1, {(1,): 1.0})
    batch = sample_homogeneous(q, 50_000, seed=23)
    check = stein_discrepancy_check(batch, np.cos)
    assert check.rhs.value == 0.0  # Gamma = p = 1 identically
    assert abs(check.lhs.value) <= 5.0 * check.lhs.std_error


def test_stein_requires_gamma():
    batch = sample_homogeneous(complete_graph_sum(4, law="rademacher"),
                               5000, seed=24)
    with pytest.raises(DomainError, match="carre-du-champ"):
        stein_discrepancy_check(batch, np.cos)


# ------------------------------------------- superconvergence and the band

def test_superconvergence_of_derivatives(fbm_family_1m, fbm_1024_1m):
    batches = [fbm_family_1m[64], fbm_family_1m[256], fbm_1024_1m]
    xs = np.linspace(-5.0, 5.0, 1001)
    err_d1 = []
    err_d2 = []
    for batch in batches:
        meas = build_measure(batch, 1)
        err_d1.append(float(np.max(np.abs(
            kde(batch, xs, "auto", 1) - density(meas, xs, 1)))))
        err_d2.append(float(np.max(np.abs(
            kde(batch, xs, "auto", 2) - density(meas, xs, 2)))))
    for errs in (err_d1, err_d2):
        inversions = sum(1 for a, b in zip(errs, errs[1:]) if b >= a)
        assert inversions <= 1, errs


def test_lower_bound_proportionality_band(fbm_family_1m, fbm_1024_1m):
    ratios = []
    for n in (32, 64, 128, 256, 1024):
        batch = fbm_1024_1m if n == 1024 else fbm_family_1m[n]
        meas = build_measure(batch, 1)
        tv = tv_signed(batch, meas, (-8.0, 8.0), 2001, bandwidth=0.25).value
        ratios.append(tv / (8.0 / n))
    assert all(0.01 <= r <= 100.0 for r in ratios), ratios
