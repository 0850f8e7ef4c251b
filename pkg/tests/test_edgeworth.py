import math

import numpy as np
import pytest

from chaos_edgeworth.edgeworth import (
    EdgeworthMeasure,
    MomentVector,
    ScalarEstimate,
    build_measure,
    density,
    estimate_moments,
    inequality_report,
    kurtosis_estimate,
    measure_expectation,
    moments_to_csv,
    synthetic_measure,
    var_gamma,
)
from chaos_edgeworth.errors import DomainError, NonFiniteError, QualityError
from chaos_edgeworth.hermite import gauss_hermite_rule, hermite_eval_all
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


@pytest.fixture(scope="module")
def fbm64():
    return sample_fbm_hermite(FbmHermiteModel(0.5, 2, 64), 200_000, seed=101)


@pytest.fixture(scope="module")
def normal_batch():
    q = HomogeneousSum.from_coeffs(1, 1, {(1,): 1.0})
    return sample_homogeneous(q, 100_000, seed=102)


# -------------------------------------------------------- moment estimation

def test_moments_of_exact_normals_vanish(normal_batch):
    with pytest.warns(RuntimeWarning, match="indistinguishable"):
        moments = estimate_moments(normal_batch, 7)
    for k, value, se in moments.items():
        assert abs(value) <= 5.0 * se, k
    assert moments.n_samples == normal_batch.n_samples
    assert moments.p == 1


def test_fbm_closed_form_moments(fbm64):
    moments = estimate_moments(fbm64, 4)
    kappa3 = (8.0 / 2.0 ** 1.5) / math.sqrt(64.0)
    assert abs(moments.value(3) - kappa3) <= 5.0 * moments.std_error(3)
    assert abs(moments.value(4) - 12.0 / 64.0) <= 5.0 * moments.std_error(4)


def test_kurtosis_route_consistency(fbm64):
    # mean H_4(F) must equal (mean F^4) - 6 (mean F^2) + 3 up to summation
    # round-off (the two are the same algebraic quantity).
    moments = estimate_moments(fbm64, 4)
    f = fbm64.f_samples
    direct = float(np.mean(f**4)) - 6.0 * float(np.mean(f**2)) + 3.0
    assert abs(moments.value(4) - direct) <= 1e-12
    assert abs(kurtosis_estimate(fbm64).value - direct) <= 1e-12


def test_estimate_moments_rejects(fbm64):
    with pytest.raises(DomainError, match="k_max"):
        estimate_moments(fbm64, 2)
    small = SampleBatch(model="m", p=2, seed=0,
                        f_samples=np.linspace(-1, 1, 500), gamma_samples=None)
    with pytest.raises(DomainError, match="too few"):
        estimate_moments(small, 4)


def test_estimate_moments_deterministic(fbm64):
    a = estimate_moments(fbm64, 5)
    b = estimate_moments(fbm64, 5)
    np.testing.assert_array_equal(a.values, b.values)
    np.testing.assert_array_equal(a.std_errors, b.std_errors)


def test_moment_vector_validation():
    with pytest.raises(DomainError):
        MomentVector(p=2, k_max=4, values=np.zeros(3),
                     std_errors=np.ones(3), n_samples=10)  # wrong length
    with pytest.raises(DomainError):
        MomentVector(p=2, k_max=4, values=np.zeros(2),
                     std_errors=np.array([1.0, 0.0]), n_samples=10)
    vec = MomentVector(p=2, k_max=4, values=np.array([0.1, 0.2]),
                       std_errors=np.array([0.01, 0.02]), n_samples=10)
    assert vec.value(4) == 0.2
    with pytest.raises(DomainError):
        vec.value(5)
    with pytest.raises(DomainError):
        vec.value(2)


# --------------------------------------------------------------- var_gamma

def test_var_gamma_closed_forms(fbm64):
    est = var_gamma(fbm64)
    assert abs(est.value - 8.0 / 64.0) <= 5.0 * est.std_error
    one = sample_fbm_hermite(FbmHermiteModel(0.5, 2, 1), 100_000, seed=103)
    est1 = var_gamma(one)
    assert abs(est1.value - 8.0) <= 5.0 * est1.std_error


def test_var_gamma_degenerate_and_missing():
    q = HomogeneousSum.from_coeffs(1, 1, {(1,): 1.0})
    batch = sample_homogeneous(q, 5000, seed=104)
    est = var_gamma(batch)
    assert est.value == 0.0 and est.std_error == 0.0
    rad = sample_homogeneous(complete_graph_sum(4, law="rademacher"),
                             5000, seed=105)
    with pytest.raises(DomainError, match="unavailable"):
        var_gamma(rad)


def test_var_gamma_jackknife_matches_brute_force():
    rng = np.random.Generator(np.random.Philox(key=7))
    g = rng.standard_normal(200) ** 2
    batch = SampleBatch(model="synthetic", p=2, seed=7,
                        f_samples=rng.standard_normal(200), gamma_samples=g)
    est = var_gamma(batch)
    n = g.size
    loo = np.array([np.var(np.delete(g, i), ddof=1) for i in range(n)])
    brute = math.sqrt((n - 1.0) / n * float(np.sum((loo - loo.mean()) ** 2)))
    assert abs(est.value - float(np.var(g, ddof=1))) <= 1e-12
    assert abs(est.std_error - brute) <= 1e-10 * max(1.0, brute)


# ------------------------------------------------------------ measure build

def test_build_measure_passes_gate(fbm64):
    meas = build_measure(fbm64, 1)
    assert meas.m == 1 and meas.k_max == 3 and meas.p == 2
    assert abs(meas.moments.value(3) - (8.0 / 2.0 ** 1.5) / 8.0) \
        <= 5.0 * meas.moments.std_error(3)


def test_build_measure_refuses_noise():
    batch = sample_fbm_hermite(FbmHermiteModel(0.5, 2, 64), 2000, seed=106)
    with pytest.warns(RuntimeWarning):
        with pytest.raises(QualityError, match="noise-dominated"):
            build_measure(batch, 2)


def test_build_measure_gate_is_configurable():
    batch = sample_fbm_hermite(FbmHermiteModel(0.5, 2, 64), 2000, seed=106)
    with pytest.warns(RuntimeWarning):
        meas = build_measure(batch, 2, max_relative_se=math.inf)
    assert meas.k_max == 7


def test_build_measure_validation(fbm64):
    with pytest.raises(DomainError):
        build_measure(fbm64, 0)
    with pytest.raises(DomainError):
        build_measure(fbm64, 1, max_relative_se=0.0)


def test_measure_type_validation():
    vec = MomentVector(p=2, k_max=7, values=np.zeros(5),
                       std_errors=np.ones(5), n_samples=10)
    with pytest.raises(DomainError):
        EdgeworthMeasure(m=1, p=2, moments=vec)  # k_max mismatch
    with pytest.raises(DomainError):
        EdgeworthMeasure(m=2, p=3, moments=vec)  # p mismatch
    EdgeworthMeasure(m=2, p=2, moments=vec)


# ------------------------------------------------------------------ density

def test_density_frozen_values():
    pure = synthetic_measure(1)
    assert abs(density(pure, 0.0, 0) - PHI0) <= 1e-12
    assert density(pure, 0.0, 1) == 0.0
    assert abs(density(pure, 0.0, 2) - (-PHI0)) <= 1e-12
    skew = synthetic_measure(1, moments={3: 0.2})
    assert abs(density(skew, 0.0, 0) - PHI0) <= 1e-12  # H_3(0) = 0


def test_density_vectorized_and_scalar():
    meas = synthetic_measure(2, moments={3: 0.1, 4: 0.05})
    xs = np.linspace(-3, 3, 11)
    arr = density(meas, xs, 0)
    assert arr.shape == xs.shape
    assert isinstance(density(meas, 1.0, 0), float)
    np.testing.assert_allclose(arr[5], density(meas, 0.0, 0), rtol=1e-14)


def test_density_derivatives_match_finite_differences():
    meas = synthetic_measure(2, moments={3: 0.2, 4: 0.1, 5: 0.03, 7: 0.01})
    xs = np.linspace(-5.0, 5.0, 41)
    h = 1e-4
    d1 = (density(meas, xs + h, 0) - density(meas, xs - h, 0)) / (2 * h)
    d2 = (density(meas, xs + h, 0) - 2 * density(meas, xs, 0)
          + density(meas, xs - h, 0)) / h**2
    np.testing.assert_allclose(density(meas, xs, 1), d1, atol=1e-6)
    np.testing.assert_allclose(density(meas, xs, 2), d2, atol=1e-6)


def test_density_signed_not_clipped():
    meas = synthetic_measure(1, moments={3: 3.0})
    xs = np.linspace(-6, 6, 2001)
    assert float(np.min(density(meas, xs, 0))) < -1e-4


def test_density_rejects_bad_derivative():
    meas = synthetic_measure(1)
    with pytest.raises(DomainError):
        density(meas, 0.0, 3)
    with pytest.raises(DomainError):
        density(meas, 0.0, -1)


# ------------------------------------------------------------- expectations

def test_measure_expectation_reproduces_moments():
    meas = synthetic_measure(2, moments={3: 0.2, 4: 0.1, 6: -0.04, 7: 0.01})
    assert abs(measure_expectation(meas, lambda x: np.ones_like(x)) - 1.0) \
        <= 1e-10
    for k in range(3, 8):
        got = measure_expectation(meas, lambda x, k=k: hermite_eval_all(k, x)[k])
        assert abs(got - meas.moments.value(k)) <= 1e-8, k
    h2 = measure_expectation(meas, lambda x: hermite_eval_all(2, x)[2])
    assert abs(h2) <= 1e-10
    h1 = measure_expectation(meas, lambda x: x)
    assert abs(h1) <= 1e-10
    h9 = measure_expectation(meas, lambda x: hermite_eval_all(9, x)[9])
    assert abs(h9) <= 1e-7


def test_measure_expectation_on_estimated_measure(fbm64):
    meas = build_measure(fbm64, 1)
    assert abs(measure_expectation(meas, lambda x: np.ones_like(x)) - 1.0) \
        <= 1e-10
    got = measure_expectation(meas, lambda x: hermite_eval_all(3, x)[3])
    assert abs(got - meas.moments.value(3)) <= 1e-10


def test_measure_expectation_guards():
    meas = synthetic_measure(1)
    with pytest.raises(DomainError, match="order"):
        measure_expectation(meas, lambda x: x, rule=gauss_hermite_rule(32))
    with pytest.raises(NonFiniteError):
        measure_expectation(meas, lambda x: np.where(x > 0, np.inf, 0.0))


# -------------------------------------------------------------- inequalities

def test_inequality_report_fbm_tight_case(fbm64):
    report = inequality_report(fbm64)
    assert report.all_hold
    second = report.checks[1]
    # Tight case: Var(Gamma/p) and ((p-1)/3p) kappa_4 are both 2/n exactly.
    assert abs(second.lhs - second.rhs) <= second.slack
    assert abs(second.lhs - 2.0 / 64.0) <= 5.0 * report.var_gamma.std_error
    # The unnormalized comparison genuinely fails here (8/n vs 4/n): the
    # report records the positive gap without asserting it.
    assert report.unnormalized_gap > 0.0


def test_inequality_report_other_models():
    goe = sample_goe_trace(GoeTraceModel(8), 100_000, seed=107)
    assert inequality_report(goe).all_hold
    hsum = sample_homogeneous(complete_graph_sum(16), 100_000, seed=108)
    assert inequality_report(hsum).all_hold


def test_scalar_estimate_validation():
    with pytest.raises(DomainError):
        ScalarEstimate(1.0, -0.1)
    with pytest.raises(NonFiniteError):
        ScalarEstimate(math.nan, 0.1)


# ------------------------------------------------------------ serialization

def test_moments_to_csv(tmp_path, fbm64):
    moments = estimate_moments(fbm64, 4)
    path = tmp_path / "moments.csv"
    moments_to_csv(moments, path)
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "k,value,std_error"
    assert len(lines) == 3
    k, value, se = lines[1].split(",")
    assert int(k) == 3
    assert float(value) == moments.value(3)
    assert float(se) == moments.std_error(3)
