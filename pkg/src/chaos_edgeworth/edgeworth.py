"""Hermite-moment estimation and the signed Gaussian correcting measure.

The measure of order ``m`` has density ``phi(x) (1 + sum_{k=3}^{4m-1}
m_k / k! H_k(x))`` against Lebesgue measure, where ``m_k = E[H_k(F)]`` and
``phi`` is the standard Gaussian density.  The ``k = 2`` term is absent by
construction: ``E[H_2(F)] = E[F^2] - 1 = 0`` for normalized ``F``.

Estimation is plain Monte Carlo over a :class:`~.simulate.SampleBatch`
with propagated standard errors; the builder refuses noise-dominated
moments instead of silently producing garbage corrections.  Density
derivatives use ``d/dx [phi H_k] = -phi H_{k+1}`` (the Rodrigues form),
never numeric differentiation.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NonFiniteError, QualityError
from .hermite import (
    HermiteSeries,
    QuadratureRule,
    gauss_hermite_rule,
    hermite_eval_all,
    hermite_norm_sq,
)
from .simulate import SampleBatch

__all__ = [
    "MomentVector",
    "ScalarEstimate",
    "EdgeworthMeasure",
    "InequalityCheck",
    "InequalityReport",
    "estimate_moments",
    "var_gamma",
    "kurtosis_estimate",
    "build_measure",
    "synthetic_measure",
    "density",
    "measure_expectation",
    "inequality_report",
    "moments_to_csv",
]

_MIN_SAMPLES = 1000
# Accumulation chunk for moment sums (fixed so the reduction tree, and
# hence the output bytes, never depend on memory pressure or threads).
_EST_CHUNK = 1 << 16

_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class ScalarEstimate:
    """A scalar Monte Carlo estimate with its standard error."""

    value: float
    std_error: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.value) or not math.isfinite(self.std_error):
            raise NonFiniteError("estimate and standard error must be finite")
        if self.std_error < 0:
            raise DomainError("standard error cannot be negative")


@dataclass(frozen=True)
class MomentVector:
    """Estimated Hermite moments ``E[H_k(F)]`` for ``k = 3 .. k_max``.

    Attributes
    ----------
    p : int
        Chaos index of the sampled element.
    k_max : int
        Largest Hermite index carried (``4m - 1`` for an order-``m``
        measure).
    values : numpy.ndarray
        ``values[i]`` estimates ``E[H_{3+i}(F)]``.
    std_errors : numpy.ndarray
        Monte Carlo standard errors, entrywise positive.
    n_samples : int
        Number of draws behind the estimates.
    """

    p: int
    k_max: int
    values: np.ndarray
    std_errors: np.ndarray
    n_samples: int

    def __post_init__(self) -> None:
        if not isinstance(self.p, (int, np.integer)) or self.p < 1:
            raise DomainError("chaos index p must be a positive integer")
        if not isinstance(self.k_max, (int, np.integer)) or self.k_max < 3:
            raise DomainError("k_max must be an integer >= 3")
        vals = np.asarray(self.values, dtype=float)
        errs = np.asarray(self.std_errors, dtype=float)
        expect = self.k_max - 2
        if vals.shape != (expect,) or errs.shape != (expect,):
            raise DomainError("moment arrays must cover k = 3 .. %d "
                              "(%d entries)" % (self.k_max, expect))
        if not np.all(np.isfinite(vals)) or not np.all(np.isfinite(errs)):
            raise NonFiniteError("moments and standard errors must be finite")
        if np.any(errs <= 0.0):
            raise DomainError("standard errors must be positive; a zero "
                              "error means the batch is degenerate for "
                              "some H_k")
        if not isinstance(self.n_samples, (int, np.integer)) or self.n_samples < 1:
            raise DomainError("n_samples must be a positive integer")
        vals.setflags(write=False)
        errs.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "std_errors", errs)

    def _index(self, k: int) -> int:
        if not (3 <= k <= self.k_max):
            raise DomainError("moment index k must lie in 3..%d, got %r"
                              % (self.k_max, k))
        return int(k) - 3

    def value(self, k: int) -> float:
        """Estimated ``E[H_k(F)]``."""
        return float(self.values[self._index(k)])

    def std_error(self, k: int) -> float:
        """Standard error of :meth:`value`."""
        return float(self.std_errors[self._index(k)])

    def items(self):
        """Iterate ``(k, value, std_error)`` for ``k = 3 .. k_max``."""
        for i in range(self.values.size):
            yield 3 + i, float(self.values[i]), float(self.std_errors[i])


def estimate_moments(batch: SampleBatch, k_max: int) -> MomentVector:
    """Sample means of ``H_k(F)`` for ``k = 3 .. k_max`` with standard errors.

    Sums accumulate over fixed-size sample chunks and reduce pairwise, so
    the result is bit-identical for a given batch regardless of memory
    layout.  Warns when any estimate is statistically indistinguishable
    from zero (standard error exceeding the estimate's magnitude).

    Raises
    ------
    DomainError
        If ``k_max < 3`` or the batch holds fewer than 1000 samples.
    """
    if not isinstance(k_max, (int, np.integer)) or k_max < 3:
        raise DomainError("k_max must be an integer >= 3, got %r" % (k_max,))
    f = batch.f_samples
    n = f.size
    if n < _MIN_SAMPLES:
        raise DomainError("too few samples to estimate Hermite moments: "
                          "%d < %d" % (n, _MIN_SAMPLES))
    n_orders = int(k_max) - 2
    partial_s1 = []
    partial_s2 = []
    for start in range(0, n, _EST_CHUNK):
        herm = hermite_eval_all(int(k_max), f[start:start + _EST_CHUNK])
        block = herm[3:]
        partial_s1.append(block.sum(axis=1))
        partial_s2.append((block * block).sum(axis=1))
    s1 = np.sum(np.stack(partial_s1), axis=0)
    s2 = np.sum(np.stack(partial_s2), axis=0)
    means = s1 / n
    variances = np.maximum(s2 / n - means * means, 0.0) * (n / (n - 1.0))
    std_errors = np.sqrt(variances / n)
    if np.any(std_errors <= 0.0):
        bad = [3 + i for i in range(n_orders) if std_errors[i] <= 0.0]
        raise DomainError("batch is degenerate: H_k(F) is constant across "
                          "samples for k in %s" % (bad,))
    weak = [3 + i for i in range(n_orders)
            if std_errors[i] > abs(means[i])]
    if weak:
        warnings.warn("Hermite moment estimates for k in %s are "
                      "statistically indistinguishable from zero (standard "
                      "error exceeds the estimate)" % (weak,),
                      RuntimeWarning, stacklevel=2)
    return MomentVector(p=batch.p, k_max=int(k_max), values=means,
                        std_errors=std_errors, n_samples=n)


def var_gamma(batch: SampleBatch) -> ScalarEstimate:
    """Unbiased sample variance of the carre-du-champ draws.

    The standard error is the delete-one jackknife of the variance
    statistic, computed in closed form: with centered draws ``d_i``,
    leaving out draw ``i`` shifts the sum of squared deviations by
    ``n d_i^2 / (n-1)``, which collapses the jackknife spread to a
    fourth-moment expression evaluated in one vectorized pass.

    Raises
    ------
    DomainError
        If the batch carries no carre-du-champ (non-Gaussian law).
    """
    if batch.gamma_samples is None:
        raise DomainError("carre-du-champ samples are unavailable for this "
                          "batch's law; variance of Gamma is undefined")
    g = batch.gamma_samples
    n = g.size
    if n < 2:
        raise DomainError("need at least two samples for a variance")
    d = g - g.mean()
    s2_sum = float(d @ d)
    variance = s2_sum / (n - 1.0)
    # Jackknife: theta_(i) = [S2 - n d_i^2/(n-1)]/(n-2) is affine in d_i^2.
    d2 = d * d
    spread = float(d2 @ d2) - s2_sum * s2_sum / n
    b = n / ((n - 1.0) * (n - 2.0))
    se = math.sqrt(max(0.0, (n - 1.0) / n * b * b * spread))
    return ScalarEstimate(value=variance, std_error=se)


def kurtosis_estimate(batch: SampleBatch) -> ScalarEstimate:
    """Monte Carlo ``E[H_4(F)]`` (the fourth cumulant for normalized F)."""
    f = batch.f_samples
    h4 = hermite_eval_all(4, f)[4]
    n = f.size
    if n < 2:
        raise DomainError("need at least two samples for a standard error")
    mean = float(h4.mean())
    se = float(h4.std(ddof=1)) / math.sqrt(n)
    return ScalarEstimate(value=mean, std_error=se)


@dataclass(frozen=True)
class EdgeworthMeasure:
    """Signed correcting measure of order ``m`` built from Hermite moments.

    Carries exactly the moments ``k = 3 .. 4m - 1``.  The density may go
    negative — the measure is signed and the evaluator never clips.
    """

    m: int
    p: int
    moments: MomentVector

    def __post_init__(self) -> None:
        if not isinstance(self.m, (int, np.integer)) or self.m < 1:
            raise DomainError("expansion order m must be an integer >= 1")
        if self.moments.k_max != 4 * self.m - 1:
            raise DomainError(
                "order-%d measure requires moments up to k = %d, got k_max "
                "= %d" % (self.m, 4 * self.m - 1, self.moments.k_max))
        if self.p != self.moments.p:
            raise DomainError("chaos index mismatch between measure and "
                              "moment vector")

    @property
    def k_max(self) -> int:
        return self.moments.k_max

    def polynomial_factor(self) -> HermiteSeries:
        """``g(x) = 1 + sum_k m_k/k! H_k(x)`` as a Hermite series."""
        coeffs = np.zeros(self.k_max + 1)
        coeffs[0] = 1.0
        for k, value, _ in self.moments.items():
            coeffs[k] = value / hermite_norm_sq(k)
        return HermiteSeries(coeffs)


def build_measure(batch: SampleBatch, m: int,
                  max_relative_se: float = 0.5,
                  absolute_floor: float = 0.01) -> EdgeworthMeasure:
    """Estimate moments from a batch and assemble the order-``m`` measure.

    Quality gate: the build is refused when any required moment estimate
    is noise-dominated — standard error exceeding both ``max_relative_se
    * |value|`` and ``absolute_floor * sqrt(k!)`` (the latter is the scale
    at which the k-th correction term becomes visible in the density, so
    moments below it are harmless however noisy their sign).

    Raises
    ------
    QualityError
        When the gate trips; the message names the worst offender.
    """
    if not isinstance(m, (int, np.integer)) or m < 1:
        raise DomainError("expansion order m must be an integer >= 1")
    if not (max_relative_se > 0.0) or not (absolute_floor >= 0.0):
        raise DomainError("gate thresholds must be positive")
    moments = estimate_moments(batch, 4 * int(m) - 1)
    for k, value, se in moments.items():
        allowed = max(max_relative_se * abs(value),
                      absolute_floor * math.sqrt(hermite_norm_sq(k)))
        if se > allowed:
            raise QualityError(
                "moment E[H_%d(F)] is noise-dominated: standard error "
                "%.3g exceeds the gate %.3g (|estimate| %.3g); increase "
                "n_samples or lower the order m" % (k, se, allowed,
                                                    abs(value)))
    return EdgeworthMeasure(m=int(m), p=batch.p, moments=moments)


def synthetic_measure(m: int, p: int = 2, moments: dict | None = None,
                      std_error: float = 1.0) -> EdgeworthMeasure:
    """Measure with caller-chosen moments (all zero by default).

    Intended for evaluator tests and reference curves; ``std_error``
    fills every entry (the evaluators never read it) and ``n_samples``
    is set to 1 to mark the vector as non-estimated.
    """
    k_max = 4 * int(m) - 1
    values = np.zeros(k_max - 2)
    for k, v in (moments or {}).items():
        if not (3 <= int(k) <= k_max):
            raise DomainError("moment index %r outside 3..%d" % (k, k_max))
        values[int(k) - 3] = float(v)
    vec = MomentVector(p=p, k_max=k_max, values=values,
                       std_errors=np.full(k_max - 2, float(std_error)),
                       n_samples=1)
    return EdgeworthMeasure(m=int(m), p=p, moments=vec)


def density(meas: EdgeworthMeasure, x, derivative: int = 0):
    """Density of the signed measure, or its first or second derivative.

    ``derivative=j`` evaluates ``(-1)^j phi(x) (H_j(x) + sum_k m_k/k!
    H_{k+j}(x))`` using the closed identity ``(phi H_k)' = -phi H_{k+1}``
    — no numeric differentiation.  Accepts scalars or arrays.
    """
    if derivative not in (0, 1, 2):
        raise DomainError("derivative must be 0, 1, or 2, got %r"
                          % (derivative,))
    xs = np.asarray(x, dtype=float)
    scalar = xs.ndim == 0
    xs = np.atleast_1d(xs)
    j = int(derivative)
    herm = hermite_eval_all(meas.k_max + j, xs)
    poly = herm[j].copy()
    for k, value, _ in meas.moments.items():
        poly += (value / hermite_norm_sq(k)) * herm[k + j]
    phi = np.exp(-0.5 * xs * xs) / _SQRT_2PI
    out = (-1.0) ** j * phi * poly
    return float(out[0]) if scalar else out


def measure_expectation(meas: EdgeworthMeasure, h,
                        rule: QuadratureRule | None = None) -> float:
    """``integral of h`` against the signed measure, by Gauss-Hermite quadrature.

    Writes the integral as ``E[h(N) g(N)]`` for the polynomial factor
    ``g``, so any rule of order >= 64 integrates the polynomial part
    exactly.

    Raises
    ------
    DomainError
        If the rule order is below 64.
    NonFiniteError
        If ``h`` is non-finite at a quadrature node.
    """
    if rule is None:
        rule = _default_rule()
    if rule.order < 64:
        raise DomainError("measure_expectation needs a quadrature rule of "
                          "order >= 64, got %d" % rule.order)
    factor = meas.polynomial_factor()
    return rule.expectation(
        lambda t: np.asarray(h(t), dtype=float) * factor.evaluate(t))


_RULE_CACHE: dict = {}


def _default_rule() -> QuadratureRule:
    if "rule" not in _RULE_CACHE:
        _RULE_CACHE["rule"] = gauss_hermite_rule(128)
    return _RULE_CACHE["rule"]


@dataclass(frozen=True)
class InequalityCheck:
    """One asserted inequality ``lhs <= rhs`` with Monte Carlo slack."""

    name: str
    lhs: float
    rhs: float
    slack: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs + self.slack

    @property
    def margin(self) -> float:
        """``rhs + slack - lhs``; negative means the check fails."""
        return self.rhs + self.slack - self.lhs


@dataclass(frozen=True)
class InequalityReport:
    """Spectral-gap inequalities linking Var Gamma to the fourth cumulant.

    ``checks`` holds the two asserted forms — ``(3/p^2) Var Gamma <=
    kappa_4`` and ``Var(Gamma/p) <= ((p-1)/(3p)) kappa_4`` — each with
    slack five times the combined standard error.  The unnormalized
    comparison ``Var Gamma  vs  kappa_4 / 3`` is reported as a gap only
    (positive gap = violated): it rescales the first form by p^2/3 and
    genuinely fails for p >= 2, so it is not asserted.
    """

    p: int
    var_gamma: ScalarEstimate
    kappa4: ScalarEstimate
    checks: tuple
    unnormalized_gap: float

    @property
    def all_hold(self) -> bool:
        return all(c.holds for c in self.checks)


def inequality_report(batch: SampleBatch) -> InequalityReport:
    """Evaluate the carre-du-champ/kurtosis inequalities on one batch."""
    vg = var_gamma(batch)
    k4 = kurtosis_estimate(batch)
    p = float(batch.p)
    first = InequalityCheck(
        name="(3/p^2) Var(Gamma) <= kappa_4",
        lhs=3.0 / p**2 * vg.value,
        rhs=k4.value,
        slack=5.0 * math.hypot(3.0 / p**2 * vg.std_error, k4.std_error))
    second = InequalityCheck(
        name="Var(Gamma/p) <= ((p-1)/(3p)) kappa_4",
        lhs=vg.value / p**2,
        rhs=(p - 1.0) / (3.0 * p) * k4.value,
        slack=5.0 * math.hypot(vg.std_error / p**2,
                               (p - 1.0) / (3.0 * p) * k4.std_error))
    return InequalityReport(
        p=batch.p, var_gamma=vg, kappa4=k4, checks=(first, second),
        unnormalized_gap=vg.value - k4.value / 3.0)


def moments_to_csv(moments: MomentVector, path) -> None:
    """Write ``k,value,std_error`` rows (repr-exact floats)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("k,value,std_error\n")
        for k, value, se in moments.items():
            fh.write("%d,%s,%s\n" % (k, repr(value), repr(se)))
