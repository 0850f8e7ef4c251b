"""Hermite spectral calculus for the standard Gaussian measure.

Conventions
-----------
``H_k`` is the probabilists' Hermite polynomial::

    H_0 = 1,  H_1 = x,  H_{k+1}(x) = x H_k(x) - k H_{k-1}(x),

orthogonal for the standard Gaussian measure gamma with ``E[H_j H_k] =
delta_{jk} k!``.  A :class:`HermiteSeries` stores coefficients ``c_k`` of a
truncated expansion ``sum_k c_k H_k`` and is the carrier type for every
spectral operator in :mod:`chaos_edgeworth.ou`.

Expectations against gamma are computed with Gauss--Hermite rules
(:func:`gauss_hermite_rule`), normalized so the weights sum to one.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.hermite_e import hermegauss

from .errors import DomainError, NonFiniteError

#: Default threshold below which a coefficient counts as zero for rank purposes.
RANK_TOL = 1e-10

#: Largest k for which k! is representable in float64 (171! overflows).
MAX_FACTORIAL = 170

#: Largest quadrature order with stable weight generation (the eigenvalue
#: based generator overflows near order 400).
MAX_QUAD_ORDER = 300

_FACTORIALS = np.array([math.factorial(k) for k in range(MAX_FACTORIAL + 1)],
                       dtype=np.float64)


def hermite_norm_sq(k: int) -> float:
    """Return ``E[H_k(N)^2] = k!`` as a float.

    Parameters
    ----------
    k : int
        Polynomial degree, ``0 <= k <= 170``.
    """
    if not 0 <= k <= MAX_FACTORIAL:
        raise DomainError(
            f"hermite_norm_sq: degree {k} outside [0, {MAX_FACTORIAL}] "
            "(k! overflows float64 beyond that)")
    return float(_FACTORIALS[k])


def hermite_eval_all(n: int, x) -> np.ndarray:
    """Evaluate ``H_0, ..., H_n`` at ``x`` by the three-term recurrence.

    Parameters
    ----------
    n : int
        Highest degree, ``n >= 0``.
    x : float or ndarray
        Evaluation point(s).

    Returns
    -------
    ndarray
        Shape ``(n+1,) + shape(x)``; row ``k`` holds ``H_k(x)``.  The values
        satisfy ``H_{k+1} = x H_k - k H_{k-1}`` exactly in evaluation order.
    """
    if n < 0:
        raise DomainError(f"hermite_eval_all: degree {n} must be >= 0")
    xa = np.asarray(x, dtype=np.float64)
    out = np.empty((n + 1,) + xa.shape, dtype=np.float64)
    out[0] = 1.0
    if n >= 1:
        out[1] = xa
    for k in range(1, n):
        out[k + 1] = xa * out[k] - k * out[k - 1]
    return out


@dataclass(frozen=True)
class HermiteSeries:
    """Truncated Hermite expansion ``sum_{k=0}^{N} c_k H_k``.

    Attributes
    ----------
    coeffs : ndarray
        Coefficients ``c_0, ..., c_N``; ``truncation = N = len(coeffs) - 1``.
    declared_rank : int or None
        Caller-asserted Hermite rank, used by integral-route operators that
        cannot inspect coefficients.
    """

    coeffs: np.ndarray
    declared_rank: int | None = None

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.float64)
        if c.ndim != 1 or c.size == 0:
            raise DomainError("HermiteSeries needs a 1-d, non-empty coefficient vector")
        if not np.all(np.isfinite(c)):
            raise NonFiniteError("HermiteSeries coefficients must be finite")
        if self.declared_rank is not None and self.declared_rank < 0:
            raise DomainError("declared_rank must be >= 0")
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def truncation(self) -> int:
        return len(self.coeffs) - 1

    def coefficient(self, k: int) -> float:
        """``c_k``, zero beyond the truncation."""
        return float(self.coeffs[k]) if 0 <= k <= self.truncation else 0.0

    def evaluate(self, x):
        """Pointwise value of the series at ``x`` (scalar or array)."""
        H = hermite_eval_all(self.truncation, x)
        return np.tensordot(self.coeffs, H, axes=(0, 0))

    def __add__(self, other: "HermiteSeries") -> "HermiteSeries":
        n = max(self.truncation, other.truncation)
        c = np.zeros(n + 1)
        c[: len(self.coeffs)] += self.coeffs
        c[: len(other.coeffs)] += other.coeffs
        return HermiteSeries(c)

    def __sub__(self, other: "HermiteSeries") -> "HermiteSeries":
        return self + (-1.0) * other

    def __mul__(self, scalar: float) -> "HermiteSeries":
        return HermiteSeries(self.coeffs * float(scalar))

    __rmul__ = __mul__


def hermite_rank(series: HermiteSeries, tol: float = RANK_TOL):
    """Smallest ``k`` with ``|c_k| > tol``; ``math.inf`` for the zero series."""
    idx = np.nonzero(np.abs(series.coeffs) > tol)[0]
    return int(idx[0]) if idx.size else math.inf


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss--Hermite nodes/weights for the standard Gaussian measure.

    ``sum_i w_i f(x_i)`` approximates ``E[f(N)]`` and is exact for
    polynomials of degree ``<= 2*order - 1``.
    """

    nodes: np.ndarray
    weights: np.ndarray
    order: int

    def __post_init__(self):
        n = np.asarray(self.nodes, dtype=np.float64)
        w = np.asarray(self.weights, dtype=np.float64)
        if n.shape != (self.order,) or w.shape != (self.order,):
            raise DomainError("QuadratureRule: nodes/weights must have shape (order,)")
        if not (np.all(np.isfinite(n)) and np.all(np.isfinite(w))):
            raise NonFiniteError("QuadratureRule: non-finite nodes or weights")
        if np.any(w <= 0):
            raise DomainError("QuadratureRule: weights must be positive")
        if abs(w.sum() - 1.0) > 1e-12:
            raise DomainError(
                f"QuadratureRule: weights sum to {w.sum()!r}, expected 1 within 1e-12")
        n = n.copy(); n.setflags(write=False)
        w = w.copy(); w.setflags(write=False)
        object.__setattr__(self, "nodes", n)
        object.__setattr__(self, "weights", w)

    def expectation(self, f) -> float:
        """``E[f(N)]`` for a callable or an array of node values."""
        vals = np.asarray(f(self.nodes) if callable(f) else f, dtype=np.float64)
        if vals.shape != self.nodes.shape:
            raise DomainError("expectation: node-value array has wrong shape")
        if not np.all(np.isfinite(vals)):
            bad = int(np.nonzero(~np.isfinite(vals))[0][0])
            raise NonFiniteError(
                f"expectation: non-finite integrand value at node x={self.nodes[bad]!r}")
        return float(vals @ self.weights)


def gauss_hermite_rule(order: int = 128) -> QuadratureRule:
    """Build a Gauss--Hermite rule of the given order for gamma.

    Parameters
    ----------
    order : int
        Number of nodes, ``1 <= order <= 300``.  The default 128 integrates
        polynomials up to degree 255 exactly.
    """
    if not 1 <= order <= MAX_QUAD_ORDER:
        raise DomainError(
            f"gauss_hermite_rule: order {order} outside [1, {MAX_QUAD_ORDER}]")
    nodes, weights = hermegauss(order)
    weights = weights / weights.sum()
    return QuadratureRule(nodes=nodes, weights=weights, order=order)


def coefficients_of(f, n: int, rule: QuadratureRule) -> HermiteSeries:
    """Hermite coefficients ``c_k = E[f(N) H_k(N)]/k!`` for ``k <= n``.

    Exact (up to rounding) whenever ``f`` is a polynomial with
    ``deg f + n <= 2*order - 1``.

    Parameters
    ----------
    f : callable
        Evaluated vectorized on the rule's nodes; must return finite values.
    n : int
        Highest coefficient index, ``0 <= n <= 170``.
    rule : QuadratureRule
    """
    if not 0 <= n <= MAX_FACTORIAL:
        raise DomainError(f"coefficients_of: truncation {n} outside [0, {MAX_FACTORIAL}]")
    vals = np.asarray(f(rule.nodes), dtype=np.float64)
    if vals.shape != rule.nodes.shape:
        raise DomainError("coefficients_of: f must map the node vector to one value per node")
    if not np.all(np.isfinite(vals)):
        bad = int(np.nonzero(~np.isfinite(vals))[0][0])
        raise NonFiniteError(
            f"coefficients_of: f is non-finite at node x={rule.nodes[bad]!r}")
    H = hermite_eval_all(n, rule.nodes)
    raw = H @ (rule.weights * vals)
    return HermiteSeries(raw / _FACTORIALS[: n + 1])


def series_derivative(series: HermiteSeries) -> HermiteSeries:
    """Derivative of the series: ``c'_k = (k+1) c_{k+1}``.

    ``H_k' = k H_{k-1}``, so differentiation shifts coefficients down one
    degree.  A constant (truncation-0) series maps to the zero series.
    """
    n = series.truncation
    if n == 0:
        return HermiteSeries(np.zeros(1))
    k = np.arange(1, n + 1, dtype=np.float64)
    return HermiteSeries(k * series.coeffs[1:])


def project_at_least(series: HermiteSeries, m: int) -> HermiteSeries:
    """Zero out all coefficients of degree below ``m``.

    Parameters
    ----------
    m : int
        ``0 <= m <= truncation + 1``; ``m = 0`` is the identity and
        ``m = truncation + 1`` yields the zero series.
    """
    n = series.truncation
    if not 0 <= m <= n + 1:
        raise DomainError(f"project_at_least: m={m} outside [0, {n + 1}]")
    c = series.coeffs.copy()
    c[:m] = 0.0
    return HermiteSeries(c, declared_rank=series.declared_rank)


def series_to_csv(series: HermiteSeries, path) -> None:
    """Write ``index,coefficient`` rows (full precision)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "coefficient"])
        for k, c in enumerate(series.coeffs):
            w.writerow([k, repr(float(c))])


def series_from_csv(path) -> HermiteSeries:
    """Read a series written by :func:`series_to_csv`."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["index", "coefficient"]:
        raise DomainError(f"{path}: expected header 'index,coefficient'")
    pairs = [(int(k), float(c)) for k, c in rows[1:]]
    n = max(k for k, _ in pairs) if pairs else 0
    coeffs = np.zeros(n + 1)
    for k, c in pairs:
        coeffs[k] = c
    return HermiteSeries(coeffs)
