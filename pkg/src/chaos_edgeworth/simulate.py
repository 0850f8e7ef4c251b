"""Exact samplers for three Gaussian-chaos families.

Every sampler returns paired draws ``(F, Gamma(F))`` where ``Gamma`` is the
carre-du-champ ``|grad F|^2`` evaluated analytically in the underlying
i.i.d. standard Gaussian generators — never by numerical differentiation.

Families:

* :class:`FbmHermiteModel` — normalized Hermite variations of fractional
  Gaussian noise, ``F = (1/sqrt(n Var V_n)) sum_k H_p(X_k)``, with a
  Cholesky baseline sampler and a circulant-embedding FFT sampler.
* :class:`GoeTraceModel` — the third-chaos projection of ``Tr(A_n^3)`` for a
  GOE matrix ``A_n = A/sqrt(n)`` (off-diagonal variance 1, diagonal
  variance 2 before rescaling).
* :class:`HomogeneousSum` — multilinear forms ``sum a(i_1..i_d) x_{i_1}
  ... x_{i_d}`` in i.i.d. Gaussian or Rademacher variables, with influence
  diagnostics and a coupled Lindeberg discrepancy estimator.

Determinism contract: draws are produced in fixed-size sample chunks, each
chunk owning a counter-based generator keyed by ``(seed, chunk index)``.
Chunks may be computed on any number of worker threads (capped by the
``CHAOS_EDGEWORTH_THREADS`` environment variable); the assembled output is
identical for every worker count.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NonFiniteError
from .hermite import hermite_eval_all

__all__ = [
    "CHUNK_SAMPLES",
    "GENERATOR_ID",
    "FbmHermiteModel",
    "GoeTraceModel",
    "HomogeneousSum",
    "SampleBatch",
    "Chaos3Projection",
    "fgn_covariance",
    "variance_vn",
    "sample_fbm_hermite",
    "goe_chaos3_projection_coeffs",
    "sample_goe_trace",
    "goe_raw_trace_samples",
    "influence",
    "total_influence",
    "complete_graph_sum",
    "sample_homogeneous",
    "lindeberg_discrepancy",
    "thread_count",
]

# Samples per RNG chunk.  Fixed: changing it changes every stream.
CHUNK_SAMPLES = 65536
# Rows processed at once inside a chunk (memory ceiling only; the RNG
# stream is consumed sequentially, so block size never affects output).
_BLOCK_ROWS = 8192
_GOE_BLOCK_ROWS = 2048
GENERATOR_ID = "philox4x64;chunk=%d;layout=v1" % CHUNK_SAMPLES

_MASK64 = (1 << 64) - 1


def thread_count() -> int:
    """Worker-thread cap from ``CHAOS_EDGEWORTH_THREADS`` (default: cpu count, max 4)."""
    raw = os.environ.get("CHAOS_EDGEWORTH_THREADS", "")
    try:
        cap = int(raw)
    except ValueError:
        cap = 0
    if cap <= 0:
        cap = min(4, os.cpu_count() or 1)
    return max(1, cap)


def _chunk_generator(seed: int, chunk_index: int) -> np.random.Generator:
    key = ((int(seed) & _MASK64) << 64) | (chunk_index & _MASK64)
    return np.random.Generator(np.random.Philox(key=key))


def _assemble_chunks(worker, n_samples: int, seed: int) -> dict:
    """Run ``worker(rng, count) -> dict[str, ndarray]`` over sample chunks.

    Chunks are keyed by index, may run on any number of threads, and are
    concatenated in index order, so the result is worker-count-invariant.
    """
    spans = []
    start = 0
    while start < n_samples:
        count = min(CHUNK_SAMPLES, n_samples - start)
        spans.append((len(spans), count))
        start += count

    def run(span):
        index, count = span
        return index, worker(_chunk_generator(seed, index), count)

    workers = min(thread_count(), len(spans))
    if workers <= 1:
        pieces = [run(s) for s in spans]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            pieces = list(pool.map(run, spans))
    pieces.sort(key=lambda item: item[0])
    keys = pieces[0][1].keys()
    return {k: np.concatenate([p[1][k] for p in pieces]) for k in keys}


# --------------------------------------------------------------------------
# Sample batches
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SampleBatch:
    """Paired Monte Carlo draws of a chaos element and its carre-du-champ.

    Attributes
    ----------
    model : str
        Key=value descriptor of the generating model.
    p : int
        Chaos index of ``F`` (so ``E[Gamma] = p`` for normalized ``F``).
    seed : int
        Seed that reproduces the batch.
    f_samples : numpy.ndarray
        Draws of ``F``.
    gamma_samples : numpy.ndarray or None
        Draws of ``Gamma(F)``, entrywise nonnegative; ``None`` when the
        generating law carries no carre-du-champ (non-Gaussian inputs).
    meta : str
        Generator identifier (algorithm, chunk layout).
    """

    model: str
    p: int
    seed: int
    f_samples: np.ndarray
    gamma_samples: np.ndarray | None
    meta: str = GENERATOR_ID

    def __post_init__(self) -> None:
        f = np.asarray(self.f_samples, dtype=float)
        if f.ndim != 1 or f.size == 0:
            raise DomainError("f_samples must be a nonempty 1-d array")
        if not np.all(np.isfinite(f)):
            raise NonFiniteError("non-finite values in f_samples")
        f.setflags(write=False)
        object.__setattr__(self, "f_samples", f)
        g = self.gamma_samples
        if g is not None:
            g = np.asarray(g, dtype=float)
            if g.shape != f.shape:
                raise DomainError("gamma_samples must match f_samples in length")
            if not np.all(np.isfinite(g)):
                raise NonFiniteError("non-finite values in gamma_samples")
            if np.any(g < 0):
                raise DomainError("gamma_samples must be entrywise >= 0 "
                                  "(Gamma is a sum of squares)")
            g.setflags(write=False)
        object.__setattr__(self, "gamma_samples", g)
        if not isinstance(self.p, (int, np.integer)) or self.p < 1:
            raise DomainError("chaos index p must be a positive integer")

    @property
    def n_samples(self) -> int:
        return int(self.f_samples.size)

    @property
    def has_gamma(self) -> bool:
        return self.gamma_samples is not None


# --------------------------------------------------------------------------
# Fractional-Gaussian-noise Hermite variations
# --------------------------------------------------------------------------

def fgn_covariance(hurst: float, k):
    """Autocovariance ``r(k) = (|k+1|^{2H} - 2|k|^{2H} + |k-1|^{2H}) / 2``.

    Parameters
    ----------
    hurst : float
        Hurst index in (0, 1).
    k : int or array_like
        Lag(s); sign is irrelevant.

    Returns
    -------
    float or numpy.ndarray
    """
    if not (0.0 < hurst < 1.0):
        raise DomainError("hurst must lie in (0, 1), got %r" % (hurst,))
    ka = np.abs(np.asarray(k, dtype=float))
    two_h = 2.0 * hurst
    out = 0.5 * (np.abs(ka + 1.0) ** two_h - 2.0 * ka ** two_h
                 + np.abs(ka - 1.0) ** two_h)
    if np.isscalar(k) or np.asarray(k).ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class FbmHermiteModel:
    """Hermite variation of order ``p`` over ``n`` fGn increments.

    ``sampler`` selects the exact sampling route: ``"cholesky"`` (dense
    factorization, the correctness baseline, n <= 8192) or ``"circulant"``
    (FFT embedding with nonnegativity check and automatic fallback).
    """

    hurst: float
    p: int
    n: int
    sampler: str = "cholesky"

    def __post_init__(self) -> None:
        if not (0.0 < self.hurst < 1.0):
            raise DomainError("hurst must lie in (0, 1), got %r" % (self.hurst,))
        if not isinstance(self.p, (int, np.integer)) or self.p < 2:
            raise DomainError("Hermite order p must be an integer >= 2")
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise DomainError("number of increments n must be >= 1")
        if self.sampler not in ("cholesky", "circulant"):
            raise DomainError("sampler must be 'cholesky' or 'circulant', got %r"
                              % (self.sampler,))
        if self.sampler == "cholesky" and self.n > 8192:
            raise DomainError("cholesky sampler is limited to n <= 8192; "
                              "use sampler='circulant'")

    @property
    def critical_hurst(self) -> float:
        """The boundary ``1 - 1/(2p)`` between short and long memory."""
        return 1.0 - 1.0 / (2.0 * self.p)

    @property
    def regime(self) -> str:
        """``"CLT regime"`` below the critical Hurst index, ``"critical
        regime"`` exactly at it, ``"non-CLT regime"`` above."""
        if self.hurst < self.critical_hurst:
            return "CLT regime"
        if self.hurst == self.critical_hurst:
            return "critical regime"
        return "non-CLT regime"

    @property
    def descriptor(self) -> str:
        return "model=fbm;hurst=%s;p=%d;n=%d;sampler=%s" % (
            repr(float(self.hurst)), self.p, self.n, self.sampler)


def variance_vn(model: FbmHermiteModel) -> float:
    """Exact ``Var(V_n) = p! sum_{|k|<n} (1 - |k|/n) r(k)^p``.

    Follows from ``E[H_p(X) H_p(Y)] = p! Cov(X, Y)^p`` for jointly standard
    Gaussian pairs.
    """
    n, p = model.n, model.p
    k = np.arange(1, n, dtype=float)
    r = fgn_covariance(model.hurst, k) if n > 1 else np.zeros(0)
    total = 1.0 + 2.0 * float(np.sum((1.0 - k / n) * r ** p))
    return math.factorial(p) * total


def _cholesky_factor(model: FbmHermiteModel) -> np.ndarray | None:
    """Lower Cholesky factor of the fGn covariance; ``None`` marks identity."""
    if model.hurst == 0.5:
        return None  # r(k) = delta_{k0}: the increments are already i.i.d.
    n = model.n
    r = fgn_covariance(model.hurst, np.arange(n))
    cov = r[np.abs(np.arange(n)[:, None] - np.arange(n)[None, :])]
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        smallest = float(np.min(np.linalg.eigvalsh(cov)))
        raise DomainError(
            "fGn covariance is not positive definite at working precision "
            "(smallest eigenvalue %.3g)" % smallest) from exc


def _circulant_eigenvalues(model: FbmHermiteModel) -> np.ndarray | None:
    """Eigenvalues of the 2n-circulant embedding, or ``None`` if invalid."""
    n = model.n
    r = fgn_covariance(model.hurst, np.arange(n + 1))
    first_row = np.concatenate([r, r[-2:0:-1]])          # length 2n
    lam = np.fft.rfft(first_row).real                     # k = 0 .. n
    tol = 1e-9 * float(np.max(np.abs(lam)))
    if float(np.min(lam)) < -tol:
        return None
    return np.clip(lam, 0.0, None)


def sample_fbm_hermite(model: FbmHermiteModel, n_samples: int,
                       seed: int) -> SampleBatch:
    """Draw ``(F, Gamma(F))`` for the Hermite-variation model.

    ``F = V_n / sqrt(Var V_n)`` with ``V_n = n^{-1/2} sum_k H_p(X_k)`` and
    ``X = L xi`` for a factor ``L`` of the fGn covariance.  The
    carre-du-champ is the squared gradient in the i.i.d. generators ``xi``:
    ``Gamma = |L^T v|^2`` with ``v_k = p H_{p-1}(X_k) / sqrt(n Var V_n)``.
    On the circulant route the same linear map is applied backward via the
    FFT adjoint, so both routes are exact.

    Deterministic given ``(seed, n_samples, model.sampler)``.
    """
    if not isinstance(n_samples, (int, np.integer)) or n_samples < 1:
        raise DomainError("n_samples must be a positive integer, got %r"
                          % (n_samples,))
    n, p = model.n, model.p
    var_v = variance_vn(model)
    scale_f = 1.0 / math.sqrt(n * var_v)
    use_circulant = model.sampler == "circulant"
    lam = None
    if use_circulant:
        lam = _circulant_eigenvalues(model)
        if lam is None:
            warnings.warn("circulant embedding has negative eigenvalues; "
                          "falling back to the cholesky sampler",
                          RuntimeWarning, stacklevel=2)
            use_circulant = False
    chol = None if use_circulant else _cholesky_factor(model)

    if use_circulant:
        m_embed = 2 * n
        half = n  # = m_embed // 2
        s_edge0 = math.sqrt(m_embed * lam[0])
        s_edge1 = math.sqrt(m_embed * lam[half])
        s_mid = np.sqrt(m_embed * lam[1:half] / 2.0)

        def worker(rng: np.random.Generator, count: int) -> dict:
            f_out = np.empty(count)
            g_out = np.empty(count)
            done = 0
            while done < count:
                blk = min(_BLOCK_ROWS, count - done)
                d = rng.standard_normal((blk, m_embed))
                z = np.empty((blk, half + 1), dtype=complex)
                z[:, 0] = s_edge0 * d[:, 0]
                z[:, half] = s_edge1 * d[:, half]
                z[:, 1:half] = s_mid * (d[:, 1:half] + 1j * d[:, half + 1:])
                x = np.fft.irfft(z, n=m_embed, axis=1)[:, :n]
                herm = hermite_eval_all(p, x)
                f_out[done:done + blk] = herm[p].sum(axis=1) * scale_f
                v = np.zeros((blk, m_embed))
                v[:, :n] = (p * scale_f) * herm[p - 1]
                y = np.fft.rfft(v, n=m_embed, axis=1)
                power = np.abs(y) ** 2
                g_out[done:done + blk] = (
                    lam[0] * power[:, 0] + lam[half] * power[:, half]
                    + 2.0 * power[:, 1:half] @ lam[1:half]) / m_embed
                done += blk
            return {"f": f_out, "gamma": g_out}
    else:
        def worker(rng: np.random.Generator, count: int) -> dict:
            f_out = np.empty(count)
            g_out = np.empty(count)
            done = 0
            while done < count:
                blk = min(_BLOCK_ROWS, count - done)
                xi = rng.standard_normal((blk, n))
                x = xi if chol is None else xi @ chol.T
                herm = hermite_eval_all(p, x)
                f_out[done:done + blk] = herm[p].sum(axis=1) * scale_f
                v = (p * scale_f) * herm[p - 1]
                back = v if chol is None else v @ chol
                g_out[done:done + blk] = np.einsum("ij,ij->i", back, back)
                done += blk
            return {"f": f_out, "gamma": g_out}

    out = _assemble_chunks(worker, int(n_samples), int(seed))
    return SampleBatch(model=model.descriptor, p=p, seed=int(seed),
                       f_samples=out["f"], gamma_samples=out["gamma"])


# --------------------------------------------------------------------------
# GOE trace chaos
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GoeTraceModel:
    """Third power of a rescaled GOE matrix ``A_n = A / sqrt(n)``.

    Entries of ``A`` above the diagonal are i.i.d. standard Gaussian; the
    diagonal has variance 2; the matrix is symmetric.
    """

    n: int
    power: int = 3

    def __post_init__(self) -> None:
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise DomainError("matrix size n must be >= 1")
        if self.power != 3:
            raise DomainError("only the third trace power is supported")

    def descriptor(self, normalize: bool) -> str:
        return "model=goe;n=%d;power=3;normalize=%s" % (
            self.n, "true" if normalize else "false")


@dataclass(frozen=True)
class Chaos3Projection:
    """Closed form of the third-chaos projection of ``Tr(A_n^3)``.

    The projection subtracts the first-chaos component, a multiple of the
    trace:  ``J_3 = Tr(A_n^3) - linear_coefficient * Tr(A_n)`` with
    ``linear_coefficient = 3 (n + 1) / n``.  Both exact variances come from
    the Wick pairing count over the Gaussian entries.
    """

    n: int
    linear_coefficient: float
    variance_chaos3: float
    variance_trace3: float

    def evaluate(self, matrix: np.ndarray) -> float:
        """Apply the projection to one rescaled symmetric matrix."""
        a = np.asarray(matrix, dtype=float)
        if a.shape != (self.n, self.n):
            raise DomainError("matrix must be %d x %d" % (self.n, self.n))
        cube_trace = float(np.trace(a @ a @ a))
        return cube_trace - self.linear_coefficient * float(np.trace(a))


def goe_chaos3_projection_coeffs(n: int) -> Chaos3Projection:
    """Structural description of ``J_3(Tr A_n^3)`` with exact variances.

    ``Var(J_3) = 6 + 18/n + 24/n^2`` and ``Var(Tr A_n^3) = 24 + 54/n +
    42/n^2``; at ``n = 1`` these are 48 and 120.
    """
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise DomainError("matrix size n must be >= 1")
    nf = float(n)
    return Chaos3Projection(
        n=int(n),
        linear_coefficient=3.0 * (nf + 1.0) / nf,
        variance_chaos3=6.0 + 18.0 / nf + 24.0 / nf ** 2,
        variance_trace3=24.0 + 54.0 / nf + 42.0 / nf ** 2,
    )


def _goe_worker(model: GoeTraceModel, normalize: bool):
    n = model.n
    proj = goe_chaos3_projection_coeffs(n)
    c_n = proj.linear_coefficient
    scale = 1.0 / math.sqrt(n)
    rows, cols = np.triu_indices(n, k=1)
    diag = np.arange(n)
    n_draws = n * (n + 1) // 2
    f_scale = 1.0 / math.sqrt(proj.variance_chaos3) if normalize else 1.0

    def worker(rng: np.random.Generator, count: int) -> dict:
        f_out = np.empty(count)
        g_out = np.empty(count)
        t_out = np.empty(count)
        done = 0
        while done < count:
            blk = min(_GOE_BLOCK_ROWS, count - done)
            g = rng.standard_normal((blk, n_draws))
            gd = g[:, :n]                     # diagonal generators
            gu = g[:, n:]                     # strict upper generators
            a = np.zeros((blk, n, n))
            a[:, rows, cols] = gu
            a[:, cols, rows] = gu
            a[:, diag, diag] = math.sqrt(2.0) * gd
            a *= scale
            a2 = a @ a
            trace3 = np.einsum("sij,sji->s", a2, a)
            trace1 = np.einsum("sii->s", a)
            chaos3 = trace3 - c_n * trace1
            a2_off = a2[:, rows, cols]
            a2_diag = a2[:, diag, diag]
            gamma = ((36.0 / n) * np.einsum("sk,sk->s", a2_off, a2_off)
                     + (2.0 / n) * np.einsum(
                         "sk,sk->s", 3.0 * a2_diag - c_n, 3.0 * a2_diag - c_n))
            f_out[done:done + blk] = chaos3 * f_scale
            g_out[done:done + blk] = gamma * f_scale ** 2
            t_out[done:done + blk] = trace3
            done += blk
        return {"f": f_out, "gamma": g_out, "trace3": t_out}

    return worker


def sample_goe_trace(model: GoeTraceModel, n_samples: int, seed: int,
                     normalize: bool = True) -> SampleBatch:
    """Draw the chaos-3 projection of ``Tr(A_n^3)`` with its carre-du-champ.

    ``normalize=True`` divides by the exact standard deviation from the
    Wick expansion so ``E[F^2] = 1``; ``normalize=False`` returns the raw
    projection.  ``Gamma`` is the squared analytic gradient in the
    underlying standard generators (diagonal generators carry the sqrt(2)
    scale) and is rescaled consistently with ``F``.
    """
    if not isinstance(n_samples, (int, np.integer)) or n_samples < 1:
        raise DomainError("n_samples must be a positive integer, got %r"
                          % (n_samples,))
    out = _assemble_chunks(_goe_worker(model, normalize), int(n_samples),
                           int(seed))
    return SampleBatch(model=model.descriptor(normalize), p=3, seed=int(seed),
                       f_samples=out["f"], gamma_samples=out["gamma"])


def goe_raw_trace_samples(model: GoeTraceModel, n_samples: int,
                          seed: int) -> np.ndarray:
    """Draw the unprojected statistic ``Tr(A_n^3)`` (same stream as the
    projection sampler with ``normalize=False``)."""
    if not isinstance(n_samples, (int, np.integer)) or n_samples < 1:
        raise DomainError("n_samples must be a positive integer, got %r"
                          % (n_samples,))
    out = _assemble_chunks(_goe_worker(model, False), int(n_samples),
                           int(seed))
    return out["trace3"]


# --------------------------------------------------------------------------
# Homogeneous sums
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class HomogeneousSum:
    """Multilinear form ``Q(x) = sum a(i_1..i_d) x_{i_1} ... x_{i_d}``.

    ``entries`` maps strictly increasing 1-based index tuples of length
    ``degree`` to real coefficients.  Nonempty coefficient sets must be
    normalized to ``sum a^2 = 1`` (use :meth:`from_coeffs`); the zero
    polynomial is allowed for influence queries but cannot be sampled.
    """

    degree: int
    m_vars: int
    entries: tuple  # ((indices, coefficient), ...) sorted by indices
    law: str = "gaussian"
    structure: str = field(default="generic")

    def __post_init__(self) -> None:
        if not isinstance(self.degree, (int, np.integer)) or self.degree < 1:
            raise DomainError("degree must be an integer >= 1")
        if not isinstance(self.m_vars, (int, np.integer)) or self.m_vars < self.degree:
            raise DomainError("the number of variables M must be >= degree")
        if self.law not in ("gaussian", "rademacher"):
            raise DomainError("law must be 'gaussian' or 'rademacher', got %r"
                              % (self.law,))
        if self.structure not in ("generic", "complete_graph"):
            raise DomainError("unknown structure tag %r" % (self.structure,))
        total = 0.0
        for indices, coeff in self.entries:
            if len(indices) != self.degree:
                raise DomainError("index tuple %r does not have length %d"
                                  % (indices, self.degree))
            if any(not (1 <= i <= self.m_vars) for i in indices):
                raise DomainError("index tuple %r out of range 1..%d"
                                  % (indices, self.m_vars))
            if any(b <= a for a, b in zip(indices, indices[1:])):
                raise DomainError("index tuple %r must be strictly increasing"
                                  % (indices,))
            if not math.isfinite(coeff):
                raise NonFiniteError("non-finite coefficient at %r" % (indices,))
            total += coeff * coeff
        if self.entries and abs(total - 1.0) > 1e-10:
            raise DomainError(
                "coefficients must satisfy sum a^2 = 1 (got %.12g); build "
                "through from_coeffs to normalize" % total)

    @classmethod
    def from_coeffs(cls, degree: int, m_vars: int, mapping: dict,
                    law: str = "gaussian", normalize: bool = True,
                    structure: str = "generic") -> "HomogeneousSum":
        """Build from a ``{tuple: coefficient}`` map, normalizing by default."""
        items = sorted((tuple(int(i) for i in k), float(v))
                       for k, v in mapping.items())
        if normalize and items:
            norm = math.sqrt(sum(v * v for _, v in items))
            if norm == 0.0:
                items = [(k, 0.0) for k, _ in items]
            else:
                items = [(k, v / norm) for k, v in items]
        return cls(degree=degree, m_vars=m_vars, entries=tuple(items),
                   law=law, structure=structure)

    @property
    def descriptor(self) -> str:
        return "model=hsum;degree=%d;M=%d;law=%s;structure=%s;terms=%d" % (
            self.degree, self.m_vars, self.law, self.structure,
            len(self.entries))


def complete_graph_sum(m_vars: int, law: str = "gaussian") -> HomogeneousSum:
    """``Q = sum_{i<j<=M} x_i x_j / sqrt(C(M, 2))`` with a fast-path tag."""
    if m_vars < 2:
        raise DomainError("complete graph needs M >= 2")
    coeff = 1.0 / math.sqrt(m_vars * (m_vars - 1) / 2.0)
    mapping = {(i, j): coeff for i in range(1, m_vars + 1)
               for j in range(i + 1, m_vars + 1)}
    return HomogeneousSum.from_coeffs(2, m_vars, mapping, law=law,
                                      normalize=False,
                                      structure="complete_graph")


def influence(q: HomogeneousSum, r: int) -> float:
    """Influence ``tau_r = sum of a(i_1..i_d)^2 over tuples containing r``."""
    if not (1 <= r <= q.m_vars):
        raise DomainError("variable index r must lie in 1..%d, got %r"
                          % (q.m_vars, r))
    return float(sum(c * c for idx, c in q.entries if r in idx))


def total_influence(q: HomogeneousSum) -> float:
    """``tau(Q) = max_r tau_r(Q)``."""
    tau = np.zeros(q.m_vars)
    for idx, c in q.entries:
        for i in idx:
            tau[i - 1] += c * c
    return float(np.max(tau)) if q.m_vars else 0.0


def _hsum_evaluate(q: HomogeneousSum, x: np.ndarray) -> np.ndarray:
    """Q on rows of ``x`` (shape (rows, M))."""
    if q.structure == "complete_graph":
        coeff = q.entries[0][1]
        w = x.sum(axis=1)
        v = np.einsum("ij,ij->i", x, x)
        return coeff * 0.5 * (w * w - v)
    out = np.zeros(x.shape[0])
    for idx, c in q.entries:
        cols = [i - 1 for i in idx]
        term = x[:, cols[0]].copy()
        for col in cols[1:]:
            term *= x[:, col]
        out += c * term
    return out


def _hsum_gamma(q: HomogeneousSum, x: np.ndarray) -> np.ndarray:
    """``|grad Q|^2`` on rows of ``x`` (Gaussian law only)."""
    if q.structure == "complete_graph":
        coeff = q.entries[0][1]
        w = x.sum(axis=1)
        v = np.einsum("ij,ij->i", x, x)
        # sum_r (W - x_r)^2 = (M - 2) W^2 + V
        return coeff * coeff * ((q.m_vars - 2.0) * w * w + v)
    grad = np.zeros_like(x)
    for idx, c in q.entries:
        cols = [i - 1 for i in idx]
        for drop in range(len(cols)):
            term = np.full(x.shape[0], c)
            for k, col in enumerate(cols):
                if k != drop:
                    term = term * x[:, col]
            grad[:, cols[drop]] += term
    return np.einsum("ij,ij->i", grad, grad)


def sample_homogeneous(q: HomogeneousSum, n_samples: int,
                       seed: int) -> SampleBatch:
    """Evaluate ``Q`` on i.i.d. draws of its law.

    For the Gaussian law the batch carries ``Gamma = |grad Q|^2``; for
    other laws ``gamma_samples`` is ``None`` (no carre-du-champ on the
    discrete side).

    Raises
    ------
    DomainError
        If the coefficient map is empty (degenerate model).
    """
    if not q.entries or all(c == 0.0 for _, c in q.entries):
        raise DomainError("cannot sample a homogeneous sum with an empty or "
                          "zero coefficient map")
    if not isinstance(n_samples, (int, np.integer)) or n_samples < 1:
        raise DomainError("n_samples must be a positive integer, got %r"
                          % (n_samples,))
    gaussian = q.law == "gaussian"

    def worker(rng: np.random.Generator, count: int) -> dict:
        f_out = np.empty(count)
        g_out = np.empty(count) if gaussian else None
        done = 0
        while done < count:
            blk = min(_BLOCK_ROWS, count - done)
            if gaussian:
                x = rng.standard_normal((blk, q.m_vars))
            else:
                x = 2.0 * rng.integers(0, 2, size=(blk, q.m_vars)).astype(float) - 1.0
            f_out[done:done + blk] = _hsum_evaluate(q, x)
            if gaussian:
                g_out[done:done + blk] = _hsum_gamma(q, x)
            done += blk
        out = {"f": f_out}
        if gaussian:
            out["gamma"] = g_out
        return out

    out = _assemble_chunks(worker, int(n_samples), int(seed))
    return SampleBatch(model=q.descriptor, p=q.degree, seed=int(seed),
                       f_samples=out["f"],
                       gamma_samples=out.get("gamma"))


def lindeberg_discrepancy(q: HomogeneousSum, h, n_samples: int, seed: int,
                          return_se: bool = False):
    """Estimate ``|E h(Q(X)) - E h(Q(G))|`` by coupled Monte Carlo.

    ``G`` is i.i.d. standard Gaussian; ``X`` follows ``q.law``.  The two
    sides share draws: the Rademacher coordinates are the signs of the
    Gaussian ones (sign and magnitude of a standard normal are
    independent), which strongly correlates the paired evaluations and
    shrinks the variance of the difference far below either side's own
    variance.  Each draw is paired with its antithetic mirror ``-G`` and
    the two differences averaged; for odd-degree forms this cancels the
    odd error component.  For even-degree forms ``Q(-x) = Q(x)`` makes the
    mirror evaluation identical term by term, so it is skipped without
    changing the estimate.

    Parameters
    ----------
    return_se : bool
        When true, also return the Monte Carlo standard error of the
        (signed) mean difference.
    """
    if not q.entries or all(c == 0.0 for _, c in q.entries):
        raise DomainError("cannot sample a homogeneous sum with an empty or "
                          "zero coefficient map")
    if not isinstance(n_samples, (int, np.integer)) or n_samples < 1:
        raise DomainError("n_samples must be a positive integer, got %r"
                          % (n_samples,))

    def worker(rng: np.random.Generator, count: int) -> dict:
        s = 0.0
        s2 = 0.0
        done = 0
        while done < count:
            blk = min(_BLOCK_ROWS, count - done)
            g = rng.standard_normal((blk, q.m_vars))
            if q.law == "rademacher":
                x = np.where(g >= 0.0, 1.0, -1.0)
            else:
                x = g
            diff = np.asarray(h(_hsum_evaluate(q, x)), dtype=float) \
                - np.asarray(h(_hsum_evaluate(q, g)), dtype=float)
            if q.degree % 2:
                mirrored = np.asarray(h(_hsum_evaluate(q, -x)), dtype=float) \
                    - np.asarray(h(_hsum_evaluate(q, -g)), dtype=float)
                diff = 0.5 * (diff + mirrored)
            s += float(diff.sum())
            s2 += float(diff @ diff)
            done += blk
        return {"sum": np.array([s]), "sumsq": np.array([s2])}

    out = _assemble_chunks(worker, int(n_samples), int(seed))
    total = float(out["sum"].sum())
    total_sq = float(out["sumsq"].sum())
    n = float(n_samples)
    mean = total / n
    var = max(0.0, total_sq / n - mean * mean)
    se = math.sqrt(var / n)
    if return_se:
        return abs(mean), se
    return abs(mean)
