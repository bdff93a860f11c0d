"""Chain quality diagnostics and binned distribution comparison.

Scalar-chain tools: lagged autocorrelation, autocorrelation-time effective
sample size, Geweke stationarity p-values, automatic burn-in detection,
the between/within-chain potential scale reduction factor, and a pooled
multi-chain effective sample size.

Distribution tools: an axis-aligned reference mesh spanning ``z`` standard
deviations around the sample mean, histogram binning of samples and of an
analytic density (midpoint rule), the Kullback-Leibler divergence between
two binned distributions, and mesh coverage.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .errors import ConvergenceError, EvaluationError, ValidationError

__all__ = [
    "autocorrelation",
    "effective_sample_size",
    "geweke_p",
    "geweke_burn_in",
    "detect_burn_in",
    "gelman_rubin",
    "multichain_ess",
    "ReferenceMesh",
    "BinnedDistribution",
    "build_reference_mesh",
    "bin_sample",
    "bin_reference",
    "kl_divergence",
    "coverage",
]

MAX_MESH_CELLS = 2 ** 22


# ---------------------------------------------------------------------------
# scalar-chain diagnostics
# ---------------------------------------------------------------------------

def _as_chain_1d(x, min_len: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValidationError(f"expected a 1-D sequence, got shape {x.shape}")
    if x.size < min_len:
        raise ValidationError(f"sequence of length {x.size} too short (need >= {min_len})")
    if not np.all(np.isfinite(x)):
        raise ValidationError("sequence contains non-finite values")
    return x


def autocorrelation(x, lag: int) -> float:
    """Empirical autocorrelation at a single lag.

    Numerator averages the ``N - lag`` available centered products;
    denominator is the biased (``1/N``) variance, so a strictly alternating
    sequence has autocorrelation exactly -1 at lag 1.
    """
    x = _as_chain_1d(x, 2)
    n = x.size
    if not 0 <= lag < n:
        raise ValidationError(f"lag {lag} outside [0, {n - 1}]")
    xc = x - x.mean()
    den = (xc @ xc) / n
    if den == 0.0:
        raise ValidationError("sequence has zero variance")
    if lag == 0:
        return 1.0
    num = (xc[: n - lag] @ xc[lag:]) / (n - lag)
    return float(num / den)


def _autocorr_upto(x: np.ndarray, max_lag: int) -> np.ndarray:
    """Autocorrelations for lags 0..max_lag (FFT; same normalization as
    :func:`autocorrelation`)."""
    n = x.size
    xc = x - x.mean()
    den = (xc @ xc) / n
    if den == 0.0:
        raise ValidationError("sequence has zero variance")
    nfft = 1
    while nfft < 2 * n:
        nfft *= 2
    f = np.fft.rfft(xc, nfft)
    raw = np.fft.irfft(f * np.conj(f), nfft)[: max_lag + 1].real
    counts = n - np.arange(max_lag + 1)
    return raw / counts / den


def effective_sample_size(x, max_lag: int | None = None) -> float:
    """Autocorrelation-time ESS of one scalar chain.

    The autocorrelation sum is truncated at the first lag ``T`` for which
    ``rho[T+1] + rho[T+2] < 0`` (all usable lags if that never happens);
    ``ESS = N / (1 + 2 * sum(rho[1..T]))``, clamped to ``[1, N]``.
    ``max_lag`` optionally caps the truncation search.
    """
    x = _as_chain_1d(x, 4)
    n = x.size
    lag_cap = n - 2 if max_lag is None else min(int(max_lag), n - 2)
    if lag_cap < 2:
        lag_cap = 2
    rho = _autocorr_upto(x, lag_cap)
    cutoff = lag_cap - 2
    for t in range(lag_cap - 1):
        if rho[t + 1] + rho[t + 2] < 0.0:
            cutoff = t
            break
    ess = n / (1.0 + 2.0 * rho[1: cutoff + 1].sum())
    return float(min(max(ess, 1.0), n))


def _window_p(a: np.ndarray, b: np.ndarray) -> float:
    """Two-sided p-value for equality of two window means, each variance
    scaled by its own effective sample size (lag search capped at half the
    window)."""
    var_a, var_b = a.var(ddof=1), b.var(ddof=1)
    if var_a == 0.0 and var_b == 0.0:
        return 1.0 if a.mean() == b.mean() else 0.0
    denom = 0.0
    if var_a > 0.0:
        denom += var_a / effective_sample_size(a, max_lag=a.size // 2)
    if var_b > 0.0:
        denom += var_b / effective_sample_size(b, max_lag=b.size // 2)
    z = (a.mean() - b.mean()) / np.sqrt(denom)
    return float(erfc(abs(z) / np.sqrt(2.0)))


def geweke_p(x, first: float = 0.1, last: float = 0.5) -> float:
    """Two-sided p-value for equality of early and late window means.

    Compares the mean of the first ``first`` fraction against the last
    ``last`` fraction of the sequence; each window's variance is scaled by
    its own effective sample size (autocorrelation search capped at half
    the window).
    """
    x = _as_chain_1d(x, 20)
    if not (0.0 < first < 1.0 and 0.0 < last < 1.0 and first + last <= 1.0):
        raise ValidationError("window fractions must be positive and sum to <= 1")
    n = x.size
    n_a = int(first * n)
    n_b = int(last * n)
    if n_a < 10 or n_b < 10:
        raise ValidationError(
            f"windows of {n_a} and {n_b} points too small for a stable comparison")
    return _window_p(x[:n_a], x[n - n_b:])


def geweke_burn_in(states, threshold: float = 0.05, step: int = 10,
                   leading_threshold: float = 0.005) -> int:
    """Smallest burn-in offset whose remainder passes the Geweke test.

    Candidate offsets ``0, step, 2*step, ...`` up to half the chain are
    tried in order; the first whose trimmed chain has Geweke p >= threshold
    for *every* parameter wins.

    The 10% window statistic is blind to level shifts occupying a small
    fraction of the window (the shifted points inflate the window variance
    and deflate its effective sample size, diluting the z-score), so a scan
    on that statistic alone systematically stops one to several grid steps
    before the end of a start-up transient.  Each candidate therefore must
    also pass the same two-window comparison on its leading ``step``-sized
    block — the part of the chain the grid cannot resolve — at the stricter
    ``leading_threshold``, which rejects with near certainty any candidate
    whose first unresolved block is still displaced while spending little
    of the false-positive budget on stationary chains.

    Raises :class:`~bayescal.errors.ConvergenceError` if no candidate
    qualifies or the chain is shorter than 200 states.
    """
    states = np.asarray(states, dtype=float)
    if states.ndim == 1:
        states = states[:, None]
    if states.ndim != 2:
        raise ValidationError(f"expected (N,) or (N, p) states, got {states.shape}")
    n = states.shape[0]
    if n < 200:
        raise ConvergenceError(
            f"chain of {n} states is too short for burn-in detection (need >= 200)")

    def _passes(seg_col: np.ndarray) -> bool:
        if geweke_p(seg_col) < threshold:
            return False
        m = seg_col.size
        lead = _window_p(seg_col[:step], seg_col[m - m // 2:])
        return lead >= leading_threshold

    for b in range(0, n // 2 + 1, step):
        seg = states[b:]
        if all(_passes(seg[:, j]) for j in range(seg.shape[1])):
            return b
    raise ConvergenceError(
        f"no burn-in offset up to {n // 2} makes the chain pass the Geweke "
        f"test at p >= {threshold}; the chain has likely not converged")


def detect_burn_in(chain, threshold: float = 0.05) -> int:
    """Burn-in offset for a chain object: a preset offset (samplers with an
    explicit adaptation span) is honored, otherwise the Geweke scan runs."""
    if getattr(chain, "burn_in", None) is not None:
        return int(chain.burn_in)
    return geweke_burn_in(chain.states, threshold=threshold)


def gelman_rubin(sequences, walkers=None) -> float:
    """Potential scale reduction factor across scalar chains.

    ``sqrt((Nbar-1)/Nbar + (M/(M-1)) * sum((mean_m - grand)^2) / sum(var_m))``
    with per-chain variances at ``ddof=1``.  ``walkers`` optionally scales
    each chain's variance by the number of walkers it averages over (the
    ensemble-mean chain of a K-walker sampler has its variance shrunk by K).
    """
    seqs = [_as_chain_1d(s, 2) for s in sequences]
    m = len(seqs)
    if m < 2:
        raise ValidationError("need at least 2 chains")
    if walkers is None:
        walkers = [1] * m
    if len(walkers) != m:
        raise ValidationError("one walker count per chain required")
    n_bar = float(np.mean([s.size for s in seqs]))
    means = np.array([s.mean() for s in seqs])
    variances = np.array([s.var(ddof=1) * w for s, w in zip(seqs, walkers)])
    spread = np.sum((means - means.mean()) ** 2)
    denom = variances.sum()
    if denom == 0.0:
        return 1.0 if spread == 0.0 else np.inf
    ratio = (n_bar - 1.0) / n_bar + (m / (m - 1.0)) * spread / denom
    return float(np.sqrt(ratio))


def multichain_ess(sequences) -> float:
    """Pooled effective sample size of ``M`` equal-length scalar chains.

    Uses the variogram estimate ``rho_t = 1 - V_t / (2 * var_plus)`` with
    ``var_plus = (N-1)/N * W + B/N`` (within/between variances), the same
    paired-lag truncation as :func:`effective_sample_size`, and
    ``ESS = M * N / (1 + 2 * sum(rho))`` clamped to ``[1, M * N]``.
    """
    seqs = [_as_chain_1d(s, 8) for s in sequences]
    m = len(seqs)
    if m < 2:
        raise ValidationError("need at least 2 chains")
    n = seqs[0].size
    if any(s.size != n for s in seqs):
        raise ValidationError("chains must have equal lengths")
    mat = np.stack(seqs)
    means = mat.mean(axis=1)
    w = float(np.mean(mat.var(axis=1, ddof=1)))
    b_over_n = float(np.sum((means - means.mean()) ** 2) / (m - 1))
    var_plus = (n - 1.0) / n * w + b_over_n
    if var_plus == 0.0:
        raise ValidationError("chains have zero pooled variance")

    max_lag = n - 2
    lags = np.arange(max_lag + 1)
    v_sum = np.zeros(max_lag + 1)
    nfft = 1
    while nfft < 2 * n:
        nfft *= 2
    for row, mu in zip(mat, means):
        y = row - mu
        f = np.fft.rfft(y, nfft)
        raw = np.fft.irfft(f * np.conj(f), nfft)[: max_lag + 1].real
        sq = y ** 2
        head = np.concatenate(([sq.sum()], sq.sum() - np.cumsum(sq)[:max_lag]))
        tail = np.concatenate(([sq.sum()], sq.sum() - np.cumsum(sq[::-1])[:max_lag]))
        v_sum += head + tail - 2.0 * raw
    v_t = v_sum / (m * (n - lags))
    rho = 1.0 - v_t / (2.0 * var_plus)

    cutoff = max_lag - 2
    for t in range(max_lag - 1):
        if rho[t + 1] + rho[t + 2] < 0.0:
            cutoff = t
            break
    ess = m * n / (1.0 + 2.0 * rho[1: cutoff + 1].sum())
    return float(min(max(ess, 1.0), m * n))


# ---------------------------------------------------------------------------
# binned distribution comparison
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ReferenceMesh:
    """Axis-aligned box mesh given by per-dimension bin edges."""

    edges: tuple

    def __post_init__(self):
        edges = tuple(np.asarray(e, dtype=float) for e in self.edges)
        if not edges:
            raise ValidationError("mesh needs at least one dimension")
        for e in edges:
            if e.ndim != 1 or e.size < 2:
                raise ValidationError("each dimension needs at least 2 bin edges")
            if not np.all(np.isfinite(e)) or not np.all(np.diff(e) > 0):
                raise ValidationError("bin edges must be finite and strictly increasing")
        object.__setattr__(self, "edges", edges)
        if self.cells > MAX_MESH_CELLS:
            raise ValidationError(
                f"mesh with {self.cells} cells exceeds the {MAX_MESH_CELLS} cell limit")

    @property
    def dim(self) -> int:
        return len(self.edges)

    @property
    def bins(self) -> tuple:
        return tuple(e.size - 1 for e in self.edges)

    @property
    def cells(self) -> int:
        return int(np.prod([e.size - 1 for e in self.edges]))

    def centroids(self, axis: int) -> np.ndarray:
        e = self.edges[axis]
        return 0.5 * (e[:-1] + e[1:])


@dataclass(frozen=True)
class BinnedDistribution:
    """Cell probabilities on a reference mesh.

    ``n_inside`` / ``n_total`` record how many of the binned points landed
    inside the mesh (both equal the cell count for analytic references).
    """

    mesh: ReferenceMesh
    probs: np.ndarray
    n_inside: int
    n_total: int

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.shape != self.mesh.bins:
            raise ValidationError(
                f"probability array {probs.shape} does not match mesh bins {self.mesh.bins}")
        if np.any(probs < 0.0) or not np.all(np.isfinite(probs)):
            raise ValidationError("probabilities must be finite and non-negative")
        if abs(probs.sum() - 1.0) > 1e-8:
            raise ValidationError(f"probabilities sum to {probs.sum()}, not 1")
        object.__setattr__(self, "probs", probs)

    @property
    def coverage(self) -> float:
        """Fraction of mesh cells carrying positive probability."""
        return float(np.count_nonzero(self.probs) / self.probs.size)


def build_reference_mesh(samples, bins, z: float = 4.0) -> ReferenceMesh:
    """Mesh spanning ``mean +- z * std`` of ``samples`` in every dimension.

    ``bins`` is one bin count shared by all dimensions or a per-dimension
    sequence; each dimension gets uniform bins.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2 or samples.shape[0] < 2:
        raise ValidationError(f"need (N >= 2, p) samples, got shape {samples.shape}")
    if not np.all(np.isfinite(samples)):
        raise ValidationError("samples contain non-finite values")
    if not z > 0:
        raise ValidationError("z must be positive")
    p = samples.shape[1]
    if np.isscalar(bins):
        bins = [int(bins)] * p
    bins = [int(b) for b in bins]
    if len(bins) != p or any(b < 1 for b in bins):
        raise ValidationError(f"need one positive bin count per dimension, got {bins}")
    mu = samples.mean(axis=0)
    sd = samples.std(axis=0, ddof=1)
    if np.any(sd == 0.0):
        raise ValidationError("samples are degenerate (zero spread) in some dimension")
    edges = []
    for i in range(p):
        h = 2.0 * z * sd[i] / bins[i]
        edges.append(mu[i] - z * sd[i] + h * np.arange(bins[i] + 1))
    return ReferenceMesh(tuple(edges))


def bin_sample(mesh: ReferenceMesh, samples) -> BinnedDistribution:
    """Histogram of samples on the mesh (bins right-open: ``[e_k, e_{k+1})``).

    Points outside the mesh are dropped and excluded from normalization;
    an entirely-outside sample raises :class:`~bayescal.errors.EvaluationError`.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2 or samples.shape[1] != mesh.dim:
        raise ValidationError(
            f"need (N, {mesh.dim}) samples for this mesh, got shape {samples.shape}")
    n_total = samples.shape[0]
    if n_total == 0:
        raise ValidationError("no samples to bin")
    shape = mesh.bins
    idx = np.empty(samples.shape, dtype=np.int64)
    inside = np.ones(n_total, dtype=bool)
    for d in range(mesh.dim):
        idx[:, d] = np.searchsorted(mesh.edges[d], samples[:, d], side="right") - 1
        inside &= (idx[:, d] >= 0) & (idx[:, d] < shape[d])
    n_inside = int(inside.sum())
    if n_inside == 0:
        raise EvaluationError("no samples fall inside the reference mesh")
    flat = np.ravel_multi_index(tuple(idx[inside].T), shape)
    counts = np.bincount(flat, minlength=int(np.prod(shape)))
    probs = counts.reshape(shape) / n_inside
    return BinnedDistribution(mesh=mesh, probs=probs, n_inside=n_inside, n_total=n_total)


def bin_reference(mesh: ReferenceMesh, log_density, batch_size: int = 8192) -> BinnedDistribution:
    """Cell probabilities of an analytic density via midpoint evaluation.

    ``log_density`` maps an ``(M, dim)`` batch of cell centroids to ``(M,)``
    log densities.  Probabilities are normalized over the mesh in a
    numerically stable way (exponentials are taken relative to the maximum
    log density).  ``-inf`` log densities are admitted and produce
    zero-probability cells -- bounded-support posteriors are zero outside
    their support; a NaN or ``+inf`` density, or a mesh carrying no mass at
    all, raises :class:`~bayescal.errors.EvaluationError`.  A divergence
    against a reference with empty cells fails later, in
    :func:`kl_divergence`, only if sampled mass actually lands there.
    """
    shape = mesh.bins
    cells = mesh.cells
    cents = [mesh.centroids(d) for d in range(mesh.dim)]
    logp = np.empty(cells)
    for start in range(0, cells, int(batch_size)):
        stop = min(start + int(batch_size), cells)
        multi = np.unravel_index(np.arange(start, stop), shape)
        pts = np.stack([cents[d][multi[d]] for d in range(mesh.dim)], axis=1)
        vals = np.asarray(log_density(pts), dtype=float).reshape(-1)
        if vals.shape != (stop - start,):
            raise ValidationError(
                "log_density must return one value per centroid batch row")
        if np.any(np.isnan(vals)) or np.any(vals == np.inf):
            raise EvaluationError(
                "reference log density is NaN or +inf at a mesh centroid")
        logp[start:stop] = vals
    top = logp.max()
    if not np.isfinite(top):
        raise EvaluationError("reference density carries no mass on the mesh")
    weights = np.exp(logp - top)
    probs = weights / weights.sum()
    return BinnedDistribution(mesh=mesh, probs=probs.reshape(shape),
                              n_inside=cells, n_total=cells)


def _probs_of(dist) -> np.ndarray:
    if isinstance(dist, BinnedDistribution):
        return dist.probs
    arr = np.asarray(dist, dtype=float)
    if arr.size == 0 or np.any(arr < 0.0) or not np.all(np.isfinite(arr)):
        raise ValidationError("probabilities must be finite and non-negative")
    if abs(arr.sum() - 1.0) > 1e-8:
        raise ValidationError(f"probabilities sum to {arr.sum()}, not 1")
    return arr


def kl_divergence(p, q) -> float:
    """``KL(P || Q) = sum over P>0 of P * log(P / Q)``.

    Either argument may be a :class:`BinnedDistribution` or a bare
    probability array.  A cell with ``P > 0`` but ``Q = 0`` makes the
    divergence infinite and raises
    :class:`~bayescal.errors.EvaluationError` — zero reference cells are
    never floored away.
    """
    p_arr = _probs_of(p)
    q_arr = _probs_of(q)
    if p_arr.shape != q_arr.shape:
        raise ValidationError(
            f"distributions have mismatched shapes {p_arr.shape} and {q_arr.shape}")
    mask = p_arr > 0.0
    if np.any(q_arr[mask] == 0.0):
        raise EvaluationError(
            "sample mass found in cells where the reference probability is zero; "
            "KL divergence is infinite")
    return float(np.sum(p_arr[mask] * np.log(p_arr[mask] / q_arr[mask])))


def coverage(dist) -> float:
    """Fraction of cells with positive probability."""
    if isinstance(dist, BinnedDistribution):
        return dist.coverage
    arr = _probs_of(dist)
    return float(np.count_nonzero(arr) / arr.size)
