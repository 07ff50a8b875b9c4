"""Random matrix cocycles driven by i.i.d. symbols.

Provides word sampling, matrix products along words, Lyapunov spectrum
estimation with re-orthonormalised frame propagation, fast-subspace flag
estimation, backward-iteration sampling of the stationary flag distribution,
and Bernoulli entropy.

All estimators consume a ``numpy.random.Generator`` (or an integer seed) and
are bitwise deterministic given the seed.  Trials and samples are independent
given the derived draws and are always reduced in trial/sample index order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SpectralGapError
from .linalg import (
    FlagChain,
    SubspaceFrame,
    check_contractive_invertible,
    exterior_power,
    qr_positive,
)

__all__ = [
    "BernoulliWeights",
    "LyapunovSpectrum",
    "FlagSample",
    "as_map_stack",
    "safe_renorm_interval",
    "sample_word",
    "word_product",
    "entropy",
    "lyapunov_spectrum",
    "exterior_partial_sum_estimate",
    "oseledets_fast_flag",
    "furstenberg_sample",
    "furstenberg_step",
]

WEIGHT_SUM_TOL = 1e-12
DEFAULT_RENORM_EVERY = 10
# keep the singular-value spread accumulated between renormalisations well
# below 1/eps so the most contracted directions stay resolvable
_MAX_LOG_SPREAD_PER_RENORM = 30.0


def safe_renorm_interval(mats: np.ndarray, requested: int) -> int:
    """Shorten the renormalisation interval for badly conditioned maps."""
    sv = np.linalg.svd(mats, compute_uv=False)
    log_cond = float(np.max(np.log(sv[:, 0] / sv[:, -1])))
    if log_cond <= 0:
        return max(1, requested)
    return max(1, min(requested, int(_MAX_LOG_SPREAD_PER_RENORM / log_cond)))


@dataclass(frozen=True)
class BernoulliWeights:
    """Probability vector driving the i.i.d. symbol sequence."""

    p: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float).ravel()
        if p.size == 0:
            raise ValueError("weights must be nonempty")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ValueError("weights must be finite and nonnegative")
        if abs(p.sum() - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"weights sum to {p.sum()!r}, not 1")
        p = p.copy()
        p.flags.writeable = False
        object.__setattr__(self, "p", p)

    @property
    def n(self) -> int:
        return self.p.size

    @property
    def strictly_positive(self) -> bool:
        return bool(np.all(self.p > 0))

    @classmethod
    def uniform(cls, n: int) -> "BernoulliWeights":
        return cls(np.full(n, 1.0 / n))


@dataclass(frozen=True)
class LyapunovSpectrum:
    """Estimated exponents 0 < chi_1 <= ... <= chi_d in nats per symbol.

    ``multiplicities`` are the block sizes found by merging exponents whose
    gap is below ``gap_threshold``; ``trial_exponents`` holds the per-trial
    estimates behind ``stderr``.
    """

    exponents: np.ndarray
    stderr: np.ndarray | None
    multiplicities: tuple[int, ...]
    gap_threshold: float
    trial_exponents: np.ndarray | None = None

    def __post_init__(self):
        chi = np.asarray(self.exponents, dtype=float).ravel()
        if np.any(chi <= 0):
            raise ValueError("exponents must be positive for contractive cocycles")
        if np.any(np.diff(chi) < -1e-12):
            raise ValueError("exponents must be sorted ascending")
        chi = chi.copy()
        chi.flags.writeable = False
        object.__setattr__(self, "exponents", chi)
        if sum(self.multiplicities) != chi.size or any(m < 1 for m in self.multiplicities):
            raise ValueError(f"multiplicities {self.multiplicities} do not partition d={chi.size}")

    @property
    def d(self) -> int:
        return self.exponents.size

    @property
    def simple(self) -> bool:
        return all(m == 1 for m in self.multiplicities)

    def block_boundaries(self) -> tuple[int, ...]:
        """Cumulative block sizes d_1, d_1+d_2, ..., excluding the final d."""
        return tuple(np.cumsum(self.multiplicities)[:-1].tolist())


@dataclass(frozen=True)
class FlagSample:
    """One sampled flag together with the word that generated it."""

    flag: FlagChain
    word_prefix: np.ndarray


def as_map_stack(maps, d: int | None = None, require_contractive: bool = True) -> np.ndarray:
    """Stack a tuple of matrices into an (N, d, d) array, validating each."""
    mats = [
        check_contractive_invertible(m) if require_contractive else np.asarray(m, dtype=float)
        for m in maps
    ]
    if not mats:
        raise ValueError("need at least one map")
    stack = np.stack(mats)
    if stack.shape[1] != stack.shape[2]:
        raise ValueError("maps must be square matrices")
    if d is not None and stack.shape[1] != d:
        raise ValueError(f"expected {d}x{d} maps, got {stack.shape[1]}x{stack.shape[2]}")
    return stack


def sample_word(weights: BernoulliWeights, n: int, rng=None) -> np.ndarray:
    """Draw ``n`` i.i.d. symbols (0-based) with the given law."""
    if n < 1:
        raise ValueError("word length must be at least 1")
    rng = np.random.default_rng(rng)
    return rng.choice(weights.n, size=n, p=weights.p)


def _check_word(word, n_maps: int) -> np.ndarray:
    w = np.asarray(word, dtype=np.int64).ravel()
    if w.size and (w.min() < 0 or w.max() >= n_maps):
        raise ValueError(f"word symbols must lie in 0..{n_maps - 1}")
    return w


def word_product(maps, word) -> np.ndarray:
    """Left-to-right product of the maps named by ``word`` (empty -> identity)."""
    mats = as_map_stack(maps, require_contractive=False)
    w = _check_word(word, mats.shape[0])
    out = np.eye(mats.shape[1])
    for s in w:
        out = out @ mats[s]
    return out


def entropy(weights: BernoulliWeights) -> float:
    """Shannon entropy of the weights in nats."""
    p = weights.p[weights.p > 0]
    return float(-(p * np.log(p)).sum())


def _batched_qr_accumulate(q: np.ndarray, sums: np.ndarray) -> np.ndarray:
    """Re-orthonormalise a batch of frames, accumulating log growth in place."""
    q, r = np.linalg.qr(q)
    diag = np.abs(np.diagonal(r, axis1=-2, axis2=-1))
    sums += np.log(diag)
    return q


def _multiplicities_from_gaps(chi: np.ndarray, threshold: float) -> tuple[int, ...]:
    blocks = [1]
    for j in range(1, chi.size):
        if chi[j] - chi[j - 1] <= threshold:
            blocks[-1] += 1
        else:
            blocks.append(1)
    return tuple(blocks)


def lyapunov_spectrum(
    maps,
    weights: BernoulliWeights,
    steps: int,
    trials: int,
    rng=None,
    renorm_every: int = DEFAULT_RENORM_EVERY,
    gap_threshold: float | None = None,
) -> LyapunovSpectrum:
    """Estimate the Lyapunov spectrum of the i.i.d. matrix cocycle.

    Propagates one orthonormal d-frame per trial through ``steps`` random
    maps, re-orthonormalising every ``renorm_every`` steps and accumulating
    the log diagonal of R.  The column sums estimate the log singular values
    of the (never formed) product, so partial sums over the leading ``p``
    columns estimate ``chi_1 + ... + chi_p`` via the p-fold exterior norm.
    Exponents are the differenced column rates, sorted ascending per trial
    and averaged; ``stderr`` comes from the independent trials.

    Parameters
    ----------
    maps : sequence of (d, d) arrays
        Contractive invertible matrices.
    weights : BernoulliWeights
        Symbol law; one word of length ``steps`` is drawn per trial.
    steps, trials : int
        Word length (>= 100) and number of independent trials.
    rng : numpy Generator or int seed, optional
    renorm_every : int
        Requested steps between re-orthonormalisations; shortened
        automatically for badly conditioned maps (see
        :func:`safe_renorm_interval`).
    gap_threshold : float, optional
        Merge exponents closer than this into one block; defaults to
        ``0.05 * mean(chi)``.
    """
    mats = as_map_stack(maps)
    if steps < 100:
        raise ValueError("steps must be at least 100")
    if trials < 1:
        raise ValueError("trials must be at least 1")
    d = mats.shape[1]
    rng = np.random.default_rng(rng)
    renorm_every = safe_renorm_interval(mats, renorm_every)
    words = rng.choice(weights.n, size=(trials, steps), p=weights.p)

    q = np.broadcast_to(np.eye(d), (trials, d, d)).copy()
    sums = np.zeros((trials, d))
    for t in range(steps):
        q = mats[words[:, t]] @ q
        if (t + 1) % renorm_every == 0 or t == steps - 1:
            q = _batched_qr_accumulate(q, sums)

    per_trial = np.sort(-sums / steps, axis=1)
    chi = per_trial.mean(axis=0)
    stderr = per_trial.std(axis=0, ddof=1) / np.sqrt(trials) if trials > 1 else None
    threshold = 0.05 * float(chi.mean()) if gap_threshold is None else float(gap_threshold)
    mult = _multiplicities_from_gaps(chi, threshold)
    return LyapunovSpectrum(chi, stderr, mult, threshold, per_trial)


def exterior_partial_sum_estimate(
    maps,
    weights: BernoulliWeights,
    p: int,
    steps: int,
    trials: int,
    rng=None,
    renorm_every: int = DEFAULT_RENORM_EVERY,
) -> tuple[float, float | None]:
    """Estimate ``chi_1 + ... + chi_p`` through the p-fold compound cocycle.

    Independent of :func:`lyapunov_spectrum`: pushes one vector per trial
    through the compound matrices and reads the top growth rate, which equals
    minus the partial sum for contractive cocycles.  Returns (mean, stderr).
    """
    mats = as_map_stack(maps)
    d = mats.shape[1]
    if not 1 <= p <= d:
        raise ValueError(f"need 1 <= p <= {d}")
    compounds = np.stack([exterior_power(m, p) for m in mats])
    rng = np.random.default_rng(rng)
    renorm_every = safe_renorm_interval(compounds, renorm_every)
    words = rng.choice(weights.n, size=(trials, steps), p=weights.p)
    dim_c = compounds.shape[1]
    v = rng.standard_normal((trials, dim_c))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    sums = np.zeros(trials)
    for t in range(steps):
        v = np.einsum("nij,nj->ni", compounds[words[:, t]], v)
        if (t + 1) % renorm_every == 0 or t == steps - 1:
            norms = np.linalg.norm(v, axis=1)
            sums += np.log(norms)
            v /= norms[:, None]
    estimates = -sums / steps
    err = float(estimates.std(ddof=1) / np.sqrt(trials)) if trials > 1 else None
    return float(estimates.mean()), err


def _propagate_qr(
    use: np.ndarray, symbols: np.ndarray, renorm_every: int, q0: np.ndarray | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Apply ``use[s]`` for each symbol in order to a frame, with QR renorm.

    Returns the final orthonormal frame and the accumulated log growth of
    each column (an estimate of the log singular values, descending).
    """
    d = use.shape[1]
    q = np.eye(d) if q0 is None else np.array(q0, dtype=float)
    sums = np.zeros(q.shape[1])
    n = len(symbols)
    for t, s in enumerate(symbols):
        q = use[s] @ q
        if (t + 1) % renorm_every == 0 or t == n - 1:
            q, r = qr_positive(q)
            sums += np.log(np.abs(np.diag(r)))
    return q, sums


def oseledets_fast_flag(
    maps,
    word,
    depth: int,
    angle_tol: float = 1e-6,
    renorm_every: int = DEFAULT_RENORM_EVERY,
) -> FlagChain:
    """Estimate the nested slow subspaces of the inverse cocycle along ``word``.

    The k-dimensional member is the span of the k leading image directions of
    the forward product over the first ``depth`` symbols, equivalently the
    right-singular directions of the inverse-order product with the smallest
    singular values.  A split at k is accepted only where the observed
    singular-value ratio across it is below ``angle_tol / 10``; if no split
    qualifies a :class:`SpectralGapError` reports the best observed ratio.
    """
    mats = as_map_stack(maps)
    w = _check_word(word, mats.shape[0])
    if depth < 1 or depth > w.size:
        raise ValueError(f"depth must be in 1..{w.size}")
    d = mats.shape[1]
    if d == 1:
        raise SpectralGapError("no flags exist in ambient dimension 1", observed_gap=1.0)
    renorm_every = safe_renorm_interval(mats, renorm_every)
    # product A_{w0} A_{w1} ... applied to a frame: iterate the word backwards
    q, sums = _propagate_qr(mats, w[:depth][::-1], renorm_every)
    # identity starts on axis-aligned systems keep columns in axis order, so
    # sort by observed growth before reading off the flag
    order = np.argsort(-sums, kind="stable")
    q, sums = q[:, order], sums[order]
    ratios = np.exp(sums[1:] - sums[:-1])  # sigma_{k+1}/sigma_k at this depth
    splits = [k for k in range(1, d) if ratios[k - 1] <= angle_tol / 10.0]
    if not splits:
        raise SpectralGapError(
            f"no singular-value split below {angle_tol / 10.0:g} at depth {depth}"
            f" (best ratio {ratios.min():.3g})",
            observed_gap=float(ratios.min()),
        )
    frames = [SubspaceFrame(q[:, :k]) for k in sorted(splits, reverse=True)]
    return FlagChain(tuple(frames))


def _flag_dims_from_multiplicities(mult: tuple[int, ...], d: int) -> tuple[int, ...]:
    cums = np.cumsum(mult)[:-1]
    return tuple(int(d - c) for c in cums)


def furstenberg_sample(
    maps,
    weights: BernoulliWeights,
    iterations: int,
    count: int,
    rng=None,
    dims: tuple[int, ...] | None = None,
    spectrum: LyapunovSpectrum | None = None,
    renorm_every: int = DEFAULT_RENORM_EVERY,
    probe_steps: int = 2000,
    probe_trials: int = 6,
) -> list[FlagSample]:
    """Sample the stationary flag distribution of the inverse matrix action.

    Each sample applies the inverses of ``iterations`` i.i.d. maps to an
    independent random orthonormal frame, first symbol outermost, so the
    returned flag is the one carried to time zero along the word; for large
    ``iterations`` its law approximates the stationary distribution.  Flag
    dimensions default to the blocks of ``spectrum`` (estimated with a short
    probe run when not supplied); with a single block there is no invariant
    flag and a :class:`SpectralGapError` is raised.

    Samples are drawn and reduced in index order, so output is deterministic
    given the seed.
    """
    mats = as_map_stack(maps)
    d = mats.shape[1]
    rng = np.random.default_rng(rng)
    if iterations < 1 or count < 1:
        raise ValueError("iterations and count must be positive")
    if dims is None:
        if spectrum is None:
            spectrum = lyapunov_spectrum(maps, weights, probe_steps, probe_trials, rng)
        if len(spectrum.multiplicities) == 1:
            raise SpectralGapError(
                "no spectral gap detected: all exponents fall in one block",
                observed_gap=0.0,
            )
        dims = _flag_dims_from_multiplicities(spectrum.multiplicities, d)
    dims = tuple(int(k) for k in dims)
    if not dims or any(not 0 < k < d for k in dims) or any(
        b >= a for a, b in zip(dims, dims[1:])
    ):
        raise ValueError(f"flag dims must be strictly decreasing within 1..{d - 1}, got {dims}")

    invs = np.linalg.inv(mats)
    renorm_every = safe_renorm_interval(mats, renorm_every)
    words = rng.choice(weights.n, size=(count, iterations), p=weights.p)
    g = rng.standard_normal((count, d, d))
    q, r = np.linalg.qr(g)
    signs = np.sign(np.diagonal(r, axis1=-2, axis2=-1))
    signs[signs == 0] = 1.0
    q = q * signs[:, None, :]

    applied = 0
    dummy = np.zeros((count, d))
    for t in range(iterations - 1, -1, -1):
        q = invs[words[:, t]] @ q
        applied += 1
        if applied % renorm_every == 0 or t == 0:
            q = _batched_qr_accumulate(q, dummy)

    samples = []
    for i in range(count):
        frames = tuple(SubspaceFrame(q[i][:, :k]) for k in dims)
        samples.append(FlagSample(FlagChain(frames), words[i].copy()))
    return samples


def furstenberg_step(
    maps, weights: BernoulliWeights, samples: list[FlagSample], rng=None
) -> list[FlagSample]:
    """Push each sampled flag through one more inverse-map step.

    Draws one symbol per sample and maps its flag through the corresponding
    inverse matrix; the symbol is prepended to the stored word.  For a
    converged sample set the empirical flag distribution is unchanged in law,
    which is the stationarity self-test.
    """
    mats = as_map_stack(maps)
    invs = np.linalg.inv(mats)
    rng = np.random.default_rng(rng)
    symbols = rng.choice(weights.n, size=len(samples), p=weights.p)
    out = []
    for s, sample in zip(symbols, samples):
        frames = []
        for f in sample.flag.frames:
            q, _ = qr_positive(invs[s] @ f.frame)
            frames.append(SubspaceFrame(q))
        word = np.concatenate(([s], sample.word_prefix))
        out.append(FlagSample(FlagChain(tuple(frames)), word))
    return out
