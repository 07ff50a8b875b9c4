"""Dominated-splitting detection and invariant bundle estimation.

Scans singular-value gap ratios over all words up to a budgeted length,
fits decay rates to decide domination per index, checks the strict
total-positivity sufficient condition and its exterior-cone form, and
estimates the strongly/weakly contracted bundles together with the
subspaces that split the space between consecutive dominated indices.

Index convention: index ``i`` (1-based, in ``1..d-1``) names the gap between
the i-th and (i+1)-th largest singular values; it equals the dimension of the
weakly contracted bundle at that index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cocycle import _check_word, _propagate_qr, as_map_stack, safe_renorm_interval
from .errors import BudgetExceededError, SpectralGapError, SubspaceInconsistencyError
from .linalg import (
    INTERSECTION_TOL,
    SubspaceFrame,
    exterior_power,
    principal_angle_distance,
    qr_positive,
    smallest_principal_angle,
    subspace_intersection,
)

__all__ = [
    "EPS_SLOPE",
    "EPS_MINOR",
    "bundle_growth_ratios",
    "GapRatioTable",
    "IndexDomination",
    "DominationReport",
    "StpCheck",
    "BundleEstimate",
    "SplittingDecomposition",
    "gap_ratio_scan",
    "gap_ratio_scan_monte_carlo",
    "detect_domination",
    "stp_check",
    "cone_invariance_check",
    "strong_stable_bundle",
    "splitting_subspaces",
]

EPS_SLOPE = 0.01
EPS_MINOR = 1e-12
DEFAULT_WORD_BUDGET = 10**6
MIN_FIT_LENGTH = 6
RESIDUAL_TOL = 0.5


@dataclass(frozen=True)
class GapRatioTable:
    """Per-length maxima of the singular-value gap ratios, in log space.

    ``log_ratios[n, j]`` is the max over all (or sampled) words of length
    ``n`` of ``log(alpha_{i+1}/alpha_i)`` for math index ``i = j + 1``, where
    ``alpha`` are singular values in descending order.  Row 0 is the identity.
    """

    d: int
    n_max: int
    log_ratios: np.ndarray
    method: str
    products_examined: int

    def __post_init__(self):
        lr = np.asarray(self.log_ratios, dtype=float)
        if lr.shape != (self.n_max + 1, max(self.d - 1, 0)):
            raise ValueError(f"table shape {lr.shape} does not match n_max={self.n_max}, d={self.d}")
        lr = lr.copy()
        lr.flags.writeable = False
        object.__setattr__(self, "log_ratios", lr)

    def log_ratio_for_index(self, i: int) -> np.ndarray:
        """Column of per-length max log ratios for math index ``i``."""
        if not 1 <= i <= self.d - 1:
            raise ValueError(f"index must be in 1..{self.d - 1}")
        return self.log_ratios[:, i - 1]


def _compound_stack(mats: np.ndarray) -> list[np.ndarray]:
    """Compound matrices of each map for every order p = 1..d."""
    d = mats.shape[1]
    return [np.stack([exterior_power(m, p) for m in mats]) for p in range(1, d + 1)]


def _log_ratios_from_compound_norms(log_norms: np.ndarray) -> np.ndarray:
    """Second difference of ``log ||wedge^p||`` gives per-index log gap ratios."""
    padded = np.concatenate(([0.0], log_norms))
    return padded[2:] - 2.0 * padded[1:-1] + padded[:-2]


def gap_ratio_scan(maps, n_max: int, budget: int = DEFAULT_WORD_BUDGET) -> GapRatioTable:
    """Exact per-length maxima of gap ratios over every word up to ``n_max``.

    Words are enumerated depth-first; each node keeps the normalised compound
    products of its word (one per exterior order) so children reuse them.
    Raises :class:`BudgetExceededError` when ``N ** n_max`` exceeds ``budget``;
    use :func:`gap_ratio_scan_monte_carlo` beyond the budget.
    """
    mats = as_map_stack(maps)
    n_maps, d = mats.shape[0], mats.shape[1]
    if n_max < 0:
        raise ValueError("n_max must be nonnegative")
    if n_maps**n_max > budget:
        raise BudgetExceededError(
            f"{n_maps}^{n_max} words exceed the {budget} product budget; "
            "use gap_ratio_scan_monte_carlo for sampled maxima"
        )
    compounds = _compound_stack(mats)
    best = np.full((n_max + 1, max(d - 1, 0)), -np.inf)
    best[0, :] = 0.0
    products_examined = 0

    # stack entries: (depth, normalised compound products, their log norms)
    ident = [(np.eye(c.shape[1]), 0.0) for c in compounds]
    stack = [(0, ident)]
    while stack:
        depth, prods = stack.pop()
        if depth > 0:
            log_norms = np.array([off for _, off in prods])
            ratios = _log_ratios_from_compound_norms(log_norms)
            best[depth, :] = np.maximum(best[depth, :], ratios)
        if depth == n_max:
            continue
        for k in range(n_maps):
            child = []
            for p, (mat, off) in enumerate(prods):
                nxt = mat @ compounds[p][k]
                norm = np.linalg.norm(nxt, 2)
                child.append((nxt / norm, off + np.log(norm)))
            products_examined += 1
            stack.append((depth + 1, child))
    return GapRatioTable(d, n_max, best, "exhaustive", products_examined)


def gap_ratio_scan_monte_carlo(
    maps, n_max: int, samples: int = 512, rng=None
) -> GapRatioTable:
    """Sampled per-length maxima of gap ratios (lower bounds on the true max).

    Draws ``samples`` uniform words of length ``n_max`` and records ratios at
    every prefix, reusing the running compound products.
    """
    mats = as_map_stack(maps)
    n_maps, d = mats.shape[0], mats.shape[1]
    if n_max < 1:
        raise ValueError("n_max must be positive")
    rng = np.random.default_rng(rng)
    compounds = _compound_stack(mats)
    words = rng.integers(0, n_maps, size=(samples, n_max))
    best = np.full((n_max + 1, max(d - 1, 0)), -np.inf)
    best[0, :] = 0.0
    prods = [np.broadcast_to(np.eye(c.shape[1]), (samples, c.shape[1], c.shape[1])).copy()
             for c in compounds]
    offsets = np.zeros((samples, d))
    for t in range(n_max):
        log_norms = np.empty((samples, d))
        for p in range(d):
            prods[p] = compounds[p][words[:, t]] @ prods[p]
            norms = np.linalg.norm(prods[p], ord=2, axis=(1, 2))
            offsets[:, p] += np.log(norms)
            prods[p] /= norms[:, None, None]
            log_norms[:, p] = offsets[:, p]
        padded = np.concatenate([np.zeros((samples, 1)), log_norms], axis=1)
        ratios = padded[:, 2:] - 2.0 * padded[:, 1:-1] + padded[:, :-2]
        if d > 1:
            best[t + 1, :] = ratios.max(axis=0)
    return GapRatioTable(d, n_max, best, "monte-carlo", samples * n_max)


@dataclass(frozen=True)
class IndexDomination:
    """Fitted decay diagnosis for one gap index."""

    index: int
    status: str  # dominated | non-dominated | inconclusive
    decay_rate: float
    constant_estimate: float
    n_max: int


@dataclass(frozen=True)
class DominationReport:
    """Per-index domination statuses plus the thresholds used."""

    indices: tuple[IndexDomination, ...]
    eps_slope: float
    residual_tol: float

    def __post_init__(self):
        for item in self.indices:
            if item.status == "dominated" and not item.decay_rate < -self.eps_slope:
                raise ValueError(
                    f"index {item.index} marked dominated but decay rate "
                    f"{item.decay_rate:.4g} is not below -{self.eps_slope}"
                )

    @property
    def dominated_indices(self) -> tuple[int, ...]:
        return tuple(it.index for it in self.indices if it.status == "dominated")

    @property
    def tds_verified(self) -> bool:
        """True when every index got a definite answer (no inconclusive)."""
        return all(it.status != "inconclusive" for it in self.indices)

    def for_index(self, i: int) -> IndexDomination:
        for it in self.indices:
            if it.index == i:
                return it
        raise KeyError(f"no diagnosis for index {i}")


def detect_domination(
    table: GapRatioTable,
    eps_slope: float = EPS_SLOPE,
    residual_tol: float = RESIDUAL_TOL,
) -> DominationReport:
    """Decide domination per index from a gap-ratio table.

    Fits ``log max-ratio ~ intercept + rate * n`` over lengths ``1..n_max``.
    An index is dominated when the rate is below ``-eps_slope`` with a tight
    fit, non-dominated when the rate is above with a tight fit (ratios stay
    bounded below), and inconclusive otherwise -- never guessed.  The reported
    constant is the smallest C with ``max-ratio <= C * exp(rate * n)`` over
    every observed length.
    """
    if table.n_max < MIN_FIT_LENGTH:
        raise ValueError(f"table must cover lengths up to at least {MIN_FIT_LENGTH}")
    lengths = np.arange(1, table.n_max + 1, dtype=float)
    items = []
    for i in range(1, table.d):
        y = table.log_ratio_for_index(i)[1:]
        rate, intercept = np.polyfit(lengths, y, 1)
        resid = np.max(np.abs(y - (rate * lengths + intercept)))
        if rate < -eps_slope and resid <= residual_tol:
            status = "dominated"
        elif rate >= -eps_slope and resid <= residual_tol:
            status = "non-dominated"
        else:
            status = "inconclusive"
        all_lengths = np.arange(0, table.n_max + 1, dtype=float)
        constant = float(np.exp(np.max(table.log_ratio_for_index(i) - rate * all_lengths)))
        items.append(IndexDomination(i, status, float(rate), constant, table.n_max))
    return DominationReport(tuple(items), eps_slope, residual_tol)


@dataclass(frozen=True)
class StpCheck:
    """Outcome of the strict total-positivity test.

    ``is_stp`` covers minors of order up to d-1 (the defining range);
    the determinant sign is reported separately.
    """

    is_stp: bool
    det_positive: bool
    min_minor: float

    def __bool__(self) -> bool:
        return self.is_stp


def stp_check(a, eps_minor: float = EPS_MINOR) -> StpCheck:
    """Check that every minor of order 1..d-1 exceeds ``eps_minor``."""
    arr = np.asarray(a, dtype=float)
    d = arr.shape[0]
    min_minor = np.inf
    for p in range(1, d):
        min_minor = min(min_minor, float(exterior_power(arr, p).min()))
    det = float(np.linalg.det(arr))
    return StpCheck(bool(min_minor > eps_minor), det > eps_minor, min_minor)


def cone_invariance_check(maps, p: int, eps_minor: float = EPS_MINOR) -> bool:
    """Strict invariance of the positive p-fold exterior orthant.

    True when every entry of every p-th compound is strictly positive, so the
    closed positive orthant of the exterior power maps into its interior.
    """
    mats = as_map_stack(maps, require_contractive=False)
    d = mats.shape[1]
    if not 1 <= p <= d - 1:
        raise ValueError(f"need 1 <= p <= {d - 1}")
    return all(exterior_power(m, p).min() > eps_minor for m in mats)


@dataclass(frozen=True)
class BundleEstimate:
    """Estimated invariant splitting at one dominated index.

    ``fast`` is the (d-i)-dimensional strongly contracted bundle (read off
    the forward word), ``slow`` the i-dimensional weakly contracted bundle
    (read off the backward word).  ``angle_lower_bound`` is the smallest
    principal angle between them, ``growth_ratio_sup`` the observed supremum
    of ``||A^(n) restricted to fast|| / alpha_{i+1}(A^(n))``.
    """

    index: int
    fast: SubspaceFrame
    slow: SubspaceFrame
    angle_lower_bound: float
    word: np.ndarray
    past_word: np.ndarray
    equivariance_angle: float
    growth_ratio_sup: float

    def __post_init__(self):
        if self.fast.d != self.slow.d or self.fast.k + self.slow.k != self.fast.d:
            raise SubspaceInconsistencyError(
                f"bundle dims {self.fast.k}+{self.slow.k} do not split R^{self.fast.d}"
            )
        if not self.angle_lower_bound > 0:
            raise SubspaceInconsistencyError("bundles are not numerically transversal")



def bundle_growth_ratios(
    maps, word, frame: SubspaceFrame, index: int, depth: int
) -> np.ndarray:
    """Per-step ratios ``||A^(n)|frame|| / alpha_{index+1}(A^(n))``, log-stable.

    Both the restricted norm and the singular value are accumulated through
    QR-renormalised frame propagation (one step at a time), so deep products
    whose singular values underflow raw double precision stay resolvable.
    """
    mats = as_map_stack(maps)
    d = mats.shape[1]
    if not 1 <= index <= d - 1:
        raise ValueError(f"index must be in 1..{d - 1}")
    w = _check_word(word, mats.shape[0])
    if depth < 1 or depth > w.size:
        raise ValueError(f"depth must be in 1..{w.size}")
    if frame.d != d:
        raise ValueError("frame ambient dimension does not match the maps")
    qf = frame.frame.copy()
    qa = np.eye(d)
    sums_f = np.zeros(frame.k)
    sums_a = np.zeros(d)
    out = np.empty(depth)
    for n in range(depth):
        a = mats[w[n]]
        qf, rf = qr_positive(a @ qf)
        sums_f += np.log(np.abs(np.diag(rf)))
        qa, ra = qr_positive(a @ qa)
        sums_a += np.log(np.abs(np.diag(ra)))
        alpha = np.sort(sums_a)[::-1][index]
        out[n] = np.exp(sums_f.max() - alpha)
    return out


def _sorted_growth_frame(use: np.ndarray, symbols: np.ndarray, renorm_every: int):
    q, sums = _propagate_qr(use, symbols, renorm_every)
    order = np.argsort(-sums, kind="stable")
    return q[:, order], sums[order]


def strong_stable_bundle(
    maps,
    word,
    i: int,
    depth: int,
    domination: DominationReport,
    past_word=None,
    renorm_every: int = 10,
    gap_tol: float = 1e-5,
    equiv_tol: float = 1e-4,
) -> BundleEstimate:
    """Estimate the invariant bundles at dominated index ``i`` along a word.

    The fast bundle is the span of the d-i most contracted right-singular
    directions of the forward product over ``word[:depth]``; the slow bundle
    comes symmetrically from the ``i`` dominant image directions of the
    product over ``past_word`` (the same word by default, read as the past).
    Verifies the one-step equivariance of the fast bundle to ``equiv_tol``
    and records the supremum of the restricted-norm growth ratio.

    Raises ``ValueError`` if ``i`` is not dominated in ``domination`` and
    :class:`SpectralGapError` when the depth leaves the split ambiguous.
    """
    mats = as_map_stack(maps)
    d = mats.shape[1]
    if i not in domination.dominated_indices:
        raise ValueError(f"index {i} is not dominated; refusing to estimate bundles")
    w = _check_word(word, mats.shape[0])
    if depth < 2 or depth + 1 > w.size:
        raise ValueError("need 2 <= depth <= len(word) - 1")
    past = w if past_word is None else _check_word(past_word, mats.shape[0])

    renorm_every = safe_renorm_interval(mats, renorm_every)
    invs = np.linalg.inv(mats)
    # fast bundle: dominant image directions of the inverse-order product
    q_f, sums_f = _sorted_growth_frame(invs, w[:depth][::-1], renorm_every)
    gap_f = float(np.exp(sums_f[d - i] - sums_f[d - i - 1]))
    # slow bundle: dominant image directions of the past product
    q_s, sums_s = _sorted_growth_frame(mats, past[:depth][::-1], renorm_every)
    gap_s = float(np.exp(sums_s[i] - sums_s[i - 1]))
    worst = max(gap_f, gap_s)
    if worst > gap_tol:
        raise SpectralGapError(
            f"depth {depth} leaves gap ratio {worst:.3g} above {gap_tol:g} at index {i}",
            observed_gap=worst,
        )
    fast = SubspaceFrame(q_f[:, : d - i])
    slow = SubspaceFrame(q_s[:, :i])

    # one-step equivariance: the map by A_{w0} carries the bundle forward
    q_shift, _ = _sorted_growth_frame(invs, w[1 : depth + 1][::-1], renorm_every)
    shifted = SubspaceFrame(q_shift[:, : d - i])
    pushed = SubspaceFrame.from_span(mats[w[0]] @ fast.frame)
    equiv = principal_angle_distance(pushed, shifted)
    if equiv > equiv_tol:
        raise SpectralGapError(
            f"fast bundle equivariance residual {equiv:.3g} exceeds {equiv_tol:g}; "
            "increase depth",
            observed_gap=equiv,
        )

    sup_ratio = float(bundle_growth_ratios(maps, w, fast, i, depth).max())

    angle = smallest_principal_angle(fast, slow)
    return BundleEstimate(i, fast, slow, angle, w[:depth].copy(), past[:depth].copy(),
                          float(equiv), float(sup_ratio))


@dataclass(frozen=True)
class SplittingDecomposition:
    """Direct-sum pieces between consecutive dominated indices."""

    subspaces: tuple[SubspaceFrame, ...]
    indices: tuple[int, ...]
    pairwise_min_angle: float
    gram_min_singular: float


def splitting_subspaces(
    bundles: list[BundleEstimate], tol: float = INTERSECTION_TOL
) -> SplittingDecomposition:
    """Intersect consecutive bundle estimates into the splitting subspaces.

    With dominated indices ``i_1 < ... < i_k``, the pieces are the slow
    bundle at ``i_1``, the intersections ``slow(i_j) ^ fast(i_{j-1})``, and
    the fast bundle at ``i_k``; their dimensions are the index increments and
    they must span the whole space.
    """
    if not bundles:
        raise ValueError("need at least one bundle estimate")
    bundles = sorted(bundles, key=lambda b: b.index)
    idx = [b.index for b in bundles]
    if len(set(idx)) != len(idx):
        raise ValueError(f"duplicate indices in bundle estimates: {idx}")
    d = bundles[0].fast.d

    pieces = [bundles[0].slow]
    for prev, cur in zip(bundles, bundles[1:]):
        inter = subspace_intersection(cur.slow, prev.fast, tol)
        expected = cur.index - prev.index
        got = 0 if inter is None else inter.k
        if got != expected:
            raise SubspaceInconsistencyError(
                f"intersection at indices {prev.index},{cur.index} has dimension "
                f"{got}, expected {expected}"
            )
        pieces.append(inter)
    pieces.append(bundles[-1].fast)

    if sum(p.k for p in pieces) != d:
        raise SubspaceInconsistencyError(
            f"splitting dims {[p.k for p in pieces]} do not sum to {d}"
        )
    combined = np.hstack([p.frame for p in pieces])
    gram_min = float(np.linalg.svd(combined, compute_uv=False).min())
    min_angle = np.pi / 2
    for a in range(len(pieces)):
        for b in range(a + 1, len(pieces)):
            min_angle = min(min_angle, smallest_principal_angle(pieces[a], pieces[b]))
    return SplittingDecomposition(tuple(pieces), tuple(idx), float(min_angle), gram_min)
