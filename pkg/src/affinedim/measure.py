"""Affine iterated function systems and their stationary measures.

Natural projection of symbol words to points, seeded sampling of the
stationary measure, certified separation checks on cylinder hulls, the
one-dimension-up lift that always separates, projections of sampled clouds,
and pointwise (ball-mass slope) dimension estimation.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.spatial import cKDTree

from .cocycle import BernoulliWeights, as_map_stack, _check_word
from .linalg import SubspaceFrame, singular_values

__all__ = [
    "IfsSystem",
    "PointCloud",
    "SeparationVerdict",
    "BoxCheck",
    "SelfAffinityReport",
    "LiftedIfs",
    "LocalDimensionReport",
    "BoxCountReport",
    "natural_projection",
    "sample_measure",
    "self_affinity_check",
    "check_separation",
    "lift_ifs",
    "project_cloud",
    "local_dimension_estimate",
    "box_counting_dimension",
    "cloud_to_csv",
    "cloud_from_csv",
]

DEFAULT_SEPARATION_BUDGET = 10**6
DEFAULT_RADII_COUNT = 24
DEFAULT_RADII_RATIO = 0.8
MIN_USABLE_RADII = 20


@dataclass(frozen=True)
class IfsSystem:
    """Affine maps ``x -> A_i x + t_i`` with Bernoulli weights."""

    matrices: np.ndarray
    translations: np.ndarray
    weights: BernoulliWeights

    def __post_init__(self):
        mats = as_map_stack(list(np.asarray(self.matrices, dtype=float)))
        ts = np.asarray(self.translations, dtype=float)
        if ts.shape != (mats.shape[0], mats.shape[1]):
            raise ValueError(
                f"translations shape {ts.shape} does not match {mats.shape[0]} maps in R^{mats.shape[1]}"
            )
        if not np.all(np.isfinite(ts)):
            raise ValueError("translations have non-finite entries")
        if self.weights.n != mats.shape[0]:
            raise ValueError(f"{self.weights.n} weights for {mats.shape[0]} maps")
        mats = mats.copy()
        ts = ts.copy()
        mats.flags.writeable = False
        ts.flags.writeable = False
        object.__setattr__(self, "matrices", mats)
        object.__setattr__(self, "translations", ts)

    @property
    def n_maps(self) -> int:
        return self.matrices.shape[0]

    @property
    def d(self) -> int:
        return self.matrices.shape[1]

    @cached_property
    def top_singular_values(self) -> np.ndarray:
        return np.array([singular_values(m)[-1] for m in self.matrices])

    @cached_property
    def bottom_singular_values(self) -> np.ndarray:
        return np.array([singular_values(m)[0] for m in self.matrices])

    @cached_property
    def bounding_radius(self) -> float:
        """Radius R with the attractor inside the ball B(0, R)."""
        tmax = float(np.linalg.norm(self.translations, axis=1).max())
        return tmax / (1.0 - float(self.top_singular_values.max()))

    def apply(self, i: int, x) -> np.ndarray:
        """Apply map ``i`` to a point or an (..., d) array of points."""
        pts = np.asarray(x, dtype=float)
        return pts @ self.matrices[i].T + self.translations[i]

    def map_fixed_point(self, i: int) -> np.ndarray:
        return np.linalg.solve(np.eye(self.d) - self.matrices[i], self.translations[i])


@dataclass(frozen=True)
class PointCloud:
    """Sampled points with their generating words and truncation bounds.

    ``words`` and ``errors`` are ``None`` for synthetic clouds that came
    from somewhere other than an IFS.
    """

    points: np.ndarray
    words: np.ndarray | None
    errors: np.ndarray | None
    depth: int | None
    seed: int | None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2:
            raise ValueError("points must be an (m, k) array")
        pts = pts.copy()
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)
        if self.words is not None:
            w = np.asarray(self.words, dtype=np.int64)
            if w.shape[0] != pts.shape[0]:
                raise ValueError("one word per point required")
            w = w.copy()
            w.flags.writeable = False
            object.__setattr__(self, "words", w)
        if self.errors is not None:
            e = np.asarray(self.errors, dtype=float).copy()
            if e.shape != (pts.shape[0],):
                raise ValueError("one truncation bound per point required")
            e.flags.writeable = False
            object.__setattr__(self, "errors", e)

    @property
    def m(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @classmethod
    def from_points(cls, points) -> "PointCloud":
        """Wrap raw points (no words) for diagnostics on synthetic data."""
        return cls(np.asarray(points, dtype=float), None, None, None, None)


def natural_projection(ifs: IfsSystem, word) -> tuple[np.ndarray, float]:
    """Point coded by a finite word, plus its truncation error bound.

    Evaluates ``f_{w0} o ... o f_{w_{n-1}}`` at the origin by a backward
    (Horner) pass; the true limit point of any extension of the word is
    within ``R * prod(alpha_1(A_{w_k}))`` of the result.
    """
    w = _check_word(word, ifs.n_maps)
    if w.size == 0:
        raise ValueError("word must be nonempty")
    x = np.zeros(ifs.d)
    for s in w[::-1]:
        x = ifs.matrices[s] @ x + ifs.translations[s]
    err = ifs.bounding_radius * float(np.prod(ifs.top_singular_values[w]))
    return x, err


def sample_measure(ifs: IfsSystem, count: int, depth: int, rng=None) -> PointCloud:
    """Draw ``count`` approximate samples of the stationary measure.

    Words of length ``depth`` are drawn i.i.d. from the weights and pushed
    through :func:`natural_projection` (vectorised); per-point truncation
    bounds are recorded.  Deterministic given the seed.
    """
    if count < 1 or depth < 1:
        raise ValueError("count and depth must be positive")
    seed = rng if isinstance(rng, (int, np.integer)) else None
    rng = np.random.default_rng(rng)
    words = rng.choice(ifs.n_maps, size=(count, depth), p=ifs.weights.p)
    pts = np.zeros((count, ifs.d))
    for k in range(depth - 1, -1, -1):
        sel = words[:, k]
        pts = np.einsum("nij,nj->ni", ifs.matrices[sel], pts) + ifs.translations[sel]
    errors = ifs.bounding_radius * np.prod(ifs.top_singular_values[words], axis=1)
    return PointCloud(pts, words, errors, depth, None if seed is None else int(seed))


@dataclass(frozen=True)
class BoxCheck:
    lo: np.ndarray
    hi: np.ndarray
    mass: float
    pushed_mass: float
    tolerance: float
    status: str  # pass | fail | skipped


@dataclass(frozen=True)
class SelfAffinityReport:
    boxes: tuple[BoxCheck, ...]
    max_discrepancy: float

    @property
    def all_pass(self) -> bool:
        return all(b.status == "pass" for b in self.boxes if b.status != "skipped")


def self_affinity_check(
    cloud: PointCloud, ifs: IfsSystem, boxes, min_count: int = 20
) -> SelfAffinityReport:
    """Empirical check of the stationarity identity on axis boxes.

    For each box B compares the sample mass of B with the weight-average of
    the masses of the map preimages (measured by pushing every sample through
    each map), at tolerance ``3 sqrt(mass / m)``.  Boxes holding fewer than
    ``min_count`` samples are skipped, except exact 0 == 0 which passes.
    """
    pts = cloud.points
    m = cloud.m
    pushed_pts = [ifs.apply(i, pts) for i in range(ifs.n_maps)]
    checks = []
    max_disc = 0.0
    radius = ifs.bounding_radius
    for lo, hi in boxes:
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        if lo.shape != (ifs.d,) or hi.shape != (ifs.d,) or np.any(lo > hi):
            raise ValueError(f"bad box ({lo}, {hi})")
        nearest = np.clip(np.zeros(ifs.d), lo, hi)
        if np.linalg.norm(nearest) > radius + 1e-9:
            raise ValueError("box lies outside the attractor's bounding ball")
        inside = np.all((pts >= lo) & (pts <= hi), axis=1)
        count = int(inside.sum())
        mass = count / m
        pushed = sum(
            p * np.mean(np.all((fp >= lo) & (fp <= hi), axis=1))
            for p, fp in zip(ifs.weights.p, pushed_pts)
        )
        tol = 3.0 * np.sqrt(max(mass, 1.0 / m) / m)
        disc = abs(mass - pushed)
        if count == 0 and pushed == 0.0:
            status = "pass"
        elif count < min_count:
            status = "skipped"
        else:
            status = "pass" if disc <= tol else "fail"
        if status != "skipped":
            max_disc = max(max_disc, disc)
        checks.append(BoxCheck(lo, hi, mass, float(pushed), float(tol), status))
    return SelfAffinityReport(tuple(checks), max_disc)


@dataclass(frozen=True)
class SeparationVerdict:
    status: str  # ssc-verified | overlap-detected | inconclusive
    witness_words: tuple[tuple[int, ...], tuple[int, ...]] | None
    witness_gap: float
    level: int


def _enumerate_cylinders(ifs: IfsSystem, level: int):
    """Centers, hull radii, first symbols, and point samples of all level-n cylinders."""
    radius = ifs.bounding_radius
    q0 = ifs.map_fixed_point(0)
    centers, radii, firsts, samples, words = [], [], [], [], []
    stack = [((), np.eye(ifs.d), np.zeros(ifs.d))]
    while stack:
        word, mat, shift = stack.pop()
        if len(word) == level:
            centers.append(shift)
            radii.append(np.linalg.norm(mat, 2) * radius)
            firsts.append(word[0])
            samples.append(mat @ q0 + shift)
            words.append(word)
            continue
        for k in range(ifs.n_maps):
            stack.append((word + (k,), mat @ ifs.matrices[k], mat @ ifs.translations[k] + shift))
    return (np.array(centers), np.array(radii), np.array(firsts), np.array(samples), words)


def check_separation(
    ifs: IfsSystem,
    level: int,
    budget: int = DEFAULT_SEPARATION_BUDGET,
    guard: float | None = None,
    resolution: float | None = None,
) -> SeparationVerdict:
    """Certify strong separation, detect overlap, or report inconclusive.

    Every first-level cylinder is covered by the bounding balls of its
    level-``level`` refinements, so pairwise-positive gaps between balls of
    different first symbols certify disjoint first-level images.  Overlap is
    declared when point samples from different first-level cylinders coincide
    within ``resolution``.  Anything else is honestly inconclusive.
    """
    if level < 1:
        raise ValueError("level must be positive")
    if level * ifs.n_maps**level > budget:
        raise ValueError(
            f"level {level} needs {level * ifs.n_maps ** level} products, over budget {budget}"
        )
    scale = 1.0 + ifs.bounding_radius
    guard = 1e-12 * scale if guard is None else guard
    resolution = 1e-9 * scale if resolution is None else resolution

    centers, radii, firsts, samples, words = _enumerate_cylinders(ifs, level)
    rmax = float(radii.max())
    tree = cKDTree(centers)

    pairs = tree.query_pairs(r=2.0 * rmax + guard, output_type="ndarray")
    if pairs.size:
        cross = pairs[firsts[pairs[:, 0]] != firsts[pairs[:, 1]]]
    else:
        cross = np.empty((0, 2), dtype=int)

    if cross.size:
        dists = np.linalg.norm(centers[cross[:, 0]] - centers[cross[:, 1]], axis=1)
        gaps = dists - radii[cross[:, 0]] - radii[cross[:, 1]]
        worst = int(np.argmin(gaps))
        worst_pair = (words[cross[worst, 0]], words[cross[worst, 1]])
        if gaps[worst] > guard:
            return SeparationVerdict("ssc-verified", worst_pair, float(gaps[worst]), level)
        # hulls touch or overlap: look for coinciding attractor points
        ptree = cKDTree(samples)
        ppairs = ptree.query_pairs(r=resolution, output_type="ndarray")
        if ppairs.size:
            pcross = ppairs[firsts[ppairs[:, 0]] != firsts[ppairs[:, 1]]]
            if pcross.size:
                pd = np.linalg.norm(samples[pcross[:, 0]] - samples[pcross[:, 1]], axis=1)
                hit = int(np.argmin(pd))
                return SeparationVerdict(
                    "overlap-detected",
                    (words[pcross[hit, 0]], words[pcross[hit, 1]]),
                    float(pd[hit]),
                    level,
                )
        return SeparationVerdict("inconclusive", worst_pair, float(gaps[worst]), level)

    # no near pairs at all: certified; report the nearest cross-cylinder gap
    best_gap, best_pair = np.inf, None
    group_idx = {g: np.flatnonzero(firsts == g) for g in np.unique(firsts)}
    group_trees = {g: cKDTree(centers[idx]) for g, idx in group_idx.items()}
    for g, idx_g in group_idx.items():
        for h, idx_h in group_idx.items():
            if h <= g:
                continue
            dd, jj = group_trees[h].query(centers[idx_g], k=1)
            gaps = dd - radii[idx_g] - radii[idx_h[jj]]
            a = int(np.argmin(gaps))
            if gaps[a] < best_gap:
                best_gap = float(gaps[a])
                best_pair = (words[idx_g[a]], words[idx_h[jj[a]]])
    return SeparationVerdict("ssc-verified", best_pair, best_gap, level)


@dataclass(frozen=True)
class LiftedIfs:
    """A system lifted one dimension up so that it strongly separates."""

    ifs: IfsSystem
    rho: float
    taus: np.ndarray


def lift_ifs(ifs: IfsSystem, rho: float | None = None) -> LiftedIfs:
    """Lift to d+1 dimensions with a spare contracting coordinate.

    The extra coordinate contracts by ``rho`` (below both 1/N and every
    map's smallest singular value) and translates by ``tau_i = i/N``, which
    makes the last-coordinate images ``[tau_i, tau_i + rho]`` pairwise
    disjoint, hence the lifted system strongly separates.
    """
    n = ifs.n_maps
    cap = min(1.0 / n, float(ifs.bottom_singular_values.min()))
    if rho is None:
        rho = 0.9 * cap
    if not 0.0 < rho < cap:
        raise ValueError(f"rho must lie in (0, {cap:g}), got {rho}")
    d = ifs.d
    mats = np.zeros((n, d + 1, d + 1))
    mats[:, :d, :d] = ifs.matrices
    mats[:, d, d] = rho
    taus = np.arange(n) / n
    ts = np.concatenate([ifs.translations, taus[:, None]], axis=1)
    lifted = IfsSystem(mats, ts, ifs.weights)
    return LiftedIfs(lifted, float(rho), taus)


def project_cloud(cloud: PointCloud, v: SubspaceFrame) -> PointCloud:
    """Orthogonal projection of every point onto ``v`` (in frame coordinates).

    Words and truncation bounds carry over; projections are 1-Lipschitz so
    the bounds stay valid.
    """
    if cloud.dim != v.d:
        raise ValueError(f"cloud dimension {cloud.dim} does not match ambient {v.d}")
    return PointCloud(cloud.points @ v.frame, cloud.words, cloud.errors, cloud.depth, cloud.seed)


@dataclass(frozen=True)
class LocalDimensionReport:
    slopes: np.ndarray
    center_indices: np.ndarray
    radii: np.ndarray
    median: float
    iqr: float
    n_skipped: int


def default_radii(cloud: PointCloud, count: int = DEFAULT_RADII_COUNT,
                  ratio: float = DEFAULT_RADII_RATIO) -> np.ndarray:
    """Geometric radii grid from diam/10 downward, floored above truncation."""
    extent = cloud.points.max(axis=0) - cloud.points.min(axis=0)
    diam = float(np.linalg.norm(extent))
    if diam <= 0:
        raise ValueError("cloud has zero extent; no radii grid exists")
    radii = (diam / 10.0) * ratio ** np.arange(count)
    if cloud.errors is not None:
        floor = 10.0 * float(cloud.errors.max())
        radii = radii[radii >= floor]
    return radii


def local_dimension_estimate(
    cloud: PointCloud,
    radii=None,
    n_centers: int = 64,
    rng=None,
    min_usable_radii: int = MIN_USABLE_RADII,
    workers: int = 1,
) -> LocalDimensionReport:
    """Pointwise dimension estimates from ball-mass slopes.

    For each of ``n_centers`` centers drawn from the cloud, fits the
    least-squares slope of ``log(empirical mass of B(x, r))`` against
    ``log r`` over the radii grid (center excluded from its own counts).
    Radii with empty balls are dropped; centers with fewer than
    ``min_usable_radii`` usable radii are skipped.  Reports per-center slopes
    with the median and interquartile range.
    """
    pts = cloud.points
    m = cloud.m
    if m < 2:
        raise ValueError("need at least two points")
    rng = np.random.default_rng(rng)

    extent = pts.max(axis=0) - pts.min(axis=0)
    if float(np.linalg.norm(extent)) == 0.0:
        # a point mass: every ball has full mass, the slope is exactly 0
        idx = np.arange(min(n_centers, m))
        return LocalDimensionReport(np.zeros(idx.size), idx, np.array([]), 0.0, 0.0, 0)

    if radii is None:
        radii = default_radii(cloud)
    radii = np.sort(np.asarray(radii, dtype=float))[::-1]
    if radii.size < min_usable_radii:
        raise ValueError(
            f"radii grid has {radii.size} entries, need at least {min_usable_radii}"
        )
    if np.any(np.diff(np.log(radii)) == 0.0):
        raise ValueError("radii must be distinct")

    n_centers = min(n_centers, m)
    center_idx = rng.choice(m, size=n_centers, replace=False)
    log_r = np.log(radii)
    radii_sorted = radii[::-1]

    def slope_at(ci: int) -> float:
        dist = np.linalg.norm(pts - pts[ci], axis=1)
        dist[ci] = np.inf
        dist.sort()
        counts = np.searchsorted(dist, radii_sorted, side="right")[::-1].astype(float)
        usable = counts >= 1
        if usable.sum() < min_usable_radii:
            return np.nan
        fit = np.polyfit(log_r[usable], np.log(counts[usable] / m), 1)
        return float(fit[0])

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            slopes = np.array(list(pool.map(slope_at, center_idx)))
    else:
        slopes = np.array([slope_at(ci) for ci in center_idx])

    good = slopes[~np.isnan(slopes)]
    if good.size == 0:
        raise ValueError("every center was skipped; radii grid unusable for this cloud")
    q25, q50, q75 = np.percentile(good, [25, 50, 75])
    return LocalDimensionReport(
        slopes, center_idx, radii, float(q50), float(q75 - q25), int(np.isnan(slopes).sum())
    )


@dataclass(frozen=True)
class BoxCountReport:
    dimension: float
    eps: np.ndarray
    information: np.ndarray


def box_counting_dimension(
    cloud: PointCloud, eps_list=None, count: int = 26, ratio: float = DEFAULT_RADII_RATIO,
    min_occupancy: float = 5.0,
) -> BoxCountReport:
    """Information (box-counting) dimension of the sampled measure.

    Bins the points into grid boxes of side ``eps`` (anchored at the cloud's
    min corner) over a geometric grid of sizes and fits the slope of the
    occupancy sum ``sum p log p`` against ``log eps``.  The Miller-Madow
    correction ``(K - 1) / 2m`` compensates the small-count entropy bias, and
    box sizes with mean occupancy below ``min_occupancy`` are dropped.

    Unlike the pointwise ball estimator this averages over the whole support,
    which suppresses the log-periodic oscillations of grid-aligned systems.
    """
    pts = cloud.points
    m = cloud.m
    extent = pts.max(axis=0) - pts.min(axis=0)
    diam = float(np.linalg.norm(extent))
    if diam <= 0.0:
        return BoxCountReport(0.0, np.array([]), np.array([]))
    if eps_list is None:
        eps_list = (diam / 5.0) * ratio ** np.arange(count)
        if cloud.errors is not None:
            floor = 10.0 * float(cloud.errors.max())
            eps_list = eps_list[eps_list >= floor]
    eps_list = np.sort(np.asarray(eps_list, dtype=float))[::-1]
    shift = pts.min(axis=0)
    eps_used, info = [], []
    for eps in eps_list:
        cells = np.floor((pts - shift) / eps).astype(np.int64)
        _, counts = np.unique(cells, axis=0, return_counts=True)
        if m / counts.size < min_occupancy:
            continue
        p = counts / m
        info.append(float(np.sum(p * np.log(p))) - (counts.size - 1) / (2.0 * m))
        eps_used.append(eps)
    if len(eps_used) < 4:
        raise ValueError("fewer than 4 usable box sizes; enlarge the sample or the grid")
    eps_used = np.asarray(eps_used)
    info = np.asarray(info)
    slope = float(np.polyfit(np.log(eps_used), info, 1)[0])
    return BoxCountReport(slope, eps_used, info)


def cloud_to_csv(cloud: PointCloud, path) -> None:
    """Write ``x1..xk,word,depth`` rows; floats round-trip bit-exactly."""
    if cloud.words is None:
        raise ValueError("cloud has no generating words; only IFS clouds are exportable")
    k = cloud.dim
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{j + 1}" for j in range(k)] + ["word", "depth"])
        depth = cloud.depth if cloud.depth is not None else cloud.words.shape[1]
        for row, word in zip(cloud.points, cloud.words):
            writer.writerow(
                [repr(float(x)) for x in row]
                + [".".join(str(int(s)) for s in word), str(depth)]
            )


def cloud_from_csv(path, ifs: IfsSystem | None = None) -> PointCloud:
    """Read a cloud written by :func:`cloud_to_csv`.

    Truncation bounds are recomputed when the generating system is supplied;
    the seed is not stored in the file and comes back as ``None``.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[-2:] != ["word", "depth"] or not header[0].startswith("x"):
            raise ValueError(f"unexpected header {header}")
        k = len(header) - 2
        pts, words, depths = [], [], []
        for row in reader:
            pts.append([float(x) for x in row[:k]])
            words.append([int(s) for s in row[k].split(".")])
            depths.append(int(row[k + 1]))
    if len(set(depths)) > 1:
        raise ValueError("mixed depths in cloud file")
    words = np.asarray(words, dtype=np.int64)
    errors = None
    if ifs is not None:
        errors = ifs.bounding_radius * np.prod(ifs.top_singular_values[words], axis=1)
    return PointCloud(np.asarray(pts), words, errors, depths[0] if depths else None, None)
