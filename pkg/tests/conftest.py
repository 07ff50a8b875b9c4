"""Shared generators for random map tuples and reference systems."""

import numpy as np

from affinedim.cocycle import BernoulliWeights
from affinedim.domination import stp_check
from affinedim.measure import IfsSystem

PASCAL3 = np.array([[1.0, 1.0, 1.0], [1.0, 2.0, 3.0], [1.0, 3.0, 6.0]])


def cantor_ifs(weights=None):
    """Middle-third Cantor system on the line."""
    mats = np.array([[[1.0 / 3.0]], [[1.0 / 3.0]]])
    ts = np.array([[0.0], [2.0 / 3.0]])
    return IfsSystem(mats, ts, BernoulliWeights(np.asarray(weights)) if weights is not None
                     else BernoulliWeights.uniform(2))


def segment_ifs():
    """Two half-scale maps tiling [0, 1]; uniform weights give Lebesgue measure."""
    mats = np.array([[[0.5]], [[0.5]]])
    ts = np.array([[0.0], [0.5]])
    return IfsSystem(mats, ts, BernoulliWeights.uniform(2))


def cantor_dust_ifs():
    """Four corner maps at ratio 1/3: the planar product of two Cantor sets."""
    mats = np.tile(np.diag([1.0 / 3.0, 1.0 / 3.0]), (4, 1, 1))
    ts = np.array([[0.0, 0.0], [2.0 / 3.0, 0.0], [0.0, 2.0 / 3.0], [2.0 / 3.0, 2.0 / 3.0]])
    return IfsSystem(mats, ts, BernoulliWeights.uniform(4))


def bm_carpet_ifs(digits=((0, 0), (1, 0), (2, 1)), m_base=3, n_base=2, probs=None):
    """Grid-aligned carpet system with columns/m and rows/n cells."""
    mats = np.tile(np.diag([1.0 / m_base, 1.0 / n_base]), (len(digits), 1, 1))
    ts = np.array([[c / m_base, r / n_base] for c, r in digits], dtype=float)
    w = BernoulliWeights.uniform(len(digits)) if probs is None else BernoulliWeights(np.asarray(probs))
    return IfsSystem(mats, ts, w)


def scaled_to_norm(m, norm):
    return norm * m / np.linalg.norm(m, 2)


def random_contractive_tuple(rng, d, n_maps, norm=0.8, det_floor=1e-4):
    """Random invertible contractions with operator norm exactly ``norm``."""
    maps = []
    while len(maps) < n_maps:
        m = scaled_to_norm(rng.uniform(-1.0, 1.0, size=(d, d)), norm)
        if abs(np.linalg.det(m)) > det_floor:
            maps.append(m)
    return maps


def _positive_bidiagonal(rng, d, lower):
    m = np.diag(rng.uniform(0.3, 1.5, d))
    for j in range(d - 1):
        if lower:
            m[j + 1, j] = rng.uniform(0.3, 1.5)
        else:
            m[j, j + 1] = rng.uniform(0.3, 1.5)
    return m


def random_stp_matrix(rng, d, norm=0.8):
    """Strictly totally positive contraction via positive bidiagonal factors."""
    while True:
        factors = [_positive_bidiagonal(rng, d, lower=(j % 2 == 0)) for j in range(2 * (d - 1))]
        a = factors[0]
        for f in factors[1:]:
            a = a @ f
        if stp_check(a).is_stp:
            return scaled_to_norm(a, norm)


def random_stp_tuple(rng, d, n_maps, norm=0.8):
    return [random_stp_matrix(rng, d, norm=rng.uniform(0.6, 1.0) * norm) for _ in range(n_maps)]


def gentle_stp_matrix(rng, d, norm=0.8, max_log_cond=0.85):
    """STP contraction with a small singular-value spread.

    A bundle estimate carries at best ~1e-16 relative error; products over n
    steps amplify it by exp(n * log cond), so growth-bound checks out to
    n = 40 need per-map log-condition below ~0.9 to stay meaningful in
    double precision.
    """
    while True:
        a = np.eye(d)
        for j in range(2 * (d - 1)):
            m = np.diag(rng.uniform(0.95, 1.05, d))
            for k in range(d - 1):
                if j % 2 == 0:
                    m[k + 1, k] = rng.uniform(0.10, 0.18)
                else:
                    m[k, k + 1] = rng.uniform(0.10, 0.18)
            a = a @ m
        sv = np.linalg.svd(a, compute_uv=False)
        if stp_check(a).is_stp and np.log(sv[0] / sv[-1]) <= max_log_cond:
            return norm * a / sv[0]


def gentle_stp_tuple(rng, d, n_maps, norm=0.8):
    return [gentle_stp_matrix(rng, d, norm) for _ in range(n_maps)]
