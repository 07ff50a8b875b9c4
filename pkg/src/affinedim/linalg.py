"""Small dense-matrix primitives.

Singular values, restricted operator norms, orthogonal projections, minors,
exterior powers (compound matrices), and subspace/flag geometry on
orthonormal frames.  Everything here is a pure function of its inputs and
works on plain ``numpy`` arrays; dimensions up to ``MAX_DIM`` are supported.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

__all__ = [
    "MAX_DIM",
    "DET_EPS",
    "FRAME_ORTHO_TOL",
    "FLAG_NESTING_TOL",
    "INTERSECTION_TOL",
    "SubspaceFrame",
    "FlagChain",
    "as_matrix",
    "check_contractive_invertible",
    "singular_values",
    "restricted_norm",
    "restricted_conorm",
    "orthogonal_projection",
    "minor",
    "index_tuples",
    "exterior_power",
    "principal_angle_distance",
    "smallest_principal_angle",
    "subspace_intersection",
    "qr_positive",
    "haar_frame",
]

MAX_DIM = 8          # compound sizes stay small; larger d is rejected outright
DET_EPS = 1e-12      # invertibility floor for |det A|
FRAME_ORTHO_TOL = 1e-10
FLAG_NESTING_TOL = 1e-8
INTERSECTION_TOL = 1e-6


def as_matrix(a, d: int | None = None) -> np.ndarray:
    """Validate ``a`` as a finite square matrix of supported size."""
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {arr.shape}")
    n = arr.shape[0]
    if not 1 <= n <= MAX_DIM:
        raise ValueError(f"dimension {n} outside supported range 1..{MAX_DIM}")
    if d is not None and n != d:
        raise ValueError(f"expected a {d}x{d} matrix, got {n}x{n}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix has non-finite entries")
    return arr


def check_contractive_invertible(a, det_eps: float = DET_EPS) -> np.ndarray:
    """Validate that ``a`` is a contraction (operator norm < 1) and invertible."""
    arr = as_matrix(a)
    sv = singular_values(arr)
    if sv[-1] >= 1.0:
        raise ValueError(f"matrix is not contractive: operator norm {sv[-1]:.6g} >= 1")
    if abs(np.linalg.det(arr)) <= det_eps:
        raise ValueError(f"matrix is numerically singular: |det| <= {det_eps:g}")
    return arr


def singular_values(a) -> np.ndarray:
    """Singular values of a square matrix, sorted ascending."""
    arr = as_matrix(a)
    return np.linalg.svd(arr, compute_uv=False)[::-1].copy()


def qr_positive(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Reduced QR factorisation with a nonnegative diagonal of R."""
    q, r = np.linalg.qr(m)
    sign = np.sign(np.diag(r))
    sign[sign == 0] = 1.0
    return q * sign, r * sign[:, None]


def haar_frame(d: int, rng: np.random.Generator, k: int | None = None) -> np.ndarray:
    """Haar-random orthonormal ``d x k`` frame (``k = d`` by default)."""
    g = rng.standard_normal((d, d))
    q, _ = qr_positive(g)
    return q if k is None else q[:, :k].copy()


@dataclass(frozen=True)
class SubspaceFrame:
    """A ``k``-dimensional subspace of R^d held as an orthonormal ``d x k`` frame.

    Equality of subspaces is span equality, tested with principal angles,
    never entry-wise frame equality.
    """

    frame: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.frame, dtype=float)
        if f.ndim != 2:
            raise ValueError(f"frame must be a 2-d array, got ndim {f.ndim}")
        d, k = f.shape
        if not (0 < k <= d):
            raise ValueError(f"need 0 < k <= d, got frame shape {f.shape}")
        if d > MAX_DIM:
            raise ValueError(f"ambient dimension {d} exceeds {MAX_DIM}")
        if not np.all(np.isfinite(f)):
            raise ValueError("frame has non-finite entries")
        if np.max(np.abs(f.T @ f - np.eye(k))) > FRAME_ORTHO_TOL:
            raise ValueError("frame columns are not orthonormal")
        f = f.copy()
        f.flags.writeable = False
        object.__setattr__(self, "frame", f)

    @property
    def d(self) -> int:
        return self.frame.shape[0]

    @property
    def k(self) -> int:
        return self.frame.shape[1]

    @classmethod
    def from_span(cls, vectors) -> "SubspaceFrame":
        """Orthonormalise the columns of ``vectors`` (must have full column rank)."""
        m = np.asarray(vectors, dtype=float)
        if m.ndim == 1:
            m = m[:, None]
        q, r = qr_positive(m)
        diag = np.abs(np.diag(r))
        if diag.min() <= 1e-12 * max(diag.max(), 1.0):
            raise ValueError("spanning vectors are numerically rank deficient")
        return cls(q)

    @classmethod
    def full(cls, d: int) -> "SubspaceFrame":
        return cls(np.eye(d))

    @classmethod
    def coordinate(cls, d: int, axes) -> "SubspaceFrame":
        """Span of the given coordinate axes (0-based)."""
        axes = list(axes)
        f = np.zeros((d, len(axes)))
        for j, ax in enumerate(axes):
            f[ax, j] = 1.0
        return cls(f)

    def complement(self) -> "SubspaceFrame":
        """Orthonormal frame of the orthogonal complement."""
        if self.k == self.d:
            raise ValueError("the full space has no nonempty orthogonal complement")
        u, _, _ = np.linalg.svd(self.frame, full_matrices=True)
        return SubspaceFrame(u[:, self.k:])


@dataclass(frozen=True)
class FlagChain:
    """Nested subspaces listed from largest to smallest dimension.

    ``frames[i]`` strictly contains ``frames[i+1]`` up to ``FLAG_NESTING_TOL``.
    A full chain in R^d has dims ``(d-1, d-2, ..., 1)``.
    """

    frames: tuple[SubspaceFrame, ...]

    def __post_init__(self):
        frames = tuple(self.frames)
        if not frames:
            raise ValueError("flag chain needs at least one subspace")
        d = frames[0].d
        dims = [f.k for f in frames]
        if any(f.d != d for f in frames):
            raise ValueError("frames have mismatched ambient dimensions")
        if any(nxt >= prev for prev, nxt in zip(dims, dims[1:])):
            raise ValueError(f"dims must be strictly decreasing, got {dims}")
        for big, small in zip(frames, frames[1:]):
            resid = small.frame - big.frame @ (big.frame.T @ small.frame)
            if np.linalg.norm(resid, 2) > FLAG_NESTING_TOL:
                raise ValueError("flag chain is not nested")
        object.__setattr__(self, "frames", frames)

    @property
    def d(self) -> int:
        return self.frames[0].d

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(f.k for f in self.frames)

    @property
    def is_full(self) -> bool:
        return self.dims == tuple(range(self.d - 1, 0, -1))

    def __len__(self) -> int:
        return len(self.frames)

    def __iter__(self):
        return iter(self.frames)

    def subspace(self, dim: int) -> SubspaceFrame:
        """The member with the requested dimension."""
        for f in self.frames:
            if f.k == dim:
                return f
        raise KeyError(f"no subspace of dimension {dim} in chain {self.dims}")


def restricted_norm(a, v: SubspaceFrame) -> float:
    """Operator norm of ``a`` restricted to the subspace ``v``.

    Equals the largest singular value of ``a @ v.frame``.
    """
    arr = as_matrix(a)
    if arr.shape[0] != v.d:
        raise ValueError(f"dimension mismatch: matrix is {arr.shape[0]}-dim, subspace {v.d}-dim")
    return float(np.linalg.norm(arr @ v.frame, 2))


def restricted_conorm(a, v: SubspaceFrame) -> float:
    """Restricted co-norm: reciprocal of the restricted norm of the inverse."""
    arr = as_matrix(a)
    return 1.0 / restricted_norm(np.linalg.inv(arr), v)


def orthogonal_projection(v: SubspaceFrame, x) -> np.ndarray:
    """Coordinates of ``x`` projected orthogonally onto ``v``.

    ``x`` may be a single d-vector or an array of shape ``(..., d)``; the
    result has the last axis replaced by the ``k`` frame coordinates.
    """
    pts = np.asarray(x, dtype=float)
    if pts.shape[-1] != v.d:
        raise ValueError(f"dimension mismatch: points are {pts.shape[-1]}-dim, subspace ambient {v.d}-dim")
    return pts @ v.frame


def minor(a, rows, cols) -> float:
    """Determinant of the submatrix selected by ``rows`` x ``cols`` (0-based)."""
    arr = as_matrix(a)
    rows = tuple(int(r) for r in rows)
    cols = tuple(int(c) for c in cols)
    if len(rows) != len(cols) or not rows:
        raise ValueError("rows and cols must be nonempty index tuples of equal length")
    d = arr.shape[0]
    for idx in (rows, cols):
        if any(not 0 <= i < d for i in idx):
            raise ValueError(f"index out of range in {idx}")
        if any(b <= a_ for a_, b in zip(idx, idx[1:])):
            raise ValueError(f"indices must be strictly increasing, got {idx}")
    if len(rows) == 1:
        return float(arr[rows[0], cols[0]])
    return float(np.linalg.det(arr[np.ix_(rows, cols)]))


def index_tuples(d: int, p: int) -> list[tuple[int, ...]]:
    """Strictly increasing p-tuples from ``range(d)`` in lexicographic order."""
    return list(itertools.combinations(range(d), p))


def exterior_power(a, p: int) -> np.ndarray:
    """p-th compound matrix of ``a``: entry (I, J) is the (I, J) minor.

    Rows and columns are indexed by ``index_tuples(d, p)`` in lexicographic
    order, so the result is ``C(d, p) x C(d, p)`` and multiplicative over
    matrix products.
    """
    arr = as_matrix(a)
    d = arr.shape[0]
    if not 1 <= p <= d:
        raise ValueError(f"need 1 <= p <= {d}, got p={p}")
    if p == 1:
        return arr.copy()
    idx = np.asarray(index_tuples(d, p))
    sub = arr[idx[:, None, :, None], idx[None, :, None, :]]
    with np.errstate(divide="ignore", invalid="ignore"):
        # zero minors are legitimate entries; LAPACK warns on exact singularity
        return np.linalg.det(sub)


def _principal_cosines(u: SubspaceFrame, w: SubspaceFrame) -> np.ndarray:
    if u.d != w.d:
        raise ValueError(f"ambient dimension mismatch: {u.d} vs {w.d}")
    s = np.linalg.svd(u.frame.T @ w.frame, compute_uv=False)
    return np.clip(s, 0.0, 1.0)


def principal_angle_distance(u: SubspaceFrame, w: SubspaceFrame) -> float:
    """Sine of the largest principal angle between equal-dimension subspaces.

    Zero exactly when the spans coincide; invariant under right-multiplication
    of either frame by an orthogonal matrix.  Computed as the spectral norm of
    the projection residual, which keeps full accuracy for tiny angles.
    """
    if u.d != w.d:
        raise ValueError(f"ambient dimension mismatch: {u.d} vs {w.d}")
    if u.k != w.k:
        raise ValueError(f"subspace dimension mismatch: {u.k} vs {w.k}")
    resid = w.frame - u.frame @ (u.frame.T @ w.frame)
    return float(min(1.0, np.linalg.norm(resid, 2)))


def smallest_principal_angle(u: SubspaceFrame, w: SubspaceFrame) -> float:
    """Smallest principal angle (radians) between two subspaces of any dims."""
    c = _principal_cosines(u, w).max()
    return float(np.arccos(c))


def subspace_intersection(
    u: SubspaceFrame, w: SubspaceFrame, tol: float = INTERSECTION_TOL
) -> SubspaceFrame | None:
    """Numerical intersection of two subspaces, or ``None`` if it is trivial.

    Directions whose principal angle has sine below ``tol`` count as common;
    they are symmetrised between the two frames and re-orthonormalised.
    """
    if u.d != w.d:
        raise ValueError(f"ambient dimension mismatch: {u.d} vs {w.d}")
    x, _, _ = np.linalg.svd(u.frame.T @ w.frame)
    candidates = u.frame @ x
    kept = []
    for j in range(min(u.k, w.k)):
        vec = candidates[:, j]
        in_w = w.frame @ (w.frame.T @ vec)
        if np.linalg.norm(vec - in_w) < tol:
            sym = vec + in_w
            kept.append(sym / np.linalg.norm(sym))
    if not kept:
        return None
    q, _ = qr_positive(np.stack(kept, axis=1))
    return SubspaceFrame(q)
