"""Linear two-view model solvers from affine correspondences.

Each AC contributes three linear equations in the fundamental matrix (one
epipolar, two affine rows matching the expanded constraint algebra in the
residuals module) and six in a homography (two DLT point rows, four rows tying
the local affinity to the warp Jacobian). All solves Hartley-normalise the
points first and rescale the affine rows to unit norm so mixed-unit rows do
not dominate the least-squares solution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import (
    AffineCorrespondence,
    CameraIntrinsics,
    FloatArray,
    Mat2,
    Mat3,
    as_mat3,
    as_vec2,
    homogenize,
)
from .errors import (
    CheiralityAmbiguity,
    DegenerateConfiguration,
    PointAtInfinity,
    TooFewConstraints,
    TooFewCorrespondences,
)
from .residuals import FundamentalMatrix, _largest_entry_sign_fix


@dataclass(frozen=True)
class EssentialMatrix:
    """3x3 essential matrix; valid instances have singular values (s, s, 0)."""

    matrix: Mat3

    def __post_init__(self):
        object.__setattr__(self, "matrix", as_mat3(self.matrix))

    def singular_values(self) -> FloatArray:
        return np.linalg.svd(self.matrix, compute_uv=False)


@dataclass(frozen=True)
class Homography:
    """3x3 invertible plane-induced warp, stored h33-normalised when h33 != 0."""

    matrix: Mat3

    def __post_init__(self):
        M = as_mat3(self.matrix)
        if abs(M[2, 2]) > 1e-12:
            M = M / M[2, 2]
        if abs(np.linalg.det(M)) <= 1e-12:
            raise DegenerateConfiguration(f"homography is singular, det = {np.linalg.det(M):.3e}")
        object.__setattr__(self, "matrix", M)


@dataclass(frozen=True)
class RelativePose:
    """Rotation plus unit translation direction mapping camera-1 coordinates
    into camera 2: X2 = R @ X1 + t."""

    R: Mat3
    t: FloatArray

    def __post_init__(self):
        R = np.asarray(self.R, dtype=np.float64).reshape(3, 3)
        t = np.asarray(self.t, dtype=np.float64).reshape(3)
        if np.max(np.abs(R.T @ R - np.eye(3))) > 1e-6 or np.linalg.det(R) < 0.0:
            raise ValueError("R is not a proper rotation")
        nt = np.linalg.norm(t)
        if nt <= 1e-12:
            raise ValueError("translation direction must be nonzero")
        if abs(nt - 1.0) > 1e-12:  # keep already-unit vectors bit-stable
            t = t / nt
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "t", t)


# --- small 3d utilities ------------------------------------------------------

def skew3(v) -> Mat3:
    """Cross-product matrix [v]_x."""
    x, y, z = np.asarray(v, dtype=float).reshape(3)
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def axis_angle_rotation(axis, angle: float) -> Mat3:
    """Rotation about a (not necessarily unit) axis by angle radians."""
    a = np.asarray(axis, dtype=float).reshape(3)
    n = np.linalg.norm(a)
    if n == 0.0:
        raise ValueError("rotation axis must be nonzero")
    a = a / n
    K = skew3(a)
    return np.eye(3) + math.sin(angle) * K + (1.0 - math.cos(angle)) * (K @ K)


def apply_homography(H, p) -> FloatArray:
    """Warp a point by H; raises PointAtInfinity when the denominator vanishes."""
    M = as_mat3(H)
    q = M @ homogenize(p)
    if abs(q[2]) <= 1e-12:
        raise PointAtInfinity(f"point {p} maps to infinity under H")
    return q[:2] / q[2]


# --- Hartley normalisation ---------------------------------------------------

def hartley_transform(points: FloatArray) -> Mat3:
    """Similarity moving the centroid to the origin and the RMS radius to sqrt(2)."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    centroid = pts.mean(axis=0)
    rms = math.sqrt(np.mean(np.sum((pts - centroid) ** 2, axis=1)))
    s = math.sqrt(2.0) / rms if rms > 1e-12 else 1.0
    return np.array(
        [[s, 0.0, -s * centroid[0]], [0.0, s, -s * centroid[1]], [0.0, 0.0, 1.0]]
    )


def _solve_nullspace(rows: FloatArray) -> FloatArray:
    """Smallest right singular vector of the stacked constraint rows."""
    if np.linalg.matrix_rank(rows) < 8:
        raise DegenerateConfiguration(
            f"constraint matrix rank {np.linalg.matrix_rank(rows)} < 8"
        )
    _, _, Vt = np.linalg.svd(rows)
    return Vt[-1].reshape(3, 3)


def _unit_rows(rows: FloatArray) -> FloatArray:
    norms = np.linalg.norm(rows, axis=1, keepdims=True)
    return rows / np.maximum(norms, 1e-300)


def _assert_not_collinear(points: FloatArray, which: str) -> None:
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    centred = pts - pts.mean(axis=0)
    sv = np.linalg.svd(centred, compute_uv=False)
    if sv[-1] <= 1e-9 * max(sv[0], 1.0):
        raise DegenerateConfiguration(f"points are (near-)collinear in {which}")


# --- fundamental matrix from ACs ----------------------------------------------

def fundamental_from_acs(acs: Sequence[AffineCorrespondence]) -> FundamentalMatrix:
    """Fundamental matrix from >= 3 ACs (3 linear equations each).

    Exact for 3 noise-free ACs, least squares beyond. The result is rank-2
    projected, unit Frobenius norm, largest-magnitude entry positive.

    Rows are assembled in pixel coordinates (one epipolar row, two rows
    matching the expanded affine-constraint terms) and the Hartley similarity
    is applied as an exact change of variables on the 9 unknowns, which
    conditions the solve without altering the row space.
    """
    if len(acs) < 3:
        raise TooFewCorrespondences(f"need >= 3 ACs, got {len(acs)}")
    p1 = np.array([ac.p1 for ac in acs])
    p2 = np.array([ac.p2 for ac in acs])
    _assert_not_collinear(p1, "the first image")
    _assert_not_collinear(p2, "the second image")
    A = np.array([ac.A for ac in acs])
    x1, y1 = p1[:, 0], p1[:, 1]
    x2, y2 = p2[:, 0], p2[:, 1]
    a11, a12 = A[:, 0, 0], A[:, 0, 1]
    a21, a22 = A[:, 1, 0], A[:, 1, 1]
    one = np.ones_like(x1)
    zero = np.zeros_like(x1)
    # Unknown ordering: (f11, f12, f13, f21, f22, f23, f31, f32, f33).
    epi = np.stack(
        [x1 * x2, y1 * x2, x2, x1 * y2, y1 * y2, y2, x1, y1, one], axis=1
    )
    row_m = np.stack(
        [a11 * x1 + x2, a11 * y1, a11, a21 * x1 + y2, a21 * y1, a21, one, zero, zero],
        axis=1,
    )
    row_n = np.stack(
        [a12 * x1, a12 * y1 + x2, a12, a22 * x1, a22 * y1 + y2, a22, zero, one, zero],
        axis=1,
    )
    # Change of variables F = T2^T Fn T1: vec_rm(F) = (T2^T kron T1^T) vec_rm(Fn).
    T1 = hartley_transform(p1)
    T2 = hartley_transform(p2)
    K = np.kron(T2.T, T1.T)
    epi = epi @ K
    row_m = _unit_rows(row_m @ K)
    row_n = _unit_rows(row_n @ K)
    rows = np.concatenate([epi, row_m, row_n], axis=0)
    Fn = _solve_nullspace(rows)
    # Rank-2 enforcement in the normalised frame, then undo the similarity.
    U, S, Vt = np.linalg.svd(Fn)
    Fn = U @ np.diag([S[0], S[1], 0.0]) @ Vt
    F = T2.T @ Fn @ T1
    return FundamentalMatrix(F).normalized()


# --- homography from ACs -------------------------------------------------------

def _dlt_rows(x1: float, y1: float, x2: float, y2: float) -> FloatArray:
    return np.array(
        [
            [x1, y1, 1, 0, 0, 0, -x2 * x1, -x2 * y1, -x2],
            [0, 0, 0, x1, y1, 1, -y2 * x1, -y2 * y1, -y2],
        ],
        dtype=float,
    )


def homography_from_acs(
    acs: Sequence[AffineCorrespondence],
    extra_points: Sequence[tuple] = (),
) -> Homography:
    """Homography from ACs (6 equations each) plus optional bare point pairs
    (2 DLT equations each); needs >= 8 constraints in total.

    As in fundamental_from_acs, rows are built in pixel coordinates and the
    Hartley similarities enter as an exact change of variables.
    """
    n_constraints = 6 * len(acs) + 2 * len(extra_points)
    if n_constraints < 8:
        raise TooFewConstraints(f"{n_constraints} constraints < 8")
    pts1 = np.array([ac.p1 for ac in acs] + [as_vec2(p) for p, _ in extra_points])
    pts2 = np.array([ac.p2 for ac in acs] + [as_vec2(q) for _, q in extra_points])
    T1 = hartley_transform(pts1)
    T2 = hartley_transform(pts2)
    # H = T2^{-1} Hn T1: vec_rm(H) = (T2^{-1} kron T1^T) vec_rm(Hn).
    K = np.kron(np.linalg.inv(T2), T1.T)

    blocks = []
    for ac in acs:
        x1, y1 = ac.p1
        x2, y2 = ac.p2
        (a11, a12), (a21, a22) = ac.A
        aff = np.array(
            [
                [1, 0, 0, 0, 0, 0, -x2 - a11 * x1, -a11 * y1, -a11],
                [0, 1, 0, 0, 0, 0, -a12 * x1, -x2 - a12 * y1, -a12],
                [0, 0, 0, 1, 0, 0, -y2 - a21 * x1, -a21 * y1, -a21],
                [0, 0, 0, 0, 1, 0, -a22 * x1, -y2 - a22 * y1, -a22],
            ],
            dtype=float,
        )
        blocks.append(_dlt_rows(x1, y1, x2, y2) @ K)
        blocks.append(_unit_rows(aff @ K))
    for p, q in extra_points:
        p = as_vec2(p)
        q = as_vec2(q)
        blocks.append(_dlt_rows(p[0], p[1], q[0], q[1]) @ K)
    Hn = _solve_nullspace(np.concatenate(blocks, axis=0))
    H = np.linalg.inv(T2) @ Hn @ T1
    if abs(H[2, 2]) <= 1e-12:
        H = _largest_entry_sign_fix(H / np.linalg.norm(H))
    return Homography(H)


# --- essential matrix and pose -------------------------------------------------

def essential_from_fundamental(
    F, K1: CameraIntrinsics, K2: CameraIntrinsics
) -> EssentialMatrix:
    """E = K2^T F K1 projected onto the essential manifold.

    Singular values are replaced by their mean (sigma, sigma, 0) and the
    result is scaled to Frobenius norm sqrt(2), i.e. singular values (1, 1, 0).
    """
    E = K2.K.T @ as_mat3(F) @ K1.K
    U, S, Vt = np.linalg.svd(E)
    s = 0.5 * (S[0] + S[1])
    E = U @ np.diag([s, s, 0.0]) @ Vt
    E = E * (math.sqrt(2.0) / np.linalg.norm(E))
    return EssentialMatrix(_largest_entry_sign_fix(E))


def triangulate_point(P1: FloatArray, P2: FloatArray, x1, x2) -> FloatArray:
    """Linear (DLT) triangulation; returns the homogeneous 4-vector."""
    x1 = np.asarray(x1, dtype=float).reshape(2)
    x2 = np.asarray(x2, dtype=float).reshape(2)
    A = np.stack(
        [
            x1[0] * P1[2] - P1[0],
            x1[1] * P1[2] - P1[1],
            x2[0] * P2[2] - P2[0],
            x2[1] * P2[2] - P2[1],
        ]
    )
    _, _, Vt = np.linalg.svd(A)
    return Vt[-1]


def decompose_essential(
    E,
    correspondences: Iterable[tuple],
    K1: CameraIntrinsics,
    K2: CameraIntrinsics,
) -> RelativePose:
    """Pick the (R, t) candidate in which a strict majority of triangulated
    points has positive depth in both cameras."""
    M = as_mat3(E)
    U, _, Vt = np.linalg.svd(M)
    if np.linalg.det(U) < 0.0:
        U = -U
    if np.linalg.det(Vt) < 0.0:
        Vt = -Vt
    W = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    t = U[:, 2]
    candidates = [
        (U @ W @ Vt, t),
        (U @ W @ Vt, -t),
        (U @ W.T @ Vt, t),
        (U @ W.T @ Vt, -t),
    ]
    K1inv = np.linalg.inv(K1.K)
    K2inv = np.linalg.inv(K2.K)
    pairs = [
        (K1inv @ homogenize(p1), K2inv @ homogenize(p2))
        for p1, p2 in correspondences
    ]
    n = len(pairs)
    P1 = np.hstack([np.eye(3), np.zeros((3, 1))])
    counts = []
    for R, tt in candidates:
        P2 = np.hstack([R, tt.reshape(3, 1)])
        c = 0
        for x1h, x2h in pairs:
            X = triangulate_point(P1, P2, x1h[:2] / x1h[2], x2h[:2] / x2h[2])
            w = X[3]
            if abs(w) <= 1e-14:
                continue
            z1 = X[2] * w
            z2 = (P2 @ X)[2] * w
            if z1 > 0.0 and z2 > 0.0:
                c += 1
        counts.append(c)
    best = int(np.argmax(counts))
    if counts[best] * 2 <= n or counts.count(counts[best]) > 1:
        raise CheiralityAmbiguity(f"positive-depth votes {counts} over {n} points")
    R, tt = candidates[best]
    # Contract: always hand back a proper rotation and unit direction.
    assert np.max(np.abs(R.T @ R - np.eye(3))) <= 1e-10
    assert abs(np.linalg.det(R) - 1.0) <= 1e-10
    return RelativePose(R=R, t=tt)


# --- ground-truth affinity from a homography -----------------------------------

def gt_affine_from_homography(H, p1) -> Mat2:
    """Jacobian of the H-induced warp at p1: the ground-truth local affinity."""
    M = as_mat3(H)
    x, y = as_vec2(p1)
    s = M[2, 0] * x + M[2, 1] * y + M[2, 2]
    if abs(s) <= 1e-12:
        raise PointAtInfinity(f"denominator {s:.3e} at point ({x}, {y})")
    x2 = (M[0, 0] * x + M[0, 1] * y + M[0, 2]) / s
    y2 = (M[1, 0] * x + M[1, 1] * y + M[1, 2]) / s
    return np.array(
        [
            [(M[0, 0] - x2 * M[2, 0]) / s, (M[0, 1] - x2 * M[2, 1]) / s],
            [(M[1, 0] - y2 * M[2, 0]) / s, (M[1, 1] - y2 * M[2, 1]) / s],
        ]
    )
