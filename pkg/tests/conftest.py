"""Shared fixtures: seeded scenes and AC batches used across test modules."""

import numpy as np
import pytest

from affgeo import AffineCorrespondence, CameraSpec, NoiseSpec, generate_scene, sample_acs
from affgeo.solvers import apply_homography, gt_affine_from_homography


@pytest.fixture(scope="session")
def scene():
    """A generic three-plane scene used where any valid scene will do."""
    return generate_scene(seed=42, n_planes=3)


@pytest.fixture(scope="session")
def clean_acs(scene):
    """Noise-free ACs with labels on the shared scene."""
    acs, labels = sample_acs(scene, 80, NoiseSpec(), seed=7)
    return acs, labels


@pytest.fixture()
def rng():
    return np.random.default_rng(123)


def random_orientation_preserving(rng, scale=1.0):
    """Random 2x2 matrix with positive determinant."""
    while True:
        A = rng.normal(0.0, scale, size=(2, 2))
        if A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0] > 0.0:
            return A


def planar_scene(seed=0):
    """Single-plane scene, convenient for homography tests."""
    return generate_scene(seed=seed, n_planes=1, camera_spec=CameraSpec())


def ac_on_plane(scene, plane_idx, p1):
    """Exact AC at a chosen first-image point on a chosen scene plane."""
    H = scene.homographies[plane_idx]
    return AffineCorrespondence(
        p1=p1,
        p2=apply_homography(H, p1),
        A=gt_affine_from_homography(H, p1),
    )


def general_position_acs(scene, points):
    """One exact AC per scene plane; points on a single plane leave the
    fundamental matrix underdetermined (the classical plane degeneracy), so
    minimal-sample tests spread them across planes."""
    return [
        ac_on_plane(scene, i % len(scene.homographies), p) for i, p in enumerate(points)
    ]
