"""Coordinate calibration between the tracker frame and the display frame.

Two routes are provided:

* a four-point procedure: the operator aligns the tracker with display-space
  cubes at (0,0,0), (t,0,0), (0,t,0), (0,0,t); the resulting projection-form
  map sends any tracker reading into display coordinates, and reproduces the
  underlying similarity transform exactly when one exists
* a batch least-squares similarity fit over arbitrary point correspondences,
  for the case where many paired readings are available
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from movesketch.geom import SimilarityTransform, Vec3

DEFAULT_CUBE_SPACING = 0.1  # m, default spacing of the alignment cubes

BASIS_DET_TOL = 1e-9


class DegenerateBasis(ValueError):
    """Alignment readings are collinear or repeated; re-run the procedure."""


class DegenerateConfiguration(ValueError):
    """Correspondence sources are collinear; the fit is under-determined."""


def _basis_det(a1: Vec3, a2: Vec3, a3: Vec3) -> float:
    return a1.dot(a2.cross(a3))


@dataclass(frozen=True)
class CalibrationProbe:
    """Tracker-space readings x0..x3 of the four alignment cubes."""

    readings: tuple[Vec3, Vec3, Vec3, Vec3]
    spacing: float = DEFAULT_CUBE_SPACING

    def __post_init__(self) -> None:
        if len(self.readings) != 4:
            raise ValueError("probe needs exactly 4 readings")
        if not all(r.is_finite() for r in self.readings):
            raise ValueError("probe readings must be finite")
        if not (math.isfinite(self.spacing) and self.spacing > 0.0):
            raise ValueError(f"cube spacing must be > 0, got {self.spacing}")
        x0, x1, x2, x3 = self.readings
        if abs(_basis_det(x1 - x0, x2 - x0, x3 - x0)) <= BASIS_DET_TOL:
            raise DegenerateBasis("alignment points are collinear or repeated")


@dataclass(frozen=True)
class CoordinateMap:
    """Projection-form map: base point, three basis directions, cube spacing."""

    origin: Vec3
    axis1: Vec3
    axis2: Vec3
    axis3: Vec3
    spacing: float = DEFAULT_CUBE_SPACING

    def __post_init__(self) -> None:
        if abs(_basis_det(self.axis1, self.axis2, self.axis3)) <= BASIS_DET_TOL:
            raise DegenerateBasis("basis directions are collinear or repeated")
        if not (math.isfinite(self.spacing) and self.spacing > 0.0):
            raise ValueError(f"cube spacing must be > 0, got {self.spacing}")

    def map_point(self, x: Vec3) -> Vec3:
        return map_point(self, x)


@dataclass(frozen=True)
class CorrespondenceSet:
    """Paired (source, target) points relating the two frames."""

    pairs: tuple[tuple[Vec3, Vec3], ...]

    def __post_init__(self) -> None:
        if len(self.pairs) < 3:
            raise ValueError(f"need at least 3 pairs, got {len(self.pairs)}")

    def source_array(self) -> np.ndarray:
        return np.array([[s.x, s.y, s.z] for s, _ in self.pairs], dtype=np.float64)

    def target_array(self) -> np.ndarray:
        return np.array([[t.x, t.y, t.z] for _, t in self.pairs], dtype=np.float64)


def calibrate_four_point(probe: CalibrationProbe) -> CoordinateMap:
    """Build the projection-form map from the four cube readings."""
    x0, x1, x2, x3 = probe.readings
    return CoordinateMap(x0, x1 - x0, x2 - x0, x3 - x0, probe.spacing)


def map_point(m: CoordinateMap, x: Vec3) -> Vec3:
    """Project the reading onto each basis direction and recompose.

    x' = t * ((x-x0).a1/|a1|^2, (x-x0).a2/|a2|^2, (x-x0).a3/|a3|^2)

    Evaluated verbatim even for non-orthogonal bases; use the least-squares
    fit when readings are noisy.
    """
    d = x - m.origin
    t = m.spacing
    return Vec3(
        t * d.dot(m.axis1) / m.axis1.norm_sq(),
        t * d.dot(m.axis2) / m.axis2.norm_sq(),
        t * d.dot(m.axis3) / m.axis3.norm_sq(),
    )


def map_points(m: CoordinateMap, xs: np.ndarray) -> np.ndarray:
    """Vectorized :func:`map_point` for an (n, 3) array of readings."""
    xs = np.asarray(xs, dtype=np.float64)
    d = xs - m.origin.to_array()
    axes = np.stack([m.axis1.to_array(), m.axis2.to_array(), m.axis3.to_array()])
    return m.spacing * (d @ axes.T) / (axes * axes).sum(axis=1)


def map_to_similarity(m: CoordinateMap) -> SimilarityTransform:
    """Explicit (k, A, b) form, fit on the map's own four probe pairs."""
    t = m.spacing
    pairs = (
        (m.origin, Vec3.zero()),
        (m.origin + m.axis1, Vec3(t, 0.0, 0.0)),
        (m.origin + m.axis2, Vec3(0.0, t, 0.0)),
        (m.origin + m.axis3, Vec3(0.0, 0.0, t)),
    )
    return fit_similarity_lsq(CorrespondenceSet(pairs))


def fit_similarity_lsq(corr: CorrespondenceSet) -> SimilarityTransform:
    """Least-squares similarity fit (closed-form SVD solve).

    Minimizes sum ||k A s_i + b - t_i||^2 with A constrained to a proper
    rotation and k > 0. A reflection in the raw solution is corrected
    internally by flipping the smallest singular direction.
    """
    src = corr.source_array()
    dst = corr.target_array()
    n = src.shape[0]

    mean_src = src.mean(axis=0)
    mean_dst = dst.mean(axis=0)
    d_src = src - mean_src
    d_dst = dst - mean_dst

    var_src = (d_src * d_src).sum() / n
    if var_src <= 0.0:
        raise DegenerateConfiguration("source points are all identical")

    cov = d_dst.T @ d_src / n
    u, sing, vt = np.linalg.svd(cov)
    if sing[1] <= max(1e-12 * sing[0], 1e-300):
        raise DegenerateConfiguration("source points are collinear")

    flip = np.eye(3)
    if np.linalg.det(u) * np.linalg.det(vt) < 0.0:
        flip[2, 2] = -1.0
    rot = u @ flip @ vt
    scale = float((sing * np.diag(flip)).sum() / var_src)
    if scale <= 0.0:
        raise DegenerateConfiguration("fit collapsed to non-positive scale")
    trans = mean_dst - scale * rot @ mean_src
    return SimilarityTransform(scale, rot, Vec3.from_seq(trans))


def residual_rmse(t: SimilarityTransform, corr: CorrespondenceSet) -> float:
    """Root mean squared residual of the transform over the pairs."""
    mapped = t.apply_many(corr.source_array())
    err = mapped - corr.target_array()
    return float(np.sqrt((err * err).sum(axis=1).mean()))
