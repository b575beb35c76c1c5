"""Planar math primitives, the saturated tracking loss, and seedable RNG streams."""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np


class NonFiniteInput(ValueError):
    """Raised when an operation receives NaN or infinite coordinates."""


class InvalidCovariance(ValueError):
    """Raised when a matrix used as a covariance is not symmetric PSD."""


class Vec2(NamedTuple):
    """2-D point/vector in meters."""

    x: float
    y: float

    def __add__(self, other):
        return Vec2(self.x + other[0], self.y + other[1])

    def __sub__(self, other):
        return Vec2(self.x - other[0], self.y - other[1])

    def scale(self, k: float) -> "Vec2":
        return Vec2(self.x * k, self.y * k)

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def is_finite(self) -> bool:
        return math.isfinite(self.x) and math.isfinite(self.y)


class Mat2(NamedTuple):
    """2x2 matrix, row-major (units m^2 when used as a covariance)."""

    xx: float
    xy: float
    yx: float
    yy: float

    def trace(self) -> float:
        return self.xx + self.yy

    def det(self) -> float:
        return self.xx * self.yy - self.xy * self.yx

    def is_finite(self) -> bool:
        return all(math.isfinite(v) for v in self)

    def sym_eigvals(self) -> tuple[float, float]:
        """Eigenvalues (ascending) assuming the matrix is symmetric."""
        b = 0.5 * (self.xy + self.yx)
        mid = 0.5 * (self.xx + self.yy)
        r = math.hypot(0.5 * (self.xx - self.yy), b)
        return (mid - r, mid + r)


SYM_TOL = 1e-9
PSD_TOL = -1e-9

ZERO2 = Vec2(0.0, 0.0)
IDENTITY2 = Mat2(1.0, 0.0, 0.0, 1.0)


def mat2_diag(a: float, d: float) -> Mat2:
    return Mat2(a, 0.0, 0.0, d)


def mat2_scaled_identity(s: float) -> Mat2:
    return Mat2(s, 0.0, 0.0, s)


def check_covariance(cov: Mat2) -> None:
    """Validate symmetry (1e-9) and positive semi-definiteness (eigs >= -1e-9)."""
    if not cov.is_finite():
        raise InvalidCovariance(f"non-finite covariance entries: {cov}")
    scale = max(1.0, abs(cov.xx), abs(cov.yy), abs(cov.xy), abs(cov.yx))
    if abs(cov.xy - cov.yx) > SYM_TOL * scale:
        raise InvalidCovariance(f"covariance not symmetric: {cov}")
    lo, _ = cov.sym_eigvals()
    if lo < PSD_TOL * scale:
        raise InvalidCovariance(f"covariance not PSD (min eig {lo}): {cov}")


def cholesky2(cov: Mat2) -> Mat2:
    """Lower Cholesky factor of a symmetric PSD 2x2 (semi-definite tolerated)."""
    a = max(cov.xx, 0.0)
    b = 0.5 * (cov.xy + cov.yx)
    c = max(cov.yy, 0.0)
    la = math.sqrt(a)
    if la > 0.0:
        lb = b / la
    else:
        lb = 0.0
    rem = c - lb * lb
    lc = math.sqrt(rem) if rem > 0.0 else 0.0
    return Mat2(la, 0.0, lb, lc)


def loss(prediction: Vec2, outcome: Vec2, scale: float) -> float:
    """Tracking loss min(||prediction - outcome|| / scale, 1), in [0, 1]."""
    if scale <= 0.0 or not math.isfinite(scale):
        raise ValueError(f"loss scale must be positive, got {scale}")
    dx = prediction[0] - outcome[0]
    dy = prediction[1] - outcome[1]
    if not (math.isfinite(dx) and math.isfinite(dy)):
        raise NonFiniteInput(f"non-finite loss inputs: {prediction}, {outcome}")
    return min(math.hypot(dx, dy) / scale, 1.0)


def gaussian2(rng, mean: Vec2, cov: Mat2) -> Vec2:
    """One draw from N(mean, cov) via the Cholesky factor of cov.

    `rng` is anything exposing `standard_normal(n)` (e.g. numpy Generator).
    """
    check_covariance(cov)
    l = cholesky2(cov)
    z = rng.standard_normal(2)
    z0 = float(z[0])
    z1 = float(z[1])
    return Vec2(mean[0] + l.xx * z0, mean[1] + l.yx * z0 + l.yy * z1)


class RngStream(NamedTuple):
    """Named substream of a counter-based generator.

    Identical (seed, stream_id) pairs reproduce identical sample sequences.
    Backed by numpy's Philox keyed through SeedSequence(seed, spawn_key=(stream_id,)),
    so streams with distinct ids are statistically independent.
    """

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.Philox(seq))

    def substream(self, stream_id: int) -> "RngStream":
        return RngStream(self.seed, stream_id)
