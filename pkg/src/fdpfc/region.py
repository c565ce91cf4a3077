"""Geometry of achievable compensation vectors.

The modulation triple (k0, k2, beta) synthesizes a normalized compensation
vector

    (x, y) = (k0 + (k2/2) cos(beta),  (k2/2) sin(beta)),

i.e. a point at distance up to k2/2 from (k0, 0).  Duty-cycle limits restrict
the triple to k2 <= 1 - |k0|, so the reachable set is a union of disks centred
on the x axis.  Two regions matter:

* the *rhombus* |x| + 2|y| <= 1, reachable with the minimum-harmonic strategy
  beta = +-90 deg;
* the *total region*, the full union of disks, bounded by the central circle
  of radius 1/2 and the tangent lines through (+-1, 0).

All angles are degrees; the magnitude m is per-unit of the bridge input
amplitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .phasor import normalize_deg

# Absolute numeric slack on containment tests, on top of the caller's
# eps tolerance; keeps exact-boundary points contained under float error.
_ATOL = 1e-9

SQRT3 = math.sqrt(3.0)


class RegionError(ValueError):
    """A compensation target falls outside the relevant reachable region."""

    def __init__(self, message: str, nearest: "CompensationTarget | None" = None):
        super().__init__(message)
        self.nearest = nearest


@dataclass(frozen=True)
class ControlParams:
    """Modulation triple: dc duty k0, double-frequency duty k2, phase beta."""

    k0: float
    k2: float
    beta_deg: float

    def __post_init__(self) -> None:
        if not -1.0 <= self.k0 <= 1.0:
            raise ValueError(f"k0 must lie in [-1, 1], got {self.k0}")
        if self.k2 < 0.0:
            raise ValueError(f"k2 must be >= 0, got {self.k2}")
        object.__setattr__(self, "beta_deg", normalize_deg(self.beta_deg))

    @property
    def beta2_deg(self) -> float:
        """Initial phase of the double-frequency duty term (beta - 90 deg)."""
        return normalize_deg(self.beta_deg - 90.0)


@dataclass(frozen=True)
class CompensationTarget:
    """Normalized compensation vector: magnitude m (per-unit), phase phi1."""

    m: float
    phi1_deg: float

    def __post_init__(self) -> None:
        if self.m < 0.0:
            raise ValueError(f"m must be >= 0, got {self.m}")
        object.__setattr__(self, "phi1_deg", normalize_deg(self.phi1_deg))

    @property
    def x(self) -> float:
        return self.m * math.cos(math.radians(self.phi1_deg))

    @property
    def y(self) -> float:
        return self.m * math.sin(math.radians(self.phi1_deg))

    @classmethod
    def from_xy(cls, x: float, y: float) -> "CompensationTarget":
        m = math.hypot(x, y)
        phi = math.degrees(math.atan2(y, x)) if m > 0.0 else 0.0
        return cls(m, phi)


def is_feasible(p: ControlParams, eps: float = 0.0) -> bool:
    """Duty-cycle feasibility: |k0| <= 1 and 0 <= k2 <= 1 - |k0| (within eps)."""
    return abs(p.k0) <= 1.0 + eps and 0.0 <= p.k2 <= 1.0 - abs(p.k0) + eps


def forward_target(p: ControlParams) -> CompensationTarget:
    """Compensation vector produced by a modulation triple.

    m = sqrt(k2^2/4 + k0^2 + k0 k2 cos(beta)); phi1 is the full-quadrant angle
    of (k0 + (k2/2) cos(beta), (k2/2) sin(beta)).  The one-argument arctangent
    form is ambiguous by 180 degrees for k0 < 0, so the rectangular vector is
    used directly.  (0, 0) maps to m = 0 with canonical phase 0.
    """
    br = math.radians(p.beta_deg)
    x = p.k0 + 0.5 * p.k2 * math.cos(br)
    y = 0.5 * p.k2 * math.sin(br)
    return CompensationTarget.from_xy(x, y)


def magnitude_envelope(k0: float) -> tuple[float, float]:
    """(m_min, m_max) reachable at fixed k0 with k2 and beta free.

    With k2 free in [0, 1 - |k0|] the reachable set is the full disk of
    radius (1 - |k0|)/2 around (k0, 0), so m_max = (1 + |k0|)/2.  The disk
    covers the origin iff |k0| <= 1/3 (m_min = 0); beyond that
    m_min = |k0| - (1 - |k0|)/2 = (3|k0| - 1)/2.
    """
    a = abs(k0)
    if a > 1.0:
        raise ValueError(f"k0 must lie in [-1, 1], got {k0}")
    return (max(0.0, 1.5 * a - 0.5), 0.5 * (1.0 + a))


@dataclass(frozen=True)
class PhaseInterval:
    """Phase window reachable at fixed k0: center +- half_width (degrees)."""

    center_deg: float
    half_width_deg: float

    @property
    def is_full(self) -> bool:
        return self.half_width_deg >= 180.0

    def contains(self, phase_deg: float, tol: float = _ATOL) -> bool:
        if self.is_full:
            return True
        d = normalize_deg(phase_deg - self.center_deg)
        return abs(d) <= self.half_width_deg + tol


def phase_envelope(k0: float) -> PhaseInterval:
    """Reachable phi1 window at fixed k0.

    For |k0| <= 1/3 the disk covers the origin and every phase is reachable.
    Beyond that the window is +-arcsin((1 - |k0|) / (2|k0|)) around 0 for
    k0 > 0, or around 180 for k0 < 0.
    """
    a = abs(k0)
    if a > 1.0:
        raise ValueError(f"k0 must lie in [-1, 1], got {k0}")
    center = 0.0 if k0 >= 0.0 else 180.0
    if a <= 1.0 / 3.0:
        return PhaseInterval(center, 180.0)
    half = math.degrees(math.asin((1.0 - a) / (2.0 * a)))
    return PhaseInterval(center, half)


def rhombus_contains(t: CompensationTarget, eps: float = 0.0) -> bool:
    """Membership in the beta = +-90 deg region |x| + 2|y| <= 1 (within eps)."""
    return abs(t.x) + 2.0 * abs(t.y) <= 1.0 + eps + _ATOL


def _total_region_distance(x: float, y: float) -> float:
    """Signed distance from (x, y) to the total region (negative inside).

    The region is symmetric in both axes.  Folding into the first quadrant,
    the nearest disk centre k0* = x - y/sqrt(3) is the unconstrained optimum;
    clamping it to [0, 1] yields the three boundary pieces: the central
    circle of radius 1/2, the tangent line x + sqrt(3) y = 1 (at distance
    (x + sqrt(3) y - 1)/2), and the corner point (1, 0).
    """
    xa, ya = abs(x), abs(y)
    k = xa - ya / SQRT3
    if k <= 0.0:
        return math.hypot(xa, ya) - 0.5
    if k >= 1.0:
        return math.hypot(xa - 1.0, ya)
    return 0.5 * (xa + SQRT3 * ya - 1.0)


def total_region_contains(t: CompensationTarget, eps: float = 0.0) -> bool:
    """Membership in the full reachable set (any beta), within eps."""
    return _total_region_distance(t.x, t.y) <= eps + _ATOL


def boundary_radius(theta_deg: float) -> float:
    """Radial extent of the total region along polar angle theta."""
    th = math.radians(normalize_deg(theta_deg))
    c, s = abs(math.cos(th)), abs(math.sin(th))
    # Tangent-line piece applies while the ray meets the line inside the
    # region (|theta| <= 60 deg off the nearest x-axis direction).
    if c >= 0.5:
        return 1.0 / (c + SQRT3 * s)
    return 0.5


def region_boundary(samples: int) -> np.ndarray:
    """Closed boundary polyline of the total region, ordered by polar angle.

    Returns an (samples, 2) array of (x, y) points starting at (1, 0).
    """
    if samples < 8:
        raise ValueError(f"samples must be >= 8, got {samples}")
    theta = np.linspace(0.0, 360.0, samples, endpoint=False)
    r = np.array([boundary_radius(t) for t in theta])
    rad = np.radians(theta)
    return np.column_stack((r * np.cos(rad), r * np.sin(rad)))
