"""Sinusoidal steady-state arithmetic for single phasors and balanced three-phase sets.

Every sinusoid is written in the sine-reference convention

    u(t) = A * sin(n*w*t + phase),    A >= 0,  phase in (-180, 180] degrees,

where ``n`` is the harmonic order relative to the grid fundamental.  Phasors
are stored in rectangular form (exact addition, no angle wrap-around bugs);
amplitude and phase are derived views.  A zero phasor reports phase 0 so that
equality stays testable after exact cancellations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

PRIMARY_TO_SECONDARY = "primary_to_secondary"
SECONDARY_TO_PRIMARY = "secondary_to_primary"

KIND_PHASE = "phase"
KIND_LINE = "line"


def _sind(deg: float) -> float:
    """sin of an angle in degrees, exact at multiples of 90."""
    r = deg % 360.0
    if r % 180.0 == 0.0:
        return 0.0
    if r == 90.0:
        return 1.0
    if r == 270.0:
        return -1.0
    return math.sin(math.radians(deg))


def _cosd(deg: float) -> float:
    return _sind(deg + 90.0)


def normalize_deg(deg: float) -> float:
    """Fold an angle into (-180, 180]."""
    r = math.remainder(deg, 360.0)
    if r <= -180.0:
        r += 360.0
    return r


def angle_distance_deg(a: float, b: float) -> float:
    """Signed shortest angular distance a - b, in (-180, 180]."""
    return normalize_deg(a - b)


@dataclass(frozen=True)
class Phasor:
    """One sinusoid at harmonic order ``freq_multiple`` of the fundamental."""

    re: float
    im: float
    freq_multiple: int = 1

    def __post_init__(self) -> None:
        if not (isinstance(self.freq_multiple, int) and self.freq_multiple >= 1):
            raise ValueError(f"freq_multiple must be a positive integer, got {self.freq_multiple!r}")

    @classmethod
    def from_polar(cls, amplitude: float, phase_deg: float, freq_multiple: int = 1) -> "Phasor":
        if amplitude < 0.0:
            amplitude, phase_deg = -amplitude, phase_deg + 180.0
        return cls(amplitude * _cosd(phase_deg), amplitude * _sind(phase_deg), freq_multiple)

    @classmethod
    def from_complex(cls, z: complex, freq_multiple: int = 1) -> "Phasor":
        return cls(z.real, z.imag, freq_multiple)

    @property
    def as_complex(self) -> complex:
        return complex(self.re, self.im)

    @property
    def amplitude(self) -> float:
        return math.hypot(self.re, self.im)

    @property
    def phase_deg(self) -> float:
        if self.re == 0.0 and self.im == 0.0:
            return 0.0
        return normalize_deg(math.degrees(math.atan2(self.im, self.re)))

    def __add__(self, other: "Phasor") -> "Phasor":
        if self.freq_multiple != other.freq_multiple:
            raise ValueError(
                f"cannot add phasors at different harmonic orders "
                f"({self.freq_multiple} vs {other.freq_multiple})"
            )
        return Phasor(self.re + other.re, self.im + other.im, self.freq_multiple)

    def __sub__(self, other: "Phasor") -> "Phasor":
        return self + other.scaled(-1.0)

    def scaled(self, factor: float) -> "Phasor":
        return Phasor(self.re * factor, self.im * factor, self.freq_multiple)

    def rotated(self, deg: float) -> "Phasor":
        c, s = _cosd(deg), _sind(deg)
        return Phasor(self.re * c - self.im * s, self.re * s + self.im * c, self.freq_multiple)

    def value_at(self, t: float, fundamental_hz: float) -> float:
        """Instantaneous value A*sin(n*w*t + phase) at time t."""
        wt = 2.0 * math.pi * fundamental_hz * self.freq_multiple * t
        return self.amplitude * math.sin(wt + math.radians(self.phase_deg))

    def isclose(self, other: "Phasor", tol: float = 1e-9) -> bool:
        """Rectangular distance below tol (absolute)."""
        return (
            self.freq_multiple == other.freq_multiple
            and abs(self.as_complex - other.as_complex) <= tol
        )


def add(p: Phasor, q: Phasor) -> Phasor:
    """Phasor of the sum sinusoid; exact complex addition."""
    return p + q


@dataclass(frozen=True)
class ThreePhaseSet:
    """Three phasors of one quantity, tagged as phase or line voltages."""

    a: Phasor
    b: Phasor
    c: Phasor
    kind: str = KIND_PHASE

    def __post_init__(self) -> None:
        if self.kind not in (KIND_PHASE, KIND_LINE):
            raise ValueError(f"kind must be {KIND_PHASE!r} or {KIND_LINE!r}, got {self.kind!r}")
        if not (self.a.freq_multiple == self.b.freq_multiple == self.c.freq_multiple):
            raise ValueError("all three members must share the same harmonic order")

    @classmethod
    def balanced(
        cls, amplitude: float, phase_a_deg: float, freq_multiple: int = 1, kind: str = KIND_PHASE
    ) -> "ThreePhaseSet":
        """Positive-sequence set: b lags a by 120 degrees, c lags b by 120."""
        return cls(
            Phasor.from_polar(amplitude, phase_a_deg, freq_multiple),
            Phasor.from_polar(amplitude, phase_a_deg - 120.0, freq_multiple),
            Phasor.from_polar(amplitude, phase_a_deg + 120.0, freq_multiple),
            kind,
        )

    @property
    def members(self) -> tuple[Phasor, Phasor, Phasor]:
        return (self.a, self.b, self.c)

    @property
    def freq_multiple(self) -> int:
        return self.a.freq_multiple

    def scaled(self, factor: float) -> "ThreePhaseSet":
        return ThreePhaseSet(self.a.scaled(factor), self.b.scaled(factor), self.c.scaled(factor), self.kind)

    def with_kind(self, kind: str) -> "ThreePhaseSet":
        return replace(self, kind=kind)

    def is_balanced(self, rel_tol: float = 1e-9, deg_tol: float = 1e-9) -> bool:
        """Positive-sequence predicate: equal amplitudes, successive -120 deg shifts."""
        amps = [p.amplitude for p in self.members]
        ref = max(amps)
        if ref == 0.0:
            return True
        if max(amps) - min(amps) > rel_tol * ref:
            return False
        ab = angle_distance_deg(self.a.phase_deg, self.b.phase_deg)
        bc = angle_distance_deg(self.b.phase_deg, self.c.phase_deg)
        return abs(ab - 120.0) <= deg_tol and abs(bc - 120.0) <= deg_tol


def line_from_phase(s: ThreePhaseSet) -> ThreePhaseSet:
    """Line voltages (a-b, b-c, c-a) of a phase-voltage set.

    For a balanced positive-sequence input each output member is sqrt(3) times
    larger and leads by 30 degrees; common-mode content (identical in all
    three phases, e.g. a shared third harmonic) cancels exactly.
    """
    if s.kind != KIND_PHASE:
        raise ValueError("line_from_phase expects a phase-voltage set")
    return ThreePhaseSet(s.a - s.b, s.b - s.c, s.c - s.a, KIND_LINE)


def phase_from_line(s: ThreePhaseSet, rel_tol: float = 1e-9) -> ThreePhaseSet:
    """Zero-common-mode phase voltages reconstructed from a line-voltage set.

    The members of a line set always sum to zero; the reconstruction picks the
    unique phase set with zero common mode (the lost degree of freedom).
    """
    if s.kind != KIND_LINE:
        raise ValueError("phase_from_line expects a line-voltage set")
    za, zb, zc = (p.as_complex for p in s.members)
    scale = max(abs(za), abs(zb), abs(zc), 1.0)
    if abs(za + zb + zc) > rel_tol * 3.0 * scale:
        raise ValueError("line-voltage members must sum to zero")
    n = s.freq_multiple
    pa = (za - zc) / 3.0
    pb = pa - za
    pc = pb - zb
    return ThreePhaseSet(
        Phasor.from_complex(pa, n), Phasor.from_complex(pb, n), Phasor.from_complex(pc, n), KIND_PHASE
    )


@dataclass(frozen=True)
class TransformerSpec:
    """Turns ratio and connection group of a three-phase transformer.

    Only the delta-primary / wye-secondary group with the secondary leading by
    30 degrees (Dyn11) is supported; other groups shift the whole regulation
    region by multiples of 60 degrees and are out of scope.
    """

    turn_ratio: float
    group: str = "Dyn11"

    SUPPORTED_GROUPS = ("Dyn11",)

    def __post_init__(self) -> None:
        if not self.turn_ratio > 0.0:
            raise ValueError(f"turn_ratio must be > 0, got {self.turn_ratio}")
        if self.group not in self.SUPPORTED_GROUPS:
            raise ValueError(f"unsupported connection group {self.group!r}")


def reflect_through_transformer(
    s: ThreePhaseSet, t: TransformerSpec, direction: str = PRIMARY_TO_SECONDARY
) -> ThreePhaseSet:
    """Map a three-phase set across a Dyn11 transformer.

    The delta winding sits between primary lines, so each wye-side phase
    voltage equals the corresponding primary line-to-line voltage divided by
    the turns ratio, with no additional shift.  A primary set given as phase
    voltages is first converted to its line set (gaining the familiar
    sqrt(3) / +30 deg of the connection group); its common mode cannot cross
    the winding and is dropped.  secondary_to_primary applies the inverse map
    and returns the primary line set, so line-referenced round trips are exact.
    """
    if direction == PRIMARY_TO_SECONDARY:
        w = line_from_phase(s) if s.kind == KIND_PHASE else s
        return w.scaled(1.0 / t.turn_ratio).with_kind(KIND_PHASE)
    if direction == SECONDARY_TO_PRIMARY:
        y = phase_from_line(s) if s.kind == KIND_LINE else s
        return y.scaled(t.turn_ratio).with_kind(KIND_LINE)
    raise ValueError(f"unknown direction {direction!r}")
