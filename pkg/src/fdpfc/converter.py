"""Averaged (ideal-switching) model of the full-range AC/AC compensation chain.

Chain, per phase x in {a, b, c}:

    d_x(t) = k0 + k2 sin(2 w t + beta2 + off_x)          duty cycle
    u_ox2(t) = d_x(t) * u_ix(t)                          chopped average
             = U_im [ k0 sin(w t + ph_x)
                      + (k2/2) sin(w t + beta2 + 90 + ph2_x)
                      - (k2/2) cos(3 w t + beta2) ]      expansion

The product contains only a balanced fundamental set and a third harmonic
common to all three phases.  The output transformer's winding differences
cancel that common mode, leaving the compensation phase voltages

    u_oa = sqrt(3) U_om / N_o * sin(w t + phi1 + 30 deg)

which add in series with the grid line voltages.  All phases are referenced
to the bridge input u_ia1 = U_im sin(w t), which shares the phase of the grid
line voltage u_iab.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .phasor import (
    KIND_LINE,
    PRIMARY_TO_SECONDARY,
    Phasor,
    ThreePhaseSet,
    TransformerSpec,
    line_from_phase,
    normalize_deg,
    reflect_through_transformer,
)
from .region import ControlParams, forward_target

# Duty-cycle phase offsets (deg) for phases a, b, c, and the corresponding
# input-voltage offsets: d_b carries +120 at double frequency because the
# substitution w t -> w t - 120 doubles.
DUTY_OFFSETS_DEG = (0.0, 120.0, -120.0)
VOLT_OFFSETS_DEG = (0.0, -120.0, 120.0)


@dataclass(frozen=True)
class GridSource:
    """Stiff grid behind the input transformer.

    ``u_iml`` is the amplitude of the grid line voltage u_iab (reference
    phase 0); the input transformer ratio ``n_i`` sets the bridge input
    amplitude U_im = u_iml / n_i, in phase with u_iab.
    """

    u_iml: float
    f_hz: float
    n_i: float = 1.0

    def __post_init__(self) -> None:
        if not self.u_iml > 0.0:
            raise ValueError(f"u_iml must be > 0, got {self.u_iml}")
        if not self.f_hz > 0.0:
            raise ValueError(f"f_hz must be > 0, got {self.f_hz}")
        if not self.n_i > 0.0:
            raise ValueError(f"n_i must be > 0, got {self.n_i}")

    @property
    def u_im(self) -> float:
        """Bridge input amplitude (line voltage reflected through T_i)."""
        return self.u_iml / self.n_i

    @property
    def omega(self) -> float:
        return 2.0 * math.pi * self.f_hz

    def line_voltages(self) -> ThreePhaseSet:
        """Balanced grid line set (u_iab, u_ibc, u_ica), a-member at 0 deg."""
        return ThreePhaseSet.balanced(self.u_iml, 0.0, kind=KIND_LINE)

    def bridge_phase_voltages(self) -> ThreePhaseSet:
        """Bridge input set (u_ia, u_ib, u_ic), a-member at 0 deg."""
        return ThreePhaseSet.balanced(self.u_im, 0.0)


@dataclass(frozen=True)
class DutyWaveform:
    """Time evaluator of the three duty cycles for one modulation triple."""

    params: ControlParams
    omega: float

    def __call__(self, t):
        """Duty cycles at time(s) t: shape (3,) for scalar t, (3, n) for arrays."""
        t = np.asarray(t, dtype=float)
        b2 = math.radians(self.params.beta2_deg)
        offs = np.radians(DUTY_OFFSETS_DEG)[:, None] if t.ndim else np.radians(DUTY_OFFSETS_DEG)
        d = self.params.k0 + self.params.k2 * np.sin(2.0 * self.omega * t + b2 + offs)
        return d

    def max_abs(self) -> float:
        """Peak |d_x(t)| over a fundamental period: |k0| + k2 (k2 >= 0)."""
        return abs(self.params.k0) + self.params.k2


def duty_cycles(p: ControlParams, grid: GridSource) -> DutyWaveform:
    """Duty-cycle waveforms d_a, d_b, d_c for the given modulation triple."""
    return DutyWaveform(p, grid.omega)


def averaged_phase_output(p: ControlParams, grid: GridSource, t):
    """Filtered bridge outputs (u_oa2, u_ob2, u_oc2) at time(s) t.

    Each is the product d_x(t) * u_ix(t); shape matches duty_cycles output.
    """
    t = np.asarray(t, dtype=float)
    d = duty_cycles(p, grid)(t)
    offs = np.radians(VOLT_OFFSETS_DEG)[:, None] if t.ndim else np.radians(VOLT_OFFSETS_DEG)
    u_in = grid.u_im * np.sin(grid.omega * t + offs)
    return d * u_in


def fundamental_components(
    p: ControlParams, grid: GridSource
) -> tuple[ThreePhaseSet, Phasor]:
    """Exact spectral content of the averaged bridge outputs.

    Returns the balanced fundamental set (amplitude m * U_im, a-phase at
    phi1) and the common-mode third-harmonic phasor (amplitude U_im * k2 / 2,
    identical in all three phases).
    """
    tgt = forward_target(p)
    fund = ThreePhaseSet.balanced(tgt.m * grid.u_im, tgt.phi1_deg)
    # -(k2/2) U_im cos(3wt + beta2) == (k2/2) U_im sin(3wt + beta2 - 90)
    third = Phasor.from_polar(
        0.5 * p.k2 * grid.u_im, normalize_deg(p.beta2_deg - 90.0), freq_multiple=3
    )
    return fund, third


def compensation_voltages(
    p: ControlParams, grid: GridSource, t_o: TransformerSpec
) -> ThreePhaseSet:
    """Series compensation phase voltages (u_oa, u_ob, u_oc).

    The output transformer's winding differences remove the common third
    harmonic; each secondary phase is sqrt(3) U_om / N_o at phi1 + 30 deg.
    """
    fund, _ = fundamental_components(p, grid)
    return reflect_through_transformer(fund, t_o, PRIMARY_TO_SECONDARY)


@dataclass(frozen=True)
class RegulatedGrid:
    """Regulated line voltages and the polar view of the a-member."""

    lines: ThreePhaseSet
    u_ml: float
    phi_r_deg: float


def regulated_grid(grid: GridSource, comp: ThreePhaseSet) -> RegulatedGrid:
    """Series-compensated grid line voltages u_ab = u_iab + (u_oa - u_ob), etc.

    Exact phasor addition of the balanced grid line set and the line
    combination of the compensation phase voltages.
    """
    if comp.freq_multiple != 1:
        raise ValueError("compensation set must be at the fundamental frequency")
    gl = grid.line_voltages()
    cl = line_from_phase(comp)
    out = ThreePhaseSet(gl.a + cl.a, gl.b + cl.b, gl.c + cl.c, KIND_LINE)
    return RegulatedGrid(out, out.a.amplitude, out.a.phase_deg)
