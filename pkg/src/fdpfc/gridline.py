"""Two-bus power flow: how the regulated sending voltage moves P and Q.

Receiving-end complex power over a series impedance Z = R + jX:

    S = V_r * conj((V_s - V_r) / Z),

which for R = 0 reduces to the familiar P = |V_s||V_r| sin(d) / X and
Q = (|V_s||V_r| cos(d) - |V_r|^2) / X with d the transmission angle.  The
arithmetic is basis-agnostic: feeding line-to-line amplitudes yields
three-phase totals directly (|V_LL|^2 = 3 |V_LN|^2 with angles preserved);
the result records which basis was used.
"""

from __future__ import annotations

from dataclasses import dataclass

from .control import select_params, solve_params_general
from .converter import GridSource, compensation_voltages, regulated_grid
from .phasor import Phasor, TransformerSpec
from .region import CompensationTarget, RegionError

BASIS_PER_PHASE = "per-phase"
BASIS_THREE_PHASE = "three-phase"


@dataclass(frozen=True)
class LineModel:
    """Series line impedance and the fixed receiving-bus phasor."""

    r: float
    x: float
    receiving_bus: Phasor

    def __post_init__(self) -> None:
        if self.r < 0.0:
            raise ValueError(f"line resistance must be >= 0, got {self.r}")
        if self.r == 0.0 and self.x == 0.0:
            raise ValueError("line impedance must be nonzero")

    @property
    def z(self) -> complex:
        return complex(self.r, self.x)


@dataclass(frozen=True)
class FlowResult:
    """Receiving-end active/reactive power with its declared basis."""

    p: float
    q: float
    basis: str = BASIS_PER_PHASE


def power_flow(sending: Phasor, line: LineModel, basis: str = BASIS_PER_PHASE) -> FlowResult:
    """Receiving-end S = V_r conj((V_s - V_r)/Z) for a sending-bus phasor."""
    if sending.freq_multiple != line.receiving_bus.freq_multiple:
        raise ValueError("sending and receiving phasors must share the harmonic order")
    vs = sending.as_complex
    vr = line.receiving_bus.as_complex
    s = vr * ((vs - vr) / line.z).conjugate()
    return FlowResult(s.real, s.imag, basis)


@dataclass(frozen=True)
class SweepRow:
    target: CompensationTarget
    status: str  # "rhombus" | "general" | "infeasible"
    u_ml: float
    phi_r_deg: float
    p: float
    q: float


def flow_sweep(
    targets: list[CompensationTarget],
    grid: GridSource,
    t_o: TransformerSpec,
    line: LineModel,
    eps_feas: float = 0.01,
) -> list[SweepRow]:
    """Evaluate regulated line voltage and receiving-end P/Q per target.

    Each target is solved with the minimum-harmonic selection when it fits
    the rhombus, otherwise with the general solver; targets outside the total
    region are marked infeasible (NaN outputs) rather than raised.  The
    receiving bus is taken as a line-voltage phasor, so P and Q are
    three-phase totals.
    """
    rows: list[SweepRow] = []
    nan = float("nan")
    for tgt in targets:
        try:
            params = select_params(tgt, eps_feas)
            status = "rhombus"
        except RegionError:
            try:
                params = solve_params_general(tgt, eps_feas)
                status = "general"
            except RegionError:
                rows.append(SweepRow(tgt, "infeasible", nan, nan, nan, nan))
                continue
        comp = compensation_voltages(params, grid, t_o)
        reg = regulated_grid(grid, comp)
        flow = power_flow(reg.lines.a, line, BASIS_THREE_PHASE)
        rows.append(SweepRow(tgt, status, reg.u_ml, reg.phi_r_deg, flow.p, flow.q))
    return rows
