"""Parameter selection and two-stage closed-loop regulation.

Open-loop selection: with beta fixed at +-90 deg the double-frequency duty
contributes a vector perpendicular to the k0 axis, which minimizes k2 (and
with it the injected third harmonic) for any target inside the rhombus
|x| + 2|y| <= 1.  Targets outside the rhombus but inside the total region
require a general beta; `solve_params_general` finds the smallest-k2 triple.

Closed loop: the phase loop walks k2 until the measured phase is within the
tolerance band, then freezes the ratio k2/k0 and the amplitude loop scales k0
(and k2 with it) until the measured amplitude converges.  With beta = +-90 the
frozen ratio keeps the phase exactly constant while the amplitude moves.  The
loop is plant-agnostic: any callable mapping ControlParams to a Measurement
works, including the switching simulator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

from .converter import GridSource, compensation_voltages
from .phasor import TransformerSpec, _sind, angle_distance_deg, normalize_deg
from .region import (
    SQRT3,
    CompensationTarget,
    ControlParams,
    RegionError,
    boundary_radius,
    forward_target,
    is_feasible,
    rhombus_contains,
    total_region_contains,
)

MODE_PHASE = "phase"
MODE_AMPLITUDE = "amplitude"
MODE_CONVERGED = "converged"

# Default feasibility tolerance for controller-facing calls; covers operating
# points that sit marginally outside the strict rhombus (margin in operation).
EPS_CONTROLLER = 0.01


@dataclass(frozen=True)
class ReferenceSetpoint:
    """Desired compensation voltage: amplitude (V), phase (deg), tolerances."""

    u_ref: float
    phi_ref_deg: float
    delta_deg: float = 1.0
    amp_tol_rel: float = 0.01

    def __post_init__(self) -> None:
        if self.u_ref < 0.0:
            raise ValueError(f"u_ref must be >= 0, got {self.u_ref}")
        if not self.delta_deg > 0.0 or not self.amp_tol_rel > 0.0:
            raise ValueError("tolerances must be > 0")


@dataclass(frozen=True)
class Measurement:
    """Sampled compensation voltage: amplitude (V) and phase lead (deg)."""

    u_o1: float
    phi_o1_deg: float

    def __post_init__(self) -> None:
        if self.u_o1 < 0.0:
            raise ValueError(f"u_o1 must be >= 0, got {self.u_o1}")


@dataclass(frozen=True)
class ControlGains:
    phase: float = 0.5
    amplitude: float = 0.5


@dataclass(frozen=True)
class LoopState:
    """Regulator state: current triple, loop mode, frozen k2/k0 ratio."""

    params: ControlParams
    mode: str = MODE_PHASE
    saved_ratio: float | None = None
    iteration: int = 0

    def __post_init__(self) -> None:
        if self.mode not in (MODE_PHASE, MODE_AMPLITUDE, MODE_CONVERGED):
            raise ValueError(f"unknown mode {self.mode!r}")
        if (self.saved_ratio is None) != (self.mode == MODE_PHASE):
            raise ValueError("saved_ratio must be set exactly in amplitude/converged modes")


Plant = Callable[[ControlParams], Measurement]


def target_from_reference(
    u_ref: float, phi_ref_deg: float, u_im: float, n_o: float
) -> CompensationTarget:
    """Normalize a physical setpoint (amplitude of u_oa, lead vs u_ia1)."""
    return CompensationTarget(u_ref * n_o / (SQRT3 * u_im), phi_ref_deg - 30.0)


def reference_from_target(t: CompensationTarget, u_im: float, n_o: float) -> tuple[float, float]:
    """Physical (amplitude, phase) of u_oa for a normalized target."""
    return (SQRT3 * t.m * u_im / n_o, normalize_deg(t.phi1_deg + 30.0))


def nearest_rhombus_target(t: CompensationTarget) -> CompensationTarget:
    """Euclidean projection of a target onto the rhombus |x| + 2|y| <= 1."""
    xa, ya = abs(t.x), abs(t.y)
    if xa + 2.0 * ya <= 1.0:
        return t
    # project onto the first-quadrant edge from (1, 0) to (0, 1/2)
    dx, dy = -1.0, 0.5
    s = ((xa - 1.0) * dx + ya * dy) / (dx * dx + dy * dy)
    s = min(max(s, 0.0), 1.0)
    px, py = 1.0 + s * dx, s * dy
    return CompensationTarget.from_xy(math.copysign(px, t.x), math.copysign(py, t.y))


def select_params(target: CompensationTarget, eps_feas: float = 0.0) -> ControlParams:
    """Minimum-k2 triple for a rhombus target: beta = +-90, k0 = m cos(phi1).

    beta is +90 deg for phi1 in [0, 180) and -90 deg otherwise; then
    k0 = m cos(phi1) and k2 = 2 m |sin(phi1)| reproduce the target exactly.
    Raises RegionError (carrying the nearest rhombus point) outside the
    rhombus beyond eps_feas.
    """
    if not rhombus_contains(target, eps_feas):
        raise RegionError(
            f"target (m={target.m:.6g}, phi1={target.phi1_deg:.6g} deg) is outside "
            f"the beta=+-90 rhombus (eps={eps_feas:g})",
            nearest=nearest_rhombus_target(target),
        )
    phi1 = target.phi1_deg
    beta = 90.0 if 0.0 <= phi1 < 180.0 else -90.0
    s = math.sin(math.radians(phi1))
    # eps-admitted on-axis targets can ask for |k0| marginally above 1
    k0 = min(max(target.m * math.cos(math.radians(phi1)), -1.0), 1.0)
    return ControlParams(k0, 2.0 * target.m * abs(s), beta)


def _nearest_total_region_target(t: CompensationTarget) -> CompensationTarget:
    """Radial projection onto the total region boundary."""
    return CompensationTarget(min(t.m, boundary_radius(t.phi1_deg)), t.phi1_deg)


def solve_params_general(target: CompensationTarget, eps_feas: float = 0.0) -> ControlParams:
    """Smallest-k2 triple for any target inside the total region.

    k2(k0) = 2 |target - (k0, 0)| is needed to reach the target from the disk
    centre (k0, 0); it shrinks as k0 approaches x while the duty limit
    1 - |k0| tightens.  A coarse k0 grid locates the feasible stretch and a
    bisection on the limit refines the boundary point nearest x, which
    carries the minimum feasible k2.  Inside the rhombus this lands on
    k0 = x exactly, matching select_params.
    """
    x, y = target.x, target.y
    if rhombus_contains(target, eps_feas):
        k0 = min(max(x, -1.0), 1.0)
        k2 = 2.0 * math.hypot(x - k0, y)
        beta = math.degrees(math.atan2(y, x - k0)) if k2 > 0.0 else 90.0
        return ControlParams(k0, k2, beta)
    if not total_region_contains(target, eps_feas):
        raise RegionError(
            f"target (m={target.m:.6g}, phi1={target.phi1_deg:.6g} deg) is outside "
            f"the total regulation region (eps={eps_feas:g})",
            nearest=_nearest_total_region_target(target),
        )

    sign_x = 1.0 if x >= 0.0 else -1.0
    xa, ya = abs(x), abs(y)

    def excess(k: float) -> float:
        # positive when the required k2 exceeds the duty limit at |k0| = k
        return 2.0 * math.hypot(xa - k, ya) - (1.0 - k) - eps_feas

    # tangency contact of the distance-to-region problem; always feasible
    # (up to numeric slack) when the containment test passed
    k_c = min(max(xa - ya / SQRT3, 0.0), 1.0)
    # grid pass per the coarse-search construction, then refine toward xa
    lo = k_c
    best = excess(k_c)
    n_grid = 2001
    for i in range(n_grid):
        k = k_c + (xa - k_c) * i / (n_grid - 1)
        if excess(k) <= 0.0:
            lo = k
        else:
            break
    hi = min(xa, 1.0)
    if excess(hi) <= 0.0:
        lo = hi
    elif excess(lo) <= 0.0:
        a, b = lo, hi
        for _ in range(60):
            mid = 0.5 * (a + b)
            if excess(mid) <= 0.0:
                a = mid
            else:
                b = mid
        lo = a
    elif best > 2e-9:
        raise RegionError(
            f"no feasible duty triple reaches (m={target.m:.6g}, "
            f"phi1={target.phi1_deg:.6g} deg)",
            nearest=_nearest_total_region_target(target),
        )

    k0 = sign_x * lo
    k2 = min(2.0 * math.hypot(x - k0, y), 1.0 - lo + eps_feas)
    beta = math.degrees(math.atan2(y, x - k0))
    return ControlParams(k0, k2, beta)


@dataclass(frozen=True)
class AnalyticPlant:
    """Measurement oracle backed by the averaged converter model."""

    grid: GridSource
    t_o: TransformerSpec

    def __call__(self, params: ControlParams) -> Measurement:
        comp = compensation_voltages(params, self.grid, self.t_o)
        return Measurement(comp.a.amplitude, comp.a.phase_deg)


def default_initial_params(phi_ref_deg: float) -> ControlParams:
    """Standard loop seed: k0 = k2 = 0.2 with beta chosen per target half-plane."""
    phi1 = normalize_deg(phi_ref_deg - 30.0)
    return ControlParams(0.2, 0.2, 90.0 if 0.0 <= phi1 < 180.0 else -90.0)


def _calibrated_target(
    params: ControlParams, meas: Measurement, ref: ReferenceSetpoint
) -> CompensationTarget | None:
    """Infer the normalized target from the measurement of the current point.

    The plant is linear in m with a fixed angular offset (the connection
    group's +30 deg on the ideal model), so one measurement of a nonzero
    operating point calibrates both.
    """
    cur = forward_target(params)
    if cur.m <= 1e-9 or meas.u_o1 <= 0.0:
        return None
    scale = meas.u_o1 / cur.m
    offset = angle_distance_deg(meas.phi_o1_deg, cur.phi1_deg)
    return CompensationTarget(ref.u_ref / scale, normalize_deg(ref.phi_ref_deg - offset))


def _reseed(
    tgt: CompensationTarget | None, fallback_beta: float, eps_feas: float, iteration: int
) -> LoopState:
    """Restart the phase loop from a fresh selection of the inferred target."""
    if tgt is None:
        return LoopState(ControlParams(0.15, 0.15, fallback_beta), MODE_PHASE, None, iteration)
    try:
        params = select_params(tgt, eps_feas)
    except RegionError as err:
        params = select_params(err.nearest, eps_feas)
    return LoopState(params, MODE_PHASE, None, iteration)


def loop_step(
    state: LoopState,
    meas: Measurement,
    ref: ReferenceSetpoint,
    gains: ControlGains = ControlGains(),
    eps_feas: float = EPS_CONTROLLER,
) -> LoopState:
    """One regulator update from one measurement.

    Phase mode moves k2 in the direction sign(k0) * sign(sin beta) dictates
    (the sign of d(phi1)/d(k2)); once the phase error is within the band the
    ratio k2/k0 is frozen and amplitude mode scales k0 multiplicatively.
    Updates clamp into the eps-relaxed feasible set.  Degenerate states
    (k0 = 0, a clamped phase loop, or a target in the opposite half-plane)
    restart from a fresh selection instead of walking through the origin.
    """
    p = state.params
    it = state.iteration + 1
    if state.mode == MODE_CONVERGED:
        return replace(state, iteration=it)

    phi_err = angle_distance_deg(meas.phi_o1_deg, ref.phi_ref_deg)
    amp_err = (meas.u_o1 - ref.u_ref) / max(ref.u_ref, 1e-9)
    tgt = _calibrated_target(p, meas, ref)

    mismatch = False
    if tgt is not None:
        sb = _sind(p.beta_deg)
        if abs(tgt.x) > 0.02 and (tgt.x > 0.0) != (p.k0 > 0.0):
            mismatch = True
        if abs(tgt.y) > 0.02 and sb != 0.0 and (tgt.y > 0.0) != (sb > 0.0):
            mismatch = True

    if state.mode == MODE_PHASE:
        if abs(phi_err) <= ref.delta_deg and p.k0 != 0.0:
            return LoopState(p, MODE_AMPLITUDE, p.k2 / p.k0, it)
        slope = math.copysign(1.0, p.k0) * _sind(p.beta_deg) if p.k0 != 0.0 else 0.0
        if p.k0 == 0.0 or slope == 0.0 or mismatch:
            return _reseed(tgt, p.beta_deg, eps_feas, it)
        step = gains.phase * (abs(phi_err) / 90.0) * (1.0 - abs(p.k0))
        delta_k2 = -math.copysign(step, phi_err * slope)
        k2_new = min(max(p.k2 + delta_k2, 0.0), 1.0 - abs(p.k0) + eps_feas)
        if k2_new == p.k2:
            # clamped: the target phase is unreachable at this k0
            return _reseed(tgt, p.beta_deg, eps_feas, it)
        return LoopState(ControlParams(p.k0, k2_new, p.beta_deg), MODE_PHASE, None, it)

    # amplitude mode
    if abs(amp_err) <= ref.amp_tol_rel:
        if abs(phi_err) <= ref.delta_deg:
            return LoopState(p, MODE_CONVERGED, state.saved_ratio, it)
        return LoopState(p, MODE_PHASE, None, it)
    if mismatch:
        return _reseed(tgt, p.beta_deg, eps_feas, it)
    ratio = state.saved_ratio
    factor = min(max(1.0 - gains.amplitude * amp_err, 0.2), 2.0)
    k0_lim = min((1.0 + eps_feas) / (1.0 + abs(ratio)), 1.0)
    k0_new = min(max(p.k0 * factor, -k0_lim), k0_lim)
    return LoopState(ControlParams(k0_new, ratio * k0_new, p.beta_deg), MODE_AMPLITUDE, ratio, it)


@dataclass(frozen=True)
class ClosedLoopResult:
    """Full regulation trace; `converged` is False when max_iter ran out."""

    converged: bool
    final_state: LoopState
    states: tuple[LoopState, ...]
    measurements: tuple[Measurement, ...]
    best_state: LoopState | None
    best_measurement: Measurement | None

    def trace_rows(self) -> list[dict]:
        rows = []
        for st, ms in zip(self.states, self.measurements):
            rows.append(
                {
                    "iteration": st.iteration,
                    "mode": st.mode,
                    "k0": st.params.k0,
                    "k2": st.params.k2,
                    "beta_deg": st.params.beta_deg,
                    "U_o1": ms.u_o1,
                    "phi_o1_deg": ms.phi_o1_deg,
                }
            )
        return rows


def run_closed_loop(
    plant: Plant,
    ref: ReferenceSetpoint,
    init: ControlParams,
    max_iter: int,
    gains: ControlGains = ControlGains(),
    eps_feas: float = EPS_CONTROLLER,
) -> ClosedLoopResult:
    """Iterate loop_step against a plant until convergence or max_iter.

    Non-convergence is an outcome, not an exception: the result carries the
    best state seen (smallest worst-case tolerance ratio).  Every visited
    state stays inside the eps-relaxed feasible set.
    """
    state = LoopState(init, MODE_PHASE, None, 0)
    states: list[LoopState] = []
    measurements: list[Measurement] = []
    best: tuple[float, LoopState, Measurement] | None = None
    for _ in range(max_iter):
        meas = plant(state.params)
        states.append(state)
        measurements.append(meas)
        phi_err = abs(angle_distance_deg(meas.phi_o1_deg, ref.phi_ref_deg))
        amp_err = abs(meas.u_o1 - ref.u_ref) / max(ref.u_ref, 1e-9)
        metric = max(phi_err / ref.delta_deg, amp_err / ref.amp_tol_rel)
        if best is None or metric < best[0]:
            best = (metric, state, meas)
        state = loop_step(state, meas, ref, gains, eps_feas)
        if state.mode == MODE_CONVERGED:
            states.append(state)
            measurements.append(meas)
            break
    converged = state.mode == MODE_CONVERGED
    return ClosedLoopResult(
        converged=converged,
        final_state=state,
        states=tuple(states),
        measurements=tuple(measurements),
        best_state=best[1] if best else None,
        best_measurement=best[2] if best else None,
    )
