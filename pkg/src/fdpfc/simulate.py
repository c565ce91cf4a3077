"""Switching-level time-domain validation of the averaged converter model.

Each phase's full bridge chops its input sinusoid under a leading-edge
sawtooth carrier (duty latched once per carrier period), the LC output filter
is integrated with fixed-step RK4, and the output-transformer combination and
series grid addition are formed sample by sample.  A single-bin DFT over an
integer number of trailing fundamental cycles measures amplitudes and phases
referenced to the bridge input u_ia1 (phase 0 = in phase with sin(w t)).

Switches and transformers are ideal; a configurable resistive load terminates
each filter (the prototype's loading is unspecified) and damps the LC
resonance.  The hot integration kernel lives in `_kernels` and runs on the
numba or numpy backend (see `backend`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from ._kernels import chopped_voltages, rk4_lc_chunk
from .control import Measurement
from .converter import GridSource
from .phasor import Phasor, TransformerSpec, normalize_deg
from .region import ControlParams

_CHANNEL_ORDER = (
    "u_ia1",
    "u_oa1",
    "u_ob1",
    "u_oc1",
    "u_oa2",
    "u_ob2",
    "u_oc2",
    "u_oa",
    "u_ob",
    "u_oc",
    "u_iab",
    "u_ibc",
    "u_ica",
    "u_ab",
    "u_bc",
    "u_ca",
)

# Duty magnitudes marginally above 1 (feasibility slack of the controller)
# saturate to full conduction; beyond this bound the triple is rejected.
_DUTY_HARD_LIMIT = 1.05


@dataclass(frozen=True)
class CircuitParams:
    """Physical constants of the power stage."""

    f_s: float
    l_f: float
    c_f: float
    r_load: float
    grid: GridSource
    t_o: TransformerSpec

    def __post_init__(self) -> None:
        if not self.f_s >= 20.0 * self.grid.f_hz:
            raise ValueError(
                f"switching frequency {self.f_s} Hz must be >= 20x the fundamental "
                f"{self.grid.f_hz} Hz"
            )
        for name in ("l_f", "c_f", "r_load"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be > 0")


@dataclass(frozen=True)
class SimConfig:
    """Integration step, total duration, and cycles discarded before measuring."""

    dt: float
    duration: float
    settle_cycles: int = 3

    def __post_init__(self) -> None:
        if not self.dt > 0.0 or not self.duration > 0.0:
            raise ValueError("dt and duration must be > 0")
        if self.settle_cycles < 0:
            raise ValueError("settle_cycles must be >= 0")

    @classmethod
    def for_circuit(
        cls, c: CircuitParams, cycles: int = 6, settle_cycles: int = 3, steps_per_carrier: int = 100
    ) -> "SimConfig":
        dt = 1.0 / (steps_per_carrier * c.f_s)
        return cls(dt, cycles / c.grid.f_hz, settle_cycles)

    def validate_against(self, c: CircuitParams) -> None:
        if self.dt > 1.0 / (50.0 * c.f_s):
            raise ValueError(
                f"dt={self.dt:g} s is too coarse for f_s={c.f_s:g} Hz "
                f"(need dt <= {1.0 / (50.0 * c.f_s):g} s)"
            )
        min_dur = (self.settle_cycles + 1) / c.grid.f_hz
        if self.duration < min_dur:
            raise ValueError(f"duration must cover settle_cycles + 1 cycles (>= {min_dur:g} s)")


@dataclass
class WaveformRecord:
    """Uniformly sampled multi-channel voltage record."""

    sample_rate: float
    channels: dict[str, np.ndarray]
    fundamental_hz: float
    settle_cycles: int = 0

    def __post_init__(self) -> None:
        lengths = {len(v) for v in self.channels.values()}
        if len(lengths) > 1:
            raise ValueError("all channels must share the same length")

    @property
    def n_samples(self) -> int:
        return len(next(iter(self.channels.values())))

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_samples) / self.sample_rate

    def channel(self, name: str) -> np.ndarray:
        if name not in self.channels:
            raise ValueError(f"unknown channel {name!r} (have {sorted(self.channels)})")
        return self.channels[name]

    def to_csv(self, path, decimation: int = 1) -> None:
        """Write `t_s` plus one column per channel; decimation keeps every k-th sample."""
        if decimation < 1:
            raise ValueError("decimation must be >= 1")
        names = [n for n in _CHANNEL_ORDER if n in self.channels]
        names += [n for n in sorted(self.channels) if n not in names]
        idx = np.arange(0, self.n_samples, decimation)
        t = idx / self.sample_rate
        with open(path, "w", newline="") as fh:
            fh.write("t_s," + ",".join(names) + "\n")
            cols = [self.channels[n] for n in names]
            for j, i in enumerate(idx):
                row = [f"{t[j]:.12g}"] + [f"{c[i]:.12g}" for c in cols]
                fh.write(",".join(row) + "\n")

    @classmethod
    def from_csv(cls, path, fundamental_hz: float, settle_cycles: int = 0) -> "WaveformRecord":
        data = np.genfromtxt(path, delimiter=",", names=True)
        names = list(data.dtype.names)
        if names[0] != "t_s":
            raise ValueError("first column must be t_s")
        t = np.atleast_1d(data["t_s"])
        if len(t) < 2:
            raise ValueError("need at least two samples")
        steps = np.diff(t)
        if np.max(np.abs(steps - steps[0])) > 1e-9 * max(steps[0], 1e-12):
            raise ValueError("sample times must be uniform")
        channels = {n: np.atleast_1d(data[n]).astype(float) for n in names[1:]}
        return cls(1.0 / steps[0], channels, fundamental_hz, settle_cycles)


def switch_function(d, t, f_s: float):
    """Conduction state of one full bridge under a leading-edge sawtooth carrier.

    Within each carrier period T_s = 1/f_s the bridge output follows sign(d)
    for the first |d| * T_s seconds and is zero for the remainder.  Arguments
    broadcast; |d| > 1 is a domain error (callers clamp via feasibility).
    """
    d = np.asarray(d, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(np.abs(d) > 1.0):
        raise ValueError("|d| must be <= 1")
    carrier = t * f_s
    frac = carrier - np.floor(carrier + 1e-9)
    out = np.sign(d) * (frac < np.abs(d))
    return float(out) if out.ndim == 0 else out


class _Engine:
    """Incremental switching simulation with persistent filter state."""

    def __init__(self, circuit: CircuitParams, dt: float):
        self.c = circuit
        self.dt = dt
        spc_f = 1.0 / (circuit.grid.f_hz * dt)
        self.steps_per_cycle = int(round(spc_f))
        if abs(spc_f - self.steps_per_cycle) > 1e-6:
            raise ValueError(
                f"dt={dt:g} s must divide the fundamental period "
                f"(got {spc_f:g} steps per cycle)"
            )
        self.state = np.zeros((2, 3))  # [i_L; u_C] per phase
        self.step = 0  # global step index; t = step * dt

    def run(self, params: ControlParams, n_steps: int, backend: str | None = None) -> dict:
        """Advance n_steps; returns the channel samples at the new steps."""
        g = self.c.grid
        if abs(params.k0) + params.k2 > _DUTY_HARD_LIMIT:
            raise ValueError(
                f"duty peak |k0|+k2 = {abs(params.k0) + params.k2:.4f} exceeds "
                f"the saturation bound {_DUTY_HARD_LIMIT}"
            )
        u_chop = chopped_voltages(
            2 * self.step,
            n_steps,
            self.dt,
            params.k0,
            params.k2,
            math.radians(params.beta2_deg),
            g.omega,
            g.u_im,
            self.c.f_s,
        )
        traj = rk4_lc_chunk(
            u_chop, self.state, self.dt, self.c.l_f, self.c.c_f, self.c.r_load, backend
        )
        if not np.all(np.isfinite(traj)):
            bad = np.argwhere(~np.isfinite(traj))[0]
            t_bad = (self.step + 1 + int(bad[2])) * self.dt
            raise FloatingPointError(f"simulation diverged (non-finite state at t={t_bad:g} s)")
        self.state = traj[:, :, -1].copy()
        t = (self.step + np.arange(1, n_steps + 1)) * self.dt
        self.step += n_steps
        return self._channels(t, u_chop[:, 2::2], traj[1])

    def _channels(self, t: np.ndarray, chopped: np.ndarray, u_c: np.ndarray) -> dict:
        g = self.c.grid
        wt = g.omega * t
        third = 2.0 * math.pi / 3.0
        n_o = self.c.t_o.turn_ratio
        ch = {
            "u_ia1": g.u_im * np.sin(wt),
            "u_oa1": chopped[0],
            "u_ob1": chopped[1],
            "u_oc1": chopped[2],
            "u_oa2": u_c[0],
            "u_ob2": u_c[1],
            "u_oc2": u_c[2],
            "u_oa": (u_c[0] - u_c[1]) / n_o,
            "u_ob": (u_c[1] - u_c[2]) / n_o,
            "u_oc": (u_c[2] - u_c[0]) / n_o,
            "u_iab": g.u_iml * np.sin(wt),
            "u_ibc": g.u_iml * np.sin(wt - third),
            "u_ica": g.u_iml * np.sin(wt + third),
        }
        ch["u_ab"] = ch["u_iab"] + ch["u_oa"] - ch["u_ob"]
        ch["u_bc"] = ch["u_ibc"] + ch["u_ob"] - ch["u_oc"]
        ch["u_ca"] = ch["u_ica"] + ch["u_oc"] - ch["u_oa"]
        return ch

    def initial_channels(self) -> dict:
        t0 = np.zeros(1)
        return self._channels(t0, np.zeros((3, 1)), np.zeros((3, 1)))


def _single_bin_dft(x: np.ndarray, t: np.ndarray, freq: float) -> Phasor:
    """Projection of x(t) onto sin/cos at freq over the (integer-cycle) window."""
    w = 2.0 * math.pi * freq
    a = 2.0 * np.mean(x * np.sin(w * t))
    b = 2.0 * np.mean(x * np.cos(w * t))
    # x = A sin(wt + ph):  a = A cos(ph), b = A sin(ph)
    return Phasor(a, b)


def spectrum_at(rec: WaveformRecord, channel: str, n: int, cycles: int | None = None) -> Phasor:
    """Amplitude/phase of harmonic order n in a channel.

    Single-bin DFT over the trailing `cycles` whole fundamental cycles
    (default: every whole cycle after the record's settling prefix).  The
    phase is referenced to sin(n w t) with t = 0 at the record start, i.e.
    the zero crossing of u_ia1.
    """
    x = rec.channel(channel)
    spc_f = rec.sample_rate / rec.fundamental_hz
    spc = int(round(spc_f))
    if abs(spc_f - spc) > 1e-6:
        raise ValueError("sample rate must be an integer multiple of the fundamental")
    total_cycles = rec.n_samples // spc
    if cycles is None:
        cycles = max(1, total_cycles - rec.settle_cycles)
    if cycles < 1 or cycles * spc > rec.n_samples:
        raise ValueError(
            f"analysis window of {cycles} cycles does not fit a record of "
            f"{rec.n_samples} samples ({total_cycles} whole cycles)"
        )
    win = cycles * spc
    sl = slice(rec.n_samples - win, rec.n_samples)
    t = np.arange(rec.n_samples - win, rec.n_samples) / rec.sample_rate
    ph = _single_bin_dft(x[sl], t, n * rec.fundamental_hz)
    return Phasor(ph.re, ph.im, n)


ControllerCallback = Callable[[Union[Measurement, None]], ControlParams]


def simulate(
    c: CircuitParams,
    source: ControlParams | ControllerCallback,
    cfg: SimConfig,
    backend: str | None = None,
) -> WaveformRecord:
    """Run the switching simulation and collect all channel waveforms.

    ``source`` is either a fixed modulation triple or a controller callback;
    a callback is invoked once with None for the initial triple and then once
    per completed fundamental cycle with that cycle's measurement of u_oa
    (one-cycle latency), returning the triple for the next cycle.
    """
    cfg.validate_against(c)
    eng = _Engine(c, cfg.dt)
    total_steps = int(round(cfg.duration / cfg.dt))
    chunks: list[dict] = [eng.initial_channels()]

    if callable(source):
        params = source(None)
        done = 0
        while done < total_steps:
            n = min(eng.steps_per_cycle, total_steps - done)
            chunk = eng.run(params, n, backend)
            chunks.append(chunk)
            done += n
            if n == eng.steps_per_cycle and done < total_steps:
                window = chunk["u_oa"]
                t = (eng.step - eng.steps_per_cycle + np.arange(1, n + 1)) * eng.dt
                # window covers one whole cycle ending at the current step
                ph = _single_bin_dft(window, t, c.grid.f_hz)
                params = source(Measurement(ph.amplitude, ph.phase_deg))
    else:
        chunks.append(eng.run(source, total_steps, backend))

    names = chunks[0].keys()
    channels = {k: np.concatenate([np.atleast_1d(ch[k]) for ch in chunks]) for k in names}
    return WaveformRecord(1.0 / cfg.dt, channels, c.grid.f_hz, cfg.settle_cycles)


@dataclass
class SwitchingPlant:
    """Measurement oracle backed by the switching simulator.

    Each call applies the triple for one fundamental cycle (filter state and
    absolute time persist across calls) and returns the single-cycle DFT of
    u_oa from that cycle: the one-cycle-latency plant of the closed loop.
    """

    circuit: CircuitParams
    dt: float | None = None
    backend: str | None = None
    _engine: _Engine = field(init=False, repr=False)

    def __post_init__(self) -> None:
        dt = self.dt if self.dt is not None else 1.0 / (100.0 * self.circuit.f_s)
        self._engine = _Engine(self.circuit, dt)

    @property
    def cycles_run(self) -> int:
        return self._engine.step // self._engine.steps_per_cycle

    def __call__(self, params: ControlParams) -> Measurement:
        eng = self._engine
        chunk = eng.run(params, eng.steps_per_cycle, self.backend)
        t = (eng.step - eng.steps_per_cycle + np.arange(1, eng.steps_per_cycle + 1)) * eng.dt
        ph = _single_bin_dft(chunk["u_oa"], t, self.circuit.grid.f_hz)
        return Measurement(ph.amplitude, normalize_deg(ph.phase_deg))
