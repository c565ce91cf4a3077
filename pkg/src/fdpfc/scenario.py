"""Declarative scenario files: INI-style sections, key = value, # comments.

Keys carry their units in the name (Lf_mH, U_ref_V, phi_ref_deg).  Omitted
keys fall back to the reference prototype's specifications (200 sqrt(2) V
grid line amplitude, 50 Hz, 25 kHz switching, 200/70 and 220/127 transformer
ratios, 0.66 mH / 4.4 uF filter); unknown sections or keys are errors, not
warnings.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, fields

from .control import ControlGains, ReferenceSetpoint
from .converter import GridSource
from .gridline import LineModel
from .phasor import Phasor, TransformerSpec
from .simulate import CircuitParams, SimConfig


class ScenarioError(ValueError):
    """Malformed scenario text: syntax, unknown key, or out-of-range value."""


def _float(raw: str, key: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ScenarioError(f"{key}: not a number: {raw!r}") from None


def _pos(raw: str, key: str) -> float:
    v = _float(raw, key)
    if not v > 0.0:
        raise ScenarioError(f"{key}: must be > 0, got {v}")
    return v


def _nonneg(raw: str, key: str) -> float:
    v = _float(raw, key)
    if v < 0.0:
        raise ScenarioError(f"{key}: must be >= 0, got {v}")
    return v


def _any(raw: str, key: str) -> float:
    return _float(raw, key)


def _int_min(minimum: int):
    def conv(raw: str, key: str) -> int:
        try:
            v = int(raw)
        except ValueError:
            raise ScenarioError(f"{key}: not an integer: {raw!r}") from None
        if v < minimum:
            raise ScenarioError(f"{key}: must be >= {minimum}, got {v}")
        return v

    return conv


def _choice(*allowed: str):
    def conv(raw: str, key: str) -> str:
        if raw not in allowed:
            raise ScenarioError(f"{key}: must be one of {allowed}, got {raw!r}")
        return raw

    return conv


def _name(raw: str, key: str) -> str:
    if not raw:
        raise ScenarioError(f"{key}: must be nonempty")
    return raw


_SQRT2 = math.sqrt(2.0)

# section -> key -> (attribute, default, converter)
_SCHEMA: dict[str, dict[str, tuple[str, object, object]]] = {
    "grid": {
        "U_imL_V": ("u_iml", 200.0 * _SQRT2, _pos),
        "f_Hz": ("f_hz", 50.0, _pos),
    },
    "transformers": {
        "N_i": ("n_i", 200.0 / 70.0, _pos),
        "N_o": ("n_o", 220.0 / 127.0, _pos),
        "group": ("group", "Dyn11", _choice(*TransformerSpec.SUPPORTED_GROUPS)),
    },
    "filter": {
        "Lf_mH": ("lf_mh", 0.66, _pos),
        "Cf_uF": ("cf_uf", 4.4, _pos),
        "Rload_ohm": ("rload_ohm", 50.0, _pos),
        "fs_kHz": ("fs_khz", 25.0, _pos),
    },
    "control": {
        "U_ref_V": ("u_ref", 26.0 * _SQRT2, _nonneg),
        "phi_ref_deg": ("phi_ref_deg", -38.0, _any),
        "delta_deg": ("delta_deg", 1.0, _pos),
        "amp_tol_rel": ("amp_tol_rel", 0.01, _pos),
        "gain_phase": ("gain_phase", 0.5, _pos),
        "gain_amp": ("gain_amp", 0.5, _pos),
        "plant": ("plant", "analytic", _choice("analytic", "switching")),
        "max_iter": ("max_iter", 200, _int_min(0)),
    },
    "sim": {
        "dt_us": ("dt_us", 0.4, _pos),
        "duration_ms": ("duration_ms", 120.0, _pos),
        "settle_cycles": ("settle_cycles", 3, _int_min(0)),
    },
    "line": {
        "R_ohm": ("line_r", 0.0, _nonneg),
        "X_ohm": ("line_x", 10.0, _any),
        "Ur_V": ("line_ur", 200.0 * _SQRT2, _pos),
        "delta_r_deg": ("line_delta_r_deg", 0.0, _any),
    },
    "outputs": {
        "decimation": ("decimation", 10, _int_min(1)),
        "region_samples": ("region_samples", 720, _int_min(8)),
        "sweep_m": ("sweep_m", 0.3, _nonneg),
        "sweep_step_deg": ("sweep_step_deg", 0.5, _pos),
        "region_csv": ("region_csv", "region.csv", _name),
        "waveforms_csv": ("waveforms_csv", "waveforms.csv", _name),
        "trace_csv": ("trace_csv", "trace.csv", _name),
        "sweep_csv": ("sweep_csv", "sweep.csv", _name),
        "analytic_csv": ("analytic_csv", "analytic.csv", _name),
        "table2_csv": ("table2_csv", "table2.csv", _name),
    },
}


@dataclass(frozen=True)
class Scenario:
    u_iml: float
    f_hz: float
    n_i: float
    n_o: float
    group: str
    lf_mh: float
    cf_uf: float
    rload_ohm: float
    fs_khz: float
    u_ref: float
    phi_ref_deg: float
    delta_deg: float
    amp_tol_rel: float
    gain_phase: float
    gain_amp: float
    plant: str
    max_iter: int
    dt_us: float
    duration_ms: float
    settle_cycles: int
    line_r: float
    line_x: float
    line_ur: float
    line_delta_r_deg: float
    decimation: int
    region_samples: int
    sweep_m: float
    sweep_step_deg: float
    region_csv: str
    waveforms_csv: str
    trace_csv: str
    sweep_csv: str
    analytic_csv: str
    table2_csv: str

    def grid_source(self) -> GridSource:
        return GridSource(self.u_iml, self.f_hz, self.n_i)

    def output_transformer(self) -> TransformerSpec:
        return TransformerSpec(self.n_o, self.group)

    def circuit(self) -> CircuitParams:
        return CircuitParams(
            f_s=self.fs_khz * 1e3,
            l_f=self.lf_mh * 1e-3,
            c_f=self.cf_uf * 1e-6,
            r_load=self.rload_ohm,
            grid=self.grid_source(),
            t_o=self.output_transformer(),
        )

    def sim_config(self) -> SimConfig:
        return SimConfig(self.dt_us * 1e-6, self.duration_ms * 1e-3, self.settle_cycles)

    def reference(self) -> ReferenceSetpoint:
        return ReferenceSetpoint(self.u_ref, self.phi_ref_deg, self.delta_deg, self.amp_tol_rel)

    def gains(self) -> ControlGains:
        return ControlGains(self.gain_phase, self.gain_amp)

    def line_model(self) -> LineModel:
        return LineModel(
            self.line_r, self.line_x, Phasor.from_polar(self.line_ur, self.line_delta_r_deg)
        )


def default_scenario() -> Scenario:
    values = {attr: default for sec in _SCHEMA.values() for attr, default, _ in sec.values()}
    return Scenario(**values)


def parse_scenario(text: str) -> Scenario:
    """Parse scenario text; defaults fill omitted keys, unknown keys are errors."""
    cp = configparser.ConfigParser(
        comment_prefixes=("#",), inline_comment_prefixes=("#",), interpolation=None
    )
    cp.optionxform = str  # keys are case-sensitive
    try:
        cp.read_string(text)
    except configparser.Error as err:
        raise ScenarioError(f"scenario syntax error: {err}") from None

    values = {attr: default for sec in _SCHEMA.values() for attr, default, _ in sec.values()}
    for section in cp.sections():
        if section not in _SCHEMA:
            raise ScenarioError(
                f"unknown section [{section}] (known: {', '.join(sorted(_SCHEMA))})"
            )
        for key, raw in cp.items(section):
            if key not in _SCHEMA[section]:
                raise ScenarioError(
                    f"unknown key {key!r} in [{section}] "
                    f"(known: {', '.join(sorted(_SCHEMA[section]))})"
                )
            attr, _, conv = _SCHEMA[section][key]
            values[attr] = conv(raw, key)
    scn = Scenario(**values)
    _cross_validate(scn)
    return scn


def _cross_validate(scn: Scenario) -> None:
    # constructing the domain objects runs their own invariant checks
    try:
        scn.circuit()
        scn.sim_config().validate_against(scn.circuit())
        scn.reference()
        scn.line_model()
    except ValueError as err:
        raise ScenarioError(str(err)) from None


def scenario_to_text(scn: Scenario) -> str:
    """Render a scenario back to its file form (all keys explicit)."""
    by_attr = {attr: (sec, key) for sec, keys in _SCHEMA.items() for key, (attr, _, _) in keys.items()}
    lines: dict[str, list[str]] = {sec: [] for sec in _SCHEMA}
    for f in fields(scn):
        sec, key = by_attr[f.name]
        v = getattr(scn, f.name)
        lines[sec].append(f"{key} = {v!r}" if isinstance(v, float) else f"{key} = {v}")
    chunks = []
    for sec in _SCHEMA:
        chunks.append(f"[{sec}]")
        chunks.extend(lines[sec])
        chunks.append("")
    return "\n".join(chunks)
