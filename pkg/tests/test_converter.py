import math

import numpy as np
import pytest

from fdpfc.converter import (
    GridSource,
    averaged_phase_output,
    compensation_voltages,
    duty_cycles,
    fundamental_components,
    regulated_grid,
)
from fdpfc.phasor import Phasor, ThreePhaseSet, angle_distance_deg
from fdpfc.region import ControlParams

SQRT2 = math.sqrt(2.0)
SQRT3 = math.sqrt(3.0)


def single_bin(x, t, freq):
    a = 2.0 * np.mean(x * np.sin(2 * np.pi * freq * t))
    b = 2.0 * np.mean(x * np.cos(2 * np.pi * freq * t))
    return math.hypot(a, b), math.degrees(math.atan2(b, a))


def dense_cycle(grid, cycles=1, n=20000):
    return np.linspace(0.0, cycles / grid.f_hz, n, endpoint=False)


def refined_duty_peak(wave, period):
    """Grid scan plus golden-section refinement of max |d_a(t)|."""
    t = np.linspace(0.0, period, 4096, endpoint=False)
    vals = np.abs(wave(t)[0])
    i = int(np.argmax(vals))
    lo = t[max(i - 1, 0)]
    hi = t[min(i + 1, len(t) - 1)]
    g = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c, d = b - g * (b - a), a + g * (b - a)
    for _ in range(80):
        fc = abs(wave(np.array([c]))[0][0])
        fd = abs(wave(np.array([d]))[0][0])
        if fc > fd:
            b, d = d, c
            c = b - g * (b - a)
        else:
            a, c = c, d
            d = a + g * (b - a)
    tm = 0.5 * (a + b)
    return abs(wave(np.array([tm]))[0][0])


class TestGridSource:
    def test_bridge_amplitude_through_input_transformer(self, grid):
        assert grid.u_im == pytest.approx(70.0 * SQRT2, rel=1e-12)

    def test_line_set_balanced_reference(self, grid):
        lines = grid.line_voltages()
        assert lines.a.amplitude == pytest.approx(200.0 * SQRT2)
        assert lines.a.phase_deg == 0.0
        assert lines.is_balanced(rel_tol=1e-12, deg_tol=1e-9)

    def test_validation(self):
        with pytest.raises(ValueError):
            GridSource(-1.0, 50.0)
        with pytest.raises(ValueError):
            GridSource(100.0, 0.0)


class TestDutyCycles:
    def test_dc_only(self, grid):
        w = duty_cycles(ControlParams(0.5, 0.0, 0.0), grid)
        t = dense_cycle(grid, n=100)
        assert np.allclose(w(t), 0.5, atol=1e-15)

    def test_zone_iv_at_t0(self, grid):
        w = duty_cycles(ControlParams(0.1391, 0.6887, -90.0), grid)  # beta2 = -180
        d = w(0.0)
        assert d[0] == pytest.approx(0.1391, abs=1e-12)

    def test_peak_matches_grid_refined_oracle(self, grid):
        rng = np.random.default_rng(23)
        for _ in range(50):
            k0 = rng.uniform(-0.9, 0.9)
            k2 = rng.uniform(0.0, 1.0 - abs(k0))
            w = duty_cycles(ControlParams(k0, k2, rng.uniform(-180, 180)), grid)
            peak = refined_duty_peak(w, 1.0 / grid.f_hz)
            assert w.max_abs() == pytest.approx(abs(k0) + k2, abs=1e-15)
            assert peak == pytest.approx(w.max_abs(), abs=1e-9)


class TestAveragedOutput:
    def test_pure_scaling_when_k2_zero(self, grid):
        t = dense_cycle(grid, n=512)
        u = averaged_phase_output(ControlParams(0.4, 0.0, 90.0), grid, t)
        assert np.allclose(u[0], 0.4 * grid.u_im * np.sin(grid.omega * t), atol=1e-9)

    def test_zero_crossing_of_input(self, grid):
        u = averaged_phase_output(ControlParams(0.3, 0.5, 37.0), grid, 0.0)
        assert u[0] == pytest.approx(0.0, abs=1e-12)

    def test_phase_sum_is_pure_common_mode_third(self, grid):
        rng = np.random.default_rng(41)
        t = dense_cycle(grid, n=4096)
        for _ in range(20):
            k0 = rng.uniform(-0.9, 0.9)
            k2 = rng.uniform(0.0, 1.0 - abs(k0))
            p = ControlParams(k0, k2, rng.uniform(-180, 180))
            u = averaged_phase_output(p, grid, t)
            b2 = math.radians(p.beta2_deg)
            expected = 3.0 * (-0.5 * k2 * grid.u_im * np.cos(3 * grid.omega * t + b2))
            assert np.max(np.abs(u.sum(axis=0) - expected)) < 1e-9 * grid.u_im

    def test_matches_independent_trig_expansion(self, grid):
        # phase a only: the expansion helper mirrors the b/c offsets poorly
        # readable inline, so check a directly and b/c via their own products
        rng = np.random.default_rng(43)
        t = dense_cycle(grid, n=2048)
        for _ in range(20):
            k0 = rng.uniform(-0.9, 0.9)
            k2 = rng.uniform(0.0, 1.0 - abs(k0))
            p = ControlParams(k0, k2, rng.uniform(-180, 180))
            b2 = math.radians(p.beta2_deg)
            u = averaged_phase_output(p, grid, t)
            ua = grid.u_im * (
                k0 * np.sin(grid.omega * t)
                + 0.5 * k2 * np.sin(grid.omega * t + b2 + math.pi / 2.0)
                - 0.5 * k2 * np.cos(3.0 * grid.omega * t + b2)
            )
            assert np.max(np.abs(u[0] - ua)) < 1e-12 * grid.u_im


class TestFundamentalComponents:
    def test_dc_only_passthrough(self, grid):
        fund, third = fundamental_components(ControlParams(1.0, 0.0, 0.0), grid)
        assert fund.a.amplitude == pytest.approx(grid.u_im, rel=1e-12)
        assert fund.a.phase_deg == pytest.approx(0.0, abs=1e-12)
        assert third.amplitude == 0.0

    def test_zone_iv_magnitudes(self, grid):
        p = ControlParams(0.1391, 0.6887, -90.0)
        fund, third = fundamental_components(p, grid)
        # oracles: m * U_im and k2 * U_im / 2 evaluated directly
        assert fund.a.amplitude == pytest.approx(
            math.hypot(0.1391, 0.34435) * grid.u_im, rel=1e-12
        )
        assert fund.a.amplitude == pytest.approx(36.765, abs=2e-3)
        assert fund.a.phase_deg == pytest.approx(-68.0038, abs=1e-3)
        assert third.amplitude == pytest.approx(0.5 * 0.6887 * grid.u_im, rel=1e-12)
        assert third.amplitude == pytest.approx(34.089, abs=2e-3)
        assert third.freq_multiple == 3

    def test_matches_dft_of_sampled_product(self, grid):
        rng = np.random.default_rng(47)
        t = dense_cycle(grid, cycles=1, n=40000)
        for _ in range(30):
            k0 = rng.uniform(-0.9, 0.9)
            k2 = rng.uniform(0.0, 1.0 - abs(k0))
            p = ControlParams(k0, k2, rng.uniform(-180, 180))
            u = averaged_phase_output(p, grid, t)
            fund, third = fundamental_components(p, grid)
            amp1, ph1 = single_bin(u[0], t, grid.f_hz)
            assert amp1 == pytest.approx(fund.a.amplitude, abs=1e-9 * grid.u_im)
            if fund.a.amplitude > 1e-6:
                assert angle_distance_deg(ph1, fund.a.phase_deg) == pytest.approx(0.0, abs=1e-7)
            amp3, ph3 = single_bin(u[0], t, 3 * grid.f_hz)
            assert amp3 == pytest.approx(third.amplitude, abs=1e-9 * grid.u_im)
            if third.amplitude > 1e-6:
                assert angle_distance_deg(ph3, third.phase_deg) == pytest.approx(0.0, abs=1e-7)
            # nothing between the fundamental and the third, nothing above
            for n in (2, 4, 5, 6, 7):
                ampn, _ = single_bin(u[0], t, n * grid.f_hz)
                assert ampn < 1e-9 * grid.u_im


class TestCompensationVoltages:
    def test_dc_point_oracle(self, grid, t_o):
        comp = compensation_voltages(ControlParams(0.64, 0.0, 0.0), grid, t_o)
        # direct evaluation: sqrt(3) * 0.64 * U_im / N_o at +30 deg
        oracle = SQRT3 * 0.64 * grid.u_im / t_o.turn_ratio
        assert oracle == pytest.approx(63.3483, abs=1e-3)
        assert comp.a.amplitude == pytest.approx(oracle, rel=1e-12)
        assert comp.a.phase_deg == pytest.approx(30.0, abs=1e-9)

    def test_zero_params(self, grid, t_o):
        comp = compensation_voltages(ControlParams(0.0, 0.0, 0.0), grid, t_o)
        assert all(p.amplitude == 0.0 for p in comp.members)

    def test_zone_iv_reference_point(self, grid, t_o):
        p = ControlParams(0.1391582817074944, 0.6888576671964417, -90.0)
        comp = compensation_voltages(p, grid, t_o)
        assert comp.a.amplitude == pytest.approx(26.0 * SQRT2, rel=1e-9)
        assert comp.a.phase_deg == pytest.approx(-38.0, abs=1e-9)

    def test_third_harmonic_cancels_in_winding_difference(self, grid):
        # time-domain check on the full (fundamental + third) waveforms
        t = dense_cycle(grid, cycles=1, n=40000)
        p = ControlParams(0.1391, 0.6887, -90.0)
        u = averaged_phase_output(p, grid, t)
        diff = u[0] - u[1]
        amp3, _ = single_bin(diff, t, 3 * grid.f_hz)
        assert amp3 < 1e-9 * grid.u_im


class TestRegulatedGrid:
    def test_zero_compensation_identity(self, grid):
        comp = ThreePhaseSet(Phasor(0, 0), Phasor(0, 0), Phasor(0, 0))
        reg = regulated_grid(grid, comp)
        assert reg.u_ml == pytest.approx(grid.u_iml, rel=1e-12)
        assert reg.phi_r_deg == pytest.approx(0.0, abs=1e-12)

    def test_balanced_compensation_keeps_balance(self, grid):
        rng = np.random.default_rng(53)
        for _ in range(50):
            comp = ThreePhaseSet.balanced(rng.uniform(0.0, 60.0), rng.uniform(-180, 180))
            reg = regulated_grid(grid, comp)
            assert reg.lines.is_balanced(rel_tol=1e-9, deg_tol=1e-6)

    def test_zone_i_measured_point(self, grid):
        # compensation a-phase 34 sqrt(2) at 76.5 deg: phasor-arithmetic oracle
        comp = ThreePhaseSet.balanced(34.0 * SQRT2, 76.5)
        reg = regulated_grid(grid, comp)
        assert reg.u_ml == pytest.approx(271.21, abs=0.02)
        assert reg.phi_r_deg == pytest.approx(17.13, abs=0.02)
        # magnitude agrees with the reported regulated amplitude within 1%
        assert abs(reg.u_ml - 190.0 * SQRT2) / (190.0 * SQRT2) < 0.01

    def test_rejects_harmonic_compensation(self, grid):
        comp = ThreePhaseSet.balanced(1.0, 0.0, freq_multiple=3)
        with pytest.raises(ValueError):
            regulated_grid(grid, comp)

    def test_amplitude_scaling_linearity(self, t_o):
        p = ControlParams(0.3, 0.4, 120.0)
        g1 = GridSource(200.0, 50.0, 2.0)
        g2 = GridSource(400.0, 50.0, 2.0)
        c1 = compensation_voltages(p, g1, t_o)
        c2 = compensation_voltages(p, g2, t_o)
        r1 = regulated_grid(g1, c1)
        r2 = regulated_grid(g2, c2)
        assert r2.u_ml == pytest.approx(2.0 * r1.u_ml, rel=1e-12)
        assert r2.phi_r_deg == pytest.approx(r1.phi_r_deg, abs=1e-12)
        assert c2.a.amplitude == pytest.approx(2.0 * c1.a.amplitude, rel=1e-12)
