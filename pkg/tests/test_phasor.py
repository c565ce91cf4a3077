import cmath
import math

import numpy as np
import pytest

from fdpfc.phasor import (
    KIND_LINE,
    KIND_PHASE,
    PRIMARY_TO_SECONDARY,
    SECONDARY_TO_PRIMARY,
    Phasor,
    ThreePhaseSet,
    TransformerSpec,
    add,
    angle_distance_deg,
    line_from_phase,
    normalize_deg,
    phase_from_line,
    reflect_through_transformer,
)


def polar(amp, deg, n=1):
    return Phasor.from_polar(amp, deg, n)


class TestPhasorBasics:
    def test_negative_amplitude_absorbed_into_phase(self):
        p = Phasor.from_polar(-2.0, 10.0)
        assert p.amplitude == pytest.approx(2.0, abs=1e-15)
        assert p.phase_deg == pytest.approx(-170.0, abs=1e-12)

    def test_phase_always_in_half_open_range(self):
        for deg in (-540.0, -180.0, 0.0, 179.9, 180.0, 181.0, 720.0, 1234.5):
            p = Phasor.from_polar(1.0, deg)
            assert -180.0 < p.phase_deg <= 180.0

    def test_minus_180_maps_to_plus_180(self):
        assert normalize_deg(-180.0) == 180.0
        assert normalize_deg(180.0) == 180.0
        assert normalize_deg(-174.0) == -174.0

    def test_zero_phasor_has_canonical_phase(self):
        assert Phasor(0.0, 0.0).phase_deg == 0.0

    def test_freq_multiple_must_be_positive_int(self):
        with pytest.raises(ValueError):
            Phasor(1.0, 0.0, 0)
        with pytest.raises(ValueError):
            Phasor(1.0, 0.0, -3)

    def test_angle_distance_shortest_path(self):
        assert angle_distance_deg(-174.0, 180.0) == pytest.approx(6.0)
        assert angle_distance_deg(179.0, -179.0) == pytest.approx(-2.0)
        assert angle_distance_deg(10.0, 350.0) == pytest.approx(20.0)


class TestAdd:
    def test_exact_cancellation(self):
        s = add(polar(1.0, 0.0), polar(1.0, 180.0))
        assert s.amplitude == 0.0
        assert s.phase_deg == 0.0

    def test_unit_vector_symmetry(self):
        s = add(polar(1.0, 0.0), polar(1.0, -120.0))
        assert s.amplitude == pytest.approx(1.0, rel=1e-12)
        assert s.phase_deg == pytest.approx(-60.0, abs=1e-12)

    def test_zone1_regulated_line_voltage(self):
        # rectangular-coordinate oracle for the grid line voltage plus
        # sqrt(3) x compensation voltage of the zone-I operating point
        z = 282.84 + 83.28 * cmath.exp(1j * math.radians(106.5))
        assert abs(z) == pytest.approx(271.2086, abs=1e-3)
        assert math.degrees(cmath.phase(z)) == pytest.approx(17.1230, abs=1e-3)

        s = add(polar(282.84, 0.0), polar(83.28, 106.5))
        assert s.amplitude == pytest.approx(abs(z), rel=1e-12)
        assert s.phase_deg == pytest.approx(math.degrees(cmath.phase(z)), abs=1e-12)

    def test_mismatched_harmonic_order_rejected(self):
        with pytest.raises(ValueError, match="harmonic"):
            add(polar(1.0, 0.0, 1), polar(1.0, 0.0, 3))

    def test_commutative_and_associative(self):
        rng = np.random.default_rng(7)
        for _ in range(500):
            p, q, r = (
                polar(rng.uniform(0.0, 10.0), rng.uniform(-180.0, 180.0)) for _ in range(3)
            )
            pq, qp = p + q, q + p
            assert abs(pq.as_complex - qp.as_complex) <= 1e-12 * max(pq.amplitude, 1.0)
            lhs, rhs = (p + q) + r, p + (q + r)
            assert abs(lhs.as_complex - rhs.as_complex) <= 1e-12 * max(lhs.amplitude, 1.0)


class TestThreePhase:
    def test_members_must_share_harmonic_order(self):
        with pytest.raises(ValueError):
            ThreePhaseSet(polar(1, 0, 1), polar(1, -120, 1), polar(1, 120, 3))

    def test_balanced_predicate(self):
        assert ThreePhaseSet.balanced(3.0, 25.0).is_balanced()
        skew = ThreePhaseSet(polar(1, 0), polar(1, -119.0), polar(1, 120))
        assert not skew.is_balanced(deg_tol=0.5)

    def test_line_from_phase_balanced_gain_and_lead(self):
        s = ThreePhaseSet.balanced(1.0, 0.0)
        lines = line_from_phase(s)
        assert lines.kind == KIND_LINE
        exp = [(math.sqrt(3), 30.0), (math.sqrt(3), -90.0), (math.sqrt(3), 150.0)]
        for ph, (amp, deg) in zip(lines.members, exp):
            assert ph.amplitude == pytest.approx(amp, rel=1e-12)
            assert ph.phase_deg == pytest.approx(deg, abs=1e-9)

    def test_line_from_phase_common_mode_cancels_exactly(self):
        third = polar(5.0, 37.0, 3)
        s = ThreePhaseSet(third, third, third)
        lines = line_from_phase(s)
        for ph in lines.members:
            assert ph.amplitude == 0.0

    def test_line_from_phase_zero_input(self):
        z = Phasor(0.0, 0.0)
        lines = line_from_phase(ThreePhaseSet(z, z, z))
        assert all(ph.amplitude == 0.0 for ph in lines.members)

    def test_line_from_phase_requires_phase_kind(self):
        s = ThreePhaseSet.balanced(1.0, 0.0, kind=KIND_LINE)
        with pytest.raises(ValueError):
            line_from_phase(s)

    def test_line_from_phase_preserves_balance(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            s = ThreePhaseSet.balanced(rng.uniform(0.1, 5.0), rng.uniform(-180.0, 180.0))
            lines = line_from_phase(s)
            assert lines.is_balanced(rel_tol=1e-9, deg_tol=1e-6)
            assert lines.a.amplitude / s.a.amplitude == pytest.approx(math.sqrt(3), rel=1e-12)
            assert angle_distance_deg(lines.a.phase_deg, s.a.phase_deg) == pytest.approx(
                30.0, abs=1e-9
            )

    def test_phase_from_line_inverts_zero_sum_sets(self):
        rng = np.random.default_rng(13)
        for _ in range(50):
            s = ThreePhaseSet(
                polar(rng.uniform(0.1, 2.0), rng.uniform(-180, 180)),
                polar(rng.uniform(0.1, 2.0), rng.uniform(-180, 180)),
                polar(rng.uniform(0.1, 2.0), rng.uniform(-180, 180)),
            )
            # remove common mode so the round trip is exact
            cm = (s.a.as_complex + s.b.as_complex + s.c.as_complex) / 3.0
            s = ThreePhaseSet(*(Phasor.from_complex(p.as_complex - cm) for p in s.members))
            back = phase_from_line(line_from_phase(s))
            for p, q in zip(back.members, s.members):
                assert abs(p.as_complex - q.as_complex) < 1e-12

    def test_phase_from_line_rejects_nonzero_sum(self):
        s = ThreePhaseSet(polar(1, 0), polar(1, 0), polar(1, 0), kind=KIND_LINE)
        with pytest.raises(ValueError, match="sum"):
            phase_from_line(s)


class TestTransformer:
    def test_spec_validation(self):
        with pytest.raises(ValueError):
            TransformerSpec(0.0)
        with pytest.raises(ValueError, match="group"):
            TransformerSpec(2.0, group="Yy0")

    def test_phase_input_gains_group_shift(self, t_o):
        # converter phase set at phi1 -> wye phase at sqrt(3)/N_o, +30 deg
        u_om, phi1 = 36.77, -68.0
        s = ThreePhaseSet.balanced(u_om, phi1)
        out = reflect_through_transformer(s, t_o, PRIMARY_TO_SECONDARY)
        assert out.kind == KIND_PHASE
        assert out.a.amplitude == pytest.approx(
            math.sqrt(3) * u_om / t_o.turn_ratio, rel=1e-12
        )
        assert out.a.phase_deg == pytest.approx(phi1 + 30.0, abs=1e-9)
        assert out.is_balanced(rel_tol=1e-9, deg_tol=1e-6)

    def test_line_input_maps_winding_to_phase(self):
        # grid line set through the input transformer: same phase, amplitude / N_i
        n_i = 200.0 / 70.0
        t_i = TransformerSpec(n_i)
        lines = ThreePhaseSet.balanced(282.842712, 0.0, kind=KIND_LINE)
        out = reflect_through_transformer(lines, t_i, PRIMARY_TO_SECONDARY)
        assert out.kind == KIND_PHASE
        assert out.a.amplitude == pytest.approx(282.842712 / n_i, rel=1e-12)
        assert out.a.phase_deg == pytest.approx(0.0, abs=1e-12)

    def test_round_trip_is_identity(self):
        t = TransformerSpec(220.0 / 127.0)
        rng = np.random.default_rng(5)
        for _ in range(50):
            s = ThreePhaseSet.balanced(
                rng.uniform(0.1, 400.0), rng.uniform(-180.0, 180.0), kind=KIND_LINE
            )
            back = reflect_through_transformer(
                reflect_through_transformer(s, t, PRIMARY_TO_SECONDARY),
                t,
                SECONDARY_TO_PRIMARY,
            )
            assert back.kind == KIND_LINE
            for p, q in zip(back.members, s.members):
                assert abs(p.as_complex - q.as_complex) <= 1e-12 * max(q.amplitude, 1.0)

    def test_unity_ratio_zero_input(self):
        z = Phasor(0.0, 0.0)
        s = ThreePhaseSet(z, z, z, kind=KIND_LINE)
        out = reflect_through_transformer(s, TransformerSpec(1.0), PRIMARY_TO_SECONDARY)
        assert all(p.amplitude == 0.0 for p in out.members)

    def test_unknown_direction_rejected(self, t_o):
        s = ThreePhaseSet.balanced(1.0, 0.0)
        with pytest.raises(ValueError, match="direction"):
            reflect_through_transformer(s, t_o, "sideways")
