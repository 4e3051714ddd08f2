"""Input-optimizer tests: closed form, cutting plane, tilted BA oracle.

The cutting-plane solver and the power-matched Blahut-Arimoto iteration are
independent routes to the same grid-restricted optimum, so each serves as the
oracle for the other; the one-bit closed form anchors both on single-threshold
channels.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quantcap import (
    ChannelSpec,
    GridConfig,
    CapacityResult,
    Quantizer,
    mutual_information,
    onebit_capacity,
    optimize_input_blahut_arimoto,
    optimize_input_cutting_plane,
    power_bisection,
)

TWOBIT = Quantizer((-2.0, 0.0, 2.0))
ONEBIT = Quantizer((0.0,))

# reduced grid for the fast paths; full default retained where a published
# support location is being resolved
FAST = GridConfig(10.0, 501)


def spec_db(snr_db, quant=TWOBIT):
    return ChannelSpec.from_snr_db(snr_db, quant)


class TestGridConfig:
    def test_defaults_span_and_center(self):
        xs = GridConfig().points(4.0)
        assert xs.size == 2001
        assert xs[0] == pytest.approx(-20.0)
        assert xs[-1] == pytest.approx(20.0)
        assert 0.0 in xs

    def test_rejects_narrow_multiplier(self):
        with pytest.raises(ValueError):
            GridConfig(half_width_multiplier=4.0)

    def test_rejects_even_point_count(self):
        with pytest.raises(ValueError):
            GridConfig(point_count=1000)

    def test_rejects_tiny_point_count(self):
        with pytest.raises(ValueError):
            GridConfig(point_count=99)


class TestOnebitCapacity:
    def test_published_values(self):
        # 1 - h(Q(sqrt(snr))) at 0 and 10 dB, 4-decimal reference points
        assert onebit_capacity(1.0) == pytest.approx(0.3689, abs=5e-5)
        assert onebit_capacity(10.0) == pytest.approx(0.9908, abs=5e-5)

    def test_vanishes_at_zero_snr(self):
        assert onebit_capacity(1e-8) < 1e-7

    def test_saturates_at_one(self):
        assert 1.0 - onebit_capacity(1e4) < 1e-12
        assert onebit_capacity(1e4) <= 1.0

    @given(
        st.floats(min_value=-3.0, max_value=1.4),
        st.floats(min_value=0.01, max_value=1.0),
    )
    @settings(max_examples=80, deadline=None)
    def test_strictly_increasing(self, log_snr, bump):
        # stays below ~17 dB; past that the closed form saturates to 1.0
        # within double precision and strictness is unobservable
        lo = 10.0**log_snr
        assert onebit_capacity(lo * (1.0 + bump)) > onebit_capacity(lo)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            onebit_capacity(0.0)
        with pytest.raises(ValueError):
            onebit_capacity(-1.0)


class TestCapacityResultValidation:
    def test_rejects_capacity_above_certificate(self):
        from quantcap import InputDistribution

        dist = InputDistribution([0.0], [1.0])
        with pytest.raises(ValueError):
            CapacityResult(
                capacity=1.0,
                dist=dist,
                gamma=0.0,
                upper_bound=0.5,
                kkt_max_violation=0.0,
                iterations=1,
            )

    def test_rejects_negative_gamma(self):
        from quantcap import InputDistribution

        dist = InputDistribution([0.0], [1.0])
        with pytest.raises(ValueError):
            CapacityResult(
                capacity=0.1,
                dist=dist,
                gamma=-1e-3,
                upper_bound=None,
                kkt_max_violation=0.0,
                iterations=1,
            )


class TestCuttingPlane:
    def test_reference_mi_at_0db(self):
        res = optimize_input_cutting_plane(spec_db(0.0))
        assert res.converged
        assert res.capacity == pytest.approx(0.4046, abs=5e-3)

    def test_reference_mi_and_support_at_5db(self):
        res = optimize_input_cutting_plane(spec_db(5.0))
        assert res.converged
        assert res.capacity == pytest.approx(0.8668, abs=5e-3)
        locs = np.sort(res.dist.locations)
        assert locs.size == 4
        assert locs == pytest.approx([-2.86, -0.52, 0.52, 2.86], abs=0.05)

    def test_certificate_fields(self):
        res = optimize_input_cutting_plane(spec_db(5.0), grid=FAST, tol=1e-4)
        assert res.upper_bound is not None
        assert res.capacity <= res.upper_bound + 1e-9
        assert res.kkt_max_violation <= 1e-4 + 1e-12
        assert res.dist.average_power() <= spec_db(5.0).power_constraint + 1e-9

    def test_matches_onebit_closed_form(self):
        for snr_db in (-5.0, 0.0, 10.0):
            spec = spec_db(snr_db, ONEBIT)
            res = optimize_input_cutting_plane(spec, grid=FAST)
            assert res.capacity == pytest.approx(
                onebit_capacity(spec.snr), abs=2e-3
            )
            locs = np.sort(res.dist.locations)
            root_p = math.sqrt(spec.power_constraint)
            # antipodal signaling at +/- sqrt(P), up to grid resolution
            assert locs == pytest.approx(
                [-root_p, root_p], abs=3 * 20 * root_p / 500
            )

    def test_symmetry_and_cardinality(self):
        for snr_db in (-5.0, 5.0, 15.0):
            res = optimize_input_cutting_plane(spec_db(snr_db), grid=FAST)
            assert res.dist.is_symmetric(tol=1e-8)
            assert res.dist.support_size <= TWOBIT.bins + 1

    def test_grid_widening_is_inert(self):
        # same spacing, wider reach: the optimizer must land on the same support
        base = optimize_input_cutting_plane(
            spec_db(5.0), grid=GridConfig(10.0, 2001), tol=1e-6
        )
        wide = optimize_input_cutting_plane(
            spec_db(5.0), grid=GridConfig(15.0, 3001), tol=1e-6
        )
        assert wide.capacity == pytest.approx(base.capacity, abs=1e-6)

    def test_scale_invariance(self):
        base = optimize_input_cutting_plane(spec_db(5.0), grid=FAST, tol=1e-6)
        for ratio in (0.25, 9.0):
            scaled_quant = Quantizer(tuple(t * math.sqrt(ratio) for t in TWOBIT.thresholds))
            scaled = ChannelSpec(
                noise_variance=ratio,
                power_constraint=spec_db(5.0).power_constraint * ratio,
                quantizer=scaled_quant,
            )
            res = optimize_input_cutting_plane(scaled, grid=FAST, tol=1e-6)
            assert res.capacity == pytest.approx(base.capacity, abs=1e-8)

    def test_monotone_in_snr(self):
        caps = [
            optimize_input_cutting_plane(spec_db(db), grid=FAST).capacity
            for db in np.linspace(-20.0, 18.0, 20)
        ]
        assert np.all(np.diff(caps) > -1e-9)

    def test_custom_explicit_grid(self):
        spec = spec_db(0.0, ONEBIT)
        xs = np.linspace(-4.0, 4.0, 801)
        res = optimize_input_cutting_plane(spec, grid=xs)
        assert res.capacity == pytest.approx(onebit_capacity(1.0), abs=2e-3)

    def test_rejects_bad_grid(self):
        spec = spec_db(0.0)
        with pytest.raises(ValueError):
            optimize_input_cutting_plane(spec, grid=[0.0, 0.0, 1.0])
        with pytest.raises(ValueError):
            optimize_input_cutting_plane(spec, tol=0.0)

    def test_to_text_roundtrips_numbers(self):
        res = optimize_input_cutting_plane(spec_db(0.0), grid=FAST)
        text = res.to_text()
        fields = dict(
            line.split(" ", 1) for line in text.strip().splitlines()
            if not line.startswith("point")
        )
        assert float(fields["capacity"]) == res.capacity
        assert float(fields["gamma"]) == res.gamma
        points = [line for line in text.splitlines() if line.startswith("point")]
        assert len(points) == res.dist.support_size


class TestBlahutArimoto:
    def test_peak_constrained_masses_go_to_extremes(self):
        # with no power tilt and a grid clipped at +/- sqrt(P), all mass runs
        # to the edge of the peak constraint (MI is even and grows in |x|)
        spec = ChannelSpec(1.0, 1.0 / 25.0, ONEBIT)
        dist, value = optimize_input_blahut_arimoto(
            spec, grid=GridConfig(5.0, 201), gamma=0.0, tol=1e-10
        )
        edge = 5.0 * math.sqrt(spec.power_constraint)
        mass_at_edges = sum(
            m for x, m in zip(dist.locations, dist.masses) if abs(abs(x) - edge) < 1e-9
        )
        assert mass_at_edges > 0.999

    def test_huge_gamma_collapses_to_origin(self):
        spec = spec_db(0.0)
        dist, value = optimize_input_blahut_arimoto(
            spec, grid=FAST, gamma=1e3, tol=1e-10
        )
        mi = mutual_information(dist, spec)
        center = sum(
            m for x, m in zip(dist.locations, dist.masses) if abs(x) < 0.05
        )
        assert center > 0.999
        assert mi < 1e-3

    def test_agrees_with_cutting_plane_when_power_matched(self):
        # multiplier swept until E[X^2] hits P within 1e-4: both solvers then
        # target the same concave program
        spec = spec_db(5.0)
        cp = optimize_input_cutting_plane(spec)
        ba = power_bisection(spec, tol=1e-4)
        assert ba.converged
        assert abs(spec.power_constraint - ba.dist.average_power()) <= 2e-4
        assert ba.capacity == pytest.approx(cp.capacity, abs=1e-3)

    def test_rejects_negative_gamma(self):
        with pytest.raises(ValueError):
            optimize_input_blahut_arimoto(spec_db(0.0), gamma=-1.0)


class TestPowerBisection:
    def test_onebit_reference(self):
        res = power_bisection(spec_db(0.0, ONEBIT), grid=FAST)
        assert res.converged
        assert res.capacity == pytest.approx(0.3689, abs=2e-3)

    def test_twobit_reference(self):
        res = power_bisection(spec_db(0.0), grid=FAST)
        assert res.converged
        assert res.capacity == pytest.approx(0.4046, abs=5e-3)

    def test_slack_constraint_at_huge_snr(self):
        # thresholds matched to the signal amplitude: the power constraint
        # goes slack and capacity approaches the 2-bit ceiling
        power = 10.0**4.0  # 40 dB
        d = math.sqrt(3.0 * power / 15.0)
        quant = Quantizer((-2.0 * d, 0.0, 2.0 * d))
        res = power_bisection(ChannelSpec(1.0, power, quant), grid=FAST)
        assert res.capacity > 2.0 - 1e-4
        assert res.gamma < 1e-6

    def test_fixed_narrow_quantizer_saturates(self):
        # with thresholds pinned at +/-2 the channel tops out well below
        # 2 bits no matter how much power is available
        res = power_bisection(spec_db(40.0), grid=FAST)
        assert res.capacity == pytest.approx(1.483872, abs=2e-3)
        assert res.gamma < 1e-6

    def test_sandwich_against_certificate(self):
        res = power_bisection(spec_db(10.0), grid=FAST)
        assert res.upper_bound is not None
        assert res.capacity <= res.upper_bound + 1e-9

    def test_rejects_bad_tol(self):
        with pytest.raises(ValueError):
            power_bisection(spec_db(0.0), tol=-1.0)
