import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gnft.envelope import (
    NORMALIZED,
    PHYSICAL,
    PhysicalParams,
    SampledEnvelope,
    centered_grid,
    containment,
    denormalize,
    energy,
    nmse,
    normalize,
)
from gnft.sweeps import reference_metrics, table_pulse

from conftest import reference_envelope

LINKLIKE = dict(beta2=-21.667, gamma=1.2578, span_length=4000.0, n_ase=6.4893e-24)


def random_envelope(seed=0, n=64, units=NORMALIZED):
    rng = np.random.default_rng(seed)
    samples = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return SampledEnvelope(-1.0, 0.05, samples, units)


class TestPhysicalParams:
    def test_normalized_distance_unit(self):
        p = PhysicalParams(t0=1.0, **LINKLIKE)
        assert p.z_unit_km == pytest.approx(2.0 / 21.667, rel=1e-12)
        assert p.z_unit_km == pytest.approx(0.09231, rel=1e-4)

    def test_amplitude_unit(self):
        p = PhysicalParams(t0=1.0, **LINKLIKE)
        assert p.amplitude_unit == pytest.approx(np.sqrt(21.667 / 1.2578), rel=1e-12)
        assert p.amplitude_unit == pytest.approx(4.150, rel=1e-3)

    @pytest.mark.parametrize("bad", [dict(beta2=1.0), dict(gamma=0.0), dict(t0=0.0), dict(n_ase=-1.0)])
    def test_invalid_parameters(self, bad):
        kwargs = dict(t0=1.0, **LINKLIKE)
        kwargs.update(bad)
        with pytest.raises(ValueError):
            PhysicalParams(**kwargs)


class TestUnitConversion:
    @given(st.integers(0, 2**32 - 1), st.floats(0.2, 500.0))
    def test_round_trip_is_identity(self, seed, t0):
        p = PhysicalParams(t0=t0, **LINKLIKE)
        env = random_envelope(seed, units=PHYSICAL)
        back = denormalize(normalize(env, p), p)
        assert np.allclose(back.samples, env.samples, rtol=1e-12, atol=0)
        assert back.t_start == pytest.approx(env.t_start, rel=1e-12)
        assert back.dt == pytest.approx(env.dt, rel=1e-12)

    def test_wrong_units_tag_rejected(self):
        p = PhysicalParams(t0=1.0, **LINKLIKE)
        env = random_envelope(units=NORMALIZED)
        with pytest.raises(ValueError):
            normalize(env, p)
        with pytest.raises(ValueError):
            denormalize(random_envelope(units=PHYSICAL), p)


class TestEnergy:
    def test_zero_envelope(self):
        assert energy(SampledEnvelope(0.0, 0.1, np.zeros(16))) == 0.0

    @pytest.mark.parametrize("kind,expect", [("DS", 10.0), ("1S", 10.0), ("2S", 10.0)])
    def test_reference_pulses_energy(self, kind, expect):
        duration, _ = reference_metrics(kind)
        env = reference_envelope(kind, 0.005, 4.0 * duration)
        assert energy(env) == pytest.approx(expect, rel=1e-3)

    def test_reference_pulses_equal_energy(self):
        energies = []
        for kind in ("DS", "2S", "1S"):
            duration, _ = reference_metrics(kind)
            energies.append(energy(reference_envelope(kind, 0.005, 4.0 * duration)))
        for a in energies:
            for b in energies:
                assert abs(a - b) / b < 2e-3

    @given(st.integers(0, 2**32 - 1), st.floats(-10, 10))
    def test_invariance_under_time_shift(self, seed, shift):
        env = random_envelope(seed)
        assert energy(SampledEnvelope(env.t_start + shift, env.dt, env.samples)) == energy(env)

    @given(st.integers(0, 2**32 - 1), st.floats(0, 2 * np.pi))
    def test_invariance_under_phase_rotation(self, seed, phi):
        env = random_envelope(seed)
        rotated = env.with_samples(env.samples * np.exp(1j * phi))
        assert energy(rotated) == pytest.approx(energy(env), rel=1e-12)

    @given(st.integers(0, 2**32 - 1), st.integers(1, 30))
    def test_invariance_under_zero_padding(self, seed, pad):
        # decayed envelope: trapezoid weights make padding exact only then
        base = random_envelope(seed)
        samples = base.samples.copy()
        samples[0] = samples[-1] = 0.0
        env = base.with_samples(samples)
        padded = SampledEnvelope(
            env.t_start - pad * env.dt, env.dt,
            np.concatenate([np.zeros(pad), env.samples, np.zeros(pad)]),
        )
        # summation order changes only at the last ulp
        assert energy(padded) == pytest.approx(energy(env), rel=1e-13)


class TestContainment:
    def test_double_soliton_duration(self):
        duration, _ = reference_metrics("DS")
        assert duration == pytest.approx(5.25, rel=0.05)

    def test_one_soliton_duration_and_bandwidth(self):
        duration, bandwidth = reference_metrics("1S")
        assert duration == pytest.approx(1.51, rel=0.10)
        assert bandwidth == pytest.approx(23.75, rel=0.10)

    def test_truncated_energy_curve_point(self):
        # energy outside a centered window of 1.0536 * duration
        duration, _ = reference_metrics("DS")
        env = reference_envelope("DS", 0.004, 40.0)
        out = containment(env).trunc_energy(1.0535961751663 * duration)
        assert out == pytest.approx(5.08e-4, rel=0.2)

    def test_duration_monotone_in_fraction(self, ds_fine):
        durations = [containment(ds_fine, f).duration for f in (0.9, 0.99, 0.999)]
        assert durations == sorted(durations)

    def test_trunc_energy_nonincreasing(self, ds_fine):
        trunc = containment(ds_fine).trunc_energy
        widths = np.linspace(1.0, 12.0, 12)
        values = [trunc(w) for w in widths]
        assert all(a >= b - 1e-15 for a, b in zip(values, values[1:]))

    def test_fraction_range_validated(self, ds_fine):
        with pytest.raises(ValueError):
            containment(ds_fine, fraction=1.0)


class TestNmse:
    def test_identical_realizations(self):
        assert nmse(np.full(8, 1.0 + 2.0j)) == 0.0

    def test_two_point_example(self):
        # mean 1, E|x-1|^2 = 1
        assert nmse(np.array([0.0, 2.0])) == pytest.approx(1.0)

    @given(st.integers(0, 2**32 - 1), st.complex_numbers(min_magnitude=1e-3, max_magnitude=1e3))
    def test_scale_invariance(self, seed, a):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal(32) + 1j * rng.standard_normal(32) + 4.0
        assert nmse(a * x) == pytest.approx(nmse(x), rel=1e-9)

    def test_errors(self):
        with pytest.raises(ValueError):
            nmse(np.array([1.0]))
        with pytest.raises(ValueError):
            nmse(np.array([1.0, -1.0]))


class TestValidation:
    def test_dt_positive(self):
        with pytest.raises(ValueError):
            SampledEnvelope(0.0, 0.0, np.ones(4))

    def test_min_length(self):
        with pytest.raises(ValueError):
            SampledEnvelope(0.0, 0.1, np.ones(1))

    def test_samples_read_only(self):
        env = random_envelope()
        with pytest.raises(ValueError):
            env.samples[0] = 0.0

    def test_centered_grid(self):
        grid = centered_grid(10.0, 0.1)
        assert grid[0] == pytest.approx(-grid[-1])
        assert np.allclose(np.diff(grid), 0.1)
