"""Modulation waveforms, Floquet phases, sideband spectra, optimizer."""

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import jv

from wqed.errors import TruncationTooSmall
from wqed.modulation import (
    FloquetSpectrum,
    ModulationSpec,
    TargetSpectrum,
    Tone,
    floquet_phase,
    fourier_components,
    fourier_components_bessel,
    modulation_waveform,
    optimize_modulation,
    spectrum_loss,
    spectrum_loss_grad,
)


def single_tone(a, b=0.0, r=1, Omega=1.0):
    return ModulationSpec(0.0, Omega, (Tone(r, a, b),))


class TestWaveform:
    def test_zero_modulation_waveform_vanishes(self):
        spec = single_tone(0.0)
        t = np.linspace(0.0, 20.0, 50)
        assert np.allclose(modulation_waveform(spec, t), 0.0)

    def test_waveform_matches_cosine_sine_sum(self):
        spec = ModulationSpec(0.0, 2.0, (Tone(1, 0.3, -0.7), Tone(3, 1.1, 0.2)))
        t = np.linspace(0.0, 5.0, 37)
        expected = (0.3 * np.cos(2.0 * t) + 0.7 * np.sin(2.0 * t)
                    + 1.1 * np.cos(6.0 * t) - 0.2 * np.sin(6.0 * t))
        assert np.allclose(modulation_waveform(spec, t), expected, atol=1e-14)

    def test_time_average_over_period_is_zero(self):
        spec = ModulationSpec(0.0, 1.3, (Tone(1, 0.9, 0.4), Tone(2, -0.5, 1.2)))
        avg, _ = quad(lambda t: modulation_waveform(spec, t), 0.0, spec.period,
                      limit=200)
        assert abs(avg) < 1e-10

    def test_duplicate_harmonics_rejected(self):
        with pytest.raises(ValueError):
            ModulationSpec(0.0, 1.0, (Tone(1, 0.1, 0.0), Tone(1, 0.2, 0.0)))

    def test_nonpositive_omega_rejected(self):
        with pytest.raises(ValueError):
            ModulationSpec(0.0, 0.0, (Tone(1, 0.1, 0.0),))


class TestFloquetPhase:
    def test_zero_modulation_gives_unity(self):
        spec = single_tone(0.0)
        for t in (0.0, 0.7, 13.2):
            assert floquet_phase(spec, t) == pytest.approx(1.0 + 0.0j)

    def test_sine_node_gives_unity(self):
        spec = single_tone(2.3)
        assert floquet_phase(spec, np.pi) == pytest.approx(1.0 + 0.0j, abs=1e-12)

    def test_quarter_period_closed_form(self):
        # a1 = 1.5 Omega integrates to phase 1.5 at t = pi/(2 Omega)
        spec = single_tone(1.5)
        got = floquet_phase(spec, np.pi / 2)
        assert got == pytest.approx(np.exp(-1.5j), abs=1e-12)

    def test_phase_matches_quadrature_of_detuning(self):
        spec = ModulationSpec(0.0, 1.7, (Tone(1, 0.8, -0.3), Tone(4, 1.9, 0.6)))
        for t in (0.31, 1.4, 4.9):
            integral, _ = quad(lambda s: modulation_waveform(spec, s), 0.0, t,
                               limit=400)
            assert floquet_phase(spec, t) == pytest.approx(np.exp(-1j * integral),
                                                           abs=1e-10)

    def test_unimodular_and_periodic(self):
        spec = ModulationSpec(0.0, 0.9, (Tone(2, 1.4, 2.2), Tone(5, -0.7, 0.1)))
        t = np.linspace(0.0, 3 * spec.period, 101)
        ph = floquet_phase(spec, t)
        assert np.allclose(np.abs(ph), 1.0, atol=1e-12)
        assert np.allclose(floquet_phase(spec, t + spec.period), ph, atol=1e-10)

    def test_initial_value_is_one(self):
        spec = ModulationSpec(0.0, 1.0, (Tone(1, 0.5, 1.5),))
        assert floquet_phase(spec, 0.0) == pytest.approx(1.0 + 0.0j, abs=1e-14)


class TestFourierComponents:
    def test_zero_modulation_is_pure_carrier(self):
        s = fourier_components(single_tone(0.0), 4)
        assert s[0] == pytest.approx(1.0 + 0.0j, abs=1e-12)
        for k in (-4, -1, 1, 3):
            assert abs(s[k]) < 1e-12

    def test_single_cosine_tone_matches_bessel_orders(self):
        A = 1.8
        s = fourier_components(single_tone(A), 10)
        for k in range(-8, 9):
            assert abs(s[k]) == pytest.approx(abs(jv(k, A)), abs=1e-10)

    def test_blue_sidebands_carry_positive_index(self):
        # quadrature oracle: X_k = (1/T) int phase(t) e^{+ik Omega t} dt
        spec = ModulationSpec(0.0, 1.0, (Tone(1, 0.9, 1.1), Tone(2, -0.4, 0.3)))
        s = fourier_components(spec, 8)
        for k in (-2, 0, 3):
            re, _ = quad(lambda t: (floquet_phase(spec, t)
                                    * np.exp(1j * k * t)).real,
                         0.0, 2 * np.pi, limit=400)
            im, _ = quad(lambda t: (floquet_phase(spec, t)
                                    * np.exp(1j * k * t)).imag,
                         0.0, 2 * np.pi, limit=400)
            assert s[k] == pytest.approx((re + 1j * im) / (2 * np.pi), abs=1e-9)

    def test_parseval_sum_close_to_one(self):
        spec = ModulationSpec(0.0, 1.0, (Tone(1, 1.2, -0.8), Tone(3, 0.7, 0.5)))
        s = fourier_components(spec, 20)
        assert s.parseval_sum() == pytest.approx(1.0, abs=1e-8)

    def test_single_cosine_tone_spectrum_is_symmetric(self):
        s = fourier_components(single_tone(1.7, r=2), 12)
        for k in range(1, 12):
            assert abs(s[k]) == pytest.approx(abs(s[-k]), abs=1e-10)

    def test_pure_cosine_spectrum_is_real(self):
        # time reversal conjugates the phase, so all X_k are real
        spec = ModulationSpec(0.0, 1.0, (Tone(1, 1.3, 0.0), Tone(2, -0.6, 0.0),
                                         Tone(5, 0.9, 0.0)))
        s = fourier_components(spec, 12)
        for k in range(-12, 13):
            assert abs(s[k].imag) < 1e-10

    def test_relative_tone_phase_breaks_symmetry(self):
        # one tone alone is a shifted cosine and stays symmetric; two
        # tones with generic relative phases do not
        spec = ModulationSpec(0.0, 1.0, (Tone(1, 0.8, 0.3), Tone(2, 0.5, 1.1)))
        s = fourier_components(spec, 8)
        asym = max(abs(abs(s[k]) - abs(s[-k])) for k in range(1, 8))
        assert asym > 1e-3

    def test_truncation_guard_raises(self):
        with pytest.raises(TruncationTooSmall):
            fourier_components(single_tone(6.0), 2)

    def test_agrees_with_bessel_sum_path(self):
        for a, b in ((0.5, 0.0), (2.9, 0.0), (-1.4, 2.0), (0.3, -2.7)):
            spec = single_tone(a, b=b)
            dft = fourier_components(spec, 10)
            bes = fourier_components_bessel(spec, 10)
            for k in range(-8, 9):
                assert dft[k] == pytest.approx(bes[k], abs=1e-8)

    def test_bessel_path_two_tones(self):
        spec = ModulationSpec(0.0, 1.0, (Tone(1, 1.1, -0.4), Tone(2, 0.8, 0.6)))
        dft = fourier_components(spec, 10)
        bes = fourier_components_bessel(spec, 10)
        for k in range(-8, 9):
            assert dft[k] == pytest.approx(bes[k], abs=1e-8)


class TestSpectrumLoss:
    def test_zero_modulation_hits_carrier_target(self):
        assert spectrum_loss(single_tone(0.0), TargetSpectrum({0: 1.0}), 5) \
            == pytest.approx(0.0, abs=1e-12)

    def test_zero_modulation_misses_sideband_target(self):
        tgt = TargetSpectrum({1: 1.0}, weights={k: 0.0 for k in range(-5, 6)
                                                if k != 1} | {1: 1.0})
        assert spectrum_loss(single_tone(0.0), tgt, 5) == pytest.approx(1.0,
                                                                        abs=1e-10)

    def test_target_norm_guard(self):
        with pytest.raises(ValueError):
            TargetSpectrum({0: 0.9, 1: 0.9})

    def test_gradient_matches_central_differences(self):
        spec = ModulationSpec(0.0, 1.0, (Tone(1, 0.7, -0.2), Tone(2, 0.4, 0.9)))
        tgt = TargetSpectrum({0: 0.5, 1: 0.5, 2: 0.4})
        _, grad = spectrum_loss_grad(spec, tgt, 5)  # [a_1..a_R, b_1..b_R]
        eps = 1e-6
        n_tones = len(spec.tones)
        for i, tone in enumerate(spec.tones):
            for j, field in enumerate(("a", "b")):
                def perturbed(delta, tone=tone, field=field):
                    kw = {"r": tone.r, "a": tone.a, "b": tone.b}
                    kw[field] += delta
                    tones = list(spec.tones)
                    tones[i] = Tone(**kw)
                    return spectrum_loss(
                        ModulationSpec(0.0, 1.0, tuple(tones)), tgt, 5)
                fd = (perturbed(eps) - perturbed(-eps)) / (2 * eps)
                assert grad[j * n_tones + i] == pytest.approx(fd, rel=1e-5,
                                                              abs=1e-9)


class TestOptimizer:
    def test_trivial_carrier_target(self):
        res = optimize_modulation(TargetSpectrum({0: 1.0}), 2, seed=0,
                                  budget=2000)
        assert res.loss <= 1e-6
        assert res.converged

    def test_deterministic_given_seed(self):
        tgt = TargetSpectrum({0: 0.7, 1: 0.5})
        r1 = optimize_modulation(tgt, 3, seed=42, budget=3000)
        r2 = optimize_modulation(tgt, 3, seed=42, budget=3000)
        assert r1.loss == r2.loss
        assert all(t1 == t2 for t1, t2 in zip(r1.spec.tones, r2.spec.tones))

    def test_harmonic_restriction_enforces_parity(self):
        tgt = TargetSpectrum({0: 0.6, 2: 0.45, -2: 0.45, 4: 0.3, -4: 0.3})
        res = optimize_modulation(tgt, 6, seed=0, harmonics=(2, 4, 6),
                                  budget=20000)
        assert res.loss <= 1e-4
        s = fourier_components(res.spec, 12, check=False)
        odd = sum(abs(s[k]) ** 2 for k in range(-11, 12, 2))
        assert odd < 1e-20

    def test_bad_harmonics_rejected(self):
        tgt = TargetSpectrum({0: 1.0})
        with pytest.raises(ValueError):
            optimize_modulation(tgt, 3, harmonics=(1, 4))
        with pytest.raises(ValueError):
            optimize_modulation(tgt, 3, harmonics=(2, 2))


class TestSpectrumContainer:
    def test_index_window(self):
        s = FloquetSpectrum(2, np.array([0.1, 0.2, 0.9, 0.2, 0.1], complex))
        assert s[-2] == pytest.approx(0.1)
        assert s[0] == pytest.approx(0.9)
        with pytest.raises(KeyError):
            _ = s[3]
