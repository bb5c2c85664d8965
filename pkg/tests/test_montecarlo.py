import numpy as np
import pytest

from magnoise import KindMismatchError, ValidationError
from magnoise.coherence import chi
from magnoise.montecarlo import (
    estimate_coherence,
    phase_weights,
    synthesize,
    trajectory_rng,
)
from magnoise.sequences import PulseSequence
from magnoise.spectra import SpectralDensity

TWO_PI = 2 * np.pi


def scaled_to(sd, seq, target):
    return sd.scaled(np.sqrt(target / chi(sd, seq).chi))


def test_zero_spectrum():
    sd = SpectralDensity.tabulated("frequency", [10.0, 100.0], [0.0, 0.0])
    r = estimate_coherence(sd, PulseSequence(2, 1e-2, 0), n_traj=200, sample_rate=100.0)
    assert r.mean == 1.0 and r.stderr == 0.0 and r.mean_sq_phase == 0.0


def test_record_power_matches_spectrum():
    # bins are 1 Hz wide and centred on integers; interior bins of the band carry 2c, the two edge bins c
    c = 0.25
    sd = SpectralDensity.white("frequency", np.sqrt(c), TWO_PI * 10, TWO_PI * 300)
    expect = 289 * 2 * c + 2 * c
    spread = np.sqrt(289 * (2 * c) ** 2 + 2 * c**2)
    for traj in range(5):
        x = synthesize(sd, 1.0, 1000.0, seed=3, trajectory=traj).samples
        assert x.size == 1000
        assert abs(np.mean(x**2) - expect) < 3 * spread
    assert expect == pytest.approx(sd.square_integral() / np.pi)


def test_record_spectrum_is_band_limited():
    sd = SpectralDensity.white("frequency", 1.0, TWO_PI * 50, TWO_PI * 80)
    x = synthesize(sd, 2.0, 1000.0, seed=1).samples
    p = np.abs(np.fft.rfft(x)) ** 2
    f = np.fft.rfftfreq(x.size, 1e-3)
    outside = (f < 49.5) | (f > 80.5)
    assert np.max(p[outside]) < 1e-20 * np.max(p)


def test_same_seed_same_record():
    sd = SpectralDensity.white("frequency", 1.0, 10.0, 100.0)
    a = synthesize(sd, 1.0, 100.0, seed=5, trajectory=2).samples
    b = synthesize(sd, 1.0, 100.0, seed=5, trajectory=2).samples
    c = synthesize(sd, 1.0, 100.0, seed=5, trajectory=3).samples
    assert np.array_equal(a, b) and not np.array_equal(a, c)
    assert trajectory_rng(5, 2).random() == trajectory_rng(5, 2).random()


def test_weights_integrate_the_toggling_sign():
    seq = PulseSequence(3, 0.01, 0)
    w = phase_weights(seq, 1000.0)
    t = np.arange(w.size) / 1000.0
    assert w.sum() == pytest.approx(0.01)
    assert w @ t == pytest.approx(0.01 * (0.005 - 0.015 + 0.025))
    wd = phase_weights(PulseSequence(3, 0.01, 0.0025), 1000.0, dead_time=True)
    assert np.count_nonzero(wd == 0) == 6


def test_workers_do_not_change_results():
    sd = SpectralDensity.white("frequency", 5.0, TWO_PI * 10, TWO_PI * 200)
    seq = PulseSequence(2, 4e-3, 0)
    runs = [estimate_coherence(sd, seq, n_traj=300, seed=9, workers=k, keep_phases=True) for k in (1, 2, 8)]
    for r in runs[1:]:
        assert np.array_equal(r.phases, runs[0].phases) and r.mean == runs[0].mean


@pytest.mark.parametrize("m", [1, 2])
def test_phase_variance_matches_twice_chi(m):
    base = SpectralDensity.white("frequency", 1.0, TWO_PI * 10, TWO_PI * 300)
    seq = PulseSequence(m, 4e-3, 0)
    sd = scaled_to(base, seq, 0.5)
    r = estimate_coherence(sd, seq, n_traj=4000, seed=21 + m, keep_phases=True)
    se = np.std(r.phases**2, ddof=1) / np.sqrt(r.n_traj)
    assert abs(r.mean_sq_phase - 1.0) < 3 * se
    assert abs(r.mean_phase) < 3 * np.std(r.phases) / np.sqrt(r.n_traj)


def test_gaussian_identity():
    base = SpectralDensity.tabulated("frequency", TWO_PI * np.array([20.0, 100.0, 400.0]), [3.0, 1.0, 0.2])
    seq = PulseSequence(2, 3e-3, 0)
    sd = scaled_to(base, seq, 0.8)
    r = estimate_coherence(sd, seq, n_traj=4000, seed=31, keep_phases=True)
    pred, se = r.gaussian_prediction()
    assert abs(r.mean - pred) < 3 * np.hypot(r.stderr, se)


def test_agrees_with_filter_function_prediction():
    base = SpectralDensity.white("frequency", 1.0, TWO_PI * 10, TWO_PI * 300)
    seq = PulseSequence(2, 4e-3, 0)
    sd = scaled_to(base, seq, 0.7)
    r = estimate_coherence(sd, seq, n_traj=4000, seed=41)
    assert abs(r.mean - np.exp(-0.7)) < 3 * r.stderr


def test_validation():
    sd = SpectralDensity.white("frequency", 1.0, TWO_PI * 10, TWO_PI * 300)
    seq = PulseSequence(2, 4e-3, 0)
    with pytest.raises(ValidationError, match="n_traj"):
        estimate_coherence(sd, seq, n_traj=10)
    with pytest.raises(ValidationError, match="Nyquist"):
        estimate_coherence(sd, seq, n_traj=100, sample_rate=500.0)
    with pytest.raises(ValidationError, match="finite support"):
        estimate_coherence(SpectralDensity.from_power_law("frequency", 1.0, -1.0, 1.0, np.inf), seq, n_traj=100)
    with pytest.raises(KindMismatchError):
        estimate_coherence(SpectralDensity.white("field", 1.0, 1.0, 2.0), seq, n_traj=100)
