"""Time-domain Monte-Carlo check of the filter-function coherence.

Gaussian frequency-noise records are synthesized in the frequency domain
so that their one-sided power per hertz is ``P(f) = 2 S_beta(2 pi f)**2``.
Each record is integrated through the toggling sign of a pulse sequence
with the trapezoidal rule and ``<cos phi>`` is averaged over trajectories.

Every trajectory draws from its own Philox stream, obtained by jumping the
master-seeded generator ``trajectory`` times, so results do not depend on
how trajectories are spread over workers.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._errors import ValidationError
from .spectra import _require_kind

OVERSAMPLE = 16
RECORD_PERIODS = 16


@dataclass(frozen=True, eq=False)
class NoiseRealization:
    """One synthesized record of spin-frequency deviation ``delta(t_i)`` [rad/s]."""

    sample_rate: float
    samples: np.ndarray
    seed: int
    trajectory: int

    @property
    def times(self):
        return np.arange(self.samples.size) / self.sample_rate


@dataclass(frozen=True, eq=False)
class McEstimate:
    """Trajectory average of ``cos(phi)``.

    ``stderr`` is the sample standard deviation of ``cos(phi)`` over
    ``sqrt(n_traj)``. ``phases`` is kept only when requested.
    """

    mean: float
    stderr: float
    n_traj: int
    mean_phase: float
    mean_sq_phase: float
    phases: np.ndarray | None = None

    def gaussian_prediction(self):
        """``exp(-<phi**2>/2)`` from the same trajectories and its standard error."""
        if self.phases is None:
            raise ValueError("phases were not kept; rerun with keep_phases=True")
        p2 = self.phases**2
        pred = np.exp(-p2.mean() / 2)
        return float(pred), float(pred / 2 * p2.std(ddof=1) / np.sqrt(p2.size))


class _Synthesizer:
    """Precomputed per-bin standard deviations for one record layout."""

    def __init__(self, sbeta, n_samples, sample_rate):
        _require_kind(sbeta, "frequency")
        if n_samples < 4 or n_samples % 2:
            raise ValidationError("record length must be an even number of samples >= 4")
        support = sbeta.support()
        fmax = max([support[1] if support else 0.0] + [w for w, _ in sbeta.tones]) / (2 * np.pi)
        if not np.isfinite(fmax):
            raise ValidationError("Monte-Carlo synthesis needs a spectrum with finite support")
        if sample_rate <= 2 * fmax:
            raise ValidationError(
                f"sample rate {sample_rate:.6g} Hz violates Nyquist for support up to {fmax:.6g} Hz"
            )
        self.n = int(n_samples)
        self.fs = float(sample_rate)
        df = self.fs / self.n
        k = np.arange(1, self.n // 2)
        # exact power in each bin [f_k - df/2, f_k + df/2]; (2/2pi) int S^2 dw = (1/pi) dC
        edges = 2 * np.pi * df * np.concatenate([k - 0.5, [k[-1] + 0.5]])
        if support is None:
            var = np.zeros(k.size)
        else:
            var = np.diff(sbeta.cumulative_square_integral(edges)) / np.pi
        self.sigma = np.sqrt(np.maximum(var, 0.0))
        self.nbins = k.size
        self.tones = sbeta.tones

    def record(self, rng):
        ab = rng.standard_normal((2, self.nbins))
        spec = np.zeros(self.n // 2 + 1, dtype=complex)
        spec[1:-1] = (self.n / 2) * self.sigma * (ab[0] - 1j * ab[1])
        x = np.fft.irfft(spec, n=self.n)
        if self.tones:
            t = np.arange(self.n) / self.fs
            for w, a in self.tones:
                x = x + a * np.sin(w * t)
        return x


def trajectory_rng(seed, trajectory):
    """Generator for one trajectory: the master Philox stream jumped ``trajectory`` times."""
    return np.random.Generator(np.random.Philox(int(seed)).jumped(int(trajectory)))


def synthesize(sbeta, duration, sample_rate, seed, trajectory=0):
    """Gaussian realization of ``sbeta`` lasting at least ``duration`` seconds.

    The record is periodic with length ``N = ceil(duration * sample_rate)``
    (rounded up to even); the bin spacing is ``sample_rate / N``.
    """
    if not duration > 0:
        raise ValidationError("duration must be > 0")
    n = int(np.ceil(duration * sample_rate - 1e-9))
    n += n % 2
    syn = _Synthesizer(sbeta, n, sample_rate)
    return NoiseRealization(syn.fs, syn.record(trajectory_rng(seed, trajectory)), seed, trajectory)


def default_sample_rate(sbeta):
    """``OVERSAMPLE`` times the highest frequency present in ``sbeta``, in Hz."""
    support = sbeta.support()
    fmax = max([support[1] if support else 0.0] + [w for w, _ in sbeta.tones]) / (2 * np.pi)
    if not np.isfinite(fmax):
        raise ValidationError("Monte-Carlo synthesis needs a spectrum with finite support")
    return OVERSAMPLE * fmax if fmax > 0 else 1.0


def phase_weights(seq, sample_rate, dead_time=False):
    """Trapezoidal weights ``w_i`` such that ``phi = sum_i w_i delta(t_i)``.

    ``sample_rate`` must put an integer number of samples in each segment.
    With ``dead_time`` the toggling sign is zeroed within half a pi-pulse
    length either side of each flip.
    """
    n_seg = int(round(seq.tau * sample_rate))
    dt = 1.0 / sample_rate
    w = np.zeros(seq.m * n_seg + 1)
    seg = np.full(n_seg + 1, dt)
    seg[[0, -1]] = dt / 2
    for k in range(seq.m):
        w[k * n_seg:(k + 1) * n_seg + 1] += (-1) ** k * seg
    if dead_time and seq.pi_duration > 0:
        t = np.arange(w.size) * dt
        for tf in seq.kernel().flips:
            w[np.abs(t - tf) < seq.pi_duration / 2] = 0.0
    return w


def estimate_coherence(
    sbeta,
    seq,
    n_traj=10_000,
    seed=0,
    sample_rate=None,
    duration=None,
    dead_time=False,
    workers=1,
    keep_phases=False,
):
    """Monte-Carlo ``<cos phi>`` for ``seq`` under noise ``sbeta``.

    ``sample_rate`` defaults to ``OVERSAMPLE`` times the highest spectral
    frequency and is raised slightly so each segment holds a whole number
    of samples. ``duration`` (record length) defaults to ``RECORD_PERIODS``
    times the sequence length, which sets the synthesis bin spacing.
    """
    if n_traj < 100:
        raise ValidationError("n_traj must be >= 100")
    fs = default_sample_rate(sbeta) if sample_rate is None else float(sample_rate)
    n_seg = max(1, int(np.ceil(seq.tau * fs - 1e-9)))
    fs = n_seg / seq.tau
    T = seq.total_time
    length = RECORD_PERIODS * T if duration is None else float(duration)
    if length < T:
        raise ValidationError("record duration must cover the sequence")
    n = int(np.ceil(length * fs - 1e-9))
    n += n % 2
    syn = _Synthesizer(sbeta, n, fs)
    w = phase_weights(seq, fs, dead_time)

    def run(indices):
        out = np.empty(len(indices))
        for j, idx in enumerate(indices):
            x = syn.record(trajectory_rng(seed, idx))
            out[j] = w @ x[: w.size]
        return out

    chunks = np.array_split(np.arange(n_traj), max(1, workers) * 4)
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, chunks))
    else:
        parts = [run(c) for c in chunks]
    phases = np.concatenate(parts)
    c = np.cos(phases)
    return McEstimate(
        mean=float(c.mean()),
        stderr=float(c.std(ddof=1) / np.sqrt(n_traj)),
        n_traj=int(n_traj),
        mean_phase=float(phases.mean()),
        mean_sq_phase=float(np.mean(phases**2)),
        phases=phases if keep_phases else None,
    )
