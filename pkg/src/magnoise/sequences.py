"""Equally spaced pi-pulse sequences and their filter functions.

A sequence has ``m`` free-evolution segments of length ``tau`` separated by
``m - 1`` pi pulses: ``m = 1`` is Ramsey, ``m = 2`` a single spin echo.
Filter functions use the zero-pulse-length limit, so the toggling sign
flips at ``k * tau``.
"""

from dataclasses import dataclass

import numpy as np

from ._errors import ValidationError
from .constants import PI_PULSE_DURATION


@dataclass(frozen=True)
class PulseSequence:
    """Timing of an ``m``-segment sequence.

    Parameters
    ----------
    m : int
        Number of free-evolution segments (``m - 1`` pi pulses).
    tau : float
        Segment duration in seconds. Each segment includes the pi-pulse time.
    pi_duration : float
        Length of one pi pulse in seconds; bookkeeping only for the analytic
        filter functions.
    theta : float
        Phase of the final pi/2 analysis pulse in radians.
    """

    m: int
    tau: float
    pi_duration: float = PI_PULSE_DURATION
    theta: float = 0.0

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise ValidationError(f"segment count m must be an integer >= 1, got {self.m}")
        object.__setattr__(self, "m", int(self.m))
        if not (np.isfinite(self.tau) and self.tau > 0):
            raise ValidationError(f"tau must be > 0, got {self.tau}")
        if not (0 <= self.pi_duration < self.tau):
            raise ValidationError(
                f"pi_duration must satisfy 0 <= pi_duration < tau ({self.pi_duration} vs {self.tau})"
            )

    @property
    def total_time(self):
        return self.m * self.tau

    @property
    def name(self):
        return {1: "ramsey", 2: "echo"}.get(self.m, f"cpmg-{self.m}")

    def with_total_time(self, total):
        """Same sequence shape stretched to total evolution time ``total``."""
        return PulseSequence(self.m, total / self.m, self.pi_duration, self.theta)

    def kernel(self):
        return ToggledPhaseKernel.from_sequence(self)


@dataclass(frozen=True)
class ToggledPhaseKernel:
    """Sign function y(t) over [0, T] that flips at each pi-pulse center.

    ``edges`` holds the segment boundaries ``0, t_1, ..., T`` and ``signs``
    the value of y on each segment, starting at +1.
    """

    edges: np.ndarray
    signs: np.ndarray

    @classmethod
    def from_sequence(cls, seq):
        edges = seq.tau * np.arange(seq.m + 1, dtype=float)
        signs = (-1.0) ** np.arange(seq.m)
        return cls(edges, signs)

    @property
    def flips(self):
        return self.edges[1:-1]

    def __call__(self, t, dead_time=0.0):
        """Evaluate y(t); with ``dead_time`` > 0, y is 0 within half of it around each flip."""
        t = np.asarray(t, dtype=float)
        k = np.clip(np.searchsorted(self.edges, t, side="right") - 1, 0, self.signs.size - 1)
        y = self.signs[k]
        y = np.where((t < self.edges[0]) | (t > self.edges[-1]), 0.0, y)
        if dead_time > 0:
            for tf in self.flips:
                y = np.where(np.abs(t - tf) < dead_time / 2, 0.0, y)
        return y


def _filter_sum(omega, tau, m):
    # direct |sum_k (-1)^k (e^{i w (k+1) tau} - e^{i w k tau})|^2, used near removable singularities
    z = np.exp(1j * np.multiply.outer(omega, np.arange(m + 1)) * tau)
    signs = (-1.0) ** np.arange(m)
    s = np.sum(signs * (z[..., 1:] - z[..., :-1]), axis=-1)
    return np.abs(s) ** 2


def filter_function(seq, omega):
    """Filter function F(omega) of ``seq`` (dimensionless, ``0 <= F <= 4 m**2``).

    Equals ``|omega * int_0^T y(t) exp(i omega t) dt|**2``; for ``m = 1`` this is
    ``4 sin(omega tau / 2)**2`` and for ``m = 2`` ``16 sin(omega T / 4)**4``.
    For general ``m`` the geometric sum gives
    ``4 tan(x)**2 * {sin, cos}(m x)**2`` with ``x = omega tau / 2``
    (sin for even, cos for odd ``m``).
    """
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0):
        raise ValidationError("filter function is defined for omega >= 0")
    m, tau = seq.m, seq.tau
    x = omega * tau / 2
    if m == 1:
        return 4 * np.sin(x) ** 2
    if m == 2:
        return 16 * np.sin(x) ** 4
    c = np.cos(x)
    near = np.abs(c) < 1e-4
    with np.errstate(divide="ignore", invalid="ignore"):
        osc = np.sin(m * x) if m % 2 == 0 else np.cos(m * x)
        closed = 4 * (np.sin(x) * osc / np.where(near, 1.0, c)) ** 2
    if np.any(near):
        closed = np.where(near, _filter_sum(np.where(near, omega, 0.0), tau, m), closed)
    return closed


def synchronous_tau(omega):
    """Segment length that locks to a tone at ``omega``: half its period, pi/omega."""
    if not omega > 0:
        raise ValidationError(f"omega must be > 0, got {omega}")
    return np.pi / omega


def tone_phase(seq, omega, delta_amplitude, phi0=0.0):
    """Phase from a frequency shift ``delta(t) = delta_amplitude * sin(omega t + phi0)``.

    Computes ``sum_k y_k int_segment delta(t) dt`` in closed form.
    """
    kern = seq.kernel()
    a, b = kern.edges[:-1], kern.edges[1:]
    seg = (np.cos(omega * a + phi0) - np.cos(omega * b + phi0)) / omega
    return float(delta_amplitude * np.sum(kern.signs * seg))


def phase_accrual(seq, B_m, omega, spin, phi0=0.0):
    """Spin phase [rad] accumulated through ``seq`` from ``B(t) = B_m sin(omega t + phi0)``.

    The Larmor shift is ``Delta(t) = gamma * B(t)``. At the synchronous
    segment length (``tau = pi / omega``) and ``phi0 = 0`` each segment adds
    ``2 gamma B_m / omega``, so the total grows as ``m`` times that.
    """
    if not omega > 0:
        raise ValidationError(f"tone frequency must be > 0, got {omega}")
    return tone_phase(seq, omega, spin.gamma * B_m, phi0)


def max_tone_phase(seq, omega, delta_amplitude):
    """Maximize :func:`tone_phase` over the tone phase.

    The phase is ``P(0) cos(phi0) + P(pi/2) sin(phi0)``, so the maximum is the
    norm of those two values. Returns ``(phase, phi0)``.
    """
    p0 = tone_phase(seq, omega, delta_amplitude, 0.0)
    p1 = tone_phase(seq, omega, delta_amplitude, np.pi / 2)
    return float(np.hypot(p0, p1)), float(np.arctan2(p1, p0))
