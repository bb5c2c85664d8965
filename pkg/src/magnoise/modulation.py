"""Single-tone field modulation seen as FM of the spin carrier.

A field ``B0 + B_m sin(w_m t)`` shifts the Larmor frequency by
``dw_m sin(w_m t)`` with ``dw_m = (B_m / B0) Omega_0``, a phase modulation of
index ``beta_m = dw_m / w_m``. The carrier keeps relative strength
``J_0(beta_m)`` and the sidebands at ``Omega_0 +- n w_m`` get ``J_n(beta_m)``.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._errors import ValidationError
from .spectra import SpinSpecies

MAX_BETA = 50.0
_SERIES_LIMIT = 2.0


@dataclass(frozen=True)
class ToneModulation:
    fractional_amplitude: float
    omega_m: float
    carrier: float

    def __post_init__(self):
        if not self.fractional_amplitude >= 0:
            raise ValidationError("fractional amplitude B_m/B0 must be >= 0")
        if not self.carrier > 0:
            raise ValidationError("carrier frequency must be > 0")

    @property
    def beta_m(self):
        return modulation_index(self)


def modulation_index(tone):
    """``beta_m = (B_m / B0) * Omega_0 / omega_m``."""
    if not tone.omega_m > 0:
        raise ValidationError(f"modulation frequency must be > 0, got {tone.omega_m}")
    return tone.fractional_amplitude * tone.carrier / tone.omega_m


def _series(n_max, x):
    out = np.zeros(n_max + 1)
    h = x / 2
    h2 = h * h
    for n in range(n_max + 1):
        term = h**n / math.factorial(n) if n < 171 else 0.0
        total = term
        k = 0
        while term != 0.0 and abs(term) > 1e-17 * abs(total):
            k += 1
            term *= -h2 / (k * (k + n))
            total += term
        out[n] = total
    return out


def _miller(n_max, x):
    top = max(n_max, int(math.ceil(x)))
    start = top + 30 + int(math.sqrt(160 * top))
    start += start % 2
    out = np.zeros(n_max + 1)
    j_next, j_cur = 0.0, 1e-300
    norm = 0.0
    for k in range(start, 0, -1):
        j_prev = 2 * k / x * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        if abs(j_cur) > 1e250:
            j_cur *= 1e-250
            j_next *= 1e-250
            out *= 1e-250
            norm *= 1e-250
        # j_cur now holds J_{k-1} (unnormalized)
        if k - 1 <= n_max:
            out[k - 1] = j_cur
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm += 2 * j_cur
    norm += j_cur
    return out / norm


def bessel_j(n_max, x):
    """``J_0(x) ... J_{n_max}(x)`` for ``0 <= x <= 50``.

    Power series for ``x <= 2``; otherwise Miller's downward recurrence
    normalized with ``J_0 + 2 sum J_2k = 1``.
    """
    n_max = int(n_max)
    x = float(x)
    if n_max < 0:
        raise ValidationError("n_max must be >= 0")
    if x < 0:
        raise ValidationError("argument must be >= 0")
    if x > MAX_BETA:
        raise ValidationError(f"argument {x} is outside the validated range [0, {MAX_BETA}]")
    if x == 0:
        out = np.zeros(n_max + 1)
        out[0] = 1.0
        return out
    if x <= _SERIES_LIMIT:
        return _series(n_max, x)
    return _miller(n_max, x)


def sideband_strengths(beta_m, n_max):
    """Relative strengths ``J_n(beta_m)`` of carrier (n=0) and sidebands n=1..n_max."""
    return bessel_j(n_max, beta_m)


@dataclass(frozen=True)
class ComparisonRow:
    label: str
    beta_m: float
    J0: float
    J1: float


@dataclass(frozen=True)
class Comparison:
    rows: tuple
    dephasing_ratio: float


def compare_esr_nmr(fractional_amplitude, omega_m, carrier, electron=None, other=None):
    """Carrier depletion of the same field tone for an electron and a second spin.

    ``carrier`` is the electron carrier; the other species' carrier scales by
    ``|gamma_other / gamma_electron|``. ``dephasing_ratio`` is that ratio
    squared, the factor by which stochastic dephasing is weaker.
    """
    electron = electron or SpinSpecies.electron()
    other = other or SpinSpecies.nuclear()
    ratio = abs(other.gamma / electron.gamma)
    rows = []
    for label, spin, car in (("ESR", electron, carrier), (_label(other, electron), other, carrier * ratio)):
        beta = modulation_index(ToneModulation(fractional_amplitude, omega_m, car))
        j = sideband_strengths(beta, 1)
        rows.append(ComparisonRow(label, beta, float(j[0]), float(j[1])))
    return Comparison(tuple(rows), ratio**2)


def _label(spin, electron):
    if spin.gamma == electron.gamma:
        return "ESR"
    if abs(spin.gamma) < abs(electron.gamma) / 100:
        return "NMR"
    return "custom"
