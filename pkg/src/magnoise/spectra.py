"""One-sided amplitude spectral densities and their unit conversions.

Three kinds of density are carried around: coil ``voltage`` [V/sqrt(Hz)],
magnetic ``field`` [T/sqrt(Hz)] and spin ``frequency`` fluctuation
[s^-1/sqrt(Hz)]. All live on an angular-frequency grid in rad/s.

Normalization: the square of a frequency-kind density integrates to the
mean-square frequency deviation as ``delta_rms**2 = (1/pi) * int S**2 domega``.
The equivalent one-sided power density per hertz is ``P(f) = 2 S(2 pi f)**2``
(see :func:`power_per_hz`); the Monte-Carlo synthesizer uses exactly this.
"""

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from ._errors import KindMismatchError, ValidationError
from .constants import B0_MAGNET, CARRIER_HZ, GAMMA_ELECTRON, GAMMA_NUCLEAR

KINDS = ("voltage", "field", "frequency")
UNITS = {"voltage": "V/sqrt(Hz)", "field": "T/sqrt(Hz)", "frequency": "s^-1/sqrt(Hz)"}


def _as_grid(omega):
    omega = np.asarray(omega, dtype=float).ravel()
    if omega.size and (not np.all(np.isfinite(omega)) or np.any(omega <= 0)):
        raise ValidationError("frequency grid must be finite and strictly positive")
    if omega.size > 1 and np.any(np.diff(omega) <= 0):
        raise ValidationError("frequency grid must be strictly increasing")
    return omega


def _as_amplitudes(amplitude, n):
    amplitude = np.asarray(amplitude, dtype=float).ravel()
    if amplitude.size != n:
        raise ValidationError(f"expected {n} amplitudes, got {amplitude.size}")
    if not np.all(np.isfinite(amplitude)) or np.any(amplitude < 0):
        raise ValidationError("amplitudes must be finite and non-negative")
    return amplitude


def _frozen(a):
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PowerLaw:
    """``coef * omega**exponent`` on ``[omega_lo, omega_hi]``, zero elsewhere."""

    coef: float
    exponent: float
    omega_lo: float
    omega_hi: float

    def __post_init__(self):
        if not (np.isfinite(self.coef) and self.coef >= 0):
            raise ValidationError("power-law coefficient must be finite and >= 0")
        if not (0 < self.omega_lo < self.omega_hi):
            raise ValidationError("power-law support needs 0 < omega_lo < omega_hi")

    def __call__(self, omega):
        omega = np.asarray(omega, dtype=float)
        inside = (omega >= self.omega_lo) & (omega <= self.omega_hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = self.coef * np.where(inside, omega, 1.0) ** self.exponent
        return np.where(inside, val, 0.0)

    def square_integral(self):
        """Closed form of ``int S**2 domega`` over the support."""
        p2 = 2.0 * self.exponent + 1.0
        lo, hi = self.omega_lo, self.omega_hi
        if np.isinf(hi):
            if p2 >= 0:
                raise ValidationError(
                    "power law with exponent >= -1/2 has a divergent mean-square "
                    "deviation on an unbounded support; give a finite omega_hi"
                )
            return self.coef**2 * (-(lo**p2)) / p2
        if abs(p2) < 1e-12:
            return self.coef**2 * np.log(hi / lo)
        return self.coef**2 * (hi**p2 - lo**p2) / p2


@dataclass(frozen=True, eq=False)
class SpectralDensity:
    """A one-sided amplitude spectral density of a given ``kind``.

    The continuous part is either tabulated on ``omega`` (log-log
    interpolated, zero outside the grid) or an analytic power law; the
    grid of an analytic density is only a sampling used for display and
    CSV output. ``tones`` holds coherent lines as ``(omega, amplitude)``
    pairs whose amplitude is a peak value in the kind's natural unit
    (volts, tesla or rad/s), not a density.
    """

    kind: str
    omega: np.ndarray
    amplitude: np.ndarray
    power_law: PowerLaw | None = None
    tones: tuple = field(default=())

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown density kind {self.kind!r}; expected one of {KINDS}")
        omega = _as_grid(self.omega)
        amplitude = _as_amplitudes(self.amplitude, omega.size)
        object.__setattr__(self, "omega", _frozen(omega))
        object.__setattr__(self, "amplitude", _frozen(amplitude))
        tones = []
        for w, a in self.tones:
            w, a = float(w), float(a)
            if not (np.isfinite(w) and w > 0 and np.isfinite(a) and a >= 0):
                raise ValidationError("tones need omega > 0 and a finite amplitude >= 0")
            tones.append((w, a))
        object.__setattr__(self, "tones", tuple(tones))

    # construction helpers

    @classmethod
    def tabulated(cls, kind, omega, amplitude, tones=()):
        return cls(kind, omega, amplitude, tones=tones)

    @classmethod
    def from_power_law(cls, kind, coef, exponent, omega_lo, omega_hi, n_grid=64, tones=()):
        law = PowerLaw(float(coef), float(exponent), float(omega_lo), float(omega_hi))
        hi = omega_hi if np.isfinite(omega_hi) else omega_lo * 1e3
        grid = np.geomspace(omega_lo, hi, n_grid)
        return cls(kind, grid, law(grid), power_law=law, tones=tones)

    @classmethod
    def tone_set(cls, kind, omega, amplitude):
        return cls(kind, np.empty(0), np.empty(0), tones=tuple(zip(omega, amplitude)))

    @classmethod
    def white(cls, kind, level, omega_lo, omega_hi):
        """Flat density ``level`` on ``[omega_lo, omega_hi]``."""
        return cls.from_power_law(kind, level, 0.0, omega_lo, omega_hi, n_grid=2)

    # queries

    @property
    def representation(self):
        continuous = self.power_law is not None or self.omega.size > 0
        if self.tones and continuous:
            return "mixed"
        if self.tones:
            return "tone-set"
        return "analytic" if self.power_law is not None else "tabulated"

    @property
    def units(self):
        return UNITS[self.kind]

    def support(self):
        """``(omega_lo, omega_hi)`` of the continuous part, or ``None``."""
        if self.power_law is not None:
            return self.power_law.omega_lo, self.power_law.omega_hi
        if self.omega.size == 0:
            return None
        return float(self.omega[0]), float(self.omega[-1])

    def breakpoints(self):
        """Points where the interpolant has kinks; quadrature panels align here."""
        if self.power_law is not None:
            lo, hi = self.support()
            return np.array([lo, hi]) if np.isfinite(hi) else np.array([lo])
        return self.omega.copy()

    def is_zero(self):
        if self.power_law is not None:
            cont = self.power_law.coef == 0
        else:
            cont = not np.any(self.amplitude > 0)
        return cont and all(a == 0 for _, a in self.tones)

    def __call__(self, omega):
        """Evaluate the continuous density at ``omega`` (rad/s)."""
        omega = np.asarray(omega, dtype=float)
        if self.power_law is not None:
            return self.power_law(omega)
        return _loglog_interp(omega, self.omega, self.amplitude)

    def square_integral(self):
        """Exact ``int S(omega)**2 domega`` of the continuous part."""
        if self.power_law is not None:
            return float(self.power_law.square_integral())
        if self.omega.size < 2:
            return 0.0
        return float(np.sum(_segment_square_integrals(self.omega, self.amplitude)))

    def cumulative_square_integral(self, omega):
        """Exact ``int_0^omega S(w)**2 dw`` of the continuous part, vectorized."""
        x = np.asarray(omega, dtype=float)
        if self.power_law is not None:
            law = self.power_law
            xc = np.clip(x, law.omega_lo, law.omega_hi)
            p2 = 2.0 * law.exponent + 1.0
            if abs(p2) < 1e-12:
                return law.coef**2 * np.log(xc / law.omega_lo)
            return law.coef**2 * (xc**p2 - law.omega_lo**p2) / p2
        if self.omega.size < 2:
            return np.zeros_like(x)
        xp, fp = self.omega, self.amplitude
        seg = _segment_square_integrals(xp, fp)
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        xc = np.clip(x, xp[0], xp[-1])
        k = np.clip(np.searchsorted(xp, xc, side="right") - 1, 0, xp.size - 2)
        return cum[k] + _partial_square_integral(xp[k], xp[k + 1], fp[k], fp[k + 1], xc)

    # transformations (all return new objects on the same grid)

    def scaled(self, factor):
        factor = float(factor)
        if not (np.isfinite(factor) and factor >= 0):
            raise ValidationError("scale factor must be finite and >= 0")
        law = None
        if self.power_law is not None:
            law = replace(self.power_law, coef=self.power_law.coef * factor)
        return SpectralDensity(
            self.kind,
            self.omega,
            self.amplitude * factor,
            power_law=law,
            tones=tuple((w, a * factor) for w, a in self.tones),
        )

    def without_tones(self):
        return replace(self, tones=())


def _loglog_interp(x, xp, fp):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    if xp.size == 0:
        return out
    if xp.size == 1:
        return np.where(x == xp[0], fp[0], 0.0)
    inside = (x >= xp[0]) & (x <= xp[-1])
    xi = x[inside]
    k = np.clip(np.searchsorted(xp, xi, side="right") - 1, 0, xp.size - 2)
    x0, x1 = xp[k], xp[k + 1]
    y0, y1 = fp[k], fp[k + 1]
    positive = (y0 > 0) & (y1 > 0)
    t_lin = (xi - x0) / (x1 - x0)
    lin = y0 + (y1 - y0) * t_lin
    with np.errstate(divide="ignore", invalid="ignore"):
        t_log = np.log(xi / x0) / np.log(x1 / x0)
        log = np.exp(np.log(np.where(positive, y0, 1.0)) * (1 - t_log)
                     + np.log(np.where(positive, y1, 1.0)) * t_log)
    out[inside] = np.where(positive, log, lin)
    return out


def _segment_square_integrals(xp, fp):
    """Exact integral of the squared interpolant on each grid segment."""
    x0, x1 = xp[:-1], xp[1:]
    y0, y1 = fp[:-1], fp[1:]
    positive = (y0 > 0) & (y1 > 0)
    # zero endpoint: linear interpolant
    lin = (x1 - x0) * (y0**2 + y0 * y1 + y1**2) / 3.0
    # power-law segment y0 * (x/x0)**s, squared exponent 2s
    with np.errstate(divide="ignore", invalid="ignore"):
        r = x1 / x0
        s = np.log(np.where(positive, y1 / np.where(y0 > 0, y0, 1.0), 1.0)) / np.log(r)
        q = 2 * s + 1
        pw = np.where(
            np.abs(q) < 1e-12,
            y0**2 * x0 * np.log(r),
            y0**2 * x0 * np.expm1(q * np.log(r)) / np.where(np.abs(q) < 1e-12, 1.0, q),
        )
    return np.where(positive, pw, lin)


def _partial_square_integral(x0, x1, y0, y1, x):
    """Integral of the squared interpolant of one segment from ``x0`` to ``x``."""
    positive = (y0 > 0) & (y1 > 0)
    d = x - x0
    g = (y1 - y0) / (x1 - x0)
    lin = y0**2 * d + y0 * g * d**2 + g**2 * d**3 / 3.0
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.log(np.where(positive, y1 / np.where(y0 > 0, y0, 1.0), 1.0)) / np.log(x1 / x0)
        q = 2 * s + 1
        lr = np.log(x / x0)
        pw = np.where(
            np.abs(q) < 1e-12,
            y0**2 * x0 * lr,
            y0**2 * x0 * np.expm1(q * lr) / np.where(np.abs(q) < 1e-12, 1.0, q),
        )
    return np.where(positive, pw, lin)


def power_per_hz(sd, f):
    """One-sided power density per hertz, ``P(f) = 2 S(2 pi f)**2``."""
    return 2.0 * sd(2 * np.pi * np.asarray(f, dtype=float)) ** 2


@dataclass(frozen=True, eq=False)
class CouplingEta:
    """Geometric coil coupling eta [m^2], with V/B = eta * omega.

    Either a scalar or a table ``(omega_k, eta_k)``; the table is
    interpolated linearly in log(omega) and held constant beyond its ends.
    """

    value: float | None = None
    omega: np.ndarray | None = None
    eta: np.ndarray | None = None

    def __post_init__(self):
        if self.value is not None:
            v = float(self.value)
            if not (np.isfinite(v) and v > 0):
                raise ValidationError(f"eta must be finite and > 0, got {self.value}")
            object.__setattr__(self, "value", v)
            return
        if self.omega is None or self.eta is None:
            raise ValidationError("CouplingEta needs a scalar value or a table")
        omega = _as_grid(self.omega)
        eta = np.asarray(self.eta, dtype=float).ravel()
        if eta.size != omega.size or omega.size == 0:
            raise ValidationError("eta table columns must have equal, nonzero length")
        if not np.all(np.isfinite(eta)) or np.any(eta <= 0):
            raise ValidationError("tabulated eta must be finite and > 0")
        object.__setattr__(self, "omega", _frozen(omega))
        object.__setattr__(self, "eta", _frozen(eta))

    @classmethod
    def coerce(cls, eta):
        if isinstance(eta, cls):
            return eta
        return cls(value=eta)

    @property
    def is_scalar(self):
        return self.value is not None

    def __call__(self, omega):
        omega = np.asarray(omega, dtype=float)
        if self.is_scalar:
            return np.full_like(omega, self.value)
        if self.omega.size == 1:
            return np.full_like(omega, self.eta[0])
        return np.interp(np.log(omega), np.log(self.omega), self.eta)


@dataclass(frozen=True)
class SpinSpecies:
    """Spin with gyromagnetic ratio ``gamma`` [rad s^-1 T^-1] in field ``B0``."""

    gamma: float
    B0: float = B0_MAGNET
    carrier_offset: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.gamma) or self.gamma == 0:
            raise ValidationError("gamma must be finite and nonzero")
        if not self.B0 > 0:
            raise ValidationError("B0 must be > 0")
        if not self.omega0 > 0:
            raise ValidationError("carrier frequency must be > 0")

    @property
    def omega0(self):
        """Carrier (Larmor) angular frequency including any offset."""
        return abs(self.gamma) * self.B0 + self.carrier_offset

    @classmethod
    def electron(cls, B0=B0_MAGNET, carrier_offset=0.0):
        return cls(GAMMA_ELECTRON, B0, carrier_offset)

    @classmethod
    def nuclear(cls, B0=B0_MAGNET, carrier_offset=0.0):
        return cls(GAMMA_NUCLEAR, B0, carrier_offset)

    @classmethod
    def from_name(cls, name, B0=B0_MAGNET):
        """Parse ``electron``, ``be9``, ``nuclear`` or ``custom:<gamma>``."""
        if name == "electron":
            return cls.electron(B0)
        if name == "be9":
            return be9_electron(B0)
        if name == "nuclear":
            return cls.nuclear(B0)
        if name.startswith("custom:"):
            try:
                gamma = float(name.split(":", 1)[1])
            except ValueError:
                raise ValidationError(f"bad custom gyromagnetic ratio in {name!r}") from None
            return cls(gamma, B0)
        raise ValidationError(f"unknown species {name!r}")


def be9_electron(B0=B0_MAGNET):
    """9Be+ valence electron with the hyperfine-shifted 124.05 GHz carrier at 4.46 T."""
    offset = 2 * np.pi * CARRIER_HZ - GAMMA_ELECTRON * B0_MAGNET
    return SpinSpecies(GAMMA_ELECTRON, B0, offset)


def _require_kind(sd, kind):
    if not isinstance(sd, SpectralDensity):
        raise KindMismatchError(f"expected a SpectralDensity, got {type(sd).__name__}")
    if sd.kind != kind:
        raise KindMismatchError(f"expected a {kind} density, got {sd.kind}")


def voltage_to_field(sv, eta):
    """Coil EMF density to field density, ``S_B = S_V / (eta * omega)``."""
    _require_kind(sv, "voltage")
    eta = CouplingEta.coerce(eta)
    tones = tuple((w, a / (float(eta(w)) * w)) for w, a in sv.tones)
    if sv.power_law is not None and eta.is_scalar:
        law = sv.power_law
        new_law = PowerLaw(law.coef / eta.value, law.exponent - 1.0, law.omega_lo, law.omega_hi)
        return SpectralDensity("field", sv.omega, new_law(sv.omega), power_law=new_law, tones=tones)
    amplitude = sv.amplitude / (eta(sv.omega) * sv.omega) if sv.omega.size else sv.amplitude
    return SpectralDensity("field", sv.omega, amplitude, tones=tones)


def field_to_frequency(sb, spin):
    """Field density to spin-frequency density, ``S_beta = |gamma| S_B``."""
    _require_kind(sb, "field")
    g = abs(spin.gamma)
    law = None
    if sb.power_law is not None:
        law = replace(sb.power_law, coef=sb.power_law.coef * g)
    return SpectralDensity(
        "frequency",
        sb.omega,
        sb.amplitude * g,
        power_law=law,
        tones=tuple((w, a * g) for w, a in sb.tones),
    )


def to_frequency(sd, spin=None, eta=None):
    """Convert a density of any kind to frequency kind."""
    if sd.kind == "voltage":
        if eta is None:
            raise ValidationError("a voltage density needs eta to convert to field")
        sd = voltage_to_field(sd, eta)
    if sd.kind == "field":
        if spin is None:
            raise ValidationError("a field density needs a spin species to convert to frequency")
        sd = field_to_frequency(sd, spin)
    return sd


def load_psd(path, kind, freq_unit="Hz"):
    """Read a two-column ``frequency,amplitude`` CSV.

    Lines starting with ``#`` and blank lines are skipped. ``freq_unit`` is
    ``"Hz"`` (converted with 2 pi f) or ``"rad/s"``.
    """
    if freq_unit not in ("Hz", "rad/s"):
        raise ValidationError(f"frequency unit must be 'Hz' or 'rad/s', got {freq_unit!r}")
    freq, amp = [], []
    with open(path, newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            cells = next(csv.reader([stripped]))
            if len(cells) != 2:
                raise ValidationError(f"{path}:{lineno}: expected 2 columns, got {len(cells)}")
            try:
                f, a = float(cells[0]), float(cells[1])
            except ValueError:
                raise ValidationError(f"{path}:{lineno}: non-numeric value in {stripped!r}") from None
            if a < 0 or not np.isfinite(a):
                raise ValidationError(f"{path}:{lineno}: amplitude must be finite and >= 0")
            freq.append(f)
            amp.append(a)
    if not freq:
        raise ValidationError(f"{path}: no data rows")
    omega = np.asarray(freq)
    if freq_unit == "Hz":
        omega = 2 * np.pi * omega
    return SpectralDensity.tabulated(kind, omega, amp)


def save_psd(path, sd, freq_unit="Hz"):
    """Write the sampled continuous part of ``sd`` as CSV (9 significant digits)."""
    if freq_unit not in ("Hz", "rad/s"):
        raise ValidationError(f"frequency unit must be 'Hz' or 'rad/s', got {freq_unit!r}")
    x = sd.omega / (2 * np.pi) if freq_unit == "Hz" else sd.omega
    with open(path, "w", newline="") as fh:
        fh.write(f"# kind={sd.kind} frequency[{freq_unit}] amplitude[{sd.units}]\n")
        for f, a in zip(x, sd.amplitude):
            fh.write(f"{f:.9g},{a:.9g}\n")
