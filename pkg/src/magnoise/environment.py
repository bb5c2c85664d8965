"""Back-of-envelope estimators for the magnet bore environment.

Penning-trap frequencies, the acoustic resonance of the open bore, phase
noise growth under frequency multiplication, spin-frequency spread from
static field gradients, and the on-axis field of a weakly magnetized tube.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from ._errors import ValidationError
from .constants import AMU, E_CHARGE, FIELD_SENSOR_HZ_PER_T


@dataclass(frozen=True)
class TrapConfig:
    """Penning trap in a field ``B0``; frequencies in rad/s, SI units otherwise."""

    B0: float
    q: float
    M: float
    omega_z: float
    omega_r: float

    @classmethod
    def be9(cls, B0=4.46, omega_z=2 * np.pi * 800e3, omega_r=2 * np.pi * 45e3):
        return cls(B0, E_CHARGE, 9.0122 * AMU, omega_z, omega_r)


@dataclass(frozen=True)
class TrapFrequencies:
    cyclotron: float
    beta_r: float
    confining: bool
    config: TrapConfig

    def potential(self, r, z):
        """Rotating-frame potential energy ``q phi = M w_z^2 (z^2 + beta_r r^2) / 2`` [J]."""
        cfg = self.config
        r = np.asarray(r, dtype=float)
        z = np.asarray(z, dtype=float)
        return 0.5 * cfg.M * cfg.omega_z**2 * (z**2 + self.beta_r * r**2)


def cyclotron_frequency(B0, q, M):
    return B0 * q / M


def radial_beta(omega_r, omega_z, cyclotron):
    return omega_r * (cyclotron - omega_r) / omega_z**2 - 0.5


def trap_frequencies(cfg):
    """Cyclotron frequency, radial confinement ``beta_r`` and the trap potential.

    ``confining`` is False when ``beta_r <= 0``; nothing is raised so callers
    can scan rotation frequencies through the unstable region.
    """
    if not (cfg.B0 > 0 and cfg.q > 0 and cfg.M > 0 and cfg.omega_z > 0 and cfg.omega_r > 0):
        raise ValidationError("trap parameters must all be > 0")
    wc = cyclotron_frequency(cfg.B0, cfg.q, cfg.M)
    beta = radial_beta(cfg.omega_r, cfg.omega_z, wc)
    return TrapFrequencies(wc, beta, beta > 0, cfg)


def acoustic_fundamental(length, diameter, speed=343.0):
    """Open-pipe fundamental with end corrections, ``v / (2 L + 1.6 d)`` in Hz."""
    if not (length > 0 and diameter >= 0 and speed > 0):
        raise ValidationError("pipe length and sound speed must be > 0, diameter >= 0")
    return speed / (2 * length + 1.6 * diameter)


def multiplication_noise_db(factor):
    """Phase-noise increase in dB when a reference is multiplied by ``factor``."""
    if not factor > 0:
        raise ValidationError(f"multiplication factor must be > 0, got {factor}")
    return 20 * np.log10(factor)


GRADIENT_TERMS = ("x", "y", "xy", "x2-y2", "x2+y2", "z", "z2")
_LINEAR = ("x", "y", "z")


@dataclass(frozen=True)
class GradientTable:
    """Field-gradient coefficients: linear terms in T/mm, quadratic in T/mm^2.

    Values are magnitudes; bounds quoted as ``< value`` are taken at the bound.
    """

    coefficients: dict = field(default_factory=dict)
    sensitivity: float = FIELD_SENSOR_HZ_PER_T

    def __post_init__(self):
        coeffs = {}
        for k, v in self.coefficients.items():
            if k not in GRADIENT_TERMS:
                raise ValidationError(f"unknown gradient term {k!r}; expected {GRADIENT_TERMS}")
            v = float(v)
            if not np.isfinite(v):
                raise ValidationError(f"gradient {k} is not finite")
            coeffs[k] = abs(v)
        object.__setattr__(self, "coefficients", coeffs)

    def get(self, term):
        return self.coefficients.get(term, 0.0)

    def scaled(self, factor):
        return GradientTable({k: v * factor for k, v in self.coefficients.items()}, self.sensitivity)

    @classmethod
    def measured_2014(cls):
        """The 2014 ion-probe values; all but x and y are upper bounds."""
        return cls({
            "x": 0.42e-6, "y": 0.78e-6, "xy": 0.2e-6, "x2-y2": 0.2e-6,
            "x2+y2": 0.1e-6, "z": 0.03e-6, "z2": 0.2e-6,
        })

    @classmethod
    def from_csv(cls, path, sensitivity=FIELD_SENSOR_HZ_PER_T):
        """Rows ``term,value`` with value in units of 1e-6 T/mm or T/mm^2.

        A leading ``<`` on the value marks a bound and is dropped.
        """
        coeffs = {}
        with open(path, newline="") as fh:
            for lineno, row in enumerate(csv.reader(fh), start=1):
                if not row or row[0].strip().startswith("#"):
                    continue
                if len(row) < 2:
                    raise ValidationError(f"{path}:{lineno}: expected term,value")
                term, raw = row[0].strip(), row[1].strip().lstrip("<").strip()
                try:
                    coeffs[term] = float(raw) * 1e-6
                except ValueError:
                    raise ValidationError(f"{path}:{lineno}: bad value {row[1]!r}") from None
        return cls(coeffs, sensitivity)


@dataclass(frozen=True)
class Dispersion:
    """Frequency spreads in Hz per gradient term."""

    axial_linear: float
    axial_quadratic: float
    axial_upper_bound: float
    radial: float
    averaged: dict

    def as_dict(self):
        return {
            "axial_linear_hz": self.axial_linear,
            "axial_quadratic_hz": self.axial_quadratic,
            "axial_upper_bound_hz": self.axial_upper_bound,
            "radial_hz": self.radial,
            **{f"averaged_{k}_hz": v for k, v in self.averaged.items()},
        }


def gradient_dispersion(g, radius_mm, axial_extent_mm):
    """Spin-frequency spreads over a rotating crystal of the given size.

    The linear axial term acts across the full extent, the quadratic one from
    the centre to either face (half extent squared); their sum is reported as
    an upper bound. Rotation averages x, y, xy and x2-y2 to zero, so those
    are listed in ``averaged`` at their pre-averaging size (coefficient times
    radius or radius squared). x2+y2 survives: coefficient * radius**2.
    """
    if not (radius_mm > 0 and axial_extent_mm > 0):
        raise ValidationError("crystal radius and axial extent must be > 0")
    s = g.sensitivity
    ax_lin = g.get("z") * axial_extent_mm * s
    ax_quad = g.get("z2") * (axial_extent_mm / 2) ** 2 * s
    radial = g.get("x2+y2") * radius_mm**2 * s
    averaged = {
        "x": g.get("x") * radius_mm * s,
        "y": g.get("y") * radius_mm * s,
        "xy": g.get("xy") * radius_mm**2 * s,
        "x2-y2": g.get("x2-y2") * radius_mm**2 * s,
    }
    return Dispersion(ax_lin, ax_quad, ax_lin + ax_quad, radial, averaged)


def displacement_shift(g, displacement_m, term=None):
    """Frequency change [Hz] from moving ``displacement_m`` along a linear gradient.

    Uses the largest linear term unless ``term`` is given. Returns
    ``(shift_hz, term)``.
    """
    if term is None:
        term = max(_LINEAR, key=g.get)
    if term not in _LINEAR:
        raise ValidationError(f"{term!r} is not a linear gradient term")
    grad_t_per_m = g.get(term) * 1e3
    return grad_t_per_m * abs(displacement_m) * g.sensitivity, term


@dataclass(frozen=True)
class MagnetizedTube:
    """Aluminium-like cylinder centred at z = 0 in an axial field ``B``."""

    length: float
    outer_radius: float
    inner_radius: float
    chi: float
    B: float
    dz: float = 0.0

    def __post_init__(self):
        if not self.length > 0:
            raise ValidationError("tube length must be > 0")
        if not 0 < self.inner_radius < self.outer_radius:
            raise ValidationError("need 0 < inner radius < outer radius")

    @classmethod
    def aluminium_support(cls):
        return cls(0.05, 0.0625, 0.0375, 2.22e-5, 4.5, 3e-6)


def _sheet(u, a):
    return u / np.sqrt(u * u + a * a)


def _dsheet(u, a):
    return a * a / (u * u + a * a) ** 1.5


@dataclass(frozen=True)
class TubeField:
    Bz: np.ndarray
    dBz_dz: np.ndarray
    fractional_shift: np.ndarray


def tube_axial_field(t, z):
    """On-axis field of the tube's magnetization and its gradient.

    Uniform ``M = chi B / mu0`` along z is equivalent to surface currents
    ``K = M`` on the outer wall and ``-M`` on the inner wall; each sheet is a
    finite solenoid with on-axis field
    ``(mu0 K / 2) [(z - z1)/sqrt((z - z1)^2 + a^2) - (z - z2)/sqrt(...)]``.
    ``fractional_shift`` is ``dBz/dz * dz / B``.
    """
    z = np.asarray(z, dtype=float)
    half = t.length / 2
    amp = t.chi * t.B / 2
    bz = np.zeros_like(z)
    grad = np.zeros_like(z)
    for a, sign in ((t.outer_radius, 1.0), (t.inner_radius, -1.0)):
        bz = bz + sign * amp * (_sheet(z + half, a) - _sheet(z - half, a))
        grad = grad + sign * amp * (_dsheet(z + half, a) - _dsheet(z - half, a))
    return TubeField(bz, grad, grad * t.dz / t.B)


@dataclass(frozen=True)
class PeakGradient:
    z: float
    dBz_dz: float
    fractional_shift: float
    shift_hz: float | None = None
    caveat: str = "on-axis estimate; ion-site fluctuations expected 20-30% smaller"


def peak_gradient(t, carrier_hz=None, span=None, n=20001):
    """Largest on-axis ``|dBz/dz|`` and where it occurs (z >= 0 side).

    Scans ``[0, span]`` (default four tube lengths) and refines with a
    parabola through the best sample and its neighbours.
    """
    span = 4 * t.length if span is None else span
    z = np.linspace(0.0, span, n)
    g = np.abs(tube_axial_field(t, z).dBz_dz)
    i = int(np.argmax(g))
    zi = z[i]
    if 0 < i < n - 1:
        y0, y1, y2 = g[i - 1], g[i], g[i + 1]
        den = y0 - 2 * y1 + y2
        if den != 0:
            zi = z[i] + 0.5 * (y0 - y2) / den * (z[1] - z[0])
    f = tube_axial_field(t, np.array([zi]))
    grad = float(f.dBz_dz[0])
    frac = abs(grad) * t.dz / t.B
    return PeakGradient(float(zi), grad, frac, frac * carrier_hz if carrier_hz else None)


def fractional_shift(gradient, displacement, B):
    """``(dB/dz) dz / B``."""
    return gradient * displacement / B


def temperature_sensitivity(t, dchi_dT, z=0.0):
    """``(1/B) dBz/dT`` at ``z`` for a susceptibility drift ``dchi_dT`` [1/K].

    The tube field is linear in chi, so this is ``dchi_dT`` times the
    geometric factor ``Bz / (chi B)``.
    """
    return dchi_dT * _geometry_factor(t, z)


def dchi_dT_for(t, target, z=0.0):
    """Susceptibility drift that produces a fractional ``target`` dB/dT at ``z``."""
    gf = _geometry_factor(t, z)
    if gf == 0:
        raise ValidationError("tube produces no field at this point")
    return target / gf


def _geometry_factor(t, z):
    unit = MagnetizedTube(t.length, t.outer_radius, t.inner_radius, 1.0, 1.0)
    return float(tube_axial_field(unit, np.array([z])).Bz[0])
