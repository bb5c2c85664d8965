"""Coherence decay from a frequency-noise spectrum, T2 and eta calibration.

The decay exponent of a sequence with total time T is

    chi(T) = 1/(2 pi) * int_0^inf S_beta(w)**2 F(w, T) / w**2 dw

and the averaged spin projection is ``exp(-chi)``. ``delta_rms**2`` is
``(1/pi) int S_beta**2 dw`` so that ``chi ~ delta_rms**2 tau**2 / 2`` for a
short Ramsey interval.
"""

import csv
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from ._errors import NumericalError, ValidationError
from .quadrature import integrate_panels, oscillation_partition
from .sequences import filter_function, max_tone_phase
from .spectra import _require_kind, field_to_frequency, voltage_to_field


class BoundaryWarning(UserWarning):
    """Fitted parameter sits at the edge of its search interval."""


@dataclass(frozen=True)
class ChiResult:
    """Decay exponent of the stochastic part and per-tone deterministic phases.

    ``tone_phases`` holds, for each coherent tone in the spectrum, the phase
    it imprints when its drive phase is chosen to maximize it.
    """

    chi: float
    quadrature_error: float
    tone_phases: tuple = ()

    @property
    def coherence(self):
        return float(np.exp(-self.chi))


@dataclass(frozen=True, eq=False)
class CoherenceCurve:
    """Points ``(T, <sigma_y>, err)`` with strictly increasing ``T``."""

    times: np.ndarray
    sigma_y: np.ndarray
    err: np.ndarray | None = None

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float).ravel()
        s = np.asarray(self.sigma_y, dtype=float).ravel()
        e = np.zeros_like(t) if self.err is None else np.asarray(self.err, dtype=float).ravel()
        if not (t.size == s.size == e.size):
            raise ValidationError("curve columns must have equal length")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ValidationError("curve times must be strictly increasing")
        if np.any(t < 0) or not np.all(np.isfinite(t)):
            raise ValidationError("curve times must be finite and >= 0")
        if np.any(np.abs(s) > 1) or not np.all(np.isfinite(s)):
            raise ValidationError("<sigma_y> must lie in [-1, 1]")
        if np.any(e < 0) or not np.all(np.isfinite(e)):
            raise ValidationError("uncertainties must be finite and >= 0")
        for name, a in (("times", t), ("sigma_y", s), ("err", e)):
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    def __len__(self):
        return self.times.size

    @classmethod
    def from_csv(cls, path):
        rows = []
        with open(path, newline="") as fh:
            for lineno, line in enumerate(fh, start=1):
                stripped = line.strip()
                if not stripped or stripped.startswith("#"):
                    continue
                cells = next(csv.reader([stripped]))
                if len(cells) not in (2, 3):
                    raise ValidationError(f"{path}:{lineno}: expected 2 or 3 columns")
                try:
                    rows.append([float(c) for c in cells] + ([0.0] if len(cells) == 2 else []))
                except ValueError:
                    raise ValidationError(f"{path}:{lineno}: non-numeric value in {stripped!r}") from None
        if not rows:
            raise ValidationError(f"{path}: no data rows")
        t, s, e = np.array(rows).T
        return cls(t, s, e)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write("# T[s],sigma_y,err\n")
            for t, s, e in zip(self.times, self.sigma_y, self.err):
                fh.write(f"{t:.9g},{s:.9g},{e:.9g}\n")


def _check_frequency(sbeta):
    _require_kind(sbeta, "frequency")


def chi(sbeta, seq, rtol=1e-10):
    """Decay exponent of ``seq`` under the stochastic part of ``sbeta``.

    Adaptive Gauss-Kronrod panels follow the tabulated grid, a log partition
    and the filter-function lobes (panel width at most pi / (2 T)).
    Power laws on an unbounded support are integrated to a cutoff and the
    remaining tail is added using the lobe-averaged filter value ``2 m``.
    """
    _check_frequency(sbeta)
    tones = tuple(max_tone_phase(seq, w, a)[0] for w, a in sbeta.tones)
    support = sbeta.support()
    if support is None or sbeta.without_tones().is_zero():
        return ChiResult(0.0, 0.0, tones)
    lo, hi = support
    T = seq.total_time
    tail, tail_err = 0.0, 0.0
    if np.isinf(hi):
        law = sbeta.power_law
        q = 2 * law.exponent - 1
        if q >= 0:
            raise ValidationError("chi diverges for a power law with exponent >= 1/2 on an unbounded support")
        hi = max(lo * 10, 2e3 * np.pi / T)
        tail = seq.m * law.coef**2 * hi**q / (-q) / np.pi
        tail_err = tail / (hi * T)

    def integrand(w):
        return sbeta(w) ** 2 * filter_function(seq, w) / w**2 / (2 * np.pi)

    edges = oscillation_partition(lo, hi, np.pi / (2 * T), sbeta.breakpoints())
    try:
        val, err = integrate_panels(integrand, edges, rtol=rtol)
    except NumericalError as exc:
        v, e = exc.partial
        raise NumericalError(str(exc), partial=ChiResult(v + tail, e + tail_err, tones)) from None
    return ChiResult(max(val + tail, 0.0), err + tail_err, tones)


def predict_curve(sbeta, template, times, n_jobs=None):
    """Predicted ``<sigma_y>(T) = exp(-chi(T))`` for each total time in ``times``.

    ``template`` fixes ``m`` and the pi-pulse length; ``tau = T / m``.
    Points are independent, so ``n_jobs > 1`` evaluates them on a thread pool
    with results identical to the sequential loop.
    """
    times = np.asarray(times, dtype=float).ravel()
    if times.size > 1 and np.any(np.diff(times) <= 0):
        raise ValidationError("T grid must be strictly increasing")
    seqs = [template.with_total_time(t) for t in times]

    def one(seq):
        return chi(sbeta, seq)

    if n_jobs and n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(one, seqs))
    else:
        results = [one(s) for s in seqs]
    chis = np.array([r.chi for r in results])
    qerr = np.array([r.quadrature_error for r in results])
    coh = np.exp(-chis)
    return CoherenceCurve(times, coh, coh * qerr)


@dataclass(frozen=True)
class T2Result:
    t2: float | None
    reached: bool
    last_time: float
    last_value: float


def extract_t2(curve, level=np.exp(-1)):
    """First time the curve falls to ``1/e``.

    Interpolates ``log(sigma_y)`` linearly in T between the bracketing
    samples (linear in sigma_y if the lower sample is not positive).
    """
    t, s = curve.times, curve.sigma_y
    if t.size == 0:
        raise ValidationError("empty coherence curve")
    below = np.nonzero(s <= level)[0]
    if below.size == 0:
        return T2Result(None, False, float(t[-1]), float(s[-1]))
    i = below[0]
    if i == 0:
        return T2Result(float(t[0]), True, float(t[-1]), float(s[-1]))
    t0, t1, s0, s1 = t[i - 1], t[i], s[i - 1], s[i]
    if s1 > 0:
        frac = (np.log(s0) - np.log(level)) / (np.log(s0) - np.log(s1))
    else:
        frac = (s0 - level) / (s0 - s1)
    return T2Result(float(t0 + frac * (t1 - t0)), True, float(t[-1]), float(s[-1]))


@dataclass(frozen=True)
class RmsResult:
    delta_rms: float
    delta_rms_hz: float
    fractional: float | None = None


def delta_rms(sbeta, spin=None):
    """RMS spin-frequency deviation ``sqrt((1/pi) int S_beta**2 dw)`` in rad/s.

    Coherent tones are not included. With ``spin`` the fractional value
    ``delta_rms / Omega_0`` is reported as well.
    """
    _check_frequency(sbeta)
    d = float(np.sqrt(sbeta.square_integral() / np.pi))
    frac = d / spin.omega0 if spin is not None else None
    return RmsResult(d, d / (2 * np.pi), frac)


@dataclass(frozen=True)
class EtaFit:
    eta: float
    eta_err: float
    residuals: np.ndarray
    chi2: float
    at_boundary: bool
    weighted: bool


def unit_eta_chi(sv, spin, template, times):
    """chi(T) for eta = 1 m^2; chi at any eta is this divided by eta**2."""
    sbeta = field_to_frequency(voltage_to_field(sv, 1.0), spin)
    return np.array([chi(sbeta, template.with_total_time(t)).chi for t in times])


def fit_eta_from_curve(sv, spin, template, measured, bounds=(0.1, 1000.0), weighted=True, chi_unit=None):
    """Fit a frequency-independent eta [m^2] to a measured coherence curve.

    Minimizes ``sum(((exp(-chi_i(eta)) - y_i) / err_i)**2)`` over
    ``log(eta)`` within ``bounds``; ``weighted=False`` drops the ``err_i``.
    The uncertainty comes from the loss curvature; unweighted fits scale it
    by the residual variance. ``chi_unit`` can carry precomputed
    :func:`unit_eta_chi` values.
    """
    _require_kind(sv, "voltage")
    if len(measured) == 0:
        raise ValidationError("measured curve is empty")
    y = measured.sigma_y
    if np.allclose(y, 1.0, rtol=0, atol=1e-12):
        raise ValidationError("eta is unidentifiable from a curve with no decay")
    if weighted:
        if np.any(measured.err <= 0):
            raise ValidationError("weighted fit needs strictly positive uncertainties")
        w = 1.0 / measured.err
    else:
        w = np.ones_like(y)
    c1 = unit_eta_chi(sv, spin, template, measured.times) if chi_unit is None else np.asarray(chi_unit)
    if not np.any(c1 > 0):
        raise ValidationError("spectrum does not dephase any measured point; eta is unidentifiable")

    def loss(x):
        return float(np.sum((w * (np.exp(-c1 * np.exp(-2 * x)) - y)) ** 2))

    lo, hi = np.log(bounds[0]), np.log(bounds[1])
    grid = np.linspace(lo, hi, 241)
    j = int(np.argmin([loss(x) for x in grid]))
    step = grid[1] - grid[0]
    a, b = max(lo, grid[j] - step), min(hi, grid[j] + step)
    res = minimize_scalar(loss, bounds=(a, b), method="bounded", options={"xatol": 1e-11})
    x = float(res.x)
    at_boundary = bool(min(x - lo, hi - x) < 1e-3)
    if at_boundary:
        warnings.warn(f"fitted eta={np.exp(x):.4g} m^2 is at the search bound {bounds}", BoundaryWarning)
    h = 1e-4
    curv = (loss(x + h) - 2 * loss(x) + loss(x - h)) / h**2
    resid = np.exp(-c1 * np.exp(-2 * x)) - y
    chi2 = loss(x)
    if curv > 0:
        var = 2.0 / curv
        if not weighted:
            var *= chi2 / max(len(y) - 1, 1)
        sigma_x = np.sqrt(var)
    else:
        sigma_x = np.inf
    eta = float(np.exp(x))
    return EtaFit(eta, eta * sigma_x, resid, chi2, at_boundary, weighted)


def eta_from_phase_slope(v0, omega, dphi_dm, spin):
    """Coupling from a phase-vs-segment-count slope: ``2 gamma V0 / (omega**2 dphi/dm)``."""
    if not (v0 > 0 and omega > 0):
        raise ValidationError("V0 and omega must be > 0")
    if dphi_dm == 0:
        raise ZeroDivisionError("phase slope dphi/dm is zero")
    return 2 * abs(spin.gamma) * v0 / (omega**2 * abs(dphi_dm))


def phase_slope(m, phi):
    """Least-squares slope of measured phase against segment count."""
    m = np.asarray(m, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if m.size < 2 or np.ptp(m) == 0:
        raise ValidationError("need at least two distinct segment counts")
    return float(np.polyfit(m, phi, 1)[0])

