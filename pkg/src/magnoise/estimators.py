"""scikit-learn style wrappers.

Spectra travel as ``(n, 2)`` arrays of ``[omega, amplitude]`` rows so the
unit conversions chain in a :class:`sklearn.pipeline.Pipeline`;
:class:`CoherenceModel` fits eta to ``(T, <sigma_y>)`` data and predicts
coherence at new total times.
"""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .coherence import fit_eta_from_curve, unit_eta_chi, CoherenceCurve
from .sequences import PulseSequence
from .spectra import (
    CouplingEta,
    SpectralDensity,
    SpinSpecies,
    field_to_frequency,
    voltage_to_field,
)


def _check_spectrum_array(X):
    X = check_array(X, ensure_min_samples=1)
    if X.shape[1] != 2:
        raise ValueError(f"expected [omega, amplitude] columns, got {X.shape[1]} columns")
    return X


class _SpectrumTransformer(TransformerMixin, BaseEstimator):
    _kind_in = None

    def fit(self, X, y=None):
        X = _check_spectrum_array(X)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        X = _check_spectrum_array(X)
        sd = SpectralDensity.tabulated(self._kind_in, X[:, 0], X[:, 1])
        out = self._convert(sd)
        return np.column_stack([out.omega, out.amplitude])


class FieldFromVoltage(_SpectrumTransformer):
    """Coil EMF density to field density with coupling ``eta`` [m^2].

    ``eta`` may be a scalar or a :class:`~magnoise.spectra.CouplingEta`.
    """

    _kind_in = "voltage"

    def __init__(self, eta=15.0):
        self.eta = eta

    def _convert(self, sd):
        return voltage_to_field(sd, CouplingEta.coerce(self.eta))


class FrequencyFromField(_SpectrumTransformer):
    """Field density to spin-frequency density for ``spin`` (electron by default)."""

    _kind_in = "field"

    def __init__(self, spin=None):
        self.spin = spin

    def _convert(self, sd):
        return field_to_frequency(sd, self.spin or SpinSpecies.electron())


class CoherenceModel(RegressorMixin, BaseEstimator):
    """Spin-echo coherence predicted from a coil voltage spectrum.

    ``fit(T, sigma_y, sigma=err)`` estimates the coupling eta by weighted
    least squares on ``<sigma_y>``; if ``eta`` is set, fitting keeps it
    fixed. ``predict(T)`` returns ``exp(-chi(T))``.

    Parameters
    ----------
    psd : SpectralDensity
        Voltage-kind density.
    spin : SpinSpecies, optional
        Electron spin by default.
    m : int
        Segments per sequence (2 for a single echo).
    pi_duration : float
        pi-pulse length carried by each sequence, seconds.
    eta : float, optional
        Fixed coupling; ``None`` means fit it.
    eta_bounds : tuple
        Search interval for the fit, m^2.
    weighted : bool
        Weight residuals by ``1/sigma``.
    """

    def __init__(self, psd=None, spin=None, m=2, pi_duration=0.0, eta=None,
                 eta_bounds=(0.1, 1000.0), weighted=True):
        self.psd = psd
        self.spin = spin
        self.m = m
        self.pi_duration = pi_duration
        self.eta = eta
        self.eta_bounds = eta_bounds
        self.weighted = weighted

    def _template(self, T):
        return PulseSequence(self.m, float(np.max(T)) / self.m, self.pi_duration)

    def _spin(self):
        return self.spin or SpinSpecies.electron()

    def fit(self, X, y, sigma=None):
        X, y = check_X_y(X, y, ensure_2d=False)
        T = np.asarray(X, dtype=float).ravel()
        order = np.argsort(T)
        err = None if sigma is None else np.asarray(sigma, dtype=float).ravel()[order]
        curve = CoherenceCurve(T[order], y[order], err)
        if self.eta is not None:
            self.eta_ = float(self.eta)
            self.eta_err_ = 0.0
            self.fit_result_ = None
        else:
            res = fit_eta_from_curve(
                self.psd, self._spin(), self._template(T), curve,
                bounds=self.eta_bounds, weighted=self.weighted and err is not None,
            )
            self.eta_, self.eta_err_, self.fit_result_ = res.eta, res.eta_err, res
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "eta_")
        T = check_array(np.asarray(X, dtype=float).reshape(-1, 1)).ravel()
        c1 = unit_eta_chi(self.psd, self._spin(), self._template(T), T)
        return np.exp(-c1 / self.eta_**2)
