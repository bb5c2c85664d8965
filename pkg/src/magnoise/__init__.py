"""Vibration-induced magnetic field noise: spectra, spin coherence and calibration."""

__version__ = "0.1.0"

from ._errors import KindMismatchError, NumericalError, ValidationError
from .coherence import (
    ChiResult,
    CoherenceCurve,
    chi,
    delta_rms,
    eta_from_phase_slope,
    extract_t2,
    fit_eta_from_curve,
    predict_curve,
)
from .estimators import CoherenceModel, FieldFromVoltage, FrequencyFromField
from .montecarlo import estimate_coherence, synthesize
from .sequences import PulseSequence, filter_function, phase_accrual, synchronous_tau
from .spectra import (
    CouplingEta,
    SpectralDensity,
    SpinSpecies,
    field_to_frequency,
    load_psd,
    voltage_to_field,
)
