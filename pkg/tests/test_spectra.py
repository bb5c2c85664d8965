import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import constants as sc
from scipy.integrate import quad

from magnoise import KindMismatchError, ValidationError
from magnoise.spectra import (
    CouplingEta,
    SpectralDensity,
    SpinSpecies,
    field_to_frequency,
    load_psd,
    power_per_hz,
    save_psd,
    to_frequency,
    voltage_to_field,
)

TWO_PI = 2 * np.pi


class TestLoadPsd:
    def test_hz_column_is_converted(self, write_csv):
        sd = load_psd(write_csv("100,1e-6\n200,2e-6\n"), "voltage")
        np.testing.assert_allclose(sd.omega, [TWO_PI * 100, TWO_PI * 200])
        np.testing.assert_allclose(sd.omega, [628.3185, 1256.637], rtol=1e-6)
        np.testing.assert_array_equal(sd.amplitude, [1e-6, 2e-6])
        assert sd.kind == "voltage"
        assert sd.representation == "tabulated"

    def test_rad_per_s_is_identity(self, write_csv):
        sd = load_psd(write_csv("100,1e-6\n200,2e-6\n"), "voltage", "rad/s")
        np.testing.assert_array_equal(sd.omega, [100, 200])

    def test_comments_and_blank_lines(self, write_csv):
        sd = load_psd(write_csv("# header\n\n100,1\n# mid\n200,2\n"), "field")
        assert sd.omega.size == 2

    def test_negative_amplitude(self, write_csv):
        with pytest.raises(ValidationError, match=":2:"):
            load_psd(write_csv("100,1e-6\n200,-1e-6\n"), "voltage")

    def test_malformed_row_reports_line(self, write_csv):
        with pytest.raises(ValidationError, match=":3: non-numeric"):
            load_psd(write_csv("# c\n100,1\n200,abc\n"), "voltage")
        with pytest.raises(ValidationError, match=":1: expected 2 columns"):
            load_psd(write_csv("100,1,3\n"), "voltage")

    def test_non_monotone(self, write_csv):
        with pytest.raises(ValidationError, match="increasing"):
            load_psd(write_csv("200,1\n100,1\n"), "voltage")

    def test_empty(self, write_csv):
        with pytest.raises(ValidationError, match="no data"):
            load_psd(write_csv("# nothing\n"), "voltage")

    def test_bad_unit(self, write_csv):
        with pytest.raises(ValidationError):
            load_psd(write_csv("1,1\n"), "voltage", "kHz")

    def test_save_roundtrip(self, tmp_path):
        sd = SpectralDensity.tabulated("field", [1.0, 2.5, 7.0], [1e-12, 3e-12, 0.0])
        save_psd(tmp_path / "out.csv", sd, "rad/s")
        back = load_psd(tmp_path / "out.csv", "field", "rad/s")
        np.testing.assert_allclose(back.omega, sd.omega, rtol=1e-9)
        np.testing.assert_allclose(back.amplitude, sd.amplitude, rtol=1e-9)


class TestVoltageToField:
    def test_hand_arithmetic(self):
        sv = SpectralDensity.tabulated("voltage", [TWO_PI * 100], [1e-6])
        sb = voltage_to_field(sv, 10.0)
        assert sb.kind == "field"
        assert sb.amplitude[0] == pytest.approx(1e-6 / (10 * 628.3185307), rel=1e-9)
        assert sb.amplitude[0] == pytest.approx(1.5915e-10, rel=1e-4)

    def test_zero(self):
        sv = SpectralDensity.tabulated("voltage", [1.0, 2.0], [0.0, 0.0])
        assert np.all(voltage_to_field(sv, 3.0).amplitude == 0)

    def test_tabulated_eta_divides_pointwise(self):
        w = np.array([100.0, 400.0])
        sv = SpectralDensity.tabulated("voltage", w, [1.0, 1.0])
        ref = voltage_to_field(sv, 1.0).amplitude
        got = voltage_to_field(sv, CouplingEta(omega=w, eta=[2.0, 4.0])).amplitude
        np.testing.assert_allclose(got, ref / [2.0, 4.0], rtol=1e-14)

    def test_tabulated_eta_is_log_linear(self):
        eta = CouplingEta(omega=[10.0, 1000.0], eta=[2.0, 4.0])
        assert eta(100.0) == pytest.approx(3.0)
        assert eta(1.0) == 2.0 and eta(1e5) == 4.0

    def test_kind_mismatch(self):
        sb = SpectralDensity.tabulated("field", [1.0], [1.0])
        with pytest.raises(KindMismatchError):
            voltage_to_field(sb, 1.0)

    @pytest.mark.parametrize("bad", [0.0, -1.0, np.nan])
    def test_bad_eta(self, bad):
        sv = SpectralDensity.tabulated("voltage", [1.0], [1.0])
        with pytest.raises(ValidationError):
            voltage_to_field(sv, bad)

    def test_power_law_stays_analytic(self):
        sv = SpectralDensity.from_power_law("voltage", 2.0, -1.0, 10.0, 1e3)
        sb = voltage_to_field(sv, 4.0)
        assert sb.representation == "analytic"
        assert sb.power_law.exponent == -2.0
        w = np.array([20.0, 300.0])
        np.testing.assert_allclose(sb(w), 2.0 / w / (4.0 * w), rtol=1e-14)

    def test_tone_becomes_peak_field(self):
        # a coherent EMF V0 at w corresponds to B_m = V0 / (w eta)
        sv = SpectralDensity.tone_set("voltage", [TWO_PI * 200], [1e-3])
        sb = voltage_to_field(sv, 37.0)
        assert sb.tones[0][1] == pytest.approx(1e-3 / (TWO_PI * 200 * 37.0))


class TestFieldToFrequency:
    def test_electron_gamma(self, electron):
        # gamma / 2pi = g mu_B / h with g = 2.002
        gamma_hz = 2.002 * sc.physical_constants["Bohr magneton"][0] / sc.h
        assert electron.gamma / TWO_PI == pytest.approx(gamma_hz, rel=1e-12)
        assert gamma_hz == pytest.approx(2.802e10, rel=1e-3)
        sb = SpectralDensity.tabulated("field", [10.0], [1e-12])
        sbeta = field_to_frequency(sb, electron)
        assert sbeta.kind == "frequency"
        assert sbeta.amplitude[0] == pytest.approx(0.176, rel=2e-3)

    def test_nuclear_is_1836_times_smaller(self, electron):
        sb = SpectralDensity.tabulated("field", [10.0], [1e-12])
        e = field_to_frequency(sb, electron).amplitude[0]
        n = field_to_frequency(sb, SpinSpecies.nuclear()).amplitude[0]
        assert e / n == pytest.approx(1836, rel=1e-3)

    def test_zero(self, electron):
        sb = SpectralDensity.tabulated("field", [1.0, 2.0], [0.0, 0.0])
        assert np.all(field_to_frequency(sb, electron).amplitude == 0)

    def test_kind_mismatch(self, electron):
        with pytest.raises(KindMismatchError):
            field_to_frequency(SpectralDensity.tabulated("voltage", [1.0], [1.0]), electron)

    def test_to_frequency_needs_eta_and_spin(self, electron):
        sv = SpectralDensity.tabulated("voltage", [1.0], [1.0])
        with pytest.raises(ValidationError):
            to_frequency(sv, electron)
        with pytest.raises(ValidationError):
            to_frequency(SpectralDensity.tabulated("field", [1.0], [1.0]))


amps = st.lists(st.one_of(st.just(0.0), st.floats(1e-200, 1e3)), min_size=2, max_size=12)


@given(amps, st.floats(1e-3, 1e3))
def test_conversions_keep_grid_and_scale_linearly(a, alpha):
    w = np.geomspace(1.0, 1e4, len(a))
    sv = SpectralDensity.tabulated("voltage", w, a)
    sb = voltage_to_field(sv, 15.0)
    assert np.array_equal(sb.omega, sv.omega)
    np.testing.assert_allclose(voltage_to_field(sv.scaled(alpha), 15.0).amplitude,
                               alpha * sb.amplitude, rtol=1e-14)
    spin = SpinSpecies.electron()
    sbeta = field_to_frequency(sb, spin)
    assert np.array_equal(sbeta.omega, sv.omega)
    np.testing.assert_allclose(sbeta.amplitude / abs(spin.gamma), sb.amplitude, rtol=1e-15)


class TestDensityModel:
    def test_loglog_interpolation_and_zero_outside(self):
        sd = SpectralDensity.tabulated("frequency", [1.0, 100.0], [1.0, 0.01])
        # slope -1 in log-log
        assert sd(10.0) == pytest.approx(0.1, rel=1e-12)
        assert sd(0.5) == 0 and sd(200.0) == 0

    def test_zero_endpoint_uses_linear_segment(self):
        sd = SpectralDensity.tabulated("frequency", [1.0, 3.0], [0.0, 2.0])
        assert sd(2.0) == pytest.approx(1.0)

    @pytest.mark.parametrize("amps", [[1.0, 3.0, 0.5, 0.5, 2.0], [0.0, 1.0, 1.0, 0.0, 0.3]])
    def test_square_integral_matches_quadrature(self, amps):
        w = np.array([1.0, 2.0, 5.0, 11.0, 40.0])
        sd = SpectralDensity.tabulated("frequency", w, amps)
        ref = sum(quad(lambda x: sd(x) ** 2, a, b, epsabs=0, epsrel=1e-13)[0] for a, b in zip(w[:-1], w[1:]))
        assert sd.square_integral() == pytest.approx(ref, rel=1e-11)
        cut = np.array([0.5, 3.3, 17.0, 100.0])
        cum_ref = [quad(lambda x: sd(x) ** 2, 1.0, max(c, 1.0), points=w[(w > 1) & (w < c)] if c > 1 else None,
                        epsrel=1e-13, limit=200)[0] for c in cut]
        np.testing.assert_allclose(sd.cumulative_square_integral(cut), cum_ref, rtol=1e-10, atol=1e-14)

    def test_power_law_square_integral(self):
        sd = SpectralDensity.from_power_law("frequency", 3.0, -1.0, 2.0, 50.0)
        assert sd.square_integral() == pytest.approx(9 * (1 / 2 - 1 / 50), rel=1e-14)
        inf = SpectralDensity.from_power_law("frequency", 3.0, -1.0, 2.0, np.inf)
        assert inf.square_integral() == pytest.approx(9 / 2)
        with pytest.raises(ValidationError, match="divergent"):
            SpectralDensity.from_power_law("frequency", 1.0, -0.5, 2.0, np.inf).square_integral()

    def test_power_per_hz_convention(self, white):
        # (1/pi) int S^2 dw == int P(f) df
        f = np.linspace(1, 400, 400_001)
        lhs = white.square_integral() / np.pi
        assert np.trapezoid(power_per_hz(white, f), f) == pytest.approx(lhs, rel=1e-4)

    def test_invariants_enforced(self):
        with pytest.raises(ValidationError):
            SpectralDensity.tabulated("frequency", [0.0, 1.0], [1, 1])
        with pytest.raises(ValidationError):
            SpectralDensity.tabulated("frequency", [1.0, 2.0], [1, np.inf])
        with pytest.raises(ValidationError):
            SpectralDensity.tabulated("magic", [1.0], [1])

    def test_immutable(self, white):
        with pytest.raises(ValueError):
            white.amplitude[0] = 3.0

    def test_representations(self):
        assert SpectralDensity.tone_set("field", [1.0], [1e-9]).representation == "tone-set"
        mixed = SpectralDensity.tabulated("field", [1.0, 2.0], [1, 1], tones=[(5.0, 1e-9)])
        assert mixed.representation == "mixed"


class TestSpinSpecies:
    def test_carrier(self):
        s = SpinSpecies(1e10, 2.0, carrier_offset=-1e9)
        assert s.omega0 == pytest.approx(1.9e10)

    @pytest.mark.parametrize("kw", [dict(gamma=0.0), dict(gamma=1.0, B0=0.0), dict(gamma=1.0, B0=1.0, carrier_offset=-5.0)])
    def test_invalid(self, kw):
        with pytest.raises(ValidationError):
            SpinSpecies(**kw)

    def test_from_name(self):
        assert SpinSpecies.from_name("custom:123.5").gamma == 123.5
        with pytest.raises(ValidationError):
            SpinSpecies.from_name("proton")
