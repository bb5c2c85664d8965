"""Command-line front end.

Every run prints a JSON summary (``schema: 1``) with a manifest of the
resolved parameters, input digests, seed and version. ``--pretty`` prints
a table instead. ``--out DIR`` writes CSV artifacts and ``manifest.json``.

Exit codes: 0 ok, 2 usage, 3 invalid input, 4 numerical non-convergence.
"""

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from ._errors import KindMismatchError, NumericalError, ValidationError
from .coherence import (
    CoherenceCurve,
    delta_rms,
    eta_from_phase_slope,
    extract_t2,
    fit_eta_from_curve,
    phase_slope,
    predict_curve,
)
from .constants import AMU, CARRIER_HZ, E_CHARGE, PI_PULSE_DURATION
from .environment import (
    GradientTable,
    MagnetizedTube,
    TrapConfig,
    acoustic_fundamental,
    displacement_shift,
    gradient_dispersion,
    peak_gradient,
    temperature_sensitivity,
    trap_frequencies,
    tube_axial_field,
)
from .modulation import compare_esr_nmr
from .montecarlo import estimate_coherence
from .sequences import PulseSequence
from .spectra import CouplingEta, SpinSpecies, be9_electron, load_psd, to_frequency

SEED_ENV = "MAGNOISE_SEED"
EXIT_USAGE, EXIT_INVALID, EXIT_NUMERICAL = 2, 3, 4

# parameters that change how a run executes but not what it produces
_EXECUTION_ONLY = {"out", "pretty", "workers", "jobs", "command", "func"}


def _fmt(x):
    return float(f"{x:.9g}")


def _species(name, b0):
    if name == "electron":
        # the trapped-ion carrier includes the hyperfine offset
        return be9_electron(b0)
    return SpinSpecies.from_name(name, b0)


def _eta(args):
    if getattr(args, "eta_table", None):
        rows = np.loadtxt(args.eta_table, delimiter=",", comments="#", ndmin=2)
        omega = rows[:, 0] * (2 * np.pi if args.freq_unit == "Hz" else 1.0)
        return CouplingEta(omega=omega, eta=rows[:, 1])
    if args.eta is None:
        return None
    return CouplingEta(value=args.eta)


def _frequency_psd(args):
    sd = load_psd(args.psd, args.kind, args.freq_unit)
    spin = _species(args.species, args.b0)
    return to_frequency(sd, spin, _eta(args)), spin


def _sequence(args, tau_required=True):
    cfg = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            cfg = json.load(fh)
        unknown = set(cfg) - {"m", "tau", "pi_duration", "theta"}
        if unknown:
            raise ValidationError(f"unknown sequence config keys: {sorted(unknown)}")

    def pick(name, default):
        val = getattr(args, name)
        if val is None:
            val = cfg.get(name, default)
        setattr(args, name, val)
        return val

    m = pick("m", 2)
    tau = pick("tau", None)
    pi = pick("pi_duration", PI_PULSE_DURATION)
    theta = pick("theta", 0.0)
    if tau is None:
        if tau_required:
            raise ValidationError("a segment length is required: pass --tau or a config with 'tau'")
        tau = 1.0
    return PulseSequence(m, tau, pi, theta)


def _digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def _manifest(args, inputs, seed=None):
    params = {
        k: v for k, v in sorted(vars(args).items())
        if k not in _EXECUTION_ONLY and k not in inputs
    }
    return {
        "subcommand": args.command,
        "parameters": params,
        "inputs": {k: {"path": str(v), "sha256": _digest(v)} for k, v in sorted(inputs.items())},
        "seed": seed,
        "version": __version__,
    }


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        fh.write("# " + ",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(x if isinstance(x, str) else f"{x:.9g}" for x in row) + "\n")


def _emit(args, result, manifest, rounded=None, artifacts=None, pretty_lines=None):
    summary = {"schema": 1, "command": args.command, "result": result, "manifest": manifest}
    if rounded:
        summary["rounded"] = rounded
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for name, (header, rows) in (artifacts or {}).items():
            _write_csv(out / name, header, rows)
        with open(out / "manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
    if args.pretty and pretty_lines:
        print("\n".join(pretty_lines))
    elif args.pretty:
        width = max(len(k) for k in result) if result else 0
        for k, v in result.items():
            print(f"{k:<{width}}  {v}")
        for k, v in (rounded or {}).items():
            print(f"{k:<{width}}  {v}")
    else:
        json.dump(summary, sys.stdout, sort_keys=True)
        sys.stdout.write("\n")


# subcommands


def cmd_predict(args):
    sbeta, _ = _frequency_psd(args)
    template = _sequence(args, tau_required=False)
    times = np.linspace(args.t_min, args.t_max, args.n_points)
    curve = predict_curve(sbeta, template, times, n_jobs=args.jobs)
    t2 = extract_t2(curve)
    result = {
        "n_points": int(len(curve)),
        "t2_s": _fmt(t2.t2) if t2.reached else None,
        "t2_reached": t2.reached,
        "final_coherence": _fmt(curve.sigma_y[-1]),
    }
    rows = list(zip(curve.times, curve.sigma_y, curve.err))
    rounded = {"t2_ms": f"{t2.t2 * 1e3:.1f}"} if t2.reached else None
    _emit(args, result, _manifest(args, {"psd": args.psd}), rounded,
          {"curve.csv": (["T_s", "sigma_y", "err"], rows)})


def cmd_t2(args):
    curve = CoherenceCurve.from_csv(args.curve)
    t2 = extract_t2(curve)
    result = {
        "t2_s": _fmt(t2.t2) if t2.reached else None,
        "reached": t2.reached,
        "last_time_s": _fmt(t2.last_time),
        "last_value": _fmt(t2.last_value),
    }
    _emit(args, result, _manifest(args, {"curve": args.curve}))


def cmd_rms(args):
    sbeta, spin = _frequency_psd(args)
    r = delta_rms(sbeta, spin)
    result = {
        "delta_rms_rad_s": _fmt(r.delta_rms),
        "delta_rms_hz": _fmt(r.delta_rms_hz),
        "fractional": _fmt(r.fractional),
        "fractional_ppb": _fmt(r.fractional * 1e9),
        "carrier_hz": _fmt(spin.omega0 / (2 * np.pi)),
    }
    rounded = {"delta_rms": f"{r.delta_rms_hz:.0f} Hz ({r.fractional * 1e9:.1f} ppb)"}
    _emit(args, result, _manifest(args, {"psd": args.psd}), rounded)


def cmd_fit_eta(args):
    sv = load_psd(args.psd, "voltage", args.freq_unit)
    spin = _species(args.species, args.b0)
    curve = CoherenceCurve.from_csv(args.curve)
    template = _sequence(args, tau_required=False)
    fit = fit_eta_from_curve(sv, spin, template, curve, bounds=(args.eta_min, args.eta_max),
                             weighted=not args.unweighted)
    result = {
        "eta_m2": _fmt(fit.eta),
        "eta_err_m2": _fmt(fit.eta_err),
        "chi2": _fmt(fit.chi2),
        "at_boundary": fit.at_boundary,
        "weighted": fit.weighted,
    }
    rows = list(zip(curve.times, curve.sigma_y, fit.residuals))
    _emit(args, result, _manifest(args, {"psd": args.psd, "curve": args.curve}),
          {"eta": f"{fit.eta:.0f} m^2"}, {"residuals.csv": (["T_s", "sigma_y", "residual"], rows)})


def cmd_calibrate_eta(args):
    spin = _species(args.species, args.b0)
    inputs = {}
    if args.phase_csv:
        rows = np.loadtxt(args.phase_csv, delimiter=",", comments="#", ndmin=2)
        slope = phase_slope(rows[:, 0], rows[:, 1])
        inputs["phase_csv"] = args.phase_csv
    elif args.dphi_dm is not None:
        slope = args.dphi_dm
    else:
        raise ValidationError("pass --dphi-dm or --phase-csv")
    omega = 2 * np.pi * args.freq
    eta = eta_from_phase_slope(args.v0, omega, slope, spin)
    result = {"eta_m2": _fmt(eta), "dphi_dm_rad": _fmt(slope), "omega_rad_s": _fmt(omega)}
    _emit(args, result, _manifest(args, inputs), {"eta": f"{eta:.0f} m^2 at {args.freq:g} Hz"})


def cmd_mc(args):
    sbeta, _ = _frequency_psd(args)
    seq = _sequence(args)
    seed = args.seed if args.seed is not None else int(os.environ.get(SEED_ENV, "0"))
    args.seed = seed
    est = estimate_coherence(
        sbeta, seq, n_traj=args.traj, seed=seed, sample_rate=args.sample_rate,
        duration=args.duration, dead_time=args.dead_time, workers=args.workers,
        keep_phases=True,
    )
    result = {
        "coherence": _fmt(est.mean),
        "stderr": _fmt(est.stderr),
        "n_traj": est.n_traj,
        "mean_phase_rad": _fmt(est.mean_phase),
        "mean_sq_phase_rad2": _fmt(est.mean_sq_phase),
    }
    rows = [(str(i), p) for i, p in enumerate(est.phases)]
    _emit(args, result, _manifest(args, {"psd": args.psd}, seed),
          artifacts={"phases.csv": (["trajectory", "phase_rad"], rows)})


def cmd_modulation(args):
    electron = SpinSpecies.electron()
    other = SpinSpecies.from_name(args.species)
    cmp = compare_esr_nmr(args.fractional_amplitude, 2 * np.pi * args.mod_freq,
                          2 * np.pi * args.carrier, electron, other)
    result = {"dephasing_ratio": _fmt(cmp.dephasing_ratio)}
    rows = []
    for row in cmp.rows:
        key = row.label.lower()
        result[f"{key}_beta_m"] = _fmt(row.beta_m)
        result[f"{key}_J0"] = _fmt(row.J0)
        result[f"{key}_J1"] = _fmt(row.J1)
        rows.append((row.label, row.beta_m, row.J0, row.J1))
    lines = [f"{'':<6}{'beta_m':>12}{'J0':>12}{'J1':>12}"]
    lines += [f"{label:<6}{b:>12.3g}{j0:>12.3g}{j1:>12.3g}" for label, b, j0, j1 in rows]
    lines.append(f"dephasing ratio {cmp.dephasing_ratio:.2g}")
    _emit(args, result, _manifest(args, {}),
          artifacts={"table.csv": (["row", "beta_m", "J0", "J1"], rows)}, pretty_lines=lines)


def cmd_trap(args):
    cfg = TrapConfig(args.b0, args.charge * E_CHARGE, args.mass_u * AMU,
                     2 * np.pi * args.omega_z_hz, 2 * np.pi * args.omega_r_hz)
    tf = trap_frequencies(cfg)
    result = {
        "cyclotron_rad_s": _fmt(tf.cyclotron),
        "cyclotron_hz": _fmt(tf.cyclotron / (2 * np.pi)),
        "beta_r": _fmt(tf.beta_r),
        "confining": tf.confining,
    }
    if not tf.confining:
        print("warning: beta_r <= 0, the radial potential does not confine", file=sys.stderr)
    _emit(args, result, _manifest(args, {}), {"cyclotron": f"2pi x {tf.cyclotron / 2 / np.pi / 1e6:.1f} MHz"})


def cmd_acoustics(args):
    f = acoustic_fundamental(args.length, args.diameter, args.speed)
    _emit(args, {"fundamental_hz": _fmt(f)}, _manifest(args, {}), {"fundamental": f"{f:.0f} Hz"})


def cmd_gradients(args):
    inputs = {}
    if args.table:
        g = GradientTable.from_csv(args.table, args.sensitivity)
        inputs["table"] = args.table
    else:
        g = GradientTable(GradientTable.measured_2014().coefficients, args.sensitivity)
    d = gradient_dispersion(g, args.radius_mm, args.axial_extent_mm)
    result = {k: _fmt(v) for k, v in d.as_dict().items()}
    if args.displacement_um:
        shift, term = displacement_shift(g, args.displacement_um * 1e-6)
        result["displacement_shift_hz"] = _fmt(shift)
        result["displacement_term"] = term
    _emit(args, result, _manifest(args, inputs))


def cmd_tube(args):
    t = MagnetizedTube(args.length, args.outer_radius, args.inner_radius, args.chi, args.field, args.dz)
    peak = peak_gradient(t, args.carrier_hz)
    result = {
        "peak_dBz_dz_T_per_m": _fmt(abs(peak.dBz_dz)),
        "peak_z_m": _fmt(peak.z),
        "fractional_shift": _fmt(peak.fractional_shift),
        "shift_hz": _fmt(peak.shift_hz),
        "caveat": peak.caveat,
    }
    if args.dchi_dt is not None:
        result["fractional_dB_dT"] = _fmt(temperature_sensitivity(t, args.dchi_dt, args.z))
    z = np.linspace(-2 * args.length, 2 * args.length, 401)
    f = tube_axial_field(t, z)
    _emit(args, result, _manifest(args, {}),
          artifacts={"profile.csv": (["z_m", "Bz_T", "dBz_dz_T_per_m"], list(zip(z, f.Bz, f.dBz_dz)))})


# parser


def _common(p):
    p.add_argument("--out", metavar="DIR", help="directory for CSV artifacts and manifest.json")
    p.add_argument("--pretty", action="store_true", help="print a human-readable table")


def _psd_flags(p, kind=True):
    p.add_argument("--psd", required=True, metavar="CSV", help="two-column frequency,amplitude file")
    if kind:
        p.add_argument("--kind", choices=("voltage", "field", "frequency"), default="voltage",
                       help="density kind of the file (default: voltage)")
    p.add_argument("--freq-unit", choices=("Hz", "rad/s"), default="Hz",
                   help="unit of the frequency column (default: Hz)")


def _species_flags(p, eta=True):
    p.add_argument("--species", default="electron",
                   help="electron | nuclear | be9 | custom:<gamma rad/s/T> (default: electron)")
    p.add_argument("--b0", type=float, default=4.46, help="static field in T (default: 4.46)")
    if eta:
        p.add_argument("--eta", type=float, help="scalar coil coupling in m^2")
        p.add_argument("--eta-table", metavar="CSV", help="frequency,eta table (frequency in --freq-unit)")


def _sequence_flags(p, tau=True):
    p.add_argument("--m", type=int, help="number of free-evolution segments (default: 2)")
    if tau:
        p.add_argument("--tau", type=float, help="segment duration in s")
    else:
        p.set_defaults(tau=None)
    p.add_argument("--pi-duration", type=float, help="pi-pulse length in s (default: 68e-6)")
    p.add_argument("--theta", type=float, help="analysis pulse phase in rad (default: 0)")
    p.add_argument("--config", metavar="JSON", help="sequence file with keys m, tau, pi_duration, theta")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="magnoise",
        description="Magnet field-noise analysis: spectra, spin coherence, eta calibration.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command", required=True)

    p = sub.add_parser("predict", help="coherence curve exp(-chi(T)) from a spectrum")
    _psd_flags(p)
    _species_flags(p)
    _sequence_flags(p, tau=False)
    p.add_argument("--t-min", type=float, required=True, help="first total evolution time in s")
    p.add_argument("--t-max", type=float, required=True, help="last total evolution time in s")
    p.add_argument("--n-points", type=int, default=50, help="number of times (default: 50)")
    p.add_argument("--jobs", type=int, default=1, help="threads for independent points")
    _common(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("t2", help="1/e time of a measured coherence curve")
    p.add_argument("--curve", required=True, metavar="CSV", help="T,sigma_y[,err] file")
    _common(p)
    p.set_defaults(func=cmd_t2)

    p = sub.add_parser("rms", help="RMS spin-frequency deviation of a spectrum")
    _psd_flags(p)
    _species_flags(p)
    _common(p)
    p.set_defaults(func=cmd_rms)

    p = sub.add_parser("fit-eta", help="fit the coil coupling eta to a coherence curve")
    _psd_flags(p, kind=False)
    _species_flags(p, eta=False)
    _sequence_flags(p, tau=False)
    p.add_argument("--curve", required=True, metavar="CSV", help="T,sigma_y,err file")
    p.add_argument("--eta-min", type=float, default=0.1, help="lower search bound in m^2")
    p.add_argument("--eta-max", type=float, default=1000.0, help="upper search bound in m^2")
    p.add_argument("--unweighted", action="store_true", help="ignore the err column")
    _common(p)
    p.set_defaults(func=cmd_fit_eta)

    p = sub.add_parser("calibrate-eta", help="eta from a coherent-drive phase slope")
    p.add_argument("--v0", type=float, required=True, help="coil EMF amplitude in V")
    p.add_argument("--freq", type=float, required=True, help="drive frequency in Hz")
    p.add_argument("--dphi-dm", type=float, help="phase per segment in rad")
    p.add_argument("--phase-csv", metavar="CSV", help="m,phi rows to fit the slope from")
    _species_flags(p, eta=False)
    _common(p)
    p.set_defaults(func=cmd_calibrate_eta)

    p = sub.add_parser("mc", help="Monte-Carlo coherence by trajectory averaging")
    _psd_flags(p)
    _species_flags(p)
    _sequence_flags(p)
    p.add_argument("--traj", type=int, default=10_000, help="number of trajectories")
    p.add_argument("--seed", type=int, help=f"master seed (default: ${SEED_ENV} or 0)")
    p.add_argument("--sample-rate", type=float, help="samples per second (default: 16x top frequency)")
    p.add_argument("--duration", type=float, help="synthesized record length in s")
    p.add_argument("--dead-time", action="store_true", help="zero the kernel during pi pulses")
    p.add_argument("--workers", type=int, default=1, help="worker threads (output does not depend on it)")
    _common(p)
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("modulation", help="FM sideband table for a single field tone")
    p.add_argument("--fractional-amplitude", type=float, required=True, help="B_m / B0")
    p.add_argument("--mod-freq", type=float, required=True, help="tone frequency in Hz")
    p.add_argument("--carrier", type=float, default=124e9, help="electron carrier in Hz (default: 124e9)")
    p.add_argument("--species", default="nuclear",
                   help="comparison row: electron | nuclear | custom:<gamma> (default: nuclear)")
    _common(p)
    p.set_defaults(func=cmd_modulation)

    p = sub.add_parser("trap", help="Penning trap cyclotron frequency and beta_r")
    p.add_argument("--b0", type=float, default=4.46, help="field in T")
    p.add_argument("--mass-u", type=float, default=9.0122, help="ion mass in u")
    p.add_argument("--charge", type=float, default=1.0, help="ion charge in e")
    p.add_argument("--omega-z-hz", type=float, default=800e3, help="axial frequency in Hz")
    p.add_argument("--omega-r-hz", type=float, default=45e3, help="rotation frequency in Hz")
    _common(p)
    p.set_defaults(func=cmd_trap)

    p = sub.add_parser("acoustics", help="open-bore acoustic fundamental")
    p.add_argument("--length", type=float, default=1.0, help="bore length in m")
    p.add_argument("--diameter", type=float, default=0.127, help="bore diameter in m")
    p.add_argument("--speed", type=float, default=343.0, help="speed of sound in m/s")
    _common(p)
    p.set_defaults(func=cmd_acoustics)

    p = sub.add_parser("gradients", help="spin-frequency spread from field gradients")
    p.add_argument("--table", metavar="CSV", help="term,value rows in 1e-6 T/mm(^2) (default: 2014 table)")
    p.add_argument("--radius-mm", type=float, default=0.25, help="crystal radius in mm")
    p.add_argument("--axial-extent-mm", type=float, default=0.06, help="crystal thickness in mm")
    p.add_argument("--displacement-um", type=float, default=3.0, help="centre-of-mass motion in um")
    p.add_argument("--sensitivity", type=float, default=28e9, help="field sensitivity in Hz/T")
    _common(p)
    p.set_defaults(func=cmd_gradients)

    p = sub.add_parser("tube", help="field and gradient of a magnetized tube on axis")
    p.add_argument("--length", type=float, default=0.05, help="tube length in m")
    p.add_argument("--outer-radius", type=float, default=0.0625, help="outer radius in m")
    p.add_argument("--inner-radius", type=float, default=0.0375, help="inner radius in m")
    p.add_argument("--chi", type=float, default=2.22e-5, help="volume susceptibility")
    p.add_argument("--field", type=float, default=4.5, help="applied field in T")
    p.add_argument("--dz", type=float, default=3e-6, help="axial displacement in m")
    p.add_argument("--carrier-hz", type=float, default=CARRIER_HZ, help="carrier for the Hz shift")
    p.add_argument("--dchi-dt", type=float, help="susceptibility drift per kelvin")
    p.add_argument("--z", type=float, default=0.0, help="evaluation point for --dchi-dt in m")
    _common(p)
    p.set_defaults(func=cmd_tube)
    return parser


def run(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args)
    except (ValidationError, KindMismatchError, ZeroDivisionError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
