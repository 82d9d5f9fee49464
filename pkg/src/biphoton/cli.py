"""Command-line front end: ``biphoton <subcommand> [options]``.

Scalars go to stdout as JSON with sorted keys; tables go to CSV (``--out``,
``-`` for stdout). Exit status: 0 success, 1 usage or configuration error,
2 numerical or data error. Every option's help ends with its unit in
brackets ([-] for dimensionless).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

from biphoton import __version__
from biphoton.errors import BiphotonError
from biphoton.experiment.config import (
    CrystalConfig,
    PhysicalFilter,
    dimensionless_filter_width,
    m_of_temperature,
    resolve_filter,
)
from biphoton.model import FilterSpec, HwpAngles, OperatingPoint
from biphoton.numerics.quadrature import QuadratureSettings

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    """Bad invocation or configuration (exit 1)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------- parsing helpers


def parse_angle(text: str) -> float:
    """``22.5deg`` or ``0.3927rad`` -> radians. A unit suffix is required."""
    raw = text.strip().lower()
    for suffix, scale in (("deg", math.pi / 180.0), ("rad", 1.0)):
        if raw.endswith(suffix):
            try:
                return float(raw[: -len(suffix)]) * scale
            except ValueError:
                break
    raise argparse.ArgumentTypeError(f"angle {text!r} needs a deg or rad suffix, e.g. 22.5deg")


def parse_filter(text: str) -> FilterSpec:
    try:
        return FilterSpec.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"{exc}; use none, gaussian:Z or rect:Z") from None


def _positive(kind):
    def convert(text):
        try:
            value = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
        if not value > 0:
            raise argparse.ArgumentTypeError(f"must be > 0, got {text}")
        return value

    return convert


def _non_negative(text):
    value = float(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return value


def _float_list(count):
    def convert(text):
        try:
            values = [float(x) for x in text.split(",")]
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected {count} comma-separated numbers") from None
        if len(values) != count:
            raise argparse.ArgumentTypeError(f"expected {count} comma-separated numbers, got {len(values)}")
        return values

    return convert


def _angle_list(text):
    parts = text.split(",")
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("expected four angles a,a',b,b'")
    return tuple(parse_angle(p) for p in parts)


# ---------------------------------------------------------------- run configuration


@dataclass
class RunConfig:
    crystal: CrystalConfig = field(default_factory=CrystalConfig)
    filter: FilterSpec | PhysicalFilter | None = None
    quadrature: QuadratureSettings = field(default_factory=QuadratureSettings)

    def filter_spec(self, override: FilterSpec | None) -> FilterSpec:
        if override is not None and self.filter is not None:
            raise UsageError("filter given both in --config and on the command line; keep one")
        chosen = override if override is not None else self.filter
        if chosen is None:
            chosen = PhysicalFilter(self.crystal.lambda0)
        return resolve_filter(self.crystal, chosen)


_CRYSTAL_KEYS = {
    "L_mm": ("length", 1e-3),
    "n1": ("n1", 1.0),
    "n2": ("n2", 1.0),
    "lambda0_nm": ("lambda0", 1e-9),
    "lambda_pump_nm": ("lambda_pump", 1e-9),
    "Lc_mm": ("compensator_length", 1e-3),
    "T_opt_C": ("T_opt", 1.0),
    "a": ("slope_a", 1.0),
}


def _number(section, key, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise UsageError(f"config {section}.{key} must be a number, got {value!r}")
    return float(value)


def load_config(path) -> RunConfig:
    """Read the JSON run configuration (all sections optional)."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror or exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON (line {exc.lineno}: {exc.msg})") from None
    if not isinstance(doc, dict):
        raise UsageError("config must be a JSON object")
    unknown = set(doc) - {"crystal", "filter", "quadrature"}
    if unknown:
        raise UsageError(f"unknown config section(s): {', '.join(sorted(unknown))}")

    crystal_doc = doc.get("crystal", {}) or {}
    bad = set(crystal_doc) - set(_CRYSTAL_KEYS)
    if bad:
        raise UsageError(f"unknown crystal key(s): {', '.join(sorted(bad))}")
    kwargs = {
        _CRYSTAL_KEYS[k][0]: _number("crystal", k, v) * _CRYSTAL_KEYS[k][1]
        for k, v in crystal_doc.items()
    }
    try:
        crystal = CrystalConfig(**kwargs)
    except ValueError as exc:
        raise UsageError(f"config crystal: {exc}") from None

    filt = None
    if "filter" in doc:
        fd = doc["filter"]
        if not isinstance(fd, dict) or "kind" not in fd:
            raise UsageError('config filter needs a "kind" (none, gaussian, rectangular)')
        bad = set(fd) - {"kind", "Z", "W_nm"}
        if bad:
            raise UsageError(f"unknown filter key(s): {', '.join(sorted(bad))}")
        if "Z" in fd and "W_nm" in fd:
            raise UsageError("config filter takes Z or W_nm, not both")
        kind = str(fd["kind"]).lower()
        try:
            if "W_nm" in fd:
                if kind != "gaussian":
                    raise UsageError("W_nm describes a Gaussian filter only")
                filt = PhysicalFilter(crystal.lambda0, _number("filter", "W_nm", fd["W_nm"]) * 1e-9)
            elif kind == "none":
                filt = FilterSpec.none()
            else:
                z = _number("filter", "Z", fd.get("Z"))
                filt = FilterSpec.parse(f"{kind}:{z!r}")
        except ValueError as exc:
            raise UsageError(f"config filter: {exc}") from None

    quad = QuadratureSettings()
    if "quadrature" in doc:
        qd = doc["quadrature"] or {}
        bad = set(qd) - {"rel_tol"}
        if bad:
            raise UsageError(f"unknown quadrature key(s): {', '.join(sorted(bad))}")
        if "rel_tol" in qd:
            try:
                quad = QuadratureSettings(rel_tol=_number("quadrature", "rel_tol", qd["rel_tol"]))
            except ValueError as exc:
                raise UsageError(f"config quadrature: {exc}") from None
    return RunConfig(crystal, filt, quad)


def _run_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.tol is not None:
        cfg.quadrature = replace(cfg.quadrature, rel_tol=args.tol)
    return cfg


def _with_slope(args, cfg: RunConfig) -> tuple[CrystalConfig, str]:
    """Crystal with a slope from --slope-a, the config, or a peak calibration."""
    if getattr(args, "slope_a", None) is not None:
        return cfg.crystal.with_slope(args.slope_a), "option"
    if cfg.crystal.slope_a is not None:
        return cfg.crystal, "config"
    from biphoton.experiment.sweep import calibrate_slope

    # the 1 nm filter places the maxima; the same slope serves every filter
    ref = FilterSpec.gaussian(dimensionless_filter_width(cfg.crystal, PhysicalFilter(cfg.crystal.lambda0)))
    return cfg.crystal.with_slope(calibrate_slope(cfg.crystal, ref).slope_a), "calibrated"


def _point(args, cfg: RunConfig) -> tuple[OperatingPoint, dict]:
    d = cfg.crystal.d if args.d is None else args.d
    if args.temperature is not None:
        crystal, source = _with_slope(args, cfg)
        m = float(m_of_temperature(crystal, args.temperature))
        return OperatingPoint(m, d), {"T_C": args.temperature, "slope_a": crystal.slope_a, "slope_source": source}
    return OperatingPoint(args.m, d), {}


def _emit(payload: dict) -> None:
    sys.stdout.write(json.dumps(payload, sort_keys=True, allow_nan=True) + "\n")


# ---------------------------------------------------------------- subcommands


def cmd_correlation(args, cfg):
    from biphoton.physics import correlation_from_rates, pair_integrals, rates_from_integrals

    spec = cfg.filter_spec(args.filter)
    point, extra = _point(args, cfg)
    integrals = pair_integrals(point, spec, settings=cfg.quadrature)
    rates = rates_from_integrals(HwpAngles(args.alpha, args.beta), integrals)
    _emit({
        "E": correlation_from_rates(rates),
        "I1": integrals.i1,
        "I2": integrals.i2,
        "m": point.m,
        "d": point.d,
        "alpha_rad": args.alpha,
        "beta_rad": args.beta,
        "filter": spec.label(),
        "rates": {"++": rates.rpp, "+-": rates.rpm, "-+": rates.rmp, "--": rates.rmm},
        **extra,
    })


def cmd_sweep(args, cfg):
    from biphoton.experiment.io import write_sweep_csv
    from biphoton.experiment.sweep import temperature_sweep

    spec = cfg.filter_spec(args.filter)
    crystal, source = _with_slope(args, cfg)
    angles = HwpAngles(args.alpha, args.beta)
    rows = temperature_sweep(crystal, spec, (args.t_min, args.t_max), args.step, angles, cfg.quadrature)
    write_sweep_csv(rows, sys.stdout if args.out == "-" else args.out)
    failed = [r for r in rows if r.error]
    if args.out != "-":
        _emit({"rows": len(rows), "failed_rows": len(failed), "slope_a": crystal.slope_a,
               "slope_source": source, "filter": spec.label(), "out": args.out})
    if failed:
        print(f"warning: {len(failed)} rows failed, first: {failed[0].error}", file=sys.stderr)


def cmd_fit(args, cfg):
    from biphoton.experiment.fitting import fit_slope
    from biphoton.experiment.io import read_measurements

    spec = cfg.filter_spec(args.filter)
    data = read_measurements(args.data)
    crystal = cfg.crystal
    if args.t_opt is not None:
        crystal = replace(crystal, T_opt=args.t_opt)
    result = fit_slope(data, crystal, spec, fit_T_opt=args.fit_t_opt, a_range=(args.a_min, args.a_max))
    _emit({
        "slope_a": result.slope_a,
        "T_opt_C": result.T_opt,
        "residual": result.residual,
        "n_points": result.n_points,
        "fitted_T_opt": result.fitted_T_opt,
        "filter": spec.label(),
    })


def cmd_amplitude_map(args, cfg):
    from biphoton.experiment.derived import GridSpec, amplitude_map_export
    from biphoton.experiment.io import write_amplitude_csv

    spec = cfg.filter_spec(args.filter)
    point, _ = _point(args, cfg)
    grid = GridSpec(args.tau_a_min, args.tau_a_max, args.tau_b_min, args.tau_b_max, args.n_a, args.n_b)
    amp = amplitude_map_export(point, spec, args.carrier, grid, cfg.quadrature)
    write_amplitude_csv(amp, sys.stdout if args.out == "-" else args.out)
    if args.out != "-":
        _emit({"rows": grid.n_a * grid.n_b, "m": point.m, "d": point.d, "filter": spec.label(), "out": args.out})


def cmd_asymptotic(args, cfg):
    from biphoton.physics import asymptotic_integrals, pair_integrals

    approx = asymptotic_integrals(args.delta_m, args.Z, args.order)
    out = {"delta_m": args.delta_m, "Z": args.Z, "order": args.order,
           "m": 4 * math.pi * args.order + args.delta_m,
           "I1": approx.i1, "I2": approx.i2, "E": approx.diagonal_correlation}
    if args.compare:
        exact = pair_integrals(OperatingPoint(out["m"], -1.0), FilterSpec.rectangular(args.Z),
                               settings=cfg.quadrature)
        out["quadrature"] = {"I1": exact.i1, "I2": exact.i2, "E": exact.diagonal_correlation}
        out["relative_error_I1"] = abs(approx.i1 - exact.i1) / exact.i1
        out["error_I2_over_I1"] = abs(approx.i2 - exact.i2) / exact.i1
    _emit(out)


def cmd_chsh(args, cfg):
    from biphoton.experiment.derived import OPTIMAL_CHSH, chsh

    spec = cfg.filter_spec(args.filter)
    point, extra = _point(args, cfg)
    angles = args.angles or OPTIMAL_CHSH
    _emit({"S": chsh(point, spec, angles), "classical_bound": 2.0, "quantum_bound": 2 * math.sqrt(2),
           "angles_rad": list(angles), "m": point.m, "d": point.d, "filter": spec.label(), **extra})


def cmd_simulate(args, cfg):
    from biphoton.timetag.simulate import SimConfig, simulate_tags
    from biphoton.timetag.stream import write_tags

    spec = cfg.filter_spec(args.filter)
    point, extra = _point(args, cfg)
    fmt = args.format or ("csv" if str(args.out).lower().endswith(".csv") else "binary")
    sim = SimConfig(
        pair_rate=args.pairs / args.duration,
        duration=args.duration,
        angles=HwpAngles(args.alpha, args.beta),
        point=point,
        filter=spec,
        efficiency=args.efficiency,
        dark_rate=args.dark_rate,
        jitter_sigma=args.jitter,
        seed=args.seed,
    )
    stream = simulate_tags(sim)
    write_tags(stream, args.out, fmt)
    _emit({"events": len(stream), "singles": list(stream.counts()), "duration_s": args.duration,
           "format": fmt, "out": str(args.out), "seed": args.seed, "m": point.m, **extra})


def cmd_analyze(args, cfg):
    from biphoton.timetag.analyze import analyze, correlation_from_report
    from biphoton.timetag.stream import read_tags

    report = analyze(read_tags(args.input), args.window, args.offsets)
    out = report.as_dict()
    try:
        est = correlation_from_report(report)
        out.update(E=est.E, E_stderr=est.stderr)
    except BiphotonError:
        out.update(E=None, E_stderr=None)
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    _emit(out)


def cmd_oracle_check(args, cfg):
    from biphoton.numerics.oracle import oracle_rate_bruteforce
    from biphoton.physics import general_rates

    spec = cfg.filter_spec(args.filter)
    point, _ = _point(args, cfg)
    angles = HwpAngles(args.alpha, args.beta)
    closed = general_rates(angles, point, spec, settings=cfg.quadrature).as_tuple()
    oracle = oracle_rate_bruteforce(angles, point, spec, grid=args.grid, tol=args.oracle_tol)
    scale = max(sum(closed), 1e-300)
    worst = max(abs(a - b) for a, b in zip(closed, oracle.as_tuple())) / scale
    _emit({"closed_form": list(closed), "oracle": list(oracle.as_tuple()),
           "oracle_error_estimate": oracle.estimated_error, "grid": oracle.grid_resolution,
           "max_relative_difference": worst, "rtol": args.rtol, "agree": worst <= args.rtol,
           "m": point.m, "filter": spec.label()})
    if worst > args.rtol:
        raise BiphotonError(f"closed form and oracle differ by {worst:.3e} (> {args.rtol:g})")


# ---------------------------------------------------------------- parser


def _globals(parser, suppress: bool):
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--seed", type=int, default=argparse.SUPPRESS if suppress else 0,
                        help="random seed for simulate [integer >= 0]")
    parser.add_argument("--tol", type=_positive(float), default=default,
                        help="relative quadrature tolerance, default 1e-9 [-]")
    parser.add_argument("--config", default=default, metavar="JSON",
                        help="run configuration file (crystal, filter, quadrature) [path]")


def _operating(parser, m_default=0.0):
    where = parser.add_mutually_exclusive_group()
    where.add_argument("--m", type=float, default=m_default,
                       help=f"dimensionless detuning m = mu*DL, default {m_default:g} [-]")
    where.add_argument("--temperature", type=float, default=None, metavar="T",
                       help="crystal temperature instead of --m, converted with the slope a [degC]")
    parser.add_argument("--slope-a", type=_positive(float), default=None,
                        help="slope of detuning against temperature, default from config or "
                             "calibrated on the 28.6 degC maximum [rad s^-1 K^-1]")
    parser.add_argument("--d", type=float, default=None,
                        help="compensator shift -2 Lc/L, default from the crystal (-1) [-]")


def _filter(parser):
    parser.add_argument("--filter", type=parse_filter, default=None,
                        help="filter none, gaussian:Z or rect:Z; default the 0.64 nm Gaussian "
                             "(Z = 7.8) of the crystal [dimensionless width]")


def _angles(parser):
    parser.add_argument("--alpha", type=parse_angle, default=math.pi / 8,
                        help="Alice half-wave-plate angle, default 22.5deg [deg or rad suffix]")
    parser.add_argument("--beta", type=parse_angle, default=math.pi / 8,
                        help="Bob half-wave-plate angle, default 22.5deg [deg or rad suffix]")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="biphoton", description="Filtered type-II biphoton correlations.")
    parser.add_argument("--version", action="version", version=f"biphoton {__version__}",
                        help="print version and exit [-]")
    _globals(parser, suppress=False)
    common = _Parser(add_help=False)
    _globals(common, suppress=True)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    def add(name, help_text, func):
        p = sub.add_parser(name, help=help_text, description=help_text, parents=[common])
        p.set_defaults(func=func)
        return p

    p = add("correlation", "correlation E and rates at one operating point", cmd_correlation)
    _operating(p)
    _filter(p)
    _angles(p)

    p = add("sweep", "E(T) table over a temperature range (CSV)", cmd_sweep)
    p.add_argument("--t-min", type=float, default=5.0, help="first temperature, default 5 [degC]")
    p.add_argument("--t-max", type=float, default=35.1, help="last temperature, default 35.1 [degC]")
    p.add_argument("--step", type=_positive(float), default=0.05, help="temperature step, default 0.05 [degC]")
    p.add_argument("--slope-a", type=_positive(float), default=None,
                   help="slope of detuning against temperature, default from config or "
                        "calibrated on the 28.6 degC maximum [rad s^-1 K^-1]")
    _filter(p)
    _angles(p)
    p.add_argument("--out", default="-", help="CSV output file, - for stdout [path]")

    p = add("fit", "fit the slope a (and optionally T_opt) to measured E(T)", cmd_fit)
    p.add_argument("--data", required=True,
                   help="CSV with columns T, E and optional sigma [path; T in degC, E and sigma -]")
    p.add_argument("--fit-t-opt", action="store_true", help="also fit the optimal temperature [flag]")
    p.add_argument("--t-opt", type=float, default=None,
                   help="optimal temperature (start value with --fit-t-opt), default 35.1 [degC]")
    p.add_argument("--a-min", type=_positive(float), default=1e10, help="lower slope bound [rad s^-1 K^-1]")
    p.add_argument("--a-max", type=_positive(float), default=1e14, help="upper slope bound [rad s^-1 K^-1]")
    _filter(p)

    p = add("amplitude-map", "two-photon amplitude on a (tau_a, tau_b) grid (CSV)", cmd_amplitude_map)
    _operating(p)
    _filter(p)
    p.add_argument("--carrier", type=_non_negative, default=40.0,
                   help="carrier frequency of the phase factor, default 40 [1/DL]")
    for axis in ("a", "b"):
        p.add_argument(f"--tau-{axis}-min", type=float, default=-2.0,
                       help=f"lower edge of tau_{axis}, default -2 [DL]")
        p.add_argument(f"--tau-{axis}-max", type=float, default=1.0,
                       help=f"upper edge of tau_{axis}, default 1 [DL]")
        p.add_argument(f"--n-{axis}", type=_positive(int), default=121,
                       help=f"samples along tau_{axis}, default 121 [count]")
    p.add_argument("--out", default="-", help="CSV output file, - for stdout [path]")

    p = add("asymptotic", "narrow rectangular-filter expansion near m = 4 pi n", cmd_asymptotic)
    p.add_argument("--delta-m", type=float, default=0.0, help="offset from m = 4 pi n [-]")
    p.add_argument("--Z", type=_positive(float), default=0.1, help="rectangular filter half-width [-]")
    p.add_argument("--order", type=int, default=1, help="expansion order n (nonzero) [integer]")
    p.add_argument("--compare", action="store_true",
                   help="also evaluate the integrals by quadrature [flag]")

    p = add("chsh", "CHSH value S of the model", cmd_chsh)
    _operating(p)
    _filter(p)
    p.add_argument("--angles", type=_angle_list, default=None,
                   help="four plate angles a,a',b,b', default 0deg,22.5deg,11.25deg,33.75deg "
                        "[deg or rad suffix each]")

    p = add("simulate", "Monte Carlo detector clicks (binary or CSV tag file)", cmd_simulate)
    p.add_argument("--pairs", type=_non_negative, default=1e5,
                   help="expected number of pairs over the run (Poisson mean) [count]")
    p.add_argument("--duration", type=_positive(float), default=1.0, help="acquisition time [s]")
    _operating(p)
    _filter(p)
    _angles(p)
    p.add_argument("--efficiency", type=float, default=0.6, help="detector efficiency [0-1]")
    p.add_argument("--dark-rate", type=_non_negative, default=25.0, help="dark counts per detector [1/s]")
    p.add_argument("--jitter", type=_non_negative, default=0.0, help="Gaussian timing jitter sigma [ps]")
    p.add_argument("--format", choices=("binary", "csv"), default=None,
                   help="tag file format, default from the extension (.csv) else binary [-]")
    p.add_argument("--out", required=True, help="tag file to write [path]")

    p = add("analyze", "singles, coincidences and E from a tag file", cmd_analyze)
    p.add_argument("--in", dest="input", required=True, help="binary or CSV tag file [path]")
    p.add_argument("--window", type=_positive(float), default=1000.0,
                   help="coincidence window, default 1000 [ps]")
    p.add_argument("--offsets", type=_float_list(4), default=(0.0, 0.0, 0.0, 0.0),
                   help="per-channel delays A+,A-,B+,B- added to timestamps [ps]")

    p = add("oracle-check", "compare closed-form rates with the brute-force oracle", cmd_oracle_check)
    _operating(p)
    _filter(p)
    _angles(p)
    p.add_argument("--grid", type=int, default=None, help="oracle time steps across [-2, 1] [count]")
    p.add_argument("--oracle-tol", type=_positive(float), default=1e-7,
                   help="maximum oracle error estimate relative to the total rate [-]")
    p.add_argument("--rtol", type=_positive(float), default=1e-6,
                   help="allowed relative difference of the rates [-]")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.seed < 0:
            raise UsageError("--seed must be >= 0")
        cfg = _run_config(args)
        args.func(args, cfg)
    except UsageError as exc:
        print(f"biphoton: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (BiphotonError, ValueError, OSError) as exc:
        if isinstance(exc, OSError) and exc.filename:
            message = f"cannot access {exc.filename}: {exc.strerror or exc}"
        else:
            message = str(exc)
        print(f"biphoton: error: {message}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
