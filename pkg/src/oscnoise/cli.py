"""Command-line surface: trace files, subcommands, JSON/CSV reports.

Units are SI throughout: seconds, hertz, radians.  Scalar results are
emitted as JSON, curves and traces as CSV.  All stochastic subcommands
take an explicit ``--seed`` and produce byte-identical output for
identical arguments.

Trace CSV format: a first header line ``# dt=<seconds> f0=<hz>`` (f0
optional, extra ``key=value`` tokens preserved as metadata), optional
further ``#`` comment lines, then one sample (radians) per line.  The
raw format is little-endian float64 with dt/f0 supplied via flags.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import allan, entropy, fbm, leakage, spectrum
from .errors import DomainError, OscNoiseError, TraceFormatError
from .fbm import NoiseMixture, OscillatorConfig, TimeGrid

__all__ = ["PhaseTrace", "dispatch", "main", "read_trace", "write_trace"]


@dataclass(frozen=True)
class PhaseTrace:
    """Uniformly sampled phase observations.

    ``dt`` is the sample interval (s), ``samples`` the phase values
    (rad), ``f0`` an optional nominal oscillator frequency (Hz) used for
    normalised Allan output, ``source`` free-form provenance metadata.
    """

    dt: float
    samples: np.ndarray = field(repr=False)
    f0: float | None = None
    source: str = ""

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        object.__setattr__(self, "samples", samples)
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise TraceFormatError(f"dt must be positive, got {self.dt}")
        if self.f0 is not None and not (self.f0 > 0 and math.isfinite(self.f0)):
            raise TraceFormatError(f"f0 must be positive, got {self.f0}")
        if samples.ndim != 1 or samples.size < 3:
            raise TraceFormatError("trace needs at least 3 samples")
        bad = np.flatnonzero(~np.isfinite(samples))
        if bad.size:
            raise TraceFormatError(f"non-finite sample at index {bad[0]}")


def _parse_header(line: str) -> dict[str, str]:
    fields = {}
    for token in line.lstrip("#").split():
        if "=" in token:
            key, _, value = token.partition("=")
            fields[key] = value
    return fields


def read_trace(
    path: str,
    fmt: str = "csv",
    dt: float | None = None,
    f0: float | None = None,
) -> PhaseTrace:
    """Load a phase trace; ``fmt`` is ``"csv"`` or ``"raw_f64_le"``.

    For raw input the sample interval must come from ``dt``; for CSV it
    comes from the header (a ``dt`` argument overrides it).
    """
    if fmt == "raw_f64_le":
        if dt is None:
            raise TraceFormatError("raw traces need an explicit dt")
        samples = np.fromfile(path, dtype="<f8")
        return PhaseTrace(dt=dt, samples=samples, f0=f0, source=path)
    if fmt != "csv":
        raise TraceFormatError(f"unknown trace format {fmt!r}")
    header: dict[str, str] = {}
    values = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                if not header:
                    header = _parse_header(line)
                continue
            try:
                values.append(float(line))
            except ValueError:
                raise TraceFormatError(
                    f"{path}:{lineno}: expected one float per line, got {line!r}"
                ) from None
    if dt is None:
        if "dt" not in header:
            raise TraceFormatError(f"{path}: header missing dt")
        try:
            dt = float(header["dt"])
        except ValueError:
            raise TraceFormatError(f"{path}: bad dt {header['dt']!r}") from None
    if f0 is None and "f0" in header:
        try:
            f0 = float(header["f0"])
        except ValueError:
            raise TraceFormatError(f"{path}: bad f0 {header['f0']!r}") from None
    return PhaseTrace(dt=dt, samples=np.array(values), f0=f0, source=path)


def write_trace(trace: PhaseTrace, path: str, fmt: str = "csv") -> None:
    """Write a trace so that ``read_trace`` reproduces it bit-exactly."""
    if fmt == "raw_f64_le":
        trace.samples.astype("<f8").tofile(path)
        return
    if fmt != "csv":
        raise TraceFormatError(f"unknown trace format {fmt!r}")
    with open(path, "w", encoding="ascii") as fh:
        header = f"# dt={trace.dt!r}"
        if trace.f0 is not None:
            header += f" f0={trace.f0!r}"
        fh.write(header + "\n")
        if trace.source:
            fh.write(f"# {trace.source}\n")
        for v in trace.samples:
            fh.write(f"{float(v)!r}\n")


# ---------------------------------------------------------------------------
# argument helpers
# ---------------------------------------------------------------------------


def _add_mixture_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--hurst", type=float, help="single component with coefficient 1")
    p.add_argument("--c-white", type=float, help="coefficient of the H=1/2 component (rad s^-1/2)")
    p.add_argument("--c-flicker", type=float, help="coefficient of the H=1 component (rad s^-1)")
    p.add_argument(
        "--component",
        action="append",
        metavar="H:C",
        help="extra component as hurst:coeff (repeatable)",
    )


def _mixture_from_args(args) -> NoiseMixture:
    pairs = []
    if args.hurst is not None:
        pairs.append((args.hurst, 1.0))
    if args.c_white is not None:
        pairs.append((0.5, args.c_white))
    if args.c_flicker is not None:
        pairs.append((1.0, args.c_flicker))
    for spec in args.component or []:
        try:
            h_str, _, c_str = spec.partition(":")
            pairs.append((float(h_str), float(c_str)))
        except ValueError:
            raise DomainError(f"bad --component {spec!r}, expected H:C") from None
    if not pairs:
        raise DomainError(
            "no noise model given; use --hurst, --c-white/--c-flicker or --component"
        )
    return NoiseMixture.from_pairs(pairs)


def _parse_lags(spec: str) -> list[int]:
    """Lag list from '1:100', '1:100:5' or '1,2,5,10'."""
    try:
        if ":" in spec:
            parts = [int(p) for p in spec.split(":")]
            start, stop = parts[0], parts[1]
            step = parts[2] if len(parts) > 2 else 1
            lags = list(range(start, stop + 1, step))
        else:
            lags = [int(p) for p in spec.split(",")]
    except (ValueError, IndexError):
        raise DomainError(f"bad lag specification {spec!r}") from None
    if not lags:
        raise DomainError(f"empty lag specification {spec!r}")
    return lags


def _emit_json(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out:
        with open(out, "w", encoding="ascii") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_lines(lines: list[str], out: str | None) -> None:
    text = "\n".join(lines) + "\n"
    if out:
        with open(out, "w", encoding="ascii") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_simulate(args) -> int:
    mix = _mixture_from_args(args)
    if args.samples is not None:
        if args.dt is None:
            raise DomainError("trace mode needs --dt")
        samples = fbm.simulate_trace(
            mix, args.samples, args.dt, args.seed, oversample=args.oversample
        )
        trace = PhaseTrace(
            dt=args.dt,
            samples=samples,
            f0=args.f0,
            source=f"rng={fbm.RNG_ALGORITHM} seed={args.seed}",
        )
        write_trace(trace, args.out)
        return 0
    if args.t0 is None or args.t1 is None or args.n is None:
        raise DomainError("grid mode needs --t0, --t1 and --n (or use --samples)")
    if not 0 < args.t0 < args.t1:
        raise DomainError("need 0 < t0 < t1")
    grid = TimeGrid(np.linspace(args.t0, args.t1, args.n))
    paths = fbm.simulate(mix, grid, args.paths, args.seed)
    dt = (args.t1 - args.t0) / (args.n - 1) if args.n > 1 else args.t1 - args.t0
    lines = [
        f"# dt={dt!r} t0={args.t0!r}" + (f" f0={args.f0!r}" if args.f0 else ""),
        f"# rng={fbm.RNG_ALGORITHM} seed={args.seed} paths={args.paths}",
    ]
    lines += [",".join(repr(float(v)) for v in row) for row in paths]
    _emit_lines(lines, args.out)
    return 0


def _cmd_covariance(args) -> int:
    payload = {
        "hurst": args.hurst,
        "s": args.s,
        "t": args.t,
        "covariance": fbm.covariance(args.hurst, args.s, args.t),
        "variance_s": fbm.variance(args.hurst, args.s),
        "variance_t": fbm.variance(args.hurst, args.t),
    }
    if args.s > 0 and args.t > 0:
        payload["correlation"] = fbm.correlation(args.hurst, args.s, args.t)
    _emit_json(payload, args.out)
    return 0


def _cmd_spectrum(args) -> int:
    omegas = np.logspace(math.log10(args.omega_min), math.log10(args.omega_max), args.n_omega)
    lines = ["omega,value,branch"]
    for om in omegas:
        if args.avg_time is not None:
            pt = spectrum.time_averaged(args.hurst, args.avg_time, float(om))
        else:
            pt = spectrum.instantaneous(args.hurst, args.time, float(om))
        lines.append(f"{pt.omega!r},{pt.value!r},{pt.branch}")
    _emit_lines(lines, args.out)
    return 0


def _cmd_leakage(args) -> int:
    mix = _mixture_from_args(args)
    components = [
        {
            "hurst": hurst.h,
            "coeff": coeff,
            "contribution": coeff * coeff * fbm.variance(hurst, args.gap),
        }
        for hurst, coeff in mix.components
    ]
    variance = leakage.conditional_variance(mix, args.gap)
    if args.csv:
        lines = ["hurst,coeff,contribution"]
        lines += [
            f"{c['hurst']!r},{c['coeff']!r},{c['contribution']!r}" for c in components
        ]
        lines.append(f"total,,{variance!r}")
        _emit_lines(lines, args.out)
    else:
        _emit_json(
            {"gap_tau": args.gap, "conditional_variance": variance, "components": components},
            args.out,
        )
    return 0


def _report_payload(report: entropy.SecurityReport) -> dict:
    return {
        "sigma2": report.sigma2,
        "duty_alpha": report.duty_alpha,
        "bias": report.bias,
        "min_entropy_bits": report.min_entropy_bits,
        "per_component": [
            {"hurst": h, "contribution": c} for h, c in report.per_component
        ],
    }


def _cmd_entropy(args) -> int:
    mix = _mixture_from_args(args)
    osc = OscillatorConfig(f0=args.f0, duty_alpha=args.alpha, phi0=0.0, dt=args.dt)
    report = entropy.bandwidth_report(mix, osc)
    if args.curves:
        grid, biases, entr = entropy.bias_entropy_curve(args.alpha)
        lines = ["sigma2,bias,min_entropy_bits"]
        lines += [
            f"{float(s2)!r},{float(b)!r},{float(e)!r}"
            for s2, b, e in zip(grid, biases, entr)
        ]
        _emit_lines(lines, args.curves)
    _emit_json(_report_payload(report), args.out)
    return 0


def _cmd_bandwidth(args) -> int:
    mix = _mixture_from_args(args)
    dt = entropy.solve_min_dt(mix, args.alpha, args.target, dt_min=args.dt_min)
    osc = OscillatorConfig(f0=args.f0, duty_alpha=args.alpha, phi0=0.0, dt=dt)
    report = entropy.bandwidth_report(mix, osc)
    _emit_json({"dt": dt, "target": args.target, "report": _report_payload(report)}, args.out)
    return 0


def _load_trace_args(args) -> PhaseTrace:
    return read_trace(args.infile, fmt=args.format, dt=args.dt, f0=args.f0)


def _cmd_avar(args) -> int:
    trace = _load_trace_args(args)
    curve = allan.estimate(trace, _parse_lags(args.lags))
    lines = ["lag_s,var,var_normalized,count"]
    for lag, var, cnt in zip(curve.lags, curve.variances, curve.counts):
        lag, var = float(lag), float(var)
        if trace.f0 is not None:
            # classic Allan convention for fractional frequency
            norm = var / (2.0 * lag**2 * (2.0 * math.pi * trace.f0) ** 2)
            norm_txt = repr(norm)
        else:
            norm_txt = "nan"
        lines.append(f"{lag!r},{var!r},{norm_txt},{int(cnt)}")
    _emit_lines(lines, args.out)
    return 0


def _cmd_calibrate(args) -> int:
    trace = _load_trace_args(args)
    curve = allan.estimate(trace, _parse_lags(args.lags))
    fit = allan.fit_mixture(curve, log_space=args.log_space)
    _emit_json(
        {
            "c_white": fit.c_white,
            "c_flicker": fit.c_flicker,
            "residual_norm": fit.residual_norm,
            "covariance_of_fit": [[float(v) for v in row] for row in fit.covariance_of_fit],
            "n_lags": int(curve.lags.size),
            "max_abs_d2_mean": float(np.max(np.abs(curve.d2_means))),
        },
        args.out,
    )
    return 0


# ---------------------------------------------------------------------------
# parser / dispatch
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oscnoise",
        description="Closed-form phase-noise analysis for oscillator TRNGs "
        "(SI units: seconds, hertz, radians).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="sample phase paths (grid) or one long trace")
    _add_mixture_flags(p)
    p.add_argument("--t0", type=float, help="grid start time (s), grid mode")
    p.add_argument("--t1", type=float, help="grid end time (s), grid mode")
    p.add_argument("--n", type=int, help="number of grid points, grid mode")
    p.add_argument("--paths", type=int, default=1, help="paths to draw, grid mode (default 1)")
    p.add_argument("--samples", type=int, help="trace length; switches to trace mode")
    p.add_argument("--dt", type=float, help="sample interval (s), trace mode")
    p.add_argument("--oversample", type=int, default=8,
                   help="fine-grid factor of the trace generator (default 8)")
    p.add_argument("--f0", type=float, help="nominal frequency recorded in the header (Hz)")
    p.add_argument("--seed", type=int, required=True, help="PCG64 seed")
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("covariance", help="closed-form covariance of one component")
    p.add_argument("--hurst", type=float, required=True)
    p.add_argument("--s", type=float, required=True, help="first time (s)")
    p.add_argument("--t", type=float, required=True, help="second time (s)")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_covariance)

    p = sub.add_parser("spectrum", help="instantaneous or time-averaged spectrum as CSV")
    p.add_argument("--hurst", type=float, required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--time", type=float, help="fixed time t for the instantaneous spectrum (s)")
    g.add_argument("--avg-time", type=float, help="averaging horizon T (s)")
    p.add_argument("--omega-min", type=float, required=True, help="rad/s")
    p.add_argument("--omega-max", type=float, required=True, help="rad/s")
    p.add_argument("--n-omega", type=int, default=50)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_spectrum)

    p = sub.add_parser("leakage", help="conditional variance after full-history leakage")
    _add_mixture_flags(p)
    p.add_argument("--gap", type=float, required=True, help="time since last observation (s)")
    p.add_argument("--csv", action="store_true", help="emit CSV instead of JSON")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_leakage)

    p = sub.add_parser("entropy", help="per-bit security report for a sampling interval")
    _add_mixture_flags(p)
    p.add_argument("--dt", type=float, required=True, help="sampling interval (s)")
    p.add_argument("--alpha", type=float, default=0.5, help="duty cycle (default 0.5)")
    p.add_argument("--f0", type=float, default=1.0, help="nominal frequency (metadata only)")
    p.add_argument("--curves", help="also write bias/entropy vs sigma^2 CSV here")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_entropy)

    p = sub.add_parser("bandwidth", help="smallest dt reaching a min-entropy target")
    _add_mixture_flags(p)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--target", type=float, required=True, help="target min-entropy (bits)")
    p.add_argument("--dt-min", type=float, default=1e-12)
    p.add_argument("--f0", type=float, default=1.0)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_bandwidth)

    for name, help_text in (
        ("avar", "second-difference variance curve of a trace"),
        ("calibrate", "recover white/flicker coefficients from a trace"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--in", dest="infile", required=True, help="trace file")
        p.add_argument("--format", choices=["csv", "raw_f64_le"], default="csv")
        p.add_argument("--dt", type=float, help="sample interval, required for raw input (s)")
        p.add_argument("--f0", type=float, help="nominal frequency override (Hz)")
        p.add_argument("--lags", required=True, help="'1:100', '1:100:5' or '1,2,5'")
        if name == "calibrate":
            p.add_argument("--log-space", action="store_true",
                           help="refit on log-variances")
        p.add_argument("--out")
        p.set_defaults(func=_cmd_avar if name == "avar" else _cmd_calibrate)

    return parser


def dispatch(argv) -> int:
    """Run one CLI invocation; exit code 0 on success, 1 on domain errors,
    2 on usage errors."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except OscNoiseError as exc:
        print(f"oscnoise: error: {exc}", file=sys.stderr)
        return 1


def main() -> int:
    return dispatch(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
