"""Command-line front end: a thin client of the service API.

Subcommands cover curve fitting, scans, sweeps, scaling studies, noise
analysis and fixture synthesis.  Computation runs through the service
layer, in process by default or against ``--server URL``; files, exit
codes and provenance embedding are handled here.

Exit codes: 0 success; 2 input or configuration error; 3 algorithmic
non-convergence (a report with converged=false is still written when
available); 4 domain violation such as a band outside Nyquist.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import errors
from .config import (
    absorber_to_config,
    laser_params_to_config,
    load_absorber,
    load_laser_params,
    parse_quantity,
)
from .fileio import read_csv, sha256_digest, write_csv, write_json
from .service.client import LocalClient, RemoteClient
from .service.schemas import (
    AbsorberModel,
    FitLiRequest,
    FitOdmrRequest,
    LaserParamsModel,
    ScalingRequest,
    ScanRequest,
    SensitivityRequest,
    SweepRequest,
    SynthLiRequest,
    SynthOdmrRequest,
    SynthTimeseriesRequest,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NOT_CONVERGED = 3
EXIT_DOMAIN = 4

_INPUT_ERRORS = (
    errors.ConfigError, errors.DataFormatError, errors.TooShort,
    errors.InvalidContrast, errors.NonPositiveInput, errors.NonPositivePower,
    errors.ZeroReferenceDepth,
)
_CONVERGENCE_ERRORS = (
    errors.NotConverged, errors.DegenerateData, errors.FlatTrace,
)
_DOMAIN_ERRORS = (
    errors.EmptyBand, errors.AliasedTone, errors.ZeroSlope,
    errors.DomainError, errors.NoThreshold, errors.NoPhysicalRoot,
    errors.EmptyScan,
)


def _exit_code(exc: errors.LicamError) -> int:
    if isinstance(exc, _CONVERGENCE_ERRORS):
        return EXIT_NOT_CONVERGED
    if isinstance(exc, _DOMAIN_ERRORS):
        return EXIT_DOMAIN
    if isinstance(exc, _INPUT_ERRORS):
        return EXIT_INPUT
    return EXIT_INPUT


def _client(args):
    if getattr(args, "server", None):
        return RemoteClient(args.server)
    return LocalClient()


def _threads(args) -> int:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("LICAM_LAB_THREADS")
    if env:
        try:
            return max(int(env), 1)
        except ValueError as exc:
            raise errors.ConfigError(
                f"LICAM_LAB_THREADS={env!r} is not an integer"
            ) from exc
    return 1


def _parse_current_range(text: str) -> np.ndarray:
    """``start:stop:step`` with unit suffixes, endpoints inclusive."""
    parts = text.split(":")
    if len(parts) != 3:
        raise errors.ConfigError(
            f"--currents expects start:stop:step, got {text!r}"
        )
    start, stop, step = (parse_quantity(p, "current") for p in parts)
    if step <= 0.0 or stop <= start:
        raise errors.ConfigError("--currents needs stop > start and step > 0")
    count = int(round((stop - start) / step))
    values = start + step * np.arange(count + 1)
    values = values[(values > 0.0) & (values <= stop * (1 + 1e-12))]
    if values.size == 0:
        raise errors.ConfigError("--currents range contains no positive points")
    return values


def _parse_grid(text: str, name: str) -> list[float]:
    """Comma list, or ``start:stop:count[:log]``."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) not in (3, 4):
            raise errors.ConfigError(
                f"{name} expects start:stop:count[:log] or a comma list"
            )
        start, stop = float(parts[0]), float(parts[1])
        count = int(parts[2])
        if count < 1 or stop <= start:
            raise errors.ConfigError(f"{name}: need stop > start and count >= 1")
        if len(parts) == 4:
            if parts[3] != "log":
                raise errors.ConfigError(f"{name}: unknown spacing {parts[3]!r}")
            if start <= 0.0:
                raise errors.ConfigError(f"{name}: log spacing needs start > 0")
            return np.geomspace(start, stop, count).tolist()
        return np.linspace(start, stop, count).tolist()
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise errors.ConfigError(f"{name}: cannot parse {text!r}") from exc


def _parse_band(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise errors.ConfigError(f"--band expects lo,hi in Hz, got {text!r}")
    return (parse_quantity(parts[0], "frequency"),
            parse_quantity(parts[1], "frequency"))


def _provenance(command: str, args, inputs: dict[str, Path],
                config: dict) -> dict:
    return {
        "tool": "licam-lab",
        "version": __version__,
        "command": command,
        "seed": getattr(args, "seed", 0),
        "inputs": {name: sha256_digest(path) for name, path in inputs.items()},
        "config": config,
    }


def _echo_config(config: dict) -> None:
    for key in sorted(config):
        value = config[key]
        if isinstance(value, dict):
            for sub in sorted(value):
                print(f"{key}.{sub} = {value[sub]}")
        else:
            print(f"{key} = {value}")


# ----------------------------------------------------------------------
# Subcommands
# ----------------------------------------------------------------------

def cmd_fit_li(args) -> int:
    # an optional third noise column enables inverse-variance weights
    try:
        first_line = Path(args.data).read_text(encoding="utf-8").splitlines()[0]
    except (OSError, IndexError):
        first_line = ""
    if [c.strip() for c in first_line.split(",")] == ["i_a", "p_w", "noise_w"]:
        data = read_csv(args.data, ["i_a", "p_w", "noise_w"], min_rows=10)
        noise = data[:, 2]
        if np.any(noise <= 0.0):
            raise errors.DataFormatError("noise_w column must be positive")
        data = data[:, :2]
    else:
        data = read_csv(args.data, ["i_a", "p_w"], min_rows=10)
        noise = None
    params = load_laser_params(args.params)
    absorber = load_absorber(args.absorber) if args.absorber else None
    config = {
        "params": laser_params_to_config(params),
        "absorber": absorber_to_config(absorber) if absorber else None,
        "data": str(args.data),
        "weighted": noise is not None,
    }
    inputs = {"data": Path(args.data), "params": Path(args.params)}
    if args.absorber:
        inputs["absorber"] = Path(args.absorber)
    request = FitLiRequest(
        data=[tuple(row) for row in data],
        params=LaserParamsModel.from_params(params),
        absorber=AbsorberModel.from_params(absorber) if absorber else None,
        noise_rms=noise.tolist() if noise is not None else None,
    )
    try:
        response = _client(args).fit_li(request)
        report = response.report.model_dump()
        status = EXIT_OK
    except _CONVERGENCE_ERRORS as exc:
        attached = getattr(exc, "report", None)
        report = None
        if attached is not None:
            report = {
                "parameters": attached.parameters,
                "uncertainties": attached.uncertainties,
                "residual_rms": attached.residual_rms,
                "converged": False,
                "iterations": attached.iterations,
                "derived": attached.derived,
                "warnings": attached.warnings,
            }
        payload = _provenance("fit-li", args, inputs, config)
        payload["error"] = {"type": type(exc).__name__, "message": str(exc)}
        payload["result"] = report
        write_json(args.out, payload)
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    payload = _provenance("fit-li", args, inputs, config)
    payload["result"] = report
    write_json(args.out, payload)
    return status


def cmd_simulate(args) -> int:
    params = load_laser_params(args.params)
    absorber = load_absorber(args.absorber)
    currents = _parse_current_range(args.currents)
    config = {
        "params": laser_params_to_config(params),
        "absorber": absorber_to_config(absorber),
        "currents": args.currents,
        "linewidth_fwhm": args.linewidth,
        "refine_threshold": not args.no_refine,
    }
    _echo_config(config)
    request = ScanRequest(
        params=LaserParamsModel.from_params(params),
        absorber=AbsorberModel.from_params(absorber),
        currents=currents.tolist(),
        linewidth_fwhm=args.linewidth,
        refine_threshold=not args.no_refine,
    )
    response = _client(args).scan(request)
    header = ["i_a", "p_off_w", "p_on_w", "tau_eff", "contrast", "xi",
              "snls_t_per_sqrthz", "status"]
    rows = []
    for row in response.rows:
        if row.fom is None:
            rows.append([row.current] + [math.nan] * 6 + [row.status])
        else:
            rows.append([
                row.current, row.power_off, row.power_on,
                row.fom.effective_depth, row.fom.contrast,
                row.fom.enhancement, row.fom.snls, row.status,
            ])
    write_csv(args.out, header, rows)
    summary_path = Path(args.out).with_suffix(".summary.json")
    inputs = {"params": Path(args.params), "absorber": Path(args.absorber)}
    payload = _provenance("simulate", args, inputs, config)
    payload["summary"] = response.summary.model_dump()
    write_json(summary_path, payload)
    return EXIT_OK


def cmd_sweep(args) -> int:
    params = load_laser_params(args.params)
    absorber = load_absorber(args.absorber)
    g_values = _parse_grid(args.grid_g, "--grid-g")
    rf_values = _parse_grid(args.grid_rf, "--grid-rf")
    current_limit = parse_quantity(args.current_limit, "current")
    threads = _threads(args)
    config = {
        "params": laser_params_to_config(params),
        "absorber": absorber_to_config(absorber),
        "grid_g": g_values,
        "grid_rf": rf_values,
        "current_limit": current_limit,
        "linewidth_fwhm": args.linewidth,
        "threads": threads,
    }
    request = SweepRequest(
        params=LaserParamsModel.from_params(params),
        absorber=AbsorberModel.from_params(absorber),
        g_values=g_values, rf_values=rf_values,
        current_limit=current_limit, linewidth_fwhm=args.linewidth,
        threads=threads,
    )
    started = time.monotonic()
    response = _client(args).sweep(request)
    elapsed = time.monotonic() - started
    header = ["g_m2", "rf", "delta_alpha_per_m", "i_opt_a",
              "snls_t_per_sqrthz", "xi", "regime", "status"]
    rows = [
        [cell.differential_gain, cell.reflectivity_front, cell.delta_alpha,
         cell.optimum_current, cell.optimum_snls, cell.optimum_enhancement,
         cell.regime or "", cell.status]
        for cell in response.cells
    ]
    write_csv(args.out, header, rows)
    inputs = {"params": Path(args.params), "absorber": Path(args.absorber)}
    payload = _provenance("sweep", args, inputs, config)
    payload["timing_s"] = elapsed
    payload["n_cells"] = len(response.cells)
    write_json(Path(args.out).with_suffix(".manifest.json"), payload)
    return EXIT_OK


def cmd_scaling(args) -> int:
    params = load_laser_params(args.params)
    delta_alphas = _parse_grid(args.delta_alphas, "--delta-alphas")
    current_limits = [parse_quantity(part, "current")
                      for part in args.current_limits.split(",")]
    config = {
        "params": laser_params_to_config(params),
        "absorber_length": args.absorber_length,
        "delta_alphas": delta_alphas,
        "current_limits": current_limits,
        "linewidth_fwhm": args.linewidth,
    }
    request = ScalingRequest(
        params=LaserParamsModel.from_params(params),
        absorber_length=args.absorber_length,
        delta_alphas=delta_alphas, current_limits=current_limits,
        linewidth_fwhm=args.linewidth,
    )
    response = _client(args).scaling(request)
    header = ["delta_alpha_per_m", "i_c_a", "snls_t_per_sqrthz", "regime",
              "local_slope", "status"]
    rows = [
        [p.delta_alpha, p.current_limit, p.optimum_snls, p.regime or "",
         p.local_slope, p.status]
        for p in response.points
    ]
    write_csv(args.out, header, rows)
    payload = _provenance("scaling", args, {"params": Path(args.params)}, config)
    payload["boundaries"] = response.boundaries
    write_json(Path(args.out).with_suffix(".manifest.json"), payload)
    return EXIT_OK


def cmd_fit_odmr(args) -> int:
    data = read_csv(args.data, ["f_hz", "signal"], min_rows=20)
    config = {"data": str(args.data), "kappa": args.kappa,
              "dc_power": args.dc_power}
    inputs = {"data": Path(args.data)}
    request = FitOdmrRequest(trace=[tuple(row) for row in data],
                             kappa=args.kappa, dc_power=args.dc_power)
    try:
        response = _client(args).fit_odmr(request)
    except _CONVERGENCE_ERRORS as exc:
        payload = _provenance("fit-odmr", args, inputs, config)
        payload["error"] = {"type": type(exc).__name__, "message": str(exc)}
        attached = getattr(exc, "report", None)
        if attached is not None:
            payload["result"] = {
                "parameters": attached.parameters,
                "uncertainties": attached.uncertainties,
                "residual_rms": attached.residual_rms,
                "converged": False,
                "iterations": attached.iterations,
                "derived": attached.derived,
            }
        write_json(args.out, payload)
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    payload = _provenance("fit-odmr", args, inputs, config)
    payload["fit"] = response.fit.model_dump()
    payload["result"] = response.report.model_dump()
    write_json(args.out, payload)
    return EXIT_OK


def cmd_sensitivity(args) -> int:
    data = read_csv(args.data, ["t_s", "signal"], min_rows=16)
    times, values = data[:, 0], data[:, 1]
    dt = np.diff(times)
    if dt.size == 0 or np.any(dt <= 0.0):
        raise errors.DataFormatError("time column must strictly ascend")
    mean_dt = float(dt.mean())
    if np.max(np.abs(dt - mean_dt)) > 1e-6 * mean_dt:
        raise errors.DataFormatError(
            "non-uniform sampling: time steps deviate by more than 1 ppm"
        )
    sample_rate = 1.0 / mean_dt
    band = _parse_band(args.band)
    config = {"data": str(args.data), "slope": args.slope,
              "band": list(band), "window": args.window, "mode": args.mode,
              "off_resonant": args.off_resonant,
              "sample_rate": sample_rate}
    request = SensitivityRequest(
        sample_rate=sample_rate, values=values.tolist(), slope=args.slope,
        band=band, window=args.window, mode=args.mode,
        off_resonant=args.off_resonant,
    )
    response = _client(args).sensitivity(request)
    asd_path = Path(args.out).with_suffix(".asd.csv")
    write_csv(asd_path, ["f_hz", "asd"],
              list(zip(response.frequencies, response.amplitudes)))
    payload = _provenance("sensitivity", args, {"data": Path(args.data)}, config)
    payload["result"] = {
        "band_hz": list(response.band),
        "mean_floor": response.mean_floor,
        "sensitivity_t_per_sqrthz": response.sensitivity,
        "off_resonant": response.off_resonant,
        "sample_rate_hz": sample_rate,
        "n_samples": int(values.size),
    }
    write_json(args.out, payload)
    return EXIT_OK


def cmd_synth(args) -> int:
    client = _client(args)
    if args.kind == "li-curve":
        if not (args.params and args.absorber and args.currents):
            raise errors.ConfigError(
                "synth li-curve needs --params, --absorber and --currents"
            )
        params = load_laser_params(args.params)
        absorber = load_absorber(args.absorber)
        currents = _parse_current_range(args.currents)
        response = client.synth_li(SynthLiRequest(
            params=LaserParamsModel.from_params(params),
            absorber=AbsorberModel.from_params(absorber),
            currents=currents.tolist(), noise_fraction=args.noise,
            seed=args.seed,
        ))
    elif args.kind == "odmr-trace":
        if args.grid is None:
            raise errors.ConfigError("synth odmr-trace needs --grid lo:hi:n")
        parts = args.grid.split(":")
        if len(parts) != 3:
            raise errors.ConfigError("--grid expects lo:hi:n")
        lo = parse_quantity(parts[0], "frequency")
        hi = parse_quantity(parts[1], "frequency")
        n = int(parts[2])
        if n < 2 or hi <= lo:
            raise errors.ConfigError("--grid needs hi > lo and n >= 2")
        response = client.synth_odmr(SynthOdmrRequest(
            contrast=args.contrast,
            linewidth_fwhm=parse_quantity(args.linewidth_arg, "frequency"),
            center=parse_quantity(args.center, "frequency"),
            modulation_depth=parse_quantity(args.mod_depth, "frequency"),
            noise_rms=args.noise, grid=np.linspace(lo, hi, n).tolist(),
            seed=args.seed,
        ))
    elif args.kind == "timeseries":
        tones = []
        for tone in args.tone or []:
            parts = tone.split(",")
            if len(parts) != 2:
                raise errors.ConfigError("--tone expects freq,amplitude")
            tones.append((parse_quantity(parts[0], "frequency"),
                          float(parts[1])))
        response = client.synth_timeseries(SynthTimeseriesRequest(
            floor_density=args.floor, tones=tones,
            sample_rate=parse_quantity(args.fs, "frequency"),
            duration=parse_quantity(args.duration, "time"), seed=args.seed,
        ))
    else:
        raise errors.ConfigError(f"unknown synth kind {args.kind!r}")
    write_csv(args.out, response.columns, response.rows)
    inputs = {}
    if args.kind == "li-curve":
        inputs = {"params": Path(args.params), "absorber": Path(args.absorber)}
    payload = _provenance(f"synth:{args.kind}", args, inputs, {
        "kind": args.kind, "columns": response.columns,
        "rows": len(response.rows),
    })
    write_json(Path(args.out).with_suffix(".manifest.json"), payload)
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


# ----------------------------------------------------------------------
# Parser
# ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="licam-lab",
        description="Intracavity absorption magnetometry modeling toolkit",
    )
    parser.add_argument("--version", action="version",
                        version=f"licam-lab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_seed=True):
        p.add_argument("--server", help="base URL of a running service; "
                       "default runs in process")
        if needs_seed:
            p.add_argument("--seed", type=int, default=0,
                           help="random seed recorded in outputs")

    p = sub.add_parser("fit-li", help="fit a characteristic L-I curve")
    p.add_argument("--data", required=True, help="CSV with header i_a,p_w")
    p.add_argument("--params", required=True, help="laser parameter file")
    p.add_argument("--absorber", help="absorber file (off-resonant loss only)")
    p.add_argument("--out", required=True, help="output JSON report")
    common(p)
    p.set_defaults(func=cmd_fit_li)

    p = sub.add_parser("simulate",
                       help="scan figures of merit over a current range")
    p.add_argument("--params", required=True)
    p.add_argument("--absorber", required=True)
    p.add_argument("--currents", required=True,
                   help="start:stop:step with units, e.g. 1mA:200mA:1mA")
    p.add_argument("--linewidth", type=lambda s: parse_quantity(s, "frequency"),
                   default=1e6, help="resonance FWHM for the sensitivity")
    p.add_argument("--no-refine", action="store_true",
                   help="skip geometric grid refinement around threshold")
    p.add_argument("--out", required=True, help="output CSV (intracavity "
                   "power pair, depth, contrast, enhancement, sensitivity)")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="grid sweep over gain and reflectivity")
    p.add_argument("--params", required=True)
    p.add_argument("--absorber", required=True)
    p.add_argument("--grid-g", required=True,
                   help="differential gain grid, m^2: list or start:stop:n[:log]")
    p.add_argument("--grid-rf", required=True,
                   help="front reflectivity grid: list or start:stop:n")
    p.add_argument("--current-limit", required=True,
                   help="maximum drive current, e.g. 200mA")
    p.add_argument("--linewidth", type=lambda s: parse_quantity(s, "frequency"),
                   default=1e6)
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (fallback: LICAM_LAB_THREADS)")
    p.add_argument("--out", required=True, help="output CSV grid")
    common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("scaling",
                       help="optimum sensitivity vs absorption constant")
    p.add_argument("--params", required=True)
    p.add_argument("--absorber-length", type=float, required=True,
                   help="geometric absorber path, m")
    p.add_argument("--delta-alphas", required=True,
                   help="absorption grid, 1/m: list or start:stop:n:log")
    p.add_argument("--current-limits", required=True,
                   help="comma list of current limits, e.g. 100mA,200mA")
    p.add_argument("--linewidth", type=lambda s: parse_quantity(s, "frequency"),
                   default=1e6)
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=cmd_scaling)

    p = sub.add_parser("fit-odmr", help="fit a lock-in resonance trace")
    p.add_argument("--data", required=True, help="CSV with header f_hz,signal")
    p.add_argument("--kappa", type=float, default=1.0,
                   help="lock-in contrast calibration factor")
    p.add_argument("--dc-power", type=float, default=1.0,
                   help="DC detected power in the trace's signal units")
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=cmd_fit_odmr)

    p = sub.add_parser("sensitivity",
                       help="noise floor and magnetic sensitivity of a record")
    p.add_argument("--data", required=True, help="CSV with header t_s,signal")
    p.add_argument("--slope", type=float, required=True,
                   help="zero-crossing slope, signal units per Hz")
    p.add_argument("--band", required=True, help="lo,hi in Hz")
    p.add_argument("--window", default="rectangular",
                   choices=["rectangular", "hann"])
    p.add_argument("--mode", default="mean", choices=["mean", "median"])
    p.add_argument("--off-resonant", action="store_true",
                   help="tag the result as an off-resonant reference floor")
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=cmd_sensitivity)

    p = sub.add_parser("synth", help="generate deterministic fixtures")
    p.add_argument("kind", choices=["li-curve", "odmr-trace", "timeseries"])
    p.add_argument("--params")
    p.add_argument("--absorber")
    p.add_argument("--currents")
    p.add_argument("--contrast", type=float, default=1.8e-2)
    p.add_argument("--linewidth", dest="linewidth_arg", default="1.85MHz")
    p.add_argument("--center", default="2.7435GHz")
    p.add_argument("--mod-depth", default="4.5MHz")
    p.add_argument("--grid", help="lo:hi:n frequency grid")
    p.add_argument("--noise", type=float, default=0.0,
                   help="noise level (fraction for li-curve, rms otherwise)")
    p.add_argument("--floor", type=float, default=0.0,
                   help="white-noise amplitude density for timeseries")
    p.add_argument("--tone", action="append",
                   help="freq,amplitude; repeatable")
    p.add_argument("--fs", default="10kHz", help="sampling rate")
    p.add_argument("--duration", default="1s")
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    import pydantic

    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except errors.LicamError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return _exit_code(exc)
    except pydantic.ValidationError as exc:
        print(f"invalid request: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
