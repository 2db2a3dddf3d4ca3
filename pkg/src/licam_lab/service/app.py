"""HTTP service exposing the modeling and analysis pipelines.

Endpoints wrap the core package one-to-one; the command-line tool is a
thin client that calls these handlers in process by default or posts
the same request models to a remote instance.  Core errors surface as
HTTP 422 carrying the error class name, so a remote client can map them
back to the same exit codes as local execution.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import LicamError, NotConverged
from ..fitting import fit_li_curve, fit_odmr
from ..model import characteristic_curve, steady_state
from ..signals import TimeSeries, asd, noise_floor_sensitivity, \
    synth_odmr_trace, synth_time_series
from ..sweep import (
    ScanConfig,
    build_scan_currents,
    scan_current,
    scaling_exponents,
    sweep_grid,
)
from .schemas import (
    FitLiRequest,
    FitLiResponse,
    FitOdmrRequest,
    FitOdmrResponse,
    FitReportModel,
    HealthResponse,
    OdmrFitModel,
    OperatingPointModel,
    ScalingRequest,
    ScalingResponse,
    ScanRequest,
    ScanResponse,
    SensitivityRequest,
    SensitivityResponse,
    SteadyStateRequest,
    SweepRequest,
    SweepResponse,
    SweepCellModel,
    SynthLiRequest,
    SynthOdmrRequest,
    SynthResponse,
    SynthTimeseriesRequest,
)

app = FastAPI(
    title="licam-lab",
    version=__version__,
    description=(
        "Rate-equation modeling, fitting, noise analysis and parameter "
        "sweeps for intracavity absorption magnetometry"
    ),
)


@app.exception_handler(LicamError)
async def _licam_error_handler(_: Request, exc: LicamError) -> JSONResponse:
    body = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, NotConverged) and getattr(exc, "report", None) is not None:
        body["report"] = FitReportModel.from_report(exc.report).model_dump()
    return JSONResponse(status_code=422, content=body)


def _scan_config(linewidth_fwhm: float, gyro: float | None) -> ScanConfig:
    if gyro is None:
        return ScanConfig(linewidth_fwhm=linewidth_fwhm)
    return ScanConfig(linewidth_fwhm=linewidth_fwhm, gyro=gyro)


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(status="ok", version=__version__)


@app.post("/model/steady-state", response_model=OperatingPointModel)
def model_steady_state(request: SteadyStateRequest) -> OperatingPointModel:
    point = steady_state(request.params.to_params(),
                         request.absorber.to_params(),
                         request.current, request.on_resonance)
    return OperatingPointModel.from_point(point)


@app.post("/analyze/scan", response_model=ScanResponse)
def analyze_scan(request: ScanRequest) -> ScanResponse:
    params = request.params.to_params()
    absorber = request.absorber.to_params()
    config = _scan_config(request.linewidth_fwhm, request.gyro)
    currents = np.asarray(sorted(set(request.currents)), dtype=float)
    if request.refine_threshold and currents.size:
        refined = build_scan_currents(params, absorber,
                                      float(currents[-1]), config)
        inside = refined[refined >= currents[0]]
        currents = np.unique(np.concatenate([currents, inside]))
    scan = scan_current(params, absorber, currents, config, on_error="mask")
    return ScanResponse.from_scan(scan)


@app.post("/analyze/sweep", response_model=SweepResponse)
def analyze_sweep(request: SweepRequest) -> SweepResponse:
    cells = sweep_grid(
        request.params.to_params(), request.g_values, request.rf_values,
        request.absorber.to_params(), request.current_limit,
        _scan_config(request.linewidth_fwhm, request.gyro),
        threads=request.threads,
    )
    return SweepResponse(cells=[SweepCellModel.from_cell(c) for c in cells])


@app.post("/analyze/scaling", response_model=ScalingResponse)
def analyze_scaling(request: ScalingRequest) -> ScalingResponse:
    table = scaling_exponents(
        request.params.to_params(), request.absorber_length,
        request.delta_alphas, request.current_limits,
        _scan_config(request.linewidth_fwhm, request.gyro),
    )
    return ScalingResponse.from_table(table)


@app.post("/fit/li-curve", response_model=FitLiResponse)
def fit_li(request: FitLiRequest) -> FitLiResponse:
    weights = None
    if request.noise_rms is not None:
        noise = np.asarray(request.noise_rms, dtype=float)
        weights = 1.0 / noise ** 2
    absorber = request.absorber.to_params() if request.absorber else None
    report = fit_li_curve(request.data, request.params.to_params(),
                          absorber=absorber, init=request.init,
                          weights=weights)
    return FitLiResponse(report=FitReportModel.from_report(report))


@app.post("/fit/odmr", response_model=FitOdmrResponse)
def fit_odmr_trace(request: FitOdmrRequest) -> FitOdmrResponse:
    fit, report = fit_odmr(request.trace, init=request.init,
                           kappa=request.kappa, dc_power=request.dc_power)
    return FitOdmrResponse(fit=OdmrFitModel.from_fit(fit),
                           report=FitReportModel.from_report(report))


@app.post("/analyze/sensitivity", response_model=SensitivityResponse)
def analyze_sensitivity(request: SensitivityRequest) -> SensitivityResponse:
    series = TimeSeries(sample_rate=request.sample_rate,
                        values=np.asarray(request.values, dtype=float))
    density = asd(series, window=request.window)
    gyro = request.gyro
    kwargs = {} if gyro is None else {"gyro": gyro}
    eta = noise_floor_sensitivity(density, request.slope, request.band,
                                  mode=request.mode, **kwargs)
    bins = density.band_slice(*request.band)
    floor = float(np.sqrt(np.mean(bins ** 2)))
    return SensitivityResponse(
        frequencies=density.frequencies.tolist(),
        amplitudes=density.amplitudes.tolist(),
        band=request.band,
        mean_floor=floor,
        sensitivity=eta,
        off_resonant=request.off_resonant,
    )


@app.post("/synth/li-curve", response_model=SynthResponse)
def synth_li(request: SynthLiRequest) -> SynthResponse:
    params = request.params.to_params()
    absorber = request.absorber.to_params()
    curve = characteristic_curve(params, absorber, request.currents,
                                 on_resonance=False)
    rows = [(i, p) for i, p in curve]
    if request.noise_fraction > 0.0:
        rng = np.random.default_rng(request.seed)
        rows = [
            (i, p * (1.0 + request.noise_fraction * rng.standard_normal()))
            for i, p in rows
        ]
    return SynthResponse(columns=["i_a", "p_w"], rows=rows)


@app.post("/synth/odmr-trace", response_model=SynthResponse)
def synth_odmr(request: SynthOdmrRequest) -> SynthResponse:
    signal = synth_odmr_trace(
        request.contrast, request.linewidth_fwhm, request.center,
        request.modulation_depth, request.noise_rms, request.grid,
        kappa=request.kappa, dc_power=request.dc_power, seed=request.seed,
    )
    rows = list(zip([float(f) for f in request.grid],
                    [float(s) for s in signal]))
    return SynthResponse(columns=["f_hz", "signal"], rows=rows)


@app.post("/synth/timeseries", response_model=SynthResponse)
def synth_timeseries(request: SynthTimeseriesRequest) -> SynthResponse:
    series = synth_time_series(request.floor_density, request.tones,
                               request.sample_rate, request.duration,
                               seed=request.seed)
    times = series.times()
    rows = list(zip(times.tolist(), series.values.tolist()))
    return SynthResponse(columns=["t_s", "signal"], rows=rows)
