"""Clients for the service API.

``LocalClient`` invokes the endpoint handlers in process (the default
for the command-line tool, no server needed); ``RemoteClient`` posts
the same request models to a running instance and maps error payloads
back onto the package's exception types, so callers behave identically
either way.
"""

from __future__ import annotations

from .. import errors
from ..fitting import FitReport
from .app import (
    analyze_scaling,
    analyze_scan,
    analyze_sensitivity,
    analyze_sweep,
    fit_li as _fit_li,
    fit_odmr_trace as _fit_odmr_trace,
    model_steady_state,
    synth_li as _synth_li,
    synth_odmr as _synth_odmr,
    synth_timeseries as _synth_timeseries,
)
from .schemas import (
    FitLiRequest,
    FitLiResponse,
    FitOdmrRequest,
    FitOdmrResponse,
    ScalingRequest,
    ScalingResponse,
    ScanRequest,
    ScanResponse,
    SensitivityRequest,
    SensitivityResponse,
    SteadyStateRequest,
    OperatingPointModel,
    SweepRequest,
    SweepResponse,
    SynthLiRequest,
    SynthOdmrRequest,
    SynthResponse,
    SynthTimeseriesRequest,
)


class LocalClient:
    """In-process client calling the endpoint handlers directly."""

    def steady_state(self, req: SteadyStateRequest) -> OperatingPointModel:
        return model_steady_state(req)

    def scan(self, req: ScanRequest) -> ScanResponse:
        return analyze_scan(req)

    def sweep(self, req: SweepRequest) -> SweepResponse:
        return analyze_sweep(req)

    def scaling(self, req: ScalingRequest) -> ScalingResponse:
        return analyze_scaling(req)

    def fit_li(self, req: FitLiRequest) -> FitLiResponse:
        return _fit_li(req)

    def fit_odmr(self, req: FitOdmrRequest) -> FitOdmrResponse:
        return _fit_odmr_trace(req)

    def sensitivity(self, req: SensitivityRequest) -> SensitivityResponse:
        return analyze_sensitivity(req)

    def synth_li(self, req: SynthLiRequest) -> SynthResponse:
        return _synth_li(req)

    def synth_odmr(self, req: SynthOdmrRequest) -> SynthResponse:
        return _synth_odmr(req)

    def synth_timeseries(self, req: SynthTimeseriesRequest) -> SynthResponse:
        return _synth_timeseries(req)


def _raise_from_payload(payload: dict) -> None:
    name = payload.get("error", "LicamError")
    exc_type = getattr(errors, name, errors.LicamError)
    exc = exc_type(payload.get("message", "remote error"))
    report = payload.get("report")
    if report is not None:
        exc.report = FitReport(**report)
    raise exc


class RemoteClient:
    """HTTP client posting request models to a running service."""

    def __init__(self, base_url: str, timeout: float = 300.0):
        import httpx

        self._client = httpx.Client(base_url=base_url.rstrip("/"),
                                    timeout=timeout)

    def _post(self, path: str, request, response_model):
        import httpx

        try:
            response = self._client.post(path, json=request.model_dump())
        except httpx.HTTPError as exc:
            raise errors.ConfigError(
                f"service request to {path} failed: {exc}"
            ) from exc
        if response.status_code == 422:
            payload = response.json()
            if "error" in payload:
                _raise_from_payload(payload)
            raise errors.ConfigError(
                f"service rejected the request: {payload.get('detail')}"
            )
        try:
            response.raise_for_status()
        except httpx.HTTPStatusError as exc:
            raise errors.ConfigError(
                f"service returned {response.status_code} for {path}"
            ) from exc
        return response_model.model_validate(response.json())

    def steady_state(self, req: SteadyStateRequest) -> OperatingPointModel:
        return self._post("/model/steady-state", req, OperatingPointModel)

    def scan(self, req: ScanRequest) -> ScanResponse:
        return self._post("/analyze/scan", req, ScanResponse)

    def sweep(self, req: SweepRequest) -> SweepResponse:
        return self._post("/analyze/sweep", req, SweepResponse)

    def scaling(self, req: ScalingRequest) -> ScalingResponse:
        return self._post("/analyze/scaling", req, ScalingResponse)

    def fit_li(self, req: FitLiRequest) -> FitLiResponse:
        return self._post("/fit/li-curve", req, FitLiResponse)

    def fit_odmr(self, req: FitOdmrRequest) -> FitOdmrResponse:
        return self._post("/fit/odmr", req, FitOdmrResponse)

    def sensitivity(self, req: SensitivityRequest) -> SensitivityResponse:
        return self._post("/analyze/sensitivity", req, SensitivityResponse)

    def synth_li(self, req: SynthLiRequest) -> SynthResponse:
        return self._post("/synth/li-curve", req, SynthResponse)

    def synth_odmr(self, req: SynthOdmrRequest) -> SynthResponse:
        return self._post("/synth/odmr-trace", req, SynthResponse)

    def synth_timeseries(self, req: SynthTimeseriesRequest) -> SynthResponse:
        return self._post("/synth/timeseries", req, SynthResponse)
