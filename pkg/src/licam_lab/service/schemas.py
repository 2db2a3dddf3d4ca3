"""Pydantic request/response models of the HTTP service.

These mirror the core dataclasses one-to-one; deep physics validation
stays in the core constructors, which the endpoints invoke, so a bad
request fails with the same diagnostics whether it arrives over HTTP or
from the in-process command-line client.
"""

from __future__ import annotations

from pydantic import BaseModel, Field

from ..enhancement import FigureOfMerit
from ..fitting import FitReport, OdmrFit
from ..model import AbsorberParams, DiodeLaserParams, OperatingPoint
from ..sweep import CurrentScan, ScalingTable, SweepCell


class LaserParamsModel(BaseModel):
    wavelength: float
    group_index: float
    confinement: float
    internal_loss: float
    fca_cross_section: float
    active_thickness: float
    active_width: float
    active_length: float
    cavity_length: float
    petermann_k: float
    internal_efficiency: float
    differential_gain: float
    transparency_density: float
    recomb_at_threshold: float
    recomb_slope: float
    spont_at_threshold: float
    spont_slope: float
    reflectivity_front: float
    reflectivity_rear: float
    spont_background: float
    anchor_density: float | None = None

    def to_params(self) -> DiodeLaserParams:
        return DiodeLaserParams(**self.model_dump())

    @classmethod
    def from_params(cls, params: DiodeLaserParams) -> "LaserParamsModel":
        fields = {name: getattr(params, name) for name in cls.model_fields}
        return cls(**fields)


class AbsorberModel(BaseModel):
    delta_alpha: float
    absorber_length: float
    single_pass_depth: float | None = None

    def to_params(self) -> AbsorberParams:
        return AbsorberParams(**self.model_dump())

    @classmethod
    def from_params(cls, absorber: AbsorberParams) -> "AbsorberModel":
        return cls(delta_alpha=absorber.delta_alpha,
                   absorber_length=absorber.absorber_length,
                   single_pass_depth=absorber.single_pass_depth)


class HealthResponse(BaseModel):
    status: str
    version: str


class SteadyStateRequest(BaseModel):
    params: LaserParamsModel
    absorber: AbsorberModel
    current: float
    on_resonance: bool = True


class OperatingPointModel(BaseModel):
    current: float
    carrier_density: float
    intracavity_power: float
    output_power: float
    carrier_defect: float | None = None

    @classmethod
    def from_point(cls, point: OperatingPoint) -> "OperatingPointModel":
        return cls(current=point.current, carrier_density=point.carrier_density,
                   intracavity_power=point.intracavity_power,
                   output_power=point.output_power,
                   carrier_defect=point.carrier_defect)


class ScanRequest(BaseModel):
    params: LaserParamsModel
    absorber: AbsorberModel
    currents: list[float]
    linewidth_fwhm: float
    gyro: float | None = None
    refine_threshold: bool = Field(
        default=True,
        description="merge geometric refinement points around the threshold",
    )


class FigureOfMeritModel(BaseModel):
    current: float
    effective_depth: float
    contrast: float
    enhancement: float
    output_power_on: float
    snls: float

    @classmethod
    def from_fom(cls, fom: FigureOfMerit) -> "FigureOfMeritModel":
        return cls(current=fom.current, effective_depth=fom.effective_depth,
                   contrast=fom.contrast, enhancement=fom.enhancement,
                   output_power_on=fom.output_power_on, snls=fom.snls)


class ScanRowModel(BaseModel):
    current: float
    power_off: float | None
    power_on: float | None
    fom: FigureOfMeritModel | None
    status: str


class ScanSummaryModel(BaseModel):
    threshold_current: float
    threshold_current_off: float
    peak_enhancement: float | None
    peak_enhancement_current: float | None
    best_snls: float | None
    best_snls_current: float | None


class ScanResponse(BaseModel):
    threshold_current: float
    threshold_current_off: float
    single_pass_depth: float
    rows: list[ScanRowModel]
    summary: ScanSummaryModel

    @classmethod
    def from_scan(cls, scan: CurrentScan) -> "ScanResponse":
        rows = [
            ScanRowModel(
                current=p.current, power_off=p.power_off, power_on=p.power_on,
                fom=FigureOfMeritModel.from_fom(p.fom) if p.fom else None,
                status=p.status,
            )
            for p in scan.points
        ]
        peak_xi = peak_xi_current = best_eta = best_eta_current = None
        for p in scan.points:
            if p.fom is None:
                continue
            if peak_xi is None or p.fom.enhancement > peak_xi:
                peak_xi, peak_xi_current = p.fom.enhancement, p.current
            if p.fom.snls == p.fom.snls and p.fom.snls != float("inf"):
                if best_eta is None or p.fom.snls < best_eta:
                    best_eta, best_eta_current = p.fom.snls, p.current
        return cls(
            threshold_current=scan.threshold_current,
            threshold_current_off=scan.threshold_current_off,
            single_pass_depth=scan.single_pass_depth,
            rows=rows,
            summary=ScanSummaryModel(
                threshold_current=scan.threshold_current,
                threshold_current_off=scan.threshold_current_off,
                peak_enhancement=peak_xi,
                peak_enhancement_current=peak_xi_current,
                best_snls=best_eta,
                best_snls_current=best_eta_current,
            ),
        )


class SweepRequest(BaseModel):
    params: LaserParamsModel
    absorber: AbsorberModel
    g_values: list[float]
    rf_values: list[float]
    current_limit: float
    linewidth_fwhm: float
    gyro: float | None = None
    threads: int = 1


class SweepCellModel(BaseModel):
    differential_gain: float
    reflectivity_front: float
    delta_alpha: float
    optimum_snls: float | None
    optimum_enhancement: float | None
    optimum_current: float | None
    regime: str | None
    status: str

    @classmethod
    def from_cell(cls, cell: SweepCell) -> "SweepCellModel":
        return cls(differential_gain=cell.differential_gain,
                   reflectivity_front=cell.reflectivity_front,
                   delta_alpha=cell.delta_alpha,
                   optimum_snls=cell.optimum_snls,
                   optimum_enhancement=cell.optimum_enhancement,
                   optimum_current=cell.optimum_current,
                   regime=cell.regime, status=cell.status)


class SweepResponse(BaseModel):
    cells: list[SweepCellModel]


class ScalingRequest(BaseModel):
    params: LaserParamsModel
    absorber_length: float
    delta_alphas: list[float]
    current_limits: list[float]
    linewidth_fwhm: float
    gyro: float | None = None


class ScalingPointModel(BaseModel):
    delta_alpha: float
    current_limit: float
    optimum_snls: float | None
    regime: str | None
    local_slope: float | None
    status: str


class ScalingResponse(BaseModel):
    points: list[ScalingPointModel]
    boundaries: dict[str, float | None]

    @classmethod
    def from_table(cls, table: ScalingTable) -> "ScalingResponse":
        return cls(
            points=[ScalingPointModel(
                delta_alpha=p.delta_alpha, current_limit=p.current_limit,
                optimum_snls=p.optimum_snls, regime=p.regime,
                local_slope=p.local_slope, status=p.status,
            ) for p in table.points],
            boundaries={repr(k): v for k, v in table.boundaries.items()},
        )


class FitReportModel(BaseModel):
    parameters: dict[str, float]
    uncertainties: dict[str, float]
    residual_rms: float
    converged: bool
    iterations: int
    derived: dict[str, float] = Field(default_factory=dict)
    warnings: list[str] = Field(default_factory=list)

    @classmethod
    def from_report(cls, report: FitReport) -> "FitReportModel":
        return cls(parameters=report.parameters,
                   uncertainties=report.uncertainties,
                   residual_rms=report.residual_rms,
                   converged=report.converged,
                   iterations=report.iterations,
                   derived=report.derived,
                   warnings=report.warnings)


class FitLiRequest(BaseModel):
    data: list[tuple[float, float]]
    params: LaserParamsModel
    absorber: AbsorberModel | None = None
    init: dict[str, float] | None = None
    noise_rms: list[float] | None = Field(
        default=None,
        description="per-point noise for inverse-variance weighting",
    )


class FitLiResponse(BaseModel):
    report: FitReportModel


class FitOdmrRequest(BaseModel):
    trace: list[tuple[float, float]]
    init: dict[str, float] | None = None
    kappa: float = 1.0
    dc_power: float = 1.0


class OdmrFitModel(BaseModel):
    contrast: float
    linewidth_fwhm: float
    center: float
    zero_crossing_slope: float

    @classmethod
    def from_fit(cls, fit: OdmrFit) -> "OdmrFitModel":
        return cls(contrast=fit.contrast, linewidth_fwhm=fit.linewidth_fwhm,
                   center=fit.center,
                   zero_crossing_slope=fit.zero_crossing_slope)


class FitOdmrResponse(BaseModel):
    fit: OdmrFitModel
    report: FitReportModel


class SensitivityRequest(BaseModel):
    sample_rate: float
    values: list[float]
    slope: float
    band: tuple[float, float]
    gyro: float | None = None
    window: str = "rectangular"
    mode: str = "mean"
    off_resonant: bool = False


class SensitivityResponse(BaseModel):
    frequencies: list[float]
    amplitudes: list[float]
    band: tuple[float, float]
    mean_floor: float
    sensitivity: float
    off_resonant: bool


class SynthLiRequest(BaseModel):
    params: LaserParamsModel
    absorber: AbsorberModel
    currents: list[float]
    noise_fraction: float = 0.0
    seed: int = 0


class SynthOdmrRequest(BaseModel):
    contrast: float
    linewidth_fwhm: float
    center: float
    modulation_depth: float
    noise_rms: float
    grid: list[float]
    kappa: float = 1.0
    dc_power: float = 1.0
    seed: int = 0


class SynthTimeseriesRequest(BaseModel):
    floor_density: float
    tones: list[tuple[float, float]] = Field(default_factory=list)
    sample_rate: float
    duration: float
    seed: int = 0


class SynthResponse(BaseModel):
    columns: list[str]
    rows: list[tuple[float, float]]
