"""Current scans of figures of merit and parameter sweeps with
current-limit-aware optimum extraction and regime classification.

A scan solves the off- and on-resonance steady states over a current
grid that is geometrically refined around the threshold (both figures
of merit vary fastest there), converts the power pair into effective
depth, contrast, enhancement and shot-noise-limited sensitivity, and an
optimizer picks the best sensitivity below a current limit, labelling
whether the optimum sits below threshold, at threshold, or at the
current limit.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .constants import GYROMAGNETIC_HZ_PER_T
from .enhancement import FigureOfMerit, snls
from .errors import ConfigError, EmptyScan, LicamError
from .model import (
    AbsorberParams,
    DiodeLaserParams,
    linearize,
    output_power,
)

__all__ = [
    "ScanConfig",
    "ScanPoint",
    "CurrentScan",
    "SweepCell",
    "ScalingPoint",
    "ScalingTable",
    "build_scan_currents",
    "scan_current",
    "optimize_over_current",
    "sweep_grid",
    "scaling_exponents",
    "REGIME_BELOW_THRESHOLD",
    "REGIME_AT_THRESHOLD",
    "REGIME_AT_CURRENT_LIMIT",
]

REGIME_BELOW_THRESHOLD = "BelowThreshold"
REGIME_AT_THRESHOLD = "AtThreshold"
REGIME_AT_CURRENT_LIMIT = "AtCurrentLimit"


@dataclass(frozen=True)
class ScanConfig:
    """Spectroscopic inputs and grid construction knobs for scans.

    The resonance linewidth is a fixed configured input; scans vary chip
    parameters, not the spin resonance.
    """

    linewidth_fwhm: float                    # Hz, used in the sensitivity
    gyro: float = GYROMAGNETIC_HZ_PER_T      # Hz/T
    n_coarse: int = 61                       # uniform background grid points
    n_refine: int = 50                       # extra points near threshold
    refine_span: float = 0.05                # fractional half-width around I_th
    refine_floor: float = 1e-7               # smallest fractional offset

    def __post_init__(self):
        if self.linewidth_fwhm <= 0.0 or self.gyro <= 0.0:
            raise ConfigError("linewidth_fwhm and gyro must be positive")
        if self.n_coarse < 2 or self.n_refine < 0:
            raise ConfigError("need at least 2 coarse grid points")
        if not 0.0 < self.refine_floor < self.refine_span < 1.0:
            raise ConfigError("need 0 < refine_floor < refine_span < 1")


@dataclass(frozen=True)
class ScanPoint:
    """One scan current with its figures of merit, or an error status.

    ``power_off``/``power_on`` are the intracavity powers of the
    transparent and absorbing configurations, the pair whose log ratio
    forms the effective depth.
    """

    current: float
    fom: FigureOfMerit | None
    status: str = "ok"
    power_off: float | None = None
    power_on: float | None = None


@dataclass(frozen=True)
class CurrentScan:
    """Figures of merit along a strictly ascending current grid.

    ``threshold_current`` is the threshold of the absorbing
    (on-resonance) configuration, where the enhancement peaks; it
    coincides with the conventional lasing threshold as the absorption
    vanishes.
    """

    currents: np.ndarray
    points: list[ScanPoint]
    threshold_current: float
    threshold_current_off: float
    single_pass_depth: float

    @property
    def figures(self) -> list[FigureOfMerit]:
        return [p.fom for p in self.points if p.fom is not None]

    def array(self, attr: str) -> np.ndarray:
        """Per-point attribute with NaN at failed currents."""
        return np.array([
            getattr(p.fom, attr) if p.fom is not None else math.nan
            for p in self.points
        ])


@dataclass(frozen=True)
class SweepCell:
    """Optimum of one (differential gain, front reflectivity) grid cell."""

    differential_gain: float
    reflectivity_front: float
    delta_alpha: float
    optimum_snls: float | None
    optimum_enhancement: float | None
    optimum_current: float | None
    regime: str | None
    status: str = "ok"


@dataclass(frozen=True)
class ScalingPoint:
    delta_alpha: float
    current_limit: float
    optimum_snls: float | None
    regime: str | None
    local_slope: float | None
    status: str = "ok"


@dataclass(frozen=True)
class ScalingTable:
    points: list[ScalingPoint]
    # per current limit: first absorption constant where the local
    # log-log slope changes sign, None when no transition is seen
    boundaries: dict[float, float | None] = field(default_factory=dict)


def build_scan_currents(params: DiodeLaserParams, absorber: AbsorberParams,
                        current_max: float, config: ScanConfig) -> np.ndarray:
    """Coarse uniform grid plus geometric refinement around the threshold.

    Extra points are log-spaced in fractional distance from the off- and
    on-resonance thresholds down to a floor that resolves both the
    threshold knee width and the on/off threshold gap, with the two
    thresholds and the gap midpoint included exactly.
    """
    if current_max <= 0.0:
        raise ConfigError("current_max must be positive")
    lin_off = linearize(params, absorber, False)
    lin_on = linearize(params, absorber, True)
    coarse = np.linspace(current_max / config.n_coarse, current_max,
                         config.n_coarse)
    i_lo, i_hi = lin_off.i_th, lin_on.i_th
    if i_lo > current_max:
        return coarse
    gap = (i_hi - i_lo) / i_lo
    floor = max(config.refine_floor, gap, lin_on.knee_width)
    if floor >= config.refine_span:
        return np.unique(np.concatenate([coarse, [i_lo, i_hi]]))
    per_side = max((config.n_refine - 3) // 2, 1)
    offsets = np.geomspace(floor, config.refine_span, per_side)
    extra = np.concatenate([
        i_lo * (1.0 - offsets),
        i_hi * (1.0 + offsets),
        [i_lo, i_hi, 0.5 * (i_lo + i_hi)],
    ])
    extra = extra[(extra > 0.0) & (extra <= current_max)]
    return np.unique(np.concatenate([coarse, extra]))


def scan_current(params: DiodeLaserParams, absorber: AbsorberParams,
                 currents, config: ScanConfig,
                 on_error: str = "raise") -> CurrentScan:
    """Figures of merit over a current grid.

    For each current the off- and on-resonance steady states give the
    effective depth tau_r + ln(P_off/P_on) from the intracavity powers,
    hence contrast and enhancement; the sensitivity uses the on-resonance
    detected power and the configured linewidth.  A transparent absorber
    (zero single-pass depth) yields unit enhancement and zero contrast.
    With ``on_error="mask"`` failing currents become status-tagged
    points instead of raising.
    """
    currents = np.asarray(currents, dtype=float)
    if currents.size == 0:
        raise ConfigError("currents must be non-empty")
    if np.any(currents <= 0.0) or np.any(np.diff(currents) <= 0.0):
        raise ConfigError("currents must be strictly ascending and positive")
    if on_error not in ("raise", "mask"):
        raise ConfigError("on_error must be 'raise' or 'mask'")
    lin_off = linearize(params, absorber, False)
    lin_on = linearize(params, absorber, True)
    p_off, _ = lin_off.steady_arrays(currents)
    p_on, _ = lin_on.steady_arrays(currents)
    tau_r = absorber.single_pass_depth

    points: list[ScanPoint] = []
    for i, current in enumerate(currents):
        po, pn = p_off[i], p_on[i]
        if math.isnan(po) or math.isnan(pn) or po <= 0.0 or pn <= 0.0:
            if on_error == "raise":
                raise EmptyScan(
                    f"no physical steady state at I = {current:.6g} A"
                )
            points.append(ScanPoint(current=float(current), fom=None,
                                    status="no_physical_root",
                                    power_off=None, power_on=None))
            continue
        if tau_r > 0.0:
            tau_eff = tau_r + math.log(po / pn)
            contrast = -math.expm1(-tau_eff)
            xi = tau_eff / tau_r
        else:
            tau_eff = 0.0
            contrast = 0.0
            xi = 1.0
        out_on = output_power(params, pn)
        if contrast > 0.0 and out_on > 0.0:
            eta = snls(contrast, config.linewidth_fwhm, out_on,
                       params.wavelength, config.gyro)
        else:
            eta = math.inf
        points.append(ScanPoint(
            current=float(current),
            fom=FigureOfMerit(
                current=float(current), effective_depth=tau_eff,
                contrast=contrast, enhancement=xi,
                output_power_on=float(out_on), snls=eta,
            ),
            power_off=float(po), power_on=float(pn),
        ))
    return CurrentScan(
        currents=currents, points=points,
        threshold_current=lin_on.i_th, threshold_current_off=lin_off.i_th,
        single_pass_depth=tau_r,
    )


def _within_one_grid_step(currents: np.ndarray, idx: int, target: float) -> bool:
    """True when grid index ``idx`` is at most one point away from the
    grid point nearest ``target``."""
    nearest = int(np.argmin(np.abs(currents - target)))
    return abs(idx - nearest) <= 1


def optimize_over_current(scan: CurrentScan, current_limit: float) -> SweepCell:
    """Best sensitivity at currents up to the limit, with its regime.

    BelowThreshold when the absorbing configuration cannot lase within
    the limit (optimum fields are then undefined); AtThreshold when the
    optimizing current lies within one grid step of the threshold;
    AtCurrentLimit when it is the last usable grid point.
    """
    if current_limit <= 0.0:
        raise ConfigError("current_limit must be positive")
    if scan.currents[-1] < current_limit * (1.0 - 1e-12):
        raise ConfigError(
            f"scan reaches {scan.currents[-1]:.6g} A, below the "
            f"current limit {current_limit:.6g} A"
        )
    usable = [
        (i, p) for i, p in enumerate(scan.points)
        if p.current <= current_limit * (1.0 + 1e-12)
    ]
    if not usable:
        raise EmptyScan("no scan points at or below the current limit")

    if scan.threshold_current > current_limit:
        return SweepCell(
            differential_gain=math.nan, reflectivity_front=math.nan,
            delta_alpha=math.nan, optimum_snls=None,
            optimum_enhancement=None, optimum_current=None,
            regime=REGIME_BELOW_THRESHOLD,
        )

    best_idx = None
    best_eta = math.inf
    best_xi = -math.inf
    for i, point in usable:
        if point.fom is None:
            continue
        if point.fom.snls < best_eta:
            best_eta = point.fom.snls
            best_idx = i
        if point.fom.enhancement > best_xi:
            best_xi = point.fom.enhancement
    if best_idx is None or not math.isfinite(best_eta):
        raise EmptyScan("no usable sensitivity values below the current limit")

    last_idx = usable[-1][0]
    if _within_one_grid_step(scan.currents, best_idx, scan.threshold_current):
        regime = REGIME_AT_THRESHOLD
    elif best_idx == last_idx:
        regime = REGIME_AT_CURRENT_LIMIT
    else:
        # should not occur for the dip-plus-monotone sensitivity shape;
        # attribute to the nearer feature in log-current distance
        i_opt = scan.currents[best_idx]
        d_th = abs(math.log(i_opt / scan.threshold_current))
        d_cl = abs(math.log(i_opt / scan.currents[last_idx]))
        regime = REGIME_AT_THRESHOLD if d_th <= d_cl else REGIME_AT_CURRENT_LIMIT
    return SweepCell(
        differential_gain=math.nan, reflectivity_front=math.nan,
        delta_alpha=math.nan, optimum_snls=best_eta,
        optimum_enhancement=best_xi,
        optimum_current=float(scan.currents[best_idx]), regime=regime,
    )


def _evaluate_cell(base: DiodeLaserParams, gain: float, reflectivity: float,
                   absorber: AbsorberParams, current_limit: float,
                   config: ScanConfig) -> SweepCell:
    try:
        params = dataclasses.replace(
            base, differential_gain=gain, reflectivity_front=reflectivity
        )
        currents = build_scan_currents(params, absorber, current_limit, config)
        scan = scan_current(params, absorber, currents, config, on_error="mask")
        cell = optimize_over_current(scan, current_limit)
        return dataclasses.replace(
            cell, differential_gain=gain, reflectivity_front=reflectivity,
            delta_alpha=absorber.delta_alpha,
        )
    except LicamError as exc:
        return SweepCell(
            differential_gain=gain, reflectivity_front=reflectivity,
            delta_alpha=absorber.delta_alpha, optimum_snls=None,
            optimum_enhancement=None, optimum_current=None, regime=None,
            status=f"{type(exc).__name__}: {exc}",
        )


def sweep_grid(base: DiodeLaserParams, g_values, rf_values,
               absorber: AbsorberParams, current_limit: float,
               config: ScanConfig, threads: int = 1) -> list[SweepCell]:
    """Cartesian sweep over differential gain and front reflectivity.

    Cells are independent and evaluated in row-major order over
    (g, R_f); per-cell failures are recorded in the cell status and
    never abort the grid.  Results are keyed by grid position, so the
    thread count does not change the output.
    """
    g_values = [float(g) for g in np.atleast_1d(g_values)]
    rf_values = [float(r) for r in np.atleast_1d(rf_values)]
    if not g_values or not rf_values:
        raise ConfigError("both sweep grids must be non-empty")
    tasks = [(g, rf) for g in g_values for rf in rf_values]
    if threads <= 1:
        return [
            _evaluate_cell(base, g, rf, absorber, current_limit, config)
            for g, rf in tasks
        ]
    cells: list[SweepCell | None] = [None] * len(tasks)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = {
            pool.submit(_evaluate_cell, base, g, rf, absorber,
                        current_limit, config): k
            for k, (g, rf) in enumerate(tasks)
        }
        for future, k in futures.items():
            cells[k] = future.result()
    return cells  # type: ignore[return-value]


def scaling_exponents(base: DiodeLaserParams, absorber_length: float,
                      delta_alphas, current_limits,
                      config: ScanConfig) -> ScalingTable:
    """Optimum sensitivity versus absorption constant and current limit.

    Requires at least 4 absorption values per probed decade.  Local
    log-log slopes use centered differences along each current-limit
    series; the reported boundary per limit is the first absorption
    constant where the slope changes sign (a scaling-regime transition).
    Zero absorption carries no contrast and is rejected per point.
    """
    delta_alphas = np.asarray(sorted(float(d) for d in np.atleast_1d(delta_alphas)))
    current_limits = [float(c) for c in np.atleast_1d(current_limits)]
    if delta_alphas.size < 2 or not current_limits:
        raise ConfigError("need at least two absorption values and one limit")
    positive = delta_alphas[delta_alphas > 0.0]
    if positive.size >= 2:
        decades = math.log10(positive[-1] / positive[0])
        if decades > 0 and positive.size / decades < 4.0:
            raise ConfigError(
                "need at least 4 absorption values per probed decade"
            )

    i_max = max(current_limits)
    points: list[ScalingPoint] = []
    per_limit: dict[float, list[tuple[float, float | None, str | None]]] = {
        c: [] for c in current_limits
    }
    for d_alpha in delta_alphas:
        if d_alpha <= 0.0:
            for limit in current_limits:
                points.append(ScalingPoint(
                    delta_alpha=float(d_alpha), current_limit=limit,
                    optimum_snls=None, regime=None, local_slope=None,
                    status="InvalidContrast: zero absorption carries no contrast",
                ))
                per_limit[limit].append((float(d_alpha), None, None))
            continue
        absorber = AbsorberParams(delta_alpha=float(d_alpha),
                                  absorber_length=absorber_length)
        try:
            currents = build_scan_currents(base, absorber, i_max, config)
            scan = scan_current(base, absorber, currents, config,
                                on_error="mask")
        except LicamError as exc:
            for limit in current_limits:
                points.append(ScalingPoint(
                    delta_alpha=float(d_alpha), current_limit=limit,
                    optimum_snls=None, regime=None, local_slope=None,
                    status=f"{type(exc).__name__}: {exc}",
                ))
                per_limit[limit].append((float(d_alpha), None, None))
            continue
        for limit in current_limits:
            try:
                cell = optimize_over_current(scan, limit)
                eta = cell.optimum_snls
                regime = cell.regime
                status = "ok" if eta is not None else "below_threshold"
            except LicamError as exc:
                eta, regime = None, None
                status = f"{type(exc).__name__}: {exc}"
            points.append(ScalingPoint(
                delta_alpha=float(d_alpha), current_limit=limit,
                optimum_snls=eta, regime=regime, local_slope=None,
                status=status,
            ))
            per_limit[limit].append((float(d_alpha), eta, regime))

    # centered log-log slopes and the slope-sign-change boundary
    boundaries: dict[float, float | None] = {}
    slope_map: dict[tuple[float, float], float] = {}
    for limit, series in per_limit.items():
        xs = [d for d, eta, _ in series if eta is not None and eta > 0.0]
        ys = [eta for _, eta, _ in series if eta is not None and eta > 0.0]
        boundary = None
        prev_slope = None
        for k in range(1, len(xs) - 1):
            slope = (math.log(ys[k + 1]) - math.log(ys[k - 1])) / (
                math.log(xs[k + 1]) - math.log(xs[k - 1])
            )
            slope_map[(limit, xs[k])] = slope
            if prev_slope is not None and boundary is None \
                    and math.copysign(1.0, slope) != math.copysign(1.0, prev_slope):
                boundary = xs[k]
            prev_slope = slope
        boundaries[limit] = boundary

    points = [
        dataclasses.replace(
            pt, local_slope=slope_map.get((pt.current_limit, pt.delta_alpha))
        )
        for pt in points
    ]
    return ScalingTable(points=points, boundaries=boundaries)
