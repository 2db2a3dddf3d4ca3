"""Nonlinear least-squares estimation for laser and resonance data.

A small damped least-squares engine (Levenberg-Marquardt: gradient plus
damped normal equations, damping adapted on residual decrease) drives
four fitters: the characteristic L-I curve, lock-in resonance traces
shaped like the derivative of a Gaussian, log-log power laws, and
double-exponential decays.  All fitters operate on normalized residuals
and unit-scaled parameters so the convergence thresholds are meaningful
in double precision.  Fitters are reentrant and hold no module state;
independent fits may run concurrently.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DataFormatError,
    DegenerateData,
    FlatTrace,
    NoPhysicalRoot,
    NonPositiveInput,
    NoThreshold,
    NotConverged,
)
from .constants import E_CHARGE
from .model import (
    AbsorberParams,
    DiodeLaserParams,
    _assemble_system,
    mirror_loss,
    total_loss,
)

__all__ = [
    "FitReport",
    "OdmrFit",
    "levenberg_marquardt",
    "fit_li_curve",
    "fit_odmr",
    "fit_power_law",
    "fit_double_exponential",
    "DoubleExponential",
]

MAX_ITERATIONS = 500
XTOL = 1e-10
GTOL = 1e-12


@dataclass
class FitReport:
    """Outcome of a least-squares fit.

    ``parameters`` and ``uncertainties`` share keys (the free parameters
    only); values derived from them live in ``derived``.
    """

    parameters: dict[str, float]
    uncertainties: dict[str, float]
    residual_rms: float
    converged: bool
    iterations: int
    derived: dict[str, float] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class OdmrFit:
    """Descriptors of a fitted lock-in magnetic-resonance trace."""

    contrast: float             # dimensionless, (0, 1)
    linewidth_fwhm: float       # Hz
    center: float               # Hz
    zero_crossing_slope: float  # signal units per Hz at the center


class _LMResult:
    __slots__ = ("x", "cov", "cost", "converged", "iterations", "message")

    def __init__(self, x, cov, cost, converged, iterations, message):
        self.x = x
        self.cov = cov
        self.cost = cost
        self.converged = converged
        self.iterations = iterations
        self.message = message


def _numeric_jacobian(residual, x, r0):
    n = x.size
    jac = np.empty((r0.size, n))
    for k in range(n):
        h = 1e-6 * max(abs(x[k]), 1e-3)
        xp = x.copy()
        xm = x.copy()
        xp[k] += h
        xm[k] -= h
        jac[:, k] = (residual(xp) - residual(xm)) / (2.0 * h)
    return jac


def levenberg_marquardt(residual, x0, jacobian=None, max_iterations=MAX_ITERATIONS,
                        xtol=XTOL, gtol=GTOL) -> _LMResult:
    """Minimize sum(residual(x)^2) by damped normal equations.

    ``residual`` maps an n-vector to an m-vector (m >= n) and should be
    normalized so unit-scale residuals are meaningful; ``jacobian`` is
    analytic when available, otherwise central differences are used.
    Converges when the relative parameter step drops below ``xtol`` or
    the gradient infinity-norm below ``gtol``.
    """
    x = np.asarray(x0, dtype=float).copy()
    r = np.asarray(residual(x), dtype=float)
    cost = float(r @ r)
    lam = 1e-3
    message = "iteration cap reached"
    converged = False
    iterations = 0
    jac_fn = jacobian if jacobian is not None else (
        lambda xx: _numeric_jacobian(residual, xx, r)
    )

    for iterations in range(1, max_iterations + 1):
        jac = np.asarray(jac_fn(x), dtype=float)
        grad = jac.T @ r
        if np.max(np.abs(grad)) < gtol:
            converged = True
            message = "gradient below tolerance"
            break
        jtj = jac.T @ jac
        diag = np.diag(jtj).copy()
        diag[diag <= 0.0] = 1.0
        stepped = False
        for _ in range(30):
            try:
                step = np.linalg.solve(jtj + lam * np.diag(diag), -grad)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            r_trial = np.asarray(residual(x + step), dtype=float)
            cost_trial = float(r_trial @ r_trial)
            if np.isfinite(cost_trial) and cost_trial <= cost:
                rel_step = np.max(np.abs(step) / np.maximum(np.abs(x), 1.0))
                x = x + step
                r = r_trial
                cost = cost_trial
                lam = max(lam / 3.0, 1e-14)
                stepped = True
                if rel_step < xtol:
                    converged = True
                    message = "parameter step below tolerance"
                break
            lam *= 10.0
        if converged:
            break
        if not stepped:
            converged = cost < np.finfo(float).eps
            message = "no downhill step found"
            break

    m, n = r.size, x.size
    dof = max(m - n, 1)
    try:
        cov = np.linalg.pinv(jac.T @ jac) * (cost / dof)
    except np.linalg.LinAlgError:
        cov = np.full((n, n), np.nan)
    return _LMResult(x, cov, cost, converged, iterations, message)


def _sorted_xy(data, what):
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise DataFormatError(f"{what} must be an (n, 2) array of pairs")
    order = np.argsort(arr[:, 0], kind="stable")
    return arr[order, 0], arr[order, 1]


# ----------------------------------------------------------------------
# Characteristic L-I curve
# ----------------------------------------------------------------------

def fit_li_curve(data, params: DiodeLaserParams,
                 absorber: AbsorberParams | None = None,
                 init: dict[str, float] | None = None,
                 weights=None) -> FitReport:
    """Extract (eta_i, P_sp, N_th) from a measured characteristic curve.

    ``data`` holds (current A, detected power W) pairs spanning both
    sides of the threshold; ``params`` supplies every fixed quantity
    including the linearization anchors.  The threshold density is
    fitted through the loss it implies, so the derived threshold current
    e*V*R(N_th) moves with it and is reported under ``derived``.
    """
    currents, powers = _sorted_xy(data, "L-I data")
    if currents.size < 10:
        raise DataFormatError("need at least 10 (current, power) points")
    if weights is not None:
        weights = np.asarray(weights, dtype=float)
        if weights.shape != currents.shape or np.any(weights <= 0.0):
            raise DataFormatError("weights must be positive, one per point")
        wroot = np.sqrt(weights / weights.mean())
    else:
        wroot = np.ones_like(currents)

    guess = _li_initial_guess(currents, powers, params)
    if init:
        guess.update({k: float(v) for k, v in init.items()})
        if not all(math.isfinite(v) for v in guess.values()):
            raise DataFormatError("initial guesses must be finite")

    # the loss is held at the configured off-resonance value; the fitted
    # threshold density moves the transparency point implicitly
    if absorber is None:
        absorber = AbsorberParams.transparent()
    alpha = total_loss(params, absorber, on_resonance=False)
    p_scale = max(powers.max(), 1e-30)
    x_scales = np.array([
        max(guess["eta_i"], 1e-3),
        max(abs(guess["p_sp"]), 1e-3 * p_scale),
        guess["n_th"],
    ])

    def curve(theta):
        eta_i, p_sp, n_th = theta
        if eta_i <= 0.0 or n_th <= 0.0:
            return None
        try:
            sys = _assemble_system(params, alpha, internal_efficiency=eta_i,
                                   n_th=n_th)
        except (NoPhysicalRoot, NoThreshold):
            return None
        power, _ = sys.steady_arrays(currents)
        if np.any(np.isnan(power)):
            return None
        return p_sp + params.out_coupling_factor * power

    def residual(xs):
        model = curve(xs * x_scales)
        if model is None:
            return np.full(currents.size, 1e6)
        return wroot * (model - powers) / p_scale

    x0 = np.array([guess["eta_i"], guess["p_sp"], guess["n_th"]]) / x_scales
    res = levenberg_marquardt(residual, x0)
    eta_i, p_sp, n_th = res.x * x_scales
    sigmas = np.sqrt(np.maximum(np.diag(res.cov), 0.0)) * x_scales
    model = curve(res.x * x_scales)
    rms = float(np.sqrt(np.mean((model - powers) ** 2))) if model is not None \
        else float("nan")
    i_th = E_CHARGE * params.active_volume * params.recombination_rate(n_th)
    report = FitReport(
        parameters={"eta_i": float(eta_i), "p_sp_w": float(p_sp),
                    "n_th_per_m3": float(n_th)},
        uncertainties={"eta_i": float(sigmas[0]), "p_sp_w": float(sigmas[1]),
                       "n_th_per_m3": float(sigmas[2])},
        residual_rms=rms,
        converged=res.converged,
        iterations=res.iterations,
        derived={"i_th_a": float(i_th)},
    )
    if not res.converged:
        exc = NotConverged(f"L-I fit did not converge: {res.message}")
        exc.report = report
        raise exc
    return report


def _li_initial_guess(currents, powers, params):
    """Deterministic data-driven starting point for the L-I fit."""
    n = currents.size
    low = max(n // 10, 2)
    p_sp0 = float(np.mean(np.sort(powers)[:low]))

    top = currents >= currents[0] + 0.7 * (currents[-1] - currents[0])
    if top.sum() < 3:
        top = np.zeros_like(top)
        top[-3:] = True
    slope_hi = float(np.polyfit(currents[top], powers[top], 1)[0])
    bottom = currents <= currents[0] + 0.4 * (currents[-1] - currents[0])
    slope_lo = float(np.polyfit(currents[bottom], powers[bottom], 1)[0]) \
        if bottom.sum() >= 3 else 0.0
    span = (powers.max() - powers.min()) / max(currents[-1] - currents[0], 1e-30)
    if slope_hi <= 3.0 * max(slope_lo, 0.0) + 1e-9 * span:
        raise DegenerateData(
            "characteristic curve shows no lasing branch: the upper-segment "
            "slope does not exceed the below-threshold slope"
        )

    # knee from the largest second difference of the background-subtracted
    # log power; in log space the knee dominates any multiplicative noise
    floor = max(1e-3 * (powers.max() - p_sp0), 1e-30)
    z = np.log(np.maximum(powers - p_sp0, floor))
    d2 = np.gradient(np.gradient(z, currents), currents)
    knee = int(np.argmax(d2[1:n - 1])) + 1
    # the lasing branch must rise well above the knee, otherwise the data
    # are below-threshold only and the efficiency is unidentifiable
    rise = (powers.max() - p_sp0) / max(powers[knee] - p_sp0, floor)
    if knee < 3 or knee > n - 4 or rise < 5.0:
        raise DegenerateData(
            "no threshold knee inside the current range; "
            "internal efficiency is unidentifiable from below-threshold data"
        )
    i_th0 = float(currents[knee])

    n_th0 = params.anchor_density + (
        i_th0 / (E_CHARGE * params.active_volume) - params.recomb_at_threshold
    ) / params.recomb_slope
    if n_th0 <= 0.0:
        n_th0 = params.anchor_density
    alpha0 = params.internal_loss + mirror_loss(params)
    b0 = alpha0 + params.confinement * params.fca_cross_section * n_th0
    eta0 = slope_hi * E_CHARGE * params.active_length * b0 / (
        params.out_coupling_factor * params.photon_energy
    )
    eta0 = min(max(eta0, 0.01), 1.0)
    return {"eta_i": eta0, "p_sp": p_sp0, "n_th": n_th0}


# ----------------------------------------------------------------------
# Lock-in resonance trace (derivative of a Gaussian)
# ----------------------------------------------------------------------

def _odmr_model(freqs, amplitude, center, sigma, baseline):
    t = freqs - center
    envelope = np.exp(-t * t / (2.0 * sigma * sigma))
    return amplitude * (-t) / (sigma * sigma) * envelope + baseline


def _odmr_jacobian(freqs, amplitude, center, sigma, baseline):
    t = freqs - center
    s2 = sigma * sigma
    envelope = np.exp(-t * t / (2.0 * s2))
    d_amp = (-t) / s2 * envelope
    d_center = amplitude / s2 * envelope * (1.0 - t * t / s2)
    d_sigma = -amplitude * t * envelope / (sigma * s2) * (t * t / s2 - 2.0)
    d_base = np.ones_like(freqs)
    return np.column_stack([d_amp, d_center, d_sigma, d_base])


def fit_odmr(trace, init: dict[str, float] | None = None, kappa: float = 1.0,
             dc_power: float = 1.0) -> tuple[OdmrFit, FitReport]:
    """Fit a lock-in resonance trace with the derivative of a Gaussian.

    The model is s(f) = A*(f0 - f)/sigma^2 * exp(-(f - f0)^2/(2 sigma^2)) + b.
    Reported linewidth is the Gaussian FWHM 2*sqrt(2 ln 2)*sigma, and the
    contrast follows the lock-in calibration C = kappa * (fitted
    peak-to-peak) / dc_power.
    """
    freqs, signal = _sorted_xy(trace, "resonance trace")
    if freqs.size < 20:
        raise DataFormatError("need at least 20 trace points")
    if kappa <= 0.0 or dc_power <= 0.0:
        raise NonPositiveInput("kappa and dc_power must be positive")

    ptp = float(signal.max() - signal.min())
    second = np.abs(np.diff(signal, n=2))
    noise = 1.4826 * float(np.median(second)) / math.sqrt(6.0) if second.size else 0.0
    if ptp <= 6.0 * noise:
        raise FlatTrace("no resonance above the trace noise")

    guess = _odmr_initial_guess(freqs, signal)
    if init:
        guess.update({k: float(v) for k, v in init.items()})

    span = freqs[-1] - freqs[0]
    sig_scale = max(ptp, 1e-30)
    x_scales = np.array([
        max(abs(guess["amplitude"]), 1e-3 * sig_scale * span),
        max(abs(guess["center"]), span),
        max(abs(guess["sigma"]), 1e-3 * span),
        max(abs(guess["baseline"]), 1e-3 * sig_scale),
    ])

    def residual(xs):
        a, f0, sg, b = xs * x_scales
        return (_odmr_model(freqs, a, f0, sg, b) - signal) / sig_scale

    def jacobian(xs):
        a, f0, sg, b = xs * x_scales
        return _odmr_jacobian(freqs, a, f0, sg, b) * (x_scales / sig_scale)

    x0 = np.array([guess["amplitude"], guess["center"], guess["sigma"],
                   guess["baseline"]]) / x_scales
    res = levenberg_marquardt(residual, x0, jacobian=jacobian)
    amplitude, center, sigma, baseline = res.x * x_scales
    sigma = abs(sigma)
    sigmas = np.sqrt(np.maximum(np.diag(res.cov), 0.0)) * x_scales
    model = _odmr_model(freqs, amplitude, center, sigma, baseline)
    rms = float(np.sqrt(np.mean((model - signal) ** 2)))

    ptp_fit = 2.0 * abs(amplitude) * math.exp(-0.5) / sigma
    contrast = kappa * ptp_fit / dc_power
    report = FitReport(
        parameters={"amplitude": float(amplitude), "center_hz": float(center),
                    "sigma_hz": float(sigma), "baseline": float(baseline)},
        uncertainties={"amplitude": float(sigmas[0]), "center_hz": float(sigmas[1]),
                       "sigma_hz": float(sigmas[2]), "baseline": float(sigmas[3])},
        residual_rms=rms,
        converged=res.converged,
        iterations=res.iterations,
        derived={"contrast": float(contrast),
                 "linewidth_fwhm_hz": float(2.0 * math.sqrt(2.0 * math.log(2.0)) * sigma),
                 "zero_crossing_slope": float(-amplitude / (sigma * sigma))},
    )
    if not res.converged:
        exc = NotConverged(f"resonance fit did not converge: {res.message}")
        exc.report = report
        raise exc
    if not freqs[0] <= center <= freqs[-1]:
        exc = NotConverged("fitted center lies outside the trace span")
        exc.report = report
        raise exc
    fit = OdmrFit(
        contrast=contrast,
        linewidth_fwhm=report.derived["linewidth_fwhm_hz"],
        center=float(center),
        zero_crossing_slope=report.derived["zero_crossing_slope"],
    )
    return fit, report


def _odmr_initial_guess(freqs, signal):
    baseline = float(np.median(signal))
    detrended = signal - baseline
    imax = int(np.argmax(detrended))
    imin = int(np.argmin(detrended))
    span = freqs[-1] - freqs[0]
    sigma = abs(freqs[imin] - freqs[imax]) / 2.0
    if sigma <= 0.0:
        sigma = span / 6.0
    center = (freqs[imax] + freqs[imin]) / 2.0
    ptp = float(detrended.max() - detrended.min())
    amplitude = ptp * sigma * math.exp(0.5) / 2.0
    if freqs[imax] > freqs[imin]:
        amplitude = -amplitude
    return {"amplitude": amplitude, "center": center, "sigma": sigma,
            "baseline": baseline}


# ----------------------------------------------------------------------
# Power law (log-log linear regression)
# ----------------------------------------------------------------------

def fit_power_law(points) -> tuple[float, FitReport]:
    """Least-squares exponent of y = c * x^k from strictly positive pairs."""
    x, y = _sorted_xy(points, "power-law points")
    if x.size < 3:
        raise DataFormatError("need at least 3 points")
    if np.any(x <= 0.0) or np.any(y <= 0.0):
        raise NonPositiveInput("power-law points must be strictly positive")
    lx, ly = np.log(x), np.log(y)
    sxx = float(np.sum((lx - lx.mean()) ** 2))
    if sxx < 1e-24 * x.size:
        raise DegenerateData("all abscissae equal; exponent unidentifiable")
    slope = float(np.sum((lx - lx.mean()) * (ly - ly.mean())) / sxx)
    intercept = float(ly.mean() - slope * lx.mean())
    fitted = intercept + slope * lx
    ssr = float(np.sum((ly - fitted) ** 2))
    dof = max(x.size - 2, 1)
    se_slope = math.sqrt(ssr / dof / sxx)
    se_intercept = math.sqrt(ssr / dof * (1.0 / x.size + lx.mean() ** 2 / sxx))
    report = FitReport(
        parameters={"exponent": slope, "log_prefactor": intercept},
        uncertainties={"exponent": se_slope, "log_prefactor": se_intercept},
        residual_rms=math.sqrt(ssr / x.size),
        converged=True,
        iterations=1,
        derived={"prefactor": math.exp(intercept)},
    )
    return slope, report


# ----------------------------------------------------------------------
# Double-exponential decay
# ----------------------------------------------------------------------

class DoubleExponential:
    """Evaluator for a1*exp(-x/t1) + a2*exp(-x/t2) + c fitted to data.

    Calls outside the fitted abscissa range are answered but flagged
    with a warning, since the extrapolated decay is unconstrained.
    """

    def __init__(self, a1, t1, a2, t2, c, x_min, x_max):
        self.a1, self.t1, self.a2, self.t2, self.c = a1, t1, a2, t2, c
        self.x_min, self.x_max = x_min, x_max

    def in_range(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all((x >= self.x_min) & (x <= self.x_max)))

    def __call__(self, x):
        if not self.in_range(x):
            warnings.warn(
                f"evaluating outside the fitted range "
                f"[{self.x_min:.6g}, {self.x_max:.6g}]",
                stacklevel=2,
            )
        x = np.asarray(x, dtype=float)
        value = (self.a1 * np.exp(-x / self.t1)
                 + self.a2 * np.exp(-x / self.t2) + self.c)
        return float(value) if value.ndim == 0 else value


def _double_exp_model(x, a1, t1, a2, t2, c):
    return a1 * np.exp(-x / t1) + a2 * np.exp(-x / t2) + c


def fit_double_exponential(points) -> tuple[FitReport, DoubleExponential]:
    """Fit y = a1*exp(-x/t1) + a2*exp(-x/t2) + c and return an evaluator.

    Time constants are seeded by a coarse grid with the amplitudes
    solved linearly at each node, then polished by damped least squares
    with an analytic Jacobian.  A warning is attached when the two time
    constants agree within 5 percent (the split is then unidentifiable).
    """
    x, y = _sorted_xy(points, "decay points")
    if x.size < 6:
        raise DataFormatError("need at least 6 points")
    span = max(x[-1] - x[0], 1e-30)
    y_scale = max(float(np.max(np.abs(y))), 1e-30)

    # variable-projection initialization over a log grid of (t1, t2)
    taus = np.geomspace(span / 30.0, 3.0 * span, 8)
    best = None
    for i, t1 in enumerate(taus):
        for t2 in taus[i + 1:]:
            basis = np.column_stack([
                np.exp(-x / t1), np.exp(-x / t2), np.ones_like(x)
            ])
            coef, *_ = np.linalg.lstsq(basis, y, rcond=None)
            ssr = float(np.sum((basis @ coef - y) ** 2))
            if best is None or ssr < best[0]:
                best = (ssr, coef[0], t1, coef[1], t2, coef[2])
    _, a1_0, t1_0, a2_0, t2_0, c0 = best

    x_scales = np.array([
        max(abs(a1_0), 1e-3 * y_scale), t1_0,
        max(abs(a2_0), 1e-3 * y_scale), t2_0,
        max(abs(c0), 1e-3 * y_scale),
    ])

    def residual(xs):
        a1, t1, a2, t2, c = xs * x_scales
        if t1 <= 0.0 or t2 <= 0.0:
            return np.full(x.size, 1e6)
        return (_double_exp_model(x, a1, t1, a2, t2, c) - y) / y_scale

    def jacobian(xs):
        a1, t1, a2, t2, c = xs * x_scales
        e1 = np.exp(-x / t1)
        e2 = np.exp(-x / t2)
        cols = np.column_stack([
            e1, a1 * e1 * x / (t1 * t1), e2, a2 * e2 * x / (t2 * t2),
            np.ones_like(x),
        ])
        return cols * (x_scales / y_scale)

    x0 = np.array([a1_0, t1_0, a2_0, t2_0, c0]) / x_scales
    res = levenberg_marquardt(residual, x0, jacobian=jacobian)
    a1, t1, a2, t2, c = res.x * x_scales
    if t1 > t2:  # deterministic ordering of the two branches
        a1, t1, a2, t2 = a2, t2, a1, t1
    sigmas = np.sqrt(np.maximum(np.diag(res.cov), 0.0)) * x_scales
    model = _double_exp_model(x, a1, t1, a2, t2, c)
    rms = float(np.sqrt(np.mean((model - y) ** 2)))
    report = FitReport(
        parameters={"a1": float(a1), "t1": float(t1), "a2": float(a2),
                    "t2": float(t2), "c": float(c)},
        uncertainties={"a1": float(sigmas[0]), "t1": float(sigmas[1]),
                       "a2": float(sigmas[2]), "t2": float(sigmas[3]),
                       "c": float(sigmas[4])},
        residual_rms=rms,
        converged=res.converged,
        iterations=res.iterations,
    )
    if abs(t1 - t2) <= 0.05 * max(abs(t1), abs(t2)):
        message = "time constants agree within 5%; the split is unidentifiable"
        report.warnings.append(message)
        warnings.warn(message, stacklevel=2)
    if not res.converged:
        exc = NotConverged(f"double-exponential fit did not converge: {res.message}")
        exc.report = report
        raise exc
    evaluator = DoubleExponential(a1, t1, a2, t2, c, float(x[0]), float(x[-1]))
    return report, evaluator
