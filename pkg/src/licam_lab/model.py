"""Lumped single-mode diode laser with an intracavity absorber.

The laser is described by two coupled rate equations for the average
optical power P in the cavity and the excess carrier density N:

    (1/v_g) dP/dt = [G(N) - alpha - Gamma*sigma*N] * P
                    + K * v_g * hbar*omega * Gamma * r_sp(N) / l
    dN/dt         = I/(e*d*W*l) - R(N) - G(N) * P / (eta_i * d * W * hbar*omega)

with the modal gain G(N) = Gamma * g * (N - N_tr) linear through
transparency, and the recombination rate R(N) and spontaneous emission
rate r_sp(N) linearized around a stored anchor carrier density (the
threshold density of the calibration configuration).  Setting both time
derivatives to zero and eliminating N yields a quadratic in P whose
non-negative branch is the closed-form steady state; a batched adaptive
Runge-Kutta integrator provides an independent transient route to the
same fixed point for cross-checking.

All per-unit-length constants are interpreted over the effective cavity
group length ``cavity_length``; mirror loss is distributed as
-ln(Rf*Rr)/(2*L_cav) and the absorber contributes
delta_alpha*l_abs/L_cav when on resonance.

Every operation is a pure function of immutable inputs; parameter sets
and operating points can be shared freely across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import C_LIGHT, E_CHARGE, photon_energy
from .errors import ConfigError, NoPhysicalRoot, NoThreshold, NotConverged

__all__ = [
    "DiodeLaserParams",
    "AbsorberParams",
    "OperatingPoint",
    "Trajectory",
    "modal_gain",
    "mirror_loss",
    "total_loss",
    "threshold_carrier_density",
    "threshold_current",
    "steady_state",
    "stationarity_residuals",
    "integrate_transient",
    "output_power",
    "characteristic_curve",
]


def _require_positive(name, value):
    if not (value > 0.0) or not math.isfinite(value):
        raise ConfigError(f"{name} must be strictly positive, got {value!r}")


@dataclass(frozen=True)
class DiodeLaserParams:
    """Physical constants of the lumped single-mode laser cavity.

    Lengths in m, areas in m^2, densities in 1/m^3, rates in the units
    noted below.  ``anchor_density`` is the carrier density at which
    ``recomb_at_threshold``/``recomb_slope`` and the spontaneous pair
    are evaluated; when omitted it is computed at construction as the
    threshold density for the off-resonance loss of this parameter set.
    Derived parameter sets built with :func:`dataclasses.replace` keep
    the stored anchor, so the calibrated R(N) and r_sp(N) lines stay
    fixed while losses or gain are varied.
    """

    wavelength: float            # emission wavelength, m
    group_index: float           # n_g, group velocity = c / n_g
    confinement: float           # optical confinement factor, (0, 1]
    internal_loss: float         # distributed non-mirror loss, 1/m
    fca_cross_section: float     # free-carrier absorption cross-section, m^2
    active_thickness: float      # d, m
    active_width: float          # W, m
    active_length: float         # l, m
    cavity_length: float         # effective cavity group length, m
    petermann_k: float           # excess spontaneous emission factor, >= 1
    internal_efficiency: float   # eta_i, (0, 1]
    differential_gain: float     # g, m^2; material gain g*(N - N_tr)
    transparency_density: float  # N_tr, 1/m^3
    recomb_at_threshold: float   # R at the anchor density, 1/(m^3 s)
    recomb_slope: float          # dR/dN at the anchor, 1/s
    spont_at_threshold: float    # r_sp at the anchor density, 1/(m^3 s)
    spont_slope: float           # dr_sp/dN at the anchor, 1/s
    reflectivity_front: float    # R_f, (0, 1)
    reflectivity_rear: float     # R_r, (0, 1)
    spont_background: float      # broadband spontaneous power at detector, W
    anchor_density: float | None = None

    def __post_init__(self):
        for name in (
            "wavelength", "group_index", "internal_loss", "fca_cross_section",
            "active_thickness", "active_width", "active_length", "cavity_length",
            "differential_gain", "transparency_density", "recomb_at_threshold",
            "recomb_slope",
        ):
            _require_positive(name, getattr(self, name))
        # a zero spontaneous pair is the idealized seedless laser
        if self.spont_at_threshold < 0.0 or self.spont_slope < 0.0:
            raise ConfigError("spontaneous pair must be non-negative")
        if self.spont_background < 0.0:
            raise ConfigError("spont_background must be non-negative")
        if not 0.0 < self.confinement <= 1.0:
            raise ConfigError("confinement must lie in (0, 1]")
        if not 0.0 < self.internal_efficiency <= 1.0:
            raise ConfigError("internal_efficiency must lie in (0, 1]")
        for name in ("reflectivity_front", "reflectivity_rear"):
            if not 0.0 < getattr(self, name) < 1.0:
                raise ConfigError(f"{name} must lie strictly inside (0, 1)")
        if self.petermann_k < 1.0:
            raise ConfigError("petermann_k must be >= 1")
        if self.confinement * (self.differential_gain - self.fca_cross_section) <= 0.0:
            raise NoThreshold(
                "differential gain does not exceed the free-carrier cross-section; "
                "no threshold carrier density exists"
            )
        if self.anchor_density is None:
            alpha_cal = self.internal_loss + mirror_loss(self)
            object.__setattr__(
                self, "anchor_density", threshold_carrier_density(self, alpha_cal)
            )
        elif self.anchor_density <= 0.0:
            raise ConfigError("anchor_density must be strictly positive")

    # -- derived scalars ------------------------------------------------

    @property
    def group_velocity(self) -> float:
        return C_LIGHT / self.group_index

    @property
    def photon_energy(self) -> float:
        return photon_energy(self.wavelength)

    @property
    def active_volume(self) -> float:
        return self.active_thickness * self.active_width * self.active_length

    @property
    def out_coupling_factor(self) -> float:
        """Front-facet factor of the detected power: P_out = P_sp + factor * P."""
        rf, rr = self.reflectivity_front, self.reflectivity_rear
        bracket = 1.0 + (1.0 - rr) / (1.0 - rf) * math.sqrt(rf / rr)
        return -0.5 * math.log(rr * rf) / bracket

    def recombination_rate(self, carrier_density):
        """Linearized R(N) about the stored anchor, 1/(m^3 s)."""
        return self.recomb_at_threshold + self.recomb_slope * (
            carrier_density - self.anchor_density
        )

    def spontaneous_rate(self, carrier_density):
        """Linearized r_sp(N) about the stored anchor, 1/(m^3 s)."""
        return self.spont_at_threshold + self.spont_slope * (
            carrier_density - self.anchor_density
        )


@dataclass(frozen=True)
class AbsorberParams:
    """Intracavity absorber: on-resonant absorption over a geometric path.

    ``single_pass_depth`` is ``delta_alpha * absorber_length``; when
    supplied explicitly it must agree with the product.
    """

    delta_alpha: float           # on-resonant absorption constant, 1/m
    absorber_length: float       # geometric path through the pumped region, m
    single_pass_depth: float | None = None

    def __post_init__(self):
        if self.delta_alpha < 0.0:
            raise ConfigError("delta_alpha must be non-negative")
        _require_positive("absorber_length", self.absorber_length)
        product = self.delta_alpha * self.absorber_length
        if self.single_pass_depth is None:
            object.__setattr__(self, "single_pass_depth", product)
        else:
            scale = max(abs(product), abs(self.single_pass_depth), 1e-300)
            if abs(self.single_pass_depth - product) > 1e-9 * scale:
                raise ConfigError(
                    "single_pass_depth inconsistent with delta_alpha * absorber_length"
                )

    @staticmethod
    def transparent(absorber_length: float = 1e-5) -> "AbsorberParams":
        """Absorber with zero on-resonant absorption (single-pass depth 0)."""
        return AbsorberParams(delta_alpha=0.0, absorber_length=absorber_length)


@dataclass(frozen=True)
class OperatingPoint:
    """Solved steady state of the laser at one drive current.

    ``carrier_defect`` keeps N - N_th at full precision; above threshold
    the defect is many orders of magnitude smaller than N itself and
    would be lost in the rounded sum stored in ``carrier_density``.
    """

    current: float               # A
    carrier_density: float       # 1/m^3
    intracavity_power: float     # W
    output_power: float          # W, detected at the front facet
    carrier_defect: float | None = None  # N - N_th at the operating loss, 1/m^3


@dataclass(frozen=True)
class Trajectory:
    """Accepted integration steps of a transient run."""

    time: np.ndarray
    power: np.ndarray
    carrier: np.ndarray
    carrier_defect: np.ndarray
    converged: bool
    n_steps: int

    def final_state(self) -> tuple[float, float]:
        return float(self.power[-1]), float(self.carrier[-1])


# ----------------------------------------------------------------------
# Elementary relations
# ----------------------------------------------------------------------

def modal_gain(params: DiodeLaserParams, carrier_density) -> float:
    """Modal gain Gamma*g*(N - N_tr) in 1/m; negative below transparency."""
    return params.confinement * params.differential_gain * (
        carrier_density - params.transparency_density
    )


def mirror_loss(params: DiodeLaserParams) -> float:
    """Mirror out-coupling distributed over the cavity, -ln(Rf*Rr)/(2*L_cav)."""
    return -math.log(params.reflectivity_front * params.reflectivity_rear) / (
        2.0 * params.cavity_length
    )


def total_loss(params: DiodeLaserParams, absorber: AbsorberParams,
               on_resonance: bool) -> float:
    """Total distributed cavity loss in 1/m, excluding free-carrier absorption.

    On resonance the absorber adds its single-pass depth spread over the
    cavity length, delta_alpha*l_abs/L_cav.
    """
    alpha = params.internal_loss + mirror_loss(params)
    if on_resonance:
        alpha += absorber.single_pass_depth / params.cavity_length
    return alpha


def threshold_carrier_density(params: DiodeLaserParams, alpha_total: float) -> float:
    """Carrier density where modal gain balances loss plus free-carrier absorption.

    Solves Gamma*g*(N - N_tr) = alpha_total + Gamma*sigma*N.
    """
    slope = params.confinement * (params.differential_gain - params.fca_cross_section)
    if slope <= 0.0:
        raise NoThreshold("Gamma*(g - sigma) <= 0: gain cannot reach the loss line")
    numerator = alpha_total + (
        params.confinement * params.differential_gain * params.transparency_density
    )
    return numerator / slope


def threshold_current(params: DiodeLaserParams, alpha_total: float) -> float:
    """Current at which steady-state modal gain reaches the total loss.

    Defined in the zero-spontaneous-seed limit: I_th = e*V*R(N_th), with
    R evaluated on the stored linearization line.
    """
    n_th = threshold_carrier_density(params, alpha_total)
    recomb = params.recombination_rate(n_th)
    if recomb <= 0.0:
        raise NoPhysicalRoot(
            "linearized recombination rate extrapolates non-positive at the "
            "threshold density; parameters inconsistent at this loss"
        )
    return E_CHARGE * params.active_volume * recomb


def output_power(params: DiodeLaserParams, intracavity_power) -> float:
    """Detected front-facet power for a given intracavity power.

    P_out = P_sp - (P/2) ln(Rr*Rf) [1 + ((1-Rr)/(1-Rf)) sqrt(Rf/Rr)]^-1.
    """
    return params.spont_background + params.out_coupling_factor * intracavity_power


# ----------------------------------------------------------------------
# Linearized system and its closed-form steady state
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class LinearizedSystem:
    """Scalar coefficients of the linearized rate equations at one loss setting.

    The steady state in scaled variables p = P/p_scale and j = I/i_th - 1
    solves  beta2*p^2 + (beta2*w - beta1 - j)*p - (rho + j*w) = 0, with
    the carrier defect x = N - n_th = -n_th / (p + w).
    """

    params: DiodeLaserParams
    alpha_total: float        # 1/m
    n_th: float               # threshold carrier density at this loss, 1/m^3
    gain_slope: float         # A = Gamma*(g - sigma), m^2
    gain_at_threshold: float  # B = alpha + Gamma*sigma*n_th, 1/m
    recomb_at_nth: float      # R(n_th), 1/(m^3 s)
    spont_at_nth: float       # r_sp(n_th), 1/(m^3 s)
    seed_const: float         # s0 = K v_g hbar*omega Gamma r_sp(n_th) / l, W/m
    seed_slope: float         # s1, same role for the r_sp slope
    stim_coeff: float         # 1/(eta_i d W hbar*omega), 1/(W s m^3) * (1/m)^-1
    i_th: float               # threshold current, A
    p_scale: float            # power scale s0/(A*n_th), W (0 when seedless)
    w: float                  # r_sp slope ratio, spont_slope*n_th/r_sp(n_th)
    rho: float                # recomb slope ratio, R'*n_th/R(n_th)
    beta1: float              # Gamma*g*n_th * p_scale * stim_coeff / R(n_th)
    beta2: float              # B * p_scale * stim_coeff / R(n_th)

    @property
    def seedless(self) -> bool:
        return self.p_scale == 0.0

    @property
    def knee_width(self) -> float:
        """Relative current width of the threshold knee, 2*sqrt(beta2*rho)."""
        if self.seedless:
            return 0.0
        return 2.0 * math.sqrt(self.beta2 * self.rho)

    def steady_arrays(self, currents):
        """Vectorized steady state.

        Returns (power, defect) with defect = N - n_th; NaN entries mark
        currents with no non-negative root.
        """
        currents = np.asarray(currents, dtype=float)
        j = currents / self.i_th - 1.0
        p = self.params
        if self.seedless:
            above = j > 0.0
            power = np.where(above, j * self.power_per_j(), 0.0)
            if self.spont_at_nth == 0.0 and p.spont_slope > 0.0 and np.any(~above):
                # a sloped seed with zero anchor value admits no stationary
                # below-threshold state
                power = np.where(above, power, np.nan)
            defect = np.where(
                above, 0.0, j * self.recomb_at_nth / p.recomb_slope
            )
            defect = np.where(np.isnan(power), np.nan, defect)
            return power, defect

        c_hat = self.rho + j * self.w
        b_hat = self.beta2 * self.w - self.beta1 - j
        disc = b_hat * b_hat + 4.0 * self.beta2 * c_hat
        with np.errstate(invalid="ignore"):
            sqrt_disc = np.sqrt(np.where(disc >= 0.0, disc, np.nan))
            # numerically stable branch of the larger root
            plus = np.where(
                b_hat <= 0.0,
                (-b_hat + sqrt_disc) / (2.0 * self.beta2),
                2.0 * c_hat / (b_hat + sqrt_disc),
            )
        plus = np.where(plus >= 0.0, plus, np.nan)
        power = plus * self.p_scale
        defect = -self.n_th / (plus + self.w)
        return power, defect

    def power_per_j(self) -> float:
        """Above-threshold power per unit (I/I_th - 1) in the seedless limit, W."""
        return self.recomb_at_nth / (self.gain_at_threshold * self.stim_coeff)

    def derivatives(self, power, defect, current):
        """Right-hand sides dP/dt and dN/dt as functions of (P, N - n_th)."""
        p = self.params
        net_gain = self.gain_slope * defect
        dP = p.group_velocity * (
            net_gain * power + self.seed_const + self.seed_slope * defect
        )
        gam_g = p.confinement * p.differential_gain
        dN = (
            current / (E_CHARGE * p.active_volume)
            - (self.recomb_at_nth + p.recomb_slope * defect)
            - (gam_g * defect + self.gain_at_threshold) * power * self.stim_coeff
        )
        return dP, dN

    def derivative_scales(self, power, defect, current):
        """Sum of absolute term magnitudes of each rate equation.

        The photon equation balances separate gain, loss and seed terms
        that are individually much larger than their stationary sum, so
        the scale decomposes them rather than using the net gain.
        """
        p = self.params
        gam_g = p.confinement * p.differential_gain
        gam_s = p.confinement * p.fca_cross_section
        absP = np.abs(power)
        scale_p = p.group_velocity * (
            (2.0 * self.gain_at_threshold + (gam_g + gam_s) * np.abs(defect)) * absP
            + self.seed_const
            + np.abs(self.seed_slope * defect)
        )
        scale_n = (
            current / (E_CHARGE * p.active_volume)
            + self.recomb_at_nth
            + np.abs(p.recomb_slope * defect)
            + (np.abs(gam_g * defect) + self.gain_at_threshold) * absP * self.stim_coeff
        )
        return scale_p, scale_n


def linearize(params: DiodeLaserParams, absorber: AbsorberParams,
              on_resonance: bool) -> LinearizedSystem:
    """Assemble the scalar coefficients for one loss configuration."""
    alpha = total_loss(params, absorber, on_resonance)
    return _assemble_system(params, alpha)


def _assemble_system(params: DiodeLaserParams, alpha: float,
                     internal_efficiency: float | None = None,
                     n_th: float | None = None) -> LinearizedSystem:
    """Build the linearized system for an explicit total loss.

    ``internal_efficiency`` overrides the stored value without re-running
    parameter validation, and ``n_th`` overrides the loss-derived
    threshold density (the transparency point then shifts implicitly);
    the L-I curve fitter varies both freely.
    """
    eta_i = params.internal_efficiency if internal_efficiency is None \
        else internal_efficiency
    if n_th is None:
        n_th = threshold_carrier_density(params, alpha)
    gain_slope = params.confinement * (
        params.differential_gain - params.fca_cross_section
    )
    gain_at_threshold = alpha + params.confinement * params.fca_cross_section * n_th
    recomb_at_nth = params.recombination_rate(n_th)
    spont_at_nth = params.spontaneous_rate(n_th)
    if recomb_at_nth <= 0.0:
        raise NoPhysicalRoot(
            "recombination rate extrapolates non-positive at this threshold density"
        )
    if spont_at_nth < 0.0:
        raise NoPhysicalRoot(
            "spontaneous rate extrapolates negative at this threshold density"
        )
    e_ph = params.photon_energy
    seed_factor = (
        params.petermann_k * params.group_velocity * e_ph * params.confinement
        / params.active_length
    )
    seed_const = seed_factor * spont_at_nth
    seed_slope = seed_factor * params.spont_slope
    stim_coeff = 1.0 / (
        eta_i * params.active_thickness * params.active_width * e_ph
    )
    i_th = E_CHARGE * params.active_volume * recomb_at_nth
    if seed_const > 0.0:
        p_scale = seed_const / (gain_slope * n_th)
        w = seed_slope * n_th / seed_const
        beta1 = (
            params.confinement * params.differential_gain * n_th
            * p_scale * stim_coeff / recomb_at_nth
        )
        beta2 = gain_at_threshold * p_scale * stim_coeff / recomb_at_nth
    else:
        p_scale = 0.0
        w = 0.0
        beta1 = 0.0
        beta2 = 0.0
    rho = params.recomb_slope * n_th / recomb_at_nth
    return LinearizedSystem(
        params=params, alpha_total=alpha, n_th=n_th, gain_slope=gain_slope,
        gain_at_threshold=gain_at_threshold, recomb_at_nth=recomb_at_nth,
        spont_at_nth=spont_at_nth, seed_const=seed_const, seed_slope=seed_slope,
        stim_coeff=stim_coeff, i_th=i_th, p_scale=p_scale, w=w, rho=rho,
        beta1=beta1, beta2=beta2,
    )


def steady_state(params: DiodeLaserParams, absorber: AbsorberParams,
                 current: float, on_resonance: bool = True) -> OperatingPoint:
    """Closed-form steady state of the linearized system at one current.

    Returns the root of the power quadratic that is non-negative and
    continuous in current down to the pure-spontaneous solution at I = 0.
    Raises NoPhysicalRoot when no such root exists.
    """
    if current < 0.0:
        raise ConfigError("current must be non-negative")
    lin = linearize(params, absorber, on_resonance)
    power, defect = lin.steady_arrays(np.asarray([current]))
    p, x = float(power[0]), float(defect[0])
    if math.isnan(p) or math.isnan(x):
        raise NoPhysicalRoot(
            f"no non-negative steady-state power at I = {current:.6g} A "
            f"(alpha = {lin.alpha_total:.6g} 1/m)"
        )
    return OperatingPoint(
        current=current, carrier_density=lin.n_th + x, intracavity_power=p,
        output_power=output_power(params, p), carrier_defect=x,
    )


def stationarity_residuals(params: DiodeLaserParams, absorber: AbsorberParams,
                           point: OperatingPoint, on_resonance: bool = True):
    """Relative residuals of both rate equations at an operating point."""
    lin = linearize(params, absorber, on_resonance)
    defect = point.carrier_defect
    if defect is None:
        defect = point.carrier_density - lin.n_th
    dP, dN = lin.derivatives(point.intracavity_power, defect, point.current)
    sP, sN = lin.derivative_scales(point.intracavity_power, defect, point.current)
    return abs(dP) / max(sP, 1e-300), abs(dN) / max(sN, 1e-300)


def characteristic_curve(params: DiodeLaserParams, absorber: AbsorberParams,
                         currents, on_resonance: bool = False) -> list[tuple[float, float]]:
    """Detected power versus drive current (the L-I curve).

    Off resonance by default, matching how characteristic curves are
    recorded.  Raises with the offending current named when any point
    has no physical steady state.
    """
    currents = np.asarray(currents, dtype=float)
    if currents.size == 0:
        raise ConfigError("currents must be non-empty")
    if np.any(currents < 0.0):
        raise ConfigError("currents must be non-negative")
    lin = linearize(params, absorber, on_resonance)
    power, _ = lin.steady_arrays(currents)
    bad = np.nonzero(np.isnan(power))[0]
    if bad.size:
        raise NoPhysicalRoot(
            f"no steady state at I = {currents[bad[0]]:.6g} A "
            f"({bad.size} of {currents.size} points failed)"
        )
    out = output_power(params, power)
    return list(zip(currents.tolist(), np.asarray(out).tolist()))


# ----------------------------------------------------------------------
# Transient integration (independent route to the steady state)
# ----------------------------------------------------------------------

# Dormand-Prince 5(4) tableau
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640,
                   -92097 / 339200, 187 / 2100, 1 / 40])


def _transient_batch(lin: LinearizedSystem, currents, y0, t_end,
                     rtol=1e-9, atol=1e-14, max_step=None,
                     stationarity_tol=1e-9, record=False):
    """Integrate the rate equations for a batch of currents in parallel.

    The state is (P, x) with x = N - n_th, which keeps the clamped-gain
    defect at full precision above threshold.  Error control is relative
    with small absolute floors tied to a per-current power reference and
    the threshold density.  Returns (power, defect, converged, n_steps,
    trajectory); trajectory is populated only when ``record`` is set.
    """
    currents = np.asarray(currents, dtype=float)
    m = currents.size
    j = currents / lin.i_th - 1.0
    p_ref = lin.p_scale + np.maximum(j, 0.0) * lin.power_per_j()
    p_ref = np.where(p_ref > 0.0, p_ref, 1e-15)
    n_ref = lin.n_th

    power = np.broadcast_to(np.asarray(y0[0], dtype=float), (m,)).astype(float)
    defect = np.broadcast_to(np.asarray(y0[1], dtype=float), (m,)).astype(float)
    power = power.copy()
    defect = defect.copy()

    def rhs(pw, dx):
        return lin.derivatives(pw, dx, currents)

    t = 0.0
    dP, dN = rhs(power, defect)
    # initial step set by the fastest local relative rate
    rate = np.max(np.abs(dP) / p_ref + np.abs(dN) / n_ref) + 1e-300
    dt = min(1e-3 / rate, t_end / 10.0)
    if max_step is not None:
        dt = min(dt, max_step)

    converged = np.zeros(m, dtype=bool)
    n_steps = 0
    max_steps = 2_000_000
    ts, ps, xs = [t], [power.copy()], [defect.copy()]

    k_p = np.empty((7, m))
    k_n = np.empty((7, m))
    k_p[0], k_n[0] = dP, dN

    while t < t_end and not converged.all():
        if n_steps >= max_steps:
            break
        dt = min(dt, t_end - t)
        for stage in range(1, 7):
            a = _DP_A[stage]
            pw = power + dt * (a @ k_p[:stage])
            dx = defect + dt * (a @ k_n[:stage])
            k_p[stage], k_n[stage] = rhs(pw, dx)
        p5 = power + dt * (_DP_B5 @ k_p)
        x5 = defect + dt * (_DP_B5 @ k_n)
        err_p = dt * ((_DP_B5 - _DP_B4) @ k_p)
        err_n = dt * ((_DP_B5 - _DP_B4) @ k_n)
        sc_p = atol * p_ref + rtol * np.maximum(np.abs(power), np.abs(p5))
        sc_n = atol * n_ref + rtol * np.maximum(np.abs(defect), np.abs(x5))
        active = ~converged
        if active.any():
            err = np.sqrt(0.5 * ((err_p[active] / sc_p[active]) ** 2
                                 + (err_n[active] / sc_n[active]) ** 2)).max()
        else:
            err = 0.0
        if err <= 1.0:
            t += dt
            power, defect = p5, x5
            k_p[0], k_n[0] = rhs(power, defect)
            s_p, s_n = lin.derivative_scales(power, defect, currents)
            converged = (np.abs(k_p[0]) <= stationarity_tol * s_p) & (
                np.abs(k_n[0]) <= stationarity_tol * s_n
            )
            if record:
                ts.append(t)
                ps.append(power.copy())
                xs.append(defect.copy())
        n_steps += 1
        factor = 0.9 * (1.0 / max(err, 1e-10)) ** 0.2
        dt *= min(5.0, max(0.2, factor))
        if max_step is not None:
            dt = min(dt, max_step)
        if dt <= 0.0 or not math.isfinite(dt):
            break

    if record:
        traj = (np.asarray(ts), np.vstack(ps).T, np.vstack(xs).T)
    else:
        traj = None
    return power, defect, converged, n_steps, traj


def integrate_transient(params: DiodeLaserParams, absorber: AbsorberParams,
                        current: float, on_resonance: bool = True,
                        initial: tuple[float, float] = (0.0, 0.0),
                        t_end: float | None = None, rtol: float = 1e-9,
                        max_step: float | None = None,
                        stationarity_tol: float = 1e-9) -> Trajectory:
    """Time-integrate the linearized rate equations to stationarity.

    Adaptive explicit Runge-Kutta stepping from ``initial = (P0, N0)``.
    The run is stationary when both derivative magnitudes fall below
    ``stationarity_tol`` relative to the summed magnitudes of their
    constituent terms; NotConverged is raised when that does not happen
    within ``t_end``.
    """
    if initial[0] < 0.0 or initial[1] < 0.0:
        raise ConfigError("initial state must be non-negative")
    lin = linearize(params, absorber, on_resonance)
    if t_end is None:
        # critical slowing near the threshold dip needs a long horizon
        t_end = 4000.0 / params.recomb_slope
    if t_end <= 0.0:
        raise ConfigError("t_end must be positive")
    power, defect, converged, n_steps, traj = _transient_batch(
        lin, [current], ([initial[0]], [initial[1] - lin.n_th]), t_end,
        rtol=rtol, max_step=max_step, stationarity_tol=stationarity_tol,
        record=True,
    )
    ts, ps, xs = traj
    result = Trajectory(
        time=ts, power=ps[0], carrier=xs[0] + lin.n_th, carrier_defect=xs[0],
        converged=bool(converged[0]), n_steps=n_steps,
    )
    if not result.converged:
        exc = NotConverged(
            f"transient not stationary within t_end = {t_end:.3g} s "
            f"({n_steps} steps)"
        )
        exc.trajectory = result
        raise exc
    return result
