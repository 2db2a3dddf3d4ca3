import dataclasses

import numpy as np
import pytest

from licam_lab import presets
from licam_lab.model import AbsorberParams, DiodeLaserParams


@pytest.fixture(scope="session")
def synth1():
    return presets.synth1()


@pytest.fixture(scope="session")
def synth1_absorber():
    return presets.synth1_absorber()


@pytest.fixture(scope="session")
def calibrated():
    return presets.calibrated_ecdl()


@pytest.fixture(scope="session")
def calibrated_absorber():
    return presets.calibrated_absorber()


def random_laser_params(rng: np.random.Generator) -> DiodeLaserParams:
    """Draw a well-posed random parameter set around the synthetic fixture.

    The recombination slope ratio is kept at or above the spontaneous
    slope ratio so the linearized model has a physical root all the way
    down to zero current.
    """
    base = presets.synth1()
    n_th_scale = rng.uniform(0.8, 1.25)
    r_th = base.recomb_at_threshold * rng.uniform(0.5, 2.0)
    n_tr = base.transparency_density * n_th_scale
    rho = rng.uniform(2.05, 2.9)
    w = rng.uniform(1.8, min(rho, 2.0))
    spont_th = base.spont_at_threshold * rng.uniform(0.2, 5.0)
    params = dataclasses.replace(
        base,
        group_index=rng.uniform(1.1, 3.8),
        confinement=rng.uniform(0.03, 0.3),
        internal_loss=rng.uniform(0.5, 6.0),
        fca_cross_section=base.differential_gain * rng.uniform(0.001, 0.05),
        petermann_k=rng.uniform(1.0, 3.0),
        internal_efficiency=rng.uniform(0.5, 1.0),
        differential_gain=base.differential_gain * rng.uniform(0.5, 2.0),
        transparency_density=n_tr,
        recomb_at_threshold=r_th,
        recomb_slope=1.0,     # placeholder, fixed below from rho
        spont_at_threshold=spont_th,
        spont_slope=1.0,      # placeholder, fixed below from w
        reflectivity_front=rng.uniform(0.6, 0.95),
        reflectivity_rear=rng.uniform(0.97, 0.999),
        spont_background=base.spont_background * rng.uniform(0.1, 10.0),
        anchor_density=None,
    )
    # anchor at the set's own off-resonance threshold, then pin the
    # slope ratios at that anchor
    anchor = params.anchor_density
    return dataclasses.replace(
        params,
        recomb_slope=rho * r_th / anchor,
        spont_slope=w * spont_th / anchor,
        anchor_density=anchor,
    )


def random_absorber(rng: np.random.Generator) -> AbsorberParams:
    contrast = 10.0 ** rng.uniform(-5.0, -3.0)
    length = 10.0 ** rng.uniform(-5.5, -4.0)
    depth = -np.log1p(-contrast)
    return AbsorberParams(delta_alpha=depth / length, absorber_length=length)
