import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from licam_lab.constants import GYROMAGNETIC_HZ_PER_T
from licam_lab.enhancement import (
    contrast_to_depth,
    delta_alpha_from_contrast,
    effective_depth,
    enhancement_factor,
    licam_contrast,
    snls,
)
from licam_lab.errors import (
    InvalidContrast,
    NonPositiveInput,
    NonPositivePower,
    ZeroReferenceDepth,
)


class TestDeltaAlphaFromContrast:
    def test_zero_contrast(self):
        ab = delta_alpha_from_contrast(0.0, 1e-5)
        assert ab.delta_alpha == 0.0
        assert ab.single_pass_depth == 0.0

    def test_small_contrast_expansion(self):
        # -ln(1 - 3.8e-5), frozen from a 50-digit evaluation
        ab = delta_alpha_from_contrast(3.8e-5, 1e-5)
        assert ab.single_pass_depth == pytest.approx(
            3.8000722018291188e-05, rel=1e-12
        )

    def test_unit_depth(self):
        ab = delta_alpha_from_contrast(1.0 - 1.0 / math.e, 1.0)
        assert ab.delta_alpha == pytest.approx(1.0, rel=1e-12)

    def test_contrast_bounds(self):
        with pytest.raises(InvalidContrast):
            delta_alpha_from_contrast(1.0, 1e-5)
        with pytest.raises(InvalidContrast):
            delta_alpha_from_contrast(-0.1, 1e-5)


class TestEffectiveDepth:
    def test_equal_powers_give_single_pass_depth(self):
        assert effective_depth(1e-3, 1e-3, 3.8e-5) == 3.8e-5

    def test_log_identity(self):
        assert effective_depth(math.e * 1e-3, 1e-3, 0.5) == pytest.approx(
            1.5, rel=1e-14
        )

    def test_rejects_nonpositive_power(self):
        with pytest.raises(NonPositivePower):
            effective_depth(0.0, 1e-3, 0.1)


class TestContrast:
    def test_zero_depth(self):
        assert licam_contrast(0.0) == 0.0

    def test_single_pass_limit(self):
        assert licam_contrast(3.8e-5) == pytest.approx(3.8e-5, rel=1e-4)

    def test_half(self):
        assert licam_contrast(math.log(2.0)) == pytest.approx(0.5, rel=1e-14)

    @settings(max_examples=200, deadline=None)
    @given(st.floats(min_value=0.0, max_value=0.999))
    def test_round_trip_with_depth(self, contrast):
        assert licam_contrast(contrast_to_depth(contrast)) == pytest.approx(
            contrast, rel=1e-12, abs=1e-15
        )

    def test_saturation_clamp(self):
        # just below unity must not produce an infinite depth
        depth = contrast_to_depth(1.0 - 1e-16)
        assert math.isfinite(depth)


class TestEnhancementFactor:
    def test_unity(self):
        assert enhancement_factor(3.8e-5, 3.8e-5) == 1.0

    @settings(max_examples=100, deadline=None)
    @given(st.floats(min_value=1e-9, max_value=1.0),
           st.floats(min_value=1.0, max_value=100.0),
           st.floats(min_value=1e-6, max_value=0.5))
    def test_at_least_unity_when_absorption_only_adds_loss(self, power_on,
                                                           ratio, tau_r):
        """P_on <= P_off implies an enhancement of at least one."""
        tau = effective_depth(power_on * ratio, power_on, tau_r)
        assert enhancement_factor(tau, tau_r) >= 1.0

    def test_double(self):
        assert enhancement_factor(2e-4, 1e-4) == 2.0

    def test_headline_enhancement(self):
        """Contrast 1.8e-2 at threshold over a 3.8e-5 single pass is a
        roughly 475-fold enhancement (478.0 exactly)."""
        xi = enhancement_factor(contrast_to_depth(1.8e-2),
                                contrast_to_depth(3.8e-5))
        assert xi == pytest.approx(477.99014500114383, rel=1e-12)
        assert xi == pytest.approx(475.0, rel=0.01)

    def test_zero_reference_rejected(self):
        with pytest.raises(ZeroReferenceDepth):
            enhancement_factor(0.1, 0.0)


class TestSnls:
    def test_spot_value(self):
        """Frozen 50-digit evaluation at the headline operating point."""
        eta = snls(1.8e-2, 1.85e6, 5e-6, 1.042e-6)
        assert eta == pytest.approx(5.0139283146575900e-10, rel=1e-12)
        # and it sits within 2 percent of the half-nanotesla scale
        assert eta == pytest.approx(5.0e-10, rel=0.02)

    def test_power_and_contrast_scaling(self):
        base = snls(1e-2, 1e6, 1e-6, 1.042e-6)
        assert snls(1e-2, 1e6, 2e-6, 1.042e-6) == pytest.approx(
            base / math.sqrt(2.0), rel=1e-12
        )
        assert snls(2e-2, 1e6, 1e-6, 1.042e-6) == pytest.approx(
            base / 2.0, rel=1e-12
        )

    @settings(max_examples=100, deadline=None)
    @given(st.floats(min_value=1e-6, max_value=0.99),
           st.floats(min_value=1e3, max_value=1e9),
           st.floats(min_value=1e-9, max_value=1e-2),
           st.floats(min_value=1.1, max_value=10.0))
    def test_homogeneity(self, contrast, linewidth, power, k):
        base = snls(contrast, linewidth, power, 1.042e-6)
        assert snls(contrast, k * linewidth, power, 1.042e-6) == pytest.approx(
            k * base, rel=1e-12
        )
        assert snls(contrast, linewidth, k * power, 1.042e-6) == pytest.approx(
            base / math.sqrt(k), rel=1e-12
        )

    def test_monotone_in_contrast(self):
        etas = [snls(c, 1e6, 1e-6, 1.042e-6) for c in (0.1, 0.5, 0.999999)]
        assert etas[0] > etas[1] > etas[2]

    def test_rejects_nonpositive(self):
        with pytest.raises(NonPositiveInput):
            snls(0.0, 1e6, 1e-6, 1.042e-6)

    def test_gyro_convention(self):
        assert GYROMAGNETIC_HZ_PER_T == 28.024e9
