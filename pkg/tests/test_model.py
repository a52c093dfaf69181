import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sandwichbeam import (
    BeamCoefficients,
    LayerSpec,
    ValidationError,
    derive_coefficients,
    large_shear_condition,
    pde_observability_bound,
)


def test_reference_stack_coefficients(reference_coeffs):
    # frozen from the closed-form expressions evaluated in GPa
    assert reference_coeffs.B == pytest.approx(1011.3177548531687, rel=1e-12)
    assert reference_coeffs.C == pytest.approx(25282.943871329222, rel=1e-12)
    assert reference_coeffs.P == pytest.approx(2130860.5555555555, rel=1e-12)
    assert reference_coeffs.time_scale == pytest.approx(0.1)


def test_unit_stack_coefficients():
    one = LayerSpec(rho=1.0, thickness=1.0, youngs=1.0, shear=1.0, poisson=0.0)
    c = derive_coefficients(one, one, one, time_scale=1.0)
    # hand evaluation: d1 = d3 = 1e-9/12, g2 = 1e-9, stiffness sum = 2 d1
    assert c.B == pytest.approx(12.0, rel=1e-12)
    assert c.C == pytest.approx(6.0, rel=1e-12)
    assert c.P == pytest.approx(1.2e10, rel=1e-12)


def test_layer_validation():
    with pytest.raises(ValidationError):
        LayerSpec(rho=-1.0, thickness=1.0, youngs=1.0, shear=1.0, poisson=0.3)
    with pytest.raises(ValidationError):
        LayerSpec(rho=1.0, thickness=0.0, youngs=1.0, shear=1.0, poisson=0.3)
    with pytest.raises(ValidationError):
        LayerSpec(rho=1.0, thickness=1.0, youngs=1.0, shear=1.0, poisson=0.5)
    with pytest.raises(ValidationError):
        LayerSpec(rho=1.0, thickness=1.0, youngs=math.inf, shear=1.0, poisson=0.3)


def test_coefficient_validation():
    with pytest.raises(ValidationError):
        BeamCoefficients(B=0.0, C=1.0, P=1.0)
    with pytest.raises(ValidationError):
        BeamCoefficients(B=1.0, C=1.0, P=1.0, time_scale=-0.1)
    with pytest.raises(ValidationError):
        derive_coefficients(object(), object(), object())


def test_large_shear_condition_reference_stack(reference_coeffs):
    # the realistic stack violates the sufficient condition at h = 1/21
    cond = large_shear_condition(reference_coeffs, 1.0 / 21.0)
    assert not cond.holds
    assert cond.margin == pytest.approx(-1.1886437259184848, rel=1e-12)


def test_large_shear_condition_mild_stack(mild_coeffs):
    expected = {4: 0.9275, 8: 0.9344, 16: 0.9366}
    for n, margin in expected.items():
        cond = large_shear_condition(mild_coeffs, 1.0 / (n + 1))
        assert cond.holds
        assert cond.margin == pytest.approx(margin, abs=5e-4)


def test_margin_improves_under_refinement(mild_coeffs):
    # the only h-dependence is the -h^2/4 term
    margins = [large_shear_condition(mild_coeffs, 1.0 / (n + 1)).margin for n in (4, 8, 16, 32)]
    assert margins == sorted(margins)


@given(scale=st.floats(min_value=1e-3, max_value=1e3))
def test_coefficients_linear_in_core_shear(scale):
    base_core = LayerSpec(rho=1250, thickness=0.03, youngs=0.05e9, shear=0.01e9, poisson=0.47)
    scaled_core = LayerSpec(
        rho=1250, thickness=0.03, youngs=0.05e9, shear=0.01e9 * scale, poisson=0.47
    )
    top = LayerSpec(rho=7500, thickness=0.01, youngs=72.0e9, shear=27.0e9, poisson=0.31)
    bottom = LayerSpec(rho=2710, thickness=0.01, youngs=70.0e9, shear=25.0e9, poisson=0.33)
    base = derive_coefficients(top, base_core, bottom)
    scaled = derive_coefficients(top, scaled_core, bottom)
    assert scaled.B == pytest.approx(scale * base.B, rel=1e-12)
    assert scaled.C == pytest.approx(scale * base.C, rel=1e-12)
    assert scaled.P == pytest.approx(scale * base.P, rel=1e-12)


def test_pde_observability_bound_values():
    # L = 1: max(L, L^3/pi^2) = 1, so the bound is 2 (T - 2)
    assert pde_observability_bound(8.0, 1.0) == pytest.approx(12.0, rel=1e-12)
    assert pde_observability_bound(2.0, 1.0) == pytest.approx(0.0, abs=1e-12)
    # L = 4: L^3/pi^2 = 6.48... dominates L
    l3 = 4.0 ** 3 / math.pi ** 2
    assert pde_observability_bound(20.0, 4.0) == pytest.approx((2.0 / 4.0) * (20.0 - 2 * l3), rel=1e-12)


@given(
    t_small=st.floats(min_value=2.1, max_value=50.0),
    bump=st.floats(min_value=1e-6, max_value=50.0),
)
def test_pde_observability_bound_increasing_in_horizon(t_small, bump):
    assert pde_observability_bound(t_small + bump, 1.0) > pde_observability_bound(t_small, 1.0)
