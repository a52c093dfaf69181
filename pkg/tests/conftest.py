import pytest

from sandwichbeam import BeamCoefficients, LayerSpec, derive_coefficients


@pytest.fixture(scope="session")
def reference_layers():
    """PZT face / rubber core / aluminum face reference stack."""
    top = LayerSpec(rho=7500, thickness=0.01, youngs=72.0e9, shear=27.0e9, poisson=0.31)
    core = LayerSpec(rho=1250, thickness=0.03, youngs=0.05e9, shear=0.01e9, poisson=0.47)
    bottom = LayerSpec(rho=2710, thickness=0.01, youngs=70.0e9, shear=25.0e9, poisson=0.33)
    return top, core, bottom


@pytest.fixture(scope="session")
def reference_coeffs(reference_layers):
    return derive_coefficients(*reference_layers)


@pytest.fixture(scope="session")
def mild_coeffs():
    # C/P - (5/2) B^2/P stays positive on every mesh, so the observability
    # theorem's material condition holds and certificates must come back
    # satisfied.
    return BeamCoefficients(B=0.5, C=10.0, P=10.0, time_scale=1.0)
