"""Material data and scalar coefficients of the three-layer sandwich beam.

The beam consists of two stiff face layers (top = 1, bottom = 3) sandwiching
a compliant core (2) that carries transverse shear.  After eliminating the
in-plane kinematics, the transverse bending displacement z couples to the
core shear angle phi through three positive scalars:

    z_tt + z_xxxx - B phi_x = 0
    -C phi_xx + P phi = -B z_xxx

on the unit interval, clamped at x = 0 and free at x = 1.  B, C, P follow
from the layer data via the flexural rigidities D_i = E_i / (12 (1 - nu_i^2)):

    B = G2 (h1 + 2 h2 + h3) / (2 h2 (D1 h1^3 + D3 h3^3))
    C = G2 / (h2 (D1 h1^3 + D3 h3^3))
    P = G2 (D1 h1 + D3 h3) / (12 h2^2 D1 D3 h1 h3 (D1 h1^3 + D3 h3^3))

Unit convention
---------------
LayerSpec stores SI values (kg/m^3, m, Pa).  The formulas above are
evaluated with the moduli expressed in GPa.  B and C are unchanged by that
choice (degree-0 homogeneous in the modulus unit), while P scales inversely
with it; the GPa convention is the one under which the derived constants
match the reference values for the piezo/rubber/aluminum stack frozen in
the test suite, so it is the canonical convention of this package.
Downstream operators consume B, C, P as plain scalars on the unit interval.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

from .errors import ValidationError

_GPA = 1.0e9  # Pa per GPa

# Default factor for the slow time variable t* used in the physical-stack
# experiments; trajectories and spectra are scaled by this factor (see
# discretization.to_first_order).  Directly constructed coefficients default
# to 1 (no rescaling).
DEFAULT_TIME_SCALE = 0.1


@dataclass(frozen=True)
class LayerSpec:
    """Per-layer material data, SI units."""

    rho: float        # mass density [kg/m^3]
    thickness: float  # layer thickness [m]
    youngs: float     # Young's modulus [Pa]
    shear: float      # shear modulus [Pa]
    poisson: float    # Poisson ratio [-]

    def __post_init__(self):
        for name in ("rho", "thickness", "youngs", "shear"):
            value = getattr(self, name)
            if not (value > 0.0 and math.isfinite(value)):
                raise ValidationError(
                    f"LayerSpec.{name} must be positive and finite, got {value!r}"
                )
        if not (0.0 <= self.poisson < 0.5):
            raise ValidationError(
                f"LayerSpec.poisson must lie in [0, 0.5), got {self.poisson!r}"
            )


@dataclass(frozen=True)
class BeamCoefficients:
    """The scalars B, C, P plus the time-scale factor for t* = time_scale * t."""

    B: float
    C: float
    P: float
    time_scale: float = 1.0

    def __post_init__(self):
        for name in ("B", "C", "P", "time_scale"):
            value = getattr(self, name)
            if not (value > 0.0 and math.isfinite(value)):
                raise ValidationError(
                    f"BeamCoefficients.{name} must be positive and finite, got {value!r}"
                )


def _flexural_rigidity(youngs_gpa, poisson):
    # D_i = E_i / (12 (1 - nu_i^2)), with E_i in GPa by convention
    return youngs_gpa / (12.0 * (1.0 - poisson ** 2))


def derive_coefficients(top, core, bottom, time_scale=DEFAULT_TIME_SCALE):
    """Compute BeamCoefficients from three LayerSpec values.

    The moduli are converted to GPa before the closed-form expressions are
    evaluated (see the module docstring for why).  ``time_scale`` defaults
    to 0.1, the empirical slow-time factor of the reference stack; pass 1.0
    for unscaled time.
    """
    for name, layer in (("top", top), ("core", core), ("bottom", bottom)):
        if not isinstance(layer, LayerSpec):
            raise ValidationError(f"{name} layer must be a LayerSpec, got {type(layer)!r}")
    if not (time_scale > 0.0 and math.isfinite(time_scale)):
        raise ValidationError(f"time_scale must be positive and finite, got {time_scale!r}")

    h1, h2, h3 = top.thickness, core.thickness, bottom.thickness
    d1 = _flexural_rigidity(top.youngs / _GPA, top.poisson)
    d3 = _flexural_rigidity(bottom.youngs / _GPA, bottom.poisson)
    g2 = core.shear / _GPA

    stiff = d1 * h1 ** 3 + d3 * h3 ** 3  # combined face flexural rigidity
    b = g2 * (h1 + 2.0 * h2 + h3) / (2.0 * h2 * stiff)
    c = g2 / (h2 * stiff)
    p = g2 * (d1 * h1 + d3 * h3) / (12.0 * h2 ** 2 * d1 * d3 * h1 * h3 * stiff)
    return BeamCoefficients(B=b, C=c, P=p, time_scale=time_scale)


class LargeShearCondition(NamedTuple):
    holds: bool
    margin: float


def large_shear_condition(coeffs, h):
    """Evaluate the large-shear sufficient condition for uniform observability.

    margin = (C/P - h^2/4) - 2.5 B^2/P; the condition holds iff margin >= 0.
    A negative margin is reported, not fatal: simulations still run, only the
    observability certificate loses its backing.
    """
    if not isinstance(coeffs, BeamCoefficients):
        raise ValidationError(f"coeffs must be BeamCoefficients, got {type(coeffs)!r}")
    if not (0.0 < h < 1.0):
        raise ValidationError(f"mesh size h must lie in (0, 1), got {h!r}")
    margin = (coeffs.C / coeffs.P - h ** 2 / 4.0) - 2.5 * coeffs.B ** 2 / coeffs.P
    return LargeShearCondition(holds=bool(margin >= 0.0), margin=margin)


def pde_observability_bound(T, L):
    """Continuum-level observability constant (2/L) (T - 2 max{L, L^3/pi^2}).

    Non-positive return values mean "no certified bound" for that horizon;
    the caller interprets the sign.
    """
    if not (T > 0.0):
        raise ValidationError(f"T must be positive, got {T!r}")
    if not (L > 0.0):
        raise ValidationError(f"L must be positive, got {L!r}")
    c = max(L, L ** 3 / math.pi ** 2)
    return (2.0 / L) * (T - 2.0 * c)
