"""Isotropic constitutive parameters and pointwise tensor algebra.

The continuum carries a displacement vector and a 3x3 micro-distortion
tensor per material point.  Everything here is value-level: tensors are
numpy arrays whose two leading axes are the tensor indices, so the same
functions serve single 3x3 matrices, complex plane-wave amplitudes and
full node fields of shape (3, 3, nx, ny, nz).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "MaterialParameters",
    "ParameterError",
    "parameter_violations",
    "validate_parameters",
    "sym",
    "skew",
    "trace",
    "decompose",
    "cauchy_stress",
    "micro_stress",
    "energy_density",
]

IDENTITY = np.eye(3)


class ParameterError(ValueError):
    """Raised when a constitutive parameter set is inadmissible."""

    def __init__(self, violations: list[str]):
        self.violations = violations
        super().__init__("inadmissible material parameters: " + "; ".join(violations))


@dataclass(frozen=True)
class MaterialParameters:
    """The six isotropic constants of the relaxed micromorphic solid.

    mu_e, lambda_e:          elastic (macro) shear and Lame moduli
    mu_c:                    Cosserat couple modulus (may be zero)
    mu_micro, lambda_micro:  micro shear and Lame moduli
    L_c:                     characteristic length of the curvature term

    Both inertia densities are fixed to 1 (nondimensionalized), so the
    moduli carry units of (wave speed)^2.
    """

    mu_e: float
    lambda_e: float
    mu_c: float
    mu_micro: float
    lambda_micro: float
    L_c: float

    @property
    def curvature_modulus(self) -> float:
        """Coefficient mu_micro * L_c^2 in front of the curl-curl term."""
        return self.mu_micro * self.L_c**2


def parameter_violations(p: MaterialParameters) -> list[str]:
    """Return the admissibility inequalities violated by ``p`` (empty if valid)."""
    checks = [
        (p.mu_e > 0, "mu_e > 0"),
        (2 * p.mu_e + 3 * p.lambda_e > 0, "2*mu_e + 3*lambda_e > 0"),
        (p.mu_c >= 0, "mu_c >= 0"),
        (p.mu_micro > 0, "mu_micro > 0"),
        (2 * p.mu_micro + 3 * p.lambda_micro > 0, "2*mu_micro + 3*lambda_micro > 0"),
        (p.L_c > 0, "L_c > 0"),
    ]
    return [name for ok, name in checks if not ok]


def validate_parameters(p: MaterialParameters) -> MaterialParameters:
    """Return ``p`` unchanged if admissible, else raise :class:`ParameterError`."""
    violations = parameter_violations(p)
    if violations:
        raise ParameterError(violations)
    return p


def sym(x: np.ndarray) -> np.ndarray:
    """Symmetric part 0.5*(X + X^T) over the two leading axes."""
    return 0.5 * (x + np.swapaxes(x, 0, 1))


def skew(x: np.ndarray) -> np.ndarray:
    """Antisymmetric part 0.5*(X - X^T) over the two leading axes."""
    return 0.5 * (x - np.swapaxes(x, 0, 1))


def trace(x: np.ndarray) -> np.ndarray:
    """Trace over the two leading axes (scalar or node array)."""
    return x[0, 0] + x[1, 1] + x[2, 2]


def decompose(x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Split into (sym part, skew part, trace); sym + skew recovers X exactly."""
    return sym(x), skew(x), trace(x)


def _add_spherical(t: np.ndarray, coeff: float, tr: np.ndarray) -> np.ndarray:
    for i in range(3):
        t[i, i] += coeff * tr
    return t


def cauchy_stress(p: MaterialParameters, e: np.ndarray) -> np.ndarray:
    """Non-symmetric Cauchy stress 2*mu_e*sym(E) + 2*mu_c*skew(E) + lambda_e*tr(E)*Id.

    ``e`` is the elastic distortion (gradient of displacement minus
    micro-distortion); any trailing axes broadcast.
    """
    out = 2 * p.mu_e * sym(e) + 2 * p.mu_c * skew(e)
    return _add_spherical(out, p.lambda_e, trace(e))


def micro_stress(p: MaterialParameters, P: np.ndarray) -> np.ndarray:
    """Micro stress 2*mu_micro*sym(P) + lambda_micro*tr(P)*Id."""
    out = 2 * p.mu_micro * sym(P)
    return _add_spherical(out, p.lambda_micro, trace(P))


def energy_density(p: MaterialParameters, e: np.ndarray, P: np.ndarray) -> np.ndarray:
    """Pointwise potential energy density in the independent pair (E, P).

    mu_e|sym E|^2 + lambda_e/2 tr(E)^2 + mu_c|skew E|^2
    + mu_micro|sym P|^2 + lambda_micro/2 tr(P)^2.
    The curvature term depends on Curl P and is accounted for at field level.
    """
    se, ke, te = decompose(e)
    sp, _, tp = decompose(P)
    return (
        p.mu_e * np.sum(se * se, axis=(0, 1))
        + 0.5 * p.lambda_e * te * te
        + p.mu_c * np.sum(ke * ke, axis=(0, 1))
        + p.mu_micro * np.sum(sp * sp, axis=(0, 1))
        + 0.5 * p.lambda_micro * tp * tp
    )
