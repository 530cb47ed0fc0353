"""Plane-wave reduction of the equations of motion and band-gap detection.

Substituting (u, P) = (u_hat, P_hat) exp(i(<k,x> - w t)) into the coupled
system turns it into a 12x12 Hermitian eigenproblem w^2 v = B(k) v with
v = (u_hat, P_hat rows).  Under the substitution, grad -> i k (outer),
row-divergence -> contraction with i k, and row-curl -> i k x row, so the
curl-curl term becomes |k|^2 row - <row, k> k.  The sign conventions are
fixed by requiring w^2 >= 0 for admissible parameters and by the k = 0
limit, whose spectrum is the irreducible decomposition of the local
coupling map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .materials import MaterialParameters, cauchy_stress, micro_stress, validate_parameters

__all__ = [
    "PlaneWaveMatrix",
    "DispersionResult",
    "assemble_plane_wave_matrix",
    "band_structure",
    "find_band_gaps",
]

HERMITICITY_TOL = 1e-12


@dataclass(frozen=True)
class PlaneWaveMatrix:
    """Hermitian 12x12 matrix whose eigenvalues are the squared frequencies.

    Row/column order: (u_1, u_2, u_3, P_11, P_12, ..., P_33).
    """

    B: np.ndarray
    k: np.ndarray

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.B)

    def frequencies(self) -> np.ndarray:
        return np.sqrt(np.clip(self.eigenvalues(), 0.0, None))


@dataclass(frozen=True)
class DispersionResult:
    """Frequency branches along one wavevector direction.

    ``branches[s, j]`` is the j-th (ascending) frequency at ``k_samples[s]``;
    ``gaps`` holds (lo, hi) frequency intervals not touched by any branch.
    """

    direction: np.ndarray
    k_samples: np.ndarray
    branches: np.ndarray
    gaps: tuple = ()


def plane_wave_apply(p: MaterialParameters, k: np.ndarray,
                     u_hat: np.ndarray, P_hat: np.ndarray):
    """Apply the Fourier-reduced operator to complex amplitudes (u_hat, P_hat)."""
    k = np.asarray(k, dtype=float)
    E = 1j * np.outer(u_hat, k) - P_hat
    sig = cauchy_stress(p, E)
    a_u = -1j * (sig @ k)
    # -Curl Curl under the substitution: |k|^2 row - <row, k> k, per row
    cc = (k @ k) * P_hat - np.outer(P_hat @ k, k)
    a_P = -sig + micro_stress(p, P_hat) + p.curvature_modulus * cc
    return a_u, a_P


def assemble_plane_wave_matrix(p: MaterialParameters, k) -> PlaneWaveMatrix:
    """Assemble B(k) column by column and verify it is Hermitian."""
    validate_parameters(p)
    k = np.asarray(k, dtype=float)
    if k.shape != (3,):
        raise ValueError("wavevector must have three components")
    B = np.empty((12, 12), dtype=complex)
    for col in range(12):
        u_hat = np.zeros(3, dtype=complex)
        P_hat = np.zeros((3, 3), dtype=complex)
        if col < 3:
            u_hat[col] = 1.0
        else:
            P_hat[(col - 3) // 3, (col - 3) % 3] = 1.0
        a_u, a_P = plane_wave_apply(p, k, u_hat, P_hat)
        B[:3, col] = a_u
        B[3:, col] = a_P.reshape(9)
    scale = max(1.0, float(np.abs(B).max()))
    defect = float(np.abs(B - B.conj().T).max())
    if defect > HERMITICITY_TOL * scale:
        raise AssertionError(
            f"plane-wave matrix not Hermitian: defect {defect:.3e} at k={k}")
    return PlaneWaveMatrix(B=B, k=k)


def band_structure(p: MaterialParameters, direction, k_max: float,
                   samples: int) -> DispersionResult:
    """Frequency branches w_j(kappa) for kappa on a uniform grid of [0, k_max].

    Branches are ordered by sorting the spectrum at each sample; no
    eigenvector continuation is attempted (gap detection only needs the
    spectrum as a set).
    """
    validate_parameters(p)
    direction = np.asarray(direction, dtype=float)
    norm = np.linalg.norm(direction)
    if norm == 0:
        raise ValueError("direction must be a nonzero vector")
    direction = direction / norm
    if samples < 2:
        raise ValueError("need at least two wavenumber samples")

    k_samples = np.linspace(0.0, float(k_max), int(samples))
    branches = np.empty((len(k_samples), 12))
    for s, kappa in enumerate(k_samples):
        mat = assemble_plane_wave_matrix(p, kappa * direction)
        eigs = mat.eigenvalues()
        floor = -1e-10 * max(1.0, float(np.abs(eigs).max()))
        if eigs.min() < floor:
            raise AssertionError(
                f"negative squared frequency {eigs.min():.3e} at kappa={kappa}; "
                "positive semidefiniteness violated for admissible parameters")
        branches[s] = np.sqrt(np.clip(eigs, 0.0, None))
    return DispersionResult(direction=direction, k_samples=k_samples,
                            branches=branches)


def find_band_gaps(result: DispersionResult, resolution: float) -> list[tuple[float, float]]:
    """Frequency intervals wider than ``resolution`` missed by every branch.

    The omega axis is scanned in cells of the given resolution.  Each branch
    covers, between consecutive samples, the whole interval spanned by the
    two values (a conservative segment reading that avoids fake gaps from
    steep branches).  Maximal runs of untouched cells inside [0, max omega]
    wider than the resolution are reported.
    """
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    br = result.branches
    if br.size == 0:
        return [(0.0, math.inf)]
    omega_max = float(br.max())
    n_cells = max(1, int(math.ceil(omega_max / resolution)))
    covered = np.zeros(n_cells, dtype=bool)

    def cover(lo: float, hi: float) -> None:
        a = min(n_cells - 1, int(lo / resolution))
        b = min(n_cells - 1, int(hi / resolution))
        covered[a:b + 1] = True

    for j in range(br.shape[1]):
        vals = br[:, j]
        if len(vals) == 1:
            cover(vals[0], vals[0])
        for s in range(len(vals) - 1):
            cover(min(vals[s], vals[s + 1]), max(vals[s], vals[s + 1]))

    gaps: list[tuple[float, float]] = []
    start = None
    for c in range(n_cells):
        if not covered[c] and start is None:
            start = c
        elif covered[c] and start is not None:
            lo, hi = start * resolution, c * resolution
            if hi - lo > resolution:
                gaps.append((lo, hi))
            start = None
    if start is not None:
        lo, hi = start * resolution, n_cells * resolution
        if hi - lo > resolution:
            gaps.append((lo, hi))
    return gaps


def with_gaps(result: DispersionResult, resolution: float) -> DispersionResult:
    """Return a copy of ``result`` with the gap list attached."""
    return replace(result, gaps=tuple(find_band_gaps(result, resolution)))
