"""Difference-quotient regularity probes and localized energies.

Numerically witnesses the main local-regularity estimate: the total energy
evaluated on cutoff-localized difference quotients of a trajectory stays
uniformly bounded as the quotient step h decreases.  Also checks the
classical difference-quotient bound ||D^h phi||_{L2(V)} <= C ||grad
phi||_{L2(U)} on nested boxes V inside U inside the domain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .energy import EnergyBreakdown, total_energy
from .grid import (
    CartesianGrid,
    ScalarField,
    SimulationState,
    TensorField,
    VectorField,
    integrate_region_sq,
    region_slices,
)
from .operators import axis_derivative

__all__ = [
    "CutoffSpec",
    "cutoff_eta",
    "difference_quotient",
    "localized_energy",
    "dq_theorem_check",
    "DQCheckResult",
    "h_sweep_probe",
    "ProbeRow",
]


@dataclass(frozen=True)
class CutoffSpec:
    """Nested boxes V strictly inside U strictly inside the domain.

    Coordinates are corner positions per axis.  Margins (V to the boundary
    of U, and U to the domain boundary) must be positive; for grid use they
    must be at least two spacings wide so the ramp is resolved.
    """

    inner_lo: tuple[float, float, float]
    inner_hi: tuple[float, float, float]
    outer_lo: tuple[float, float, float]
    outer_hi: tuple[float, float, float]

    def __post_init__(self):
        for a in range(3):
            if not (self.outer_lo[a] < self.inner_lo[a] < self.inner_hi[a] < self.outer_hi[a]):
                raise ValueError(
                    f"need outer_lo < inner_lo < inner_hi < outer_hi on axis {a}")

    @classmethod
    def centered(cls, grid: CartesianGrid, inner_fraction: float = 0.5,
                 outer_fraction: float = 0.8) -> "CutoffSpec":
        """Concentric boxes at the given linear fractions of the domain."""
        if not 0 < inner_fraction < outer_fraction < 1:
            raise ValueError("need 0 < inner_fraction < outer_fraction < 1")
        lo_i, hi_i, lo_o, hi_o = [], [], [], []
        for L in grid.lengths:
            c = 0.5 * L
            lo_i.append(c - 0.5 * inner_fraction * L)
            hi_i.append(c + 0.5 * inner_fraction * L)
            lo_o.append(c - 0.5 * outer_fraction * L)
            hi_o.append(c + 0.5 * outer_fraction * L)
        return cls(tuple(lo_i), tuple(hi_i), tuple(lo_o), tuple(hi_o))

    def margin_to_domain(self, grid: CartesianGrid) -> float:
        """Smallest distance from U to the domain boundary."""
        return min(
            min(self.outer_lo[a] - 0.0, grid.lengths[a] - self.outer_hi[a])
            for a in range(3)
        )

    def ramp_width(self) -> float:
        """Smallest ramp width between V and the boundary of U."""
        return min(
            min(self.inner_lo[a] - self.outer_lo[a], self.outer_hi[a] - self.inner_hi[a])
            for a in range(3)
        )

    def validate_for_grid(self, grid: CartesianGrid) -> None:
        if grid.periodic:
            raise ValueError("cutoff probes require a bounded grid")
        hmax = max(grid.spacing)
        if self.ramp_width() < 2 * hmax:
            raise ValueError(
                f"cutoff ramp width {self.ramp_width():.4g} thinner than two "
                f"spacings ({2 * hmax:.4g}); refine the grid or widen the margins")
        if self.margin_to_domain(grid) < 2 * hmax:
            raise ValueError(
                f"margin from U to the domain boundary "
                f"({self.margin_to_domain(grid):.4g}) thinner than two spacings")


def _smoothstep5(t: np.ndarray) -> np.ndarray:
    """Quintic smoothstep 6t^5 - 15t^4 + 10t^3 clamped to [0, 1]; max slope 15/8."""
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (t * (6.0 * t - 15.0) + 10.0)


def cutoff_eta(grid: CartesianGrid, spec: CutoffSpec) -> ScalarField:
    """Cutoff field: 1 on V, 0 outside U, C^2 ramps in between.

    Built as a product over axes of quintic smoothstep ramps, sampled at the
    nodes; the continuous slope bound is (15/8) / ramp width per axis.
    """
    spec.validate_for_grid(grid)
    vals = np.ones(grid.shape)
    for a in range(3):
        x = grid.axis_coordinates(a)
        up = _smoothstep5((x - spec.outer_lo[a]) / (spec.inner_lo[a] - spec.outer_lo[a]))
        down = _smoothstep5((spec.outer_hi[a] - x) / (spec.outer_hi[a] - spec.inner_hi[a]))
        ramp = np.minimum(up, down)
        shape = [1, 1, 1]
        shape[a] = len(x)
        vals = vals * ramp.reshape(shape)
    return ScalarField(vals, grid)


def _lattice_step(grid: CartesianGrid, axis: int, h: float) -> int:
    h_axis = grid.spacing[axis]
    m = h / h_axis
    m_round = int(round(m))
    if m_round < 1 or abs(m - m_round) > 1e-9 * max(1.0, abs(m)):
        raise ValueError(
            f"difference-quotient step h = {h!r} is not a positive lattice "
            f"multiple of spacing {h_axis!r} on axis {axis}")
    if m_round >= grid.counts[axis]:
        raise ValueError(f"step h = {h!r} exceeds the grid extent on axis {axis}")
    return m_round


def difference_quotient(field, axis: int, h: float):
    """Forward difference quotient (phi(x + h e_axis) - phi(x)) / h.

    ``h`` must be a positive integer multiple of the grid spacing along the
    axis, so the shift is exact on the lattice.  Nodes whose shifted point
    falls outside the grid get the value 0; consumers multiply by a cutoff
    that vanishes there.
    """
    grid = field.grid
    m = _lattice_step(grid, axis, h)
    v = field.values
    out = np.zeros_like(v)
    src = [slice(None)] * v.ndim
    dst = [slice(None)] * v.ndim
    spatial_axis = v.ndim - 3 + axis
    src[spatial_axis] = slice(m, None)
    dst[spatial_axis] = slice(None, -m)
    out[tuple(dst)] = (v[tuple(src)] - v[tuple(dst)]) / h
    return type(field)(out, grid)


def _check_h_for_spec(grid: CartesianGrid, spec: CutoffSpec, axis: int, h: float) -> None:
    """Reject steps too large for the cutoff windows.

    The quotient shifts forward along ``axis``, so every node where the
    cutoff is nonzero (strictly inside U) must see valid shifted values,
    including one extra stencil layer for the outer derivatives: this needs
    h + spacing <= distance from the right face of U to the domain boundary.
    (The continuum analysis uses the comfortable sufficient range
    h < dist(U, boundary)/2; the discrete criterion here is the sharp one.)
    """
    m = _lattice_step(grid, axis, h)
    margin_right = grid.lengths[axis] - spec.outer_hi[axis]
    if (m + 1) * grid.spacing[axis] > margin_right + 1e-12:
        raise ValueError(
            f"quotient step h = {h!r} too large for the cutoff window: need "
            f"h + spacing <= {margin_right:.4g} (U to domain boundary, axis {axis})")


def localized_energy(state: SimulationState, p, spec: CutoffSpec,
                     axis: int, h: float) -> EnergyBreakdown:
    """Total energy of the cutoff-weighted difference quotient of a state.

    Replaces each of u, u_t, P, P_t by its difference quotient along
    ``axis`` with step ``h`` and evaluates the energy with the cutoff as
    weight (weight^2 inside every integrand, applied to the
    already-differentiated quotient fields).
    """
    grid = state.grid
    spec.validate_for_grid(grid)
    _check_h_for_spec(grid, spec, axis, h)
    eta = cutoff_eta(grid, spec)
    dq_state = SimulationState(
        time=state.time,
        u=difference_quotient(state.u, axis, h),
        u_t=difference_quotient(state.u_t, axis, h),
        P=difference_quotient(state.P, axis, h),
        P_t=difference_quotient(state.P_t, axis, h),
    )
    return total_energy(dq_state, p, weight=eta)


# ---------------------------------------------------------------------------
# difference-quotient theorem check

@dataclass(frozen=True)
class DQCheckResult:
    lhs: float          # ||D^h phi||_{L2(V)}
    rhs: float          # ||grad phi||_{L2(U)}
    ratio: float
    axis: int
    h: float


def _full_gradient(field):
    """Stack of all axis derivatives of every component, as one array."""
    grid = field.grid
    v = field.values
    comps = v.reshape((-1,) + grid.shape)
    out = np.empty((comps.shape[0], 3) + grid.shape)
    for c in range(comps.shape[0]):
        for a in range(3):
            out[c, a] = axis_derivative(ScalarField(comps[c], grid), a).values
    return out


def dq_theorem_check(field, spec: CutoffSpec, axis: int, h: float) -> DQCheckResult:
    """Ratio ||D^h phi||_{L2(V)} / ||grad phi||_{L2(U)} on nested boxes.

    For p = 2 the continuum constant is 1; smooth fields should stay near
    or below it (a small discrete tolerance applies).  The regions are
    snapped to the node lattice and integrated with trapezoid weights.
    ``field`` may be scalar, vector or tensor valued.
    """
    grid = field.grid
    spec.validate_for_grid(grid)
    _check_h_for_spec(grid, spec, axis, h)
    dq = difference_quotient(field, axis, h)
    region_v = region_slices(grid, spec.inner_lo, spec.inner_hi)
    region_u = region_slices(grid, spec.outer_lo, spec.outer_hi)
    lhs = np.sqrt(integrate_region_sq(dq.values, grid, region_v))
    rhs = np.sqrt(integrate_region_sq(_full_gradient(field), grid, region_u))
    if rhs == 0.0 and lhs > 0.0:
        raise ArithmeticError(
            "difference quotient nonzero while the gradient vanishes; "
            "inconsistent field data")
    ratio = 0.0 if lhs == 0.0 else lhs / rhs
    return DQCheckResult(lhs=lhs, rhs=rhs, ratio=ratio, axis=axis, h=h)


# ---------------------------------------------------------------------------
# h sweep over a trajectory

@dataclass(frozen=True)
class ProbeRow:
    """One (axis, h) entry of the sweep: the sup over recorded times."""

    axis: int
    h: float
    sup_energy: float
    sup_time: float
    breakdown: EnergyBreakdown


def h_sweep_probe(trajectory, spec: CutoffSpec, axes, h_list) -> list[ProbeRow]:
    """Sup over recorded states of the localized energy, per axis and step.

    The trajectory must have been run with ``keep_states=True`` (or its
    states reloaded from snapshots).  The uniform-boundedness witness is the
    max/min spread of the returned suprema.
    """
    if trajectory.states is None or not trajectory.states:
        raise ValueError("trajectory carries no states; run with keep_states=True")
    p = trajectory.params
    rows: list[ProbeRow] = []
    for axis in axes:
        for h in h_list:
            best: EnergyBreakdown | None = None
            best_t = 0.0
            for s in trajectory.states:
                e = localized_energy(s, p, spec, axis, h)
                if best is None or e.total > best.total:
                    best, best_t = e, s.time
            rows.append(ProbeRow(axis=axis, h=float(h), sup_energy=best.total,
                                 sup_time=best_t, breakdown=best))
    return rows


def boundedness_ratio(rows: list[ProbeRow]) -> float:
    """max/min of the sup energies across the whole table."""
    sups = [r.sup_energy for r in rows]
    lo = min(sups)
    if lo <= 0:
        return float("inf") if max(sups) > 0 else 1.0
    return max(sups) / lo
