"""Right-hand side of the equations of motion, time stepping, and runs.

The coupled system advanced here is

    u_tt = Div sigma(grad u - P) + f
    P_tt = sigma(grad u - P) - (2 mu_micro sym P + lambda_micro tr(P) Id)
           - mu_micro L_c^2 Curl Curl P + M

with sigma the non-symmetric Cauchy stress map, unit inertia densities,
Dirichlet data for u and tangential data for the rows of P.  Time
integration is explicit kick-drift-kick leapfrog with one acceleration
evaluation per step; boundary values and rates are re-imposed after every
stage that touches them.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .boundary import BoundaryData, boundary_mask, pinned_component_mask
from .dispersion import assemble_plane_wave_matrix
from .energy import EnergyBreakdown, source_power, total_energy
from .grid import CartesianGrid, SimulationState, TensorField, VectorField
from .materials import MaterialParameters, cauchy_stress, micro_stress, validate_parameters
from .operators import curl_tensor_values, div_tensor_values, gradient_values

__all__ = [
    "SourceTerms",
    "StabilityError",
    "CompatibilityError",
    "ConditionCheck",
    "CompatibilityReport",
    "rhs",
    "cfl_timestep",
    "step_leapfrog",
    "check_compatibility",
    "SimulationPlan",
    "Trajectory",
    "run_simulation",
]

FieldFn = Callable[[CartesianGrid, float], np.ndarray]


class StabilityError(RuntimeError):
    """Raised when the integrator produces non-finite values."""


class CompatibilityError(ValueError):
    """Raised when initial data contradict the boundary data at t = 0."""

    def __init__(self, report: "CompatibilityReport"):
        self.report = report
        super().__init__("incompatible initial/boundary data:\n" + report.summary())


@dataclass
class SourceTerms:
    """Body force f (vector) and body moment tensor M, as callables of (grid, t)."""

    f: Optional[FieldFn] = None
    M: Optional[FieldFn] = None

    @classmethod
    def none(cls) -> "SourceTerms":
        return cls()

    def f_at(self, grid: CartesianGrid, t: float) -> np.ndarray | None:
        return None if self.f is None else np.asarray(self.f(grid, t), dtype=float)

    def M_at(self, grid: CartesianGrid, t: float) -> np.ndarray | None:
        return None if self.M is None else np.asarray(self.M(grid, t), dtype=float)


def _rhs_values(u: np.ndarray, P: np.ndarray, grid: CartesianGrid,
                p: MaterialParameters,
                f: np.ndarray | None, M: np.ndarray | None):
    E = gradient_values(u, grid)
    E -= P
    sig = cauchy_stress(p, E)
    a_u = div_tensor_values(sig, grid)
    if f is not None:
        a_u += f
    a_P = sig
    a_P -= micro_stress(p, P)
    curl2 = curl_tensor_values(curl_tensor_values(P, grid), grid)
    a_P -= p.curvature_modulus * curl2
    if M is not None:
        a_P += M
    return a_u, a_P


def rhs(state: SimulationState, p: MaterialParameters, src: SourceTerms,
        t: float) -> tuple[VectorField, TensorField]:
    """Accelerations (u_tt, P_tt) of the coupled system at time t."""
    grid = state.grid
    a_u, a_P = _rhs_values(state.u.values, state.P.values, grid, p,
                           src.f_at(grid, t), src.M_at(grid, t))
    return VectorField(a_u, grid), TensorField(a_P, grid)


def _nyquist_wavevectors(grid: CartesianGrid):
    knyq = [math.pi / h for h in grid.spacing]
    for combo in itertools.product((0, 1), repeat=3):
        if any(combo):
            yield np.array([c * k for c, k in zip(combo, knyq)])


def cfl_timestep(p: MaterialParameters, grid: CartesianGrid,
                 safety: float = 0.5) -> float:
    """Time step h_min / c_max scaled by ``safety``.

    c_max^2 is the largest eigenvalue of the plane-wave matrix over the
    grid's Nyquist wavevectors.  This is a deliberately conservative
    practical bound; leapfrog stability below it is a tested property.
    """
    if not 0.0 < safety <= 1.0:
        raise ValueError(f"safety must lie in (0, 1], got {safety}")
    validate_parameters(p)
    c_max_sq = max(
        float(assemble_plane_wave_matrix(p, k).eigenvalues().max())
        for k in _nyquist_wavevectors(grid)
    )
    return safety * min(grid.spacing) / math.sqrt(c_max_sq)


def _check_finite(state: SimulationState, step: int) -> None:
    for name, arr in (("u", state.u.values), ("P", state.P.values)):
        if not np.isfinite(arr).all():
            raise StabilityError(
                f"non-finite {name} after step {step} (t = {state.time:.6g}); "
                "the run went unstable - reduce dt or check the data")


def _advance_in_place(state: SimulationState, p: MaterialParameters,
                      src: SourceTerms, bc: BoundaryData | None, dt: float,
                      accel) -> tuple:
    """One kick-drift-kick step mutating ``state``; returns the new accelerations."""
    grid = state.grid
    a_u, a_P = accel
    # kick to the half step
    state.u_t.values += (0.5 * dt) * a_u
    state.P_t.values += (0.5 * dt) * a_P
    # drift
    state.u.values += dt * state.u_t.values
    state.P.values += dt * state.P_t.values
    state.time += dt
    if bc is not None:
        bc.impose_values(state.u.values, state.P.values, grid, state.time)
    # closing kick with the new accelerations
    a_u, a_P = _rhs_values(state.u.values, state.P.values, grid, p,
                           src.f_at(grid, state.time),
                           src.M_at(grid, state.time))
    state.u_t.values += (0.5 * dt) * a_u
    state.P_t.values += (0.5 * dt) * a_P
    if bc is not None:
        bc.impose_rates(state.u_t.values, state.P_t.values, grid, state.time)
    return a_u, a_P


def step_leapfrog(state: SimulationState, p: MaterialParameters,
                  src: SourceTerms, bc: BoundaryData | None,
                  dt: float) -> SimulationState:
    """Advance a state by one leapfrog step and return the new state.

    Isolated calls evaluate the acceleration at the entry time; the run
    loop amortizes this to one evaluation per step by reusing the closing
    kick's accelerations.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    grid = state.grid
    if grid.periodic:
        bc = None
    new = state.copy()
    accel = _rhs_values(new.u.values, new.P.values, grid, p,
                        src.f_at(grid, new.time), src.M_at(grid, new.time))
    _advance_in_place(new, p, src, bc, dt, accel)
    _check_finite(new, step=1)
    return new


# ---------------------------------------------------------------------------
# compatibility of initial and boundary data

@dataclass(frozen=True)
class ConditionCheck:
    name: str
    max_violation: float
    tol: float
    worst_node: tuple[int, int, int] | None

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tol

    def describe(self) -> str:
        status = "ok" if self.passed else "VIOLATED"
        where = "" if self.worst_node is None else f" (worst node {self.worst_node})"
        return f"{self.name}: max |mismatch| = {self.max_violation:.3e}, tol = {self.tol:.1e} -> {status}{where}"


@dataclass(frozen=True)
class CompatibilityReport:
    conditions: tuple[ConditionCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions)

    def violations(self) -> list[ConditionCheck]:
        return [c for c in self.conditions if not c.passed]

    def summary(self) -> str:
        return "\n".join(c.describe() for c in self.conditions)


def _masked_max(diff: np.ndarray, mask: np.ndarray):
    """Max of |diff| over masked nodes and the worst node index."""
    mag = np.abs(diff)
    while mag.ndim > 3:
        mag = mag.max(axis=0)
    mag = np.where(mask, mag, -1.0)
    flat = int(np.argmax(mag))
    worst = tuple(int(i) for i in np.unravel_index(flat, mag.shape))
    return float(mag.flat[flat]), worst


def check_compatibility(u0: VectorField, u1: VectorField, P0: TensorField,
                        P1: TensorField, bc: BoundaryData,
                        tol: float) -> CompatibilityReport:
    """Verify the initial data agree with the boundary data at t = 0.

    Checks, in max norm over boundary nodes: u(0) = g(.,0), u_t(0) = g_t(.,0),
    and for each pinned tangential component of P and P_t agreement with the
    extension field and its rate (equivalently, row x n = G and row x n = G_t;
    for homogeneous data the tangential rows must vanish).
    """
    grid = u0.grid
    if grid.periodic:
        raise ValueError("compatibility is only defined for bounded grids")
    bm = boundary_mask(grid)
    conditions = []

    g0 = bc.g(grid, 0.0) if bc.g is not None else 0.0
    viol, node = _masked_max(u0.values - g0, bm)
    conditions.append(ConditionCheck("u(0) = g(.,0) on boundary", viol, tol, node))

    g1 = bc.g_t(grid, 0.0) if bc.g_t is not None else 0.0
    viol, node = _masked_max(u1.values - g1, bm)
    conditions.append(ConditionCheck("u_t(0) = g_t(.,0) on boundary", viol, tol, node))

    G0 = bc.G_ext(grid, 0.0) if bc.G_ext is not None else None
    G1 = bc.G_ext_t(grid, 0.0) if bc.G_ext_t is not None else None
    for label, P, G in (("P(0) rows x n = G(.,0)", P0, G0),
                        ("P_t(0) rows x n = G_t(.,0)", P1, G1)):
        worst_v, worst_n = 0.0, None
        for j in range(3):
            pm = pinned_component_mask(grid, j)
            target = 0.0 if G is None else G[:, j]
            v, n = _masked_max(P.values[:, j] - target, pm)
            if v > worst_v or worst_n is None:
                worst_v, worst_n = v, n
        conditions.append(ConditionCheck(label, worst_v, tol, worst_n))

    return CompatibilityReport(tuple(conditions))


# ---------------------------------------------------------------------------
# full runs

@dataclass
class SimulationPlan:
    """Everything a run needs besides the output layer.

    ``dt`` overrides the CFL-derived step when given.  ``record_every``
    controls the energy/power sampling stride (the final step is always
    recorded); ``keep_states`` retains state copies at record times for
    post-processing such as the regularity probe.
    """

    params: MaterialParameters
    initial: SimulationState
    sources: SourceTerms = field(default_factory=SourceTerms.none)
    bc: BoundaryData = field(default_factory=BoundaryData.homogeneous)
    T: float = 1.0
    cfl_safety: float = 0.5
    dt: Optional[float] = None
    record_every: int = 1
    keep_states: bool = False
    compatibility_tol: Optional[float] = 1e-9
    on_record: Optional[Callable[[SimulationState], None]] = None


@dataclass
class Trajectory:
    """Energy/power series of a run, with optional state snapshots."""

    times: np.ndarray
    energies: list[EnergyBreakdown]
    powers: np.ndarray
    dt: float
    record_every: int
    grid: CartesianGrid
    params: MaterialParameters
    states: Optional[list[SimulationState]] = None

    def energy_totals(self) -> np.ndarray:
        return np.asarray([e.total for e in self.energies])


def run_simulation(plan: SimulationPlan) -> Trajectory:
    """Advance the plan's initial state to time T, recording diagnostics.

    Deterministic given the plan.  Raises :class:`CompatibilityError` if the
    initial data contradict the boundary data (bounded grids only) and
    :class:`StabilityError` on non-finite fields.
    """
    p = validate_parameters(plan.params)
    state = plan.initial.copy()
    grid = state.grid
    bc = None if grid.periodic else plan.bc
    if plan.T < 0:
        raise ValueError("final time T must be nonnegative")
    if plan.record_every < 1:
        raise ValueError("record_every must be >= 1")

    if bc is not None and plan.compatibility_tol is not None:
        report = check_compatibility(state.u, state.u_t, state.P, state.P_t,
                                     bc, plan.compatibility_tol)
        if not report.passed:
            raise CompatibilityError(report)

    if bc is not None:
        bc.impose_values(state.u.values, state.P.values, grid, state.time)
        bc.impose_rates(state.u_t.values, state.P_t.values, grid, state.time)

    dt_target = plan.dt if plan.dt is not None else cfl_timestep(p, grid, plan.cfl_safety)
    if dt_target <= 0:
        raise ValueError("time step must be positive")
    if plan.T == 0:
        n_steps, dt = 0, dt_target
    else:
        n_steps = max(1, int(math.ceil(plan.T / dt_target - 1e-12)))
        dt = plan.T / n_steps

    times: list[float] = []
    energies: list[EnergyBreakdown] = []
    powers: list[float] = []
    states: list[SimulationState] | None = [] if plan.keep_states else None

    def record(s: SimulationState, t: float):
        times.append(t)
        energies.append(total_energy(s, p))
        powers.append(source_power(s, plan.sources.f_at(grid, t),
                                   plan.sources.M_at(grid, t)))
        if states is not None:
            states.append(s.copy())
        if plan.on_record is not None:
            plan.on_record(s)

    record(state, state.time)
    accel = _rhs_values(state.u.values, state.P.values, grid, p,
                        plan.sources.f_at(grid, state.time),
                        plan.sources.M_at(grid, state.time))
    for step in range(1, n_steps + 1):
        accel = _advance_in_place(state, p, plan.sources, bc, dt, accel)
        state.time = step * dt  # avoid accumulated roundoff in record times
        _check_finite(state, step)
        if step % plan.record_every == 0 or step == n_steps:
            record(state, state.time)

    return Trajectory(times=np.asarray(times), energies=energies,
                      powers=np.asarray(powers), dt=dt,
                      record_every=plan.record_every, grid=grid, params=p,
                      states=states)
