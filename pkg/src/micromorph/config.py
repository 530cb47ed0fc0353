"""Run configuration: JSON document parsing and cross-validation.

A configuration is a single JSON object.  Every violated constraint is
collected and reported with its JSON-pointer path, so a bad file produces
one complete report instead of a fail-stop on the first problem.

Sections (all optional unless noted):

  grid        {lengths: [3 floats], counts: [3 ints], periodic: bool}   (required)
  parameters  the six constitutive constants                            (required)
  time        {T, cfl_safety, dt, record_every}
  initial     {mode: zero|catalog|files, case?, dir?}
  bc          {mode: homogeneous|catalog, case?}
  sources     {mode: none|catalog|files, case?, f?, M?}
  probe       {inner_lo, inner_hi, outer_lo, outer_hi, axes, h_multiples | h_values}
  dispersion  {direction, k_max, samples, gap_resolution}
  outputs     {directory, snapshot_every}
  seed        64-bit integer for the randomized diagnostics
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .grid import CartesianGrid
from .materials import MaterialParameters, parameter_violations
from .mms import CASE_NAMES
from .probe import CutoffSpec

__all__ = ["ConfigError", "RunConfig", "parse_config", "DEFAULT_SEED"]

DEFAULT_SEED = 20240

_PARAM_FIELDS = ("mu_e", "lambda_e", "mu_c", "mu_micro", "lambda_micro", "L_c")


class ConfigError(ValueError):
    """Aggregated validation failure; each entry is (json_pointer, message)."""

    def __init__(self, issues: list[tuple[str, str]]):
        self.issues = issues
        lines = [f"  {ptr}: {msg}" for ptr, msg in issues]
        super().__init__("invalid configuration:\n" + "\n".join(lines))

    def as_json(self) -> list[dict[str, str]]:
        return [{"path": ptr, "message": msg} for ptr, msg in self.issues]


@dataclass
class RunConfig:
    """Validated configuration, ready to be turned into a simulation plan."""

    grid: CartesianGrid
    parameters: MaterialParameters
    T: float = 1.0
    cfl_safety: float = 0.5
    dt: float | None = None
    record_every: int = 1
    initial_mode: str = "zero"
    initial_case: str | None = None
    initial_dir: str | None = None
    bc_mode: str = "homogeneous"
    bc_case: str | None = None
    sources_mode: str = "none"
    sources_case: str | None = None
    sources_f: str | None = None
    sources_M: str | None = None
    probe_spec: CutoffSpec | None = None
    probe_axes: tuple[int, ...] = (0, 1, 2)
    probe_h: tuple[float, ...] = ()
    dispersion_direction: tuple[float, float, float] = (1.0, 0.0, 0.0)
    dispersion_k_max: float = 10.0
    dispersion_samples: int = 201
    dispersion_gap_resolution: float = 0.05
    out_dir: str = "out"
    snapshot_every: int | None = None
    seed: int = DEFAULT_SEED
    raw: dict = field(default_factory=dict)


class _Collector:
    def __init__(self):
        self.issues: list[tuple[str, str]] = []

    def add(self, pointer: str, message: str):
        self.issues.append((pointer, message))

    def require(self, cond: bool, pointer: str, message: str) -> bool:
        if not cond:
            self.add(pointer, message)
        return cond


def _get_triple(doc, key, pointer, collector, kind=float):
    val = doc.get(key)
    if not isinstance(val, (list, tuple)) or len(val) != 3:
        collector.add(f"{pointer}/{key}", "expected a list of three numbers")
        return None
    try:
        return tuple(kind(v) for v in val)
    except (TypeError, ValueError):
        collector.add(f"{pointer}/{key}", "entries must be numeric")
        return None


def parse_config(path) -> RunConfig:
    """Parse and cross-validate a JSON run configuration file."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError([("/", f"file not found: {path}")])
    except json.JSONDecodeError as e:
        raise ConfigError([("/", f"not valid JSON: {e}")])
    if not isinstance(doc, dict):
        raise ConfigError([("/", "top level must be a JSON object")])

    c = _Collector()
    cfg = RunConfig.__new__(RunConfig)  # filled below; validated at the end
    raw = doc

    # grid -------------------------------------------------------------
    grid = None
    gdoc = doc.get("grid")
    if not isinstance(gdoc, dict):
        c.add("/grid", "required object with lengths and counts")
    else:
        lengths = _get_triple(gdoc, "lengths", "/grid", c, float)
        counts = _get_triple(gdoc, "counts", "/grid", c, int)
        periodic = bool(gdoc.get("periodic", False))
        if lengths and counts:
            try:
                grid = CartesianGrid(lengths, counts, periodic=periodic)
            except ValueError as e:
                c.add("/grid", str(e))

    # parameters ---------------------------------------------------------
    params = None
    pdoc = doc.get("parameters")
    if not isinstance(pdoc, dict):
        c.add("/parameters", "required object with the six constitutive constants")
    else:
        missing = [k for k in _PARAM_FIELDS if k not in pdoc]
        for k in missing:
            c.add(f"/parameters/{k}", "missing")
        if not missing:
            try:
                params = MaterialParameters(**{k: float(pdoc[k]) for k in _PARAM_FIELDS})
            except (TypeError, ValueError):
                c.add("/parameters", "entries must be numeric")
        if params is not None:
            for violation in parameter_violations(params):
                name = violation.split()[0].split("*")[-1]
                c.add(f"/parameters/{name}", f"admissibility violated: {violation}")

    # time -------------------------------------------------------------
    tdoc = doc.get("time", {})
    T = float(tdoc.get("T", 1.0))
    cfl_safety = float(tdoc.get("cfl_safety", 0.5))
    dt = tdoc.get("dt")
    dt = None if dt is None else float(dt)
    record_every = int(tdoc.get("record_every", 1))
    c.require(T >= 0, "/time/T", f"must be nonnegative, got {T}")
    c.require(0 < cfl_safety <= 1, "/time/cfl_safety",
              f"must lie in (0, 1], got {cfl_safety}")
    if dt is not None:
        c.require(dt > 0, "/time/dt", f"must be positive, got {dt}")
    c.require(record_every >= 1, "/time/record_every",
              f"must be a positive integer, got {record_every}")

    # initial / bc / sources ------------------------------------------------
    def mode_of(section: str, allowed: tuple[str, ...], default: str) -> tuple[str, dict]:
        sdoc = doc.get(section, {"mode": default})
        if not isinstance(sdoc, dict):
            c.add(f"/{section}", "expected an object")
            return default, {}
        mode = sdoc.get("mode", default)
        if mode not in allowed:
            c.add(f"/{section}/mode", f"expected one of {allowed}, got {mode!r}")
            mode = default
        return mode, sdoc

    def case_of(section: str, sdoc: dict) -> str | None:
        case = sdoc.get("case")
        if case is None:
            c.add(f"/{section}/case", "required for catalog mode")
        elif case not in CASE_NAMES:
            c.add(f"/{section}/case", f"unknown case {case!r}; available: {CASE_NAMES}")
        return case

    initial_mode, sdoc = mode_of("initial", ("zero", "catalog", "files"), "zero")
    initial_case = case_of("initial", sdoc) if initial_mode == "catalog" else None
    initial_dir = sdoc.get("dir") if initial_mode == "files" else None
    if initial_mode == "files" and not initial_dir:
        c.add("/initial/dir", "required for files mode")

    bc_mode, sdoc = mode_of("bc", ("homogeneous", "catalog"), "homogeneous")
    bc_case = case_of("bc", sdoc) if bc_mode == "catalog" else None

    sources_mode, sdoc = mode_of("sources", ("none", "catalog", "files"), "none")
    sources_case = case_of("sources", sdoc) if sources_mode == "catalog" else None
    sources_f = sdoc.get("f") if sources_mode == "files" else None
    sources_M = sdoc.get("M") if sources_mode == "files" else None
    if sources_mode == "files" and not (sources_f or sources_M):
        c.add("/sources", "files mode needs at least one of f, M")

    # probe -------------------------------------------------------------
    probe_spec = None
    probe_axes: tuple[int, ...] = (0, 1, 2)
    probe_h: tuple[float, ...] = ()
    prdoc = doc.get("probe")
    if prdoc is not None and grid is not None:
        if not isinstance(prdoc, dict):
            c.add("/probe", "expected an object")
        else:
            corners = {}
            for key in ("inner_lo", "inner_hi", "outer_lo", "outer_hi"):
                corners[key] = _get_triple(prdoc, key, "/probe", c, float)
            if all(v is not None for v in corners.values()):
                try:
                    probe_spec = CutoffSpec(**corners)
                    probe_spec.validate_for_grid(grid)
                except ValueError as e:
                    c.add("/probe", str(e))
            axes = prdoc.get("axes", [0, 1, 2])
            if not all(a in (0, 1, 2) for a in axes):
                c.add("/probe/axes", f"axes must be 0, 1 or 2, got {axes}")
            else:
                probe_axes = tuple(int(a) for a in axes)
            if "h_values" in prdoc:
                hs = []
                for i, h in enumerate(prdoc["h_values"]):
                    h = float(h)
                    m = h / grid.spacing[0]
                    if abs(m - round(m)) > 1e-9 * max(1.0, abs(m)) or round(m) < 1:
                        c.add(f"/probe/h_values/{i}",
                              f"{h} is not a positive lattice multiple of spacing "
                              f"{grid.spacing[0]}")
                    else:
                        hs.append(h)
                probe_h = tuple(hs)
            else:
                mult = prdoc.get("h_multiples", [4, 2, 1])
                bad = [m for m in mult if int(m) != m or m < 1]
                if bad:
                    c.add("/probe/h_multiples", f"must be positive integers, got {bad}")
                else:
                    probe_h = tuple(int(m) * grid.spacing[0] for m in mult)

    # dispersion ----------------------------------------------------------
    ddoc = doc.get("dispersion", {})
    direction = tuple(ddoc.get("direction", (1.0, 0.0, 0.0)))
    if len(direction) != 3 or all(abs(x) < 1e-300 for x in direction):
        c.add("/dispersion/direction", "need a nonzero 3-vector")
        direction = (1.0, 0.0, 0.0)
    k_max = float(ddoc.get("k_max", 10.0))
    samples = int(ddoc.get("samples", 201))
    gap_resolution = float(ddoc.get("gap_resolution", 0.05))
    c.require(k_max > 0, "/dispersion/k_max", f"must be positive, got {k_max}")
    c.require(samples >= 2, "/dispersion/samples", f"need at least 2, got {samples}")
    c.require(gap_resolution > 0, "/dispersion/gap_resolution",
              f"must be positive, got {gap_resolution}")

    # outputs / seed --------------------------------------------------------
    odoc = doc.get("outputs", {})
    out_dir = str(odoc.get("directory", "out"))
    snapshot_every = odoc.get("snapshot_every")
    if snapshot_every is not None:
        snapshot_every = int(snapshot_every)
        c.require(snapshot_every >= 1, "/outputs/snapshot_every",
                  f"must be a positive integer, got {snapshot_every}")
    seed = int(doc.get("seed", DEFAULT_SEED))

    if c.issues:
        raise ConfigError(c.issues)

    cfg.__init__(
        grid=grid, parameters=params, T=T, cfl_safety=cfl_safety, dt=dt,
        record_every=record_every,
        initial_mode=initial_mode, initial_case=initial_case, initial_dir=initial_dir,
        bc_mode=bc_mode, bc_case=bc_case,
        sources_mode=sources_mode, sources_case=sources_case,
        sources_f=sources_f, sources_M=sources_M,
        probe_spec=probe_spec, probe_axes=probe_axes, probe_h=probe_h,
        dispersion_direction=tuple(float(x) for x in direction),
        dispersion_k_max=k_max, dispersion_samples=samples,
        dispersion_gap_resolution=gap_resolution,
        out_dir=out_dir, snapshot_every=snapshot_every, seed=seed, raw=raw,
    )
    return cfg
