"""Binary field snapshots: raw float64 per component plus a JSON sidecar.

Each component is a header-free flat array of 64-bit floats in x-fastest
order (the first grid index varies fastest in the file).  A field named
``u`` on a grid with counts (nx, ny, nz) becomes ``u_1.f64`` .. ``u_3.f64``
(vectors) or ``u_11.f64`` .. ``u_33.f64`` (tensors) next to a sidecar
``u.json`` recording the grid counts, lengths, time, field name, and the
component order.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .grid import CartesianGrid, SimulationState, TensorField, VectorField

__all__ = [
    "write_field",
    "read_field",
    "write_state",
    "read_state",
    "state_dirs",
]

_VECTOR_COMPONENTS = ("1", "2", "3")
_TENSOR_COMPONENTS = tuple(f"{i}{j}" for i in range(1, 4) for j in range(1, 4))


def _component_list(values: np.ndarray) -> tuple[tuple[str, ...], np.ndarray]:
    if values.ndim == 4:
        return _VECTOR_COMPONENTS, values
    if values.ndim == 5:
        return _TENSOR_COMPONENTS, values.reshape((9,) + values.shape[2:])
    raise ValueError("expected a vector or tensor field")


def write_field(directory, name: str, field, time: float) -> Path:
    """Write one vector/tensor field; returns the sidecar path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    comps, flat = _component_list(field.values)
    for label, comp in zip(comps, flat):
        # ravel in Fortran order so the x index varies fastest on disk
        comp.astype(np.float64).ravel(order="F").tofile(directory / f"{name}_{label}.f64")
    grid = field.grid
    sidecar = {
        "field": name,
        "components": [f"{name}_{label}" for label in comps],
        "counts": list(grid.counts),
        "lengths": list(grid.lengths),
        "periodic": grid.periodic,
        "time": time,
        "order": "x-fastest",
        "dtype": "float64",
    }
    path = directory / f"{name}.json"
    path.write_text(json.dumps(sidecar, sort_keys=True, indent=2) + "\n")
    return path


def read_field(directory, name: str):
    """Read a field written by :func:`write_field`; returns (field, time)."""
    directory = Path(directory)
    meta = json.loads((directory / f"{name}.json").read_text())
    grid = CartesianGrid(tuple(meta["lengths"]), tuple(meta["counts"]),
                         periodic=meta.get("periodic", False))
    shape = grid.shape
    comps = []
    for comp_name in meta["components"]:
        raw = np.fromfile(directory / f"{comp_name}.f64", dtype=np.float64)
        if raw.size != grid.node_count:
            raise ValueError(
                f"{comp_name}.f64 holds {raw.size} values, expected {grid.node_count}")
        comps.append(raw.reshape(shape, order="F"))
    stack = np.stack(comps)
    if len(comps) == 3:
        field = VectorField(stack, grid)
    elif len(comps) == 9:
        field = TensorField(stack.reshape((3, 3) + shape), grid)
    else:
        raise ValueError(f"unexpected component count {len(comps)} for {name}")
    return field, float(meta["time"])


_STATE_FIELDS = ("u", "u_t", "P", "P_t")


def write_state(directory, state: SimulationState) -> Path:
    """Write all four state fields into one snapshot directory."""
    directory = Path(directory)
    for name in _STATE_FIELDS:
        write_field(directory, name, getattr(state, name), state.time)
    return directory


def read_state(directory) -> SimulationState:
    directory = Path(directory)
    fields = {}
    time = 0.0
    for name in _STATE_FIELDS:
        fields[name], time = read_field(directory, name)
    return SimulationState(time=time, **fields)


def state_dirs(trajectory_dir) -> list[Path]:
    """Snapshot subdirectories of a trajectory output, in time order."""
    root = Path(trajectory_dir)
    snap_root = root / "snapshots" if (root / "snapshots").is_dir() else root
    dirs = sorted(d for d in snap_root.iterdir()
                  if d.is_dir() and (d / "u.json").exists())
    return dirs
