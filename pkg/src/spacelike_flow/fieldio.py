"""Field and state serialization.

Binary field layout (all little-endian)::

    offset  type      content
    0       4 bytes   magic b"SLF1"
    4       uint32    dimension
    8       uint32    nodes_per_axis
    12      float64   period
    20      uint32    rank (number of tensor slots; 0 scalar, 2 metric-like)
    24      float64[] values, node-major: nodes in row-major grid order, and
                      for each node its dimension**rank components in
                      row-major index order

The JSON variant carries the same header keys plus ``values`` as a nested
node-major list; it is meant for small grids. A state is a directory with
``state.json`` (t, scenario, parameters, grid) next to ``g.bin`` and ``h.bin``.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .geometry_fields import GridChart, component_major, node_major
from .spacelike_core import SpacelikeState

MAGIC = b"SLF1"
_HEADER = struct.Struct("<4sIIdI")


def _rank(grid, a):
    rank = a.ndim - grid.dimension
    if rank < 0 or a.shape[rank:] != grid.shape or any(s != grid.dimension for s in a.shape[:rank]):
        raise ValueError(f"array of shape {a.shape} is not a field on {grid}")
    return rank


def field_to_bytes(grid, a):
    a = np.asarray(a, dtype=float)
    rank = _rank(grid, a)
    body = np.ascontiguousarray(node_major(a, grid.dimension), dtype="<f8")
    return _HEADER.pack(MAGIC, grid.dimension, grid.nodes_per_axis, grid.period, rank) + body.tobytes()


def field_from_bytes(data):
    magic, dim, nodes, period, rank = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    grid = GridChart(dim, nodes, period)
    body = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
    expected = nodes**dim * dim**rank
    if body.size != expected:
        raise ValueError(f"expected {expected} values, found {body.size}")
    a = body.reshape(grid.shape + (dim,) * rank).astype(float)
    return grid, component_major(a, dim)


def write_field(path, grid, a):
    Path(path).write_bytes(field_to_bytes(grid, a))


def read_field(path):
    return field_from_bytes(Path(path).read_bytes())


def field_to_json(grid, a):
    a = np.asarray(a, dtype=float)
    rank = _rank(grid, a)
    return {
        "dimension": grid.dimension,
        "nodes_per_axis": grid.nodes_per_axis,
        "period": grid.period,
        "rank": rank,
        "values": node_major(a, grid.dimension).tolist(),
    }


def field_from_json(doc):
    grid = GridChart(doc["dimension"], doc["nodes_per_axis"], doc["period"])
    a = np.asarray(doc["values"], dtype=float)
    if a.shape != grid.shape + (grid.dimension,) * doc["rank"]:
        raise ValueError(f"values have shape {a.shape}")
    return grid, component_major(a, grid.dimension)


def load_field(path):
    """Read a field from ``.json`` or the binary layout, by extension."""
    path = Path(path)
    if path.suffix == ".json":
        return field_from_json(json.loads(path.read_text()))
    return read_field(path)


def save_state(directory, state, scenario=None, parameters=None):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_field(directory / "g.bin", state.grid, state.g)
    write_field(directory / "h.bin", state.grid, state.h)
    header = {
        "t": state.t,
        "scenario": scenario,
        "parameters": parameters or {},
        "grid": {
            "dimension": state.grid.dimension,
            "nodes_per_axis": state.grid.nodes_per_axis,
            "period": state.grid.period,
        },
        "files": {"g": "g.bin", "h": "h.bin"},
    }
    (directory / "state.json").write_text(json.dumps(header, indent=2, sort_keys=True))
    return directory


def load_state(directory):
    directory = Path(directory)
    header = json.loads((directory / "state.json").read_text())
    grid, g = read_field(directory / header["files"]["g"])
    grid_h, h = read_field(directory / header["files"]["h"])
    if grid_h != grid:
        raise ValueError("g and h live on different grids")
    return SpacelikeState(grid, g, h, header["t"], meta=header)
