"""Deterministic file formats: npz grids, CSV tables, raw trajectories.

All writers produce byte-identical output for identical inputs.  The npz
container is written through zipfile with a pinned timestamp because the
stock savez embeds the current time in every member header.  CSV floats
use repr (shortest round-trip form).  Trajectory spills are fixed-layout
little-endian records behind a small header.
"""

from __future__ import annotations

import hashlib
import io as _io
import json
import zipfile
from typing import Mapping

import numpy as np

from .density import GridDensity1D, GridDensity2D, GridDensity3D
from .errors import IncompatibleGridError
from .geometry import BoxDims, PairKind
from .montecarlo import JointHistogram, TrajectoryBatch

__all__ = [
    "config_hash",
    "load_density",
    "load_histograms",
    "read_trajectories",
    "save_density",
    "save_histograms",
    "write_density_csv",
    "write_npz",
    "write_series_csv",
    "write_trajectories",
]

_TRAJ_MAGIC = b"BOXPATH\x01"
_TRAJ_DTYPE = np.dtype(
    [
        ("entry_face", "u1"),
        ("exit_face", "u1"),
        ("entry_a", "<f8"),
        ("entry_b", "<f8"),
        ("exit_a", "<f8"),
        ("exit_b", "<f8"),
        ("length", "<f8"),
    ]
)


def write_npz(path, arrays: Mapping[str, np.ndarray]) -> None:
    """Write an npz archive with fixed member timestamps (reproducible bytes)."""
    with zipfile.ZipFile(path, "w", zipfile.ZIP_DEFLATED) as zf:
        for name in arrays:
            buf = _io.BytesIO()
            np.lib.format.write_array(buf, np.asanyarray(arrays[name]), allow_pickle=False)
            info = zipfile.ZipInfo(name + ".npy", date_time=(1980, 1, 1, 0, 0, 0))
            info.compress_type = zipfile.ZIP_DEFLATED
            info.external_attr = 0o644 << 16
            zf.writestr(info, buf.getvalue())


def _meta_array(meta: Mapping) -> np.ndarray:
    return np.frombuffer(json.dumps(meta, sort_keys=True).encode(), dtype=np.uint8)


def _meta_load(arr: np.ndarray) -> dict:
    return json.loads(bytes(arr).decode())


def save_density(path, density: GridDensity1D | GridDensity2D | GridDensity3D, meta: Mapping | None = None) -> None:
    """Serialize a gridded density plus free-form JSON metadata."""
    if isinstance(density, GridDensity1D):
        domain = np.array([[density.lo, density.hi]])
        names = ["x"]
    elif isinstance(density, GridDensity2D):
        domain = np.array(density.domain)
        names = list(density.axis_names)
    elif isinstance(density, GridDensity3D):
        domain = np.array(density.domain)
        names = list(density.axis_names)
    else:
        raise TypeError(f"cannot serialize {type(density).__name__}")
    write_npz(
        path,
        {
            "domain": domain,
            "values": density.values,
            "axis_names": np.array(names),
            "meta": _meta_array(dict(meta or {})),
        },
    )


def load_density(path) -> tuple[GridDensity1D | GridDensity2D | GridDensity3D, dict]:
    with np.load(path) as z:
        domain = z["domain"]
        values = z["values"]
        names = [str(s) for s in z["axis_names"]]
        meta = _meta_load(z["meta"])
    if values.ndim == 1:
        return GridDensity1D(domain[0, 0], domain[0, 1], values), meta
    if values.ndim == 2:
        return GridDensity2D(tuple(map(tuple, domain)), values, tuple(names)), meta
    if values.ndim == 3:
        return GridDensity3D(tuple(map(tuple, domain)), values, tuple(names)), meta
    raise IncompatibleGridError(f"unsupported density rank {values.ndim}")


def save_histograms(path, hists: Mapping[str, JointHistogram], meta: Mapping | None = None) -> None:
    """Serialize a label -> JointHistogram mapping into one npz archive."""
    arrays: dict[str, np.ndarray] = {"meta": _meta_array(dict(meta or {}))}
    index = []
    for label in sorted(hists):
        h = hists[label]
        index.append(
            {"label": label, "kind": h.kind.value, "indices": list(h.indices), "total": h.total}
        )
        arrays[f"{label}/n_edges"] = h.n_edges
        arrays[f"{label}/u_edges"] = h.u_edges
        arrays[f"{label}/v_edges"] = h.v_edges
        arrays[f"{label}/counts"] = h.counts
    arrays["index"] = _meta_array({"histograms": index})
    write_npz(path, arrays)


def load_histograms(path) -> tuple[dict[str, JointHistogram], dict]:
    with np.load(path) as z:
        index = _meta_load(z["index"])["histograms"]
        meta = _meta_load(z["meta"])
        out = {}
        for item in index:
            label = item["label"]
            out[label] = JointHistogram(
                PairKind(item["kind"]),
                tuple(item["indices"]),
                z[f"{label}/n_edges"],
                z[f"{label}/u_edges"],
                z[f"{label}/v_edges"],
                z[f"{label}/counts"],
                int(item["total"]),
            )
    return out, meta


def _format_float(v: float) -> str:
    return repr(float(v))


def write_density_csv(path, density: GridDensity1D | GridDensity2D | GridDensity3D, value_name: str = "density") -> None:
    """Tabulate grid nodes and values; one row per node, C order."""
    if isinstance(density, GridDensity1D):
        names, axes = ["x"], [density.nodes]
    else:
        names = list(density.axis_names)
        axes = [density.nodes(a) for a in range(len(names))]
    values = np.atleast_1d(density.values)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(names + [value_name]) + "\n")
        mesh = np.meshgrid(*axes, indexing="ij")
        flat = [m.ravel() for m in mesh] + [values.ravel()]
        for row in zip(*flat):
            fh.write(",".join(_format_float(v) for v in row) + "\n")


def write_series_csv(path, columns: Mapping[str, np.ndarray]) -> None:
    """Write named columns of equal length as CSV."""
    names = list(columns)
    arrs = [np.asarray(columns[n]).ravel() for n in names]
    if len({a.size for a in arrs}) != 1:
        raise ValueError("all columns must have the same length")
    with open(path, "w", newline="") as fh:
        fh.write(",".join(names) + "\n")
        for row in zip(*arrs):
            fh.write(",".join(_format_float(v) for v in row) + "\n")


def write_trajectories(path, batch: TrajectoryBatch) -> None:
    """Raw little-endian spill: 8-byte magic, box dims, count, then records."""
    rec = np.empty(len(batch), dtype=_TRAJ_DTYPE)
    rec["entry_face"] = batch.entry_code
    rec["exit_face"] = batch.exit_code
    rec["entry_a"] = batch.entry_ab[:, 0]
    rec["entry_b"] = batch.entry_ab[:, 1]
    rec["exit_a"] = batch.exit_ab[:, 0]
    rec["exit_b"] = batch.exit_ab[:, 1]
    rec["length"] = batch.length
    with open(path, "wb") as fh:
        fh.write(_TRAJ_MAGIC)
        fh.write(batch.box.as_array().astype("<f8").tobytes())
        fh.write(np.array(len(batch), dtype="<u8").tobytes())
        fh.write(rec.tobytes())


def read_trajectories(path) -> TrajectoryBatch:
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != _TRAJ_MAGIC:
            raise IncompatibleGridError(f"{path}: not a trajectory spill (bad magic)")
        box = BoxDims(*np.frombuffer(fh.read(24), dtype="<f8"))
        (count,) = np.frombuffer(fh.read(8), dtype="<u8")
        blob = fh.read()
    whole = len(blob) - len(blob) % _TRAJ_DTYPE.itemsize
    rec = np.frombuffer(blob[:whole], dtype=_TRAJ_DTYPE)
    if rec.size != count or whole != len(blob):
        raise IncompatibleGridError(f"{path}: truncated spill ({rec.size} of {count} records)")
    return TrajectoryBatch(
        box,
        rec["entry_face"].copy(),
        np.column_stack([rec["entry_a"], rec["entry_b"]]),
        rec["exit_face"].copy(),
        np.column_stack([rec["exit_a"], rec["exit_b"]]),
        rec["length"].copy(),
        {"source": "spill"},
    )


def config_hash(config: Mapping) -> str:
    """Stable sha256 over the canonical JSON form of a configuration."""
    blob = json.dumps(config, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()
