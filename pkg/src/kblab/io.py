"""Bulk array files: a JSON header followed by a raw little-endian payload.

Field files hold one array in a single file::

    b"KBFIELD\\n" | uint64 header length (little endian) | JSON header | payload

The header is padded with spaces so the payload starts on a 64-byte
boundary, which keeps the payload mmap-friendly.  ``complex128`` arrays are
spectral coefficients, ``float64`` arrays are values on the physical grid.
Collision tables use a raw payload file plus a JSON sidecar.
"""
from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .collision import CollisionTables, KernelParams, SphereQuadrature, VelocityGrid
from .collision.grids import abs_cos
from .collision.tables import StencilSet
from .lp import FourierGrid

FORMAT_VERSION = "1"
MAGIC = b"KBFIELD\n"
ALIGN = 64
DTYPES = {"complex128": np.dtype("<c16"), "float64": np.dtype("<f8")}
_TABLE_ARRAYS = ("nu", "loss_matrix", "k_matrix", "l_matrix", "k_raw", "projector")
_STENCIL_ARRAYS = ("ptr", "weights", "base_star", "base_prime", "fractions")
_ANGULAR = {"abs_cos": abs_cos}


class FieldFormatError(ValueError):
    """A field or table file whose header or payload is inconsistent."""


def grid_meta(grid: FourierGrid) -> dict:
    return {"spatial_dim": grid.spatial_dim, "points_per_axis": grid.points_per_axis,
            "domain_length": grid.domain_length}


def velocity_meta(vgrid: VelocityGrid) -> dict:
    return {"half_width": vgrid.half_width, "points_per_axis": vgrid.points_per_axis}


def _pad(n: int) -> int:
    return (-n) % ALIGN


@dataclass(eq=False)
class FieldFile:
    """An array on (time, x, xi) grids with the metadata needed to interpret it.

    The array layout is ``(n_t,)? + grid.shape + (N,)?``: a time axis when
    ``times`` is given, a velocity axis when ``vgrid`` is given.
    """

    array: np.ndarray
    grid: FourierGrid
    vgrid: VelocityGrid | None = None
    times: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        arr = np.asarray(self.array)
        if arr.dtype.kind == "c":
            arr = arr.astype("<c16", copy=False)
        elif arr.dtype.kind in "fiu":
            arr = arr.astype("<f8", copy=False)
        else:
            raise TypeError(f"unsupported dtype {arr.dtype}")
        self.array = arr
        if self.times is not None:
            self.times = np.asarray(self.times, dtype=float).ravel()
        if arr.shape != self.expected_shape():
            raise ValueError(f"array shape {arr.shape} does not match the grids {self.expected_shape()}")

    @property
    def dtype_name(self) -> str:
        return "complex128" if self.array.dtype.kind == "c" else "float64"

    @property
    def spectral(self) -> bool:
        return self.array.dtype.kind == "c"

    def expected_shape(self) -> tuple:
        lead = () if self.times is None else (self.times.size,)
        trail = () if self.vgrid is None else (self.vgrid.size,)
        return lead + self.grid.shape + trail

    def coefficients(self) -> np.ndarray:
        """Spectral coefficients, transforming physical values if needed."""
        if self.spectral:
            return self.array
        return self.grid.forward(self.array, lead=0 if self.times is None else 1)

    def header(self) -> dict:
        return {"format": "kblab-field", "version": FORMAT_VERSION, "dtype": self.dtype_name,
                "shape": list(self.array.shape), "endianness": "little", "grid": grid_meta(self.grid),
                "velocity": None if self.vgrid is None else velocity_meta(self.vgrid),
                "times": None if self.times is None else [float(t) for t in self.times],
                "meta": self.meta}

    def to_bytes(self) -> bytes:
        head = json.dumps(self.header(), sort_keys=True).encode()
        head += b" " * _pad(len(MAGIC) + 8 + len(head))
        return MAGIC + struct.pack("<Q", len(head)) + head + np.ascontiguousarray(self.array).tobytes()

    def write(self, path) -> Path:
        path = Path(path)
        path.write_bytes(self.to_bytes())
        return path

    @classmethod
    def from_bytes(cls, data: bytes) -> "FieldFile":
        if len(data) < len(MAGIC) + 8 or data[: len(MAGIC)] != MAGIC:
            raise FieldFormatError("not a field file (bad magic)")
        (n_head,) = struct.unpack("<Q", data[len(MAGIC): len(MAGIC) + 8])
        start = len(MAGIC) + 8
        if start + n_head > len(data):
            raise FieldFormatError("header length exceeds file size")
        try:
            head = json.loads(data[start: start + n_head].decode())
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise FieldFormatError(f"header is not valid JSON: {exc}") from None
        arr, grid, vgrid, times = _parse_field_header(head, data, start + n_head)
        try:
            return cls(arr, grid, vgrid, times, head.get("meta") or {})
        except (TypeError, ValueError) as exc:
            raise FieldFormatError(str(exc)) from None

    @classmethod
    def read(cls, path) -> "FieldFile":
        return cls.from_bytes(Path(path).read_bytes())


def _parse_field_header(head, data: bytes, offset: int):
    if not isinstance(head, dict):
        raise FieldFormatError("header must be a JSON object")
    missing = {"format", "version", "dtype", "shape", "endianness", "grid"} - set(head)
    if missing:
        raise FieldFormatError(f"header misses keys {sorted(missing)}")
    if head["format"] != "kblab-field":
        raise FieldFormatError(f"unexpected format {head['format']!r}")
    if head["version"] != FORMAT_VERSION:
        raise FieldFormatError(f"unsupported version {head['version']!r}; expected {FORMAT_VERSION!r}")
    if head["endianness"] != "little":
        raise FieldFormatError(f"unsupported endianness {head['endianness']!r}")
    if head["dtype"] not in DTYPES:
        raise FieldFormatError(f"unsupported dtype {head['dtype']!r}")
    shape = head["shape"]
    if not isinstance(shape, list) or not all(isinstance(n, int) and not isinstance(n, bool) and n >= 0
                                              for n in shape):
        raise FieldFormatError("shape must be a list of non-negative integers")
    dt = DTYPES[head["dtype"]]
    n_bytes = math.prod(shape) * dt.itemsize
    if len(data) - offset != n_bytes:
        raise FieldFormatError(f"payload has {len(data) - offset} bytes, header implies {n_bytes}")
    try:
        grid = FourierGrid(**head["grid"])
        vgrid = VelocityGrid(**head["velocity"]) if head.get("velocity") else None
    except (TypeError, ValueError) as exc:
        raise FieldFormatError(f"invalid grid metadata: {exc}") from None
    times = head.get("times")
    arr = np.frombuffer(data, dtype=dt, count=math.prod(shape), offset=offset).reshape(shape).copy()
    return arr, grid, vgrid, None if times is None else np.asarray(times, dtype=float)


# collision tables ----------------------------------------------------------
def _table_paths(path) -> tuple[Path, Path]:
    path = Path(path)
    if path.suffix in (".json", ".bin"):
        path = path.with_suffix("")
    return path.with_suffix(".bin"), path.with_suffix(".json")


def save_tables(tables: CollisionTables, path) -> tuple[Path, Path]:
    """Write ``<stem>.bin`` (raw little-endian arrays) and ``<stem>.json`` (layout and parameters)."""
    kp = tables.kernel
    if kp.name not in _ANGULAR or kp.angular_factor is not _ANGULAR[kp.name]:
        raise ValueError(f"angular factor {kp.name!r} cannot be serialized")
    arrays = [(n, getattr(tables, n)) for n in _TABLE_ARRAYS]
    if tables.stencils is not None:
        arrays += [("stencil_" + n, getattr(tables.stencils, n)) for n in _STENCIL_ARRAYS]
    layout, chunks, offset = [], [], 0
    for name, arr in arrays:
        arr = np.ascontiguousarray(arr)
        arr = arr.astype(arr.dtype.newbyteorder("<"), copy=False)
        raw = arr.tobytes()
        layout.append({"name": name, "dtype": arr.dtype.str, "shape": list(arr.shape), "offset": offset,
                       "nbytes": len(raw)})
        chunks.append(raw + b"\0" * _pad(len(raw)))
        offset += len(raw) + _pad(len(raw))
    head = {"format": "kblab-tables", "version": FORMAT_VERSION, "endianness": "little",
            "velocity": velocity_meta(tables.vgrid), "sphere": {"n_nodes": tables.sphere.n_nodes},
            "kernel": {"gamma": kp.gamma, "bound_constant": kp.bound_constant, "name": kp.name},
            "scalars": {"angular_total": tables.angular_total, "clipped_fraction": tables.clipped_fraction,
                        "interpolation_order": tables.interpolation_order,
                        "weight_exponent": tables.weight_exponent, "gamma_order": tables.gamma_order},
            "arrays": layout, "payload_bytes": offset}
    bin_path, json_path = _table_paths(path)
    bin_path.write_bytes(b"".join(chunks))
    json_path.write_text(json.dumps(head, sort_keys=True, indent=1) + "\n")
    return bin_path, json_path


def load_tables(path) -> CollisionTables:
    bin_path, json_path = _table_paths(path)
    try:
        head = json.loads(json_path.read_text())
        if head["format"] != "kblab-tables" or head["version"] != FORMAT_VERSION:
            raise FieldFormatError("not a version-%s table sidecar" % FORMAT_VERSION)
        if head["endianness"] != "little":
            raise FieldFormatError(f"unsupported endianness {head['endianness']!r}")
        data = bin_path.read_bytes()
        if len(data) != head["payload_bytes"]:
            raise FieldFormatError("table payload size does not match the sidecar")
        arrays = {}
        for item in head["arrays"]:
            dt = np.dtype(item["dtype"])
            count = math.prod(item["shape"])
            if count * dt.itemsize != item["nbytes"] or item["offset"] + item["nbytes"] > len(data):
                raise FieldFormatError(f"inconsistent layout for {item['name']}")
            arrays[item["name"]] = np.frombuffer(data, dt, count, item["offset"]).reshape(item["shape"]).copy()
        k = head["kernel"]
        kp = KernelParams(k["gamma"], _ANGULAR[k["name"]], k["bound_constant"], k["name"])
        stencils = None
        if "stencil_ptr" in arrays:
            stencils = StencilSet(*(arrays["stencil_" + n] for n in _STENCIL_ARRAYS))
        sc = head["scalars"]
        return CollisionTables(VelocityGrid(**head["velocity"]), SphereQuadrature(head["sphere"]["n_nodes"]), kp,
                               *(arrays[n] for n in _TABLE_ARRAYS), sc["angular_total"], sc["clipped_fraction"],
                               sc["interpolation_order"], sc["weight_exponent"], sc["gamma_order"], stencils)
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise FieldFormatError(f"corrupt table files: {exc!r}") from None
