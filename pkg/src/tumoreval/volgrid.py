"""Label volumes, region masks and the two on-disk formats we read.

A :class:`LabelVolume` holds a 3D grid of BraTS label codes indexed
``labels[x, y, z]``. On disk the payload is always flattened x-fastest
(Fortran order), which is what both NIfTI-1 and the raw sidecar format use.

Binary masks are plain boolean :class:`numpy.ndarray` objects of shape
``(nx, ny, nz)``; there is no wrapper type.
"""
from __future__ import annotations

import enum
import gzip
import json
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import (
    IoFailure,
    LabelOutOfDomain,
    MalformedHeader,
    SizeMismatch,
    UnsupportedDatatype,
)

__all__ = [
    "LABEL_CODES",
    "LabelVolume",
    "Region",
    "REGION_LABELS",
    "region_mask",
    "load_volume",
    "save_volume",
    "case_id_from_path",
    "find_volumes",
]

LABEL_CODES = (0, 1, 2, 4)

_NIFTI_HEADER_SIZE = 348
_NIFTI_VOX_OFFSET = 352
# NIfTI datatype code -> numpy base type
_NIFTI_DTYPES = {2: "u1", 4: "i2", 8: "i4"}
_GZIP_MAGIC = b"\x1f\x8b"


class Region(str, enum.Enum):
    """Nested tumor sub-regions, ordered as the reports print them."""

    ET = "ET"
    WT = "WT"
    TC = "TC"


# BraTS convention: 1 necrotic/non-enhancing core, 2 edema, 4 enhancing.
REGION_LABELS: dict[Region, tuple[int, ...]] = {
    Region.WT: (1, 2, 4),
    Region.TC: (1, 4),
    Region.ET: (4,),
}


def _check_labels(values: np.ndarray) -> None:
    bad = ~np.isin(values, LABEL_CODES)
    if bad.any():
        found = np.unique(values[bad])[:8]
        raise LabelOutOfDomain(
            f"label values {found.tolist()} outside allowed codes {list(LABEL_CODES)}"
        )


@dataclass(frozen=True, eq=False)
class LabelVolume:
    """Immutable 3D label map with physical voxel spacing in millimeters.

    ``labels`` must be an integer array of shape ``(nx, ny, nz)`` whose values
    are all in :data:`LABEL_CODES`. It is copied to ``uint8`` and made
    read-only on construction.
    """

    labels: np.ndarray
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        arr = np.asarray(self.labels)
        if arr.ndim != 3:
            raise ValueError(f"labels must be 3D, got shape {arr.shape}")
        if min(arr.shape) < 1:
            raise ValueError(f"every dimension must be >= 1, got {arr.shape}")
        if arr.dtype.kind not in "uib":
            raise UnsupportedDatatype(f"labels must be integers, got dtype {arr.dtype}")
        _check_labels(arr)
        arr = np.array(arr, dtype=np.uint8, copy=True)
        arr.setflags(write=False)
        spacing = tuple(float(s) for s in self.spacing)
        if len(spacing) != 3 or not all(math.isfinite(s) and s > 0 for s in spacing):
            raise ValueError(f"spacing must be three positive finite values, got {self.spacing}")
        object.__setattr__(self, "labels", arr)
        object.__setattr__(self, "spacing", spacing)

    @classmethod
    def from_flat(cls, dims, labels: Iterable[int], spacing=(1.0, 1.0, 1.0)) -> "LabelVolume":
        """Build from an x-fastest flat label sequence."""
        dims = tuple(int(d) for d in dims)
        flat = np.asarray(list(labels) if not isinstance(labels, np.ndarray) else labels)
        if flat.size != math.prod(dims):
            raise SizeMismatch(f"{flat.size} labels for dims {dims} ({math.prod(dims)} voxels)")
        return cls(flat.reshape(dims, order="F"), spacing)

    @property
    def dims(self) -> tuple[int, int, int]:
        return tuple(self.labels.shape)

    @property
    def voxel_volume(self) -> float:
        sx, sy, sz = self.spacing
        return sx * sy * sz

    def flat(self) -> np.ndarray:
        """Labels flattened x-fastest."""
        return self.labels.ravel(order="F")

    def __eq__(self, other):
        if not isinstance(other, LabelVolume):
            return NotImplemented
        return self.spacing == other.spacing and np.array_equal(self.labels, other.labels)

    def __repr__(self):
        return f"LabelVolume(dims={self.dims}, spacing={self.spacing})"


def region_mask(vol: LabelVolume, region: Region | str) -> np.ndarray:
    """Boolean mask of the voxels belonging to ``region``."""
    return np.isin(vol.labels, REGION_LABELS[Region(region)])


# ---------------------------------------------------------------------------
# file formats


def _strip_suffix(path: Path) -> str:
    name = path.name
    for suffix in (".nii.gz", ".nii", ".json", ".raw"):
        if name.endswith(suffix):
            return name[: -len(suffix)]
    return path.stem


def case_id_from_path(path) -> str:
    """Case identifier of a volume file: its name without volume suffixes."""
    return _strip_suffix(Path(path))


def find_volumes(directory) -> dict[str, Path]:
    """Map case id -> volume path for every loadable file in ``directory``.

    Sidecar pairs are keyed by their ``.json`` header; stray ``.raw`` files
    without a header are ignored.
    """
    directory = Path(directory)
    found: dict[str, Path] = {}
    for p in sorted(directory.iterdir()):
        if not p.is_file():
            continue
        if p.name.endswith((".nii", ".nii.gz", ".json")):
            found[case_id_from_path(p)] = p
    return found


def _is_nifti(path: Path) -> bool:
    return path.name.endswith((".nii", ".nii.gz"))


def load_volume(path) -> LabelVolume:
    """Load a label volume from NIfTI-1 (``.nii``/``.nii.gz``) or a sidecar pair.

    Sidecar volumes may be addressed through either the ``.json`` header or
    the ``.raw`` payload. Gzip compression is detected from the file magic,
    not the suffix.
    """
    path = Path(path)
    if _is_nifti(path):
        try:
            data = path.read_bytes()
        except OSError as exc:
            raise IoFailure(f"cannot read {path}: {exc}") from exc
        return _parse_nifti(data, str(path))
    return _load_sidecar(path)


def save_volume(vol: LabelVolume, path) -> None:
    """Write ``vol`` as NIfTI-1 (by ``.nii``/``.nii.gz`` suffix) or as a sidecar pair.

    NIfTI stores spacing as float32 and is read back as the shortest decimal
    of that float32, so spacings with at most ~7 significant digits (0.9,
    1.25, ...) round-trip unchanged. The sidecar format is exact for any
    spacing.
    """
    path = Path(path)
    try:
        if _is_nifti(path):
            blob = _encode_nifti(vol)
            if path.name.endswith(".gz"):
                blob = gzip.compress(blob, mtime=0)
            path.write_bytes(blob)
        else:
            stem = path.parent / _strip_suffix(path)
            header = {
                "dims": list(vol.dims),
                "spacing_mm": list(vol.spacing),
                "dtype": "u8",
            }
            stem.with_name(stem.name + ".raw").write_bytes(vol.flat().tobytes())
            stem.with_name(stem.name + ".json").write_text(json.dumps(header) + "\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def _load_sidecar(path: Path) -> LabelVolume:
    stem = path.parent / _strip_suffix(path)
    json_path = stem.with_name(stem.name + ".json")
    raw_path = stem.with_name(stem.name + ".raw")
    try:
        header_text = json_path.read_text()
        payload = raw_path.read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read sidecar volume {stem}: {exc}") from exc
    try:
        header = json.loads(header_text)
    except json.JSONDecodeError as exc:
        raise MalformedHeader(f"{json_path}: invalid JSON ({exc})") from exc
    if not isinstance(header, dict):
        raise MalformedHeader(f"{json_path}: header must be a JSON object")
    for key in ("dims", "spacing_mm", "dtype"):
        if key not in header:
            raise MalformedHeader(f"{json_path}: missing field {key!r}")
    dims, spacing = header["dims"], header["spacing_mm"]
    if (
        not isinstance(dims, list)
        or len(dims) != 3
        or not all(isinstance(d, int) and not isinstance(d, bool) and d >= 1 for d in dims)
    ):
        raise MalformedHeader(f"{json_path}: dims must be three positive integers, got {dims!r}")
    if (
        not isinstance(spacing, list)
        or len(spacing) != 3
        or not all(isinstance(s, (int, float)) and math.isfinite(s) and s > 0 for s in spacing)
    ):
        raise MalformedHeader(f"{json_path}: spacing_mm must be three positive numbers")
    if header["dtype"] != "u8":
        raise UnsupportedDatatype(f"{json_path}: dtype {header['dtype']!r} (only 'u8')")
    n = math.prod(dims)
    if len(payload) != n:
        raise SizeMismatch(f"{raw_path}: {len(payload)} bytes for dims {dims} ({n} voxels)")
    flat = np.frombuffer(payload, dtype=np.uint8)
    _check_labels(flat)
    return LabelVolume(flat.reshape(dims, order="F"), tuple(spacing))


def _f32_decimal(x: float) -> float:
    return float(np.format_float_positional(np.float32(x), unique=True)) if math.isfinite(x) else x


def _parse_nifti(data: bytes, name: str = "<bytes>") -> LabelVolume:
    if data[:2] == _GZIP_MAGIC:
        try:
            data = gzip.decompress(data)
        except (OSError, EOFError) as exc:
            raise MalformedHeader(f"{name}: corrupt gzip stream ({exc})") from exc
    if len(data) < _NIFTI_HEADER_SIZE:
        raise MalformedHeader(f"{name}: {len(data)} bytes, shorter than a NIfTI-1 header")

    for endian in ("<", ">"):
        if struct.unpack_from(endian + "i", data, 0)[0] == _NIFTI_HEADER_SIZE:
            break
    else:
        raise MalformedHeader(f"{name}: sizeof_hdr is not 348")
    if data[344:348] != b"n+1\x00":
        raise MalformedHeader(f"{name}: magic {data[344:348]!r} is not single-file NIfTI-1")

    dim = struct.unpack_from(endian + "8h", data, 40)
    datatype = struct.unpack_from(endian + "h", data, 70)[0]
    pixdim = struct.unpack_from(endian + "8f", data, 76)
    vox_offset = struct.unpack_from(endian + "f", data, 108)[0]

    ndim = dim[0]
    if not 1 <= ndim <= 7:
        raise MalformedHeader(f"{name}: dim[0]={ndim} out of range")
    dims = [dim[i] if i <= ndim else 1 for i in (1, 2, 3)]
    if any(d < 1 for d in dims) or any(dim[i] != 1 for i in range(4, ndim + 1)):
        raise MalformedHeader(f"{name}: dims {dim[1:ndim + 1]} are not a 3D volume")
    # shortest decimal of the float32 value, so e.g. 0.9 reads back as 0.9
    spacing = [_f32_decimal(pixdim[i]) if i <= ndim else 1.0 for i in (1, 2, 3)]
    if not all(math.isfinite(s) and s > 0 for s in spacing):
        raise MalformedHeader(f"{name}: pixdim {spacing} must be positive")
    if datatype not in _NIFTI_DTYPES:
        raise UnsupportedDatatype(f"{name}: NIfTI datatype code {datatype} (need 2, 4 or 8)")
    if not math.isfinite(vox_offset) or vox_offset < _NIFTI_HEADER_SIZE:
        raise MalformedHeader(f"{name}: vox_offset {vox_offset}")

    dtype = np.dtype(endian + _NIFTI_DTYPES[datatype])
    offset = int(vox_offset)
    n = math.prod(dims)
    payload = data[offset:]
    if len(payload) != n * dtype.itemsize:
        raise SizeMismatch(
            f"{name}: payload of {len(payload)} bytes, expected {n * dtype.itemsize} for dims {dims}"
        )
    flat = np.frombuffer(payload, dtype=dtype)
    _check_labels(flat)
    return LabelVolume(flat.reshape(dims, order="F"), tuple(spacing))


def _encode_nifti(vol: LabelVolume) -> bytes:
    hdr = bytearray(_NIFTI_HEADER_SIZE)
    struct.pack_into("<i", hdr, 0, _NIFTI_HEADER_SIZE)
    hdr[38] = ord("r")
    struct.pack_into("<8h", hdr, 40, 3, *vol.dims, 1, 1, 1, 1)
    struct.pack_into("<hh", hdr, 70, 2, 8)  # datatype uint8, bitpix
    struct.pack_into("<8f", hdr, 76, 1.0, *vol.spacing, 0.0, 0.0, 0.0, 0.0)
    struct.pack_into("<f", hdr, 108, float(_NIFTI_VOX_OFFSET))
    struct.pack_into("<f", hdr, 112, 1.0)  # scl_slope
    hdr[123] = 2  # xyzt_units: mm
    hdr[344:348] = b"n+1\x00"
    # 4-byte extension flag (all zero) pads the header to vox_offset
    return bytes(hdr) + b"\x00" * 4 + vol.flat().tobytes()
