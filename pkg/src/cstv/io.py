"""File formats: images, data cubes, mask stacks, measurements, descriptors.

Conventions kept deliberately dependency-light and bit-exact:

* 2D images: 8-bit grayscale PGM (native parser/writer) or anything
  Pillow reads, plus ``.npy`` for lossless float round-trips.
* 3D cubes: raw little-endian float32, C order, with a ``<file>.hdr``
  sidecar in key=value form (rows, cols, frames), or ``.npy``.
* Mask stacks: either an 8-bit image whose nonzero pixels are open mask
  cells, or raw uint8 plus a header that also records the per-frame
  shift list.
* Measurements: raw little-endian float64; their length and provenance
  live in the operator descriptor written next to them.
* Config files and descriptors: ``key=value`` lines, ``#`` comments.
"""

from __future__ import annotations

import os

import numpy as np
from PIL import Image

from .operators import (
    CodedAperture,
    MaskStack,
    PermutedHadamard,
    SensingOperator,
    cacti_shifts,
    cassi_shifts,
)

__all__ = [
    "read_keyvalue",
    "write_keyvalue",
    "load_image",
    "save_image",
    "resize_image",
    "load_cube",
    "save_cube",
    "load_mask_stack",
    "save_mask_stack",
    "load_measurement",
    "save_measurement",
    "write_operator_descriptor",
    "load_operator",
]


# -- key=value ------------------------------------------------------------

def read_keyvalue(path) -> dict[str, str]:
    """Parse a key=value file; '#' starts a comment, blank lines ignored."""
    out: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {raw.rstrip()!r}")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def write_keyvalue(path, mapping: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for key, value in mapping.items():
            fh.write(f"{key}={value}\n")


# -- 2D images --------------------------------------------------------------

def _read_pgm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    # header tokens: magic, width, height, maxval; comments start with '#'
    tokens = []
    idx = 0
    while len(tokens) < 4:
        while idx < len(data) and data[idx:idx + 1].isspace():
            idx += 1
        if data[idx:idx + 1] == b"#":
            while idx < len(data) and data[idx] != 0x0A:
                idx += 1
            continue
        start = idx
        while idx < len(data) and not data[idx:idx + 1].isspace():
            idx += 1
        tokens.append(data[start:idx])
    magic = tokens[0]
    width, height, maxval = (int(t) for t in tokens[1:4])
    if maxval <= 0 or maxval > 255:
        raise ValueError(f"{path}: only 8-bit PGM supported (maxval={maxval})")
    if magic == b"P5":
        pixels = np.frombuffer(data, dtype=np.uint8, count=width * height, offset=idx + 1)
    elif magic == b"P2":
        pixels = np.array(data[idx:].split()[: width * height], dtype=np.uint8)
    else:
        raise ValueError(f"{path}: not a PGM file (magic {magic!r})")
    if pixels.size != width * height:
        raise ValueError(f"{path}: truncated pixel data")
    return pixels.reshape(height, width).astype(np.float64)


def _write_pgm(path, arr: np.ndarray) -> None:
    pixels = np.clip(np.rint(arr), 0, 255).astype(np.uint8)
    height, width = pixels.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        fh.write(pixels.tobytes())


def load_image(path) -> np.ndarray:
    """Read a grayscale image as a float64 array in [0, 255].

    ``.npy`` arrays are returned as stored (no range rescaling), ``.pgm``
    goes through the native parser, everything else through Pillow with a
    grayscale conversion.
    """
    path = os.fspath(path)
    ext = os.path.splitext(path)[1].lower()
    if ext == ".npy":
        arr = np.load(path)
        if arr.ndim != 2:
            raise ValueError(f"{path}: expected a 2D array, got shape {arr.shape}")
        return arr.astype(np.float64)
    if ext == ".pgm":
        return _read_pgm(path)
    with Image.open(path) as img:
        return np.asarray(img.convert("L"), dtype=np.float64)


def save_image(path, arr: np.ndarray) -> None:
    path = os.fspath(path)
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"image must be 2D, got shape {arr.shape}")
    ext = os.path.splitext(path)[1].lower()
    if ext == ".npy":
        np.save(path, arr)
    elif ext == ".pgm":
        _write_pgm(path, arr)
    else:
        Image.fromarray(np.clip(np.rint(arr), 0, 255).astype(np.uint8), mode="L").save(path)


def resize_image(arr: np.ndarray, size: int) -> np.ndarray:
    """Bilinear resize of a grayscale float image to size x size."""
    if arr.shape == (size, size):
        return np.asarray(arr, dtype=np.float64)
    img = Image.fromarray(np.asarray(arr, dtype=np.float32), mode="F")
    return np.asarray(img.resize((size, size), Image.BILINEAR), dtype=np.float64)


# -- 3D cubes ---------------------------------------------------------------

def _hdr_path(path) -> str:
    return os.fspath(path) + ".hdr"


def save_cube(path, cube: np.ndarray) -> None:
    """Write a (rows, cols, frames) cube; raw float32 + .hdr unless .npy."""
    path = os.fspath(path)
    cube = np.asarray(cube, dtype=np.float64)
    if cube.ndim != 3:
        raise ValueError(f"cube must be 3D, got shape {cube.shape}")
    if path.endswith(".npy"):
        np.save(path, cube)
        return
    cube.astype("<f4").tofile(path)
    rows, cols, frames = cube.shape
    write_keyvalue(_hdr_path(path), {
        "rows": rows, "cols": cols, "frames": frames,
        "dtype": "float32le", "order": "C",
    })


def load_cube(path) -> np.ndarray:
    path = os.fspath(path)
    if path.endswith(".npy"):
        cube = np.load(path)
        if cube.ndim != 3:
            raise ValueError(f"{path}: expected a 3D array, got shape {cube.shape}")
        return cube.astype(np.float64)
    hdr = read_keyvalue(_hdr_path(path))
    rows, cols, frames = int(hdr["rows"]), int(hdr["cols"]), int(hdr["frames"])
    if hdr.get("dtype", "float32le") != "float32le":
        raise ValueError(f"{path}: unsupported cube dtype {hdr.get('dtype')!r}")
    raw = np.fromfile(path, dtype="<f4")
    if raw.size != rows * cols * frames:
        raise ValueError(f"{path}: found {raw.size} samples, header promises {rows*cols*frames}")
    return raw.reshape(rows, cols, frames).astype(np.float64)


# -- mask stacks --------------------------------------------------------------

def _format_shifts(shifts) -> str:
    return ",".join(f"{dy}:{dx}" for dy, dx in shifts)


def _parse_shifts(text: str) -> list[tuple[int, int]]:
    shifts = []
    for chunk in text.split(","):
        dy, dx = chunk.split(":")
        shifts.append((int(dy), int(dx)))
    return shifts


def save_mask_stack(path, mask: MaskStack) -> None:
    """Write the base mask as raw uint8 plus a header with the shift list."""
    path = os.fspath(path)
    mask.base_mask.astype(np.uint8).tofile(path)
    rows, cols = mask.frame_shape
    write_keyvalue(_hdr_path(path), {
        "rows": rows, "cols": cols, "frames": mask.n_frames,
        "shifts": _format_shifts(mask.shifts), "dtype": "uint8", "order": "C",
    })


def load_mask_stack(path, n_frames: int | None = None, scheme: str = "cacti") -> MaskStack:
    """Load a mask stack from raw+header or from a grayscale image.

    Image files carry only the base mask (nonzero pixels are open), so the
    frame count and shift scheme must be supplied by the caller; raw masks
    written by :func:`save_mask_stack` are self-describing.
    """
    path = os.fspath(path)
    if os.path.exists(_hdr_path(path)):
        hdr = read_keyvalue(_hdr_path(path))
        rows, cols = int(hdr["rows"]), int(hdr["cols"])
        base = np.fromfile(path, dtype=np.uint8)
        if base.size != rows * cols:
            raise ValueError(f"{path}: found {base.size} cells, header promises {rows*cols}")
        return MaskStack(base.reshape(rows, cols), _parse_shifts(hdr["shifts"]))
    base = (load_image(path) != 0).astype(np.float64)
    if n_frames is None:
        raise ValueError("image masks carry no frame count; pass n_frames")
    shifts = cacti_shifts(n_frames) if scheme == "cacti" else cassi_shifts(n_frames)
    return MaskStack(base, shifts)


# -- measurements and operator descriptors -----------------------------------

def save_measurement(path, y: np.ndarray) -> None:
    np.asarray(y, dtype=np.float64).reshape(-1).astype("<f8").tofile(path)


def load_measurement(path) -> np.ndarray:
    return np.fromfile(os.fspath(path), dtype="<f8")


def write_operator_descriptor(path, op: SensingOperator, *, seed: int | None = None,
                              mask_file: str | None = None, peak: float = 255.0,
                              extra: dict | None = None) -> None:
    """Record everything needed to rebuild ``op`` next to its measurement."""
    meta: dict = {"peak": peak}
    if isinstance(op, PermutedHadamard):
        meta.update({
            "kind": "hadamard",
            "seed": op.seed if seed is None else seed,
            "n": op.n_cols,
            "m": op.n_rows,
            "shape": "x".join(str(s) for s in op.domain_shape),
        })
    elif isinstance(op, CodedAperture):
        if mask_file is None:
            raise ValueError("coded-aperture descriptors need the mask_file reference")
        meta.update({
            "kind": "coded_aperture",
            "mask_file": mask_file,
            "shape": "x".join(str(s) for s in op.domain_shape),
        })
    else:
        raise TypeError(f"cannot describe operator of type {type(op).__name__}")
    if extra:
        meta.update(extra)
    write_keyvalue(path, meta)


def load_operator(descriptor_path) -> tuple[SensingOperator, dict[str, str]]:
    """Rebuild the operator a descriptor describes; returns (operator, meta)."""
    descriptor_path = os.fspath(descriptor_path)
    meta = read_keyvalue(descriptor_path)
    kind = meta.get("kind")
    if kind == "hadamard":
        shape = tuple(int(s) for s in meta["shape"].split("x"))
        op: SensingOperator = PermutedHadamard(
            int(meta["n"]), int(meta["m"]), int(meta["seed"]), domain_shape=shape
        )
    elif kind == "coded_aperture":
        mask_path = meta["mask_file"]
        if not os.path.isabs(mask_path):
            mask_path = os.path.join(os.path.dirname(descriptor_path), mask_path)
        op = CodedAperture(load_mask_stack(mask_path))
    else:
        raise ValueError(f"{descriptor_path}: unknown operator kind {kind!r}")
    return op, meta
