"""Metrics and the benchmark runner producing PSNR-vs-compression CSV grids.

A benchmark walks the grid (input x compression ratio x algorithm x seed),
simulates the snapshot measurement, reconstructs, and appends one CSV row
per cell (plus one row per frame for cube inputs).  2D images are sensed
with the permuted-Hadamard operator at every requested ratio; 3D cubes are
sensed with a shifting-mask coded aperture whose ratio is fixed at
``1/frames`` by the operator itself, so the ratio list is not applied to
them.

CSV schema (exact header)::

    image_id,algorithm,csr,seed,frame,psnr_db,wall_time_s,iterations

Whole-signal rows use ``frame=-1``; per-frame rows use the frame index.
Failed cells are flagged with ``psnr_db=nan`` and the run continues.
"""

from __future__ import annotations

import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import io as cstv_io
from .datasets import BUILTIN_NAMES, load_builtin
from .operators import CodedAperture, PermutedHadamard, SensingOperator, random_mask_stack
from .solvers import ReconstructionResult, SolverConfig, reconstruct
from .validation import check_power_of_two

__all__ = [
    "psnr",
    "is_exact_match",
    "compression_ratio",
    "hadamard_rows_for_ratio",
    "simulate_snapshot",
    "BenchmarkSpec",
    "BenchmarkRow",
    "CSV_HEADER",
    "parse_benchmark_spec",
    "run_benchmark",
]

CSV_HEADER = "image_id,algorithm,csr,seed,frame,psnr_db,wall_time_s,iterations"


def psnr(reference, estimate, peak: float) -> float:
    """Peak signal-to-noise ratio, ``10*log10(peak^2 / MSE)`` in dB.

    An exact match (zero MSE) is reported as ``+inf``; use
    :func:`is_exact_match` to test for it.
    """
    reference = np.asarray(reference, dtype=np.float64)
    estimate = np.asarray(estimate, dtype=np.float64)
    if reference.shape != estimate.shape:
        raise ValueError(f"shape mismatch: {reference.shape} vs {estimate.shape}")
    if not peak > 0:
        raise ValueError(f"peak must be positive, got {peak!r}")
    mse = float(np.mean((reference - estimate) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def is_exact_match(psnr_db: float) -> bool:
    return math.isinf(psnr_db) and psnr_db > 0


def compression_ratio(op: SensingOperator) -> float:
    """Measurement rows over signal columns, M/N."""
    return op.n_rows / op.n_cols


def hadamard_rows_for_ratio(n: int, ratio: float) -> int:
    """Row count for a target ratio: nearest integer, clamped to [1, n]."""
    if not 0.0 < ratio <= 1.0:
        raise ValueError(f"compression ratio must be in (0, 1], got {ratio!r}")
    return min(max(int(round(ratio * n)), 1), n)


def simulate_snapshot(truth, op: SensingOperator) -> np.ndarray:
    """Noiseless snapshot measurement of ``truth``; alias of ``op.forward``."""
    return op.forward(truth)


@dataclass
class BenchmarkSpec:
    """Everything a benchmark run needs.

    ``algorithms`` carry unit-range TV strengths: each config's ``lam`` is
    multiplied by the input's peak value (255 for 8-bit images, 1 for
    cubes) before solving, and the scaled value is what gets echoed into
    results.
    """

    inputs: list[str]
    csr_list: list[float]
    algorithms: list[SolverConfig]
    seeds: list[int] = field(default_factory=lambda: [42])
    output_path: str | None = None
    size: int = 256
    n_frames: int = 8
    mask_density: float = 0.5
    cube_scheme: str = "cacti"
    workers: int = 1

    def __post_init__(self):
        if not self.inputs:
            raise ValueError("benchmark needs at least one input")
        if not self.algorithms:
            raise ValueError("benchmark needs at least one algorithm")
        if not self.seeds:
            raise ValueError("benchmark needs at least one seed")
        for ratio in self.csr_list:
            if not 0.0 < ratio <= 1.0:
                raise ValueError(f"compression ratios must be in (0, 1], got {ratio!r}")
        check_power_of_two(self.size, "size")


@dataclass
class BenchmarkRow:
    image_id: str
    algorithm: str
    csr: float
    seed: int
    frame: int
    psnr_db: float
    wall_time_s: float
    iterations: int
    error: str = ""

    def to_csv(self) -> str:
        return (
            f"{self.image_id},{self.algorithm},{self.csr:.6g},{self.seed},"
            f"{self.frame},{self.psnr_db:.6f},{self.wall_time_s:.6f},{self.iterations}"
        )


def parse_benchmark_spec(path) -> BenchmarkSpec:
    """Build a :class:`BenchmarkSpec` from a key=value file.

    Relative input paths are resolved against the spec file's directory.
    Solver overrides (lambda, eta, delta, variant, iters, inner_iters,
    tol) apply to every listed algorithm.
    """
    path = os.fspath(path)
    raw = cstv_io.read_keyvalue(path)
    base = os.path.dirname(os.path.abspath(path))

    def split(key, default=""):
        text = raw.get(key, default)
        return [item.strip() for item in text.split(",") if item.strip()]

    inputs = []
    for name in split("inputs"):
        if name in BUILTIN_NAMES or os.path.isabs(name):
            inputs.append(name)
        else:
            inputs.append(os.path.join(base, name))
    overrides = dict(
        lam=float(raw.get("lambda", 0.085)),
        eta=float(raw.get("eta", 2.0)),
        delta=float(raw.get("delta", 0.5)),
        variant=raw.get("variant", "delta"),
        max_iters=int(raw.get("iters", 100)),
        denoise_iters=int(raw.get("inner_iters", 50)),
        tol=float(raw.get("tol", 1e-5)),
    )
    algorithms = [SolverConfig(algorithm=name, **overrides)
                  for name in (split("algorithms") or ["gap-tv"])]
    return BenchmarkSpec(
        inputs=inputs,
        csr_list=[float(c) for c in split("csr", "0.3")],
        algorithms=algorithms,
        seeds=[int(s) for s in (split("seeds") or ["42"])],
        size=int(raw.get("size", 256)),
        n_frames=int(raw.get("frames", 8)),
        mask_density=float(raw.get("density", 0.5)),
        cube_scheme=raw.get("cube_scheme", "cacti"),
        workers=int(raw.get("workers", 1)),
    )


def _load_input(name: str, spec: BenchmarkSpec):
    """Returns (truth, peak, scheme); scheme is None for 2D images."""
    if name in BUILTIN_NAMES:
        cube, scheme = load_builtin(name, n_frames=spec.n_frames)
        return cube, 1.0, scheme
    ext = os.path.splitext(name)[1].lower()
    if ext == ".npy":
        arr = np.load(name).astype(np.float64)
        if arr.ndim == 3:
            return arr, 1.0, spec.cube_scheme
        return cstv_io.resize_image(arr, spec.size), 255.0, None
    if ext in ("", ".bin", ".raw", ".cube"):
        return cstv_io.load_cube(name), 1.0, spec.cube_scheme
    image = cstv_io.resize_image(cstv_io.load_image(name), spec.size)
    return image, 255.0, None


def _image_label(name: str) -> str:
    if name in BUILTIN_NAMES:
        return name
    return os.path.splitext(os.path.basename(name))[0]


def _run_cell(name, truth, peak, scheme, ratio, config, seed, spec) -> list[BenchmarkRow]:
    label = _image_label(name)
    if scheme is None:
        n = truth.size
        op: SensingOperator = PermutedHadamard(
            n, hadamard_rows_for_ratio(n, ratio), seed, domain_shape=truth.shape
        )
    else:
        mask = random_mask_stack(truth.shape[:2], truth.shape[2], seed,
                                 density=spec.mask_density, scheme=scheme)
        op = CodedAperture(mask)
    ratio_actual = compression_ratio(op)
    y = simulate_snapshot(truth, op)
    scaled = replace(config, lam=config.lam * peak)
    result: ReconstructionResult = reconstruct(op, y, scaled)
    rows = [BenchmarkRow(
        image_id=label, algorithm=config.algorithm, csr=ratio_actual, seed=seed,
        frame=-1, psnr_db=psnr(truth, result.x_hat, peak),
        wall_time_s=result.wall_time, iterations=result.outer_iters_used,
    )]
    if scheme is not None:
        for f in range(truth.shape[2]):
            rows.append(BenchmarkRow(
                image_id=label, algorithm=config.algorithm, csr=ratio_actual,
                seed=seed, frame=f,
                psnr_db=psnr(truth[:, :, f], result.x_hat[:, :, f], peak),
                wall_time_s=result.wall_time, iterations=result.outer_iters_used,
            ))
    return rows


def run_benchmark(spec: BenchmarkSpec) -> list[BenchmarkRow]:
    """Run every benchmark cell, streaming rows to CSV when requested.

    Cells run on a bounded thread pool (``spec.workers``); rows are written
    by the single caller thread in deterministic grid order, so identical
    specs produce identical CSVs apart from the wall-time column.  A cell
    that fails (unreadable input, solver error) contributes one flagged row
    with ``psnr_db=nan`` and the run continues.
    """
    cells = []
    for name in spec.inputs:
        try:
            truth, peak, scheme = _load_input(name, spec)
        except Exception as exc:  # noqa: BLE001 - flagged, run continues
            for config in spec.algorithms:
                for seed in spec.seeds:
                    cells.append((name, None, None, None, 0.0, config, seed, str(exc)))
            continue
        ratios = spec.csr_list if scheme is None else [None]
        for ratio in ratios:
            for config in spec.algorithms:
                for seed in spec.seeds:
                    cells.append((name, truth, peak, scheme, ratio, config, seed, None))

    def execute(cell) -> list[BenchmarkRow]:
        name, truth, peak, scheme, ratio, config, seed, error = cell
        if error is None:
            try:
                return _run_cell(name, truth, peak, scheme, ratio, config, seed, spec)
            except Exception as exc:  # noqa: BLE001
                error = str(exc)
        print(f"benchmark cell failed ({name}, {config.algorithm}, "
              f"csr={ratio}, seed={seed}): {error}", file=sys.stderr)
        return [BenchmarkRow(_image_label(name), config.algorithm,
                             ratio or 0.0, seed, -1, math.nan, 0.0, 0, error=error)]

    out = open(spec.output_path, "w", encoding="utf-8") if spec.output_path else None
    rows: list[BenchmarkRow] = []
    try:
        if out:
            out.write(CSV_HEADER + "\n")
            out.flush()
        if spec.workers > 1:
            with ThreadPoolExecutor(max_workers=spec.workers) as pool:
                batches = pool.map(execute, cells)
                for batch in batches:
                    rows.extend(batch)
                    if out:
                        out.write("".join(row.to_csv() + "\n" for row in batch))
                        out.flush()
        else:
            for cell in cells:
                batch = execute(cell)
                rows.extend(batch)
                if out:
                    out.write("".join(row.to_csv() + "\n" for row in batch))
                    out.flush()
    finally:
        if out:
            out.close()
    return rows
