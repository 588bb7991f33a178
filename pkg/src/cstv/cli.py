"""Command-line interface: simulate, reconstruct, denoise, benchmark.

Exit codes are a stable scripting contract: 0 on success, 2 for usage or
configuration errors (bad flags, missing files, unparseable specs), 1 for
runtime failures.  Every command writes a metadata record next to its
output so results can be reproduced exactly; all randomness derives from
the --seed flag (default 42, never wall clock).
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

import numpy as np

from . import io as cstv_io
from .datasets import BUILTIN_NAMES, load_builtin
from .harness import (
    hadamard_rows_for_ratio,
    parse_benchmark_spec,
    psnr,
    run_benchmark,
    simulate_snapshot,
)
from .operators import CodedAperture, FiniteDifference, PermutedHadamard, random_mask_stack
from .solvers import ALGORITHMS, SolverConfig, reconstruct
from .tvdenoise import tv_denoise

DEFAULT_SEED = 42
UNIT_RANGE_TV_STRENGTH = 0.085


class UsageError(Exception):
    """Configuration or input problem; maps to exit code 2."""


def _require_file(path, what="input"):
    if not os.path.exists(path):
        raise UsageError(f"{what} file not found: {path}")
    return path


def _load_input_cube(path, n_frames):
    if path in BUILTIN_NAMES:
        cube, _ = load_builtin(path, n_frames=n_frames or 8)
        return cube
    _require_file(path)
    if path.endswith(".npy"):
        cube = np.load(path).astype(np.float64)
        if cube.ndim != 3:
            raise UsageError(f"{path}: expected a 3D cube, got shape {cube.shape}")
    else:
        cube = cstv_io.load_cube(path)
    if n_frames and cube.shape[2] != n_frames:
        raise UsageError(
            f"--frames {n_frames} does not match cube with {cube.shape[2]} frames"
        )
    return cube


def cmd_simulate(args) -> int:
    if args.operator == "hadamard":
        _require_file(args.input)
        image = cstv_io.resize_image(cstv_io.load_image(args.input), args.size)
        n = image.size
        op = PermutedHadamard(n, hadamard_rows_for_ratio(n, args.csr), args.seed,
                              domain_shape=image.shape)
        y = simulate_snapshot(image, op)
        cstv_io.save_measurement(args.out, y)
        cstv_io.write_operator_descriptor(
            args.out + ".desc", op, seed=args.seed, peak=255.0,
            extra={"csr": f"{op.compression_ratio:.6g}",
                   "measurement_file": os.path.basename(args.out),
                   "measurement_length": op.n_rows,
                   "source": args.input},
        )
    else:
        cube = _load_input_cube(args.input, args.frames)
        if args.mask:
            mask = cstv_io.load_mask_stack(_require_file(args.mask, "mask"),
                                           n_frames=cube.shape[2], scheme=args.operator)
            if mask.frame_shape != cube.shape[:2] or mask.n_frames != cube.shape[2]:
                raise UsageError(
                    f"mask {mask.frame_shape}x{mask.n_frames} does not match "
                    f"cube {cube.shape}"
                )
        else:
            mask = random_mask_stack(cube.shape[:2], cube.shape[2], args.seed,
                                     density=args.density, scheme=args.operator)
        op = CodedAperture(mask)
        y = simulate_snapshot(cube, op)
        cstv_io.save_measurement(args.out, y)
        mask_file = args.out + ".mask"
        cstv_io.save_mask_stack(mask_file, mask)
        cstv_io.write_operator_descriptor(
            args.out + ".desc", op, seed=args.seed, peak=1.0,
            mask_file=os.path.basename(mask_file),
            extra={"scheme": args.operator,
                   "measurement_file": os.path.basename(args.out),
                   "measurement_length": op.n_rows,
                   "source": args.input},
        )
    print(f"wrote {args.out} ({op.n_rows} samples) and {args.out}.desc")
    return 0


def _solver_config(args, peak: float) -> SolverConfig:
    """Merge defaults, an optional key=value config file, and CLI flags."""
    values = dict(
        algorithm="gap-tv", lam=UNIT_RANGE_TV_STRENGTH * peak, eta=2.0, delta=0.5,
        variant="delta", max_iters=100, denoise_iters=50, tol=1e-5,
    )
    if getattr(args, "config", None):
        raw = cstv_io.read_keyvalue(_require_file(args.config, "config"))
        parse = dict(algorithm=str, lam=float, eta=float, delta=float, variant=str,
                     max_iters=int, denoise_iters=int, tol=float)
        aliases = {"lambda": "lam", "iters": "max_iters", "inner_iters": "denoise_iters"}
        for key, text in raw.items():
            key = aliases.get(key, key)
            if key not in parse:
                raise UsageError(f"unknown config key {key!r} in {args.config}")
            values[key] = parse[key](text)
    for flag, key in [("algo", "algorithm"), ("lam", "lam"), ("eta", "eta"),
                      ("delta", "delta"), ("variant", "variant"), ("iters", "max_iters"),
                      ("inner_iters", "denoise_iters"), ("tol", "tol")]:
        val = getattr(args, flag, None)
        if val is not None:
            values[key] = val
    try:
        return SolverConfig(**values)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_reconstruct(args) -> int:
    _require_file(args.measurement, "measurement")
    _require_file(args.descriptor, "descriptor")
    op, meta = cstv_io.load_operator(args.descriptor)
    y = cstv_io.load_measurement(args.measurement)
    if y.size != op.n_rows:
        raise UsageError(
            f"measurement has {y.size} samples but descriptor operator "
            f"produces {op.n_rows}"
        )
    peak = float(meta.get("peak", 255.0))
    config = _solver_config(args, peak)
    result = reconstruct(op, y, config)

    if result.x_hat.ndim == 3:
        cstv_io.save_cube(args.out, result.x_hat)
    else:
        cstv_io.save_image(args.out, result.x_hat)
    record = {
        "algorithm": config.algorithm,
        "lambda": f"{config.lam:.10g}",
        "eta": f"{config.eta:.10g}",
        "delta": f"{config.delta:.10g}",
        "variant": config.variant,
        "max_iters": config.max_iters,
        "inner_iters": config.denoise_iters,
        "tol": f"{config.tol:.10g}",
        "iterations": result.outer_iters_used,
        "wall_time_s": f"{result.wall_time:.6f}",
        "seed": meta.get("seed", ""),
        "descriptor": os.path.abspath(args.descriptor),
        "residual_history": ",".join(f"{r:.8g}" for r in result.residual_history),
    }
    if args.truth:
        truth = _load_truth_like(args.truth, result.x_hat.shape)
        record["psnr_db"] = f"{psnr(truth, result.x_hat, peak):.4f}"
    cstv_io.write_keyvalue(args.out + ".meta", record)
    print(f"wrote {args.out} after {result.outer_iters_used} iterations"
          + (f", PSNR {record['psnr_db']} dB" if args.truth else ""))
    return 0


def _load_truth_like(path, shape):
    if len(shape) == 3:
        return _load_input_cube(path, shape[2])
    _require_file(path, "truth")
    return cstv_io.resize_image(cstv_io.load_image(path), shape[0])


def cmd_denoise(args) -> int:
    lam = args.lam if args.lam is not None else UNIT_RANGE_TV_STRENGTH * 255.0
    if lam <= 0:
        raise UsageError(f"--lambda must be positive, got {lam}")
    _require_file(args.input)
    image = cstv_io.load_image(args.input)
    denoised = tv_denoise(image, lam, args.iters)
    cstv_io.save_image(args.out, denoised)
    diff = FiniteDifference(image.shape)
    cstv_io.write_keyvalue(args.out + ".meta", {
        "lambda": f"{lam:.10g}", "iters": args.iters,
        "tv_before": f"{diff.tv_norm(image):.6f}",
        "tv_after": f"{diff.tv_norm(denoised):.6f}",
        "source": os.path.abspath(args.input),
    })
    print(f"wrote {args.out}")
    return 0


def cmd_benchmark(args) -> int:
    _require_file(args.spec, "spec")
    try:
        spec = parse_benchmark_spec(args.spec)
    except (ValueError, KeyError) as exc:
        raise UsageError(f"bad benchmark spec: {exc}") from exc
    spec = replace(spec, output_path=args.out)
    rows = run_benchmark(spec)
    flagged = sum(1 for row in rows if row.error)
    cstv_io.write_keyvalue(args.out + ".meta", {
        "spec": os.path.abspath(args.spec),
        "rows": len(rows), "flagged": flagged,
        "inputs": ",".join(spec.inputs),
        "seeds": ",".join(str(s) for s in spec.seeds),
    })
    print(f"wrote {len(rows)} rows to {args.out}" +
          (f" ({flagged} flagged)" if flagged else ""))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cstv",
        description="Compressive-sensing simulation and TV-regularized reconstruction",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="sense a ground-truth image or cube")
    sim.add_argument("--input", required=True,
                     help="image, cube, or builtin:<name> ground truth")
    sim.add_argument("--operator", required=True, choices=["hadamard", "cacti", "cassi"])
    sim.add_argument("--csr", type=float, default=0.3,
                     help="compression ratio for the hadamard operator")
    sim.add_argument("--frames", type=int, default=None,
                     help="frame count for cube operators")
    sim.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sim.add_argument("--mask", default=None, help="mask file overriding the seeded mask")
    sim.add_argument("--density", type=float, default=0.5,
                     help="open-cell probability of the seeded mask")
    sim.add_argument("--size", type=int, default=256,
                     help="square side images are resized to (power of two)")
    sim.add_argument("--out", required=True)
    sim.set_defaults(func=cmd_simulate)

    rec = sub.add_parser("reconstruct", help="recover a signal from a measurement")
    rec.add_argument("--measurement", required=True)
    rec.add_argument("--descriptor", required=True)
    rec.add_argument("--algo", choices=list(ALGORITHMS), default=None)
    rec.add_argument("--lambda", dest="lam", type=float, default=None,
                     help="absolute TV strength (default 0.085 x data peak)")
    rec.add_argument("--eta", type=float, default=None)
    rec.add_argument("--delta", type=float, default=None)
    rec.add_argument("--variant", choices=["cumulative", "delta"], default=None)
    rec.add_argument("--iters", type=int, default=None)
    rec.add_argument("--inner-iters", dest="inner_iters", type=int, default=None)
    rec.add_argument("--tol", type=float, default=None)
    rec.add_argument("--config", default=None, help="key=value solver config file")
    rec.add_argument("--truth", default=None,
                     help="optional ground truth; adds PSNR to the metadata")
    rec.add_argument("--out", required=True)
    rec.set_defaults(func=cmd_reconstruct)

    den = sub.add_parser("denoise", help="TV-denoise an image")
    den.add_argument("--input", required=True)
    den.add_argument("--lambda", dest="lam", type=float, default=None)
    den.add_argument("--iters", type=int, default=100)
    den.add_argument("--out", required=True)
    den.set_defaults(func=cmd_denoise)

    ben = sub.add_parser("benchmark", help="run a PSNR benchmark grid")
    ben.add_argument("--spec", required=True, help="key=value benchmark spec file")
    ben.add_argument("--out", required=True, help="CSV destination")
    ben.set_defaults(func=cmd_benchmark)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - runtime failure contract
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
