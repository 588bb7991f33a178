"""End-to-end CLI tests: exit codes, files written, round-trip fidelity."""

import os

import numpy as np
import pytest

from cstv import FiniteDifference
from cstv.cli import main
from cstv.io import load_cube, load_image, read_keyvalue, save_cube, save_image


def make_image(path, side=64, seed=0):
    rng = np.random.default_rng(seed)
    blocks = rng.integers(30, 220, size=(4, 4)).astype(float)
    arr = np.kron(blocks, np.ones((side // 4, side // 4)))
    save_image(path, arr)
    return arr


def test_simulate_hadamard_measurement_length(tmp_path):
    img = tmp_path / "img.pgm"
    make_image(img, side=256)
    out = tmp_path / "meas.bin"
    code = main(["simulate", "--input", str(img), "--operator", "hadamard",
                 "--csr", "0.1", "--seed", "5", "--out", str(out)])
    assert code == 0
    meta = read_keyvalue(str(out) + ".desc")
    assert int(meta["m"]) == 6554  # round(0.1 * 65536)
    assert os.path.getsize(out) == 6554 * 8
    assert meta["kind"] == "hadamard" and meta["seed"] == "5"


def test_simulate_video_measurement_is_frame_sized(tmp_path):
    out = tmp_path / "meas.bin"
    code = main(["simulate", "--input", "builtin:moving-rectangle",
                 "--operator", "cacti", "--frames", "8", "--seed", "1",
                 "--out", str(out)])
    assert code == 0
    meta = read_keyvalue(str(out) + ".desc")
    assert int(meta["measurement_length"]) == 64 * 64
    assert os.path.exists(str(out) + ".mask")
    assert os.path.exists(str(out) + ".mask.hdr")


def test_simulate_missing_input_exits_2_without_output(tmp_path):
    out = tmp_path / "meas.bin"
    code = main(["simulate", "--input", str(tmp_path / "nope.pgm"),
                 "--operator", "hadamard", "--out", str(out)])
    assert code == 2
    assert not out.exists() and not (tmp_path / "meas.bin.desc").exists()


def test_round_trip_full_sampling_recovers_exactly(tmp_path):
    img_path = tmp_path / "img.pgm"
    truth = make_image(img_path, side=64, seed=3)
    meas = tmp_path / "m.bin"
    assert main(["simulate", "--input", str(img_path), "--operator", "hadamard",
                 "--csr", "1.0", "--size", "64", "--out", str(meas)]) == 0
    recon = tmp_path / "rec.pgm"
    assert main(["reconstruct", "--measurement", str(meas),
                 "--descriptor", str(meas) + ".desc", "--algo", "gap-tv",
                 "--iters", "5", "--out", str(recon)]) == 0
    np.testing.assert_allclose(load_image(recon), truth, atol=1e-8)
    meta = read_keyvalue(str(recon) + ".meta")
    assert meta["algorithm"] == "gap-tv"
    assert int(meta["iterations"]) >= 1
    assert len(meta["residual_history"].split(",")) == int(meta["iterations"])


def test_round_trip_reports_psnr_with_truth(tmp_path):
    img_path = tmp_path / "img.pgm"
    make_image(img_path, side=64, seed=4)
    meas = tmp_path / "m.bin"
    assert main(["simulate", "--input", str(img_path), "--operator", "hadamard",
                 "--csr", "0.4", "--size", "64", "--out", str(meas)]) == 0
    recon = tmp_path / "rec.npy"
    assert main(["reconstruct", "--measurement", str(meas),
                 "--descriptor", str(meas) + ".desc", "--algo", "acc-gap-tv",
                 "--truth", str(img_path), "--out", str(recon)]) == 0
    meta = read_keyvalue(str(recon) + ".meta")
    assert float(meta["psnr_db"]) > 20.0


def test_round_trip_video_cube(tmp_path):
    cube = np.zeros((16, 16, 4))
    cube[4:12, 4:12, :] = 0.8
    cube[:, :, 2] += 0.1
    src = tmp_path / "cube.bin"
    save_cube(src, cube)
    meas = tmp_path / "m.bin"
    assert main(["simulate", "--input", str(src), "--operator", "cacti",
                 "--seed", "2", "--out", str(meas)]) == 0
    recon = tmp_path / "rec.bin"
    assert main(["reconstruct", "--measurement", str(meas),
                 "--descriptor", str(meas) + ".desc", "--algo", "gap-tv",
                 "--iters", "30", "--out", str(recon)]) == 0
    rec = load_cube(recon)
    assert rec.shape == cube.shape
    # coarse fidelity: better than the all-zero baseline by a wide margin
    assert np.mean((rec - cube) ** 2) < 0.25 * np.mean(cube ** 2)


def test_reconstruct_unknown_algorithm_is_usage_error(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["reconstruct", "--measurement", "m", "--descriptor", "d",
              "--algo", "magic-tv", "--out", "o"])
    assert exc.value.code == 2


def test_reconstruct_measurement_descriptor_mismatch(tmp_path):
    img_path = tmp_path / "img.pgm"
    make_image(img_path, side=64)
    meas = tmp_path / "m.bin"
    assert main(["simulate", "--input", str(img_path), "--operator", "hadamard",
                 "--csr", "0.5", "--size", "64", "--out", str(meas)]) == 0
    truncated = tmp_path / "short.bin"
    truncated.write_bytes(meas.read_bytes()[:-16])
    code = main(["reconstruct", "--measurement", str(truncated),
                 "--descriptor", str(meas) + ".desc", "--out", str(tmp_path / "r.npy")])
    assert code == 2


def test_reconstruct_accepts_config_file_with_cli_override(tmp_path):
    img_path = tmp_path / "img.pgm"
    make_image(img_path, side=32)
    meas = tmp_path / "m.bin"
    assert main(["simulate", "--input", str(img_path), "--operator", "hadamard",
                 "--csr", "0.5", "--size", "32", "--out", str(meas)]) == 0
    conf = tmp_path / "solver.conf"
    conf.write_text("# solver settings\nalgorithm=admm-tv\nlambda=5\niters=7\n")
    recon = tmp_path / "rec.npy"
    assert main(["reconstruct", "--measurement", str(meas),
                 "--descriptor", str(meas) + ".desc", "--config", str(conf),
                 "--iters", "3", "--out", str(recon)]) == 0
    meta = read_keyvalue(str(recon) + ".meta")
    assert meta["algorithm"] == "admm-tv"
    assert meta["lambda"] == "5"
    assert meta["max_iters"] == "3"  # CLI flag wins over the config file
    bad = tmp_path / "bad.conf"
    bad.write_text("mystery_knob=1\n")
    assert main(["reconstruct", "--measurement", str(meas),
                 "--descriptor", str(meas) + ".desc", "--config", str(bad),
                 "--out", str(recon)]) == 2


def test_denoise_constant_image_unchanged(tmp_path):
    src = tmp_path / "const.pgm"
    save_image(src, np.full((32, 32), 140.0))
    out = tmp_path / "out.pgm"
    assert main(["denoise", "--input", str(src), "--lambda", "20",
                 "--iters", "50", "--out", str(out)]) == 0
    np.testing.assert_array_equal(load_image(out), np.full((32, 32), 140.0))


def test_denoise_tiny_lambda_is_identity(tmp_path):
    src = tmp_path / "img.npy"
    rng = np.random.default_rng(9)
    arr = rng.uniform(0, 255, size=(16, 16))
    save_image(src, arr)
    out = tmp_path / "out.npy"
    assert main(["denoise", "--input", str(src), "--lambda", "1e-12",
                 "--iters", "100", "--out", str(out)]) == 0
    assert np.abs(load_image(out) - arr).max() <= 1e-8


def test_denoise_reduces_total_variation(tmp_path):
    rng = np.random.default_rng(10)
    step = np.zeros((32, 32))
    step[:, 16:] = 200.0
    noisy = step + rng.normal(0, 20, size=step.shape)
    src = tmp_path / "noisy.npy"
    save_image(src, noisy)
    out = tmp_path / "clean.npy"
    assert main(["denoise", "--input", str(src), "--lambda", "10",
                 "--iters", "100", "--out", str(out)]) == 0
    diff = FiniteDifference((32, 32))
    assert diff.tv_norm(load_image(out)) < diff.tv_norm(noisy)
    meta = read_keyvalue(str(out) + ".meta")
    assert float(meta["tv_after"]) < float(meta["tv_before"])


def test_denoise_rejects_nonpositive_lambda(tmp_path):
    src = tmp_path / "img.pgm"
    make_image(src, side=32)
    assert main(["denoise", "--input", str(src), "--lambda", "0",
                 "--out", str(tmp_path / "o.pgm")]) == 2
    assert main(["denoise", "--input", str(src), "--lambda", "-3",
                 "--out", str(tmp_path / "o.pgm")]) == 2


def test_benchmark_single_cell_spec(tmp_path):
    img = tmp_path / "img.pgm"
    make_image(img, side=32)
    spec = tmp_path / "bench.spec"
    spec.write_text(
        "inputs=img.pgm\ncsr=0.3\nalgorithms=gap-tv\nseeds=4\nsize=32\niters=10\n"
    )
    out = tmp_path / "rows.csv"
    assert main(["benchmark", "--spec", str(spec), "--out", str(out)]) == 0
    lines = out.read_text().strip().splitlines()
    assert len(lines) == 2
    assert lines[0] == "image_id,algorithm,csr,seed,frame,psnr_db,wall_time_s,iterations"
    assert lines[1].startswith("img,gap-tv,")


def test_benchmark_empty_inputs_exits_2(tmp_path):
    spec = tmp_path / "bench.spec"
    spec.write_text("inputs=\ncsr=0.3\nalgorithms=gap-tv\n")
    assert main(["benchmark", "--spec", str(spec), "--out",
                 str(tmp_path / "rows.csv")]) == 2


def test_benchmark_missing_spec_exits_2(tmp_path):
    assert main(["benchmark", "--spec", str(tmp_path / "none.spec"),
                 "--out", str(tmp_path / "rows.csv")]) == 2
