import csv
import io

import numpy as np
import pytest

from hexcnn.cli import main
from hexcnn.fileio import read_hxt, write_img1
from hexcnn.resample import SquareImage


def run_cli(args, capsys):
    code = main(args)
    out = capsys.readouterr().out
    return code, list(csv.reader(io.StringIO(out)))


def test_verify_default_passes(tmp_path, capsys):
    out = tmp_path / "verify.csv"
    code = main(["verify", "--cases", "8", "--gradient-probes", "6", "--out", str(out)])
    assert code == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["suite", "case", "status", "max_rel_err"]
    assert all(r[2] == "pass" for r in rows[1:])
    assert {r[0] for r in rows[1:]} == {"oracle", "adjoint", "gradient"}


def test_verify_zero_cases_empty_report(capsys):
    code, rows = run_cli(["verify", "--cases", "0"], capsys)
    assert code == 0
    assert rows == [["suite", "case", "status", "max_rel_err"]]


def test_verify_fault_injection_fails(tmp_path, capsys, monkeypatch):
    monkeypatch.chdir(tmp_path)
    out = tmp_path / "verify.csv"
    code = main(["verify", "--cases", "3", "--gradient-probes", "3",
                 "--inject-fault", "--out", str(out)])
    err = capsys.readouterr().err
    assert code == 1
    assert "oracle_000" in err
    rows = list(csv.reader(out.open()))
    assert any(r[2] == "fail" for r in rows[1:])
    assert list(tmp_path.glob("hexcnn-replay-*.npz"))


def test_space_report_values(capsys):
    code, rows = run_cli(["space-report", "--sizes", "120"], capsys)
    assert code == 0
    header, row = rows[0], rows[1]
    rec = dict(zip(header, row))
    assert rec["hex_input_cells"] == "42841"
    assert rec["zeroout_input_cells"] == "57121"
    assert rec["quasih_input_cells"] == "49712"
    assert float(rec["input_saving_vs_zeroout_pct"]) == pytest.approx(25.0, abs=0.1)
    assert float(rec["input_saving_vs_quasih_pct"]) == pytest.approx(13.8, abs=0.5)
    assert float(rec["conv_saving_vs_zeroout_pct"]) == pytest.approx(41.7, abs=0.1)


def test_space_report_deterministic_bytes(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["space-report", "--sizes", "30,60,90,120", "--out", str(a)]) == 0
    assert main(["space-report", "--sizes", "30,60,90,120", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_bench_conv_small(capsys):
    code, rows = run_cli(
        ["bench-conv", "--sizes", "8,16", "--reps", "5", "--seed", "1"], capsys
    )
    assert code == 0
    header = rows[0]
    assert header[0] == "case_id" and "wall_time_s" in header
    body = rows[1:]
    assert len(body) == 6  # two sizes x three methods
    rec = {(r[0], r[1]): dict(zip(header, r)) for r in body}
    hexr = rec[("conv_L16_k2_s1", "hex_direct")]
    zero = rec[("conv_L16_k2_s1", "zeroout_ref")]
    # per-output MAC ratio is exactly 7/9 for side-2 windows
    hex_per = int(hexr["macs"]) / int(hexr["output_cells"])
    zero_per = int(zero["macs"]) / int(zero["output_cells"])
    assert hex_per / zero_per == pytest.approx(7 / 9)


def test_bench_conv_skips_invalid_geometry(capsys):
    code = main(["bench-conv", "--sizes", "3,4", "--stride", "2", "--reps", "1"])
    captured = capsys.readouterr()
    assert code == 0
    assert "skipping side 3" in captured.err
    assert "conv_L4_k2_s2" in captured.out


def test_bench_train_paths_agree(capsys):
    code, rows = run_cli(
        ["bench-train", "--preset", "hexlenet5", "--side", "17",
         "--batch", "4", "--steps", "2", "--seed", "2"],
        capsys,
    )
    assert code == 0
    header = rows[0]
    recs = [dict(zip(header, r)) for r in rows[1:]]
    assert [r["path"] for r in recs] == ["hexcnn", "zeroout"]
    assert float(recs[1]["max_rel_loss_gap_vs_hex"]) <= 1e-8
    assert recs[0]["first_loss"] == recs[1]["first_loss"]


def test_bench_train_zero_lr_identical_losses(capsys):
    code, rows = run_cli(
        ["bench-train", "--preset", "hexlenet4", "--side", "17",
         "--batch", "2", "--steps", "2", "--lr", "0"],
        capsys,
    )
    assert code == 0
    recs = [dict(zip(rows[0], r)) for r in rows[1:]]
    # training disabled: the two layouts report identical losses
    assert recs[0]["first_loss"] == recs[1]["first_loss"]
    assert recs[0]["last_loss"] == recs[1]["last_loss"]
    assert float(recs[1]["max_rel_loss_gap_vs_hex"]) <= 1e-10


def test_resample_constant_image(tmp_path, capsys):
    from hexcnn.resample import HexLatticeGeometry, cell_centers

    img_path = tmp_path / "c.img1"
    out_path = tmp_path / "c.hxt"
    write_img1(img_path, SquareImage(np.full((1, 16, 16), 0.5)))
    assert main(["resample", str(img_path), str(out_path)]) == 0
    t = read_hxt(out_path)
    assert t.side == 13  # ceil((3*16+1)/4)
    # the covering hexagon sticks out past the image: cells sampling fully
    # inside reproduce the constant, cells fully outside read zero, and
    # boundary cells fall in between
    centers = cell_centers(13, HexLatticeGeometry(), (7.5, 7.5))
    interior = (
        (centers[:, 0] >= 0) & (centers[:, 0] <= 14) & (centers[:, 1] >= 0) & (centers[:, 1] <= 14)
    )
    assert np.allclose(t.data[0, interior], 0.5)
    assert t.data.min() >= 0.0 and t.data.max() <= 0.5 + 1e-12


def test_resample_single_pixel(tmp_path):
    img_path = tmp_path / "p.img1"
    out_path = tmp_path / "p.hxt"
    write_img1(img_path, SquareImage(np.array([[[2.0]]])))
    assert main(["resample", str(img_path), str(out_path), "--side", "1"]) == 0
    t = read_hxt(out_path)
    assert t.side == 1 and t.data[0, 0] == 2.0


def test_resample_bad_inputs(tmp_path, capsys):
    img_path = tmp_path / "c.img1"
    write_img1(img_path, SquareImage(np.ones((1, 4, 4))))
    assert main(["resample", str(tmp_path / "missing.img1"), str(tmp_path / "o.hxt")]) == 2
    assert main(["resample", str(img_path), str(tmp_path / "o.hxt"), "--side", "nope"]) == 2


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["bench-conv", "--sizes", "abc"])
    assert exc.value.code == 2


def test_threads_env_default(monkeypatch, capsys):
    monkeypatch.setenv("HEXCNN_THREADS", "4")
    code, rows = run_cli(["bench-conv", "--sizes", "4", "--reps", "1"], capsys)
    assert code == 0
    rec = dict(zip(rows[0], rows[1]))
    assert rec["threads"] == "4"
