import json
import logging
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from fractalmark.cli import main
from fractalmark.imaging import quantize8, read_image, write_png
from fractalmark.provenance import shamir_reconstruct
from fractalmark.synthetic import sierpinski_carpet

GOLDEN = Path(__file__).parent / "golden" / "nft_metadata.json"
CARPET = math.log(8) / math.log(3)


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr().out
    return code, out


@pytest.fixture
def art_png(tmp_path, art):
    p = tmp_path / "art.png"
    write_png(quantize8(art), p)
    return p


def test_analyze_carpet_and_constant(tmp_path, capsys):
    carpet = tmp_path / "carpet.png"
    write_png(sierpinski_carpet(6).astype(float), carpet)
    flat = tmp_path / "constant.png"
    write_png(np.full((64, 64), 0.5), flat)
    code, out = run(capsys, "analyze", carpet, flat, "--output-dir", tmp_path / "o")
    reports = json.loads(out)
    assert code == 1
    assert [Path(r["file"]).name for r in reports] == ["carpet.png", "constant.png"]
    assert reports[0]["fractal_dimension"] == pytest.approx(CARPET, abs=0.07)
    assert reports[1]["error"] == "DegenerateInput"
    assert (tmp_path / "o" / "carpet.analysis.json").exists()


def test_analyze_missing_file_exit_2(tmp_path, capsys):
    code, _ = run(capsys, "analyze", tmp_path / "missing.png")
    assert code == 2


def test_embed_detect_round_trip(tmp_path, art_png, capsys):
    code, out = run(capsys, "embed", art_png, "--output-dir", tmp_path)
    assert code == 0
    info = json.loads(out)
    code, out = run(capsys, "detect", info["image"], info["receipt"])
    res = json.loads(out)
    assert code == 0 and res["detected"] and res["r"] >= 0.999 and res["threshold"] == 0.95


def test_detect_wrong_receipt(tmp_path, art_png, capsys):
    _, out = run(capsys, "embed", art_png, "--output-dir", tmp_path)
    info = json.loads(out)
    other = tmp_path / "small.png"
    write_png(quantize8(read_image(art_png)[:128, :128]), other)
    code, _ = run(capsys, "detect", other, info["receipt"])
    assert code == 1
    bad = tmp_path / "bad.json"
    bad.write_text(Path(info["receipt"]).read_text().replace('"scale": ', '"scale": 1'))
    code, _ = run(capsys, "detect", info["image"], bad)
    assert code == 1


def test_embed_alpha_zero_logs_inf(tmp_path, art_png, capsys, caplog):
    with caplog.at_level(logging.INFO, logger="fractalmark"):
        code, out = run(capsys, "embed", art_png, "--alpha", "0", "--output-dir", tmp_path)
    assert code == 0 and json.loads(out)["psnr"] == "inf"
    assert "PSNR inf dB" in caplog.text


def test_attack_noise_deterministic(tmp_path, art_png, capsys):
    a, b = tmp_path / "a.png", tmp_path / "b.png"
    for p in (a, b):
        code, _ = run(capsys, "attack", art_png, "--kind", "noise", "--sigma", "0.05", "--seed", "7", "--out", p)
        assert code == 0
    assert a.read_bytes() == b.read_bytes()


def test_attack_crop_logs_coverage(tmp_path, art_png, capsys, caplog):
    with caplog.at_level(logging.INFO, logger="fractalmark"):
        code, out = run(capsys, "attack", art_png, "--kind", "crop", "--area", "0.5", "--seed", "7",
                        "--output-dir", tmp_path)
    assert code == 0
    assert 0.48 <= json.loads(out)["coverage"] <= 0.52
    assert "crop coverage" in caplog.text


def test_attack_unknown_kind_usage_error(art_png, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["attack", str(art_png), "--kind", "shear"])
    assert exc.value.code == 2


def test_bench_ours_only(tmp_path, capsys):
    code, out = run(capsys, "bench", "--methods", "ours", "--images", "2", "--iterations", "1",
                    "--negatives", "4", "--output-dir", tmp_path)
    assert code == 0 and "ours" in out
    rows = (tmp_path / "results.csv").read_text().splitlines()[1:]
    assert rows and {r.split(",")[0] for r in rows} == {"ours"}
    for name in ("summary.json", "detection_rates.svg", "detection_boxplot.svg"):
        assert (tmp_path / name).exists()


def test_fingerprint_image_twice(tmp_path, art_png, capsys):
    _, a = run(capsys, "fingerprint", art_png, "--output-dir", tmp_path / "a")
    _, b = run(capsys, "fingerprint", art_png, "--output-dir", tmp_path / "b")
    assert json.loads(a)["token_id"] == json.loads(b)["token_id"]
    merkle = json.loads((tmp_path / "a" / "art.merkle.json").read_text())
    assert merkle["root"] == json.loads(a)["merkle_root"] and len(merkle["proofs"]) == 18


def test_fingerprint_golden_fixture(tmp_path, capsys):
    src = tmp_path / "fixture.json"
    src.write_text(json.dumps({
        "features": [1.88, 2067.82, 3552.45],
        "fractal_dimension": 1.88, "turbulence_mean_power": 2067.82,
        "turbulence_variance_power": 3552.45, "timestamp": "2025-01-01 T12:34:56Z",
    }))
    code, _ = run(capsys, "fingerprint", src, "--output-dir", tmp_path)
    assert code == 0
    assert (tmp_path / "fixture.metadata.json").read_text() == GOLDEN.read_text()


def test_fingerprint_shamir_any_two(tmp_path, art_png, capsys):
    _, out = run(capsys, "fingerprint", art_png, "--shamir", "2,3", "--output-dir", tmp_path)
    token = int(json.loads(out)["token_id"], 16)
    shares = [json.loads((tmp_path / f"art.share{i}.json").read_text()) for i in (1, 2, 3)]
    p = shares[0]["p"]
    for i in range(3):
        for j in range(i + 1, 3):
            pts = [(shares[i]["x"], shares[i]["y"]), (shares[j]["x"], shares[j]["y"])]
            assert shamir_reconstruct(pts, p, 2) == token


def test_metrics_with_reference(tmp_path, art_png, capsys):
    code, out = run(capsys, "metrics", art_png, "--reference", art_png, "--csv", "m.csv",
                    "--output-dir", tmp_path)
    row = json.loads(out)[0]
    assert code == 0 and row["psnr"] == "inf" and row["mse"] == 0
    assert {"tv_loss", "texture_loss", "drip_loss"} <= set(row)
    assert (tmp_path / "m.csv").read_text().startswith("file,tv_loss")


def test_config_file_and_version(tmp_path, art_png, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"version": "fractalmark-config/1", "seed": 3, "embed": {"gamma": 0.0}}))
    code, out = run(capsys, "--config", cfg, "embed", art_png, "--output-dir", tmp_path)
    assert code == 0
    receipt = json.loads(Path(json.loads(out)["receipt"]).read_text())
    assert receipt["config"]["gamma"] == 0.0 and receipt["config"]["assign_seed"] == 3
    cfg.write_text(json.dumps({"version": "other/9"}))
    code, _ = run(capsys, "--config", cfg, "metrics", art_png)
    assert code == 2


def test_console_script_help():
    for sub in ("analyze", "embed", "detect", "attack", "bench", "fingerprint", "metrics"):
        res = subprocess.run([sys.executable, "-m", "fractalmark.cli", sub, "--help"],
                             capture_output=True, text=True)
        assert res.returncode == 0 and "usage" in res.stdout
