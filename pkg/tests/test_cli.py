import hashlib
import json
import os

import pytest

from nshs.cli import emit_outputs, main, verify_manifest
from nshs.solvers import read_checkpoint

SMALL = ["--set", "K=4", "--set", "ny=96", "--set", "T=0.02"]


def _manifest(d):
    with open(os.path.join(d, "manifest.json")) as fh:
        return json.load(fh)


def test_empty_manifest(tmp_path):
    m = emit_outputs({}, tmp_path)
    assert m["artifacts"] == []
    assert _manifest(tmp_path)["artifacts"] == []


def test_manifest_hashes_and_determinism(tmp_path):
    arts = {"a.csv": "x,y\n1,2\n", "sub/b.bin": b"\x00\x01"}
    m1 = emit_outputs(arts, tmp_path / "one")
    m2 = emit_outputs(arts, tmp_path / "two")
    assert m1 == m2
    for e in m1["artifacts"]:
        data = (tmp_path / "one" / e["path"]).read_bytes()
        assert hashlib.sha256(data).hexdigest() == e["sha256"] and len(data) == e["bytes"]
    assert (tmp_path / "one" / "manifest.json").read_bytes() == (tmp_path / "two" / "manifest.json").read_bytes()
    assert verify_manifest(tmp_path / "one")
    (tmp_path / "one" / "a.csv").write_text("tampered")
    assert not verify_manifest(tmp_path / "one")


def test_partial_output_cleaned(tmp_path):
    with pytest.raises(ValueError):
        emit_outputs({"good.txt": "ok", "../escape.txt": "no"}, tmp_path)
    assert os.listdir(tmp_path) == []


def test_simulate_and_inspect(tmp_path, capsys):
    out = tmp_path / "sim"
    assert main(["simulate", *SMALL, "--out", str(out), "--norms"]) == 0
    names = {e["path"] for e in _manifest(out)["artifacts"]}
    assert names == {"checkpoint.nshs", "config.ini", "datum.json", "diagnostics.csv", "norms.json", "run.json"}
    traj = read_checkpoint(out / "checkpoint.nshs")
    assert traj.config.K == 4 and traj.times[-1] == pytest.approx(0.02)
    assert main(["inspect", "--checkpoint", str(out / "checkpoint.nshs"), "--out", str(tmp_path / "ins")]) == 0
    assert main(["norms", "--checkpoint", str(out / "checkpoint.nshs"), "--out", str(tmp_path / "nrm")]) == 0


def test_rerun_is_reproducible(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["simulate", *SMALL, "--solver", "direct", "--seed", "3", "--out", str(d)]) == 0
    assert _manifest(a) == _manifest(b)


def test_config_file_and_errors(tmp_path, capsys):
    ini = tmp_path / "c.ini"
    ini.write_text("[physics]\nmu0 = 0.2\n")
    assert main(["simulate", "--config", str(ini), "--out", str(tmp_path / "x")]) == 1
    assert "1/10" in capsys.readouterr().err
    assert main(["simulate", "--set", "bogus=1", "--out", str(tmp_path / "x")]) == 1
    assert main(["inspect", "--out", str(tmp_path / "x")]) == 1
    assert not (tmp_path / "x").exists()


def test_euler_command(tmp_path):
    assert main(["euler", *SMALL, "--out", str(tmp_path / "e")]) == 0


def test_converge_command(tmp_path):
    out = tmp_path / "cv"
    rc = main(["converge", "--set", "K=4", "--set", "ny=64", "--set", "T=0.05",
               "--nus", "4e-2,2e-2,1e-2", "--out", str(out)])
    assert rc == 0
    lines = (out / "convergence.csv").read_text().splitlines()
    assert len(lines) == 5 and lines[-1].startswith("slope")
    # fewer than three viscosities cannot establish monotone decrease
    assert main(["converge", "--set", "K=4", "--set", "ny=64", "--set", "T=0.05",
                 "--nus", "4e-2,2e-2", "--out", str(tmp_path / "cv2")]) == 2


def test_verify_kernels_command(tmp_path):
    out = tmp_path / "vk"
    assert main(["verify-kernels", "--out", str(out)]) == 0
    assert {e["path"] for e in _manifest(out)["artifacts"]} == {"kernel_bounds.json", "summary.csv"}
