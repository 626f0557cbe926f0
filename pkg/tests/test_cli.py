import csv
import json
import math
import shutil
import subprocess
import sys

import pytest

from delaunay_cmc.cli import main


def rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def problem(tmp_path, name="p.json", **over):
    spec = {"L_gamma": 0.5, "tau0": 0.16, "N": 1,
            "profiles": {"a": "sin:0.5,1"}, "newton": {"tol": 1e-10, "max_iter": 25}}
    spec.update(over)
    p = tmp_path / name
    p.write_text(json.dumps(spec))
    return str(p)


class TestDelaunay:
    def test_outputs_and_manifest(self, tmp_path):
        assert main(["delaunay", "--tau", "0.16", "--periods", "3", "--samples", "301",
                     "--out", str(tmp_path)]) == 0
        tr = rows(tmp_path / "trajectory.csv")
        ev = rows(tmp_path / "events.csv")
        assert len(tr) == 301 and list(tr[0]) == ["psi", "phi", "zeta", "tau"]
        assert len(ev) >= 3
        man = json.loads((tmp_path / "manifest.json").read_text())
        assert man["command"] == "delaunay" and len(man["config_digest"]) == 64
        assert {"tool_version", "outputs", "wall_time"} <= set(man)

    def test_deterministic(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for d in (a, b):
            assert main(["delaunay", "--tau", "0.1", "--out", str(d)]) == 0
        assert (a / "trajectory.csv").read_bytes() == (b / "trajectory.csv").read_bytes()
        ma = json.loads((a / "manifest.json").read_text())
        mb = json.loads((b / "manifest.json").read_text())
        assert ma["config_digest"] == mb["config_digest"]

    def test_domain_error(self, tmp_path):
        assert main(["delaunay", "--tau", "0.3", "--out", str(tmp_path)]) == 2

    def test_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["delaunay"])
        assert exc.value.code == 2


class TestVerifyAndMonodromy:
    def test_verify_pass_and_threshold(self, tmp_path):
        assert main(["verify", "--taus", "0.1,0.2", "--out", str(tmp_path)]) == 0
        rep = rows(tmp_path / "identities.csv")
        assert len(rep) == 12
        assert set(rep[0]) == {"name", "tau", "lhs", "rhs", "abs_err", "rel_err", "nodes"}
        assert main(["verify", "--taus", "0.1", "--threshold", "1e-18",
                     "--out", str(tmp_path / "strict")]) == 1

    def test_monodromy(self, tmp_path):
        assert main(["monodromy", "--taus", "0.1,0.16", "--out", str(tmp_path)]) == 0
        rep = rows(tmp_path / "monodromy.csv")
        assert len(rep) == 2
        for r in rep:
            assert float(r["kappa"]) < 0
            assert float(r["kappa_fd"]) == pytest.approx(float(r["kappa"]), rel=1e-4)


class TestShootAndScan:
    def test_shoot_zero_forcing(self, tmp_path):
        p = problem(tmp_path, L_gamma=2 * math.pi, N=4, profiles={})
        assert main(["shoot", p, "--out", str(tmp_path)]) == 0
        out = json.loads((tmp_path / "shoot.json").read_text())
        assert out["omega"] == 0.0 and out["N"] == 4
        assert abs(out["residual_zeta"]) <= 1e-12

    def test_missing_file(self, tmp_path):
        assert main(["shoot", str(tmp_path / "none.json"), "--out", str(tmp_path)]) == 6

    def test_bad_json(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{nope")
        assert main(["shoot", str(p), "--out", str(tmp_path)]) == 2

    def test_convergence_exit(self, tmp_path):
        p = problem(tmp_path, newton={"max_iter": 0})
        assert main(["shoot", p, "--delta", "0.3", "--out", str(tmp_path)]) == 4

    def test_annulus_exit(self, tmp_path):
        p = problem(tmp_path, L_gamma=2 * math.pi, N=4, profiles={"a": "constant:40"})
        assert main(["shoot", p, "--out", str(tmp_path)]) == 5

    def test_scan(self, tmp_path, monkeypatch):
        monkeypatch.setenv("DELAUNAY_CMC_JOBS", "1")
        p = problem(tmp_path)
        assert main(["scan", p, "--points", "8", "--out", str(tmp_path)]) == 0
        assert len(rows(tmp_path / "scan.csv")) == 8
        z = json.loads((tmp_path / "zeros.json").read_text())
        assert z["symmetry_class"] == "generic" and len(z["zeros"]) >= 2


class TestMesh:
    def test_periodic_counts(self, tmp_path):
        assert main(["mesh", "--tau", "0.25", "--theta-res", "8", "--rings", "8",
                     "--periodic", "--out", str(tmp_path)]) == 0
        text = (tmp_path / "surface.obj").read_text().splitlines()
        assert sum(t.startswith("v ") for t in text) == 64
        assert sum(t.startswith("f ") for t in text) == 128
        h = rows(tmp_path / "surface_H.csv")
        assert len(h) == 64 and all(float(r["H"]) == pytest.approx(20.0) for r in h)

    def test_tube_metadata(self, tmp_path):
        assert main(["mesh", "--tau", "0.16", "--rings", "16", "--theta-res", "8",
                     "--tube", "--out", str(tmp_path)]) == 0
        meta = json.loads((tmp_path / "tube_metadata.json").read_text())
        assert meta["cmc"] is False


@pytest.mark.skipif(shutil.which("delaunay-cmc") is None, reason="console script not installed")
def test_console_script(tmp_path):
    r = subprocess.run(["delaunay-cmc", "delaunay", "--tau", "0.16", "--out", str(tmp_path)],
                       capture_output=True, text=True)
    assert r.returncode == 0
    r = subprocess.run([sys.executable, "-m", "delaunay_cmc.cli", "delaunay", "--tau", "-1",
                        "--out", str(tmp_path)], capture_output=True, text=True)
    assert r.returncode == 2 and "error" in r.stderr
