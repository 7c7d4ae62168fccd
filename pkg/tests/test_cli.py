import json

import numpy as np
import pytest

from eulerlab.cli import main
from eulerlab.grid import PeriodicGrid, save_scalar_field, weierstrass_field


def _read_rows(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# config_hash=")
    assert "eulerlab=" in lines[0]
    return lines


class TestDispatch:
    def test_unknown_subcommand_exits_2(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2

    def test_unknown_flag_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            main(["simulate", "--does-not-exist"])
        assert exc.value.code == 2

    def test_missing_required_input_exits_2(self, tmp_path, capsys):
        code = main(["besov-fit", "--out", str(tmp_path)])
        assert code == 2
        assert "field" in capsys.readouterr().err

    def test_malformed_config_names_field(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"t_end": "soon"}))
        code = main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")])
        assert code == 2
        assert "t_end" in capsys.readouterr().err


class TestSimulate:
    def test_writes_trajectory(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps(
            {"grid_n": 64, "t_end": 0.05, "init": {"name": "sod"},
             "snapshot_stride": 0.025}
        ))
        out = tmp_path / "traj"
        assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
        assert (out / "meta.json").exists()
        assert (out / "t_0000.csv").exists()
        first = (out / "t_0000.csv").read_text().splitlines()[0]
        assert first.startswith("# config_hash=")

    def test_grid_override(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"t_end": 0.02, "init": {"name": "smooth"}}))
        out = tmp_path / "traj"
        assert main(["simulate", "--config", str(cfg), "--out", str(out),
                     "--grid-n", "32"]) == 0
        meta = json.loads((out / "meta.json").read_text())
        assert meta["grid"]["cells_per_dim"] == 32

    def test_reruns_are_byte_identical(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps(
            {"grid_n": 64, "t_end": 0.05, "init": {"name": "sod"},
             "snapshot_stride": 0.05}
        ))
        out1, out2 = tmp_path / "a", tmp_path / "b"
        main(["simulate", "--config", str(cfg), "--out", str(out1)])
        main(["simulate", "--config", str(cfg), "--out", str(out2)])
        assert (out1 / "t_0001.csv").read_bytes() == (out2 / "t_0001.csv").read_bytes()


class TestReports:
    def test_besov_fit_report(self, tmp_path):
        grid = PeriodicGrid(1, 512)
        field = weierstrass_field(0.6, 9, grid)
        fpath = tmp_path / "field.csv"
        save_scalar_field(fpath, field)
        out = tmp_path / "rep"
        assert main(["besov-fit", "--field", str(fpath), "--out", str(out)]) == 0
        lines = _read_rows(out / "besov_report.csv")
        assert lines[1] == "quantity,beta_or_eps,value,slope,residual"
        assert any(line.startswith("fitted_alpha") for line in lines)

    def test_commutator_rate_report(self, tmp_path):
        cfg = tmp_path / "probe.json"
        cfg.write_text(json.dumps({
            "fields": [{"weierstrass": {"alpha": 0.6, "levels": 11, "grid_n": 2048}}],
            "G": "square",
            "p": 4.0,
            "eps": [2.0 ** (-k) for k in range(4, 10)],
        }))
        out = tmp_path / "rep"
        code = main(["commutator-rate", "--config", str(cfg), "--out", str(out)])
        assert code == 0
        lines = _read_rows(out / "commutator_rate.csv")
        assert lines[1] == "eps,norm,bound,pass"

    def test_accept_writes_report(self, tmp_path, capsys, monkeypatch):
        from eulerlab import acceptance

        monkeypatch.setattr(acceptance, "GATES",
                            [acceptance.gate_thermo_identities])
        assert main(["accept", "--out", str(tmp_path)]) == 0
        out = capsys.readouterr().out
        assert "[PASS] thermo-identities" in out
        lines = _read_rows(tmp_path / "acceptance.csv")
        assert lines[1] == "gate,passed,details"

    def test_accept_fails_when_a_gate_fails(self, tmp_path, monkeypatch):
        from eulerlab import acceptance

        def broken():
            return acceptance.GateResult("broken", False, "synthetic failure")

        monkeypatch.setattr(acceptance, "GATES", [broken])
        assert main(["accept"]) == 1

    def test_verify_thermo_passes(self, tmp_path, capsys):
        assert main(["verify-thermo", "--gamma", "2.0", "--out", str(tmp_path)]) == 0
        assert "PASS" in capsys.readouterr().out
        assert (tmp_path / "thermo_report.csv").exists()

    def test_oslip_check_on_field(self, tmp_path):
        grid = PeriodicGrid(1, 1024)
        from eulerlab.grid import ScalarField

        x = grid.axis_centers()
        vel = ScalarField(grid, np.clip(x / 0.5, -1.0, 1.0))
        fpath = tmp_path / "vel.csv"
        save_scalar_field(fpath, vel, name="u1")
        out = tmp_path / "rep"
        assert main(["oslip-check", "--field", str(fpath), "--out", str(out)]) == 0
        lines = _read_rows(out / "oslip_report.csv")
        assert lines[1] == "tau,min_C,discrete_C,l1_partial,flags"
        min_c = float(lines[2].split(",")[1])
        assert min_c == pytest.approx(2.0, rel=0.1)

    def test_oslip_check_on_trajectory(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps(
            {"grid_n": 256, "t_end": 0.3, "init": {"name": "double_rarefaction"},
             "snapshot_stride": 0.05}
        ))
        main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "traj")])
        out = tmp_path / "rep"
        code = main(["oslip-check", "--traj", str(tmp_path / "traj"),
                     "--out", str(out), "--delta", "0.1"])
        assert code == 0
        lines = _read_rows(out / "oslip_report.csv")
        rows = [line.split(",") for line in lines[2:]]
        assert all(r[-1] == "unmasked" for r in rows)
        # the running integral of the positive part is nondecreasing
        partials = [float(r[3]) for r in rows]
        assert partials == sorted(partials)

    def test_relentropy_trace(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        base = {"t_end": 0.5, "init": {"name": "double_rarefaction"},
                "snapshot_stride": 0.05}
        cfg.write_text(json.dumps({**base, "grid_n": 512}))
        cfg2 = tmp_path / "cfg2.json"
        cfg2.write_text(json.dumps({**base, "grid_n": 1024}))
        main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "a")])
        main(["simulate", "--config", str(cfg2), "--out", str(tmp_path / "b")])
        out = tmp_path / "rep"
        code = main(["relentropy", "--traj-a", str(tmp_path / "a"),
                     "--traj-b", str(tmp_path / "b"), "--out", str(out),
                     "--sigma", "0.1"])
        assert code == 0
        lines = _read_rows(out / "relentropy_trace.csv")
        assert lines[1] == "t,integral_E,oslip_C,fitted_K,pass"
        assert len(lines) > 4
