import json

import pytest

from beamlab import cli, reports


def run(argv):
    return cli.main(argv)


def test_pendulum_fixed_point_zeros(tmp_path):
    out = tmp_path / "pend.csv"
    assert run(["pendulum", "--phi0", "0", "--phidot0", "0", "--omega", "2.0",
                "--horizon", "1.0", "--dt", "0.01", "--out", str(out)]) == 0
    rows, header = reports.load_report(str(out))
    assert header["config"]["subcommand"] == "pendulum"
    assert all(r["phi"] == 0.0 for r in rows)
    assert rows[0]["time"] == 0.0 and rows[-1]["time"] == 1.0


def test_bound_check_deterministic_across_runs_and_workers(tmp_path):
    args = ["bound-check", "--seed", "7", "--samples", "60", "--cutoff", "2",
            "--mixtures", "5"]
    paths = [tmp_path / f"r{i}.csv" for i in range(3)]
    assert run(args + ["--out", str(paths[0])]) == 0
    assert run(args + ["--out", str(paths[1])]) == 0
    assert run(args + ["--out", str(paths[2]), "--workers", "2"]) == 0
    blobs = [p.read_bytes() for p in paths]
    assert blobs[0] == blobs[1] == blobs[2]


def test_bound_check_json_and_csv_agree(tmp_path):
    base = ["bound-check", "--seed", "3", "--samples", "25", "--cutoff", "1"]
    cpath, jpath = tmp_path / "b.csv", tmp_path / "b.json"
    assert run(base + ["--out", str(cpath), "--format", "csv"]) == 0
    assert run(base + ["--out", str(jpath), "--format", "json"]) == 0
    crows, _ = reports.load_report(str(cpath))
    jrows, _ = reports.load_report(str(jpath))
    assert crows == jrows


def test_neg_sweep_bound_column(tmp_path):
    out = tmp_path / "sweep.csv"
    assert run(["neg-sweep", "--seed", "11", "--samples", "10", "--k-max", "3",
                "--out", str(out)]) == 0
    rows, _ = reports.load_report(str(out))
    assert {r["cutoff"] for r in rows} == {1, 2, 3}
    for r in rows:
        assert r["bound_exact"] == pytest.approx(2.0 / r["cutoff"], rel=1e-12)
        assert r["negativity"] <= r["bound_exact"] + 1e-9
        assert r["satisfied"] is True


def test_exit_code_2_on_violation(tmp_path, monkeypatch):
    import beamlab.entanglement as ent

    def fake_rows(seed, indices, cutoff, photons_per_beam=None):
        return [{"seed": 0, "cutoff": cutoff, "n_a": 1.0, "n_b": 1.0,
                 "n_ab": 1.0, "negativity": 3.0, "bound_exact": 2.0,
                 "bound_approx": 2.0, "satisfied": False}]

    monkeypatch.setattr(ent, "bound_rows", fake_rows)
    out = tmp_path / "viol.csv"
    assert run(["bound-check", "--seed", "1", "--samples", "1", "--cutoff", "1",
                "--out", str(out)]) == 2


def test_tomography_scene_file(tmp_path):
    # one Kraus element: the mode-0 projector, entries as [re, im] pairs
    projector = [[[1, 0], [0, 0]],
                 [[0, 0], [0, 0]]]
    scene = {
        "stokes": {"i": 1.0, "m": 0.0, "c": 0.0, "s": 0.0},
        "device_maps": [{"kraus": [projector]}],
        "shots": 4000,
        "seed": 5,
    }
    scene_path = tmp_path / "scene.json"
    scene_path.write_text(json.dumps(scene))
    out = tmp_path / "tomo.json"
    assert run(["tomography", "--config", str(scene_path), "--out", str(out),
                "--format", "json"]) == 0
    payload = json.loads(out.read_text())
    # mode-0 projector on unpolarized light: I = 0.5, S = 0.5
    assert payload["true_values"]["i"] == pytest.approx(0.5)
    assert payload["true_values"]["s"] == pytest.approx(0.5)
    assert payload["config"]["seed"] == 5
    assert abs(payload["estimate"]["s"] - 0.5) < 5 * payload["standard_errors"]["s"]

    # 5-sigma-ish agreement and byte determinism
    out2 = tmp_path / "tomo2.json"
    assert run(["tomography", "--config", str(scene_path), "--out", str(out2),
                "--format", "json"]) == 0
    assert out.read_bytes() == out2.read_bytes()

    # csv variant carries the same numbers
    outc = tmp_path / "tomo.csv"
    assert run(["tomography", "--config", str(scene_path), "--out", str(outc)]) == 0
    rows, _ = reports.load_report(str(outc))
    by_comp = {r["component"]: r for r in rows}
    assert by_comp["s"]["estimate"] == payload["estimate"]["s"]


def test_tomography_flag_overrides_scene(tmp_path):
    scene = {"stokes": {"i": 1.0}, "shots": 10, "seed": 1}
    scene_path = tmp_path / "scene.json"
    scene_path.write_text(json.dumps(scene))
    out = tmp_path / "t.json"
    assert run(["tomography", "--config", str(scene_path), "--seed", "99",
                "--out", str(out), "--format", "json"]) == 0
    assert json.loads(out.read_text())["config"]["seed"] == 99


def test_unknown_config_key_rejected(tmp_path, capsys):
    scene_path = tmp_path / "scene.json"
    scene_path.write_text(json.dumps({"stokes": {"i": 1.0}, "seed": 1,
                                      "typo_key": 3}))
    out = tmp_path / "t.json"
    assert run(["tomography", "--config", str(scene_path),
                "--out", str(out)]) == 1
    assert "typo_key" in capsys.readouterr().err


def test_malformed_config_is_line_anchored(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{\n  "seed": 1,\n  oops\n}\n')
    out = tmp_path / "t.csv"
    assert run(["bound-check", "--config", str(bad), "--out", str(out)]) == 1
    err = capsys.readouterr().err
    assert f"{bad}:3:" in err


def test_missing_required_parameter(tmp_path, capsys):
    out = tmp_path / "b.csv"
    assert run(["bound-check", "--samples", "5", "--cutoff", "1",
                "--out", str(out)]) == 1
    assert "seed" in capsys.readouterr().err


def test_jj_evolve_cli(tmp_path):
    out = tmp_path / "traj.csv"
    assert run(["jj-evolve", "--e-c", "0.2", "--lam", "0.1", "--n-total", "40",
                "--n-bar1", "20", "--phi0", "3.0915926", "--horizon", "4.0",
                "--dt", "0.01", "--out", str(out), "--seed", "0"]) == 0
    rows, header = reports.load_report(str(out))
    assert list(rows[0].keys()) == ["time", "n1", "phi", "norm_drift",
                                    "energy", "fidelity"]
    assert all(r["fidelity"] >= 1 - 1e-6 for r in rows)
    assert header["config"]["model"] == "mean_field"


def test_jj_evolve_exact_model(tmp_path):
    out = tmp_path / "traj.csv"
    assert run(["jj-evolve", "--e-c", "1.0", "--lam", "0.5", "--n-total", "12",
                "--model", "bose_hubbard", "--n0", "8", "--horizon", "3.0",
                "--dt", "0.05", "--out", str(out)]) == 0
    rows, _ = reports.load_report(str(out))
    assert all(abs(r["norm_drift"]) <= 1e-9 for r in rows)
    energies = [r["energy"] for r in rows]
    assert max(abs(e - energies[0]) for e in energies) <= 1e-8 * abs(energies[0])


def test_fluctuations_cli(tmp_path):
    out = tmp_path / "fluct.csv"
    assert run(["fluctuations", "--n-bar1-values", "25,100,400", "--p", "0.5",
                "--out", str(out)]) == 0
    rows, header = reports.load_report(str(out))
    assert [r["n_bar1"] for r in rows] == [25.0, 100.0, 400.0]
    exps = header["fitted_exponents"]
    assert exps["number"] == pytest.approx(1.0, abs=1e-6)
    assert exps["phase"] == pytest.approx(-0.5, abs=0.05)


def test_compare_cli_defaults(tmp_path):
    out = tmp_path / "cmp.csv"
    assert run(["compare", "--n-total", "4", "--e-c", "10", "--lam", "1",
                "--out", str(out)]) == 0
    rows, header = reports.load_report(str(out))
    assert header["max_divergence"]["n1"] > 0.1
    # regression value frozen from the dense-diagonalization reference run
    assert header["max_divergence"]["n1"] == pytest.approx(0.453920655702984,
                                                           abs=1e-6)
    assert rows[0]["div_n1"] <= 1e-12
    assert list(rows[0].keys())[0] == "time"
    # repeatable byte-for-byte
    out2 = tmp_path / "cmp2.csv"
    assert run(["compare", "--n-total", "4", "--e-c", "10", "--lam", "1",
                "--out", str(out2)]) == 0
    assert out.read_bytes() == out2.read_bytes()


def test_cli_rejects_bad_values(tmp_path, capsys):
    out = tmp_path / "x.csv"
    assert run(["fluctuations", "--n-bar1-values", "25,100,400", "--p", "1.5",
                "--out", str(out)]) == 1
    assert "p must be in" in capsys.readouterr().err
