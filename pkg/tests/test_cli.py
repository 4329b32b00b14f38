import csv
import json

import numpy as np
import pytest

from hermex import baselines, problems
from hermex.cli import main, manifest_hash, parse_sweep, UsageError
from hermex.simulator import density_matrix, random_state


def rows(path):
    lines = [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def exit_code(argv):
    with pytest.raises(SystemExit) as info:
        main(argv)
    return info.value.code


@pytest.fixture(autouse=True)
def no_env_seed(monkeypatch):
    monkeypatch.delenv("HERMEX_SEED", raising=False)


def test_train_strategy1_bell(tmp_path, capsys):
    assert main(["train", "--problem", "bell", "--strategy", "1", "--t", "0.05", "--seed", "0", "--out", str(tmp_path)]) == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["final_fidelity"] >= 0.99
    for name in ("trace.csv", "fidelity.svg", "final.circ", "manifest.json"):
        assert (tmp_path / name).is_file()
    assert rows(tmp_path / "trace.csv")[0].keys() == {"iter", "objective", "grad_norm"}
    assert "final_fidelity" in capsys.readouterr().out


def test_train_strategy2_writes_all_stages(tmp_path):
    argv = ["train", "--problem", "ghz", "--strategy", "2", "--t", "0.1", "--max-iters", "40", "--out", str(tmp_path)]
    assert main(argv) == 0
    stages = sorted(p.name for p in (tmp_path / "stages").glob("stage_*.circ"))
    assert stages == [f"stage_{k:02d}.circ" for k in range(1, 11)]
    assert (tmp_path / "stages" / "seed.circ").is_file()
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["stages"] == 10 and 0 <= summary["final_fidelity"] <= 1


def test_train_strategy2_resume(tmp_path):
    base = ["train", "--problem", "bell", "--strategy", "2", "--t", "0.1", "--max-iters", "30", "--out", str(tmp_path)]
    assert main(base) == 0
    first = json.loads((tmp_path / "summary.json").read_text())
    assert main(base + ["--resume", "stage_07"]) == 0
    again = json.loads((tmp_path / "summary.json").read_text())
    assert again["stages"] == 3
    assert again["final_fidelity"] == pytest.approx(first["final_fidelity"], abs=1e-12)
    assert exit_code(base + ["--resume", "stage_x"]) == 2


def test_unknown_problem_exits_2(tmp_path, capsys):
    assert exit_code(["train", "--problem", "water", "--out", str(tmp_path)]) == 2
    assert "water" in capsys.readouterr().err
    assert exit_code(["expr", "--templates", "circuit9", "--out", str(tmp_path)]) == 2


def test_trotter_sweep_monotone(tmp_path):
    for name in ("bell", "ghz", "crotonic"):
        out = tmp_path / name
        assert main(["baseline", "--method", "trotter", "--problem", name, "--t", "0.2", "--sweep", "n=1..64", "--out", str(out)]) == 0
        got = rows(out / "baseline.csv")
        assert [int(r["n"]) for r in got] == [1, 2, 4, 8, 16, 32, 64]
        inf = [float(r["final_infidelity"]) for r in got]
        assert all(b <= a + 1e-12 for a, b in zip(inf, inf[1:]))


def test_trotter_depth_scales_with_steps(tmp_path):
    main(["baseline", "--method", "trotter", "--problem", "ghz", "--sweep", "n=1..8", "--out", str(tmp_path)])
    got = rows(tmp_path / "baseline.csv")
    plan = baselines.TrotterPlan(problems.builtin("ghz").operator, 0.2, 1)
    assert [int(r["depth"]) for r in got] == [n * plan.layers_per_step() for n in (1, 2, 4, 8)]


def test_dme_single_step_matches_closed_step(tmp_path):
    main(["baseline", "--method", "dme", "--problem", "bell", "--t", "0.2", "--n", "1", "--seed", "3", "--out", str(tmp_path)])
    got = float(rows(tmp_path / "baseline.csv")[0]["final_infidelity"])
    rho = problems.builtin("bell").dense()
    sigma = density_matrix(random_state(2, np.random.default_rng(3)))
    want = baselines.trace_distance(baselines.dme_step(rho, sigma, 0.2), baselines.exact_dme_target(rho, sigma, 0.2))
    assert got == pytest.approx(want, abs=1e-12)


def test_dme_rejects_non_density(tmp_path):
    assert exit_code(["baseline", "--method", "dme", "--problem", "crotonic", "--out", str(tmp_path)]) == 2


def test_expr_low_confidence(tmp_path, capsys):
    argv = ["expr", "--templates", "circuit1,ours", "--layers", "1,2", "--samples", "100", "--out", str(tmp_path)]
    assert main(argv) == 0
    text = (tmp_path / "expr.csv").read_text()
    assert "# low-confidence" in text
    got = rows(tmp_path / "expr.csv")
    assert [(r["template"], r["layers"]) for r in got] == [("circuit1", "1"), ("circuit1", "2"), ("ours", "1")]
    assert (tmp_path / "expr.svg").is_file()
    assert "low-confidence" in capsys.readouterr().err


def test_outputs_deterministic(tmp_path):
    for d in ("a", "b"):
        main(["baseline", "--method", "dme", "--sweep", "n=1..8", "--seed", "5", "--out", str(tmp_path / d)])
        main(["expr", "--templates", "circuit2", "--layers", "1", "--samples", "200", "--seed", "5", "--out", str(tmp_path / d / "e")])
    for name in ("baseline.csv", "e/expr.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["manifest_sha256"] == manifest_hash("baseline", manifest["config"])


def test_seed_precedence(tmp_path, monkeypatch):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"seed": 7, "t": 0.1}))

    def seed_of(extra):
        out = tmp_path / str(len(list(tmp_path.iterdir())))
        main(["baseline", "--config", str(cfg), "--out", str(out)] + extra)
        return json.loads((out / "manifest.json").read_text())["config"]

    assert seed_of([])["seed"] == 7
    assert seed_of([])["t"] == 0.1
    monkeypatch.setenv("HERMEX_SEED", "11")
    assert seed_of([])["seed"] == 11
    assert seed_of(["--seed", "13"])["seed"] == 13
    monkeypatch.setenv("HERMEX_SEED", "x")
    assert exit_code(["baseline", "--out", str(tmp_path / "z")]) == 2


def test_bad_config(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"colour": "red"}))
    assert exit_code(["baseline", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert exit_code(["baseline", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path / "o")]) == 2


def test_parse_sweep():
    assert parse_sweep("n=1..64") == [1, 2, 4, 8, 16, 32, 64]
    assert parse_sweep("n=3..20") == [3, 6, 12]
    for bad in ("n=5..1", "n=0..4", "1-4"):
        with pytest.raises(UsageError):
            parse_sweep(bad)


def test_problems_list(capsys):
    assert main(["problems", "list"]) == 0
    out = capsys.readouterr().out
    assert all(name in out for name in ("bell", "ghz", "crotonic"))


@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason="circuit2 at one layer (KL ~0.69) is further from Haar than circuit1 (~0.31)")
def test_circuit1_has_largest_kl_at_one_layer(tmp_path):
    main(["expr", "--layers", "1", "--out", str(tmp_path)])
    got = {r["template"]: float(r["kl"]) for r in rows(tmp_path / "expr.csv")}
    assert max(got, key=got.get) == "circuit1"
