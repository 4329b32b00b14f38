"""Command-line driver: ``hermex train | baseline | expr | problems list``.

Every CSV starts with a ``# manifest_sha256=...`` line. The hash covers the
command, the resolved configuration and the seed. It leaves out timestamps
and the output directory, so the same invocation written to two places
gives byte-identical CSVs.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from . import baselines, expressibility, problems, strategy1, strategy2
from .circuits import Circuit, build_two_body_ansatz
from .errors import HermexError
from .plot import write_svg
from .simulator import check_density_matrix, density_matrix, random_state

LOW_CONFIDENCE_SAMPLES = 1000


class UsageError(Exception):
    pass


def manifest_hash(command: str, config: dict) -> str:
    blob = json.dumps({"command": command, "config": config, "version": __version__}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()


class Run:
    """Output directory plus the manifest describing how it was produced."""

    def __init__(self, command: str, config: dict, out: Path):
        self.command = command
        self.config = config
        self.out = out
        self.digest = manifest_hash(command, config)
        self.started = datetime.now(timezone.utc).isoformat()
        out.mkdir(parents=True, exist_ok=True)

    def write_csv(self, name: str, header, rows, comments=()) -> Path:
        path = self.out / name
        with path.open("w", newline="") as fh:
            fh.write(f"# manifest_sha256={self.digest}\n")
            for c in comments:
                fh.write(f"# {c}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
        return path

    def finish(self, extra: dict | None = None) -> None:
        manifest = {
            "command": self.command,
            "config": self.config,
            "seed": self.config.get("seed"),
            "output_dir": str(self.out),
            "manifest_sha256": self.digest,
            "version": __version__,
            "started": self.started,
            "finished": datetime.now(timezone.utc).isoformat(),
        }
        if extra:
            manifest.update(extra)
        (self.out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def resolve_config(defaults: dict, args: argparse.Namespace) -> dict:
    """defaults < ``--config`` JSON < HERMEX_SEED (seed only) < explicit flags."""
    cfg = dict(defaults)
    if getattr(args, "config", None):
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        unknown = set(loaded) - set(defaults)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
    env_seed = os.environ.get("HERMEX_SEED")
    if env_seed is not None:
        try:
            cfg["seed"] = int(env_seed)
        except ValueError:
            raise UsageError(f"HERMEX_SEED must be an integer, got {env_seed!r}") from None
    for key in defaults:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return cfg


def _fmt(x: float) -> str:
    return repr(float(x))


def _problem(name: str) -> problems.ProblemInstance:
    try:
        return problems.resolve(name)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None


# --- train ------------------------------------------------------------------

TRAIN_DEFAULTS = {
    "problem": "bell",
    "strategy": 1,
    "t": 0.05,
    "seed": 0,
    "eta": 0.02,
    "eps_o": None,
    "delta": 1e-6,
    "max_iters": None,
    "max_restarts": 5,
    "layers": 1,
    "n_c": 2,
    "dt_ratio": 2.0**-10,
    "fd_step": 0.01,
}


def cmd_train(args) -> int:
    cfg = resolve_config(TRAIN_DEFAULTS, args)
    inst = _problem(cfg["problem"])
    if cfg["strategy"] not in (1, 2):
        raise UsageError("strategy must be 1 or 2")
    out = Path(args.out)
    started = time.perf_counter()
    if cfg["strategy"] == 1:
        cfg["eps_o"] = 1e-3 if cfg["eps_o"] is None else cfg["eps_o"]
        cfg["max_iters"] = 300 if cfg["max_iters"] is None else cfg["max_iters"]
        run = Run("train", cfg, out)
        summary = _train_s1(run, inst, cfg)
    else:
        cfg["eps_o"] = 1e-6 if cfg["eps_o"] is None else cfg["eps_o"]
        cfg["max_iters"] = 350 if cfg["max_iters"] is None else cfg["max_iters"]
        run = Run("train", cfg, out)
        summary = _train_s2(run, inst, cfg, args.resume)
    summary["wall_time"] = time.perf_counter() - started
    summary["manifest_sha256"] = run.digest
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    run.finish()
    print(json.dumps(summary, sort_keys=True))
    return 0


def _train_s1(run: Run, inst, cfg) -> dict:
    config = strategy1.Strategy1Config(
        t=cfg["t"], eps_o=cfg["eps_o"], delta1=cfg["delta"], eta=cfg["eta"],
        max_iters=cfg["max_iters"], seed=cfg["seed"], max_restarts=cfg["max_restarts"],
    )
    ansatz = build_two_body_ansatz(inst.ansatz_terms(), cfg["t"], cfg["layers"])
    trace = strategy1.run(config, ansatz, inst.operator)
    rows = [(it, _fmt(f), _fmt(g)) for it, f, g in trace.iterations]
    run.write_csv("trace.csv", ("iter", "objective", "grad_norm"), rows)
    (run.out / "final.circ").write_text(ansatz.to_text(trace.final_params))
    write_svg(
        run.out / "fidelity.svg",
        {f"{inst.name} t={cfg['t']}": ([r[0] for r in trace.iterations], [r[1] for r in trace.iterations])},
        title="strategy 1", xlabel="iteration", ylabel="objective",
    )
    return {
        "strategy": 1,
        "problem": inst.name,
        "t": cfg["t"],
        "final_fidelity": float(trace.final_objective),
        "iterations": len(trace.iterations),
        "restarts": trace.restarts_used,
        "converged": bool(trace.converged),
    }


def _stage_name(k: int) -> str:
    return "seed.circ" if k == 0 else f"stage_{k:02d}.circ"


def _train_s2(run: Run, inst, cfg, resume: str | None) -> dict:
    config = strategy2.Strategy2Config(
        eps_o=cfg["eps_o"], delta2=cfg["delta"], eta=cfg["eta"], max_iters_per_stage=cfg["max_iters"],
        n_c=cfg["n_c"], dt_ratio=cfg["dt_ratio"], fd_step=cfg["fd_step"], seed=cfg["seed"],
        max_restarts=cfg["max_restarts"], layers=cfg["layers"],
    )
    t = cfg["t"]
    h = inst.operator
    ansatz = build_two_body_ansatz(inst.ansatz_terms(), 1.0, cfg["layers"])
    stage_dir = run.out / "stages"
    stage_dir.mkdir(exist_ok=True)
    start_stage, start_params = 0, None
    if resume:
        try:
            start_stage = int(resume.removeprefix("stage_"))
        except ValueError:
            raise UsageError(f"--resume expects stage_k, got {resume!r}") from None
        path = stage_dir / _stage_name(start_stage)
        if not path.is_file():
            raise UsageError(f"no stage file {path}")
        _, start_params = Circuit.from_text(path.read_text())
    else:
        seed_params = strategy2.seed_small_dt(h, t * config.dt_ratio, ansatz)
        circ = strategy2.stage_circuit(ansatz, config, t, 0)
        (stage_dir / "seed.circ").write_text(circ.to_text(seed_params))

    def save(rec: strategy2.StageRecord) -> None:
        (stage_dir / _stage_name(rec.stage)).write_text(rec.circuit.to_text(rec.params))
        rows = [(it, _fmt(f), _fmt(g)) for it, f, g in rec.trace.iterations]
        run.write_csv(f"stages/stage_{rec.stage:02d}.csv", ("iter", "objective", "grad_norm"), rows)

    records = strategy2.run(config, h, t, ansatz, start_stage, start_params, on_stage=save)
    rows, xs, ys = [], [], []
    step = 0
    for rec in records:
        for it, f, g in rec.trace.iterations:
            rows.append((rec.stage, it, _fmt(f), _fmt(g)))
            xs.append(step)
            ys.append(f)
            step += 1
    run.write_csv("trace.csv", ("stage", "iter", "objective", "grad_norm"), rows)
    final_k = config.n_stages
    final_params = records[-1].params if records else start_params
    fid = strategy2.process_fidelity(h, t, strategy2.stage_circuit(ansatz, config, t, final_k), final_params)
    write_svg(run.out / "fidelity.svg", {f"{inst.name} t={t}": (xs, ys)},
              title="strategy 2 (all stages)", xlabel="iteration", ylabel="compression objective")
    return {
        "strategy": 2,
        "problem": inst.name,
        "t": t,
        "final_fidelity": fid,
        "iterations": step,
        "stages": len(records),
        "stage_objectives": [float(r.objective) for r in records],
        "converged": all(r.trace.converged for r in records),
    }


# --- baseline ---------------------------------------------------------------

BASELINE_DEFAULTS = {"problem": "bell", "method": "trotter", "t": 0.2, "n": 16, "seed": 0}


def parse_sweep(text: str) -> list[int]:
    """``n=a..b``: doubling ladder a, 2a, 4a, ... up to b."""
    body = text.removeprefix("n=")
    try:
        lo, hi = (int(v) for v in body.split(".."))
    except ValueError:
        raise UsageError(f"--sweep expects n=a..b, got {text!r}") from None
    if lo < 1 or hi < lo:
        raise UsageError("--sweep needs 1 <= a <= b")
    out = []
    while lo <= hi:
        out.append(lo)
        lo *= 2
    return out


def cmd_baseline(args) -> int:
    cfg = resolve_config(BASELINE_DEFAULTS, args)
    inst = _problem(cfg["problem"])
    ns = parse_sweep(args.sweep) if args.sweep else [cfg["n"]]
    cfg["ns"] = ns
    run = Run("baseline", cfg, Path(args.out))
    rows = []
    if cfg["method"] == "trotter":
        for n in ns:
            s = baselines.summarize_trotter(inst.operator, cfg["t"], n)
            rows.append((s.method, _fmt(s.t), s.n, _fmt(s.final_infidelity), s.depth, s.gate_count))
        note = "final_infidelity = 1 - |Tr(V^dag U)/d|^2"
    elif cfg["method"] == "dme":
        rho = inst.dense()
        try:
            check_density_matrix(rho, tol=1e-9)
        except (ValueError, HermexError):
            raise UsageError(f"{inst.name} is not a density matrix; dme needs one") from None
        rng = np.random.default_rng(cfg["seed"])
        sigma = density_matrix(random_state(inst.n_qubits, rng))
        for n in ns:
            s = baselines.summarize_dme(rho, sigma, cfg["t"], n)
            rows.append((s.method, _fmt(s.t), s.n, _fmt(s.final_infidelity), s.depth, s.gate_count))
        note = "final_infidelity = trace distance to exp(-i rho t) sigma exp(i rho t); sigma random pure (seeded)"
    else:
        raise UsageError("method must be trotter or dme")
    path = run.write_csv("baseline.csv", baselines.BaselineSummary.FIELDS, rows, comments=(note,))
    run.finish()
    sys.stdout.write(path.read_text())
    return 0


# --- expr -------------------------------------------------------------------

EXPR_DEFAULTS = {
    "templates": list(expressibility.TEMPLATES),
    "layers": [1, 2, 3, 4, 5],
    "samples": 5000,
    "bins": 75,
    "qubits": 4,
    "seed": 0,
}


def cmd_expr(args) -> int:
    cfg = resolve_config(EXPR_DEFAULTS, args)
    for name in cfg["templates"]:
        if name not in expressibility.TEMPLATES:
            raise UsageError(f"unknown template {name!r}")
    jobs = []
    for name in cfg["templates"]:
        # our ansatz is a fixed structure; it is not repeated
        layer_list = [1] if name == "ours" else cfg["layers"]
        for L in layer_list:
            jobs.append(expressibility.ExprConfig(name, cfg["samples"], cfg["bins"], cfg["qubits"], L, cfg["seed"]))
    run = Run("expr", cfg, Path(args.out))
    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        results = list(pool.map(expressibility.expressibility, jobs))
    rows = [(c.template, c.layers, _fmt(r.kl), c.n_samples, c.n_bins, c.seed) for c, r in zip(jobs, results)]
    comments = []
    if cfg["samples"] < LOW_CONFIDENCE_SAMPLES:
        comments.append(f"low-confidence: n_samples={cfg['samples']} < {LOW_CONFIDENCE_SAMPLES}")
        print(f"warning: low-confidence estimate ({cfg['samples']} samples)", file=sys.stderr)
    path = run.write_csv("expr.csv", ("template", "layers", "kl", "n_samples", "n_bins", "seed"), rows, comments)
    series: dict = {}
    for c, r in zip(jobs, results):
        xs, ys = series.setdefault(c.template, ([], []))
        xs.append(c.layers)
        ys.append(r.kl)
    write_svg(run.out / "expr.svg", series, title="expressibility", xlabel="layers", ylabel="KL vs Haar", lines=False)
    run.finish()
    sys.stdout.write(path.read_text())
    return 0


# --- problems ---------------------------------------------------------------

def cmd_problems(args) -> int:
    for name in problems.BUILTINS:
        inst = problems.builtin(name)
        times = ",".join(f"{t:g}" for t in inst.times)
        print(f"{name}\tqubits={inst.n_qubits}\tterms={len(inst.operator)}\ttimes={times}\t{inst.description}")
    return 0


def _csv_list(kind):
    def parse(text):
        try:
            return [kind(v) for v in text.split(",") if v]
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad list {text!r}") from None

    return parse


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hermex", description="Variational compilation of exp(-i rho t).")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON file with option defaults")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", default="hermex-out", help="output directory")
        sp.add_argument("--jobs", type=int, default=1, help="worker cap")

    tr = sub.add_parser("train", help="train a circuit with strategy 1 or 2")
    common(tr)
    tr.add_argument("--problem")
    tr.add_argument("--strategy", type=int, choices=(1, 2))
    tr.add_argument("--t", type=float)
    tr.add_argument("--eta", type=float)
    tr.add_argument("--eps-o", dest="eps_o", type=float)
    tr.add_argument("--delta", type=float, help="stagnation tolerance over a 20-iteration window")
    tr.add_argument("--max-iters", dest="max_iters", type=int)
    tr.add_argument("--max-restarts", dest="max_restarts", type=int)
    tr.add_argument("--layers", type=int)
    tr.add_argument("--n-c", dest="n_c", type=int)
    tr.add_argument("--dt-ratio", dest="dt_ratio", type=float)
    tr.add_argument("--fd-step", dest="fd_step", type=float)
    tr.add_argument("--resume", help="strategy 2: continue after stage_k")
    tr.set_defaults(func=cmd_train)

    bl = sub.add_parser("baseline", help="Trotter or DME reference runs")
    common(bl)
    bl.add_argument("--problem")
    bl.add_argument("--method", choices=("trotter", "dme"))
    bl.add_argument("--t", type=float)
    bl.add_argument("--n", type=int)
    bl.add_argument("--sweep", help="n=a..b doubling ladder")
    bl.set_defaults(func=cmd_baseline)

    ex = sub.add_parser("expr", help="expressibility table")
    common(ex)
    ex.add_argument("--templates", type=_csv_list(str))
    ex.add_argument("--layers", type=_csv_list(int))
    ex.add_argument("--samples", type=int)
    ex.add_argument("--bins", type=int)
    ex.add_argument("--qubits", type=int)
    ex.set_defaults(func=cmd_expr)

    pr = sub.add_parser("problems", help="built-in problem instances")
    pr.add_argument("action", choices=("list",))
    pr.set_defaults(func=cmd_problems)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (HermexError, ValueError) as exc:
        parser.error(f"configuration error: {exc}")
    return 2


if __name__ == "__main__":
    sys.exit(main())
