"""Command-line pipelines: ingest, train, evaluate, predict, irl, policy, simulate.

Every command that draws random numbers takes a mandatory ``--seed``. A JSON
file given with ``--config`` may supply any flag (use the long name with
underscores); explicit flags win. Environment variables are never read.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .artifacts import atomic_write_text, load_artifact, save_artifact
from .dls import bundled_table, load_dls_table
from .evaluation import (
    ConfigurationError,
    cross_validate,
    predicted_final_score,
    training_arrays,
)
from .irl import partition_expert, run_irl
from .match_data import ingest_cricsheet, read_corpus, write_corpus
from .policy import compute_q, estimate_transitions, nonoptimal_rate, optimal_policy
from .simulator import (
    BEHAVIORAL,
    OPTIMAL,
    SimulationConfig,
    Start,
    posterior_distribution,
    simulate_innings,
    simulate_matches,
    win_rate,
)
from .seeding import derive_rng
from .state_space import FirstInningsState, SecondInningsState, dumps_trajectory, score_band
from .value_model import NetworkConfig, forward, normalize_features, train

DEFAULTS = {
    "threads": 1,
    "innings": 1,
    "hidden": "32,16",
    "epochs": 20,
    "learning_rate": 0.05,
    "batch_size": 64,
    "ball": 0,
    "extra_flag": 0,
    "n_sims": 100,
    "mode": BEHAVIORAL,
    "over": 0,
    "wickets": 0,
    "score": 0,
}


class CliError(Exception):
    pass


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="inningsmdp", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def cmd(name, help_):
        s = sub.add_parser(name, help=help_, argument_default=None)
        s.add_argument("--config", help="JSON file supplying defaults for any flag")
        s.add_argument("--threads", type=int, help="worker cap")
        return s

    def net_flags(s):
        s.add_argument("--hidden", help="comma-separated hidden widths, e.g. 32,16")
        s.add_argument("--epochs", type=int)
        s.add_argument("--learning-rate", type=float)
        s.add_argument("--batch-size", type=int)

    s = cmd("ingest", "convert Cricsheet JSON files into a canonical corpus")
    s.add_argument("--input", help="directory of Cricsheet .json files")
    s.add_argument("--output", help="corpus directory to create")
    s.add_argument("--exclude-method-decided", action="store_true", default=None)

    s = cmd("train", "fit a resources-left value network")
    s.add_argument("--corpus")
    s.add_argument("--innings", type=int, choices=(1, 2))
    net_flags(s)
    s.add_argument("--seed", type=int)
    s.add_argument("--output")

    s = cmd("evaluate", "10-fold interrupted-innings comparison against DLS")
    s.add_argument("--corpus")
    s.add_argument("--innings", type=int, choices=(1, 2))
    s.add_argument("--dls-table", help="DLS CSV; the bundled approximation if omitted")
    net_flags(s)
    s.add_argument("--seed", type=int)
    s.add_argument("--output")

    s = cmd("predict", "resources left for one state and the projected total")
    s.add_argument("--model")
    s.add_argument("--innings", type=int, choices=(1, 2))
    s.add_argument("--over", type=int)
    s.add_argument("--ball", type=int)
    s.add_argument("--wickets", type=int)
    s.add_argument("--score", type=int)
    s.add_argument("--target", type=int, help="first-innings total (innings 2)")
    s.add_argument("--extra-flag", type=int, choices=(0, 1))

    s = cmd("irl", "recover reward coefficients from winning first innings")
    s.add_argument("--corpus")
    s.add_argument("--seed", type=int)
    s.add_argument("--output")

    s = cmd("policy", "estimate transitions and the optimal first-innings policy")
    s.add_argument("--corpus")
    s.add_argument("--coefficients")
    s.add_argument("--seed", type=int)
    s.add_argument("--output")

    s = cmd("simulate", "posterior final-score distribution from a game state")
    s.add_argument("--transitions", help="transition model for the simulated innings")
    s.add_argument("--policy")
    s.add_argument("--mode", choices=(BEHAVIORAL, OPTIMAL))
    s.add_argument("--n-sims", type=int)
    s.add_argument("--over", type=int)
    s.add_argument("--ball", type=int)
    s.add_argument("--wickets", type=int)
    s.add_argument("--score", type=int)
    s.add_argument("--target", type=int)
    s.add_argument("--dump-trajectories", action="store_true", default=None)
    s.add_argument("--matches", type=int, help="also simulate this many full matches for a win rate")
    s.add_argument("--transitions-2", help="second-innings model used with --matches")
    s.add_argument("--seed", type=int)
    s.add_argument("--output")
    return p


def _resolve(args: argparse.Namespace) -> dict:
    cfg = {}
    if args.config:
        cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
        if not isinstance(cfg, dict):
            raise CliError("config file must hold a JSON object")
    merged = dict(DEFAULTS)
    merged.update({k.replace("-", "_"): v for k, v in cfg.items()})
    merged.update({k: v for k, v in vars(args).items() if v is not None})
    return merged


def _need(cfg: dict, *keys):
    missing = [k for k in keys if cfg.get(k) is None]
    if missing:
        raise CliError("missing required option(s): " + ", ".join("--" + k.replace("_", "-") for k in missing))
    for k in keys:
        if k in ("corpus", "model", "coefficients", "transitions", "transitions_2", "policy", "input", "dls_table"):
            if not Path(cfg[k]).exists():
                raise CliError(f"--{k.replace('_', '-')}: {cfg[k]} does not exist")


def _network_config(cfg: dict) -> NetworkConfig:
    hidden = cfg["hidden"]
    if isinstance(hidden, str):
        hidden = [int(w) for w in hidden.split(",") if w.strip()]
    return NetworkConfig(
        input_width=5 if cfg["innings"] == 1 else 6,
        hidden_widths=tuple(hidden),
        epochs=int(cfg["epochs"]),
        learning_rate=float(cfg["learning_rate"]),
        batch_size=int(cfg["batch_size"]),
        seed=int(cfg["seed"]),
    )


def _provenance(cfg: dict, corpus=None) -> dict:
    echo = {k: v for k, v in cfg.items() if k not in ("config",)}
    out = {"config": echo, "seed": cfg.get("seed"), "package_version": __version__}
    if corpus is not None:
        out["corpus_sha256"] = corpus.manifest_hash()
        out["corpus_size"] = len(corpus)
    return out


def _out(cfg: dict) -> Path:
    return Path(cfg["output"])


# --------------------------------------------------------------------------
# commands


def cmd_ingest(cfg: dict) -> int:
    _need(cfg, "input", "output")
    files = sorted(Path(cfg["input"]).glob("*.json"))
    corpus, skipped = ingest_cricsheet(
        files, exclude_method_decided=bool(cfg.get("exclude_method_decided")), threads=int(cfg["threads"])
    )
    write_corpus(corpus, _out(cfg))
    for path, reason in skipped:
        print(f"skipped {path}: {reason}", file=sys.stderr)
    print(f"ingested {len(corpus)} matches, skipped {len(skipped)}")
    return 0


def cmd_train(cfg: dict) -> int:
    _need(cfg, "corpus", "seed", "output")
    corpus = read_corpus(cfg["corpus"])
    config = _network_config(cfg)
    x, t = training_arrays(corpus, config.input_width - 4)
    net, report = train(config, x, targets=t)
    prov = _provenance(cfg, corpus)
    save_artifact("model", net, _out(cfg) / "model.json", prov)
    save_artifact("report", report.to_dict(), _out(cfg) / "training_report.json", prov)
    print(f"trained on {report.n_samples} states; final MSE {report.final_mse:.6g}")
    return 0


def cmd_evaluate(cfg: dict) -> int:
    _need(cfg, "corpus", "seed", "output")
    corpus = read_corpus(cfg["corpus"])
    table = load_dls_table(Path(cfg["dls_table"]).read_bytes()) if cfg.get("dls_table") else bundled_table()
    report = cross_validate(corpus, _network_config(cfg), table, int(cfg["innings"]), int(cfg["seed"]))
    prov = _provenance(cfg, corpus)
    save_artifact("report", report.to_dict(), _out(cfg) / "evaluation.json", prov)
    atomic_write_text(_out(cfg) / "evaluation.csv", report.to_csv())
    for method in ("model", "dls"):
        print(
            f"{method}: mean error {report.mean_of_means(method):+.3f}% "
            f"(std across folds {report.std_of_means(method):.3f}%)"
        )
    return 0


def cmd_predict(cfg: dict) -> int:
    _need(cfg, "model", "over", "wickets", "score")
    net = load_artifact("model", cfg["model"])
    innings = int(cfg["innings"])
    band = score_band(int(cfg["score"]))
    if innings == 1:
        state = FirstInningsState(cfg["over"], cfg["wickets"], band, cfg["ball"], cfg["extra_flag"])
    else:
        _need(cfg, "target")
        state = SecondInningsState(cfg["over"], cfg["wickets"], band, score_band(cfg["target"]), cfg["ball"], cfg["extra_flag"])
    if net.input_width != len(state):
        raise CliError(f"model expects {net.input_width} features; innings {innings} states have {len(state)}")
    r = forward(net, normalize_features(state))
    projected = predicted_final_score(int(cfg["score"]), r)
    print(f"resources_left {r!r}")
    print(f"projected_final_score {projected}")
    return 0


def cmd_irl(cfg: dict) -> int:
    _need(cfg, "corpus", "seed", "output")
    corpus = read_corpus(cfg["corpus"])
    expert, non_expert, excluded = partition_expert(corpus)
    if not expert:
        raise CliError("no expert (winning first-innings) trajectories in the corpus")
    result = run_irl(expert, non_expert)
    prov = _provenance(cfg, corpus)
    prov["excluded_matches"] = len(excluded)
    save_artifact("coefficients", result, _out(cfg) / "coefficients.json", prov)
    c = result.coefficients
    print("x", " ".join(f"{v:+.4f}" for v in c.x))
    print("y", " ".join(f"{a}:{c.y[a]:+.4f}" for a in sorted(c.y)))
    print(f"objective {result.objective:.6g} after {result.iterations} conditions")
    return 0


def cmd_policy(cfg: dict) -> int:
    _need(cfg, "corpus", "coefficients", "seed", "output")
    corpus = read_corpus(cfg["corpus"])
    coeffs = load_artifact("coefficients", cfg["coefficients"]).coefficients
    model_1 = estimate_transitions(corpus, 1)
    model_2 = estimate_transitions(corpus, 2)
    policy = optimal_policy(compute_q(coeffs, model_1))
    model_1 = model_1.with_nonoptimal(nonoptimal_rate(corpus, policy))
    prov = _provenance(cfg, corpus)
    save_artifact("transitions", model_1, _out(cfg) / "transitions_1.json", prov)
    save_artifact("transitions", model_2, _out(cfg) / "transitions_2.json", prov)
    save_artifact("policy", policy, _out(cfg) / "policy.json", prov)
    counts = np.bincount(policy.actions[:50, :10].reshape(-1), minlength=7)
    print("policy action counts over live states:", {a: int(counts[a]) for a in (0, 1, 2, 3, 4, 6)})
    return 0


def cmd_simulate(cfg: dict) -> int:
    _need(cfg, "transitions", "seed", "output")
    mode = cfg["mode"]
    if mode == OPTIMAL and not cfg.get("policy"):
        raise CliError("--mode optimal requires --policy")
    model = load_artifact("transitions", cfg["transitions"])
    policy = load_artifact("policy", cfg["policy"]) if cfg.get("policy") else None
    target = cfg.get("target")
    if model.innings_no == 2 and target is None:
        raise CliError("a second-innings model needs --target")
    if model.innings_no == 1:
        target = None
    start = Start(int(cfg["over"]), int(cfg["ball"]), int(cfg["wickets"]), int(cfg["score"]), target)
    config = SimulationConfig(int(cfg["n_sims"]), int(cfg["seed"]), mode, start)
    dist = posterior_distribution(config, model, policy)
    prov = _provenance(cfg)
    out = _out(cfg)
    atomic_write_text(out / "distribution.csv", dist.to_csv())
    save_artifact("distribution", dist, out / "distribution.json", prov)
    if cfg.get("dump_trajectories"):
        use = policy if mode == OPTIMAL else None
        chunks = []
        for i in range(config.n_sims):
            sim = simulate_innings(model, use, start, derive_rng(config.seed, "dump", i))
            chunks.append(dumps_trajectory(sim.trajectory))
        atomic_write_text(out / "trajectories.jsonl", "".join(chunks))
    print(f"mean {dist.mean:.2f} std {dist.std:.2f} over {dist.n} simulations ({mode})")
    if cfg.get("matches"):
        _need(cfg, "transitions_2")
        model_2 = load_artifact("transitions", cfg["transitions_2"])
        use = policy if mode == OPTIMAL else None
        outcomes, _, _ = simulate_matches(model, model_2, use, int(cfg["seed"]), int(cfg["matches"]))
        rate = win_rate(outcomes)
        summary = {"matches": len(outcomes), "team_1_win_rate": rate, "ties": sum(o.winner == "tie" for o in outcomes)}
        save_artifact("report", summary, out / "win_rate.json", prov)
        print(f"team batting first wins {rate:.3f} of decided matches")
    return 0


COMMANDS = {
    "ingest": cmd_ingest,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "predict": cmd_predict,
    "irl": cmd_irl,
    "policy": cmd_policy,
    "simulate": cmd_simulate,
}


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _resolve(args)
        return COMMANDS[args.command](cfg)
    except (CliError, ConfigurationError, ValueError, OSError) as exc:
        print(f"inningsmdp {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
