"""Command-line entry point.

Subcommands cover the full workflow: generate deterioration models, search
the heuristic grid, roll out single episodes, evaluate policies, and study
estimator variance. Every run writes a JSON manifest sufficient to replay
it. Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .envs import EnvConfig
from .harness import (DoNothingPolicy, RandomPolicy, evaluate_episodes,
                      report_from_stats, save_episode_csv,
                      save_report_json, variance_study, build_env)
from .heuristics import HeuristicParams, HeuristicPolicy, heuristic_search
from .models import generate_family, load_model, save_model

_MODEL_FILES = {
    "struct_uc": {"struct": "struct.impm"},
    "struct_c": {"struct": "struct.impm"},
    "owf": {"owf_upper": "owf_upper.impm", "owf_middle": "owf_middle.impm",
            "owf_mudline": "owf_mudline.impm"},
}


class _Parser(argparse.ArgumentParser):
    """argparse variant whose usage failures exit with code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


class CliError(Exception):
    """Runtime failure; reported on stderr with exit code 2."""


def _write_manifest(path: Path, subcommand: str, resolved: dict, artifacts: list) -> None:
    manifest = {
        "subcommand": subcommand,
        "resolved": resolved,
        "artifacts": [str(a) for a in artifacts],
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    with open(path, "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")


def _load_config(path) -> EnvConfig:
    try:
        with open(path) as f:
            data = json.load(f)
        return EnvConfig.from_dict(data)
    except (OSError, ValueError, TypeError) as e:
        raise CliError(f"cannot load config {path}: {e}") from e


def _model_dir(args) -> Path:
    if args.model_dir:
        return Path(args.model_dir)
    return Path(os.environ.get("IMP_MODEL_DIR", "."))


def _load_models(config: EnvConfig, args) -> dict:
    base = _model_dir(args)
    out = {}
    for name, filename in _MODEL_FILES[config.family].items():
        path = base / filename
        if not path.exists():
            raise CliError(f"missing model file {path}; generate it with gen-model "
                           f"or point --model-dir / IMP_MODEL_DIR at it")
        out[name] = load_model(path)
    return out


def _build_policy(args, config: EnvConfig, models):
    if args.policy == "donothing":
        return DoNothingPolicy()
    if args.policy == "random":
        return RandomPolicy()
    if args.policy == "heuristic":
        if args.interval is None or args.n_inspect is None:
            raise CliError("--policy heuristic requires --interval and --n-inspect")
        env = build_env(config, models)
        return HeuristicPolicy(HeuristicParams(args.interval, args.n_inspect), env.n_bins)
    raise CliError(f"unknown policy {args.policy!r}")


def _add_policy_args(p):
    p.add_argument("--policy", required=True, choices=["heuristic", "donothing", "random"])
    p.add_argument("--interval", type=int, default=None)
    p.add_argument("--n-inspect", type=int, default=None)


def _cmd_gen_model(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    models = generate_family(args.family, args.samples, args.seed, workers=args.workers)
    artifacts = []
    for name, model in models.items():
        path = out_dir / f"{name}.impm"
        save_model(model, path)
        artifacts.append(path)
        print(f"wrote {path}")
    _write_manifest(out_dir / "models.manifest.json", "gen-model",
                    {"family": args.family, "samples": args.samples,
                     "seed": args.seed, "workers": args.workers}, artifacts)
    return 0


def _cmd_heuristic_search(args) -> int:
    config = _load_config(args.config)
    models = _load_models(config, args)
    grid_i = [int(x) for x in args.interval_grid.split(",")] if args.interval_grid else None
    grid_n = [int(x) for x in args.n_inspect_grid.split(",")] if args.n_inspect_grid else None
    result = heuristic_search(config, models, interval_grid=grid_i,
                              n_inspect_grid=grid_n,
                              episodes_per_combo=args.episodes,
                              eval_episodes=args.eval_episodes,
                              seed=args.seed, workers=args.workers)
    out_csv = Path(args.out)
    with open(out_csv, "w") as f:
        f.write("interval,n_inspect,mean,std,n_episodes\n")
        for cell in result.table:
            f.write(f"{cell.interval},{cell.n_inspect},{cell.mean},"
                    f"{cell.std},{cell.n_episodes}\n")
    summary = {
        "best_interval": result.best.inspection_interval,
        "best_n_inspect": result.best.n_inspect,
        "best_value": result.best_value,
        "screen_value": result.screen_value,
        "eval_episodes": result.eval_episodes,
    }
    out_json = out_csv.with_suffix(".summary.json")
    with open(out_json, "w") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")
    _write_manifest(out_csv.with_suffix(".manifest.json"), "heuristic-search",
                    {"config": config.to_dict(), "episodes": args.episodes,
                     "eval_episodes": args.eval_episodes, "seed": args.seed,
                     "interval_grid": grid_i, "n_inspect_grid": grid_n},
                    [out_csv, out_json])
    print(f"best interval={result.best.inspection_interval} "
          f"n_inspect={result.best.n_inspect} value={result.best_value:.4f} "
          f"(screen {result.screen_value:.4f})")
    return 0


def _cmd_rollout(args) -> int:
    config = _load_config(args.config)
    models = _load_models(config, args)
    policy = _build_policy(args, config, models)
    env = build_env(config, models)

    import numpy as np
    ss = np.random.SeedSequence(args.seed)
    env_ss, policy_ss = ss.spawn(2)
    policy_rng = np.random.default_rng(policy_ss)
    result = env.reset(env_ss)

    out_path = Path(args.out)
    records = []
    total = 0.0
    g = 1.0
    for t in range(config.horizon):
        actions = policy.act(result.observations, result.state, t,
                             result.info["detections"], policy_rng)
        result = env.step(actions)
        total += g * result.reward
        g *= config.discount
        records.append({
            "t": t, "actions": [int(a) for a in actions],
            "reward": result.reward,
            "risk": result.info["risk"], "inspection": result.info["inspection"],
            "repair": result.info["repair"], "campaign": result.info["campaign"],
            "p_sys": result.info["p_sys"], "detections": result.info["detections"],
        })
    with open(out_path, "w") as f:
        for rec in records:
            f.write(json.dumps(rec) + "\n")
    _write_manifest(out_path.with_suffix(".manifest.json"), "rollout",
                    {"config": config.to_dict(), "policy": args.policy,
                     "interval": args.interval, "n_inspect": args.n_inspect,
                     "seed": args.seed}, [out_path])
    print(f"discounted return {total:.6f} -> {out_path}")
    return 0


def _cmd_eval(args) -> int:
    config = _load_config(args.config)
    models = _load_models(config, args)
    policy = _build_policy(args, config, models)
    stats = evaluate_episodes(config, models, policy, args.episodes, args.seed,
                              workers=args.workers)
    report = report_from_stats(stats, config, args.seed, stream=0)
    prefix = Path(args.out)
    csv_path = prefix.with_suffix(".csv")
    json_path = prefix.with_suffix(".json")
    save_episode_csv(stats, csv_path)
    save_report_json(report, config, json_path)
    _write_manifest(prefix.with_suffix(".manifest.json"), "eval",
                    {"config": config.to_dict(), "policy": args.policy,
                     "interval": args.interval, "n_inspect": args.n_inspect,
                     "episodes": args.episodes, "seed": args.seed}, [csv_path, json_path])
    print(f"mean {report.mean:.4f} +/- {report.stderr:.4f} over {report.n_episodes} episodes")
    return 0


def _cmd_variance_study(args) -> int:
    config = _load_config(args.config)
    models = _load_models(config, args)
    policy = _build_policy(args, config, models)
    counts = [int(x) for x in args.counts.split(",")]
    study = variance_study(config, models, policy, episode_counts=counts,
                           repeats=args.repeats, master_seed=args.seed,
                           workers=args.workers)
    out_csv = Path(args.out)
    with open(out_csv, "w") as f:
        f.write("n_episodes,repeat,mean\n")
        for row in study.rows:
            f.write(f"{row['n_episodes']},{row['repeat']},{row['mean']}\n")
    out_json = out_csv.with_suffix(".summary.json")
    with open(out_json, "w") as f:
        json.dump({"spreads": {str(k): v for k, v in study.spreads.items()}},
                  f, indent=2, sort_keys=True)
        f.write("\n")
    _write_manifest(out_csv.with_suffix(".manifest.json"), "variance-study",
                    {"config": config.to_dict(), "policy": args.policy,
                     "interval": args.interval, "n_inspect": args.n_inspect,
                     "counts": counts, "repeats": args.repeats,
                     "seed": args.seed}, [out_csv, out_json])
    for count, spread in study.spreads.items():
        print(f"episodes {count}: spread {spread:.4f}")
    return 0


def _cmd_export_config(args) -> int:
    kwargs = {"family": args.family, "n_comp": args.n_comp}
    if args.family != "owf":
        kwargs["k_comp"] = args.k_comp if args.k_comp is not None else args.n_comp - 1
    if args.campaign:
        kwargs["campaign_cost"] = True
    config = EnvConfig(**kwargs)
    out = Path(args.out)
    with open(out, "w") as f:
        json.dump(config.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")
    print(f"wrote {out}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="impsim", description=__doc__)
    parser.add_argument("--version", action="version", version=f"impsim {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("gen-model", parents=[], help="generate deterioration models")
    p.add_argument("--family", required=True, choices=["struct", "owf"])
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=_cmd_gen_model)

    p = sub.add_parser("heuristic-search", help="grid-search the heuristic baseline")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="grid table CSV path")
    p.add_argument("--model-dir", default=None)
    p.add_argument("--episodes", type=int, default=500)
    p.add_argument("--eval-episodes", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--interval-grid", default=None, help="comma-separated intervals")
    p.add_argument("--n-inspect-grid", default=None, help="comma-separated counts")
    p.set_defaults(func=_cmd_heuristic_search)

    p = sub.add_parser("rollout", help="trace one episode as JSON lines")
    p.add_argument("--config", required=True)
    p.add_argument("--model-dir", default=None)
    _add_policy_args(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", default="rollout.jsonl")
    p.set_defaults(func=_cmd_rollout)

    p = sub.add_parser("eval", help="evaluate a policy over seeded episodes")
    p.add_argument("--config", required=True)
    p.add_argument("--model-dir", default=None)
    _add_policy_args(p)
    p.add_argument("--episodes", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="eval_report")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("variance-study", help="estimator spread vs episode count")
    p.add_argument("--config", required=True)
    p.add_argument("--model-dir", default=None)
    _add_policy_args(p)
    p.add_argument("--counts", default="100,1000,10000")
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="variance.csv")
    p.set_defaults(func=_cmd_variance_study)

    p = sub.add_parser("export-config", help="write a default environment config")
    p.add_argument("--family", required=True, choices=["struct_uc", "struct_c", "owf"])
    p.add_argument("--n-comp", type=int, default=3)
    p.add_argument("--k-comp", type=int, default=None)
    p.add_argument("--campaign", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_export_config)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as e:
        print(f"impsim: error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # noqa: BLE001 - CLI boundary
        print(f"impsim: error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
