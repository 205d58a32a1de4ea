"""Policy evaluation: seeded episode rollouts, parallel batch evaluation,
and variance analysis.

Every episode draws its randomness from a seed sequence keyed by (master
seed, stream, episode index), so a batch's statistics are bit-identical for
any worker count and any subset of other episodes.
"""

from __future__ import annotations

import csv
import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, asdict

import numpy as np

from .envs import Action, EnvConfig, ImpEnv


class DoNothingPolicy:
    def act(self, observations, state, t, detections, rng=None):
        return [int(Action.DO_NOTHING)] * len(observations)


class RandomPolicy:
    """Uniform over the three actions, drawn from the episode's policy stream."""

    def act(self, observations, state, t, detections, rng=None):
        return [int(a) for a in rng.integers(0, 3, size=len(observations))]


class ScriptedPolicy:
    """Replays a fixed per-step list of action vectors."""

    def __init__(self, script):
        self.script = [list(row) for row in script]

    def act(self, observations, state, t, detections, rng=None):
        return list(self.script[t])


@dataclass
class EpisodeStats:
    discounted_return: float
    risk: float
    inspection: float
    repair: float
    campaign: float
    episode: int = -1


@dataclass
class EvalReport:
    n_episodes: int
    mean: float
    std: float
    stderr: float
    p25: float
    p50: float
    p75: float
    min: float
    max: float
    master_seed: int
    stream: int
    config_hash: str


def build_env(config: EnvConfig, models) -> ImpEnv:
    return ImpEnv(config, models)


def config_hash(config: EnvConfig) -> str:
    blob = json.dumps(config.to_dict(), sort_keys=True).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]


def episode_seed(master_seed: int, episode: int, stream: int = 0) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=master_seed, spawn_key=(stream, episode))


def run_episode(env: ImpEnv, policy, seed) -> EpisodeStats:
    """Play exactly one episode and accumulate the discounted decomposition."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    env_ss, policy_ss = ss.spawn(2)
    policy_rng = np.random.default_rng(policy_ss)

    result = env.reset(env_ss)
    gamma = env.config.discount
    g = 1.0
    ret = risk = ins = rep = camp = 0.0
    for t in range(env.config.horizon):
        actions = policy.act(result.observations, result.state, t,
                             result.info["detections"], policy_rng)
        result = env.step(actions)
        ret += g * result.reward
        risk += g * result.info["risk"]
        ins += g * result.info["inspection"]
        rep += g * result.info["repair"]
        camp += g * result.info["campaign"]
        g *= gamma
    return EpisodeStats(discounted_return=ret, risk=risk, inspection=ins,
                        repair=rep, campaign=camp)


def _gather(config, models, policy, n_episodes, master_seed, workers, stream):
    def run_range(indices):
        env = build_env(config, models)
        out = []
        for i in indices:
            stats = run_episode(env, policy, episode_seed(master_seed, i, stream))
            stats.episode = i
            out.append(stats)
        return out

    if workers > 1:
        slices = [range(w, n_episodes, workers) for w in range(workers)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run_range, slices))
        stats = [None] * n_episodes
        for part in parts:
            for s in part:
                stats[s.episode] = s
        return stats
    return run_range(range(n_episodes))


def report_from_stats(stats, config: EnvConfig, master_seed: int, stream: int) -> EvalReport:
    returns = np.array([s.discounted_return for s in stats])
    n = returns.size
    std = float(returns.std(ddof=1)) if n > 1 else 0.0
    return EvalReport(
        n_episodes=n,
        mean=float(returns.mean()),
        std=std,
        stderr=std / np.sqrt(n) if n > 1 else 0.0,
        p25=float(np.percentile(returns, 25)),
        p50=float(np.percentile(returns, 50)),
        p75=float(np.percentile(returns, 75)),
        min=float(returns.min()),
        max=float(returns.max()),
        master_seed=int(master_seed),
        stream=int(stream),
        config_hash=config_hash(config),
    )


def evaluate(config: EnvConfig, models, policy, n_episodes: int,
             master_seed: int, workers: int = 1, stream: int = 0) -> EvalReport:
    """Evaluate a policy over n_episodes independent seeded episodes.

    Results are independent of `workers`: each episode's seed depends only on
    (master_seed, stream, episode index) and aggregation runs in index order.
    """
    if n_episodes < 1:
        raise ValueError("n_episodes must be at least 1")
    stats = _gather(config, models, policy, n_episodes, master_seed, workers, stream)
    return report_from_stats(stats, config, master_seed, stream)


def evaluate_episodes(config: EnvConfig, models, policy, n_episodes: int,
                      master_seed: int, workers: int = 1, stream: int = 0):
    """Like evaluate, but returns the per-episode stats list."""
    if n_episodes < 1:
        raise ValueError("n_episodes must be at least 1")
    return _gather(config, models, policy, n_episodes, master_seed, workers, stream)


# variance_study derives one fresh stream per (episode count, repeat) so the
# repeat estimates are independent; offset keeps them clear of the search and
# evaluation streams.
_VARIANCE_STREAM_BASE = 1000


@dataclass
class VarianceStudy:
    rows: list
    spreads: dict


def variance_study(config: EnvConfig, models, policy,
                   episode_counts=(100, 1000, 10000), repeats: int = 10,
                   master_seed: int = 0, workers: int = 1) -> VarianceStudy:
    """Spread of the mean-return estimate across repeated evaluations.

    rows hold one record per (episode count, repeat); spreads map each
    episode count to the sample standard deviation of its repeat means.
    """
    rows = []
    spreads = {}
    for ci, count in enumerate(episode_counts):
        means = []
        for r in range(repeats):
            stream = _VARIANCE_STREAM_BASE + ci * repeats + r
            rep = evaluate(config, models, policy, count, master_seed,
                           workers=workers, stream=stream)
            rows.append({"n_episodes": count, "repeat": r, "mean": rep.mean})
            means.append(rep.mean)
        arr = np.array(means)
        spreads[count] = float(arr.std(ddof=1)) if repeats > 1 else 0.0
    return VarianceStudy(rows=rows, spreads=spreads)


def save_episode_csv(stats, path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["episode", "discounted_return", "risk", "inspection",
                         "repair", "campaign"])
        for s in stats:
            writer.writerow([s.episode, s.discounted_return, s.risk,
                             s.inspection, s.repair, s.campaign])


def save_report_json(report: EvalReport, config: EnvConfig, path) -> None:
    payload = {"report": asdict(report), "config": config.to_dict()}
    with open(path, "w") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
