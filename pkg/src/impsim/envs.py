"""Belief-state multi-agent environments.

Three families: independent k-out-of-n systems (struct_uc), the same system
with initial damage coupled through a shared latent factor (struct_c), and
offshore wind farms (owf) where each turbine carries an upper, middle and
mudline component and only the first two accept actions.

The environment state is the collection of component beliefs; inspection
outcomes are sampled from each belief's predictive distribution, so an
episode is a trajectory of the belief-space Markov chain.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .models import TransitionModel
from .reliability import _count_recursion

FAMILIES = ("struct_uc", "struct_c", "owf")


class Action(enum.IntEnum):
    DO_NOTHING = 0
    INSPECT = 1
    REPAIR = 2


@dataclass(frozen=True)
class ComponentRewards:
    """Action costs for one component class."""

    inspect: float
    repair: float


@dataclass(frozen=True)
class RewardTable:
    """Costs per component class plus the system failure consequence c_f
    and the per-step campaign charge."""

    classes: dict
    c_f: float
    campaign: float


def default_rewards(family: str, campaign_cost: bool) -> RewardTable:
    if family in ("struct_uc", "struct_c"):
        ins = -0.2 if campaign_cost else -1.0
        return RewardTable(classes={"component": ComponentRewards(ins, -20.0)},
                           c_f=-10000.0, campaign=-5.0 if campaign_cost else 0.0)
    if family == "owf":
        upper = ComponentRewards(-0.2 if campaign_cost else -1.0, -10.0)
        middle = ComponentRewards(-1.0 if campaign_cost else -4.0, -30.0)
        return RewardTable(classes={"upper": upper, "middle": middle},
                           c_f=-1000.0, campaign=-5.0 if campaign_cost else 0.0)
    raise ValueError(f"unknown family {family!r}")


_CONFIG_KEYS = {
    "family", "n_comp", "k_comp", "lev", "campaign_cost", "horizon",
    "discount", "risk_mode", "correlated_risk_exact", "rho", "n_alpha",
    "obs_alpha", "state_tau", "state_alpha", "rewards",
}


@dataclass(frozen=True)
class EnvConfig:
    """Environment family and sizing.

    n_comp counts components for struct families and turbines for owf.
    k_comp is the number of components that must work for the system to
    work; the system fails once n_comp - k_comp + 1 components have failed.

    risk_mode "increment" charges c_f times the step increase of the system
    failure probability (re-baselining after repairs drop it); "level"
    charges c_f times the current probability every step.
    """

    family: str
    n_comp: int
    k_comp: int | None = None
    lev: int = 3
    campaign_cost: bool = False
    horizon: int = 0
    discount: float = 0.95
    risk_mode: str = "increment"
    correlated_risk_exact: bool = False
    rho: float = 0.8
    n_alpha: int = 80
    obs_alpha: bool = True
    state_tau: bool = True
    state_alpha: bool = True
    rewards: RewardTable | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.n_comp < 1:
            raise ValueError("n_comp must be positive")
        if self.family == "owf":
            if self.k_comp is not None:
                raise ValueError("k_comp does not apply to owf")
            if self.lev != 3:
                raise ValueError("owf turbines have exactly 3 components")
        else:
            if self.k_comp is None:
                raise ValueError("struct families require k_comp")
            if not 1 <= self.k_comp <= self.n_comp:
                raise ValueError("k_comp must satisfy 1 <= k_comp <= n_comp")
        if self.risk_mode not in ("increment", "level"):
            raise ValueError("risk_mode must be 'increment' or 'level'")
        if not 0.0 <= self.rho < 1.0:
            raise ValueError("rho must lie in [0, 1)")
        if self.horizon == 0:
            object.__setattr__(self, "horizon", 20 if self.family == "owf" else 30)
        if self.horizon < 1:
            raise ValueError("horizon must be positive")
        if not 0.0 <= self.discount <= 1.0:
            raise ValueError("discount must lie in [0, 1]")
        if self.rewards is None:
            object.__setattr__(self, "rewards", default_rewards(self.family, self.campaign_cost))

    @classmethod
    def from_dict(cls, d: dict) -> "EnvConfig":
        unknown = set(d) - _CONFIG_KEYS
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "family" not in d:
            raise ValueError("config requires 'family'")
        kwargs = dict(d)
        r = kwargs.get("rewards")
        if isinstance(r, dict):
            classes = {name: ComponentRewards(*vals) for name, vals in r["classes"].items()}
            kwargs["rewards"] = RewardTable(classes=classes, c_f=r["c_f"], campaign=r["campaign"])
        return cls(**kwargs)

    def to_dict(self) -> dict:
        r = self.rewards
        return {
            "family": self.family, "n_comp": self.n_comp, "k_comp": self.k_comp,
            "lev": self.lev, "campaign_cost": self.campaign_cost,
            "horizon": self.horizon, "discount": self.discount,
            "risk_mode": self.risk_mode,
            "correlated_risk_exact": self.correlated_risk_exact,
            "rho": self.rho, "n_alpha": self.n_alpha,
            "obs_alpha": self.obs_alpha, "state_tau": self.state_tau,
            "state_alpha": self.state_alpha,
            "rewards": {
                "classes": {k: [v.inspect, v.repair] for k, v in r.classes.items()},
                "c_f": r.c_f, "campaign": r.campaign,
            },
        }


@dataclass
class StepResult:
    observations: list
    state: np.ndarray
    reward: float
    done: bool
    info: dict


class ImpEnv:
    """One episodic environment instance. Single-threaded and mutable;
    models are shared read-only."""

    def __init__(self, config: EnvConfig, models):
        self.config = config
        if isinstance(models, TransitionModel):
            models = {"struct": models}
        self.models = models

        fam = config.family
        if fam in ("struct_uc", "struct_c"):
            if "struct" not in models:
                raise ValueError("struct families need a 'struct' model")
            m = models["struct"]
            self._comp_models = [m] * config.n_comp
            self._comp_class = ["component"] * config.n_comp
            self._controllable = [True] * config.n_comp
            self.n_components = config.n_comp
            self.n_agents = config.n_comp
            self.agent_components = list(range(config.n_comp))
            # the system works iff at least k_comp components work
            self._failures_needed = config.n_comp - config.k_comp + 1
        else:
            names = ["owf_upper", "owf_middle", "owf_mudline"]
            for name in names:
                if name not in models:
                    raise ValueError(f"owf needs a {name!r} model")
            per_turbine = [models[n] for n in names]
            classes = ["upper", "middle", "mudline"]
            self._comp_models = per_turbine * config.n_comp
            self._comp_class = classes * config.n_comp
            self._controllable = [True, True, False] * config.n_comp
            self.n_components = 3 * config.n_comp
            self.n_agents = 2 * config.n_comp
            self.agent_components = [3 * (a // 2) + (a % 2) for a in range(self.n_agents)]
            self._turbines = [(3 * t, 3 * t + 1, 3 * t + 2) for t in range(config.n_comp)]

        horizons = {m.tau_max for m in self._comp_models}
        if min(horizons) < config.horizon:
            raise ValueError("model horizon shorter than the episode horizon")
        bins = {m.n_bins for m in self._comp_models}
        if len(bins) != 1:
            raise ValueError("all component models must share one bin count")
        self.n_bins = bins.pop()

        if fam == "struct_c":
            from .belief import build_correlated_prior
            prior = build_correlated_prior(models["struct"], rho=config.rho,
                                           n_alpha=config.n_alpha, n_comp=1)
            self._prior_cond = prior.conditional[0]
            # a repaired component is a fresh draw, independent of the latent factor
            self._fresh_cond = np.tile(models["struct"].initial_belief, (config.n_alpha, 1))

        self._tables = [m.tables for m in self._comp_models]
        self._pods = [m.inspection.pod for m in self._comp_models]
        self._initial = [m.initial_belief for m in self._comp_models]

        self.obs_dim = self.n_bins + 1
        if fam == "struct_c" and config.obs_alpha:
            self.obs_dim += config.n_alpha
        self.state_dim = self.n_components * self.n_bins + 1
        if fam != "owf" and config.state_tau:
            self.state_dim += self.n_components
        if fam == "struct_c" and config.state_alpha:
            self.state_dim += config.n_alpha

        self._rng = None
        self.t = None

    # -- lifecycle ---------------------------------------------------------

    def reset(self, seed=None) -> StepResult:
        cfg = self.config
        self._rng = np.random.default_rng(seed)
        self.t = 0
        self.tau = np.zeros(self.n_components, dtype=int)
        if cfg.family == "struct_c":
            self.alpha = np.full(cfg.n_alpha, 1.0 / cfg.n_alpha)
            self.cond = np.tile(self._prior_cond, (self.n_components, 1, 1))
        else:
            self.beliefs = np.stack(self._initial)
        self._detections = [False] * self.n_agents
        info = {
            "risk": 0.0, "inspection": 0.0, "repair": 0.0, "campaign": 0.0,
            "p_sys": self._p_sys_info(),
            "detections": list(self._detections),
        }
        return StepResult(self.get_observations(), self.get_state(), 0.0, False, info)

    def step(self, actions) -> StepResult:
        cfg = self.config
        if self.t is None:
            raise RuntimeError("call reset() before step()")
        if self.t >= cfg.horizon:
            raise RuntimeError("episode is done")
        acts = [Action(a) for a in actions]
        if len(acts) != self.n_agents:
            raise ValueError(f"expected {self.n_agents} actions, got {len(acts)}")

        repairs = []
        inspections = []
        for agent, a in enumerate(acts):
            comp = self.agent_components[agent]
            if a == Action.REPAIR:
                repairs.append(comp)
            elif a == Action.INSPECT:
                inspections.append((comp, agent))
        inspections.sort()

        p_before = self._system_pf()

        for comp in repairs:
            self.tau[comp] = 0
            if cfg.family == "struct_c":
                self.cond[comp] = self._fresh_cond
            else:
                self.beliefs[comp] = self._initial[comp]

        # every component ages one year, just-repaired ones from age 0
        if cfg.family == "struct_c":
            for comp in range(self.n_components):
                rows = self.cond[comp] @ self._tables[comp][self.tau[comp]]
                self.cond[comp] = rows / rows.sum(axis=1, keepdims=True)
        else:
            for comp in range(self.n_components):
                b = self.beliefs[comp] @ self._tables[comp][self.tau[comp]]
                self.beliefs[comp] = b / b.sum()
        self.tau += 1

        p_after = self._system_pf()
        risk = self._risk(p_before, p_after)

        detections = [False] * self.n_agents
        for comp, agent in inspections:
            detections[agent] = self._inspect(comp)
        self._detections = detections

        rewards = cfg.rewards
        cost_ins = sum(rewards.classes[self._comp_class[c]].inspect for c, _ in inspections)
        cost_rep = sum(rewards.classes[self._comp_class[c]].repair for c in repairs)
        cost_camp = 0.0
        if cfg.campaign_cost and (inspections or repairs):
            cost_camp = rewards.campaign
        reward = risk + cost_ins + cost_rep + cost_camp

        self.t += 1
        done = self.t == cfg.horizon
        info = {
            "risk": risk, "inspection": cost_ins, "repair": cost_rep,
            "campaign": cost_camp,
            "p_sys": self._p_sys_info(),
            "detections": list(detections),
        }
        return StepResult(self.get_observations(), self.get_state(), reward, done, info)

    # -- internals ---------------------------------------------------------

    def _marginals(self) -> np.ndarray:
        out = self.alpha @ self.cond
        return out / out.sum(axis=1, keepdims=True)

    def _component_pf(self) -> np.ndarray:
        if self.config.family == "struct_c":
            return self._marginals()[:, -1]
        return self.beliefs[:, -1]

    def _system_pf(self):
        cfg = self.config
        if cfg.family == "owf":
            pf = self._component_pf()
            out = np.empty(len(self._turbines))
            for i, comps in enumerate(self._turbines):
                out[i] = 1.0 - np.prod(1.0 - pf[list(comps)])
            return out
        if cfg.family == "struct_c" and cfg.correlated_risk_exact:
            per_alpha = _count_recursion(self.cond[:, :, -1], self._failures_needed)
            return float(self.alpha @ per_alpha)
        pf = self._component_pf()
        return float(_count_recursion(pf[:, None], self._failures_needed)[0])

    def _risk(self, p_before, p_after) -> float:
        c_f = self.config.rewards.c_f
        if self.config.risk_mode == "level":
            return float(c_f * np.sum(p_after))
        pb = np.atleast_1d(np.asarray(p_before, dtype=float))
        pa = np.atleast_1d(np.asarray(p_after, dtype=float))
        per = np.where(pa < pb, c_f * pa, c_f * (pa - pb))
        return float(per.sum())

    def _inspect(self, comp: int) -> bool:
        pod = self._pods[comp]
        if self.config.family == "struct_c":
            rows = self.cond[comp]
            marg = self.alpha @ rows
            marg = marg / marg.sum()
            detect = bool(self._rng.random() < float(pod @ marg))
            like = pod if detect else 1.0 - pod
            ev = rows @ like
            alpha = self.alpha * ev
            total = alpha.sum()
            if total <= 0.0:
                from .belief import DegenerateUpdateError
                raise DegenerateUpdateError("inspection outcome has zero probability")
            self.alpha = alpha / total
            new_rows = rows * like[None, :]
            sums = new_rows.sum(axis=1, keepdims=True)
            dead = sums[:, 0] <= 0.0
            if dead.any():
                new_rows[dead] = rows[dead]
                sums = new_rows.sum(axis=1, keepdims=True)
            self.cond[comp] = new_rows / sums
            return detect
        b = self.beliefs[comp]
        detect = bool(self._rng.random() < float(pod @ b))
        like = pod if detect else 1.0 - pod
        post = b * like
        total = post.sum()
        if total <= 0.0:
            from .belief import DegenerateUpdateError
            raise DegenerateUpdateError("inspection outcome has zero probability")
        self.beliefs[comp] = post / total
        return detect

    def _p_sys_info(self):
        p = self._system_pf()
        return [float(x) for x in p] if isinstance(p, np.ndarray) else float(p)

    # -- views -------------------------------------------------------------

    def get_observations(self) -> list:
        cfg = self.config
        tt = self.t / cfg.horizon
        if cfg.family == "struct_c":
            marg = self._marginals()
            out = []
            for agent in range(self.n_agents):
                comp = self.agent_components[agent]
                parts = [marg[comp]]
                if cfg.obs_alpha:
                    parts.append(self.alpha)
                parts.append([tt])
                out.append(np.concatenate(parts))
            return out
        return [np.concatenate([self.beliefs[self.agent_components[a]], [tt]])
                for a in range(self.n_agents)]

    def get_state(self) -> np.ndarray:
        cfg = self.config
        tt = self.t / cfg.horizon
        if cfg.family == "struct_c":
            parts = [self._marginals().ravel()]
            if cfg.state_tau:
                parts.append(self.tau / cfg.horizon)
            if cfg.state_alpha:
                parts.append(self.alpha)
        else:
            parts = [self.beliefs.ravel()]
            if cfg.family != "owf" and cfg.state_tau:
                parts.append(self.tau / cfg.horizon)
        parts.append([tt])
        return np.concatenate(parts)

    def last_detections(self) -> list:
        return list(self._detections)


def make_topology_config(config: EnvConfig):
    """Expose the env's aggregation rule for external reliability checks."""
    from .reliability import SystemTopology
    if config.family == "owf":
        turbines = tuple((3 * t, 3 * t + 1, 3 * t + 2) for t in range(config.n_comp))
        return SystemTopology(kind="wind-farm", n=3 * config.n_comp, turbines=turbines)
    return SystemTopology(kind="k-out-of-n", n=config.n_comp,
                          k=config.n_comp - config.k_comp + 1)
