"""Functional episodic interface over the impsim environments.

External trainers drive environments through four calls:

    handle = make_env({"family": "struct_uc", "n_comp": 3, "k_comp": 2})
    observations = reset(handle, seed=42)
    observations, reward, done, info = step(handle, actions)
    state = get_state(handle)

The reward is the single team scalar shared by all agents; observations are
flat numeric arrays in the layout documented by impsim. Model files are
located through `model_dir`, the IMP_MODEL_DIR environment variable, or the
working directory, in that order.

A handle must not be shared between threads; independent handles are fully
isolated from each other.
"""

import os
from pathlib import Path

from impsim.envs import EnvConfig, ImpEnv
from impsim.models import load_model

__version__ = "0.1.0"

__all__ = [
    "DO_NOTHING", "INSPECT", "REPAIR",
    "EnvHandle", "make_env", "reset", "step", "get_state",
]

DO_NOTHING = 0
INSPECT = 1
REPAIR = 2

_ACTIONS = (DO_NOTHING, INSPECT, REPAIR)

# file layout written by `impsim gen-model`
_MODEL_FILES = {
    "struct_uc": {"struct": "struct.impm"},
    "struct_c": {"struct": "struct.impm"},
    "owf": {"owf_upper": "owf_upper.impm",
            "owf_middle": "owf_middle.impm",
            "owf_mudline": "owf_mudline.impm"},
}


class EnvHandle:
    """One live environment instance plus its echo of the resolved config.

    Attributes:
        config: the validated configuration as a plain dict.
        n_agents: number of acting agents.
        obs_dim: length of each per-agent observation vector.
        state_dim: length of the global state vector.
    """

    def __init__(self, env: ImpEnv):
        self._env = env
        self._started = False
        self.config = env.config.to_dict()
        self.n_agents = env.n_agents
        self.obs_dim = env.obs_dim
        self.state_dim = env.state_dim

    def __repr__(self):
        return (f"EnvHandle(family={self.config['family']!r}, "
                f"n_agents={self.n_agents}, obs_dim={self.obs_dim}, "
                f"state_dim={self.state_dim})")


def _resolve_models(config: EnvConfig, model_dir):
    base = Path(model_dir) if model_dir is not None else \
        Path(os.environ.get("IMP_MODEL_DIR", "."))
    out = {}
    for name, filename in _MODEL_FILES[config.family].items():
        path = base / filename
        if not path.exists():
            raise FileNotFoundError(
                f"missing model file {path}; generate it with "
                f"`impsim gen-model` or pass model_dir/IMP_MODEL_DIR")
        out[name] = load_model(path)
    return out


def make_env(config: dict, model_dir=None, models=None) -> EnvHandle:
    """Validate a config dictionary and build a ready-to-reset environment.

    Unknown keys, a missing k_comp for struct families, or a k_comp given
    for owf all raise ValueError. Deterioration models are loaded from
    model_dir unless preloaded ones are passed via `models`.
    """
    if not isinstance(config, dict):
        raise TypeError(f"config must be a dict, got {type(config).__name__}")
    cfg = EnvConfig.from_dict(config)
    if models is None:
        models = _resolve_models(cfg, model_dir)
    return EnvHandle(ImpEnv(cfg, models))


def reset(handle: EnvHandle, seed=None) -> list:
    """Start a fresh episode and return the per-agent observations."""
    result = handle._env.reset(seed=seed)
    handle._started = True
    return result.observations


def step(handle: EnvHandle, actions):
    """Advance one step; returns (observations, reward, done, info).

    The reward is one shared team scalar. info carries the reward
    decomposition, per-system failure probabilities, and detection flags.
    """
    if not handle._started:
        raise RuntimeError("call reset() before step()")
    acts = list(actions)
    if len(acts) != handle.n_agents:
        raise ValueError(f"expected {handle.n_agents} actions, "
                         f"got {len(acts)}")
    for i, a in enumerate(acts):
        if not isinstance(a, (int,)) and not hasattr(a, "__index__"):
            raise ValueError(f"illegal action {a!r} for agent {i}: "
                             f"must be one of {_ACTIONS}")
        if int(a) not in _ACTIONS:
            raise ValueError(f"illegal action {int(a)} for agent {i}: "
                             f"must be one of {_ACTIONS}")
    result = handle._env.step([int(a) for a in acts])
    return result.observations, float(result.reward), bool(result.done), \
        result.info


def get_state(handle: EnvHandle):
    """Global state vector for centralized training."""
    return handle._env.get_state()
