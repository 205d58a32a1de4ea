"""impsim: deterioration modeling, belief-state multi-agent environments,
and maintenance policy evaluation for infrastructure management planning."""

__version__ = "0.1.0"

from .belief import (BeliefVector, CorrelationBelief, DegenerateUpdateError,
                     bayes_update, build_correlated_prior, correlated_propagate,
                     correlation_update, marginal_belief, propagate,
                     sample_inspection_outcome)
from .envs import Action, EnvConfig, ImpEnv, StepResult, default_rewards
from .harness import (DoNothingPolicy, EpisodeStats, EvalReport, RandomPolicy,
                      ScriptedPolicy, evaluate, run_episode, variance_study)
from .heuristics import (HeuristicParams, HeuristicPolicy, SearchResult,
                         heuristic_search)
from .models import (Discretization, FatigueParams, InspectionModel,
                     ModelChecksumError, ModelFormatError, ModelVersionError,
                     NormalStress, TransitionModel, WeibullStress,
                     crack_growth_step, expected_stress_owf, generate_family,
                     generate_transition_model, load_model, pod_eddy_current,
                     pod_exponential, save_model)
from .reliability import (SystemTopology, component_failure_prob,
                          k_out_of_n_prob, risk_reward, system_failure_prob)

__all__ = [
    "Action", "BeliefVector", "CorrelationBelief", "DegenerateUpdateError",
    "Discretization", "DoNothingPolicy", "EnvConfig", "EpisodeStats",
    "EvalReport", "FatigueParams", "HeuristicParams", "HeuristicPolicy",
    "ImpEnv", "InspectionModel", "ModelChecksumError", "ModelFormatError",
    "ModelVersionError", "NormalStress", "RandomPolicy", "ScriptedPolicy",
    "SearchResult", "StepResult", "SystemTopology", "TransitionModel",
    "WeibullStress", "bayes_update", "build_correlated_prior",
    "component_failure_prob", "correlated_propagate", "correlation_update",
    "crack_growth_step", "default_rewards", "evaluate", "expected_stress_owf",
    "generate_family", "generate_transition_model", "heuristic_search",
    "k_out_of_n_prob", "load_model", "marginal_belief", "pod_eddy_current",
    "pod_exponential", "propagate", "risk_reward", "run_episode",
    "sample_inspection_outcome", "save_model", "system_failure_prob",
    "variance_study",
]
