"""System-level failure probability and failure risk.

Component failure probabilities combine into system probabilities either
through a k-out-of-n counting recursion (exact under independence) or per
wind turbine as a three-component series system.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .belief import BeliefVector, CorrelationBelief


@dataclass(frozen=True)
class SystemTopology:
    """How component failures aggregate into a system failure.

    kind "k-out-of-n": the system fails when at least k of the n components
    have failed. kind "wind-farm": each turbine is a series system of its 3
    components; turbines fail independently of each other.
    """

    kind: str
    n: int
    k: int = 0
    turbines: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.kind == "k-out-of-n":
            if not 1 <= self.k <= self.n:
                raise ValueError("k must satisfy 1 <= k <= n")
        elif self.kind == "wind-farm":
            if not self.turbines or any(len(t) != 3 for t in self.turbines):
                raise ValueError("every turbine needs exactly 3 component indices")
        else:
            raise ValueError(f"unknown topology kind {self.kind!r}")


def component_failure_prob(b: BeliefVector) -> float:
    """Probability mass in the absorbing failure bin."""
    return float(b.probs[-1])


def _count_recursion(pf: np.ndarray, k: int) -> np.ndarray:
    """P(at least k failures) for columns of independent failure probs.

    pf has shape (n,) or (n, batch); the recursion tracks the failure-count
    distribution truncated at k in O(n k) time.
    """
    pf = np.atleast_2d(pf.T).T if pf.ndim == 1 else pf
    n, batch = pf.shape
    dp = np.zeros((k + 1, batch))
    dp[0] = 1.0
    for i in range(n):
        p = pf[i]
        dp[k] = dp[k] + dp[k - 1] * p
        if k > 1:
            dp[1:k] = dp[1:k] * (1.0 - p) + dp[0:k - 1] * p
        dp[0] = dp[0] * (1.0 - p)
    return dp[k]


def k_out_of_n_prob(p, k: int) -> float:
    """Exact probability that at least k of the n independent components fail."""
    pf = np.asarray(p, dtype=float)
    if pf.ndim != 1 or pf.size == 0:
        raise ValueError("p must be a non-empty vector of probabilities")
    if np.any(pf < 0) or np.any(pf > 1):
        raise ValueError("probabilities must lie in [0, 1]")
    if not 1 <= k <= pf.size:
        raise ValueError("k must satisfy 1 <= k <= n")
    return float(_count_recursion(pf[:, None], k)[0])


def _turbine_failure_probs(pf: np.ndarray, turbines) -> np.ndarray:
    out = np.empty(len(turbines))
    for i, comps in enumerate(turbines):
        out[i] = 1.0 - np.prod(1.0 - pf[list(comps)])
    return out


def system_failure_prob(beliefs, topology: SystemTopology,
                        correlation: CorrelationBelief | None = None):
    """System failure probability from component beliefs.

    k-out-of-n without correlation runs the counting recursion on the
    component failure probabilities. With a correlation belief the recursion
    runs inside each latent cell (components are conditionally independent
    given alpha) and the results are mixed by the alpha distribution.
    Wind-farm topologies return the per-turbine failure probabilities.
    """
    if topology.kind == "wind-farm":
        pf = np.array([component_failure_prob(b) for b in beliefs])
        if pf.size != topology.n:
            raise ValueError("belief count does not match topology")
        return _turbine_failure_probs(pf, topology.turbines)

    if correlation is not None:
        if correlation.n_components != topology.n:
            raise ValueError("correlation belief does not match topology")
        pf_alpha = correlation.conditional[:, :, -1]
        per_alpha = _count_recursion(pf_alpha, topology.k)
        return float(correlation.alpha_probs @ per_alpha)

    pf = np.array([component_failure_prob(b) for b in beliefs])
    if pf.size != topology.n:
        raise ValueError("belief count does not match topology")
    return k_out_of_n_prob(pf, topology.k)


def risk_reward(p_sys, c_f: float) -> float:
    """Failure risk c_f * p; wind farms sum per-turbine risks."""
    p = np.asarray(p_sys, dtype=float)
    if np.any(p < 0) or np.any(p > 1):
        raise ValueError("probabilities must lie in [0, 1]")
    return float(c_f * p.sum())
