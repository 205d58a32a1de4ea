"""Discrete Bayesian belief arithmetic.

Beliefs over crack-size bins are the simulation state: deterioration
propagates them through transition tables, inspections update them by Bayes
rule, and a shared latent factor couples components in the correlated
variant. All operations are pure and return new values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri, roots_legendre

from .models import InspectionModel, TransitionModel

_NORM_TOL = 1e-9


class DegenerateUpdateError(Exception):
    """An observation with zero prior probability cannot be conditioned on."""


@dataclass(frozen=True)
class BeliefVector:
    """Probability distribution over crack-size bins for one component."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        object.__setattr__(self, "probs", p)
        if p.ndim != 1:
            raise ValueError("belief must be one-dimensional")
        if np.any(p < 0) or abs(p.sum() - 1.0) > _NORM_TOL:
            raise ValueError("belief entries must be non-negative and sum to 1")

    @property
    def n_bins(self) -> int:
        return self.probs.size


@dataclass(frozen=True)
class CorrelationBelief:
    """Distribution over the shared latent factor plus per-component
    conditional beliefs p(d | alpha); conditional has shape
    (n_components, n_alpha, n_bins)."""

    alpha_probs: np.ndarray
    conditional: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.alpha_probs, dtype=float)
        c = np.asarray(self.conditional, dtype=float)
        object.__setattr__(self, "alpha_probs", a)
        object.__setattr__(self, "conditional", c)
        if abs(a.sum() - 1.0) > _NORM_TOL or np.any(a < 0):
            raise ValueError("alpha_probs must be a distribution")
        if c.ndim != 3 or c.shape[1] != a.size:
            raise ValueError("conditional must have shape (n_comp, n_alpha, n_bins)")
        sums = c.sum(axis=2)
        if np.any(np.abs(sums - 1.0) > _NORM_TOL):
            raise ValueError("every conditional row must sum to 1")

    @property
    def n_components(self) -> int:
        return self.conditional.shape[0]

    @property
    def n_alpha(self) -> int:
        return self.alpha_probs.size


def _propagate_probs(probs: np.ndarray, table: np.ndarray) -> np.ndarray:
    out = probs @ table
    return out / out.sum()


def propagate(b: BeliefVector, model: TransitionModel, tau: int) -> BeliefVector:
    """Advance a belief one deterioration year at age tau."""
    if not 0 <= tau < model.tau_max:
        raise ValueError(f"deterioration age {tau} outside the model horizon")
    return BeliefVector(_propagate_probs(b.probs, model.tables[tau]))


def bayes_update(b: BeliefVector, insp: InspectionModel, detect: bool):
    """Condition a belief on one inspection outcome.

    Returns (posterior, evidence) where evidence is the prior probability of
    the observed outcome.
    """
    like = insp.pod if detect else 1.0 - insp.pod
    joint = b.probs * like
    evidence = joint.sum()
    if evidence <= 0.0:
        raise DegenerateUpdateError("observation has zero probability under the belief")
    return BeliefVector(joint / evidence), float(evidence)


def sample_inspection_outcome(b: BeliefVector, insp: InspectionModel, rng: np.random.Generator) -> bool:
    """Draw detect / no-detect from the belief's predictive distribution."""
    p_detect = float(insp.pod @ b.probs)
    return bool(rng.random() < p_detect)


def marginal_belief(cb: CorrelationBelief, component: int) -> BeliefVector:
    """Mixture over the latent factor: sum_a p(alpha=a) p(d | a)."""
    out = cb.alpha_probs @ cb.conditional[component]
    return BeliefVector(out / out.sum())


def correlated_propagate(cb: CorrelationBelief, model: TransitionModel, tau: int,
                         component: int | None = None) -> CorrelationBelief:
    """Advance conditional beliefs one year; the latent factor is unchanged.

    By default every component advances at the same age tau; pass component
    to advance a single one (components age independently after repairs).
    """
    if not 0 <= tau < model.tau_max:
        raise ValueError(f"deterioration age {tau} outside the model horizon")
    table = model.tables[tau]
    cond = cb.conditional.copy()
    if component is None:
        cond = cond @ table
        cond /= cond.sum(axis=2, keepdims=True)
    else:
        rows = cond[component] @ table
        cond[component] = rows / rows.sum(axis=1, keepdims=True)
    return CorrelationBelief(cb.alpha_probs, cond)


def correlation_update(cb: CorrelationBelief, component: int,
                       insp: InspectionModel, detect: bool) -> CorrelationBelief:
    """Condition the hierarchy on one component's inspection outcome.

    The latent factor is updated through the per-alpha evidence of the
    outcome, and the inspected component's conditional rows are updated by
    Bayes rule within each alpha cell.
    """
    like = insp.pod if detect else 1.0 - insp.pod
    rows = cb.conditional[component]
    ev_alpha = rows @ like
    alpha = cb.alpha_probs * ev_alpha
    total = alpha.sum()
    if total <= 0.0:
        raise DegenerateUpdateError("observation has zero probability under the hierarchy")
    alpha = alpha / total

    cond = cb.conditional.copy()
    new_rows = rows * like[None, :]
    row_sums = new_rows.sum(axis=1, keepdims=True)
    # Rows with zero evidence carry zero posterior alpha mass; keep the prior
    # row there so the stack stays a valid distribution family.
    dead = row_sums[:, 0] <= 0.0
    if dead.any():
        new_rows[dead] = rows[dead]
        row_sums = new_rows.sum(axis=1, keepdims=True)
    cond[component] = new_rows / row_sums
    return CorrelationBelief(alpha, cond)


def build_correlated_prior(model: TransitionModel, rho: float = 0.8,
                           n_alpha: int = 80, n_comp: int = 1) -> CorrelationBelief:
    """Gaussian-copula hierarchy over initial crack sizes.

    The latent standard normal alpha is discretized into n_alpha equal-mass
    cells; component crack sizes share it through z_i = sqrt(rho) alpha +
    sqrt(1-rho) eps_i mapped through the initial distribution's quantiles.
    Each conditional row is the exact cell average (Gauss-Legendre in
    probability space), so marginalizing over alpha recovers the model's
    initial belief.
    """
    if not 0.0 <= rho < 1.0:
        raise ValueError("rho must lie in [0, 1)")
    ib = model.initial_belief
    nb = ib.size
    r = np.sqrt(rho)
    s = np.sqrt(1.0 - rho)

    cdf_edges = np.concatenate([[0.0], np.cumsum(ib)])
    cdf_edges[-1] = 1.0
    zedges = ndtri(np.clip(cdf_edges, 0.0, 1.0))

    nodes, weights = roots_legendre(48)
    cond = np.empty((n_alpha, nb))
    for k in range(n_alpha):
        plo = k / n_alpha
        phi = (k + 1) / n_alpha
        p = (nodes + 1.0) / 2.0 * (phi - plo) + plo
        w = weights / 2.0 * (phi - plo)
        a = ndtri(p)
        cdf_at = ndtr((zedges[None, :] - r * a[:, None]) / s)
        cond[k] = (w @ np.diff(cdf_at, axis=1)) * n_alpha
    cond = np.clip(cond, 0.0, None)
    cond /= cond.sum(axis=1, keepdims=True)

    alpha = np.full(n_alpha, 1.0 / n_alpha)
    return CorrelationBelief(alpha, np.tile(cond, (n_comp, 1, 1)))
