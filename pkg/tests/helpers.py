import numpy as np

from impsim import models as M


def make_toy_model(tables, initial_belief, pod=None, boundaries=None):
    """Small hand-specified model for belief arithmetic tests."""
    tables = np.asarray(tables, dtype=float)
    initial_belief = np.asarray(initial_belief, dtype=float)
    nb = initial_belief.size
    if tables.ndim == 2:
        tables = tables[None, :, :]
    if boundaries is None:
        boundaries = np.concatenate([np.arange(nb, dtype=float), [np.inf]])
    if pod is None:
        pod = np.linspace(0.0, 0.9, nb)
    disc = M.Discretization(np.asarray(boundaries, dtype=float))
    insp = M.InspectionModel(pod=np.asarray(pod, dtype=float), kind="exponential",
                             params={"mu": 8.0})
    return M.TransitionModel(
        tables=tables,
        tau_max=tables.shape[0],
        initial_belief=initial_belief,
        discretization=disc,
        inspection=insp,
        row_counts=np.zeros((tables.shape[0], nb)),
        metadata={"label": "toy"},
    )
