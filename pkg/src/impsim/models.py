"""Deterioration and inspection models.

Builds annual crack-growth transition tables by Monte Carlo simulation of a
Paris-law fatigue process, together with per-bin probability-of-detection
curves, and persists the bundle in a small self-describing binary format.
"""

from __future__ import annotations

import hashlib
import json
import math
import struct as _struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Union

import numpy as np

FAILURE_SENTINEL = np.inf

# Trajectories are simulated in fixed-size chunks, each with its own RNG
# stream keyed by (stream, chunk index), so results never depend on how many
# workers consume the chunks.
_CHUNK = 65536
_GEN_STREAM = 0

_MAGIC = b"IMPM"
_VERSION = 1


class ModelFormatError(Exception):
    """File is not a recognizable model container."""


class ModelVersionError(ModelFormatError):
    """Container version is not supported by this reader."""


class ModelChecksumError(ModelFormatError):
    """Container bytes fail integrity verification."""


@dataclass(frozen=True)
class NormalStress:
    """Stress range drawn once per trajectory from N(mean, std), floored at 0."""

    mean: float
    std: float


@dataclass(frozen=True)
class WeibullStress:
    """Expected stress range q * Gamma(1 + 1/lam) * Y.

    q is drawn from a normal with coefficient of variation q_cov (floored at
    0) and Y is a lognormal factor with log-space parameters y_logmean and
    y_logstd.
    """

    q_mean: float
    q_cov: float
    lam: float
    y_logmean: float = 0.0
    y_logstd: float = 0.1


StressModel = Union[NormalStress, WeibullStress]


@dataclass(frozen=True)
class FatigueParams:
    """Crack growth law parameters; ln C is drawn from N(lnc_mean, lnc_std)."""

    lnc_mean: float
    lnc_std: float
    m: float
    stress: StressModel
    n_s: float
    d0_mean: float
    d_crit: float

    def __post_init__(self):
        if not (self.m > 2):
            raise ValueError("crack growth exponent m must exceed 2")
        if self.n_s <= 0 or self.d0_mean <= 0:
            raise ValueError("n_s and d0_mean must be positive")
        if self.d_crit <= self.d0_mean:
            raise ValueError("d_crit must exceed the mean initial crack size")


@dataclass(frozen=True)
class Discretization:
    """Crack-size bin edges; first edge 0, last edge +inf, failure bin last."""

    boundaries: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.boundaries, dtype=float)
        object.__setattr__(self, "boundaries", b)
        if b.ndim != 1 or b.size < 3:
            raise ValueError("need at least two bins")
        if b[0] != 0.0 or not np.isinf(b[-1]):
            raise ValueError("boundaries must start at 0 and end at +inf")
        if not np.all(np.diff(b) > 0):
            raise ValueError("boundaries must be strictly increasing")

    @property
    def n_bins(self) -> int:
        return self.boundaries.size - 1

    def bin_index(self, d):
        """Vectorized bin lookup; values beyond the last finite edge map to the failure bin."""
        idx = np.searchsorted(self.boundaries, d, side="right") - 1
        return np.minimum(idx, self.n_bins - 1)

    def midpoints(self, d_crit: float, geometric: bool) -> np.ndarray:
        """Representative crack size per bin for PoD evaluation.

        The first bin starts at 0 (geometric midpoint degenerates to 0) and
        the unbounded failure bin is represented by d_crit.
        """
        lo = self.boundaries[:-1]
        hi = self.boundaries[1:]
        mid = np.sqrt(lo * hi) if geometric else (lo + hi) / 2.0
        mid[-1] = d_crit
        return mid


@dataclass(frozen=True)
class InspectionModel:
    """Per-bin probability of detection at each bin's representative crack size."""

    pod: np.ndarray
    kind: str
    params: dict

    def __post_init__(self):
        p = np.asarray(self.pod, dtype=float)
        object.__setattr__(self, "pod", p)
        if np.any(p < 0) or np.any(p > 1):
            raise ValueError("pod values must lie in [0, 1]")
        if np.any(np.diff(p) < -1e-12):
            raise ValueError("pod must be non-decreasing across bins")


@dataclass
class TransitionModel:
    """Monte Carlo transition tables p(d' | d, tau) plus the matching
    initial belief, discretization, and inspection model.

    tables[tau] maps a belief at deterioration age tau to age tau + 1;
    row_counts[tau, i] records how many simulated trajectories visited bin i
    at age tau (the denominator behind row i of tables[tau]).
    """

    tables: np.ndarray
    tau_max: int
    initial_belief: np.ndarray
    discretization: Discretization
    inspection: InspectionModel
    row_counts: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def n_bins(self) -> int:
        return self.discretization.n_bins

    def __eq__(self, other) -> bool:
        if not isinstance(other, TransitionModel):
            return NotImplemented
        return (
            self.tau_max == other.tau_max
            and np.array_equal(self.tables, other.tables)
            and np.array_equal(self.initial_belief, other.initial_belief)
            and np.array_equal(self.discretization.boundaries, other.discretization.boundaries)
            and np.array_equal(self.inspection.pod, other.inspection.pod)
            and self.inspection.kind == other.inspection.kind
            and self.inspection.params == other.inspection.params
            and np.array_equal(self.row_counts, other.row_counts)
            and self.metadata == other.metadata
        )


def crack_growth_step(d: float, c_fm: float, m: float, s_r: float, n_s: float) -> float:
    """One year of fatigue crack growth.

    Returns the new crack size, or the failure sentinel (inf) when the
    growth law diverges within the year.
    """
    for name, v in (("d", d), ("c_fm", c_fm), ("m", m), ("s_r", s_r), ("n_s", n_s)):
        if not math.isfinite(v):
            raise ValueError(f"non-finite parameter {name}")
    if d <= 0:
        raise ValueError("crack size must be positive")
    if m == 2:
        raise ValueError("m = 2 is a removable singularity of the growth law")
    a = (1.0 - m / 2.0) * c_fm * s_r**m * math.pi ** (m / 2.0) * n_s
    base = a + d ** (1.0 - m / 2.0)
    if base <= 0:
        return FAILURE_SENTINEL
    return base ** (2.0 / (2.0 - m))


def _crack_growth_vec(d: np.ndarray, a: np.ndarray, m: float) -> np.ndarray:
    # Failed trajectories stay failed: inf ** negative would be 0, so mask them out.
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        u = np.where(np.isinf(d), 0.0, d ** (1.0 - m / 2.0))
        base = a + u
        out = np.where(base > 0, base ** (2.0 / (2.0 - m)), FAILURE_SENTINEL)
    return np.where(np.isinf(d), FAILURE_SENTINEL, out)


def expected_stress_owf(q: float, lam: float, y: float) -> float:
    """Expected stress-range magnitude q * Gamma(1 + 1/lam) * y."""
    if q <= 0 or lam <= 0 or y <= 0:
        raise ValueError("q, lam and y must be positive")
    return q * math.gamma(1.0 + 1.0 / lam) * y


def pod_exponential(d: float, mu: float):
    """Detection probability 1 - exp(-d/mu); exponential-CDF detectability."""
    d = np.asarray(d, dtype=float)
    if np.any(d < 0) or mu <= 0:
        raise ValueError("require d >= 0 and mu > 0")
    out = -np.expm1(-d / mu)
    return float(out) if out.ndim == 0 else out


def pod_eddy_current(d: float, chi: float, b: float):
    """Detection probability 1 - 1 / (1 + (d/chi)^b)."""
    d = np.asarray(d, dtype=float)
    if np.any(d < 0) or chi <= 0 or b <= 0:
        raise ValueError("require d >= 0, chi > 0 and b > 0")
    out = 1.0 - 1.0 / (1.0 + (d / chi) ** b)
    return float(out) if out.ndim == 0 else out


def initial_crack_belief(params: FatigueParams, disc: Discretization) -> np.ndarray:
    """Exact binning of the exponential initial crack-size distribution."""
    e = disc.boundaries
    cdf = np.where(np.isinf(e), 1.0, -np.expm1(-e / params.d0_mean))
    return np.diff(cdf)


def _simulate_chunk(params: FatigueParams, disc: Discretization, horizon: int,
                    n: int, seed: int, chunk_idx: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(_GEN_STREAM, chunk_idx)))
    d = rng.exponential(params.d0_mean, n)
    lnc = rng.normal(params.lnc_mean, params.lnc_std, n)
    st = params.stress
    if isinstance(st, NormalStress):
        s = np.maximum(rng.normal(st.mean, st.std, n), 0.0)
    else:
        q = np.maximum(rng.normal(st.q_mean, st.q_cov * st.q_mean, n), 0.0)
        y = np.exp(rng.normal(st.y_logmean, st.y_logstd, n))
        s = q * math.gamma(1.0 + 1.0 / st.lam) * y
    m = params.m
    a = (1.0 - m / 2.0) * np.exp(lnc) * s**m * np.pi ** (m / 2.0) * params.n_s

    nb = disc.n_bins
    counts = np.zeros((horizon, nb * nb), dtype=np.int64)
    prev = disc.bin_index(d)
    for tau in range(horizon):
        d = _crack_growth_vec(d, a, m)
        nxt = disc.bin_index(d)
        counts[tau] = np.bincount(prev * nb + nxt, minlength=nb * nb)
        prev = nxt
    return counts


def generate_transition_model(params: FatigueParams, disc: Discretization,
                              horizon: int, n_samples: int, seed: int,
                              inspection: InspectionModel | None = None,
                              workers: int = 1, label: str = "") -> TransitionModel:
    """Estimate tau-indexed transition tables from n_samples crack trajectories.

    Per-trajectory draws (initial crack, ln C, stress) stay fixed across the
    horizon, so the non-stationarity of the binned process is carried by the
    deterioration age tau alone. Rows never visited fall back to identity
    rows (counted in metadata["identity_rows"]). Deterministic given seed,
    independent of the worker count.
    """
    if n_samples < 10**5:
        raise ValueError("n_samples below 1e5 gives unusably noisy tables")
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    nb = disc.n_bins

    chunks = []
    start = 0
    idx = 0
    while start < n_samples:
        chunks.append((idx, min(_CHUNK, n_samples - start)))
        start += _CHUNK
        idx += 1

    def work(c):
        ci, n = c
        return _simulate_chunk(params, disc, horizon, n, seed, ci)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(work, chunks))
    else:
        parts = [work(c) for c in chunks]

    counts = np.zeros((horizon, nb * nb), dtype=np.int64)
    for p in parts:
        counts += p
    counts = counts.reshape(horizon, nb, nb)

    row_counts = counts.sum(axis=2)
    empty = row_counts == 0
    tables = counts.astype(float)
    eye_rows = np.eye(nb)
    for tau in range(horizon):
        z = empty[tau]
        if z.any():
            tables[tau][z] = eye_rows[z]
    tables /= tables.sum(axis=2, keepdims=True)

    if inspection is None:
        inspection = InspectionModel(pod=np.zeros(nb), kind="none", params={})
    if inspection.pod.size != nb:
        raise ValueError("inspection model bin count does not match discretization")

    meta = {
        "label": label,
        "seed": int(seed),
        "n_samples": int(n_samples),
        "horizon": int(horizon),
        "identity_rows": int(empty.sum()),
        "fatigue": _fatigue_to_dict(params),
    }
    return TransitionModel(
        tables=tables,
        tau_max=horizon,
        initial_belief=initial_crack_belief(params, disc),
        discretization=disc,
        inspection=inspection,
        row_counts=row_counts.astype(float),
        metadata=meta,
    )


# Default configurations for the two environment families. The struct family
# uses one component type; the wind farm uses three per turbine, two of which
# accept maintenance actions.

OWF_COMPONENTS = ("upper", "middle", "mudline")

STRUCT_HORIZON = 30
OWF_HORIZON = 20


def default_struct_params() -> FatigueParams:
    return FatigueParams(
        lnc_mean=-35.2, lnc_std=0.5, m=3.5,
        stress=NormalStress(mean=70.0, std=10.0),
        n_s=1e6, d0_mean=1.0, d_crit=20.0,
    )


def default_struct_discretization() -> Discretization:
    interior = np.exp(np.linspace(np.log(1e-4), np.log(20.0), 29))
    return Discretization(np.concatenate([[0.0], interior, [np.inf]]))


_OWF_PARAMS = {
    "upper": dict(lnc_mean=-26.45, lnc_std=0.12, q_mean=10.21, d_crit=20.0),
    "middle": dict(lnc_mean=-26.04, lnc_std=0.40, q_mean=7.40, d_crit=60.0),
    "mudline": dict(lnc_mean=-26.12, lnc_std=0.39, q_mean=6.74, d_crit=60.0),
}


def default_owf_params(component: str) -> FatigueParams:
    p = _OWF_PARAMS[component]
    return FatigueParams(
        lnc_mean=p["lnc_mean"], lnc_std=p["lnc_std"], m=3.0,
        stress=WeibullStress(q_mean=p["q_mean"], q_cov=0.25, lam=0.8),
        n_s=5049216.0, d0_mean=0.11, d_crit=p["d_crit"],
    )


def default_owf_discretization(component: str) -> Discretization:
    d_crit = _OWF_PARAMS[component]["d_crit"]
    interior = np.linspace(0.11, d_crit, 59)
    return Discretization(np.concatenate([[0.0], interior, [np.inf]]))


def struct_inspection(disc: Discretization, mu: float = 8.0) -> InspectionModel:
    mids = disc.midpoints(d_crit=default_struct_params().d_crit, geometric=True)
    return InspectionModel(pod=pod_exponential(mids, mu), kind="exponential", params={"mu": mu})


_EDDY_PARAMS = {"upper": (0.4, 1.43), "middle": (1.16, 0.90)}


def owf_inspection(component: str, disc: Discretization) -> InspectionModel:
    d_crit = _OWF_PARAMS[component]["d_crit"]
    mids = disc.midpoints(d_crit=d_crit, geometric=False)
    if component == "mudline":
        # Below the seabed: never inspectable.
        return InspectionModel(pod=np.zeros(disc.n_bins), kind="none", params={})
    chi, b = _EDDY_PARAMS[component]
    return InspectionModel(pod=pod_eddy_current(mids, chi, b), kind="eddy-current",
                           params={"chi": chi, "b": b})


def generate_family(family: str, n_samples: int, seed: int, workers: int = 1) -> dict:
    """Generate every model a family needs, keyed by model name."""
    if family == "struct":
        disc = default_struct_discretization()
        params = default_struct_params()
        model = generate_transition_model(
            params, disc, STRUCT_HORIZON, n_samples, seed,
            inspection=struct_inspection(disc), label="struct", workers=workers)
        return {"struct": model}
    if family == "owf":
        out = {}
        for i, comp in enumerate(OWF_COMPONENTS):
            disc = default_owf_discretization(comp)
            params = default_owf_params(comp)
            out[f"owf_{comp}"] = generate_transition_model(
                params, disc, OWF_HORIZON, n_samples, seed + i,
                inspection=owf_inspection(comp, disc), label=f"owf_{comp}", workers=workers)
        return out
    raise ValueError(f"unknown family {family!r}")


def _fatigue_to_dict(p: FatigueParams) -> dict:
    st = p.stress
    if isinstance(st, NormalStress):
        stress = {"type": "normal", "mean": st.mean, "std": st.std}
    else:
        stress = {"type": "weibull", "q_mean": st.q_mean, "q_cov": st.q_cov,
                  "lam": st.lam, "y_logmean": st.y_logmean, "y_logstd": st.y_logstd}
    return {"lnc_mean": p.lnc_mean, "lnc_std": p.lnc_std, "m": p.m,
            "stress": stress, "n_s": p.n_s, "d0_mean": p.d0_mean, "d_crit": p.d_crit}


def _fatigue_from_dict(d: dict) -> FatigueParams:
    sd = d["stress"]
    if sd["type"] == "normal":
        stress = NormalStress(mean=sd["mean"], std=sd["std"])
    else:
        stress = WeibullStress(q_mean=sd["q_mean"], q_cov=sd["q_cov"], lam=sd["lam"],
                               y_logmean=sd["y_logmean"], y_logstd=sd["y_logstd"])
    return FatigueParams(lnc_mean=d["lnc_mean"], lnc_std=d["lnc_std"], m=d["m"],
                         stress=stress, n_s=d["n_s"], d0_mean=d["d0_mean"], d_crit=d["d_crit"])


# Container layout: magic "IMPM" | u16 version | u32 metadata length | JSON
# metadata | row-major little-endian float64 arrays in declared order |
# SHA-256 of everything before the digest. Boundaries are stored without the
# trailing +inf (JSON has no inf literal).

def save_model(model: TransitionModel, path) -> None:
    meta = {
        "arrays": [
            ["tables", list(model.tables.shape)],
            ["initial_belief", [model.initial_belief.size]],
            ["pod", [model.inspection.pod.size]],
            ["row_counts", list(model.row_counts.shape)],
        ],
        "tau_max": model.tau_max,
        "boundaries_finite": [float(x) for x in model.discretization.boundaries[:-1]],
        "inspection": {"kind": model.inspection.kind, "params": model.inspection.params},
        "metadata": model.metadata,
    }
    blob = json.dumps(meta, sort_keys=True).encode("utf-8")
    buf = bytearray()
    buf += _MAGIC
    buf += _struct.pack("<H", _VERSION)
    buf += _struct.pack("<I", len(blob))
    buf += blob
    for arr in (model.tables, model.initial_belief, model.inspection.pod, model.row_counts):
        buf += np.ascontiguousarray(arr, dtype="<f8").tobytes()
    buf += hashlib.sha256(bytes(buf)).digest()
    with open(path, "wb") as f:
        f.write(bytes(buf))


def load_model(path) -> TransitionModel:
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < 6 or raw[:4] != _MAGIC:
        raise ModelFormatError("not a model container (bad magic)")
    (version,) = _struct.unpack("<H", raw[4:6])
    if version != _VERSION:
        raise ModelVersionError(f"unsupported container version {version}")
    if len(raw) < 42:
        raise ModelChecksumError("container truncated")
    body, digest = raw[:-32], raw[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise ModelChecksumError("container checksum mismatch")
    try:
        (meta_len,) = _struct.unpack("<I", body[6:10])
        blob = body[10:10 + meta_len]
        meta = json.loads(blob.decode("utf-8"))
        pos = 10 + meta_len
        arrays = {}
        for name, shape in meta["arrays"]:
            count = int(np.prod(shape))
            arrays[name] = np.frombuffer(
                body, dtype="<f8", count=count, offset=pos).reshape(shape).copy()
            pos += count * 8
        boundaries = np.concatenate([meta["boundaries_finite"], [np.inf]])
        insp = InspectionModel(pod=arrays["pod"], kind=meta["inspection"]["kind"],
                               params=meta["inspection"]["params"])
        return TransitionModel(
            tables=arrays["tables"],
            tau_max=int(meta["tau_max"]),
            initial_belief=arrays["initial_belief"],
            discretization=Discretization(boundaries),
            inspection=insp,
            row_counts=arrays["row_counts"],
            metadata=meta["metadata"],
        )
    except (KeyError, ValueError, json.JSONDecodeError) as e:
        raise ModelFormatError(f"malformed container: {e}") from e
