"""Synthetic campaigns with known ground truth.

A :class:`GroundTruthModel` fixes the species probabilities, so the true
discovery probability ``U(n)`` and richness ``S`` are known exactly and every
estimator can be scored against them.

Two sampling modes are supported:

* ``abundance``: each input exhibits exactly one species, drawn from the
  probability vector (which sums to one).
* ``incidence``: each input exhibits every species independently with its
  own probability.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import EmptyCampaign, ModelError
from .estimators import extrapolate_risk, extrapolate_species, full_report
from .incidence import Accumulator, IncidenceRecord
from .rng import generator, spawn_generators

MODES = ("abundance", "incidence")
DEFAULT_CHECKPOINTS = 20


@dataclass(frozen=True)
class Distribution:
    """Shape of the species probability vector.

    ``kind`` is one of ``uniform``, ``zipf`` (``alpha``), ``geometric`` (``q``)
    or ``endemic`` (``core_mass``, ``island_count``).
    """

    kind: str = "uniform"
    alpha: float | None = None
    q: float | None = None
    core_mass: float | None = None
    island_count: int | None = None

    def __str__(self):
        if self.kind == "zipf":
            return f"zipf:{self.alpha:g}"
        if self.kind == "geometric":
            return f"geometric:{self.q:g}"
        if self.kind == "endemic":
            return f"endemic:{self.core_mass:g},{self.island_count}"
        return self.kind

    def to_dict(self):
        return {k: v for k, v in self.__dict__.items() if v is not None}


def parse_distribution(text: str) -> Distribution:
    """Parse ``uniform``, ``zipf:1.1``, ``geometric:0.95`` or ``endemic:0.99,5``."""
    kind, _, arg = text.strip().partition(":")
    kind = kind.lower()
    try:
        if kind == "uniform" and not arg:
            return Distribution("uniform")
        if kind == "zipf":
            return Distribution("zipf", alpha=float(arg))
        if kind == "geometric":
            return Distribution("geometric", q=float(arg))
        if kind == "endemic":
            mass, islands = arg.split(",")
            return Distribution("endemic", core_mass=float(mass), island_count=int(islands))
    except ValueError:
        pass
    raise ModelError(f"cannot parse distribution {text!r}")


def _shape(s_true: int, dist: Distribution) -> np.ndarray:
    i = np.arange(1, s_true + 1, dtype=np.float64)
    if dist.kind == "uniform":
        return np.ones(s_true)
    if dist.kind == "zipf":
        if dist.alpha is None or not dist.alpha > 0:
            raise ModelError("zipf requires alpha > 0")
        return i ** -dist.alpha
    if dist.kind == "geometric":
        if dist.q is None or not 0 < dist.q < 1:
            raise ModelError("geometric requires 0 < q < 1")
        # q**i relative to q**1, computed in log space to avoid underflow
        return np.exp((i - 1) * math.log(dist.q))
    if dist.kind == "endemic":
        mass, k = dist.core_mass, dist.island_count
        if mass is None or not 0 < mass < 1:
            raise ModelError("endemic requires core_mass in (0, 1)")
        if k is None or k < 1:
            raise ModelError("endemic requires island_count >= 1")
        if s_true < k + 1:
            raise ModelError("endemic requires s_true >= island_count + 1")
        # k+1 near-equal blocks; the first is the core, the rest are islands
        core = -(-s_true // (k + 1))
        w = np.empty(s_true)
        w[:core] = mass / core
        w[core:] = (1 - mass) / (s_true - core)
        return w
    raise ModelError(f"unknown distribution kind {dist.kind!r}")


@dataclass(frozen=True, eq=False)
class GroundTruthModel:
    s_true: int
    probabilities: np.ndarray
    mode: str
    distribution: Distribution

    def __post_init__(self):
        p = np.array(self.probabilities, dtype=np.float64)
        p.setflags(write=False)
        object.__setattr__(self, "probabilities", p)

    def species_id(self, i: int) -> str:
        return f"sp:{i}"

    def to_dict(self):
        return {
            "s_true": self.s_true,
            "mode": self.mode,
            "distribution": self.distribution.to_dict(),
            "probabilities": self.probabilities.tolist(),
        }


def build_model(
    s_true: int,
    distribution: Distribution | str = "uniform",
    mode: str = "abundance",
    mean_species: float = 1.0,
) -> GroundTruthModel:
    """Construct a model.

    In incidence mode the normalised shape is scaled so that an input
    exhibits ``mean_species`` species on average, clipped to ``[0, 1]``.
    """
    if isinstance(distribution, str):
        distribution = parse_distribution(distribution)
    if s_true < 1:
        raise ModelError("s_true must be >= 1")
    if mode not in MODES:
        raise ModelError(f"mode must be one of {MODES}")
    w = _shape(s_true, distribution)
    p = w / math.fsum(w)
    if mode == "incidence":
        if not mean_species > 0:
            raise ModelError("mean_species must be positive")
        p = np.clip(p * mean_species, 0.0, 1.0)
    return GroundTruthModel(s_true, p, mode, distribution)


def true_discovery_probability(model: GroundTruthModel, unseen_mask) -> float:
    """Exact probability that the next input exhibits an unseen species.

    ``math.fsum`` is correctly rounded, so the value is independent of the
    order in which the unseen species are visited.
    """
    p = model.probabilities[np.asarray(unseen_mask, dtype=bool)]
    if model.mode == "abundance":
        return math.fsum(p.tolist())
    # 1 - prod(1 - p_i)
    return -math.expm1(math.fsum(np.log1p(-p).tolist()))


@dataclass(frozen=True)
class TruthPoint:
    n: int
    s_obs: int
    u: float


def default_checkpoints(n: int, count: int = DEFAULT_CHECKPOINTS) -> list[int]:
    """``count`` logarithmically spaced input counts in [1, n] (deduplicated)."""
    grid = np.unique(np.rint(np.geomspace(1, n, count)).astype(np.int64))
    return [int(c) for c in grid]


@dataclass(frozen=True, eq=False)
class SimulatedCampaign:
    model: GroundTruthModel
    seed: int
    records: tuple[IncidenceRecord, ...]
    truth_trace: tuple[TruthPoint, ...]
    first_seen: np.ndarray = field(repr=False)

    def truth_at(self, n: int) -> TruthPoint:
        """Exact truth after the first ``n`` inputs (any ``0 <= n <= len``)."""
        unseen = self.first_seen >= n
        return TruthPoint(
            n, int(self.model.s_true - np.count_nonzero(unseen)),
            true_discovery_probability(self.model, unseen),
        )

    def sidecar(self) -> dict:
        return {
            "model": self.model.to_dict(),
            "seed": self.seed,
            "n": len(self.records),
            "truth_trace": [t.__dict__ for t in self.truth_trace],
        }


def _draw_abundance(model, n, rng):
    return rng.choice(model.s_true, size=n, p=model.probabilities)


def _draw_incidence(model, n, rng, chunk=1024):
    out = []
    for start in range(0, n, chunk):
        rows = min(chunk, n - start)
        hits = rng.random((rows, model.s_true)) < model.probabilities
        out.extend(np.flatnonzero(row) for row in hits)
    return out


def simulate(
    model: GroundTruthModel,
    n: int,
    seed: int = 0,
    checkpoints: Sequence[int] | None = None,
    rng: np.random.Generator | None = None,
) -> SimulatedCampaign:
    """Sample ``n`` inputs from ``model``; deterministic in ``seed``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = rng if rng is not None else generator(seed)
    first_seen = np.full(model.s_true, n, dtype=np.int64)
    if model.mode == "abundance":
        draws = _draw_abundance(model, n, rng)
        seen, first = np.unique(draws, return_index=True)
        first_seen[seen] = first
        species = [(int(d),) for d in draws]
    else:
        species = _draw_incidence(model, n, rng)
        for j, row in enumerate(species):
            fresh = row[first_seen[row] == n]
            first_seen[fresh] = j
    records = tuple(
        IncidenceRecord(f"t{j}", frozenset(model.species_id(int(i)) for i in sp), j)
        for j, sp in enumerate(species)
    )
    checkpoints = default_checkpoints(n) if checkpoints is None else list(checkpoints)
    campaign = SimulatedCampaign(model, seed, records, (), first_seen)
    trace = tuple(campaign.truth_at(c) for c in checkpoints if 0 <= c <= n)
    object.__setattr__(campaign, "truth_trace", trace)
    return campaign


# -- estimator evaluation ---------------------------------------------------

@dataclass(frozen=True)
class EvaluationRow:
    estimator: str
    n: int
    reps: int
    mean_error: float
    rmse: float
    mean_abs_error: float
    mean_rel_error: float | None
    coverage: float | None = None


def _z(level):
    from statistics import NormalDist

    return NormalDist().inv_cdf(0.5 + level / 2)


def _replicate(model, n, rng, checkpoints, horizon_factor, z):
    """Errors (estimate, truth) per (estimator, checkpoint) for one replicate."""
    total = n + max(int(round(horizon_factor * c)) for c in checkpoints)
    camp = simulate(model, total, checkpoints=[], rng=rng)
    acc = Accumulator()
    out = {}
    pos = 0
    for c in checkpoints:
        acc.extend(camp.records[pos:c])
        pos = c
        snap = acc.snapshot()
        truth = camp.truth_at(c)
        try:
            rep = full_report(snap)
        except EmptyCampaign:
            continue
        s = model.s_true
        out[("u_hat", c)] = (rep.u_hat, truth.u, abs(rep.u_hat - truth.u) <= z * rep.u_se)
        out[("s_hat", c)] = (rep.s_hat, s, None)
        out[("f0_hat", c)] = (rep.f0_hat, s - truth.s_obs, None)
        out[("g_hat", c)] = (rep.g_hat, truth.s_obs / s, None)
        m = int(round(horizon_factor * c))
        if m < 1:
            continue
        later = camp.truth_at(c + m)
        true_f0 = float(s - truth.s_obs)
        for tag, f0 in (("", rep.f0_hat), ("_oracle_f0", true_f0)):
            out[("s_extrap" + tag, c)] = (
                extrapolate_species(rep.s_obs, rep.n, rep.f1, f0, m), later.s_obs, None)
            out[("u_extrap" + tag, c)] = (
                extrapolate_risk(rep.n, rep.f1, f0, m), later.u, None)
    return out


def evaluate_estimators(
    model: GroundTruthModel,
    n: int,
    reps: int,
    seed: int = 0,
    checkpoints: Sequence[int] | None = None,
    horizon_factor: float = 1.0,
    level: float = 0.95,
    workers: int = 1,
) -> list[EvaluationRow]:
    """Bias / RMSE table of every estimator at every checkpoint.

    Extrapolations from checkpoint ``c`` are scored at ``c + m`` with
    ``m = round(horizon_factor * c)``; the ``*_oracle_f0`` rows feed the true
    unseen count instead of Chao1. ``coverage`` is reported for ``u_hat`` as
    the share of replicates whose normal interval at ``level`` contains
    the true discovery probability.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    checkpoints = default_checkpoints(n) if checkpoints is None else sorted(set(checkpoints))
    if not checkpoints or checkpoints[0] < 1 or checkpoints[-1] > n:
        raise ValueError("checkpoints must lie in [1, n]")
    z = _z(level)
    gens = spawn_generators(seed, reps)

    def run(g):
        return _replicate(model, n, g, checkpoints, horizon_factor, z)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(run, gens))
    else:
        results = [run(g) for g in gens]

    keys = []
    for r in results:
        keys.extend(k for k in r if k not in keys)
    rows = []
    for name, c in sorted(keys, key=lambda k: (k[1], k[0])):
        triples = [r[(name, c)] for r in results if (name, c) in r]
        est = np.array([t[0] for t in triples])
        tru = np.array([t[1] for t in triples], dtype=np.float64)
        err = est - tru
        nz = tru != 0
        rel = float(np.mean(np.abs(err[nz]) / np.abs(tru[nz]))) if nz.any() else None
        cov = None
        if triples[0][2] is not None:
            cov = float(np.mean([t[2] for t in triples]))
        rows.append(EvaluationRow(
            estimator=name,
            n=c,
            reps=len(triples),
            mean_error=float(np.mean(err)),
            rmse=float(np.sqrt(np.mean(err ** 2))),
            mean_abs_error=float(np.mean(np.abs(err))),
            mean_rel_error=rel,
            coverage=cov,
        ))
    return rows
