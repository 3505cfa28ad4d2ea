"""Bootstrap confidence intervals with the test input as resampling unit.

Available interval constructions:

``percentile``
    Quantiles of the re-estimated statistic over resamples. Simple, but for
    singleton-driven statistics it is badly biased: resampling turns many
    singletons into doubletons and vice versa, so the resampled ``f1`` sits
    far below the observed one.

``pivot``
    Quantiles of the *estimation error* in the bootstrap world, where the
    observed inputs form the population and the truth is known exactly.
    The interval is ``[est - q_hi, est - q_lo]`` of those errors.

``studentized`` (``u_hat`` only)
    As ``pivot`` but each error is divided by the Good-Turing standard
    error of its resample, and the quantiles are rescaled by the standard
    error of the original campaign. The bootstrap world has fewer
    singletons than the real one, so unscaled errors are too narrow.

``auto`` picks ``studentized`` for ``u_hat`` and ``pivot`` otherwise.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EmptyCampaign
from .estimators import chao1, feasible_coverage, good_turing, good_turing_se
from .incidence import IncidenceRecord, from_records, snapshot_stats
from .rng import spawn_generators

ESTIMATORS = ("u_hat", "s_hat", "f0_hat", "g_hat")
METHODS = ("auto", "studentized", "pivot", "percentile")


@dataclass(frozen=True)
class BootstrapInterval:
    estimator: str
    method: str
    level: float
    point: float
    lower: float
    upper: float
    reps: int
    skipped: int

    def to_dict(self):
        return dict(self.__dict__)


def _estimate(name, n, s_obs, f1, f2):
    if name == "u_hat":
        return good_turing(n, f1)
    s_hat, f0_hat = chao1(s_obs, f1, f2)
    if name == "s_hat":
        return s_hat
    if name == "f0_hat":
        return f0_hat
    return feasible_coverage(s_obs, s_hat)


def _stats(counts, n):
    return (
        n,
        int(np.count_nonzero(counts)),
        int(np.count_nonzero(counts == 1)),
        int(np.count_nonzero(counts == 2)),
    )


class _Design:
    """Flat (record, species) incidence pairs for vectorised resampling."""

    def __init__(self, records):
        index: dict[str, int] = {}
        rec, sp = [], []
        for i, r in enumerate(records):
            for s in sorted(r.species):
                rec.append(i)
                sp.append(index.setdefault(s, len(index)))
        self.n = len(records)
        self.n_species = len(index)
        self.rec = np.asarray(rec, dtype=np.int64)
        self.sp = np.asarray(sp, dtype=np.int64)

    def counts(self, weights):
        c = np.bincount(self.sp, weights=weights[self.rec], minlength=self.n_species)
        return np.rint(c).astype(np.int64)

    def discovery_probability(self, counts):
        # share of population inputs carrying a species absent from `counts`
        unseen = (counts == 0)[self.sp].astype(np.float64)
        per_record = np.bincount(self.rec, weights=unseen, minlength=self.n)
        return float(np.count_nonzero(per_record) / self.n)


def _truth(name, design, counts, s_pop):
    if name == "u_hat":
        return design.discovery_probability(counts)
    s_seen = int(np.count_nonzero(counts))
    if name == "s_hat":
        return float(s_pop)
    if name == "f0_hat":
        return float(s_pop - s_seen)
    return s_seen / s_pop


_BOUNDS = {"u_hat": (0.0, 1.0), "g_hat": (0.0, 1.0), "f0_hat": (0.0, np.inf)}


def bootstrap_ci(
    records: Sequence[IncidenceRecord],
    estimator: str = "u_hat",
    reps: int = 1000,
    level: float = 0.95,
    seed: int = 0,
    method: str = "auto",
    workers: int = 1,
) -> BootstrapInterval:
    """Bootstrap interval for one named estimator.

    Each resample draws ``n`` inputs with replacement using its own random
    stream derived from ``seed``, so the result does not depend on
    ``workers``. Resamples on which the estimator is undefined are skipped
    and counted in ``skipped``.
    """
    if estimator not in ESTIMATORS:
        raise ValueError(f"unknown estimator {estimator!r}; choose from {ESTIMATORS}")
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    if method == "auto":
        method = "studentized" if estimator == "u_hat" else "pivot"
    if method == "studentized" and estimator != "u_hat":
        raise ValueError("studentized intervals are available for u_hat only")
    if reps < 100:
        raise ValueError("reps must be >= 100")
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    records = list(records)
    if not records:
        raise EmptyCampaign("cannot bootstrap an empty campaign")

    design = _Design(records)
    n, s_obs, f1, f2 = snapshot_stats(from_records(records))
    point = _estimate(estimator, n, s_obs, f1, f2)
    se = good_turing_se(n, f1, f2) if method == "studentized" else None
    if estimator == "s_hat":
        bounds = (float(s_obs), np.inf)
    else:
        bounds = _BOUNDS.get(estimator)

    def one(rng):
        draws = rng.integers(0, n, size=n)
        counts = design.counts(np.bincount(draws, minlength=n).astype(np.float64))
        stats = _stats(counts, n)
        try:
            value = _estimate(estimator, *stats)
        except EmptyCampaign:
            return None
        if method == "percentile":
            return value
        error = value - _truth(estimator, design, counts, s_obs)
        if method == "pivot":
            return error
        se_star = good_turing_se(n, stats[2], stats[3])
        if se_star == 0:
            return 0.0 if error == 0 else None
        return error / se_star

    gens = spawn_generators(seed, reps)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(one, gens))
    else:
        results = [one(g) for g in gens]
    values = np.array([v for v in results if v is not None], dtype=np.float64)
    skipped = reps - values.size
    if values.size == 0:
        raise EmptyCampaign("estimator undefined on every resample")

    alpha = 1.0 - level
    q_lo, q_hi = np.quantile(values, [alpha / 2, 1 - alpha / 2])
    if method == "percentile":
        lower, upper = float(q_lo), float(q_hi)
    elif method == "studentized":
        lower, upper = point - float(q_hi) * se, point - float(q_lo) * se
    else:
        lower, upper = point - float(q_hi), point - float(q_lo)
    if bounds is not None:
        lower = float(np.clip(lower, *bounds))
        upper = float(np.clip(upper, *bounds))
    return BootstrapInterval(estimator, method, level, float(point), lower, upper, reps, skipped)
