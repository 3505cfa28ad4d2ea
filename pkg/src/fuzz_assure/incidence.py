"""Sufficient statistics of a fuzzing campaign.

A campaign is a stream of test inputs, each exhibiting a set of species
(branches, killed mutants, crash signatures, ...). Every estimator in this
package only needs the number of inputs ``n`` and, for each species, the
number of inputs that exhibited it. From those counts we keep the
frequency-of-frequencies histogram ``f`` where ``f[k]`` is the number of
species seen in exactly ``k`` inputs.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, NamedTuple

UINT64_MAX = 2**64 - 1


@dataclass(frozen=True)
class IncidenceRecord:
    """One test input and the species it exhibited."""

    input_id: str
    species: frozenset[str] = frozenset()
    order: int | None = None

    def __post_init__(self):
        if not isinstance(self.species, frozenset):
            object.__setattr__(self, "species", frozenset(self.species))
        for s in self.species:
            if not isinstance(s, str) or not s:
                raise ValueError(f"species id must be a non-empty string, got {s!r}")
        if self.order is not None and self.order < 0:
            raise ValueError("order must be non-negative")


def _histogram(counts: Iterable[int]) -> dict[int, int]:
    return dict(Counter(counts))


def _freeze(d):
    return MappingProxyType(dict(d))


@dataclass(frozen=True, eq=False)
class CampaignSnapshot:
    """Immutable view of a campaign's statistics.

    Build one with :func:`from_records`, :class:`Accumulator` or
    :func:`from_counts`; the constructor trusts its arguments.
    """

    n: int = 0
    species_counts: Mapping[str, int] = field(default_factory=dict)
    f: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "species_counts", _freeze(self.species_counts))
        object.__setattr__(self, "f", _freeze(self.f))

    @property
    def s_obs(self) -> int:
        return len(self.species_counts)

    def __eq__(self, other):
        if not isinstance(other, CampaignSnapshot):
            return NotImplemented
        return (
            self.n == other.n
            and dict(self.species_counts) == dict(other.species_counts)
            and dict(self.f) == dict(other.f)
        )

    def __hash__(self):
        return hash((self.n, frozenset(self.species_counts.items())))

    def restrict(self, prefix: str) -> CampaignSnapshot:
        """Keep only species whose id starts with ``prefix``; ``n`` is unchanged."""
        kept = {s: c for s, c in self.species_counts.items() if s.startswith(prefix)}
        return CampaignSnapshot(self.n, kept, _histogram(kept.values()))

    def check(self) -> None:
        """Assert the histogram invariants; raises AssertionError on violation."""
        counts = list(self.species_counts.values())
        assert all(1 <= c <= self.n for c in counts), "count outside [1, n]"
        assert sum(self.f.values()) == len(counts)
        assert sum(k * fk for k, fk in self.f.items()) == sum(counts)
        assert dict(self.f) == _histogram(counts)


EMPTY = CampaignSnapshot()


class SnapshotStats(NamedTuple):
    n: int
    s_obs: int
    f1: int
    f2: int


def snapshot_stats(snapshot: CampaignSnapshot) -> SnapshotStats:
    return SnapshotStats(
        snapshot.n,
        len(snapshot.species_counts),
        snapshot.f.get(1, 0),
        snapshot.f.get(2, 0),
    )


class Accumulator:
    """Single-writer streaming accumulator.

    Not thread-safe; use one accumulator per worker and :func:`merge` the
    resulting snapshots.
    """

    def __init__(self, snapshot: CampaignSnapshot | None = None):
        snapshot = snapshot or EMPTY
        self.n = snapshot.n
        self.counts: dict[str, int] = dict(snapshot.species_counts)
        self.f: dict[int, int] = dict(snapshot.f)

    def observe(self, record: IncidenceRecord) -> None:
        if self.n == UINT64_MAX:
            raise OverflowError("input count exceeds 64-bit range")
        self.n += 1
        counts, f = self.counts, self.f
        for s in record.species:
            c = counts.get(s, 0)
            if c:
                if f[c] == 1:
                    del f[c]
                else:
                    f[c] -= 1
            counts[s] = c + 1
            f[c + 1] = f.get(c + 1, 0) + 1

    def extend(self, records: Iterable[IncidenceRecord]) -> Accumulator:
        for r in records:
            self.observe(r)
        return self

    def snapshot(self) -> CampaignSnapshot:
        return CampaignSnapshot(self.n, self.counts, self.f)


def observe(snapshot: CampaignSnapshot, record: IncidenceRecord) -> CampaignSnapshot:
    """Return a new snapshot with ``record`` folded in."""
    acc = Accumulator(snapshot)
    acc.observe(record)
    return acc.snapshot()


def from_records(records: Iterable[IncidenceRecord]) -> CampaignSnapshot:
    """Batch construction by direct counting (no incremental histogram)."""
    n = 0
    counts: Counter[str] = Counter()
    for r in records:
        n += 1
        counts.update(r.species)
    if n > UINT64_MAX:
        raise OverflowError("input count exceeds 64-bit range")
    return CampaignSnapshot(n, dict(counts), _histogram(counts.values()))


def from_counts(n: int, species_counts: Mapping[str, int]) -> CampaignSnapshot:
    """Snapshot from precomputed incidence counts (validated)."""
    if n < 0:
        raise ValueError("n must be non-negative")
    for s, c in species_counts.items():
        if not 1 <= c <= n:
            raise ValueError(f"count for {s!r} must lie in [1, n], got {c}")
    return CampaignSnapshot(n, dict(species_counts), _histogram(species_counts.values()))


def merge(a: CampaignSnapshot, b: CampaignSnapshot) -> CampaignSnapshot:
    """Combine snapshots built from disjoint record streams."""
    n = a.n + b.n
    if n > UINT64_MAX:
        raise OverflowError("input count exceeds 64-bit range")
    counts = Counter(a.species_counts)
    counts.update(b.species_counts)
    if any(c > UINT64_MAX for c in counts.values()):
        raise OverflowError("species count exceeds 64-bit range")
    return CampaignSnapshot(n, dict(counts), _histogram(counts.values()))
