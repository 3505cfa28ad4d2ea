"""Turning point test for independence of repeated observations.

Used to decide whether a flaky test behaves like an IID random variable
(non-determinism) or drifts between runs (statefulness). Under IID the
number of turning points ``T`` in a series of length ``n`` is
asymptotically normal with mean ``2(n-2)/3`` and variance ``(16n-29)/90``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateSeries, SeriesTooShort

LOW_POWER_LENGTH = 30


@dataclass(frozen=True)
class TurningPointResult:
    n: int
    collapsed_n: int
    t_count: int
    expected: float
    variance: float
    z_score: float
    p_value: float
    alpha: float
    iid_rejected: bool
    ties_collapsed: int
    low_power: bool

    @property
    def warnings(self) -> list[str]:
        out = []
        if self.ties_collapsed:
            out.append(f"{self.ties_collapsed} tied neighbours collapsed before counting")
        if self.low_power:
            out.append(f"series shorter than {LOW_POWER_LENGTH} after collapsing: low power")
        return out

    def to_dict(self):
        d = asdict(self)
        d["warnings"] = self.warnings
        return d


def collapse_ties(values) -> np.ndarray:
    """Replace each run of equal adjacent values by a single value."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        return v
    keep = np.empty(v.size, dtype=bool)
    keep[0] = True
    keep[1:] = v[1:] != v[:-1]
    return v[keep]


def count_turning_points(values) -> int:
    """Number of interior strict local maxima and minima."""
    v = np.asarray(values, dtype=np.float64)
    if v.size < 3:
        return 0
    mid, left, right = v[1:-1], v[:-2], v[2:]
    peaks = (mid > left) & (mid > right)
    troughs = (mid < left) & (mid < right)
    return int(np.count_nonzero(peaks | troughs))


def normal_two_sided_p(z: float) -> float:
    return math.erfc(abs(z) / math.sqrt(2.0))


def turning_point_test(series: Sequence[float], alpha: float = 0.05) -> TurningPointResult:
    """Turning point test of the IID hypothesis.

    Ties are collapsed first and the moments use the collapsed length.
    Raises :class:`SeriesTooShort` for fewer than three observations and
    :class:`DegenerateSeries` if fewer than three values remain after
    collapsing.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    values = np.asarray(series, dtype=np.float64)
    if values.ndim != 1:
        raise ValueError("series must be one-dimensional")
    if values.size < 3:
        raise SeriesTooShort(f"need at least 3 observations, got {values.size}")
    if not np.all(np.isfinite(values)):
        raise ValueError("series contains non-finite values")
    collapsed = collapse_ties(values)
    m = collapsed.size
    if m < 3:
        raise DegenerateSeries(
            f"only {m} distinct run(s) after collapsing ties; test undefined"
        )
    t = count_turning_points(collapsed)
    expected = 2.0 * (m - 2) / 3.0
    variance = (16.0 * m - 29.0) / 90.0
    z = (t - expected) / math.sqrt(variance)
    p = normal_two_sided_p(z)
    return TurningPointResult(
        n=int(values.size),
        collapsed_n=int(m),
        t_count=t,
        expected=expected,
        variance=variance,
        z_score=z,
        p_value=p,
        alpha=alpha,
        iid_rejected=p < alpha,
        ties_collapsed=int(values.size - m),
        low_power=m < LOW_POWER_LENGTH,
    )
