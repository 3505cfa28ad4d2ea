"""Point estimators for residual risk, richness and extrapolation.

All functions are pure and work on plain counts, so they can be fed
snapshot statistics or hypothetical numbers alike. Power terms are
evaluated as ``exp(k * log1p(-x))`` so that horizons of 1e9 and beyond keep
full precision when ``x`` is tiny.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import NamedTuple

from .errors import EmptyCampaign, InvalidThreshold
from .incidence import CampaignSnapshot, snapshot_stats

MAX_HORIZON = 2**63 - 1


def _require_inputs(n):
    if n < 1:
        raise EmptyCampaign("estimate undefined for an empty campaign (n = 0)")


def good_turing(n: int, f1: int) -> float:
    """Probability that the next input exhibits an unseen species, ``f1 / n``.

    With incidence data a single input may carry several singletons, so
    ``f1 > n`` is possible; the result is clamped to 1.
    """
    _require_inputs(n)
    if f1 < 0:
        raise ValueError("f1 must be non-negative")
    return min(1.0, f1 / n)


def good_turing_se(n: int, f1: int, f2: int) -> float:
    """Standard error of ``good_turing`` as an estimate of the true discovery
    probability, ``sqrt(f1 + 2*f2 - f1**2/n) / n`` (Esty, 1983)."""
    _require_inputs(n)
    return math.sqrt(max(0.0, f1 + 2 * f2 - f1 * f1 / n)) / n


class Chao1(NamedTuple):
    s_hat: float
    f0_hat: float


def chao1(s_obs: int, f1: int, f2: int) -> Chao1:
    """Asymptotic species richness.

    Uses ``f1**2 / (2*f2)`` unseen species when doubletons exist and the
    bias-corrected ``f1*(f1-1)/2`` otherwise.
    """
    if min(s_obs, f1, f2) < 0:
        raise ValueError("counts must be non-negative")
    if s_obs < f1 + f2:
        raise ValueError(f"s_obs={s_obs} is smaller than f1 + f2 = {f1 + f2}")
    if f2 > 0:
        f0 = f1 * f1 / (2 * f2)
    else:
        f0 = f1 * (f1 - 1) / 2
    s_hat = s_obs + f0
    # keep f0_hat == s_hat - s_obs exact in floating point
    return Chao1(s_hat, s_hat - s_obs)


def _decay_log(n, f1, f0_hat):
    # log of the per-input survival factor n*f0 / (n*f0 + f1) = 1 - x
    scaled = n * f0_hat
    x = f1 / (scaled + f1)
    if x < 0.5:
        return math.log1p(-x)
    return math.log(scaled) - math.log(scaled + f1)


def extrapolate_species(s_obs: int, n: int, f1: int, f0_hat: float, m_star: int) -> float:
    """Expected number of species after ``m_star`` more inputs."""
    _require_inputs(n)
    if f0_hat < 0 or m_star < 0:
        raise ValueError("f0_hat and m_star must be non-negative")
    if m_star == 0 or f1 == 0 or f0_hat == 0:
        return float(s_obs)
    return s_obs + f0_hat * -math.expm1(m_star * _decay_log(n, f1, f0_hat))


def extrapolate_risk(n: int, f1: int, f0_hat: float, m_star: int) -> float:
    """Discovery probability after ``m_star`` more inputs."""
    _require_inputs(n)
    if f0_hat < 0 or m_star < 0:
        raise ValueError("f0_hat and m_star must be non-negative")
    if f1 == 0 or f0_hat == 0:
        return 0.0
    return good_turing(n, f1) * math.exp((m_star + 1) * _decay_log(n, f1, f0_hat))


def feasible_coverage(s_obs: int, s_hat: float) -> float:
    """Fraction of discoverable species already discovered, ``s_obs / s_hat``."""
    if s_hat <= 0:
        raise EmptyCampaign("feasible coverage undefined: no species discoverable")
    if s_obs < 0 or s_hat < s_obs:
        raise ValueError("require 0 <= s_obs <= s_hat")
    return s_obs / s_hat


@dataclass(frozen=True)
class StopPlan:
    m_star: int
    reachable: bool
    theta: float
    risk_now: float
    risk_at_m_star: float


def stop_plan(n: int, f1: int, f0_hat: float, theta: float) -> StopPlan:
    """Smallest number of additional inputs that brings the extrapolated
    residual risk to ``theta`` or below.

    The closed-form answer is checked (and nudged if rounding put it off by
    one) by evaluating :func:`extrapolate_risk` at ``m*`` and ``m* - 1``.
    ``reachable`` is False only if the answer exceeds ``MAX_HORIZON``.
    """
    if not 0 < theta < 1 or math.isnan(theta):
        raise InvalidThreshold(f"theta must lie in (0, 1), got {theta}")
    _require_inputs(n)
    if f0_hat < 0:
        raise ValueError("f0_hat must be non-negative")

    def risk(m):
        return extrapolate_risk(n, f1, f0_hat, m)

    u_now = good_turing(n, f1)
    if risk(0) <= theta:
        return StopPlan(0, True, theta, u_now, risk(0))

    # u_now * r**(m+1) <= theta  <=>  m + 1 >= log(theta/u_now) / log(r)
    bound = math.log(theta / u_now) / _decay_log(n, f1, f0_hat)
    if bound - 1 > MAX_HORIZON:
        return StopPlan(MAX_HORIZON, False, theta, u_now, risk(MAX_HORIZON))
    m = max(0, math.ceil(bound) - 1)
    while risk(m) > theta:
        m += 1
    while m > 0 and risk(m - 1) <= theta:
        m -= 1
    if m > MAX_HORIZON:
        return StopPlan(MAX_HORIZON, False, theta, u_now, risk(MAX_HORIZON))
    return StopPlan(m, True, theta, u_now, risk(m))


def stop_rule(n: int, f1: int, f0_hat: float, theta: float) -> int:
    """Required additional inputs ``m*``; see :func:`stop_plan`."""
    return stop_plan(n, f1, f0_hat, theta).m_star


@dataclass(frozen=True)
class AssuranceReport:
    n: int
    s_obs: int
    f1: int
    f2: int
    u_hat: float
    u_se: float
    f0_hat: float
    s_hat: float
    g_hat: float
    s_hat_source: str = "chao1"

    def to_dict(self):
        return asdict(self)


def full_report(snapshot: CampaignSnapshot, s_total: float | None = None) -> AssuranceReport:
    """All point estimates from one snapshot.

    ``s_total`` replaces the Chao1 richness estimate when the number of
    discoverable species is known (e.g. the number of generated mutants).
    A campaign that exhibited no species at all reports ``g_hat = 1``.
    """
    n, s_obs, f1, f2 = snapshot_stats(snapshot)
    _require_inputs(n)
    if s_total is None:
        s_hat, f0_hat = chao1(s_obs, f1, f2)
        source = "chao1"
    else:
        if s_total < s_obs:
            raise ValueError(f"known species total {s_total} is below observed {s_obs}")
        s_hat, f0_hat = float(s_total), float(s_total - s_obs)
        source = "given"
    g_hat = feasible_coverage(s_obs, s_hat) if s_hat > 0 else 1.0
    return AssuranceReport(
        n=n,
        s_obs=s_obs,
        f1=f1,
        f2=f2,
        u_hat=good_turing(n, f1),
        u_se=good_turing_se(n, f1, f2),
        f0_hat=float(f0_hat),
        s_hat=float(s_hat),
        g_hat=g_hat,
        s_hat_source=source,
    )


class CurvePoint(NamedTuple):
    m_star: int
    s_pred: float
    u_pred: float


@dataclass(frozen=True)
class ExtrapolationCurve:
    base: AssuranceReport
    points: tuple[CurvePoint, ...]


def horizon_grid(horizon: int, steps: int) -> list[int]:
    """``steps`` evenly spaced integers in ``(0, horizon]`` ending at ``horizon``."""
    if horizon < 1 or steps < 1:
        raise ValueError("horizon and steps must be >= 1")
    if steps > horizon:
        raise ValueError(f"steps ({steps}) cannot exceed horizon ({horizon})")
    return [-(-k * horizon // steps) for k in range(1, steps + 1)]


def extrapolation_curve(
    snapshot: CampaignSnapshot,
    horizon: int,
    steps: int,
    s_total: float | None = None,
) -> ExtrapolationCurve:
    base = full_report(snapshot, s_total=s_total)
    points = tuple(
        CurvePoint(
            m,
            extrapolate_species(base.s_obs, base.n, base.f1, base.f0_hat, m),
            extrapolate_risk(base.n, base.f1, base.f0_hat, m),
        )
        for m in horizon_grid(horizon, steps)
    )
    return ExtrapolationCurve(base, points)
