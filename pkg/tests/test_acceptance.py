"""Acceptance criteria.

Each test prints one ``[PASS]``/``[FAIL]`` line with the measured value and
the tolerance it was held to. Seeds are fixed so every run sees the same
numbers. Run alone with ``pytest tests/test_acceptance.py -v``.
"""

import io
import json
import math
import random
import time

import numpy as np
import pytest

from fuzz_assure.bootstrap import bootstrap_ci
from fuzz_assure.cli import main
from fuzz_assure.errors import DegenerateSeries, EmptyCampaign, SeriesTooShort
from fuzz_assure.estimators import (
    chao1,
    extrapolate_risk,
    extrapolate_species,
    extrapolation_curve,
    feasible_coverage,
    full_report,
    good_turing,
    good_turing_se,
    stop_plan,
)
from fuzz_assure.flakiness import count_turning_points, turning_point_test
from fuzz_assure.incidence import (
    EMPTY,
    Accumulator,
    IncidenceRecord,
    from_counts,
    from_records,
    merge,
    observe,
    snapshot_stats,
)
from fuzz_assure.rng import generator, spawn_generators
from fuzz_assure.simulator import build_model, simulate

SEED = 0
S_TRUE = 1000
N = 1000


def verdict(capsys, number, ok, detail):
    with capsys.disabled():
        print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}")
    assert ok, detail


def uniform_campaigns(reps, n, seed=SEED):
    model = build_model(S_TRUE, "uniform")
    return model, [simulate(model, n, checkpoints=[], rng=g) for g in spawn_generators(seed, reps)]


# -- 1 ------------------------------------------------------------------------

def _trivial_examples():
    rec = lambda *s: IncidenceRecord("t", frozenset(s))  # noqa: E731
    snap = EMPTY
    for r in (rec("a"), rec("a", "b"), rec("c"), rec("c")):
        snap = observe(snap, r)
    one = observe(EMPTY, rec("a", "b"))
    ref = from_counts(100, {**{f"a{i}": 1 for i in range(10)}, **{f"b{i}": 2 for i in range(5)},
                            **{f"c{i}": 3 for i in range(35)}})
    sat = from_counts(10, {"x": 3, "y": 4})
    mono = turning_point_test(np.arange(100.0), 0.05)
    alt = turning_point_test([i % 2 for i in range(100)], 0.05)
    rep, rep_sat = full_report(ref), full_report(sat)

    def raises(exc, fn, *a):
        try:
            fn(*a)
        except exc:
            return True
        return False

    checks = {
        "observe first record": (one.n, one.s_obs, one.f.get(1)) == (1, 2, 2),
        "observe four records": (snap.n, snap.s_obs, dict(snap.species_counts), snap.f.get(1),
                                 snap.f.get(2)) == (4, 3, {"a": 2, "b": 1, "c": 2}, 1, 2),
        "stats empty": snapshot_stats(EMPTY) == (0, 0, 0, 0),
        "stats counts": snapshot_stats(from_counts(3, {"a": 1, "b": 1, "c": 2})) == (3, 3, 2, 1),
        "merge identity": merge(snap, EMPTY) == snap,
        "merge additivity": merge(observe(EMPTY, rec("a")), observe(EMPTY, rec("a"))).f.get(2) == 1,
        "good-turing 10/100": good_turing(100, 10) == 0.1,
        "good-turing no singletons": good_turing(500, 0) == 0.0,
        "good-turing empty": raises(EmptyCampaign, good_turing, 0, 0),
        "chao1 f2>0": chao1(50, 10, 5).s_hat == 60.0,
        "chao1 otherwise": chao1(50, 4, 0).s_hat == 56.0,
        "chao1 nothing unseen": chao1(50, 0, 0).s_hat == 50.0,
        "species m*=0": extrapolate_species(50, 100, 10, 10, 0) == 50.0,
        "risk f1=0": all(extrapolate_risk(100, 0, 10, m) == 0.0 for m in (0, 1, 10**9)),
        "risk below good-turing": extrapolate_risk(100, 10, 10, 0) < 0.1,
        "coverage 50/60": feasible_coverage(50, 60) == 50 / 60,
        "coverage full": feasible_coverage(50, 50) == 1.0,
        "stop rule satisfied": stop_plan(100, 10, 10, 0.5).m_star == 0,
        "report reference": (rep.u_hat, rep.s_hat, rep.f0_hat) == (0.1, 60.0, 10.0)
        and rep.g_hat == 50 / 60,
        "report saturated": (rep_sat.u_hat, rep_sat.s_hat, rep_sat.g_hat) == (0.0, 2.0, 1.0),
        "curve single step": [p.m_star for p in extrapolation_curve(ref, 500, 1).points] == [500],
        "tp monotone": mono.t_count == 0 and mono.iid_rejected,
        "tp alternating": alt.t_count == 98 and alt.iid_rejected,
        "tp too short": raises(SeriesTooShort, turning_point_test, [1.0, 2.0]),
        "tp constant": raises(DegenerateSeries, turning_point_test, [1.0] * 10),
        "uniform model": np.all(build_model(10, "uniform").probabilities == 0.1),
        "zipf model": np.allclose(build_model(2, "zipf:1").probabilities, [2 / 3, 1 / 3],
                                  rtol=0, atol=1e-15),
    }
    return checks


def test_criterion_1_exact_identities(capsys):
    start = time.perf_counter()
    checks = _trivial_examples()
    elapsed = time.perf_counter() - start
    failed = [k for k, ok in checks.items() if not ok]
    verdict(capsys, 1, not failed and elapsed < 1.0,
            f"{len(checks) - len(failed)}/{len(checks)} exact identities, {elapsed:.3f}s (< 1 s)"
            + (f"; failed: {failed}" if failed else ""))


# -- 2 ------------------------------------------------------------------------

def test_criterion_2_good_turing_accuracy(capsys):
    start = time.perf_counter()
    _, camps = uniform_campaigns(200, N)
    errors, within = [], 0
    for camp in camps:
        n, _, f1, f2 = snapshot_stats(from_records(camp.records))
        u_hat, se = good_turing(n, f1), good_turing_se(n, f1, f2)
        u = camp.truth_at(N).u
        errors.append(abs(u_hat - u))
        within += abs(u_hat - u) <= 3 * se
    elapsed = time.perf_counter() - start
    mae, share = float(np.mean(errors)), within / len(camps)
    verdict(capsys, 2, mae < 0.02 and share >= 0.95 and elapsed < 30,
            f"mean |U_hat - U| = {mae:.5f} (< 0.02), within 3 SE on {share:.3f} (>= 0.95), "
            f"{elapsed:.1f}s (< 30 s)")


# -- 3 ------------------------------------------------------------------------

def test_criterion_3_chao1(capsys):
    _, camps = uniform_campaigns(100, N)
    rel = []
    for camp in camps:
        rep = full_report(from_records(camp.records))
        rel.append(abs(rep.s_hat - S_TRUE) / S_TRUE)
    mre = float(np.mean(rel))

    rng = random.Random(SEED)
    violations = 0
    trials = 10_000
    for _ in range(trials):
        f1, f2 = rng.randint(0, 10**4), rng.randint(0, 10**4)
        s_obs = f1 + f2 + rng.randint(0, 10**4)
        s_hat, f0 = chao1(s_obs, f1, f2)
        violations += not (s_hat >= s_obs and f0 >= 0)
    verdict(capsys, 3, mre < 0.05 and violations == 0,
            f"mean |S_hat - S|/S = {mre:.4f} (< 0.05); S_hat >= S(n) on "
            f"{trials - violations}/{trials} random histograms")


# -- 4 ------------------------------------------------------------------------

def test_criterion_4_extrapolation(capsys):
    _, camps = uniform_campaigns(200, 2 * N)
    preds, actual = [], []
    for camp in camps:
        rep = full_report(from_records(camp.records[:N]))
        preds.append(extrapolate_species(rep.s_obs, rep.n, rep.f1, rep.f0_hat, N))
        actual.append(camp.truth_at(2 * N).s_obs)
    preds, actual = np.array(preds), np.array(actual, dtype=float)
    per_rep = float(np.mean(np.abs(preds - actual) / actual))
    of_means = abs(preds.mean() - actual.mean()) / actual.mean()
    verdict(capsys, 4, per_rep < 0.05 and of_means < 0.05,
            f"mean per-replicate relative error {per_rep:.4f}, relative error of means "
            f"{of_means:.4f} (both < 0.05)")


def test_criterion_4_continuation_of_one_campaign():
    # one campaign continued 200 times from the same state
    model = build_model(S_TRUE, "uniform")
    base = simulate(model, N, seed=SEED, checkpoints=[])
    rep = full_report(from_records(base.records))
    seen = np.zeros(S_TRUE, dtype=bool)
    seen[base.first_seen < N] = True
    totals = []
    for g in spawn_generators(SEED + 1, 200):
        more = g.choice(S_TRUE, size=N, p=model.probabilities)
        s = seen.copy()
        s[more] = True
        totals.append(s.sum())
    pred = extrapolate_species(rep.s_obs, rep.n, rep.f1, rep.f0_hat, N)
    assert abs(pred - np.mean(totals)) / np.mean(totals) < 0.05


# -- 5 ------------------------------------------------------------------------

def test_criterion_5_risk_and_stop_rule(capsys):
    rng = generator(SEED)
    tuples = 10_000
    bad_forward = bad_decrease = checked = 0
    for _ in range(tuples):
        n = int(rng.integers(1, 10**6))
        f1 = int(rng.integers(0, min(n, 10**4) + 1))
        f0 = float(rng.uniform(0, 10**4)) if rng.random() < 0.95 else 0.0
        theta = float(10 ** rng.uniform(-6, -0.01))
        plan = stop_plan(n, f1, f0, theta)
        m = plan.m_star
        if not extrapolate_risk(n, f1, f0, m) <= theta:
            bad_forward += 1
        if m >= 1 and not theta < extrapolate_risk(n, f1, f0, m - 1):
            bad_forward += 1
        if f1 > 0 and f0 > 0:
            checked += 1
            k = int(rng.integers(0, max(m, 1) + 1))
            if not extrapolate_risk(n, f1, f0, k + 1) < extrapolate_risk(n, f1, f0, k):
                bad_decrease += 1
    verdict(capsys, 5, bad_forward == 0 and bad_decrease == 0,
            f"forward-consistency violations {bad_forward}/{tuples}; "
            f"strict-decrease violations {bad_decrease}/{checked}")


# -- 6 ------------------------------------------------------------------------

def test_criterion_6_turning_point(capsys):
    gens = spawn_generators(SEED, 1000)
    rejected = sum(turning_point_test(g.random(1000), 0.05).iid_rejected for g in gens)
    rate = rejected / 1000

    rng = generator(SEED + 1)
    mismatches = 0
    for _ in range(1000):
        v = rng.normal(size=int(rng.integers(3, 300)))
        if count_turning_points(v) != count_turning_points(v ** 3):
            mismatches += 1
    verdict(capsys, 6, 0.03 <= rate <= 0.07 and mismatches == 0,
            f"rejection rate {rate:.3f} in [0.03, 0.07]; rank invariance mismatches "
            f"{mismatches}/1000")


# -- 7 ------------------------------------------------------------------------

def _recount(records):
    counts = {}
    for r in records:
        for s in r.species:
            counts[s] = counts.get(s, 0) + 1
    f = {}
    for c in counts.values():
        f[c] = f.get(c, 0) + 1
    return counts, f


def test_criterion_7_stream_batch_merge(capsys):
    rng = random.Random(SEED)
    streams = 60
    failures = 0
    for _ in range(streams):
        size = rng.randint(0, 1000)
        pool = rng.randint(1, 400)
        records = [IncidenceRecord(f"t{i}", frozenset(
            f"s{rng.randrange(pool)}" for _ in range(rng.randint(0, 6)))) for i in range(size)]
        folded = Accumulator().extend(records).snapshot()
        batch = from_records(records)
        shards = sorted(rng.sample(range(size + 1), min(size + 1, rng.randint(1, 8))))
        bounds = [0, *shards, size]
        merged = EMPTY
        for a, b in zip(bounds, bounds[1:]):
            merged = merge(merged, from_records(records[a:b]))
        counts, f = _recount(records)
        ok = (folded == batch == merged and dict(folded.species_counts) == counts
              and dict(folded.f) == f and folded.n == size)
        failures += not ok
    verdict(capsys, 7, failures == 0,
            f"{streams - failures}/{streams} random streams (<= 1000 inputs) identical across "
            f"fold, batch, shard-merge and recount")


# -- 8 ------------------------------------------------------------------------

def _pipeline(tmp_path, dist, tag):
    path = tmp_path / f"{tag}.jsonl"
    outputs = []
    for argv in (
        ["simulate", "--dist", dist, "--species", str(S_TRUE), "--tests", str(N),
         "--seed", "11", "--out", str(path)],
        ["analyze", str(path)],
        ["extrapolate", str(path), "--horizon", str(10 * N), "--steps", "20"],
        ["stoprule", str(path), "--risk", "0.001"],
    ):
        out = io.StringIO()
        code = main(argv, out=out)
        if code != 0:
            raise RuntimeError(f"{argv[0]} exited with {code}")
        outputs.append(out.getvalue().replace(str(tmp_path), "<tmp>"))
    outputs.append(path.read_bytes())
    outputs.append((tmp_path / f"{tag}.jsonl.truth.json").read_bytes())
    json.loads(outputs[1])
    return outputs


DISTS = ["uniform", "zipf:1.2", "geometric:0.995", "endemic:0.9,4"]


def test_criterion_8_end_to_end(capsys, tmp_path):
    start = time.perf_counter()
    identical = []
    for dist in DISTS:
        tag = dist.replace(":", "_").replace(",", "_").replace(".", "p")
        (tmp_path / "a").mkdir(exist_ok=True)
        (tmp_path / "b").mkdir(exist_ok=True)
        first = _pipeline(tmp_path / "a", dist, tag)
        second = _pipeline(tmp_path / "b", dist, tag)
        identical.append(first == second)
    elapsed = time.perf_counter() - start
    verdict(capsys, 8, all(identical) and elapsed < 60,
            f"simulate->analyze->extrapolate->stoprule byte-identical on "
            f"{sum(identical)}/{len(DISTS)} descriptors, {elapsed:.1f}s (< 60 s)")


# -- 9 ------------------------------------------------------------------------

def test_criterion_9_bootstrap_coverage(capsys):
    _, camps = uniform_campaigns(200, N)
    covered = 0
    for i, camp in enumerate(camps):
        ci = bootstrap_ci(camp.records, "u_hat", reps=1000, level=0.95, seed=SEED + i)
        covered += ci.lower <= camp.truth_at(N).u <= ci.upper
    rate = covered / len(camps)
    verdict(capsys, 9, 0.90 <= rate <= 0.99,
            f"95% bootstrap intervals for U_hat cover true U in {rate:.3f} of 200 campaigns "
            f"(band [0.90, 0.99])")
