"""Exit criteria for the rating-game package.

Each test logs one PASS/FAIL line (shown in the pytest terminal summary) and
then asserts.  Tolerances and runtimes are fixed here.
"""
import math
import time

import numpy as np
import pytest

from ratinggame.cascade import CascadeParams, onset_frequencies
from ratinggame.cli import main
from ratinggame.model import GameParams, decide_reader, optimal_action_bayes
from ratinggame.montecarlo import GridSpec, estimate_metric, monotonicity_violations, sweep, trajectory, GridResult
from ratinggame.oracle import evolve_checkpoints, exact_bias, exact_death_probability, limit_rating

REFERENCE = GridSpec()
RHO_NEAR_HALF = 0.500001


def reference_labels(alpha, rho):
    """Grid indices of (alpha, rho) in the default sweep, so probes reuse its streams."""
    i = int(np.argmin(abs(REFERENCE.alphas - alpha)))
    j = int(np.argmin(abs(REFERENCE.rhos - rho))) if rho < 1.0 else len(REFERENCE.rhos)
    return i, j


# 1 -----------------------------------------------------------------------------


def test_c1_decision_rule_equivalence(record):
    start = time.perf_counter()
    mismatches = [
        (x, a, r)
        for a in REFERENCE.alphas
        for r in REFERENCE.rhos
        for x in (0, 1)
        if optimal_action_bayes(x, float(a), float(r)) != decide_reader(x, float(a), float(r))
    ]
    elapsed = time.perf_counter() - start
    cells = len(REFERENCE.alphas) * len(REFERENCE.rhos) * 2
    ok = not mismatches and elapsed < 1.0
    record("C1 decision-rule equivalence", ok, f"{cells} cells, {len(mismatches)} mismatches, {elapsed:.2f}s")
    assert cells == 101 * 50 * 2
    assert not mismatches
    assert elapsed < 1.0


# 2 -----------------------------------------------------------------------------


def test_c2_convergence(record):
    start = time.perf_counter()
    targets = {0.9: 0.9, 0.6: 0.8, 0.4: limit_rating(0.4, 0.8)}
    got = {}
    for alpha in targets:
        t = trajectory(GameParams(alpha=alpha, rho=0.8, horizon=1000), 200, [1000], seed=1)
        got[alpha] = float(t.survivor_mean[-1])
    elapsed = time.perf_counter() - start
    errs = {a: abs(got[a] - targets[a]) for a in targets}
    ok = all(e <= 0.03 for e in errs.values()) and elapsed < 30
    detail = ", ".join(f"alpha={a}: {got[a]:.4f} vs {targets[a]:.4f}" for a in targets)
    record("C2 convergence (rho=0.8, N=1000, 200 trials, +-0.03)", ok, f"{detail}; {elapsed:.1f}s")
    assert targets[0.4] == pytest.approx(8 / 11, abs=1e-12)
    assert all(e <= 0.03 for e in errs.values())
    assert elapsed < 30


# 3 -----------------------------------------------------------------------------

C3_PROBES = [
    # (label, alpha, rho, check, description)
    ("alpha=1, rho~0.5", 1.0, RHO_NEAR_HALF, lambda v: v == 0.0, "== 0"),
    ("alpha=1, rho=0.8", 1.0, 0.8, lambda v: v == 0.0, "== 0"),
    ("alpha=1, rho=1", 1.0, 1.0, lambda v: v == 0.0, "== 0"),
    ("alpha=0, rho=0.8", 0.0, 0.8, lambda v: abs(v - 1.0) <= 0.01, "1 +- 0.01"),
    ("alpha=0.3, rho~0.5", 0.3, RHO_NEAR_HALF, lambda v: v >= 0.95, ">= 0.95"),
    ("alpha=0.7, rho~0.5", 0.7, RHO_NEAR_HALF, lambda v: v <= 0.05, "<= 0.05"),
    ("alpha=0.1, rho=1", 0.1, 1.0, lambda v: v == 0.0, "== 0"),
]


@pytest.fixture(scope="module")
def c3_values():
    start = time.perf_counter()
    values = {}
    for label, alpha, rho, _, _ in C3_PROBES:
        params = GameParams(alpha=alpha, rho=rho, horizon=1000)
        values[label] = estimate_metric(params, 1000, "death_probability", 1, reference_labels(alpha, rho))
    return values, time.perf_counter() - start


@pytest.mark.parametrize("label, alpha, rho, check, want", C3_PROBES, ids=[p[0] for p in C3_PROBES])
def test_c3_death_landmarks(record, c3_values, label, alpha, rho, check, want):
    values, elapsed = c3_values
    est, se = values[label]
    ok = check(est) and elapsed < 120
    record(f"C3 death landmark [{label}]", ok, f"{est:.4f} (se {se:.4f}), want {want}; probe set {elapsed:.1f}s")
    assert elapsed < 120
    assert check(est), f"death probability {est} (se {se}) fails {want}"


# 4 -----------------------------------------------------------------------------


def test_c4_dp_matches_monte_carlo(record):
    start = time.perf_counter()
    rng = np.random.default_rng(20261015)
    n = 10**5
    agree = 0
    worst = 0.0
    for k in range(20):
        alpha = float(rng.uniform(0.0, 1.0))
        rho = float(rng.uniform(0.5, 1.0))
        f = float(rng.uniform(0.0, 1.0))
        params = GameParams(alpha=alpha, rho=max(rho, np.nextafter(0.5, 1)), horizon=30, reader_fraction=f)
        exact = exact_death_probability(params)
        est, _ = estimate_metric(params, n, "death_probability", 1, (k,))
        sigma = math.sqrt(exact * (1.0 - exact) / n)
        within = abs(est - exact) <= 3 * sigma
        agree += within
        if sigma > 0:
            worst = max(worst, abs(est - exact) / sigma)
    elapsed = time.perf_counter() - start
    ok = agree >= 19 and elapsed < 60
    record("C4 DP vs MC death probability (20 triples, N=30, 1e5 trials)", ok,
           f"{agree}/20 within 3 se, worst |z|={worst:.2f}, {elapsed:.1f}s")
    assert agree >= 19
    assert elapsed < 60


# 5 -----------------------------------------------------------------------------


def test_c5_mass_conservation(record):
    horizons = [1, 10, 100, 1000]
    worst = 0.0
    for alpha in (0.0, 0.25, 0.5, 0.75, 1.0):
        for rho in (RHO_NEAR_HALF, 0.6, 0.75, 0.9, 1.0):
            for _, dist in evolve_checkpoints(GameParams(alpha=alpha, rho=rho), horizons):
                worst = max(worst, dist.checksum())
    ok = worst < 1e-12
    record("C5 DP mass conservation (5x5 grid, N in {1,10,100,1000})", ok, f"max |sum-1| = {worst:.3g}")
    assert worst < 1e-12


# 6 -----------------------------------------------------------------------------


def test_c6_cascade_probabilities(record):
    freq = onset_frequencies(CascadeParams(0.8, v_true=1, horizon=8), 10**5, seed=1, verify=True)
    ok = abs(freq["correct"] - 0.64) <= 0.01 and abs(freq["incorrect"] - 0.04) <= 0.01
    record("C6 cascade onset by consumer 3 (rho=0.8, 1e5 runs, +-0.01; flips verified)", ok,
           f"correct {freq['correct']:.4f}, incorrect {freq['incorrect']:.4f}")
    assert abs(freq["correct"] - 0.64) <= 0.01
    assert abs(freq["incorrect"] - 0.04) <= 0.01


# 7 -----------------------------------------------------------------------------

C7_CELLS = [(a, r) for a in (0.3, 0.4, 0.5) for r in (0.55, 0.65)]


@pytest.mark.parametrize("alpha, rho", C7_CELLS, ids=[f"alpha={a}-rho={r}" for a, r in C7_CELLS])
def test_c7_half_readers_bias(record, alpha, rho):
    full = exact_bias(GameParams(alpha=alpha, rho=rho, horizon=500))
    half = exact_bias(GameParams(alpha=alpha, rho=rho, horizon=500, reader_fraction=0.5))
    ok = abs(half) <= abs(full)
    record(f"C7 half-reader bias [alpha={alpha}, rho={rho}]", ok, f"|bias| f=0.5: {abs(half):.4f}, f=1: {abs(full):.4f}")
    assert abs(half) <= abs(full)


# 8 -----------------------------------------------------------------------------

C8_COMMANDS = {
    "run": ["run", "--alpha", "0.45", "--rho", "0.7", "--horizon", "500"],
    "sweep": ["sweep", "--alpha", "0", "1", "0.25", "--rho", "0.6", "0.9", "0.15", "--trials", "50", "--horizon", "80"],
    "trajectory": ["trajectory", "--alpha", "0.6", "--trials", "40", "--horizon", "200"],
    "cascade": ["cascade", "--rho", "0.75", "--trials", "300"],
    "oracle": ["oracle", "--alpha", "0.4", "--rho", "0.8", "--horizon", "100"],
}


@pytest.mark.parametrize("fmt", ["csv", "json"])
@pytest.mark.parametrize("name", list(C8_COMMANDS))
def test_c8_byte_identical_outputs(record, tmp_path, name, fmt):
    outs = []
    for k in range(2):
        path = tmp_path / f"{k}.{fmt}"
        assert main(C8_COMMANDS[name] + ["--seed", "77", "--format", fmt, "--out", str(path)]) == 0
        outs.append(path)
    same = outs[0].read_bytes() == outs[1].read_bytes()
    if name == "run" and fmt == "csv":
        same = same and (tmp_path / "0.summary.json").read_bytes() == (tmp_path / "1.summary.json").read_bytes()
    record(f"C8 determinism [{name} --format {fmt}]", same, "byte-identical" if same else "outputs differ")
    assert same


def test_c8_sweep_worker_invariance(record):
    spec = GridSpec(alpha_start=0.0, alpha_stop=1.0, alpha_step=0.2, rho_start=RHO_NEAR_HALF, rho_stop=1.0,
                    rho_step=0.1, trials=100, horizon=150)
    serial = sweep(spec, 5, workers=1)
    parallel = sweep(spec, 5, workers=3)
    same = serial == parallel
    record("C8 determinism [sweep 1 worker vs 3 workers]", same, f"{spec.shape[0]}x{spec.shape[1]} matrices")
    assert same


# 9 -----------------------------------------------------------------------------


def test_c9_death_monotone_in_quality(record):
    rho_columns = [10, 25, 40]  # reference grid rho = 0.600001, 0.750001, 0.900001
    alphas = REFERENCE.alphas
    matrix = np.empty((len(alphas), len(rho_columns)))
    stderr = np.empty_like(matrix)
    for jj, j in enumerate(rho_columns):
        for i, a in enumerate(alphas):
            params = REFERENCE.params(a, REFERENCE.rhos[j])
            matrix[i, jj], stderr[i, jj] = estimate_metric(params, REFERENCE.trials, REFERENCE.metric, 1, (i, j))
    result = GridResult(spec=REFERENCE, matrix=matrix, stderr=stderr, master_seed=1)
    bad = monotonicity_violations(result)
    pairs = (len(alphas) - 1) * len(rho_columns)
    rhos = ", ".join(f"{REFERENCE.rhos[j]:g}" for j in rho_columns)
    record("C9 death nonincreasing in alpha (reference defaults, 3 sigma per pair)", not bad,
           f"rho in {{{rhos}}}: {len(bad)} violations in {pairs} adjacent pairs")
    assert not bad
