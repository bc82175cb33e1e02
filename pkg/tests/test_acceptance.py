"""Acceptance suite: one test per criterion, each printing a PASS line with
the measured margin (run with -s to see them).  Tolerances are fixed here,
not tuned at runtime.
"""

import csv
import time

import numpy as np

import active_ris as ar
from active_ris.harness import load_config, run_experiment, emit, sweep_sizes
from oracles import oracle_project_box_ellipsoid

DESK_GEOMETRY = ar.Geometry(num_users=8)
DESK_DIMS = (64, 32)


def desk_budget(p_max_dbm=30.0, per_antenna=False, n=32):
    p = ar.dbm_to_watts(p_max_dbm)
    return ar.PowerBudget(p_bs=0.99 * p, p_ris=0.01 * p,
                          eta=np.full(n, 8.0), per_antenna=per_antenna)


def report(num, name, detail):
    print(f"[acceptance {num}] {name}: PASS ({detail})")


def test_criterion_1_surrogate_identity():
    tic = time.perf_counter()
    rng = np.random.default_rng(1)
    worst = 0.0
    for trial in range(100):
        users = int(rng.integers(1, 9))
        m = int(rng.integers(1, 9))
        n = int(rng.integers(1, 9))
        ch = ar.generate_channels(ar.Geometry(num_users=users),
                                  ar.FadingConfig(seed=trial), (m, n))
        w = 1e-2 * (rng.standard_normal((m, users))
                    + 1j * rng.standard_normal((m, users)))
        phi = 3.0 * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
        u = ar.update_u(ch, w, phi)
        rho = ar.update_rho(ch, w, phi, u)
        g = ar.surrogate_g(ch, w, phi, ar.AuxiliaryVars(u, rho))
        gap = abs(g - (users - np.log(2.0) * ar.sum_rate(ch, w, phi)))
        assert gap <= 1e-9 * users
        worst = max(worst, gap / users)
    elapsed = time.perf_counter() - tic
    assert elapsed < 5.0
    report(1, "surrogate identity after u/rho updates",
           f"worst |gap|/K {worst:.2e}, {elapsed:.2f}s over 100 instances")


def test_criterion_2_projection_oracle_equivalence():
    tic = time.perf_counter()
    rng = np.random.default_rng(2)
    worst = 0.0
    for trial in range(200):
        n = int(rng.integers(1, 9))
        phi = 3.0 * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
        eta = 0.3 + rng.random(n)
        lam = 0.1 + rng.random(n)
        # mix of power-active and caps-only instances
        clipped_power = float(lam @ np.minimum(np.abs(phi), eta) ** 2)
        frac = 0.3 if trial % 4 else 1.5
        power = max(frac * clipped_power, 1e-9)
        out, _ = ar.project_box_ellipsoid(
            phi, eta, ar.EllipsoidSpec(diag=lam, radius=power))
        ref, spread = oracle_project_box_ellipsoid(
            phi, eta, lam, power, restarts=3, seed=trial)
        # every subgradient restart must land in the same basin
        assert spread <= 1e-2 * (1.0 + np.linalg.norm(phi))
        err = np.linalg.norm(out - ref) / (1.0 + np.linalg.norm(phi))
        assert err <= 1e-5
        worst = max(worst, err)
    elapsed = time.perf_counter() - tic
    assert elapsed < 60.0
    report(2, "joint projection matches multi-restart oracle",
           f"worst error {worst:.2e}, {elapsed:.1f}s over 200 instances")


def test_criterion_3_kkt_certificates():
    rng = np.random.default_rng(3)
    worst = 0.0
    for trial in range(500):
        n = int(rng.integers(1, 10))
        phi = 4.0 * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
        eta = 0.3 + rng.random(n)
        lam = 0.1 + rng.random(n)
        power = max((0.1 + 1.4 * rng.random())
                    * float(lam @ np.minimum(np.abs(phi), eta) ** 2), 1e-9)
        _, cert = ar.project_box_ellipsoid(
            phi, eta, ar.EllipsoidSpec(diag=lam, radius=power))
        assert cert.stationarity <= 1e-8
        assert cert.complementary_slackness <= 1e-8
        worst = max(worst, cert.stationarity, cert.complementary_slackness)

        m = int(rng.integers(1, 7))
        k = int(rng.integers(1, 4))
        a = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
        psi = a @ a.conj().T / m
        w = 2.0 * (rng.standard_normal((m, k)) + 1j * rng.standard_normal((m, k)))
        raw = float(np.real(np.sum(w.conj() * (psi @ w))))
        radius = max((0.1 + 1.4 * rng.random()) * raw, 1e-9)
        _, cert = ar.project_ellipsoid(w, ar.EllipsoidSpec(matrix=psi,
                                                           radius=radius))
        assert cert.stationarity <= 1e-8
        assert cert.complementary_slackness <= 1e-8
        worst = max(worst, cert.stationarity, cert.complementary_slackness)
    report(3, "KKT certificates on both dual projections",
           f"worst residual {worst:.2e} over 2x500 instances")


def test_criterion_4_fixed_mu_descent():
    worst = -np.inf
    for seed in range(20):
        ch = ar.generate_channels(ar.Geometry(num_users=3),
                                  ar.FadingConfig(seed=seed), (6, 5))
        budget = ar.PowerBudget(p_bs=1.0, p_ris=0.01, eta=np.full(5, 8.0))
        sol = ar.bsum_solve(ch, budget,
                            ar.SolverConfig(max_iters=100, mu_growth=1.0,
                                            tol=1e-300, seed=seed))
        assert sol.iterations == 100
        for rec in sol.trace:
            violation = ((rec.penalized_after - rec.penalized_before)
                         / max(1.0, abs(rec.penalized_before)))
            assert violation <= 1e-8
            worst = max(worst, violation)
    report(4, "fixed-mu majorized objective non-increasing",
           f"worst relative violation {worst:.2e} over 20 x 100 iterations")


def test_criterion_5_final_feasibility():
    worst = 0.0
    for seed in range(50):
        ch = ar.generate_channels(DESK_GEOMETRY, ar.FadingConfig(seed=seed),
                                  DESK_DIMS)
        sol = ar.bsum_solve(ch, desk_budget(), ar.SolverConfig(seed=seed))
        assert sol.residuals.max_normalized <= 1e-8
        worst = max(worst, sol.residuals.max_normalized)
    report(5, "end-to-end final feasibility (M=64, N=32, K=8)",
           f"worst normalized residual {worst:.2e} over 50 solves")


def test_criterion_6_power_trend_and_improvement():
    means = []
    ratios = []
    for p_dbm in (10.0, 20.0, 30.0):
        rates = []
        for trial in range(20):
            ch = ar.generate_channels(DESK_GEOMETRY,
                                      ar.FadingConfig(seed=trial), DESK_DIMS)
            budget = desk_budget(p_dbm)
            init_rate = ar.sum_rate(
                ch, *ar.default_initialization(ch, budget, seed=trial))
            sol = ar.bsum_solve(ch, budget, ar.SolverConfig(seed=trial))
            rates.append(sol.sum_rate)
            ratios.append(sol.sum_rate / init_rate)
        means.append(float(np.mean(rates)))
    assert means[0] < means[1] < means[2]
    mean_ratio = float(np.mean(ratios))
    assert mean_ratio >= 1.2
    report(6, "sum rate increasing in P_max, >= 20% over initialization",
           f"means {means[0]:.2f} < {means[1]:.2f} < {means[2]:.2f}, "
           f"mean improvement x{mean_ratio:.2f}")


def test_criterion_7_per_antenna_variant():
    m = DESK_DIMS[0]
    cap = np.sqrt(0.99 * ar.dbm_to_watts(30.0) / m)
    worst_ratio = 0.0
    for seed in range(8):
        ch = ar.generate_channels(DESK_GEOMETRY, ar.FadingConfig(seed=seed),
                                  DESK_DIMS)
        sol_ball = ar.bsum_solve(ch, desk_budget(), ar.SolverConfig(seed=seed))
        sol_pa = ar.bsum_solve(ch, desk_budget(per_antenna=True),
                               ar.SolverConfig(seed=seed))
        rows = np.sqrt(np.sum(np.abs(sol_pa.w) ** 2, axis=1))
        assert np.all(rows <= cap * (1.0 + 1e-8))
        assert 0.0 <= sol_pa.sum_rate <= sol_ball.sum_rate
        worst_ratio = max(worst_ratio, sol_pa.sum_rate / sol_ball.sum_rate)
    report(7, "per-antenna rows capped, rate within the sum-power rate",
           f"largest pa/ball ratio {worst_ratio:.4f} over 8 matched seeds")


def test_criterion_8_periteration_scaling():
    tic = time.perf_counter()
    base_cfg = {
        "users": 8, "p_max_dbm": [30.0], "trials": 3,
        "solver": {"max_iters": 60, "tol": 1e-12},
    }
    table_m = sweep_sizes(load_config({**base_cfg, "dims": [[64, 32], [128, 32]]}))
    ratio_m = (table_m[1]["per_iteration_ms_mean"]
               / table_m[0]["per_iteration_ms_mean"])
    table_n = sweep_sizes(load_config({**base_cfg, "dims": [[64, 32], [64, 64]]}))
    ratio_n = (table_n[1]["per_iteration_ms_mean"]
               / table_n[0]["per_iteration_ms_mean"])
    elapsed = time.perf_counter() - tic
    assert ratio_m <= 10.0
    assert ratio_n <= 10.0
    assert elapsed < 600.0
    report(8, "per-iteration cost under doubling",
           f"M 64->128 ratio {ratio_m:.2f}, N 32->64 ratio {ratio_n:.2f}, "
           f"{elapsed:.1f}s total")


def test_criterion_9_harness_determinism(tmp_path):
    cfg = load_config({
        "dims": [[16, 8]], "users": 3, "p_max_dbm": [20.0, 30.0],
        "trials": 3, "warmup": False,
        "solver": {"max_iters": 40},
    })
    paths = []
    for tag in ("a", "b"):
        rows, summary = run_experiment(cfg)
        path = tmp_path / f"run_{tag}.csv"
        emit(rows, "csv", str(path), config=cfg, summary=summary)
        paths.append(path)

    def strip_timing(path):
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        idx = rows[0].index("runtime_ms")
        return [[c for j, c in enumerate(r) if j != idx] for r in rows]

    assert strip_timing(paths[0]) == strip_timing(paths[1])
    header = paths[0].read_bytes().split(b"\r\n")[0].decode()
    assert header == ",".join(
        ("trial", "M", "N", "K", "p_max_dbm", "sum_rate_bits", "iterations",
         "runtime_ms", "converged", "residual_max"))
    report(9, "byte-identical CSVs modulo the timing column",
           f"{len(strip_timing(paths[0]))} lines compared")
