"""Acceptance suite: one test per criterion, one printed verdict line each.

Run with `pytest tests/test_acceptance.py -v -s`. Several criteria carry
wall-clock budgets, asserted here. Statistical trend gates use pinned seeds
throughout, so pass/fail is deterministic.
"""

import time
from itertools import product

import numpy as np
import pytest
from scipy.linalg import expm
from scipy.stats import spearmanr

from rydanneal.encoding import DeviceParams, edge_distance, embed_layout, encode, \
    realized_interactions, validate_embedding
from rydanneal.evolution import (
    RecordingOptions, decode_solutions, initial_ground_state, propagate,
)
from rydanneal.graphs import (
    approximation_ratio, brute_force_solve, cost, cycle_graph,
    degeneracy_spectrum, geometric_wheel_graph, hardness_convergence_scan,
    hardness_parameter, make_graph, path_graph, random_graph, star_graph,
)
from rydanneal.hamiltonians import (
    build_target, constant_shift_variance, ground_space, rydberg_diagonal,
)
from rydanneal.optimize import (
    central_difference_gradient, nelder_mead_minimize, quasi_newton_minimize,
)
from rydanneal.pipeline import (
    IntegratorConfig, ProtocolConfig, RunConfig, noise_study, solve_graph,
)
from rydanneal.optimize import PipelineConfig
from rydanneal.pulses import NoiseSpec, build_schedule, initial_guess
from rydanneal.sa import SAConfig, fast_sa

DEV = DeviceParams()
TWO_PI = 2.0 * np.pi

# frozen artifact-defined suite for the end-to-end gate (criterion 4)
FIG3_SUITE = [("maxcut", s) for s in (0, 1, 4, 7, 9)] + \
             [("mis", s) for s in (0, 1, 4, 7, 9)]


def verdict(name, ok, detail=""):
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


def suite_graphs():
    """200 random instances, both kinds, weighted and unweighted, N <= 10."""
    graphs = []
    for i in range(200):
        kind = "maxcut" if i % 2 == 0 else "mis"
        weighted = (i // 2) % 2 == 0
        n = 2 + (i % 9)
        graphs.append(random_graph(n, kind, seed=i, extra_edges=min(2, n // 3),
                                   weighted=weighted))
    return graphs


def test_criterion_1_encoding_oracle_equivalence():
    t0 = time.time()
    checked = 0
    for g in suite_graphs():
        sol = brute_force_solve(g)
        _, gs = ground_space(build_target(g, 1.0))
        assert set(gs.tolist()) == set(sol.optimal_indices.tolist()), g.name
        checked += 1
    elapsed = time.time() - t0
    verdict("criterion 1 (encoding-oracle equivalence)",
            checked == 200 and elapsed < 300,
            f"{checked} graphs, ground space == brute-force optima, {elapsed:.0f}s")


def test_criterion_2_constant_shift_identity():
    worst = 0.0
    for g in suite_graphs():
        enc = encode(g, DEV)
        ryd = rydberg_diagonal(enc.final_detunings, enc.target_interactions)
        tgt = build_target(g, enc.scale)
        worst = max(worst, constant_shift_variance(ryd, tgt))
    verdict("criterion 2 (constant-shift identity)", worst < 1e-18,
            f"worst relative variance {worst:.2e} over 200 graphs")


def test_criterion_3_propagator_correctness():
    # (a) single-atom Rabi against sin^2(omega_ang t / 2) over 10 us
    from rydanneal.evolution import _rk4_segment

    omega0 = 1.0
    steps = 20000
    dt = 10.0 / steps
    psi = initial_ground_state(1)
    zeros2 = np.zeros(2)
    _rk4_segment(psi, zeros2.copy(), zeros2.copy(), np.zeros(2 * steps + 1),
                 np.zeros(2 * steps + 1), np.full(2 * steps + 1, TWO_PI * omega0 / 2),
                 dt, steps)
    rabi_err = abs(abs(psi[1]) ** 2 - np.sin(TWO_PI * omega0 * 10.0 / 2) ** 2)
    # also along the trajectory
    psi = initial_ground_state(1)
    max_err = 0.0
    seg = steps // 100
    for i in range(100):
        _rk4_segment(psi, zeros2.copy(), zeros2.copy(), np.zeros(2 * seg + 1),
                     np.zeros(2 * seg + 1), np.full(2 * seg + 1, TWO_PI * omega0 / 2),
                     dt, seg)
        t = (i + 1) * seg * dt
        max_err = max(max_err, abs(abs(psi[1]) ** 2
                                   - np.sin(TWO_PI * omega0 * t / 2) ** 2))
    rabi_ok = rabi_err < 1e-6 and max_err < 1e-6

    # (b) N=2 driven evolution vs dense sub-stepped matrix-exponential oracle
    g = make_graph("maxcut", 2, [(0, 1, 1.0)])
    enc = encode(g, DEV, scale=1.0)
    cv = initial_guess(2.0, amplitude=2.0)
    sched = build_schedule(cv, enc.final_detunings, enc.target_interactions)
    psi0 = initial_ground_state(2)
    traj = propagate(psi0, sched, steps=8000)
    from rydanneal.evolution import _diagonal_parts

    d0, d1 = _diagonal_parts(sched)
    oracle = np.array(psi0, dtype=complex)
    sub = 40000
    dts = 2.0 / sub
    idx = np.arange(4)
    for i in range(sub):
        tm = (i + 0.5) * dts
        h = np.diag((d0 + float(sched.delta_g(tm)) * d1).astype(complex))
        om = float(sched.omega(tm))
        for j in range(2):
            h[idx, idx ^ (1 << j)] += 0.5 * om
        oracle = expm(-1j * TWO_PI * h * dts) @ oracle
    state_err = float(np.linalg.norm(traj.final_state - oracle))

    # (c) norm drift over 15 us at default step count
    cv15 = initial_guess(15.0, amplitude=2.0)
    sched15 = build_schedule(cv15, enc.final_detunings, enc.target_interactions)
    traj15 = propagate(initial_ground_state(2), sched15)
    drift_ok = traj15.max_drift < 1e-8

    verdict("criterion 3 (propagator correctness)",
            rabi_ok and state_err < 1e-6 and drift_ok,
            f"rabi err {max(rabi_err, max_err):.1e}, oracle err {state_err:.1e}, "
            f"15us drift {traj15.max_drift:.1e}")


def test_criterion_4_end_to_end_n5_suite():
    t0 = time.time()
    ratios, fids = [], []
    for kind, seed in FIG3_SUITE:
        g = random_graph(5, kind, seed=seed, extra_edges=1, max_degree=3)
        rec, _ = solve_graph(g, RunConfig(seed=seed))
        ratios.append(rec.ratio)
        fids.append(rec.fidelity_final)
    elapsed = time.time() - t0
    med_r = float(np.median(ratios))
    med_f = float(np.median(fids))
    verdict("criterion 4 (end-to-end N=5 suite)",
            med_r >= 0.95 and med_f >= 0.90 and elapsed < 900,
            f"median R {med_r:.4f}, median F {med_f:.4f}, {elapsed:.0f}s for 10 graphs")


def test_criterion_5_scale_check_n12():
    t0 = time.time()
    g, pos = geometric_wheel_graph(12, seed=0)
    assert int(g.degrees().max()) == 5
    enc = encode(g, DEV)
    j, k = int(g.edges_j[0]), int(g.edges_k[0])
    rho = edge_distance(enc.target_interactions[j, k], DEV) \
        / np.linalg.norm(pos[j] - pos[k])
    cfg = RunConfig(
        protocol=ProtocolConfig(duration_us=10.65, amplitude=3.0),
        integrator=IntegratorConfig(steps_per_us=3000, opt_steps_per_us=1500,
                                    n_samples=100),
        pipeline=PipelineConfig(stage1_max_iter=2, nm_max_iter=60, nm_max_fev=60,
                                stage3_max_iter=1),
        seed=0)
    # geometric warm start (the instance is realizable by construction)
    layout = embed_layout(enc, DEV, seed=0, restarts=8, unwanted_tol=0.07,
                          initial_positions=pos * rho)
    rep = validate_embedding(layout, enc, DEV, unwanted_tol=0.07)
    assert rep.passed
    v_real = realized_interactions(layout, DEV)
    target = build_target(g, enc.scale)
    from rydanneal.pipeline import PulseObjective, optimize_controls

    guess = initial_guess(10.65, 3.0)
    build_schedule(guess, enc.final_detunings, v_real)
    obj = PulseObjective(enc.final_detunings, v_real, target, 10.65,
                         int(10.65 * 1500), guess.delta_g0)
    opt = optimize_controls(obj, guess, cfg)
    traj = propagate(obj.psi0, obj.schedule(opt.x_best), steps=int(10.65 * 3000),
                     record=RecordingOptions(n_samples=100, target=target))
    bits, _ = decode_solutions(traj.final_state, 1e-3)[0]
    sol = brute_force_solve(g)
    ratio = approximation_ratio(cost(g, bits), sol.c_opt)
    elapsed = time.time() - t0
    verdict("criterion 5 (N=12 scale check)",
            ratio >= 0.90 and elapsed < 7200,
            f"R {ratio:.4f}, F {traj.final_fidelity:.4f}, E {traj.final_energy:.3f}, "
            f"{elapsed:.0f}s (budget 2h)")


def test_criterion_6_hardness_parameter():
    # frozen values computed by independent exhaustive enumeration before the
    # build (straight from the cost definitions)
    triangle = make_graph("maxcut", 3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)])
    path3 = path_graph(3)
    star4 = star_graph(4)
    c4mis = cycle_graph(4, kind="mis")
    wtri = make_graph("maxcut", 3, [(0, 1, 3.0), (0, 2, 2.0), (1, 2, 1.0)])
    expected = [
        (triangle, {1: 1 / 6, 2: 0.0}),
        (path3, {1: 1.5, 2: 1.0, 4: 0.0}),
        (star4, {1: 7 / 3, 2: 2.0, 6: 0.0}),
        (c4mis, {1: 3.5, 2: 3.0, 4: 3.0}),
        (wtri, {1: 0.6, 2: 0.0}),
    ]
    for g, table in expected:
        spec = degeneracy_spectrum(g)
        c_opt, d_opt = float(spec.values[0]), int(spec.degeneracies[0])
        for cutoff, hp_expected in table.items():
            hp = hardness_parameter(spec, c_opt, d_opt, cutoff)
            assert hp == pytest.approx(hp_expected, rel=1e-12), (g.name, cutoff)
        scan, converged = hardness_convergence_scan(g, list(range(0, 10)))
        hps = [h for _, h in scan]
        assert all(a >= b - 1e-15 for a, b in zip(hps, hps[1:])), g.name
        assert converged is not None, g.name
    verdict("criterion 6 (hardness parameter)", True,
            "5 hand-enumerated instances match; scans converge, monotone")


def test_criterion_7_sa_trends():
    # (a) p_failure non-increasing with iteration budget, weighted N=10
    g10 = random_graph(10, "maxcut", seed=3, extra_edges=6)
    iterations = [20, 60, 200, 600, 2000, 6000]
    p_fail = []
    for it in iterations:
        res = fast_sa(g10, SAConfig(iterations=it, cycles=max(2, it // 100),
                                    runs=50, seed=11))
        p_fail.append(1.0 - res.p_success)
    rho_a, p_a = spearmanr(iterations, p_fail)
    ok_a = rho_a < 0 and p_a < 0.05

    # (b) p_failure generally increasing with N, unweighted family 2..12
    sizes = list(range(2, 13))
    p_fail_n = []
    for n in sizes:
        g = random_graph(n, "maxcut", seed=100 + n, extra_edges=n, weighted=False)
        res = fast_sa(g, SAConfig(iterations=40, cycles=2, runs=50, seed=21))
        p_fail_n.append(1.0 - res.p_success)
    rho_b, p_b = spearmanr(sizes, p_fail_n)
    ok_b = rho_b > 0 and p_b < 0.05

    # (c) MIS parity oscillation on unweighted cycles (even N: 2 optima,
    # odd N: many tie-degenerate optima under the cost function)
    p_succ = {}
    for n in range(3, 13):
        res = fast_sa(cycle_graph(n, kind="mis"),
                      SAConfig(iterations=60, cycles=3, runs=50, seed=31))
        p_succ[n] = res.p_success
    pairs = [(7, 8), (9, 10), (11, 12)]
    ok_c = all(p_succ[odd] > p_succ[even] for odd, even in pairs)

    verdict("criterion 7 (SA baseline trends)", ok_a and ok_b and ok_c,
            f"iter sweep rho {rho_a:.2f} (p {p_a:.3g}); size sweep rho {rho_b:.2f} "
            f"(p {p_b:.3g}); parity p_success {[(n, p_succ[n]) for n in range(6, 13)]}")


def test_criterion_8_noise_study():
    g = random_graph(8, "maxcut", seed=5, extra_edges=2, max_degree=3)
    base = RunConfig(
        protocol=ProtocolConfig(duration_us=3.5, amplitude=4.0),
        pipeline=PipelineConfig(stage1_max_iter=3, nm_max_iter=120, nm_max_fev=120,
                                stage3_max_iter=2),
        integrator=IntegratorConfig(steps_per_us=2500, opt_steps_per_us=1500,
                                    n_samples=60),
        seed=5)

    from dataclasses import replace

    noisy = replace(base, noise=NoiseSpec(level=0.08, seed=17))
    report = noise_study(g, noisy, n_draws=50)
    med_in = report["inloop"]["median_fidelity"]
    med_post = report["posthoc"]["median_fidelity"]
    ok_order = med_in >= med_post

    zero = replace(base, noise=NoiseSpec(level=0.0, seed=17))
    report0 = noise_study(g, zero, n_draws=5)
    ok_zero = all(e == report0["clean"]["energy"] for e in report0["posthoc"]["energy"]) \
        and all(f == report0["clean"]["fidelity"] for f in report0["posthoc"]["fidelity"]) \
        and all(e == report0["clean"]["energy"] for e in report0["inloop"]["energy"]) \
        and report0["inloop_clean"]["energy"] == report0["clean"]["energy"]

    verdict("criterion 8 (noise study)", ok_order and ok_zero,
            f"8%: in-loop median F {med_in:.4f} >= post-hoc {med_post:.4f}; "
            f"0%: bitwise equal to clean = {ok_zero}")


def test_criterion_9_optimizer_unit_gates():
    rep1 = quasi_newton_minimize(lambda x: (x[0] - 3.0) ** 2, np.array([0.0]),
                                 max_iter=50, tol=1e-10)
    ok_q1 = abs(rep1.x_best[0] - 3.0) < 1e-6
    rep2 = quasi_newton_minimize(lambda x: x[0] ** 2 + 10 * x[1] ** 2,
                                 np.array([2.0, -1.5]), max_iter=100, tol=1e-12)
    ok_q2 = float(np.linalg.norm(rep2.x_best)) < 1e-6

    def rosen(x):
        return float((1 - x[0]) ** 2 + 100 * (x[1] - x[0] ** 2) ** 2)

    rep3 = quasi_newton_minimize(rosen, np.array([-1.2, 1.0]), max_iter=500,
                                 tol=1e-12)
    ok_rosen = float(np.linalg.norm(rep3.x_best - 1.0)) < 1e-4
    rep4 = nelder_mead_minimize(lambda x: abs(x[0] - 2.0), np.array([0.0]),
                                max_iter=300, max_fev=300, tol=1e-8)
    ok_nm = abs(rep4.x_best[0] - 2.0) < 1e-4

    rng = np.random.default_rng(0)

    def smooth(x):
        return float(np.sum(np.sin(x) + 0.1 * x ** 2))

    ok_grad = True
    for _ in range(10):
        x = rng.uniform(-2, 2, size=6)
        ours = central_difference_gradient(smooth, x)
        step = 1e-5
        other = np.array([(smooth(x + step * e) - smooth(x - step * e)) / (2 * step)
                          for e in np.eye(6)])
        ok_grad &= bool(np.allclose(ours, other, rtol=1e-4, atol=1e-7))

    verdict("criterion 9 (optimizer unit gates)",
            ok_q1 and ok_q2 and ok_rosen and ok_nm and ok_grad,
            f"quadratics {ok_q1 and ok_q2}, rosenbrock {ok_rosen}, "
            f"|x-2| {ok_nm}, gradient oracle {ok_grad}")
