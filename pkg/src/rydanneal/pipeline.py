"""End-to-end solver: encode -> embed -> optimize pulses -> propagate -> score.

The optimization objective is the final-time expectation of the target
Hamiltonian after propagating |g...g> under the candidate schedule, using a
coarser integrator than the final scoring run (both configurable). With
in-loop noise the objective averages over a fixed set of noise draws, so it
stays deterministic for the optimizer while the controls adapt to noise.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import __version__
from .encoding import (
    DEFAULT_DELTA_REF, DEFAULT_EDGE_TOL, DEFAULT_UNWANTED_TOL, DeviceParams,
    embed_layout, encode, export_layout, realized_interactions,
    validate_embedding,
)
from .evolution import (
    DEFAULT_SAMPLES, DEFAULT_STEPS_PER_US, IntegrationError, RecordingOptions,
    decode_solutions, expectation_energy, export_trajectory, fidelity,
    initial_ground_state, propagate,
)
from .graphs import (
    ProblemGraph, approximation_ratio, brute_force_solve, cost,
    hardness_convergence_scan,
)
from .hamiltonians import build_target, ground_space
from .optimize import OptimizerReport, PipelineConfig, bnb_pipeline
from .pulses import (
    ControlVector, N_KNOTS, NoiseSpec, PulseSchedule, build_schedule,
    export_schedule, initial_guess, inject_noise,
)

DEFAULT_AMPLITUDE = 5.0       # 2*pi MHz peak of the initial Rabi guess
DEFAULT_OPT_STEPS_PER_US = 1000
MAX_DURATION = 50.0
NOISE_AVERAGES = 3            # in-loop objective averages (3x budget)
HP_CUTOFFS = tuple(range(0, 9))


@dataclass(frozen=True)
class ProtocolConfig:
    duration_us: float = 3.5
    amplitude: float = DEFAULT_AMPLITUDE
    delta_g0: float = -1.0
    ramp_shape: str = "linear"           # "linear" | "flattop"
    plateau_fraction: float = 0.3
    delta_ref: float = DEFAULT_DELTA_REF

    def __post_init__(self):
        if not 0.0 < self.duration_us <= MAX_DURATION:
            raise ValueError(f"duration must be in (0, {MAX_DURATION}] us")


@dataclass(frozen=True)
class IntegratorConfig:
    steps_per_us: int = DEFAULT_STEPS_PER_US
    opt_steps_per_us: int = DEFAULT_OPT_STEPS_PER_US
    n_samples: int = DEFAULT_SAMPLES


@dataclass(frozen=True)
class EmbedConfig:
    restarts: int = 32
    edge_tol: float = DEFAULT_EDGE_TOL
    unwanted_tol: float = DEFAULT_UNWANTED_TOL


@dataclass(frozen=True)
class RunConfig:
    graph: str = ""
    device: DeviceParams = field(default_factory=DeviceParams)
    protocol: ProtocolConfig = field(default_factory=ProtocolConfig)
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    embed: EmbedConfig = field(default_factory=EmbedConfig)
    noise: NoiseSpec | None = None
    omega_bound_factor: float = 2.5      # Omega knots clamped to [0, factor*A]
    delta_bound: float = 3.0             # Delta_G knots clamped to [-b, b]
    seed: int = 0
    out_dir: str = ""

    @staticmethod
    def from_dict(doc: dict) -> "RunConfig":
        known = {"graph", "device", "protocol", "integrator", "pipeline", "embed",
                 "noise", "omega_bound_factor", "delta_bound", "seed", "out_dir"}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config fields {sorted(unknown)}")
        kwargs = {}
        for key, cls in (("device", DeviceParams), ("protocol", ProtocolConfig),
                         ("integrator", IntegratorConfig),
                         ("pipeline", PipelineConfig), ("embed", EmbedConfig)):
            if key in doc:
                kwargs[key] = cls(**doc[key])
        if doc.get("noise") is not None:
            kwargs["noise"] = NoiseSpec(**doc["noise"])
        for key in ("graph", "omega_bound_factor", "delta_bound", "seed", "out_dir"):
            if key in doc:
                kwargs[key] = doc[key]
        return RunConfig(**kwargs)

    @staticmethod
    def load(path) -> "RunConfig":
        with open(path) as fh:
            return RunConfig.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["pipeline"] = {k: v for k, v in doc["pipeline"].items() if k != "bounds"}
        return doc


@dataclass
class RunRecord:
    graph_name: str
    n: int
    kind: str
    scale: float
    feasibility: dict
    optimizer: dict
    energy_final: float
    fidelity_final: float
    ratio: float
    best_assignment: list
    best_probability: float
    decoded_top: list
    hardness: list
    hardness_converged_at: int | None
    c_opt: float | None
    d_opt: int | None
    timings_s: dict
    config: dict
    versions: dict

    def to_dict(self) -> dict:
        return asdict(self)


def _versions() -> dict:
    import numba
    import scipy

    return {"rydanneal": __version__, "numpy": np.__version__,
            "scipy": scipy.__version__, "numba": numba.__version__}


class PulseObjective:
    """Maps a packed control vector to the final-time target energy."""

    def __init__(self, final_detunings, realized_v, target, duration,
                 steps, delta_g0, noise_draws=()):
        self.final_detunings = np.asarray(final_detunings, float)
        self.realized_v = np.asarray(realized_v, float)
        self.target = target
        self.duration = duration
        self.steps = steps
        self.delta_g0 = delta_g0
        self.noise_draws = tuple(noise_draws)
        self._gs = ground_space(target)[1]
        self.psi0 = initial_ground_state(target.n_atoms)

    def pack(self, cv: ControlVector) -> np.ndarray:
        return np.concatenate([cv.omega_points, cv.delta_points])

    def unpack(self, x) -> ControlVector:
        x = np.asarray(x, float)
        return ControlVector(omega_points=x[:N_KNOTS], delta_points=x[N_KNOTS:],
                             duration=self.duration, delta_g0=self.delta_g0)

    def schedule(self, x) -> PulseSchedule:
        return build_schedule(self.unpack(x), self.final_detunings,
                              self.realized_v, check_anchor=False)

    def evaluate(self, sched: PulseSchedule) -> tuple[float, float]:
        # enough samples for the norm-drift policy to renormalize, not abort
        traj = propagate(self.psi0, sched, steps=self.steps,
                         record=RecordingOptions(n_samples=32))
        e = expectation_energy(traj.final_state, self.target)
        f = fidelity(traj.final_state, self._gs)
        return e, f

    @property
    def penalty(self) -> float:
        """Objective value for controls the integrator cannot follow."""
        return float(np.max(self.target.energies)) + 1.0

    def __call__(self, x) -> float:
        sched = self.schedule(x)
        try:
            if not self.noise_draws:
                return self.evaluate(sched)[0]
            total = 0.0
            for spec in self.noise_draws:
                total += self.evaluate(inject_noise(sched, spec))[0]
            return total / len(self.noise_draws)
        except IntegrationError:
            # too-stiff candidate schedule; steer the optimizer away
            return self.penalty


def _bounds(cfg: RunConfig) -> tuple[np.ndarray, np.ndarray]:
    lo = np.concatenate([np.zeros(N_KNOTS), -cfg.delta_bound * np.ones(N_KNOTS)])
    hi = np.concatenate([
        cfg.omega_bound_factor * cfg.protocol.amplitude * np.ones(N_KNOTS),
        cfg.delta_bound * np.ones(N_KNOTS)])
    return lo, hi


def optimize_controls(obj: PulseObjective, guess: ControlVector,
                      cfg: RunConfig) -> OptimizerReport:
    pipe_cfg = replace(cfg.pipeline, bounds=_bounds(cfg))
    return bnb_pipeline(obj, obj.pack(guess), pipe_cfg)


def solve_graph(g: ProblemGraph, cfg: RunConfig,
                record_populations: bool = False):
    """Run the full protocol on one graph; returns (RunRecord, artifacts).

    artifacts is a dict with the encoding, layout, optimized schedule and
    final trajectory, for export or further analysis.
    """
    timings = {}
    t0 = time.perf_counter()
    enc = encode(g, cfg.device, delta_ref=cfg.protocol.delta_ref)
    timings["encode"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    layout = embed_layout(enc, cfg.device, seed=cfg.seed,
                          restarts=cfg.embed.restarts,
                          unwanted_tol=cfg.embed.unwanted_tol,
                          edge_tol=cfg.embed.edge_tol)
    report = validate_embedding(layout, enc, cfg.device,
                                edge_tol=cfg.embed.edge_tol,
                                unwanted_tol=cfg.embed.unwanted_tol)
    v_real = realized_interactions(layout, cfg.device)
    timings["embed"] = time.perf_counter() - t0

    target = build_target(g, enc.scale)
    guess = initial_guess(cfg.protocol.duration_us, cfg.protocol.amplitude,
                          cfg.protocol.delta_g0, cfg.protocol.ramp_shape,
                          cfg.protocol.plateau_fraction)
    # anchor check once, against the realized interactions
    build_schedule(guess, enc.final_detunings, v_real)

    opt_steps = max(1, int(round(cfg.protocol.duration_us
                                 * cfg.integrator.opt_steps_per_us)))
    noise_draws = ()
    if cfg.noise is not None and cfg.noise.mode == "inloop" and cfg.noise.level > 0:
        seeds = np.random.SeedSequence(cfg.noise.seed).generate_state(NOISE_AVERAGES)
        noise_draws = tuple(replace(cfg.noise, seed=int(s)) for s in seeds)
    obj = PulseObjective(enc.final_detunings, v_real, target,
                         cfg.protocol.duration_us, opt_steps,
                         guess.delta_g0, noise_draws)
    # the optimization integrator must at least handle the initial guess;
    # stiffer candidates explored later are penalized, not fatal
    obj.evaluate(obj.schedule(obj.pack(guess)))

    t0 = time.perf_counter()
    opt_report = optimize_controls(obj, guess, cfg)
    timings["optimize"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    best_sched = obj.schedule(opt_report.x_best)
    final_steps = max(1, int(round(cfg.protocol.duration_us
                                   * cfg.integrator.steps_per_us)))
    traj = propagate(obj.psi0, best_sched, steps=final_steps,
                     record=RecordingOptions(n_samples=cfg.integrator.n_samples,
                                             target=target,
                                             record_populations=record_populations))
    timings["final_propagation"] = time.perf_counter() - t0

    decoded = decode_solutions(traj.final_state, threshold=1e-3)
    if not decoded:
        decoded = decode_solutions(traj.final_state, threshold=0.0)
    best_bits, best_p = decoded[0]
    c_obt = cost(g, best_bits)

    c_opt = d_opt = None
    ratio = float("nan")
    if g.n <= 24:
        sol = brute_force_solve(g)
        c_opt, d_opt = sol.c_opt, sol.d_opt
        ratio = approximation_ratio(c_obt, c_opt)
    hp_scan, hp_conv = (hardness_convergence_scan(g, list(HP_CUTOFFS))
                        if g.n <= 20 else ([], None))

    rec = RunRecord(
        graph_name=g.name, n=g.n, kind=g.kind, scale=enc.scale,
        feasibility={"passed": report.passed, "max_degree": report.max_degree,
                     "max_edge_error": report.max_edge_error,
                     "unwanted_ratio": report.unwanted_ratio},
        optimizer={"best_energy": opt_report.f_best, "n_evals": opt_report.n_evals,
                   "stages": opt_report.stages,
                   "evaluations": [[i, float(v)] for i, v in opt_report.history]},
        energy_final=traj.final_energy,
        fidelity_final=traj.final_fidelity,
        ratio=ratio,
        best_assignment=[int(b) for b in best_bits],
        best_probability=best_p,
        decoded_top=[{"assignment": [int(b) for b in bits], "probability": p}
                     for bits, p in decoded[:5]],
        hardness=[[int(c), float(h)] for c, h in hp_scan],
        hardness_converged_at=hp_conv,
        c_opt=c_opt, d_opt=d_opt,
        timings_s={k: round(v, 3) for k, v in timings.items()},
        config=cfg.to_dict(),
        versions=_versions(),
    )
    artifacts = {"encoding": enc, "layout": layout, "feasibility": report,
                 "schedule": best_sched, "trajectory": traj, "target": target,
                 "control": obj.unpack(opt_report.x_best), "objective": obj}
    return rec, artifacts


def noise_study(g: ProblemGraph, cfg: RunConfig, n_draws: int = 50):
    """Post-hoc vs in-loop noise comparison on one graph.

    Optimizes once without noise and once with in-loop noise, then scores
    both optimized controls under the same post-hoc noise draws.
    """
    if g.n > 12:
        raise ValueError("noise study limited to N <= 12")
    level = cfg.noise.level if cfg.noise is not None else 0.0
    base_seed = cfg.noise.seed if cfg.noise is not None else cfg.seed

    clean_cfg = replace(cfg, noise=None)
    rec_clean, art_clean = solve_graph(g, clean_cfg)

    inloop_cfg = replace(cfg, noise=NoiseSpec(level=level, mode="inloop",
                                              seed=base_seed))
    rec_inloop, art_inloop = solve_graph(g, inloop_cfg)

    eval_obj: PulseObjective = art_clean["objective"]
    steps = max(1, int(round(cfg.protocol.duration_us * cfg.integrator.steps_per_us)))
    scorer = PulseObjective(eval_obj.final_detunings, eval_obj.realized_v,
                            eval_obj.target, eval_obj.duration, steps,
                            eval_obj.delta_g0)
    draw_seeds = [int(s) for s in
                  np.random.SeedSequence(base_seed + 1).generate_state(n_draws)]
    results = {}
    clean_scores = {}
    for label, artifacts in (("posthoc", art_clean), ("inloop", art_inloop)):
        sched = artifacts["schedule"]
        # unperturbed reference through the same scorer, so a zero noise
        # level reproduces it bit for bit
        clean_scores[label] = scorer.evaluate(sched)
        es, fs = [], []
        for s in draw_seeds:
            noisy = inject_noise(sched, NoiseSpec(level=level, seed=s))
            e, f = scorer.evaluate(noisy)
            es.append(e)
            fs.append(f)
        results[label] = {"energy": es, "fidelity": fs,
                          "median_energy": float(np.median(es)),
                          "median_fidelity": float(np.median(fs))}
    return {
        "level": level,
        "n_draws": n_draws,
        "draw_seeds": draw_seeds,
        "clean": {"energy": clean_scores["posthoc"][0],
                  "fidelity": clean_scores["posthoc"][1],
                  "ratio": rec_clean.ratio},
        "inloop_clean": {"energy": clean_scores["inloop"][0],
                         "fidelity": clean_scores["inloop"][1],
                         "ratio": rec_inloop.ratio},
        "posthoc": results["posthoc"],
        "inloop": results["inloop"],
    }


def compare_solvers(family, cfg: RunConfig, sa_cfg=None):
    """Quantum pipeline vs simulated annealing on a graph family.

    Returns rows (graph, N, HP, 1 - R_quantum, 1 - R_sa); per-graph failures
    are recorded in the row and the table completes.
    """
    from .sa import SAConfig, fast_sa

    sa_cfg = sa_cfg or SAConfig()
    rows = []
    for i, g in enumerate(family):
        row = {"graph_name": g.name or f"graph{i}", "n": g.n, "hp": None,
               "quantum_gap": None, "sa_gap": None, "error": ""}
        try:
            sol = brute_force_solve(g)
            scan, conv = hardness_convergence_scan(g, list(HP_CUTOFFS))
            hp = dict(scan).get(conv, scan[-1][1]) if scan else None
            rec, _ = solve_graph(g, replace(cfg, seed=cfg.seed + i))
            sa_res = fast_sa(g, SAConfig(**{**sa_cfg.__dict__, "seed": sa_cfg.seed + i}))
            r_sa = float(np.median(sa_res.run_best_costs)) / sol.c_opt
            row.update(hp=hp, quantum_gap=1.0 - rec.ratio, sa_gap=1.0 - r_sa,
                       quantum_fidelity=rec.fidelity_final,
                       sa_best_gap=1.0 - sa_res.best_cost / sol.c_opt)
        except Exception as exc:
            row["error"] = str(exc)
        rows.append(row)
    return rows


def export_run(rec: RunRecord, artifacts, out_dir) -> list:
    """Write the record, layout, schedule and trajectory files."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    paths = []
    rec_path = os.path.join(out_dir, "run_record.json")
    with open(rec_path, "w") as fh:
        json.dump(rec.to_dict(), fh, indent=1, default=float)
    paths.append(rec_path)

    lay_path = os.path.join(out_dir, "layout.json")
    with open(lay_path, "w") as fh:
        json.dump(export_layout(artifacts["layout"], artifacts["encoding"],
                                DeviceParams(), artifacts["feasibility"]),
                  fh, indent=1, default=float)
    paths.append(lay_path)

    sched_path = os.path.join(out_dir, "schedule.json")
    with open(sched_path, "w") as fh:
        json.dump(export_schedule(artifacts["schedule"]), fh, indent=1, default=float)
    paths.append(sched_path)

    paths.extend(export_trajectory(artifacts["trajectory"],
                                   os.path.join(out_dir, "final")))
    return paths
