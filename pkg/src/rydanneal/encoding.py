"""Graph-to-device encoding: final detunings, interaction targets, 2D layouts.

Weights map to pairwise van der Waals interactions V = c6 / r^6, so each
edge weight fixes a target distance. The overall scale s is a free knob:
it is chosen so every edge distance fits the device window [r_min, r_max]
and, within that window, so the largest final detuning lands near a
reference value suited to the annealing drive.

Detuning signs: the final detunings cancel the effective longitudinal field
of the interaction term, which with the package's diagonal convention
(-sum Delta_j n_j + sum V n n) makes them positive,
Delta_j(T) = +1/2 sum_k V_jk (Max-Cut) and Delta_j(T) = +w'_j (MIS).
This is the unique sign choice for which |g...g> is the ground state at the
negative-detuning start of the protocol and the final diagonal equals the
target Hamiltonian up to a constant.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .graphs import MAXCUT, MIS, ProblemGraph
from .hamiltonians import scaled_weights

DEFAULT_DELTA_REF = 8.0       # preferred max |Delta_j(T)|, 2*pi MHz
DEFAULT_EDGE_TOL = 0.01       # relative error allowed on realized edge interactions
DEFAULT_UNWANTED_TOL = 0.05   # non-edge V allowed up to this fraction of min edge V
MAX_DEGREE = 5


class InfeasibleScaleError(ValueError):
    """No interaction scale puts every edge distance inside [r_min, r_max]."""


class EmbeddingError(RuntimeError):
    """Stress minimization failed to realize the target distances in 2D."""


@dataclass(frozen=True)
class DeviceParams:
    c6_ghz: float = 139.0     # GHz um^6 (Cs 60S)
    r_min: float = 1.0        # um
    r_max: float = 7.0        # um
    lifetime_us: float = 234.0

    def __post_init__(self):
        if self.c6_ghz <= 0:
            raise ValueError("c6 must be positive")
        if not 0 < self.r_min < self.r_max:
            raise ValueError("need 0 < r_min < r_max")

    @property
    def c6(self) -> float:
        """Dispersion coefficient in 2*pi MHz um^6."""
        return self.c6_ghz * 1e3

    @property
    def v_window(self):
        """Realizable edge interaction range (2*pi MHz)."""
        return self.c6 / self.r_max ** 6, self.c6 / self.r_min ** 6


@dataclass(frozen=True)
class EncodingResult:
    kind: str
    final_detunings: np.ndarray      # Delta_j(T), 2*pi MHz
    target_interactions: np.ndarray  # V_jk on edges, 0 elsewhere, 2*pi MHz
    scale: float

    @property
    def n(self) -> int:
        return len(self.final_detunings)

    def edge_index_pairs(self):
        j, k = np.nonzero(np.triu(self.target_interactions, 1))
        return list(zip(j.tolist(), k.tolist()))


@dataclass(frozen=True)
class AtomLayout:
    positions: np.ndarray  # (N, 2), um

    @property
    def n(self) -> int:
        return len(self.positions)

    def distances(self) -> np.ndarray:
        d = self.positions[:, None, :] - self.positions[None, :, :]
        return np.sqrt((d ** 2).sum(axis=-1))


@dataclass(frozen=True)
class FeasibilityReport:
    max_degree: int
    degree_ok: bool
    edge_errors: np.ndarray        # per-edge relative interaction error
    max_edge_error: float
    unwanted_ratio: float          # worst non-edge V over smallest edge V target
    edge_tol: float
    unwanted_tol: float
    passed: bool


def _interaction_targets(g: ProblemGraph, scale: float) -> np.ndarray:
    w = scaled_weights(g, scale)
    v = np.zeros((g.n, g.n))
    if g.kind == MAXCUT:
        for j, k, wjk in zip(g.edges_j, g.edges_k, w):
            v[j, k] = v[k, j] = 4.0 * wjk
    else:
        for j, k in zip(g.edges_j, g.edges_k):
            v[j, k] = v[k, j] = w[j] * w[k]
    return v


def _final_detunings(g: ProblemGraph, scale: float, v: np.ndarray) -> np.ndarray:
    if g.kind == MAXCUT:
        return 0.5 * v.sum(axis=1)
    return scaled_weights(g, scale)


def encode(g: ProblemGraph, dev: DeviceParams = DeviceParams(),
           scale: float | None = None,
           delta_ref: float = DEFAULT_DELTA_REF) -> EncodingResult:
    """Map a problem graph to final detunings and interaction targets.

    When `scale` is not given it is chosen inside the feasible window so the
    largest final detuning is close to `delta_ref`; for MIS scales below 1
    are avoided whenever feasible (they weaken the edge penalty relative to
    the vertex reward and can change the optimizing set).
    """
    v_lo, v_hi = dev.v_window
    v_unit = _interaction_targets(g, 1.0)
    edge_v = v_unit[np.triu_indices(g.n, 1)]
    edge_v = edge_v[edge_v > 0]

    if len(edge_v):
        s_lo = v_lo / float(edge_v.min())
        s_hi = v_hi / float(edge_v.max())
        if s_lo > s_hi:
            spread = float(edge_v.max() / edge_v.min())
            raise InfeasibleScaleError(
                f"interaction spread {spread:.3g} exceeds (r_max/r_min)^6 = "
                f"{(dev.r_max / dev.r_min) ** 6:.3g}; no scale fits all edge "
                f"distances in [{dev.r_min}, {dev.r_max}] um")
    else:
        s_lo, s_hi = None, None

    if scale is None:
        d_unit = _final_detunings(g, 1.0, v_unit)
        d_max = float(np.max(np.abs(d_unit))) if g.n else 0.0
        if d_max == 0.0:
            scale = 1.0
        elif g.kind == MAXCUT:
            scale = delta_ref / d_max
        else:
            # MIS detunings scale as sqrt(s)
            scale = (delta_ref / d_max) ** 2
        if s_lo is not None:
            if g.kind == MIS:
                s_lo = max(s_lo, min(1.0, s_hi))
            scale = float(np.clip(scale, s_lo, s_hi))
    elif s_lo is not None and not (s_lo - 1e-12 <= scale <= s_hi + 1e-12):
        raise InfeasibleScaleError(
            f"requested scale {scale} outside feasible window [{s_lo:.4g}, {s_hi:.4g}]")

    v = _interaction_targets(g, scale)
    det = _final_detunings(g, scale, v)
    return EncodingResult(kind=g.kind, final_detunings=det,
                          target_interactions=v, scale=float(scale))


def edge_distance(v: float, dev: DeviceParams = DeviceParams()) -> float:
    """Distance realizing interaction strength v (2*pi MHz) under V = c6/r^6."""
    if v <= 0:
        raise ValueError(f"interaction strength must be positive, got {v}")
    return float((dev.c6 / v) ** (1.0 / 6.0))


def realized_interactions(layout: AtomLayout, dev: DeviceParams = DeviceParams()) -> np.ndarray:
    """Full pairwise V matrix (2*pi MHz) from atom positions, non-edges included."""
    d = layout.distances()
    n = layout.n
    off = ~np.eye(n, dtype=bool)
    if np.any(d[off] <= 0):
        raise ValueError("coincident atoms in layout")
    v = np.zeros((n, n))
    v[off] = dev.c6 / d[off] ** 6
    return v


def exclusion_radius(enc: EncodingResult, dev: DeviceParams,
                     unwanted_tol: float = DEFAULT_UNWANTED_TOL) -> float:
    """Distance below which a non-edge pair would violate the unwanted bound."""
    edge_v = enc.target_interactions[np.triu_indices(enc.n, 1)]
    edge_v = edge_v[edge_v > 0]
    if not len(edge_v):
        return dev.r_min
    return edge_distance(unwanted_tol * float(edge_v.min()), dev)


def _stress_and_grad(x, n, ej, ek, targets, nj, nk, r_excl):
    pos = x.reshape(n, 2)
    grad = np.zeros_like(pos)
    diff = pos[ej] - pos[ek]
    d = np.sqrt((diff ** 2).sum(axis=1))
    d = np.maximum(d, 1e-12)
    res = d - targets
    stress = float((res ** 2).sum())
    g_edge = (2.0 * res / d)[:, None] * diff
    np.add.at(grad, ej, g_edge)
    np.add.at(grad, ek, -g_edge)
    if len(nj):
        diff2 = pos[nj] - pos[nk]
        d2 = np.sqrt((diff2 ** 2).sum(axis=1))
        d2 = np.maximum(d2, 1e-12)
        pen = np.maximum(0.0, r_excl - d2)
        stress += float((pen ** 2).sum())
        g_non = (-2.0 * pen / d2)[:, None] * diff2
        np.add.at(grad, nj, g_non)
        np.add.at(grad, nk, -g_non)
    return stress, grad.reshape(-1)


def embed_layout(enc: EncodingResult, dev: DeviceParams = DeviceParams(),
                 seed: int = 0, restarts: int = 32,
                 unwanted_tol: float = DEFAULT_UNWANTED_TOL,
                 edge_tol: float = DEFAULT_EDGE_TOL,
                 initial_positions=None) -> AtomLayout:
    """Place atoms in 2D so edge distances hit their targets.

    Minimizes squared distance stress on edges plus a hinge penalty for
    non-edge pairs inside the exclusion radius, over `restarts` seeded random
    initializations; keeps the best. `initial_positions`, when given, seeds
    one additional descent (useful for geometrically constructed graphs).
    Fails when the residual implies edge errors beyond `edge_tol` (graph not
    realizable in the plane).
    """
    n = enc.n
    pairs = enc.edge_index_pairs()
    if n == 1:
        return AtomLayout(positions=np.zeros((1, 2)))
    ej = np.array([p[0] for p in pairs], dtype=int)
    ek = np.array([p[1] for p in pairs], dtype=int)
    targets = np.array([edge_distance(enc.target_interactions[j, k], dev)
                        for j, k in pairs])
    adj = np.zeros((n, n), dtype=bool)
    if len(pairs):
        adj[ej, ek] = adj[ek, ej] = True
    iu, ik = np.triu_indices(n, 1)
    non = ~adj[iu, ik]
    nj, nk = iu[non], ik[non]
    r_excl = exclusion_radius(enc, dev, unwanted_tol)

    rng = np.random.default_rng(seed)
    box = max(n * dev.r_max / 2.0, dev.r_max)
    starts = []
    if initial_positions is not None:
        starts.append(np.asarray(initial_positions, dtype=float).reshape(-1))
    starts.extend(rng.uniform(0.0, box, size=2 * n) for _ in range(restarts))
    best = None
    best_stress = np.inf
    for x0 in starts:
        res = minimize(_stress_and_grad, x0, jac=True, method="L-BFGS-B",
                       args=(n, ej, ek, targets, nj, nk, r_excl),
                       options={"maxiter": 400, "ftol": 1e-14, "gtol": 1e-12})
        if res.fun < best_stress:
            best_stress = float(res.fun)
            best = res.x.reshape(n, 2)

    if len(targets):
        # judge realizability on the edge residuals alone; unwanted-pair
        # proximity is reported by validate_embedding
        pos = best
        d = np.sqrt(((pos[ej] - pos[ek]) ** 2).sum(axis=1))
        edge_stress = float(((d - targets) ** 2).sum())
        allowed = float(((edge_tol * targets) ** 2).sum())
        if edge_stress > allowed:
            raise EmbeddingError(
                f"best residual edge stress {edge_stress:.3e} exceeds tolerance "
                f"{allowed:.3e} (total stress {best_stress:.3e}); graph distances "
                f"not realizable in 2D")
    return AtomLayout(positions=best - best.mean(axis=0))


def validate_embedding(layout: AtomLayout, enc: EncodingResult,
                       dev: DeviceParams = DeviceParams(),
                       edge_tol: float = DEFAULT_EDGE_TOL,
                       unwanted_tol: float = DEFAULT_UNWANTED_TOL,
                       max_degree: int = MAX_DEGREE) -> FeasibilityReport:
    """Check degrees, per-edge interaction errors and unwanted interactions."""
    if layout.n != enc.n:
        raise ValueError("layout size does not match encoding")
    v_real = realized_interactions(layout, dev)
    pairs = enc.edge_index_pairs()
    degrees = np.zeros(enc.n, dtype=int)
    errors = []
    edge_targets = []
    for j, k in pairs:
        degrees[j] += 1
        degrees[k] += 1
        target = enc.target_interactions[j, k]
        errors.append(abs(v_real[j, k] - target) / target)
        edge_targets.append(target)
    errors = np.array(errors) if errors else np.zeros(0)
    max_deg = int(degrees.max()) if enc.n else 0
    degree_ok = max_deg <= max_degree

    unwanted = 0.0
    if pairs and enc.n > 2:
        min_target = min(edge_targets)
        adj = np.zeros((enc.n, enc.n), dtype=bool)
        for j, k in pairs:
            adj[j, k] = adj[k, j] = True
        iu, ik = np.triu_indices(enc.n, 1)
        mask = ~adj[iu, ik]
        if mask.any():
            unwanted = float(np.max(v_real[iu[mask], ik[mask]]) / min_target)

    max_err = float(errors.max()) if len(errors) else 0.0
    passed = degree_ok and max_err <= edge_tol and unwanted <= unwanted_tol
    return FeasibilityReport(
        max_degree=max_deg, degree_ok=degree_ok, edge_errors=errors,
        max_edge_error=max_err, unwanted_ratio=unwanted,
        edge_tol=edge_tol, unwanted_tol=unwanted_tol, passed=passed)


def export_layout(layout: AtomLayout, enc: EncodingResult,
                  dev: DeviceParams, report: FeasibilityReport) -> dict:
    return {
        "positions_um": layout.positions.tolist(),
        "scale": enc.scale,
        "final_detunings_2pi_mhz": enc.final_detunings.tolist(),
        "target_interactions_2pi_mhz": enc.target_interactions.tolist(),
        "realized_interactions_2pi_mhz": realized_interactions(layout, dev).tolist(),
        "feasibility": {
            "max_degree": report.max_degree,
            "degree_ok": report.degree_ok,
            "max_edge_error": report.max_edge_error,
            "unwanted_ratio": report.unwanted_ratio,
            "edge_tol": report.edge_tol,
            "unwanted_tol": report.unwanted_tol,
            "passed": report.passed,
        },
    }
