"""Problem graphs, cost functions, exact oracles and hardness metrics.

Two problem kinds are supported: weighted Max-Cut (weights on edges) and
weighted MIS (weights on vertices, edges carry only adjacency). Costs are
always *maximized*; the exact oracle enumerates the full assignment cube.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

MAXCUT = "maxcut"
MIS = "mis"

BRUTE_FORCE_CAP = 24       # hard cap on N for streaming enumeration
SPECTRUM_CAP = 20          # full cost storage cap for degeneracy spectra
COST_MERGE_RTOL = 1e-9     # relative tolerance when merging spectrum values

_CHUNK_BITS = 18           # enumerate in chunks of 2^18 assignments


class GraphParseError(ValueError):
    """Raised when a graph document violates the schema or an invariant."""


class UndefinedRatioError(ValueError):
    """Raised when the approximation ratio is requested with c_opt <= 0."""


@dataclass(frozen=True)
class ProblemGraph:
    kind: str
    n: int
    vertex_weights: np.ndarray
    edges_j: np.ndarray
    edges_k: np.ndarray
    edge_weights: np.ndarray
    name: str = ""

    @property
    def n_edges(self) -> int:
        return len(self.edges_j)

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=int)
        np.add.at(deg, self.edges_j, 1)
        np.add.at(deg, self.edges_k, 1)
        return deg

    def edge_list(self):
        if self.kind == MAXCUT:
            return [(int(j), int(k), float(w)) for j, k, w in
                    zip(self.edges_j, self.edges_k, self.edge_weights)]
        return [(int(j), int(k)) for j, k in zip(self.edges_j, self.edges_k)]

    def to_document(self) -> dict:
        doc = {"kind": self.kind, "n": self.n, "edges": self.edge_list()}
        if self.name:
            doc["name"] = self.name
        if not np.all(self.vertex_weights == 1.0):
            doc["vertex_weights"] = self.vertex_weights.tolist()
        return doc


@dataclass(frozen=True)
class CostSpectrum:
    """Distinct cost values (descending) with their degeneracies."""
    values: np.ndarray
    degeneracies: np.ndarray

    def __post_init__(self):
        if len(self.values) != len(self.degeneracies):
            raise ValueError("values and degeneracies length mismatch")


@dataclass(frozen=True)
class ExactSolution:
    c_opt: float
    optimal_indices: np.ndarray   # basis indices of all optima, sorted
    d_opt: int
    n: int

    def assignments(self) -> np.ndarray:
        """Optima as a (d_opt, n) array of 0/1 bits, atom 0 in column 0."""
        return index_to_bits(self.optimal_indices, self.n)


def index_to_bits(idx, n: int) -> np.ndarray:
    """Little-endian decode: bit j of the index is vertex j's value."""
    idx = np.asarray(idx)
    return ((idx[..., None] >> np.arange(n)) & 1).astype(np.uint8)


def bits_to_index(bits) -> int:
    bits = np.asarray(bits).astype(np.int64)
    return int((bits << np.arange(bits.shape[-1])).sum(axis=-1))


def bits_to_string(bits) -> str:
    """Assignment as a string with vertex 0 leftmost (decoding convention)."""
    return "".join(str(int(b)) for b in np.asarray(bits))


def make_graph(kind: str, n: int, edges, vertex_weights=None, name: str = "") -> ProblemGraph:
    """Validate raw fields and build a ProblemGraph.

    Max-Cut edges are (j, k, w) with w > 0; MIS edges are (j, k) pairs and
    vertex weights must be positive. Self-loops and duplicates are rejected.
    """
    if kind not in (MAXCUT, MIS):
        raise GraphParseError(f"unknown problem kind {kind!r}")
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise GraphParseError(f"n must be a positive integer, got {n!r}")

    if vertex_weights is None:
        vw = np.ones(n)
    else:
        vw = np.asarray(vertex_weights, dtype=float)
        if vw.shape != (n,):
            raise GraphParseError(f"vertex_weights must have length {n}, got {vw.shape}")
        if kind == MIS and np.any(vw <= 0):
            bad = int(np.argmin(vw))
            raise GraphParseError(f"nonpositive vertex weight w_{bad} = {vw[bad]}")

    js, ks, ws = [], [], []
    seen = set()
    for entry in edges:
        entry = tuple(entry)
        if kind == MAXCUT:
            if len(entry) == 2:
                j, k = entry
                w = 1.0
            elif len(entry) == 3:
                j, k, w = entry
            else:
                raise GraphParseError(f"malformed Max-Cut edge {entry!r}")
        else:
            if len(entry) != 2:
                raise GraphParseError(
                    f"malformed MIS edge {entry!r}: MIS edges carry no weight")
            j, k = entry
            w = 1.0
        j, k = int(j), int(k)
        if j == k:
            raise GraphParseError(f"self-loop on vertex {j}")
        if not (0 <= j < n and 0 <= k < n):
            raise GraphParseError(f"edge ({j}, {k}) out of range for n={n}")
        if j > k:
            j, k = k, j
        if (j, k) in seen:
            raise GraphParseError(f"duplicate edge ({j}, {k})")
        seen.add((j, k))
        w = float(w)
        if kind == MAXCUT and w <= 0:
            raise GraphParseError(f"nonpositive weight {w} on edge ({j}, {k})")
        js.append(j)
        ks.append(k)
        ws.append(w)

    return ProblemGraph(
        kind=kind, n=int(n), vertex_weights=vw,
        edges_j=np.array(js, dtype=np.int64),
        edges_k=np.array(ks, dtype=np.int64),
        edge_weights=np.array(ws, dtype=float),
        name=str(name),
    )


def parse_graph(text: str) -> ProblemGraph:
    """Parse a JSON graph document (see README for the schema)."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise GraphParseError("graph document must be a JSON object")
    unknown = set(doc) - {"kind", "n", "vertex_weights", "edges", "name"}
    if unknown:
        raise GraphParseError(f"unknown fields {sorted(unknown)}")
    for key in ("kind", "n", "edges"):
        if key not in doc:
            raise GraphParseError(f"missing required field {key!r}")
    if doc["kind"] == MAXCUT and "vertex_weights" in doc:
        raise GraphParseError("vertex_weights are not allowed on a Max-Cut document")
    return make_graph(doc["kind"], doc["n"], doc["edges"],
                      vertex_weights=doc.get("vertex_weights"),
                      name=doc.get("name", ""))


def load_graph(path) -> ProblemGraph:
    with open(path) as fh:
        return parse_graph(fh.read())


def save_graph(g: ProblemGraph, path) -> None:
    with open(path, "w") as fh:
        json.dump(g.to_document(), fh, indent=1)
        fh.write("\n")


def maxcut_cost(g: ProblemGraph, bits) -> float:
    """Total weight of edges cut by the assignment."""
    if g.kind != MAXCUT:
        raise ValueError(f"maxcut_cost called on a {g.kind} graph")
    x = np.asarray(bits)
    if x.shape != (g.n,):
        raise ValueError(f"assignment length {x.shape} does not match n={g.n}")
    xj = x[g.edges_j]
    xk = x[g.edges_k]
    return float(np.sum(g.edge_weights * (xj * (1 - xk) + xk * (1 - xj))))


def mis_cost(g: ProblemGraph, bits) -> float:
    """Selected vertex weight minus the pairwise edge penalty w_j*w_k."""
    if g.kind != MIS:
        raise ValueError(f"mis_cost called on a {g.kind} graph")
    x = np.asarray(bits)
    if x.shape != (g.n,):
        raise ValueError(f"assignment length {x.shape} does not match n={g.n}")
    w = g.vertex_weights
    gain = float(np.sum(w * x))
    penalty = float(np.sum(w[g.edges_j] * w[g.edges_k] * x[g.edges_j] * x[g.edges_k]))
    return gain - penalty


def cost(g: ProblemGraph, bits) -> float:
    return maxcut_cost(g, bits) if g.kind == MAXCUT else mis_cost(g, bits)


def _chunk_costs(g: ProblemGraph, start: int, stop: int) -> np.ndarray:
    """Costs of assignments with basis indices in [start, stop)."""
    idx = np.arange(start, stop, dtype=np.int64)
    out = np.zeros(stop - start)
    if g.kind == MAXCUT:
        for j, k, w in zip(g.edges_j, g.edges_k, g.edge_weights):
            out += w * (((idx >> j) ^ (idx >> k)) & 1)
    else:
        w = g.vertex_weights
        for j in range(g.n):
            out += w[j] * ((idx >> j) & 1)
        for j, k in zip(g.edges_j, g.edges_k):
            out -= w[j] * w[k] * (((idx >> j) & 1) & ((idx >> k) & 1))
    return out


def all_costs(g: ProblemGraph) -> np.ndarray:
    """Cost of every assignment, indexed by little-endian basis index."""
    if g.n > SPECTRUM_CAP:
        raise ValueError(f"full cost table limited to N <= {SPECTRUM_CAP}, got {g.n}")
    return _chunk_costs(g, 0, 1 << g.n)


def brute_force_solve(g: ProblemGraph, cap: int = BRUTE_FORCE_CAP) -> ExactSolution:
    """Exhaustively maximize the cost over all 2^N assignments.

    Streams over the assignment space in chunks so no 2^N table is kept.
    Optima are collected at relative tolerance 1e-12 (float-exact argmax).
    """
    if g.n > cap:
        raise ValueError(f"brute force limited to N <= {cap}, got {g.n}")
    total = 1 << g.n
    chunk = 1 << min(_CHUNK_BITS, g.n)
    c_opt = -np.inf
    for start in range(0, total, chunk):
        c_opt = max(c_opt, float(np.max(_chunk_costs(g, start, start + chunk))))
    tol = 1e-12 * max(1.0, abs(c_opt))
    optima = []
    for start in range(0, total, chunk):
        costs = _chunk_costs(g, start, start + chunk)
        hits = np.nonzero(costs >= c_opt - tol)[0]
        if len(hits):
            optima.append(hits + start)
    idx = np.concatenate(optima)
    return ExactSolution(c_opt=c_opt, optimal_indices=idx, d_opt=len(idx), n=g.n)


def degeneracy_spectrum(g: ProblemGraph, cap: int = SPECTRUM_CAP,
                        rtol: float = COST_MERGE_RTOL) -> CostSpectrum:
    """Group all 2^N costs into (value, degeneracy) pairs, descending."""
    if g.n > cap:
        raise ValueError(f"spectrum limited to N <= {cap}, got {g.n}")
    costs = np.sort(all_costs(g))[::-1]
    values = []
    degens = []
    for c in costs:
        if values and abs(c - values[-1]) <= rtol * max(1.0, abs(values[-1])):
            degens[-1] += 1
        else:
            values.append(float(c))
            degens.append(1)
    return CostSpectrum(values=np.array(values), degeneracies=np.array(degens, dtype=np.int64))


def approximation_ratio(c_obt: float, c_opt: float) -> float:
    if c_opt <= 0:
        raise UndefinedRatioError(f"approximation ratio undefined for c_opt = {c_opt}")
    return c_obt / c_opt


def hardness_parameter(spec: CostSpectrum, c_opt: float, d_opt: int,
                       d_cutoff: int) -> float:
    """Summed degeneracy of non-optimal sub-spaces above the cutoff,
    normalized by c_opt * d_opt. The solution space never enters the sum."""
    if d_cutoff < 0:
        raise ValueError("d_cutoff must be >= 0")
    tol = COST_MERGE_RTOL * max(1.0, abs(c_opt))
    if abs(spec.values[0] - c_opt) > tol or int(spec.degeneracies[0]) != int(d_opt):
        raise ValueError(
            f"spectrum top ({spec.values[0]}, {spec.degeneracies[0]}) does not match "
            f"(c_opt, d_opt) = ({c_opt}, {d_opt})")
    if c_opt <= 0:
        raise UndefinedRatioError("hardness parameter undefined for c_opt <= 0")
    non_opt = spec.degeneracies[1:]
    total = int(np.sum(non_opt[non_opt > d_cutoff]))
    return total / (c_opt * d_opt)


def hardness_convergence_scan(g: ProblemGraph, cutoffs, rtol: float = 1e-3):
    """HP at each cutoff plus the smallest cutoff from which the scan is flat.

    Returns (list of (cutoff, HP), converged_at). converged_at is None when
    the tail never settles within the relative tolerance.
    """
    cutoffs = list(cutoffs)
    if not cutoffs:
        raise ValueError("empty cutoff list")
    spec = degeneracy_spectrum(g)
    c_opt = float(spec.values[0])
    d_opt = int(spec.degeneracies[0])
    hps = [hardness_parameter(spec, c_opt, d_opt, c) for c in cutoffs]

    def settled(a, b):
        return abs(a - b) <= rtol * max(abs(a), abs(b)) or (a == 0.0 and b == 0.0)

    converged_at = None
    for i in range(len(hps)):
        if all(settled(hps[j], hps[j + 1]) for j in range(i, len(hps) - 1)):
            converged_at = cutoffs[i]
            break
    return list(zip(cutoffs, hps)), converged_at


# ---------------------------------------------------------------------------
# Simple graph families used in tests and benchmarks.

def path_graph(n: int, kind: str = MAXCUT, weights=None) -> ProblemGraph:
    edges = [(i, i + 1) for i in range(n - 1)]
    if kind == MAXCUT:
        w = np.ones(n - 1) if weights is None else np.asarray(weights)
        edges = [(j, k, w[i]) for i, (j, k) in enumerate(edges)]
        return make_graph(kind, n, edges, name=f"path{n}")
    return make_graph(kind, n, edges, vertex_weights=weights, name=f"path{n}")


def cycle_graph(n: int, kind: str = MAXCUT, weights=None) -> ProblemGraph:
    edges = [(i, (i + 1) % n) for i in range(n)]
    if kind == MAXCUT:
        w = np.ones(n) if weights is None else np.asarray(weights)
        edges = [(j, k, w[i]) for i, (j, k) in enumerate(edges)]
        return make_graph(kind, n, edges, name=f"cycle{n}")
    return make_graph(kind, n, edges, vertex_weights=weights, name=f"cycle{n}")


def star_graph(n: int, kind: str = MAXCUT, weights=None) -> ProblemGraph:
    """Vertex 0 is the hub; n-1 leaves."""
    edges = [(0, i) for i in range(1, n)]
    if kind == MAXCUT:
        w = np.ones(n - 1) if weights is None else np.asarray(weights)
        edges = [(j, k, w[i]) for i, (j, k) in enumerate(edges)]
        return make_graph(kind, n, edges, name=f"star{n}")
    return make_graph(kind, n, edges, vertex_weights=weights, name=f"star{n}")


def geometric_wheel_graph(n: int, seed: int, jitter: float = 0.03,
                          unit: float = 5.0):
    """Planar weighted Max-Cut instance built from explicit 2D geometry.

    A degree-5 hub with a pentagon ring, radial pendant shells for the
    remaining vertices, and positions jittered so edge weights (set to
    (unit/r)^6, the interaction law) vary across the graph. Returns
    (graph, positions); the positions realize the graph exactly, with all
    non-edge pairs well outside the edge-distance range.
    """
    if n < 7:
        raise ValueError("wheel family needs n >= 7")
    rng = np.random.default_rng(seed)

    def jit():
        return 1.0 + rng.uniform(-jitter, jitter)

    pos = [np.zeros(2)]
    edges = []
    ring = []
    for i in range(5):
        ang = 2 * np.pi * i / 5 * (1 + rng.uniform(-jitter, jitter) / 5)
        p = unit * jit() * np.array([np.cos(ang), np.sin(ang)])
        ring.append(len(pos))
        pos.append(p)
        edges.append((0, len(pos) - 1))
    for i in range(5):
        edges.append((ring[i], ring[(i + 1) % 5]))
    # pendant chains grow radially outward, one per ring vertex; unit-length
    # links keep the (weaker) ring edges setting the exclusion scale
    host = list(ring)
    i = 0
    while len(pos) < n:
        h = host[i % 5]
        direction = pos[h] / np.linalg.norm(pos[h])
        p = pos[h] + unit * jit() * direction
        edges.append((h, len(pos)))
        host[i % 5] = len(pos)
        pos.append(p)
        i += 1
    pos = np.array(pos)
    doc_edges = []
    for j, k in edges:
        r = float(np.linalg.norm(pos[j] - pos[k]))
        doc_edges.append((j, k, (unit / r) ** 6))
    g = make_graph(MAXCUT, n, doc_edges, name=f"wheel{n}s{seed}")
    return g, pos


def random_graph(n: int, kind: str, seed: int, extra_edges: int = 0,
                 max_degree: int | None = None, weighted: bool = True,
                 weight_range=None, name: str = "") -> ProblemGraph:
    """Connected random graph: a random spanning tree plus extra edges.

    Degree caps are respected while adding edges. Max-Cut weights default to
    uniform [0.5, 1.5]; MIS vertex weights default to uniform [1, 2] so the
    edge penalty w_j*w_k always dominates a single vertex weight.
    """
    rng = np.random.default_rng(seed)
    deg = np.zeros(n, dtype=int)
    edges = set()
    order = rng.permutation(n)
    for i in range(1, n):
        # attach to a previous vertex with spare degree
        candidates = [int(v) for v in order[:i]
                      if max_degree is None or deg[v] < max_degree]
        if not candidates:
            candidates = [int(v) for v in order[:i]]
        v = candidates[rng.integers(len(candidates))]
        u = int(order[i])
        edges.add((min(u, v), max(u, v)))
        deg[u] += 1
        deg[v] += 1
    attempts = 0
    added = 0
    while added < extra_edges and attempts < 50 * max(1, extra_edges):
        attempts += 1
        u, v = rng.integers(n), rng.integers(n)
        u, v = int(u), int(v)
        if u == v:
            continue
        key = (min(u, v), max(u, v))
        if key in edges:
            continue
        if max_degree is not None and (deg[u] >= max_degree or deg[v] >= max_degree):
            continue
        edges.add(key)
        deg[u] += 1
        deg[v] += 1
        added += 1
    edge_list = sorted(edges)
    if kind == MAXCUT:
        lo, hi = weight_range or (0.5, 1.5)
        if weighted:
            ws = rng.uniform(lo, hi, size=len(edge_list))
        else:
            ws = np.ones(len(edge_list))
        doc_edges = [(j, k, float(w)) for (j, k), w in zip(edge_list, ws)]
        return make_graph(kind, n, doc_edges, name=name or f"rand{n}s{seed}")
    lo, hi = weight_range or (1.0, 2.0)
    vw = rng.uniform(lo, hi, size=n) if weighted else np.ones(n)
    return make_graph(kind, n, edge_list, vertex_weights=vw, name=name or f"rand{n}s{seed}")
