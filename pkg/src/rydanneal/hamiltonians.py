"""Diagonal target Hamiltonians and the driven Rydberg Hamiltonian.

Basis convention (fixed package-wide): little-endian, atom j excited iff
bit j of the basis index is 1; |g> <-> 0 <-> X_j = 0, |e> <-> 1 <-> X_j = 1.
Energies are stored in units of 2*pi MHz; only the time propagator converts
them to angular frequencies.

Sign convention: the driven diagonal is E(b) = -sum_j Delta_j n_j(b)
+ sum_{j<k} V_jk n_j n_k, so positive detuning rewards excitation. The final
detunings produced by the encoding are chosen so that this diagonal equals
the target Hamiltonian up to a constant and so that |g...g> is the ground
state at the (negative-detuning) start of the protocol.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphs import MAXCUT, MIS, ProblemGraph, index_to_bits

GROUND_SPACE_RTOL = 1e-9


@dataclass(frozen=True)
class DiagonalHamiltonian:
    energies: np.ndarray
    label: str
    n_atoms: int

    def __post_init__(self):
        if len(self.energies) != 1 << self.n_atoms:
            raise ValueError("energies length must be 2^n_atoms")
        if not np.all(np.isfinite(self.energies)):
            raise ValueError("non-finite diagonal energy")

    @property
    def dim(self) -> int:
        return 1 << self.n_atoms


def _occupation(n: int) -> np.ndarray:
    """(2^n, n) matrix of excitation numbers n_j(b)."""
    return index_to_bits(np.arange(1 << n), n).astype(float)


def scaled_weights(g: ProblemGraph, scale: float) -> np.ndarray:
    """Weights entering the target Hamiltonian at interaction scale `scale`.

    Max-Cut edge weights scale linearly (V = 4 w'); MIS vertex weights scale
    as sqrt(scale) so the pairwise penalty w'_j w'_k scales linearly.
    """
    if scale <= 0:
        raise ValueError("scale must be positive")
    if g.kind == MAXCUT:
        return scale * g.edge_weights
    return np.sqrt(scale) * g.vertex_weights


def build_target_maxcut(g: ProblemGraph, scale: float = 1.0) -> DiagonalHamiltonian:
    """sum_{j<k} w'_jk sigma_j sigma_k with sigma = +1 for |g>, -1 for |e>."""
    if g.kind != MAXCUT:
        raise ValueError(f"expected a maxcut graph, got {g.kind}")
    w = scaled_weights(g, scale)
    occ = _occupation(g.n)
    sigma = 1.0 - 2.0 * occ
    energies = np.zeros(1 << g.n)
    for j, k, wjk in zip(g.edges_j, g.edges_k, w):
        energies += wjk * sigma[:, j] * sigma[:, k]
    return DiagonalHamiltonian(energies=energies, label="TargetMaxCut", n_atoms=g.n)


def build_target_mis(g: ProblemGraph, scale: float = 1.0) -> DiagonalHamiltonian:
    """MIS spin Hamiltonian: minimizing it maximizes the MIS cost function.

    E(b) = sum_j (-w'_j/2 + 1/4 sum_k e_jk w'_j w'_k) Z_j
         + 1/4 sum_{j<k} e_jk w'_j w'_k Z_j Z_k,  Z_j = 2 n_j - 1.
    """
    if g.kind != MIS:
        raise ValueError(f"expected a mis graph, got {g.kind}")
    w = scaled_weights(g, scale)
    occ = _occupation(g.n)
    z = 2.0 * occ - 1.0
    neighbor_weight = np.zeros(g.n)
    np.add.at(neighbor_weight, g.edges_j, w[g.edges_k])
    np.add.at(neighbor_weight, g.edges_k, w[g.edges_j])
    energies = z @ (-0.5 * w + 0.25 * w * neighbor_weight)
    for j, k in zip(g.edges_j, g.edges_k):
        energies += 0.25 * w[j] * w[k] * z[:, j] * z[:, k]
    return DiagonalHamiltonian(energies=energies, label="TargetMIS", n_atoms=g.n)


def build_target(g: ProblemGraph, scale: float = 1.0) -> DiagonalHamiltonian:
    return build_target_maxcut(g, scale) if g.kind == MAXCUT else build_target_mis(g, scale)


def rydberg_diagonal(detunings, v) -> DiagonalHamiltonian:
    """Diagonal of the driven Hamiltonian: -sum Delta_j n_j + sum_{j<k} V_jk n_j n_k."""
    detunings = np.asarray(detunings, dtype=float)
    v = np.asarray(v, dtype=float)
    n = len(detunings)
    if v.shape != (n, n):
        raise ValueError(f"interaction matrix shape {v.shape}, expected ({n}, {n})")
    if not np.allclose(v, v.T, rtol=0, atol=1e-12):
        raise ValueError("interaction matrix must be symmetric")
    if np.any(np.abs(np.diag(v)) > 0):
        raise ValueError("interaction matrix must have zero diagonal")
    occ = _occupation(n)
    energies = -occ @ detunings
    for j in range(n):
        for k in range(j + 1, n):
            if v[j, k] != 0.0:
                energies += v[j, k] * occ[:, j] * occ[:, k]
    return DiagonalHamiltonian(energies=energies, label="RydbergDiagonal", n_atoms=n)


def apply_hamiltonian(state, omega: float, diag: DiagonalHamiltonian) -> np.ndarray:
    """H|psi> with H = diag + (omega/2) sum_j sigma^x_j, matrix-free."""
    psi = np.asarray(state)
    if psi.shape != (diag.dim,):
        raise ValueError(f"state dimension {psi.shape} does not match 2^{diag.n_atoms}")
    out = diag.energies * psi
    if omega != 0.0:
        half = 0.5 * omega
        flipped = psi.reshape((2,) * diag.n_atoms)
        for j in range(diag.n_atoms):
            axis = diag.n_atoms - 1 - j  # little-endian: bit j is the last axis
            out += half * np.flip(flipped, axis=axis).reshape(-1)
    return out


def ground_space(diag: DiagonalHamiltonian, tol: float = GROUND_SPACE_RTOL):
    """(ground energy, basis indices within tol*max(1,|E_min|) of it)."""
    e_min = float(np.min(diag.energies))
    window = tol * max(1.0, abs(e_min))
    idx = np.nonzero(diag.energies <= e_min + window)[0]
    return e_min, idx


def constant_shift_variance(ryd: DiagonalHamiltonian, target: DiagonalHamiltonian) -> float:
    """Relative variance of (ryd - target); ~0 certifies equality up to a constant."""
    diff = ryd.energies - target.energies
    norm = max(1.0, float(np.max(np.abs(ryd.energies))), float(np.max(np.abs(diff))))
    return float(np.var(diff)) / norm ** 2


def export_diagonal(diag: DiagonalHamiltonian):
    """Rows of (index, bitstring, energy) for debugging dumps."""
    bits = index_to_bits(np.arange(diag.dim), diag.n_atoms)
    return [(int(i), "".join(str(int(b)) for b in bits[i]), float(diag.energies[i]))
            for i in range(diag.dim)]
