"""Schrodinger propagation under a pulse schedule, with observable recording.

Fixed-step RK4 on i d|psi>/dt = 2*pi * H(t) |psi> with
H(t) = -sum_j Delta_G(t) Delta_j(T) n_j + sum_{j<k} V_jk n_j n_k
       + (Omega(t)/2) sum_j sigma^x_j,
energies in 2*pi MHz and time in us (the 2*pi converts stored frequencies
to angular ones). The integrator subtracts the instantaneous diagonal
ground energy (a pure global phase, undone analytically on the sampled
states) to keep phase accumulation slow; norm drift is recorded, corrected
above RENORM_THRESHOLD and fatal above DRIFT_HARD_LIMIT.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy.sparse.linalg import LinearOperator, eigsh

from .graphs import index_to_bits
from .hamiltonians import DiagonalHamiltonian, apply_hamiltonian, ground_space
from .pulses import PulseSchedule

TWO_PI = 2.0 * np.pi
DEFAULT_STEPS_PER_US = 2000
DEFAULT_SAMPLES = 200
DEFAULT_POP_THRESHOLD = 1e-3
RENORM_THRESHOLD = 1e-9
DRIFT_HARD_LIMIT = 1e-6
SPECTRUM_FULL_MAX_ATOMS = 12
SPECTRUM_MAX_ATOMS = 14
_SHIFT_PROBES = 65


class IntegrationError(RuntimeError):
    """Norm drift exceeded the hard limit; decrease the time step."""


@dataclass(frozen=True)
class RecordingOptions:
    n_samples: int = DEFAULT_SAMPLES
    population_threshold: float = DEFAULT_POP_THRESHOLD
    record_populations: bool = False
    population_times: tuple = ()      # extra absolute times for snapshots
    record_spectrum: bool = False
    spectrum_k: int | None = None
    target: DiagonalHamiltonian | None = None
    ground_indices: np.ndarray | None = None


@dataclass
class Trajectory:
    times: np.ndarray
    energy: np.ndarray | None
    fid: np.ndarray | None
    norm_drift: np.ndarray
    final_state: np.ndarray
    populations: list = field(default_factory=list)   # (t, [(bitstring, p), ...])
    spectra: list = field(default_factory=list)       # (t, eigenvalues)
    n_renorms: int = 0
    max_drift: float = 0.0
    steps: int = 0

    @property
    def final_energy(self) -> float | None:
        return None if self.energy is None else float(self.energy[-1])

    @property
    def final_fidelity(self) -> float | None:
        return None if self.fid is None else float(self.fid[-1])


def initial_ground_state(n: int) -> np.ndarray:
    """|g...g>, the protocol's starting state."""
    psi = np.zeros(1 << n, dtype=np.complex128)
    psi[0] = 1.0
    return psi


@njit(cache=True)
def _rk4_segment(psi, diag0, diag1, shift, g_half, c_half, dt, nsteps):
    """Advance psi by nsteps RK4 steps in place.

    diag0/diag1: angular-frequency diagonals (interaction / detuning-pattern
    parts); shift, g_half, c_half: per-half-step shift, detuning factor and
    angular Omega/2, length 2*nsteps + 1.
    """
    dim = psi.shape[0]
    n = 0
    d = dim
    while d > 1:
        d >>= 1
        n += 1
    k1 = np.empty(dim, np.complex128)
    k2 = np.empty(dim, np.complex128)
    k3 = np.empty(dim, np.complex128)
    tmp = np.empty(dim, np.complex128)
    for step in range(nsteps):
        i0 = 2 * step
        g = g_half[i0]
        c = c_half[i0]
        s = shift[i0]
        for b in range(dim):
            acc = 0.0 + 0.0j
            for j in range(n):
                acc += psi[b ^ (1 << j)]
            k1[b] = -1j * ((diag0[b] + g * diag1[b] - s) * psi[b] + c * acc)
        g = g_half[i0 + 1]
        c = c_half[i0 + 1]
        s = shift[i0 + 1]
        for b in range(dim):
            tmp[b] = psi[b] + 0.5 * dt * k1[b]
        for b in range(dim):
            acc = 0.0 + 0.0j
            for j in range(n):
                acc += tmp[b ^ (1 << j)]
            k2[b] = -1j * ((diag0[b] + g * diag1[b] - s) * tmp[b] + c * acc)
        for b in range(dim):
            tmp[b] = psi[b] + 0.5 * dt * k2[b]
        for b in range(dim):
            acc = 0.0 + 0.0j
            for j in range(n):
                acc += tmp[b ^ (1 << j)]
            k3[b] = -1j * ((diag0[b] + g * diag1[b] - s) * tmp[b] + c * acc)
        g = g_half[i0 + 2]
        c = c_half[i0 + 2]
        s = shift[i0 + 2]
        for b in range(dim):
            tmp[b] = psi[b] + dt * k3[b]
        for b in range(dim):
            acc = 0.0 + 0.0j
            for j in range(n):
                acc += tmp[b ^ (1 << j)]
            acc = -1j * ((diag0[b] + g * diag1[b] - s) * tmp[b] + c * acc)
            psi[b] = psi[b] + (dt / 6.0) * (k1[b] + 2.0 * k2[b] + 2.0 * k3[b] + acc)


def _diagonal_parts(sched: PulseSchedule):
    """Split the diagonal into interaction and detuning-pattern parts.

    diag(t) = d0 + Delta_G(t) * d1 with d0 the interaction diagonal and
    d1(b) = -sum_j Delta_j(T) n_j(b).
    """
    n = sched.n_atoms
    occ = index_to_bits(np.arange(1 << n), n).astype(float)
    d1 = -occ @ sched.final_detunings
    d0 = np.zeros(1 << n)
    v = sched.realized_v
    for j in range(n):
        for k in range(j + 1, n):
            if v[j, k] != 0.0:
                d0 += v[j, k] * occ[:, j] * occ[:, k]
    return d0, d1


def propagate(initial, sched: PulseSchedule, steps: int | None = None,
              record: RecordingOptions = RecordingOptions()) -> Trajectory:
    """Integrate the driven dynamics over [0, T] and sample observables."""
    psi = np.array(initial, dtype=np.complex128)
    dim = 1 << sched.n_atoms
    if psi.shape != (dim,):
        raise ValueError(f"state dimension {psi.shape} does not match 2^{sched.n_atoms}")
    if steps is None:
        steps = max(1, int(round(sched.duration * DEFAULT_STEPS_PER_US)))
    if steps < 1:
        raise ValueError("steps must be >= 1")

    dt = sched.duration / steps
    t_half = np.linspace(0.0, sched.duration, 2 * steps + 1)
    g_half = np.ascontiguousarray(sched.delta_g(t_half), dtype=float)
    c_half = np.ascontiguousarray(TWO_PI * 0.5 * sched.omega(t_half), dtype=float)

    d0, d1 = _diagonal_parts(sched)
    d0a = TWO_PI * d0
    d1a = TWO_PI * d1
    # instantaneous diagonal ground energy, interpolated to the half grid;
    # subtracting it is a pure global phase that we undo on sampled states
    probes = np.linspace(0.0, sched.duration, _SHIFT_PROBES)
    probe_min = np.array([np.min(d0a + g * d1a) for g in sched.delta_g(probes)])
    shift = np.interp(t_half, probes, probe_min)

    sample_steps = np.unique(np.round(
        np.linspace(0, steps, max(2, record.n_samples + 1))).astype(int))
    extra = set()
    for t_req in record.population_times:
        extra.add(int(round(np.clip(t_req, 0, sched.duration) / dt)))
    sample_steps = np.unique(np.concatenate([sample_steps, sorted(extra)]).astype(int)) \
        if extra else sample_steps

    target = record.target
    gs_idx = record.ground_indices
    if target is not None and gs_idx is None:
        _, gs_idx = ground_space(target)

    times, energies, fids, drifts = [], [], [], []
    populations, spectra = [], []
    n_renorms = 0
    max_drift = 0.0
    phase = 0.0  # accumulated integral of the shift, times 2*pi already folded

    def observe(step_idx):
        nonlocal max_drift, n_renorms
        t = step_idx * dt
        times.append(t)
        prob = np.abs(psi) ** 2
        norm2 = float(prob.sum())
        drift = abs(norm2 - 1.0)
        max_drift = max(max_drift, drift)
        if drift > DRIFT_HARD_LIMIT:
            raise IntegrationError(
                f"norm drift {drift:.3e} at t = {t:.4f} us exceeds {DRIFT_HARD_LIMIT}; "
                "use more integration steps")
        if drift > RENORM_THRESHOLD:
            psi[:] /= np.sqrt(norm2)
            prob /= norm2
            n_renorms += 1
        drifts.append(drift)
        if target is not None:
            energies.append(float(prob @ target.energies))
            fids.append(float(prob[gs_idx].sum()))
        if record.record_populations:
            want = not record.population_times or any(
                abs(t - tr) <= dt for tr in record.population_times) or \
                step_idx in (0, steps)
            if want:
                populations.append((t, population_snapshot(psi, record.population_threshold)))
        if record.record_spectrum:
            g = sched.delta_g(t)
            diag_t = DiagonalHamiltonian(d0 + float(g) * d1, "RydbergDiagonal",
                                         sched.n_atoms)
            spectra.append((t, instantaneous_spectrum(float(sched.omega(t)), diag_t,
                                                      record.spectrum_k)))

    observe(0)
    prev = 0
    for s_idx in sample_steps[1:]:
        nseg = int(s_idx - prev)
        seg = slice(2 * prev, 2 * s_idx + 1)
        _rk4_segment(psi, d0a, d1a, shift[seg], g_half[seg], c_half[seg], dt, nseg)
        # trapezoid integral of the (piecewise-linear) shift over the segment
        phase += float(np.trapezoid(shift[seg], dx=dt / 2))
        prev = s_idx
        observe(int(s_idx))

    final = psi * np.exp(-1j * phase)
    return Trajectory(
        times=np.array(times),
        energy=np.array(energies) if target is not None else None,
        fid=np.array(fids) if target is not None else None,
        norm_drift=np.array(drifts),
        final_state=final,
        populations=populations,
        spectra=spectra,
        n_renorms=n_renorms,
        max_drift=max_drift,
        steps=steps,
    )


def expectation_energy(state, target: DiagonalHamiltonian) -> float:
    psi = np.asarray(state)
    if psi.shape != (target.dim,):
        raise ValueError("state dimension does not match the Hamiltonian")
    return float((np.abs(psi) ** 2) @ target.energies)


def fidelity(state, ground_indices) -> float:
    """Total population on the (degenerate) ground manifold."""
    idx = np.asarray(ground_indices)
    if idx.size == 0:
        raise ValueError("empty ground set")
    psi = np.asarray(state)
    return float(np.sum(np.abs(psi[idx]) ** 2))


def instantaneous_spectrum(omega: float, diag: DiagonalHamiltonian,
                           k: int | None = None) -> np.ndarray:
    """Lowest k eigenvalues of H(omega, diag), all of them when k is None."""
    n = diag.n_atoms
    if k is None or k >= diag.dim - 1:
        if n > SPECTRUM_FULL_MAX_ATOMS:
            raise ValueError(
                f"full spectrum limited to N <= {SPECTRUM_FULL_MAX_ATOMS}, got {n}")
        if omega == 0.0:
            vals = np.sort(diag.energies)
        else:
            h = np.diag(diag.energies.astype(complex))
            idx = np.arange(diag.dim)
            for j in range(n):
                h[idx, idx ^ (1 << j)] += 0.5 * omega
            vals = np.linalg.eigvalsh(h)
        return vals if k is None else vals[:k]
    if n > SPECTRUM_MAX_ATOMS:
        raise ValueError(f"spectrum limited to N <= {SPECTRUM_MAX_ATOMS}, got {n}")
    op = LinearOperator((diag.dim, diag.dim), dtype=np.complex128,
                        matvec=lambda v: apply_hamiltonian(v, omega, diag))
    vals = eigsh(op, k=k, which="SA", return_eigenvectors=False)
    return np.sort(vals)


def population_snapshot(state, threshold: float = DEFAULT_POP_THRESHOLD):
    """Basis populations above threshold, sorted descending, as bitstrings."""
    if not 0.0 <= threshold < 1.0:
        raise ValueError("threshold must be in [0, 1)")
    psi = np.asarray(state)
    n = int(np.log2(len(psi)))
    prob = np.abs(psi) ** 2
    idx = np.nonzero(prob > threshold)[0]
    order = idx[np.argsort(prob[idx])[::-1]]
    bits = index_to_bits(order, n)
    return [("".join(str(int(b)) for b in bits[i]), float(prob[order[i]]))
            for i in range(len(order))]


def decode_solutions(state, threshold: float = DEFAULT_POP_THRESHOLD):
    """Populated basis states as problem assignments (bit 1 <-> |e> <-> X=1)."""
    snap = population_snapshot(state, threshold)
    return [(np.array([int(c) for c in bits], dtype=np.uint8), p)
            for bits, p in snap]


def export_trajectory(traj: Trajectory, path_prefix: str) -> list:
    """Write (t, E, F, drift) and sparse population CSVs; returns the paths."""
    paths = []
    main = f"{path_prefix}_trajectory.csv"
    with open(main, "w") as fh:
        fh.write("t_us,energy_2pi_mhz,fidelity,norm_drift\n")
        for i, t in enumerate(traj.times):
            e = "" if traj.energy is None else f"{traj.energy[i]:.12g}"
            f = "" if traj.fid is None else f"{traj.fid[i]:.12g}"
            fh.write(f"{t:.6f},{e},{f},{traj.norm_drift[i]:.3e}\n")
    paths.append(main)
    if traj.populations:
        pop = f"{path_prefix}_populations.csv"
        with open(pop, "w") as fh:
            fh.write("t_us,bitstring,probability\n")  # bit order: atom 0 first
            for t, entries in traj.populations:
                for bits, p in entries:
                    fh.write(f"{t:.6f},{bits},{p:.9g}\n")
        paths.append(pop)
    return paths
