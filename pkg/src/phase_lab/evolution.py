"""Unitary time evolution on a time grid (hbar = 1).

Each step applies the exact unitary ``exp(-i H(t_mid) dt)`` built from the
eigendecomposition of the Hermitian midpoint Hamiltonian. Sampled
Hamiltonians are interpolated linearly between their samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionMismatch, GridTooCoarse, InvalidInput, NonHermitian
from .state_space import (
    StateLike,
    StateVector,
    as_amplitudes,
    as_square_matrix,
    principal_arg,
    transported_phases,
)

HERMITIAN_TOL = 1e-10
OVERLAP_COLLAPSE = 0.5
CYCLIC_TOL = 1e-8
DEFAULT_MAX_STEP = 1e-3

KINDS = ("static", "sampled", "zero")


def _hermitian(m, name: str) -> np.ndarray:
    a = as_square_matrix(m, name)
    dev = float(np.max(np.abs(a - a.conj().T)))
    if dev >= HERMITIAN_TOL:
        raise NonHermitian(f"{name} is not Hermitian (max |H - H^dagger| = {dev:.3e})")
    return 0.5 * (a + a.conj().T)


@dataclass(frozen=True, eq=False)
class HamiltonianSpec:
    """A static, sampled (piecewise-linear) or identically zero Hamiltonian."""

    dim: int
    kind: str = "zero"
    matrix: Optional[np.ndarray] = None
    sample_times: Optional[np.ndarray] = None
    sample_matrices: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.dim < 1:
            raise InvalidInput("Hamiltonian dimension must be positive")
        if self.kind not in KINDS:
            raise InvalidInput(f"unknown Hamiltonian kind {self.kind!r}")
        if self.kind == "static":
            m = _hermitian(self.matrix, "Hamiltonian")
            if m.shape[0] != self.dim:
                raise DimensionMismatch(f"Hamiltonian is {m.shape[0]}x{m.shape[0]}, expected dim {self.dim}")
            m.setflags(write=False)
            object.__setattr__(self, "matrix", m)
        elif self.kind == "sampled":
            times = np.asarray(self.sample_times, dtype=float)
            if times.ndim != 1 or times.size < 1:
                raise InvalidInput("sampled Hamiltonian needs at least one sample")
            if times.size > 1 and np.any(np.diff(times) <= 0):
                raise InvalidInput("sample times must be strictly increasing")
            mats = np.stack([_hermitian(m, f"Hamiltonian sample {i}") for i, m in enumerate(self.sample_matrices)])
            if mats.shape[0] != times.size:
                raise InvalidInput("number of sample matrices must match number of sample times")
            if mats.shape[1] != self.dim:
                raise DimensionMismatch(f"Hamiltonian samples are {mats.shape[1]}-dimensional, expected {self.dim}")
            times.setflags(write=False)
            mats.setflags(write=False)
            object.__setattr__(self, "sample_times", times)
            object.__setattr__(self, "sample_matrices", mats)

    @classmethod
    def static(cls, matrix) -> "HamiltonianSpec":
        m = np.asarray(matrix)
        return cls(dim=m.shape[0], kind="static", matrix=m)

    @classmethod
    def sampled(cls, times: Sequence[float], matrices) -> "HamiltonianSpec":
        mats = [np.asarray(m) for m in matrices]
        return cls(dim=mats[0].shape[0], kind="sampled", sample_times=np.asarray(times), sample_matrices=mats)

    @classmethod
    def zero(cls, dim: int) -> "HamiltonianSpec":
        return cls(dim=dim, kind="zero")

    def at(self, t: float) -> np.ndarray:
        """The Hamiltonian matrix at time ``t``."""
        if self.kind == "zero":
            return np.zeros((self.dim, self.dim), dtype=np.complex128)
        if self.kind == "static":
            return self.matrix
        ts = self.sample_times
        if ts.size == 1:
            return self.sample_matrices[0]
        span = ts[-1] - ts[0]
        if t < ts[0] - 1e-12 * span or t > ts[-1] + 1e-12 * span:
            raise InvalidInput(f"time {t} lies outside the sampled range [{ts[0]}, {ts[-1]}]")
        j = int(np.clip(np.searchsorted(ts, t, side="right") - 1, 0, ts.size - 2))
        w = (t - ts[j]) / (ts[j + 1] - ts[j])
        return (1.0 - w) * self.sample_matrices[j] + w * self.sample_matrices[j + 1]

    def expectation(self, t: float, states: np.ndarray) -> np.ndarray:
        """<psi|H(t)|psi> for each row of ``states`` (real part)."""
        h = self.at(t)
        return np.real(np.einsum("ki,ij,kj->k", states.conj(), h, states))


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Strictly increasing times t_0 < t_1 < ... < t_n with n >= 1."""

    times: np.ndarray

    def __post_init__(self):
        t = np.array(self.times, dtype=float).reshape(-1)
        if t.size < 2:
            raise InvalidInput("a time grid needs at least two points")
        if not np.all(np.isfinite(t)):
            raise InvalidInput("grid times must be finite")
        if np.any(np.diff(t) <= 0):
            raise InvalidInput("grid times must be strictly increasing")
        t.setflags(write=False)
        object.__setattr__(self, "times", t)

    @classmethod
    def uniform(cls, t0: float, t1: float, steps: int) -> "TimeGrid":
        if steps < 1:
            raise InvalidInput("a uniform grid needs steps >= 1")
        return cls(np.linspace(t0, t1, steps + 1))

    @property
    def steps(self) -> int:
        return self.times.size - 1

    @property
    def max_step(self) -> float:
        return float(np.max(np.diff(self.times)))

    def check_max_step(self, max_step: float) -> None:
        if self.max_step > max_step * (1 + 1e-12):
            raise GridTooCoarse(f"grid step {self.max_step} exceeds the configured maximum {max_step}")


@dataclass(frozen=True, eq=False)
class Trajectory:
    """A sampled curve t_k -> psi_k of normalized states.

    ``states`` is an (n+1, dim) complex array. Construction enforces unit norms
    and the overlap-collapse guard (consecutive |<psi_k|psi_k+1>| > 0.5);
    pass ``check_overlaps=False`` only for deliberately coarse hand-built chains.
    """

    grid: TimeGrid
    states: np.ndarray
    generator: Optional[HamiltonianSpec] = None
    check_overlaps: bool = field(default=True, repr=False)

    def __post_init__(self):
        grid = self.grid if isinstance(self.grid, TimeGrid) else TimeGrid(self.grid)
        object.__setattr__(self, "grid", grid)
        if isinstance(self.states, np.ndarray):
            s = np.array(self.states, dtype=np.complex128)
        else:
            s = np.array([as_amplitudes(x) for x in self.states])
        if s.ndim != 2 or s.shape[0] != grid.times.size:
            raise InvalidInput(f"need one state per grid time ({grid.times.size}), got array of shape {s.shape}")
        if not np.all(np.isfinite(s)):
            raise InvalidInput("trajectory states must be finite")
        norms = np.linalg.norm(s, axis=1)
        if np.max(np.abs(norms - 1.0)) >= 1e-9:
            raise InvalidInput("trajectory states must be normalized")
        s = s / norms[:, None]
        if self.generator is not None and self.generator.dim != s.shape[1]:
            raise DimensionMismatch("generator dimension does not match the states")
        if self.check_overlaps:
            links = np.abs(np.einsum("ki,ki->k", s[:-1].conj(), s[1:]))
            bad = np.flatnonzero(links <= OVERLAP_COLLAPSE)
            if bad.size:
                k = int(bad[0])
                raise GridTooCoarse(
                    f"overlap |<psi_{k}|psi_{k + 1}>| = {links[k]:.3g} <= {OVERLAP_COLLAPSE}; refine the grid"
                )
        s.setflags(write=False)
        object.__setattr__(self, "states", s)

    @classmethod
    def from_states(cls, states, times=None, generator=None, check_overlaps=True) -> "Trajectory":
        arr = np.array([as_amplitudes(x) for x in states])
        if times is None:
            times = np.arange(arr.shape[0], dtype=float)
        return cls(TimeGrid(times), arr, generator, check_overlaps)

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def __len__(self) -> int:
        return self.states.shape[0]

    def state(self, k: int) -> StateVector:
        return StateVector(self.states[k])

    def links(self) -> np.ndarray:
        """Consecutive overlaps <psi_k|psi_k+1>, shape (n,)."""
        return np.einsum("ki,ki->k", self.states[:-1].conj(), self.states[1:])

    def segment(self, start: int, stop: int) -> "Trajectory":
        """Sub-trajectory over grid indices start..stop inclusive."""
        n = len(self)
        if start < 0:
            start += n
        if stop < 0:
            stop += n
        if not 0 <= start < stop < n:
            raise InvalidInput(f"invalid segment [{start}, {stop}] for trajectory of length {n}")
        return Trajectory(
            TimeGrid(self.times[start : stop + 1]), self.states[start : stop + 1], self.generator, check_overlaps=False
        )

    def with_phases(self, phases: np.ndarray) -> "Trajectory":
        """Same projective curve with every state multiplied by a unit phase.

        The generator is dropped: a rephased curve no longer solves the
        original Schrodinger equation, so only the overlap route applies.
        """
        return Trajectory(self.grid, self.states * np.asarray(phases)[:, None], None, check_overlaps=False)


def _step_unitary(h: np.ndarray, dt: float) -> np.ndarray:
    energies, vecs = np.linalg.eigh(h)
    return (vecs * np.exp(-1j * energies * dt)) @ vecs.conj().T


def propagate(h: HamiltonianSpec, psi0: StateLike, times) -> np.ndarray:
    """Raw (n+1, dim) state array, without renormalization or overlap checks.

    Static Hamiltonians are diagonalized once and the states are written in
    closed form, which is the same product of step unitaries without the
    accumulated rounding.
    """
    psi = as_amplitudes(psi0)
    if psi.shape[0] != h.dim:
        raise DimensionMismatch(f"state dimension {psi.shape[0]} does not match Hamiltonian dimension {h.dim}")
    t = np.asarray(times, dtype=float)
    if h.kind == "zero":
        return np.tile(psi, (t.size, 1))
    if h.kind == "static":
        energies, vecs = np.linalg.eigh(h.matrix)
        coeffs = vecs.conj().T @ psi
        return (np.exp(-1j * np.outer(t - t[0], energies)) * coeffs) @ vecs.T
    states = np.empty((t.size, h.dim), dtype=np.complex128)
    states[0] = psi
    for k in range(t.size - 1):
        dt = t[k + 1] - t[k]
        states[k + 1] = _step_unitary(h.at(t[k] + 0.5 * dt), dt) @ states[k]
    return states


def evolve(h: HamiltonianSpec, psi0: StateLike, grid: TimeGrid) -> Trajectory:
    """Propagate ``psi0`` across ``grid`` under ``h``; states are renormalized."""
    if not isinstance(grid, TimeGrid):
        grid = TimeGrid(grid)
    states = propagate(h, psi0, grid.times)
    return Trajectory(grid, states / np.linalg.norm(states, axis=1)[:, None], h)


def propagator(h: HamiltonianSpec, t0: float, t1: float, max_step: float = DEFAULT_MAX_STEP) -> np.ndarray:
    """U(t1, t0) as a product of midpoint step unitaries with steps <= max_step."""
    if t1 < t0:
        raise InvalidInput("propagator requires t1 >= t0")
    eye = np.eye(h.dim, dtype=np.complex128)
    if t1 == t0 or h.kind == "zero":
        return eye
    if h.kind == "static":
        return _step_unitary(h.matrix, t1 - t0)
    steps = max(1, math.ceil((t1 - t0) / max_step - 1e-9))
    edges = np.linspace(t0, t1, steps + 1)
    u = eye
    for a, b in zip(edges[:-1], edges[1:]):
        u = _step_unitary(h.at(0.5 * (a + b)), b - a) @ u
    return u


def is_cyclic(traj: Trajectory, tol: float = CYCLIC_TOL) -> Optional[float]:
    """Total phase Arg<psi_0|psi_T> if the final state returns to the initial ray."""
    g = complex(np.vdot(traj.states[0], traj.states[-1]))
    if abs(g) > 1.0 - tol:
        return principal_arg(g)
    return None


def evolve_parallel(h: HamiltonianSpec, psi0: StateLike, grid: TimeGrid) -> Trajectory:
    """Like :func:`evolve`, with per-state phases chosen so every consecutive
    overlap is real-positive (discrete parallel transport)."""
    traj = evolve(h, psi0, grid)
    return traj.with_phases(transported_phases(traj.states))
