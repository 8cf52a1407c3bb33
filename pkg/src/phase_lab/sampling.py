"""Seeded random instances for sweeps and property tests."""

from __future__ import annotations

import numpy as np

from .evolution import HamiltonianSpec, TimeGrid, Trajectory, evolve
from .histories import HistoryFamily
from .state_space import transported_phases


def random_state(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Normalized complex Gaussian vector (rotation-invariant)."""
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_hermitian(rng: np.random.Generator, dim: int, norm: float = 1.0) -> np.ndarray:
    """Random Hermitian matrix scaled to spectral norm ``norm``."""
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = 0.5 * (a + a.conj().T)
    return h * (norm / np.linalg.norm(h, 2))


def random_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(a)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_density_matrix(rng: np.random.Generator, dim: int) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def random_decomposition(rng: np.random.Generator, dim: int) -> list:
    """Projectors onto a random partition of a random orthonormal basis."""
    u = random_unitary(rng, dim)
    cuts = sorted(rng.choice(np.arange(1, dim), size=rng.integers(0, dim), replace=False)) if dim > 1 else []
    bounds = [0, *cuts, dim]
    return [u[:, a:b] @ u[:, a:b].conj().T for a, b in zip(bounds[:-1], bounds[1:])]


def random_family(rng: np.random.Generator, dim: int, n_times: int) -> HistoryFamily:
    times = np.sort(rng.uniform(0.0, 1.0, size=n_times))
    return HistoryFamily.from_decompositions([(float(t), random_decomposition(rng, dim)) for t in times])


def random_trajectory(rng: np.random.Generator, dim: int, steps: int, step_size: float = 0.05) -> Trajectory:
    """Random smooth-ish walk on the unit sphere with random per-step phases.

    Not generated by a Hamiltonian; exercises the phase functionals on
    arbitrary curves.
    """
    states = np.empty((steps + 1, dim), dtype=np.complex128)
    states[0] = random_state(rng, dim)
    velocity = random_state(rng, dim)
    for k in range(steps):
        velocity = velocity + 0.3 * random_state(rng, dim)
        velocity /= np.linalg.norm(velocity)
        nxt = states[k] + step_size * velocity
        states[k + 1] = nxt / np.linalg.norm(nxt)
    states *= np.exp(1j * rng.uniform(-np.pi, np.pi, size=steps + 1))[:, None]
    return Trajectory(TimeGrid(np.linspace(0.0, 1.0, steps + 1)), states)


def transported_bases(h: HamiltonianSpec, grid: TimeGrid, basis: np.ndarray) -> list:
    """Evolve each column of ``basis`` under ``h`` and parallel transport it."""
    out = []
    for col in basis.T:
        traj = evolve(h, col, grid)
        out.append(traj.with_phases(transported_phases(traj.states)))
    return out
