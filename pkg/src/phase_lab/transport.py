"""Discrete parallel transport and the superposition counterexample.

A sampled curve is parallel transported when every consecutive overlap
``<psi_k|psi_k+1>`` is real and positive; the per-step defect is
``|Arg <psi_k|psi_k+1>|``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidInput, OrthogonalStates
from .evolution import Trajectory
from .state_space import transported_phases

TRANSPORT_TOL = 1e-10
ORTHONORMAL_TOL = 1e-8


@dataclass(frozen=True)
class TransportReport:
    max_defect: float
    per_step: np.ndarray
    is_transported: bool

    def as_dict(self) -> dict:
        return {
            "max_defect": self.max_defect,
            "per_step": [float(x) for x in self.per_step],
            "is_transported": self.is_transported,
        }


def transport_defect(traj: Trajectory, transport_tol: float = TRANSPORT_TOL) -> TransportReport:
    per_step = np.abs(np.angle(traj.links()))
    per_step.setflags(write=False)
    worst = float(np.max(per_step))
    return TransportReport(worst, per_step, worst < transport_tol)


def parallel_transport(traj: Trajectory) -> Trajectory:
    """Rephase each state so the curve is parallel transported.

    The first state is kept as is; the projective curve is unchanged. For a
    curve that closes in ray space the closing overlap phase is then the
    geometric phase.
    """
    links = np.abs(traj.links())
    if np.any(links == 0.0):
        k = int(np.flatnonzero(links == 0.0)[0])
        raise OrthogonalStates(f"states {k} and {k + 1} are orthogonal; transport undefined")
    return traj.with_phases(transported_phases(traj.states))


def universal_transport_residual(
    bases: Sequence[Trajectory],
    coeffs: Sequence[complex],
    transport_tol: float = TRANSPORT_TOL,
    orthonormal_tol: float = ORTHONORMAL_TOL,
) -> float:
    """Largest per-step transport defect of the superposition sum_n c_n psi_n(t).

    Every basis trajectory must be parallel transported on its own and the
    bases must be orthonormal at each grid time. Nonzero output means the
    cross terms <psi_m|d psi_n> spoil transport of the superposition.
    """
    if len(bases) < 1:
        raise InvalidInput("need at least one basis trajectory")
    c = np.asarray(coeffs, dtype=np.complex128).reshape(-1)
    if c.size != len(bases):
        raise InvalidInput(f"{c.size} coefficients for {len(bases)} basis trajectories")
    if abs(np.vdot(c, c).real - 1.0) > orthonormal_tol:
        raise InvalidInput("coefficients must satisfy sum |c_n|^2 = 1")
    times = bases[0].times
    for b in bases[1:]:
        if b.times.shape != times.shape or not np.allclose(b.times, times, rtol=0, atol=1e-12):
            raise InvalidInput("basis trajectories must share one time grid")
    stack = np.stack([b.states for b in bases], axis=1)  # (n+1, N, dim)
    gram = np.einsum("kai,kbi->kab", stack.conj(), stack)
    dev = float(np.max(np.abs(gram - np.eye(len(bases)))))
    if dev >= orthonormal_tol:
        raise InvalidInput(f"bases are not orthonormal at every time (max Gram deviation {dev:.3e})")
    for i, b in enumerate(bases):
        report = transport_defect(b, transport_tol)
        if not report.is_transported:
            raise InvalidInput(f"basis {i} is not parallel transported (max defect {report.max_defect:.3e})")
    psi = np.einsum("n,kni->ki", c, stack)
    links = np.einsum("ki,ki->k", psi[:-1].conj(), psi[1:])
    return float(np.max(np.abs(np.angle(links))))
