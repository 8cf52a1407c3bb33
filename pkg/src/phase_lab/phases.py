"""Phase functionals of sampled state curves.

The connection integral ``i * integral <psi|dpsi>`` is discretized as
``-sum_k Arg <psi_k|psi_k+1>``. With that choice the open-curve geometric
phase equals ``-Arg`` of the closed Bargmann product of the samples, so it is
exactly gauge invariant and the excess-phase identity holds to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from .errors import InvalidInput, NotCyclic, OrthogonalStates
from .evolution import CYCLIC_TOL, Trajectory, is_cyclic
from .state_space import StateLike, inner, phase_distance, principal_arg, state_array, wrap_phase

ORTH_TOL = 1e-8
DECOMPOSITION_TOL = 1e-6

ROUTES = ("auto", "hamiltonian", "overlap")


@dataclass(frozen=True)
class PhaseDecomposition:
    """Total, dynamical and geometric phase of one trajectory segment.

    ``total`` and ``geometric`` are principal values; ``dynamical`` is the
    accumulated (unwrapped) integral.
    """

    total: float
    dynamical: float
    geometric: float
    segment: Tuple[float, float]

    @property
    def residual(self) -> float:
        """|total - dynamical - geometric| reduced mod 2pi."""
        return phase_distance(self.total, self.dynamical + self.geometric)

    def as_dict(self) -> dict:
        return {
            "total": self.total,
            "dynamical": self.dynamical,
            "geometric": self.geometric,
            "segment": list(self.segment),
            "residual": self.residual,
        }


@dataclass(frozen=True)
class BargmannInvariant:
    value: complex
    order: int
    argument: float  # nan when undefined
    defined: bool

    def as_dict(self) -> dict:
        return {
            "value": [self.value.real, self.value.imag],
            "arg": self.argument if self.defined else None,
            "order": self.order,
            "defined": self.defined,
        }


def _overlap_or_raise(g: complex, orth_tol: float, what: str) -> complex:
    if abs(g) <= orth_tol:
        raise OrthogonalStates(f"{what}: |overlap| = {abs(g):.3e} <= {orth_tol:g}, phase undefined")
    return g


def pancharatnam_phase(a: StateLike, b: StateLike, orth_tol: float = ORTH_TOL) -> float:
    """Relative phase Arg<a|b> of two non-orthogonal states."""
    return principal_arg(_overlap_or_raise(inner(a, b), orth_tol, "pancharatnam_phase"))


def _link_args(traj: Trajectory) -> np.ndarray:
    return np.angle(traj.links())


def dynamical_phase(traj: Trajectory, route: str = "auto") -> float:
    """Accumulated dynamical phase of ``traj`` (not branch-reduced).

    ``route="hamiltonian"`` integrates ``-<psi|H|psi>`` with the trapezoid rule
    and needs ``traj.generator``; ``route="overlap"`` sums
    ``Arg <psi_k|psi_k+1>`` and works for any trajectory. ``"auto"`` prefers
    the Hamiltonian when one is attached.
    """
    if route not in ROUTES:
        raise InvalidInput(f"unknown dynamical-phase route {route!r}")
    if route == "auto":
        route = "hamiltonian" if traj.generator is not None else "overlap"
    if route == "overlap":
        return float(np.sum(_link_args(traj)))
    h = traj.generator
    if h is None:
        raise InvalidInput("the Hamiltonian route needs a trajectory with a generator")
    if h.kind == "zero":
        return 0.0
    t = traj.times
    if h.kind == "static":
        energies = h.expectation(t[0], traj.states)
    else:
        energies = np.array([h.expectation(tk, traj.states[k : k + 1])[0] for k, tk in enumerate(t)])
    return float(-np.sum(0.5 * (energies[:-1] + energies[1:]) * np.diff(t)))


def geometric_phase_open(traj: Trajectory, orth_tol: float = ORTH_TOL) -> float:
    """Arg<psi_0|psi_n> - sum_k Arg<psi_k|psi_k+1>, on (-pi, pi]."""
    g = _overlap_or_raise(complex(np.vdot(traj.states[0], traj.states[-1])), orth_tol, "geometric_phase_open endpoints")
    return wrap_phase(np.angle(g) - np.sum(_link_args(traj)))


def geometric_phase_cyclic(traj: Trajectory, cyclic_tol: float = CYCLIC_TOL) -> float:
    """Geometric (Aharonov-Anandan) phase of a trajectory that closes in ray space."""
    if is_cyclic(traj, cyclic_tol) is None:
        overlap = abs(np.vdot(traj.states[0], traj.states[-1]))
        raise NotCyclic(f"|<psi_0|psi_T>| = {overlap:.12f} is not within {cyclic_tol:g} of 1")
    return geometric_phase_open(traj)


def decompose(traj: Trajectory, orth_tol: float = ORTH_TOL, route: str = "auto") -> PhaseDecomposition:
    total = pancharatnam_phase(traj.states[0], traj.states[-1], orth_tol)
    return PhaseDecomposition(
        total=total,
        dynamical=dynamical_phase(traj, route),
        geometric=geometric_phase_open(traj, orth_tol),
        segment=(float(traj.times[0]), float(traj.times[-1])),
    )


def phase_profile(traj: Trajectory) -> dict:
    """Running phases along the trajectory, one entry per grid time.

    ``dynamical`` is the running overlap-route sum; ``total`` is unwrapped
    along k with ``np.unwrap``, so it is only meaningful while
    <psi_0|psi_k> stays away from zero.
    """
    g = traj.states @ traj.states[0].conj()
    dyn = np.concatenate([[0.0], np.cumsum(_link_args(traj))])
    total = np.unwrap(np.angle(g))
    return {"time": traj.times.copy(), "total": total, "dynamical": dyn, "geometric": total - dyn}


def bargmann_invariant(states: Sequence[StateLike], orth_tol: float = ORTH_TOL) -> BargmannInvariant:
    """Closed cyclic product <psi_0|psi_1><psi_1|psi_2>...<psi_m-1|psi_0>."""
    arr = state_array(states)
    m = arr.shape[0]
    if m < 3:
        raise InvalidInput("a Bargmann invariant needs at least three states")
    links = np.einsum("ki,ki->k", arr.conj(), np.roll(arr, -1, axis=0))
    value = complex(np.prod(links))
    defined = bool(np.all(np.abs(links) > orth_tol))
    return BargmannInvariant(value, m, principal_arg(value) if defined else float("nan"), defined)


def excess_geometric_phase(traj: Trajectory, split: int, orth_tol: float = ORTH_TOL) -> Tuple[float, float]:
    """Non-additivity of the geometric phase at an interior split point.

    Returns ``(lhs, rhs)`` with ``lhs = G[0, m] + G[m, n] - G[0, n]`` (wrapped)
    and ``rhs = Arg Delta3(psi_0, psi_m, psi_n)``.
    """
    n = len(traj) - 1
    if not 0 < split < n:
        raise InvalidInput(f"split index {split} must be strictly inside (0, {n})")
    s = traj.states
    g01 = _overlap_or_raise(complex(np.vdot(s[0], s[split])), orth_tol, "excess phase <psi_0|psi_m>")
    g12 = _overlap_or_raise(complex(np.vdot(s[split], s[n])), orth_tol, "excess phase <psi_m|psi_n>")
    g02 = _overlap_or_raise(complex(np.vdot(s[0], s[n])), orth_tol, "excess phase <psi_0|psi_n>")
    cum = np.concatenate([[0.0], np.cumsum(_link_args(traj))])
    first = wrap_phase(np.angle(g01) - cum[split])
    second = wrap_phase(np.angle(g12) - (cum[n] - cum[split]))
    whole = wrap_phase(np.angle(g02) - cum[n])
    lhs = wrap_phase(first + second - whole)
    rhs = principal_arg(g01 * g12 * np.conj(g02))
    return lhs, rhs
