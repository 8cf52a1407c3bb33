"""Exact-cloning feasibility audits.

A machine ``|psi_i>|Sigma> -> e^{i theta_i}|psi_i>|psi_i>`` exists only if it
preserves inner products: ``g_ij = e^{i(theta_j - theta_i)} g_ij^2`` for the
Gram entries ``g_ij = <psi_i|psi_j>``. Nonzero ``g_ij`` therefore needs
``|g_ij| = 1`` and ``theta_j - theta_i = -Arg g_ij``. Those phase differences
must be consistent around every cycle of the unit-overlap graph; the cycle
residual is the argument of the Bargmann product around that cycle.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import DimensionMismatch, InvalidInput, NotCyclic, OrthogonalStates
from .evolution import CYCLIC_TOL, Trajectory, is_cyclic
from .phases import ORTH_TOL, excess_geometric_phase, geometric_phase_open
from .state_space import as_amplitudes, phase_distance, principal_arg
from .transport import transport_defect

PHASE_TOL = 1e-8
OVERLAP_TOL = 1e-8


class Verdict(str, Enum):
    FEASIBLE = "Feasible"
    INFEASIBLE = "Infeasible"


class ConstraintKind(str, Enum):
    NON_ORTHOGONAL_OVERLAP = "NonOrthogonalOverlap"
    RAY_PHASE_MISMATCH = "RayPhaseMismatch"
    BARGMANN_OBSTRUCTION = "BargmannObstruction"
    ANCILLA_GRAM_INVALID = "AncillaGramInvalid"


@dataclass(frozen=True)
class Violation:
    kind: ConstraintKind
    indices: Tuple[int, ...]
    residual: float

    def as_dict(self) -> dict:
        return {"kind": self.kind.value, "indices": list(self.indices), "residual": self.residual}


@dataclass(frozen=True)
class CloningSpec:
    inputs: Tuple[np.ndarray, ...]
    allow_ancilla: bool = False
    phase_freedom: bool = False

    def __post_init__(self):
        states = tuple(as_amplitudes(s) for s in self.inputs)
        if not states:
            raise InvalidInput("a cloning spec needs at least one input state")
        if len({s.shape for s in states}) > 1:
            raise DimensionMismatch("all input states must share one dimension")
        object.__setattr__(self, "inputs", states)

    def gram(self) -> np.ndarray:
        arr = np.array(self.inputs)
        return arr.conj() @ arr.T


@dataclass(frozen=True)
class CloningFeasibilityReport:
    violated_constraints: Tuple[Violation, ...] = ()
    required_ancilla_overlaps: Optional[np.ndarray] = None
    details: dict = field(default_factory=dict)

    @property
    def verdict(self) -> Verdict:
        return Verdict.INFEASIBLE if self.violated_constraints else Verdict.FEASIBLE

    @property
    def feasible(self) -> bool:
        return not self.violated_constraints

    def kinds(self) -> set:
        return {v.kind for v in self.violated_constraints}

    def as_dict(self) -> dict:
        out = {
            "verdict": self.verdict.value,
            "violated_constraints": [v.as_dict() for v in self.violated_constraints],
        }
        if self.required_ancilla_overlaps is not None:
            out["required_ancilla_overlaps"] = [
                [None if np.isnan(z) else [z.real, z.imag] for z in row] for row in self.required_ancilla_overlaps
            ]
        out.update(self.details)
        return out


def _tree_phase_residuals(unit_pairs, phases_of_pair, m):
    """Spanning-forest phase assignment over the unit-overlap graph.

    ``phases_of_pair[(i, j)]`` is the required theta_j - theta_i. Returns the
    list of (cycle, residual) for every non-tree edge.
    """
    adj = {i: [] for i in range(m)}
    for i, j in unit_pairs:
        adj[i].append(j)
        adj[j].append(i)

    def required(i, j):
        return phases_of_pair[(i, j)] if (i, j) in phases_of_pair else -phases_of_pair[(j, i)]

    theta = {}
    parent = {}
    tree = set()
    for root in range(m):
        if root in theta:
            continue
        theta[root] = 0.0
        parent[root] = None
        queue = deque([root])
        while queue:
            i = queue.popleft()
            for j in adj[i]:
                if j not in theta:
                    theta[j] = theta[i] + required(i, j)
                    parent[j] = i
                    tree.add(frozenset((i, j)))
                    queue.append(j)

    def path_to_root(i):
        out = [i]
        while parent[out[-1]] is not None:
            out.append(parent[out[-1]])
        return out

    cycles = []
    for i, j in unit_pairs:
        if frozenset((i, j)) in tree:
            continue
        residual = phase_distance(theta[j] - theta[i], required(i, j))
        pi, pj = path_to_root(i), path_to_root(j)
        common = next(x for x in pi if x in set(pj))
        cycle = pi[: pi.index(common) + 1] + list(reversed(pj[: pj.index(common)]))
        cycles.append((tuple(cycle), residual))
    return cycles


def clonability_check(
    spec: CloningSpec, phase_tol: float = PHASE_TOL, overlap_tol: float = OVERLAP_TOL
) -> CloningFeasibilityReport:
    """Decide whether one unitary (optionally with ancilla) clones every input."""
    g = spec.gram()
    m = g.shape[0]
    violations = []
    unit_pairs = []
    for i, j in itertools.combinations(range(m), 2):
        mod = abs(g[i, j])
        if mod <= overlap_tol:
            continue
        if abs(mod - 1.0) <= overlap_tol:
            unit_pairs.append((i, j))
        else:
            violations.append(Violation(ConstraintKind.NON_ORTHOGONAL_OVERLAP, (i, j), abs(mod - round(mod))))

    ancilla = None
    if spec.allow_ancilla:
        # Eq. g = g^2 <A_i|A_j> forces <A_i|A_j> = 1/g = e^{-i Arg g} on unit pairs
        ancilla = np.full((m, m), np.nan + 0j, dtype=np.complex128)
        np.fill_diagonal(ancilla, 1.0)
        for i, j in unit_pairs:
            ancilla[i, j] = np.exp(-1j * np.angle(g[i, j]))
            ancilla[j, i] = np.conj(ancilla[i, j])

    if not spec.allow_ancilla and not spec.phase_freedom:
        for i, j in unit_pairs:
            arg = abs(principal_arg(g[i, j]))
            if arg > phase_tol:
                violations.append(Violation(ConstraintKind.RAY_PHASE_MISMATCH, (i, j), arg))
    else:
        kind = ConstraintKind.ANCILLA_GRAM_INVALID if spec.allow_ancilla else ConstraintKind.BARGMANN_OBSTRUCTION
        required = {(i, j): -float(np.angle(g[i, j])) for i, j in unit_pairs}
        for cycle, residual in _tree_phase_residuals(unit_pairs, required, m):
            if residual > phase_tol:
                violations.append(Violation(kind, cycle, residual))

    details = {"gram": [[[z.real, z.imag] for z in row] for row in g]}
    return CloningFeasibilityReport(tuple(violations), ancilla, details)


def history_cloning_check(
    traj: Trajectory, phase_tol: float = PHASE_TOL, cyclic_tol: float = CYCLIC_TOL
) -> CloningFeasibilityReport:
    """Can one unitary copy both psi(0) and psi(T) of a cyclic evolution?

    Copying both forces e^{i Phi} = e^{2 i Phi}, i.e. Phi = 0 mod 2pi. The
    residual is |Phi| on the principal branch.
    """
    phi = is_cyclic(traj, cyclic_tol)
    if phi is None:
        raise NotCyclic("history cloning audit needs a cyclic trajectory")
    n = len(traj) - 1
    violations = ()
    if abs(phi) > phase_tol:
        violations = (Violation(ConstraintKind.RAY_PHASE_MISMATCH, (0, n), abs(phi)),)
    transported = transport_defect(traj).is_transported
    details = {
        "total_phase": phi,
        "geometric_phase": geometric_phase_open(traj),
        "parallel_transported": transported,
        "note": "parallel transported: total phase is purely geometric"
        if transported
        else "total phase includes a dynamical part",
    }
    return CloningFeasibilityReport(violations, None, details)


def cp_history_check(phi: float, ancilla_overlap: complex, phase_tol: float = PHASE_TOL) -> CloningFeasibilityReport:
    """Copying with an ancilla requires e^{i phi} = e^{2 i phi} <A(0)|A(T)>.

    Only the overlap e^{-i phi} satisfies it; the residual is the distance of
    the given overlap from that value.
    """
    a = complex(ancilla_overlap)
    if abs(a) > 1.0 + 1e-12:
        raise InvalidInput(f"|ancilla overlap| = {abs(a)!r} exceeds 1; not a valid state overlap")
    required = np.exp(-1j * phi)
    residual = abs(a - required)
    violations = ()
    if residual > phase_tol:
        violations = (Violation(ConstraintKind.ANCILLA_GRAM_INVALID, (0, 1), float(residual)),)
    details = {"phi": float(phi), "required_overlap": [required.real, required.imag]}
    return CloningFeasibilityReport(violations, None, details)


def multi_time_cloning_check(
    traj: Trajectory, indices: Sequence[int], phase_tol: float = PHASE_TOL, orth_tol: float = ORTH_TOL
) -> CloningFeasibilityReport:
    """Can the states at three times along ``traj`` be cloned together?

    Unitarity forces Delta3 = Delta3^2, so Arg Delta3 must vanish. The excess
    geometric phase over the same three indices is attached for comparison.
    """
    idx = tuple(int(i) for i in indices)
    n = len(traj)
    if len(idx) != 3 or not all(0 <= i < n for i in idx) or not idx[0] < idx[1] < idx[2]:
        raise InvalidInput(f"need three strictly increasing indices in [0, {n}), got {list(indices)}")
    s = traj.states
    i, j, k = idx
    links = [complex(np.vdot(s[a], s[b])) for a, b in ((i, j), (j, k), (k, i))]
    for (a, b), z in zip(((i, j), (j, k), (k, i)), links):
        if abs(z) <= orth_tol:
            raise OrthogonalStates(f"states {a} and {b} are orthogonal; Bargmann phase undefined")
    delta = links[0] * links[1] * links[2]
    arg = principal_arg(delta)
    violations = ()
    if abs(arg) > phase_tol:
        violations = (Violation(ConstraintKind.BARGMANN_OBSTRUCTION, idx, abs(arg)),)
    lhs, rhs = excess_geometric_phase(traj.segment(i, k), j - i, orth_tol)
    details = {
        "bargmann": [delta.real, delta.imag],
        "bargmann_arg": arg,
        "excess_phase": {"lhs": lhs, "rhs": rhs, "mismatch": phase_distance(lhs, rhs)},
    }
    return CloningFeasibilityReport(violations, None, details)


# ---------------------------------------------------------------------------
# brute-force oracle
# ---------------------------------------------------------------------------

SCAN_STEPS = 720


# each theta sits within half a grid step of its target, so a pair difference can be a full step off
SCAN_TOL = 1.2 * 2 * np.pi / SCAN_STEPS


def gram_scan_feasible(spec: CloningSpec, screen_tol: float = OVERLAP_TOL, scan_tol: float = SCAN_TOL) -> bool:
    """Independent feasibility oracle by exhaustive phase scan.

    Screens every |g_ij| to {0, 1}, then looks for free phases on a grid of
    step 2pi/720 satisfying g_ij = e^{i(theta_j - theta_i)} g_ij^2 for all
    pairs. Without phase freedom or ancilla only theta = 0 is tried, at
    ``screen_tol``. Cost is 720^(m-1); intended for m <= 3.
    """
    g = spec.gram()
    m = g.shape[0]
    pairs = list(itertools.combinations(range(m), 2))
    for i, j in pairs:
        mod = abs(g[i, j])
        if mod > screen_tol and abs(mod - 1.0) > screen_tol:
            return False
    if not pairs:
        return True
    if not spec.allow_ancilla and not spec.phase_freedom:
        return all(abs(g[i, j] - g[i, j] ** 2) <= screen_tol for i, j in pairs)
    grid = np.arange(SCAN_STEPS) * (2 * np.pi / SCAN_STEPS)
    mesh = np.meshgrid(*([grid] * (m - 1)), indexing="ij")
    theta = [np.zeros_like(mesh[0])] + list(mesh)
    worst = np.zeros_like(mesh[0])
    for i, j in pairs:
        dev = np.abs(g[i, j] - np.exp(1j * (theta[j] - theta[i])) * g[i, j] ** 2)
        worst = np.maximum(worst, dev)
    return bool(np.min(worst) <= scan_tol)


def random_cloning_spec(rng: np.random.Generator, dim: int, m: int, allow_ancilla=False, phase_freedom=False) -> CloningSpec:
    """Random spec mixing generic states, basis states and rephased copies.

    Pure Haar samples almost never hit |g| in {0, 1}; the mixture exercises
    every branch of the audit.
    """
    states = []
    for _ in range(m):
        kind = rng.integers(3) if states else rng.integers(2)
        if kind == 0:
            v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        elif kind == 1:
            v = np.zeros(dim, dtype=np.complex128)
            v[rng.integers(dim)] = 1.0
        else:
            v = states[rng.integers(len(states))].copy()
        v = v * np.exp(1j * rng.uniform(-np.pi, np.pi)) if rng.random() < 0.75 else v
        states.append(v / np.linalg.norm(v))
    return CloningSpec(tuple(states), allow_ancilla, phase_freedom)
