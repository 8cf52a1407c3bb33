"""Scenario dispatch for the command line: single runs and seeded sweeps."""

from __future__ import annotations

import copy
import hashlib
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Dict, Optional

import jsonschema
import numpy as np

from . import __version__
from .cloning import (
    CloningSpec,
    clonability_check,
    cp_history_check,
    gram_scan_feasible,
    history_cloning_check,
    multi_time_cloning_check,
    random_cloning_spec,
)
from .errors import ConfigError
from .evolution import HamiltonianSpec, TimeGrid, Trajectory, evolve, evolve_parallel, is_cyclic
from .histories import (
    check_axioms,
    consistency_check,
    fine_grained_trace,
    history_geometric_phase,
)
from .phases import bargmann_invariant, decompose, excess_geometric_phase, geometric_phase_cyclic
from .sampling import (
    random_density_matrix,
    random_family,
    random_hermitian,
    random_state,
    random_trajectory,
    transported_bases,
)
from .serialization import (
    COMPLEX,
    GRID,
    HAMILTONIAN,
    HISTORY,
    MATRIX,
    VECTOR,
    complex_from_json,
    family_from_json,
    grid_from_json,
    hamiltonian_from_json,
    matrix_from_json,
    vector_from_json,
)
from .transport import transport_defect, universal_transport_residual

SCENARIOS = ("phase-decompose", "cyclic-audit", "excess-phase", "transport", "cloning-audit", "histories", "convergence")

DEFAULT_TOLERANCES = {
    "orth_tol": 1e-8,
    "decomposition_tol": 1e-6,
    "phase_tol": 1e-8,
    "overlap_tol": 1e-8,
    "transport_tol": 1e-10,
    "cyclic_tol": 1e-8,
    "consistency_tol": 1e-8,
    "axiom_tol": 1e-12,
}

ENV_DEFAULT_TOL = "PHASE_LAB_DEFAULT_TOL"

TOLERANCES = {
    "type": "object",
    "properties": {name: {"type": "number", "exclusiveMinimum": 0} for name in DEFAULT_TOLERANCES},
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "scenario": {"enum": list(SCENARIOS)},
        "inputs": {"type": "object"},
        "tolerances": TOLERANCES,
        "seed": {"type": "integer", "minimum": 0},
        "output_format": {"enum": ["json", "csv"]},
    },
    "required": ["scenario"],
    "additionalProperties": False,
}

_EVOLUTION_PROPS = {"hamiltonian": HAMILTONIAN, "psi0": VECTOR, "grid": GRID}
_HANDBUILT_PROPS = {"states": {"type": "array", "items": VECTOR, "minItems": 2}, "times": {"type": "array", "items": {"type": "number"}}}
_CURVE = {"oneOf": [{"required": ["hamiltonian", "psi0", "grid"]}, {"required": ["states"]}]}


def _obj(props: dict, required=(), extra=None) -> dict:
    schema = {"type": "object", "properties": props, "additionalProperties": False}
    if required:
        schema["required"] = list(required)
    if extra:
        schema.update(extra)
    return schema


RUN_INPUTS = {
    "phase-decompose": _obj(
        {**_EVOLUTION_PROPS, **_HANDBUILT_PROPS, "parallel": {"type": "boolean"}, "route": {"enum": ["auto", "hamiltonian", "overlap"]}},
        extra=_CURVE,
    ),
    "cyclic-audit": _obj(
        {**_EVOLUTION_PROPS, **_HANDBUILT_PROPS, "parallel": {"type": "boolean"}, "ancilla_overlap": COMPLEX},
        extra=_CURVE,
    ),
    "excess-phase": _obj(
        {**_EVOLUTION_PROPS, **_HANDBUILT_PROPS, "split": {"type": "integer", "minimum": 1}},
        required=("split",),
        extra=_CURVE,
    ),
    "transport": _obj(
        {**_EVOLUTION_PROPS, "basis": {"type": "array", "items": VECTOR, "minItems": 1}, "coeffs": VECTOR},
        required=("hamiltonian", "psi0", "grid"),
    ),
    "cloning-audit": _obj(
        {
            "states": {"type": "array", "items": VECTOR, "minItems": 1},
            "allow_ancilla": {"type": "boolean"},
            "phase_freedom": {"type": "boolean"},
        },
        required=("states",),
    ),
    "histories": _obj(
        {
            "hamiltonian": HAMILTONIAN,
            "rho0": MATRIX,
            "family": {
                "type": "object",
                "properties": {
                    "members": {"type": "array", "items": HISTORY, "minItems": 1},
                    "complete": {"type": "boolean"},
                    "decompositions": {
                        "type": "array",
                        "minItems": 1,
                        "items": _obj({"t": {"type": "number"}, "projectors": {"type": "array", "items": MATRIX, "minItems": 1}}, ("t", "projectors")),
                    },
                },
                "oneOf": [{"required": ["members"]}, {"required": ["decompositions"]}],
                "additionalProperties": False,
            },
            "chain": {"type": "array", "items": VECTOR, "minItems": 2},
        },
        required=("hamiltonian", "rho0", "family"),
    ),
    "convergence": _obj(
        {
            "hamiltonian": HAMILTONIAN,
            "psi0": VECTOR,
            "period": {"type": "number", "exclusiveMinimum": 0},
            "n_values": {"type": "array", "items": {"type": "integer", "minimum": 3}, "minItems": 2},
            "oracle_steps": {"type": "integer", "minimum": 10},
        },
        required=("hamiltonian", "psi0", "period", "n_values"),
    ),
}

_POS = {"type": "number", "exclusiveMinimum": 0}
_DIM = {"type": "integer", "minimum": 1, "maximum": 256}
SWEEP_INPUTS = {
    "phase-decompose": _obj({"dim": _DIM, "h_norm": _POS, "t_min": _POS, "t_max": _POS, "dt": _POS}),
    "excess-phase": _obj({"dim": _DIM, "steps": {"type": "integer", "minimum": 2}}),
    "transport": _obj({"dim": _DIM, "h_norm": _POS, "duration": _POS, "dt": _POS}),
    "cloning-audit": _obj({"dim": {"type": "integer", "minimum": 1, "maximum": 8}, "m": {"type": "integer", "minimum": 1, "maximum": 3}}),
    "histories": _obj({"dim": {"type": "integer", "minimum": 1, "maximum": 8}, "times": {"type": "integer", "minimum": 1, "maximum": 4}, "h_norm": _POS, "chain_length": {"type": "integer", "minimum": 2}}),
}


def _validate(instance, schema, where: str) -> None:
    try:
        jsonschema.validate(instance, schema)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path)
        raise ConfigError(f"{where}{'/' + path if path else ''}: {exc.message}") from None


def tolerances_for(config: dict) -> Dict[str, float]:
    tol = dict(DEFAULT_TOLERANCES)
    env = os.environ.get(ENV_DEFAULT_TOL)
    if env:
        try:
            value = float(env)
        except ValueError:
            raise ConfigError(f"{ENV_DEFAULT_TOL}={env!r} is not a number") from None
        if not value > 0:
            raise ConfigError(f"{ENV_DEFAULT_TOL} must be positive")
        tol = {k: value for k in tol}
    tol.update(config.get("tolerances", {}))
    return tol


def config_hash(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _provenance(config: dict, seed: int) -> dict:
    return {"config_sha256": config_hash(config), "toolkit_version": __version__, "seed": seed}


# ---------------------------------------------------------------------------
# single runs
# ---------------------------------------------------------------------------


def _curve(inputs: dict, parallel: bool = False) -> Trajectory:
    if "states" in inputs:
        states = np.array([vector_from_json(v) for v in inputs["states"]])
        times = inputs.get("times")
        grid = TimeGrid(np.arange(len(states), dtype=float) if times is None else np.array(times, dtype=float))
        return Trajectory(grid, states)
    h = hamiltonian_from_json(inputs["hamiltonian"])
    psi0 = vector_from_json(inputs["psi0"])
    grid = grid_from_json(inputs["grid"])
    return evolve_parallel(h, psi0, grid) if parallel else evolve(h, psi0, grid)


def _cloning_verdict(traj: Trajectory, tol: dict) -> dict:
    """History-copy audit: history check for closed curves, three-time check otherwise."""
    if is_cyclic(traj, tol["cyclic_tol"]) is not None:
        report = history_cloning_check(traj, tol["phase_tol"], tol["cyclic_tol"])
        return {"check": "history", **report.as_dict()}
    n = len(traj) - 1
    if n < 2:
        return {"check": "none", "verdict": None}
    report = multi_time_cloning_check(traj, (0, n // 2, n), tol["phase_tol"], tol["orth_tol"])
    return {"check": "multi_time", "indices": [0, n // 2, n], **report.as_dict()}


def _run_phase_decompose(inputs: dict, tol: dict) -> dict:
    traj = _curve(inputs, inputs.get("parallel", False))
    dec = decompose(traj, tol["orth_tol"], inputs.get("route", "auto"))
    cloning = _cloning_verdict(traj, tol)
    return {
        "decomposition": dec.as_dict(),
        "identity_holds": dec.residual < tol["decomposition_tol"],
        "cyclic": is_cyclic(traj, tol["cyclic_tol"]) is not None,
        "cloning": cloning,
        "verdict": cloning["verdict"],
    }


def _run_cyclic_audit(inputs: dict, tol: dict) -> dict:
    traj = _curve(inputs, inputs.get("parallel", False))
    geometric = geometric_phase_cyclic(traj, tol["cyclic_tol"])
    dec = decompose(traj, tol["orth_tol"])
    history = history_cloning_check(traj, tol["phase_tol"], tol["cyclic_tol"])
    phi = dec.total
    overlap = complex_from_json(inputs["ancilla_overlap"]) if "ancilla_overlap" in inputs else np.exp(-1j * phi)
    cp = cp_history_check(phi, overlap, tol["phase_tol"])
    return {
        "total": dec.total,
        "dynamical": dec.dynamical,
        "geometric": geometric,
        "decomposition_residual": dec.residual,
        "transport_max_defect": transport_defect(traj, tol["transport_tol"]).max_defect,
        "history_cloning": history.as_dict(),
        "cp_cloning": cp.as_dict(),
        "verdict": history.verdict.value,
    }


def _run_excess_phase(inputs: dict, tol: dict) -> dict:
    traj = _curve(inputs)
    split = inputs["split"]
    n = len(traj) - 1
    lhs, rhs = excess_geometric_phase(traj, split, tol["orth_tol"])
    bargmann = bargmann_invariant([traj.states[0], traj.states[split], traj.states[n]], tol["orth_tol"])
    multi = multi_time_cloning_check(traj, (0, split, n), tol["phase_tol"], tol["orth_tol"])
    return {
        "lhs": lhs,
        "rhs": rhs,
        "mismatch": abs(math.remainder(lhs - rhs, 2 * math.pi)),
        "bargmann": bargmann.as_dict(),
        "cloning": multi.as_dict(),
        "verdict": multi.verdict.value,
    }


def _run_transport(inputs: dict, tol: dict) -> dict:
    h = hamiltonian_from_json(inputs["hamiltonian"])
    psi0 = vector_from_json(inputs["psi0"])
    grid = grid_from_json(inputs["grid"])
    plain = evolve(h, psi0, grid)
    parallel = evolve_parallel(h, psi0, grid)
    out = {
        "evolve": {"max_defect": transport_defect(plain, tol["transport_tol"]).max_defect},
        "parallel": {
            "max_defect": transport_defect(parallel, tol["transport_tol"]).max_defect,
            "is_transported": transport_defect(parallel, tol["transport_tol"]).is_transported,
        },
    }
    phi = is_cyclic(parallel, tol["cyclic_tol"])
    if phi is not None:
        out["parallel"]["closing_phase"] = phi
        out["parallel"]["geometric_phase"] = geometric_phase_cyclic(plain, tol["cyclic_tol"])
    if "basis" in inputs:
        basis = np.array([vector_from_json(v) for v in inputs["basis"]]).T
        coeffs = vector_from_json(inputs.get("coeffs", [1.0] + [0.0] * (basis.shape[1] - 1)))
        bases = transported_bases(h, grid, basis)
        out["universal_residual"] = universal_transport_residual(bases, coeffs, tol["transport_tol"])
    return out


def _run_cloning_audit(inputs: dict, tol: dict) -> dict:
    spec = CloningSpec(
        tuple(vector_from_json(v) for v in inputs["states"]),
        inputs.get("allow_ancilla", False),
        inputs.get("phase_freedom", False),
    )
    return clonability_check(spec, tol["phase_tol"], tol["overlap_tol"]).as_dict()


def _run_histories(inputs: dict, tol: dict) -> dict:
    h = hamiltonian_from_json(inputs["hamiltonian"])
    rho0 = matrix_from_json(inputs["rho0"])
    family = family_from_json(inputs["family"])
    out = {"axioms": check_axioms(family, rho0, h).as_dict()}
    if family.completeness_flag:
        out["consistency"] = consistency_check(family, rho0, h, tol["consistency_tol"]).as_dict()
    if "chain" in inputs:
        chain = [vector_from_json(v) for v in inputs["chain"]]
        trace = fine_grained_trace(chain)
        out["chain"] = {"trace": [trace.real, trace.imag]}
        if abs(trace) > tol["orth_tol"]:
            out["chain"]["geometric_phase"] = history_geometric_phase(chain, tol["orth_tol"])
    return out


def _run_convergence(inputs: dict, tol: dict) -> dict:
    h = hamiltonian_from_json(inputs["hamiltonian"])
    psi0 = vector_from_json(inputs["psi0"])
    period = float(inputs["period"])
    oracle_steps = inputs.get("oracle_steps", 100_000)
    reference = geometric_phase_cyclic(evolve(h, psi0, TimeGrid.uniform(0.0, period, oracle_steps)), tol["cyclic_tol"])
    rows = []
    for n in inputs["n_values"]:
        traj = evolve(h, psi0, TimeGrid.uniform(0.0, period, n))
        phase = history_geometric_phase(traj.states, tol["orth_tol"])
        rows.append({"n": n, "phase": phase, "error": abs(math.remainder(phase - reference, 2 * math.pi))})
    orders = []
    for a, b in zip(rows, rows[1:]):
        if a["error"] > 0 and b["error"] > 0:
            orders.append(math.log(a["error"] / b["error"]) / math.log(b["n"] / a["n"]))
        else:
            orders.append(None)
    return {"reference": reference, "rows": rows, "orders": orders}


RUNNERS: Dict[str, Callable[[dict, dict], dict]] = {
    "phase-decompose": _run_phase_decompose,
    "cyclic-audit": _run_cyclic_audit,
    "excess-phase": _run_excess_phase,
    "transport": _run_transport,
    "cloning-audit": _run_cloning_audit,
    "histories": _run_histories,
    "convergence": _run_convergence,
}


def validate_config(config) -> None:
    _validate(config, CONFIG_SCHEMA, "config")


def run(config: dict) -> dict:
    """Validate ``config``, dispatch it and return the report dictionary.

    Raises :class:`ConfigError` for schema problems and
    :class:`~phase_lab.errors.PhaseLabError` subclasses for numerical ones.
    """
    validate_config(config)
    scenario = config["scenario"]
    inputs = config.get("inputs", {})
    _validate(inputs, RUN_INPUTS[scenario], "inputs")
    tol = tolerances_for(config)
    seed = config.get("seed", 0)
    results = RUNNERS[scenario](copy.deepcopy(inputs), tol)
    return {
        "scenario": scenario,
        "mode": "run",
        "tolerances": tol,
        "results": results,
        "provenance": _provenance(config, seed),
    }


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------


def _sweep_phase_decompose(rng, p, tol):
    dim = p.get("dim", int(rng.integers(2, 9)))
    h = HamiltonianSpec.static(random_hermitian(rng, dim, rng.uniform(0.1, p.get("h_norm", 1.0))))
    duration = rng.uniform(p.get("t_min", 0.5), p.get("t_max", 2.0))
    dt = p.get("dt", 1e-3)
    traj = evolve(h, random_state(rng, dim), TimeGrid.uniform(0.0, duration, max(1, math.ceil(duration / dt))))
    return {"decomposition_residual": decompose(traj, tol["orth_tol"]).residual}


def _sweep_excess_phase(rng, p, tol):
    dim = p.get("dim", int(rng.integers(2, 9)))
    traj = random_trajectory(rng, dim, p.get("steps", 200))
    split = int(rng.integers(1, len(traj) - 1))
    lhs, rhs = excess_geometric_phase(traj, split, tol["orth_tol"])
    return {"excess_mismatch": abs(math.remainder(lhs - rhs, 2 * math.pi))}


def _sweep_transport(rng, p, tol):
    dim = p.get("dim", int(rng.integers(2, 9)))
    h = HamiltonianSpec.static(random_hermitian(rng, dim, rng.uniform(0.1, p.get("h_norm", 1.0))))
    duration = p.get("duration", 1.0)
    grid = TimeGrid.uniform(0.0, duration, max(1, math.ceil(duration / p.get("dt", 1e-3))))
    traj = evolve_parallel(h, random_state(rng, dim), grid)
    return {"parallel_defect": transport_defect(traj).max_defect}


def _sweep_cloning_audit(rng, p, tol):
    dim = p.get("dim", int(rng.integers(1, 5)))
    m = p.get("m", int(rng.integers(1, 4)))
    flags = rng.integers(3)
    spec = random_cloning_spec(rng, dim, m, allow_ancilla=flags == 2, phase_freedom=flags == 1)
    verdict = clonability_check(spec, tol["phase_tol"], tol["overlap_tol"]).feasible
    oracle = gram_scan_feasible(spec)
    c = np.exp(1j * rng.uniform(-np.pi, np.pi))
    shifted = CloningSpec(tuple(c * s for s in spec.inputs), spec.allow_ancilla, spec.phase_freedom)
    invariant = clonability_check(shifted, tol["phase_tol"], tol["overlap_tol"]).feasible
    return {"oracle_disagreement": float(verdict != oracle), "global_phase_disagreement": float(verdict != invariant)}


def _sweep_histories(rng, p, tol):
    dim = p.get("dim", int(rng.integers(1, 5)))
    family = random_family(rng, dim, p.get("times", int(rng.integers(1, 4))))
    h = HamiltonianSpec.static(random_hermitian(rng, dim, p.get("h_norm", 1.0)))
    axioms = check_axioms(family, random_density_matrix(rng, dim), h)
    chain = [random_state(rng, dim) for _ in range(p.get("chain_length", int(rng.integers(2, 51))))]
    # Tr(P_n ... P_1 P_0) by explicit matrix products
    product = np.eye(dim, dtype=np.complex128)
    for psi in chain:
        product = np.outer(psi, psi.conj()) @ product
    return {
        "trace_identity": abs(fine_grained_trace(chain) - np.trace(product)),
        "hermiticity": axioms.hermiticity,
        "additivity": axioms.additivity,
        "normalization": axioms.normalization,
        "positivity_violation": max(0.0, -axioms.positivity_min),
    }


SWEEPERS = {
    "phase-decompose": _sweep_phase_decompose,
    "excess-phase": _sweep_excess_phase,
    "transport": _sweep_transport,
    "cloning-audit": _sweep_cloning_audit,
    "histories": _sweep_histories,
}

# metric name -> tolerance key bounding it
SWEEP_LIMITS = {
    "decomposition_residual": "decomposition_tol",
    "excess_mismatch": "phase_tol",
    "parallel_defect": "transport_tol",
    "oracle_disagreement": None,
    "global_phase_disagreement": None,
    "trace_identity": "axiom_tol",
    "hermiticity": "axiom_tol",
    "additivity": "axiom_tol",
    "normalization": "axiom_tol",
    "positivity_violation": "axiom_tol",
}


def _sweep_instance(args):
    scenario, seed_seq, params, tol = args
    return SWEEPERS[scenario](np.random.default_rng(seed_seq), params, tol)


def sweep(config: dict, count: int, seed: Optional[int] = None, jobs: int = 1) -> dict:
    """Evaluate invariant residuals on ``count`` seeded random instances."""
    validate_config(config)
    if count < 1:
        raise ConfigError("count must be >= 1")
    scenario = config["scenario"]
    if scenario not in SWEEPERS:
        raise ConfigError(f"scenario {scenario!r} has no randomized sweep; choose one of {sorted(SWEEPERS)}")
    params = config.get("inputs", {})
    _validate(params, SWEEP_INPUTS[scenario], "inputs")
    tol = tolerances_for(config)
    seed = config.get("seed", 0) if seed is None else seed
    children = np.random.SeedSequence(seed).spawn(count)
    work = [(scenario, s, params, tol) for s in children]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            instances = list(pool.map(_sweep_instance, work, chunksize=max(1, count // (4 * jobs))))
    else:
        instances = [_sweep_instance(w) for w in work]

    metrics = sorted(instances[0])
    summary = {}
    violations = []
    for name in metrics:
        values = np.array([inst[name] for inst in instances], dtype=float)
        key = SWEEP_LIMITS[name]
        limit = 0.0 if key is None else tol[key]
        bad = np.flatnonzero(values > limit)
        summary[name] = {"max": float(np.max(values)), "mean": float(np.mean(values)), "limit": limit, "violations": int(bad.size)}
        violations.extend({"index": int(i), "metric": name, "value": float(values[i])} for i in bad)
    violations.sort(key=lambda v: (v["index"], v["metric"]))
    return {
        "scenario": scenario,
        "mode": "sweep",
        "count": count,
        "tolerances": tol,
        "results": summary,
        "violations": violations,
        "passed": not violations,
        "provenance": _provenance(config, seed),
    }


def load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None


__all__ = ["run", "sweep", "load_config", "validate_config", "SCENARIOS", "DEFAULT_TOLERANCES"]
