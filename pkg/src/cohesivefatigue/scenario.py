"""Scenario configuration: strict JSON schema, builders, shipped files.

A scenario file is one JSON document wiring mesh, law, load program, time
discretization, initial state and solver options.  Validation is strict:
unknown keys anywhere are errors naming the offending key, so typos never
silently change a run.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from importlib import resources
from typing import Optional

import numpy as np

from .laws import CohesiveLaw, LawField
from .mesh import DomainSpec, Mesh, build_mesh, assemble_stiffness
from .reduced import ReducedModel, condense
from .evolution import InitialState, LoadProgram
from .stepsolve import SolverOptions


class ConfigError(ValueError):
    """Invalid scenario configuration; the message names the offending key."""


_SHIPPED = ("null_load", "two_bar_monotone", "two_bar_cyclic_fatigue", "wide_interface")


def shipped_scenario_names() -> tuple:
    return _SHIPPED


def shipped_scenario_path(name: str) -> str:
    if name not in _SHIPPED:
        raise ConfigError(f"unknown shipped scenario {name!r}; available: {', '.join(_SHIPPED)}")
    return str(resources.files("cohesivefatigue.scenarios").joinpath(f"{name}.json"))


@dataclass
class Scenario:
    name: str
    domain: DomainSpec
    law_field_spec: list          # per-node (kind, kappa, scale) triples
    load: LoadProgram
    steps: int
    T: float
    z0_spec: object               # scalar or list
    V0_spec: object
    solver: SolverOptions
    output_dir: str

    def mesh(self) -> Mesh:
        return build_mesh(self.domain)

    def build(self):
        """Mesh, condensed model, law field and initial state, ready to run."""
        mesh = self.mesh()
        model = condense(mesh, assemble_stiffness(mesh))
        m = mesh.n_interface
        laws = LawField(tuple(CohesiveLaw(kind, kappa, scale)
                              for kind, kappa, scale in self.law_field_spec))
        if len(laws) != m:
            raise ConfigError(f"law.overrides address {len(laws)} nodes but the mesh has {m}")
        try:
            initial = InitialState(z0=_expand(self.z0_spec, m, "initial.z0"),
                                   V0=_expand(self.V0_spec, m, "initial.V0"))
        except ValueError as exc:
            raise ConfigError(f"initial: {exc}") from exc
        return mesh, model, laws, initial


def _expand(spec, m: int, key: str) -> np.ndarray:
    if isinstance(spec, (int, float)):
        return np.full(m, float(spec))
    arr = np.asarray(spec, dtype=float)
    if arr.shape != (m,):
        raise ConfigError(f"{key} must be a scalar or an array of length {m}, got shape {arr.shape}")
    return arr


def _require(table: dict, key: str, path: str):
    if key not in table:
        raise ConfigError(f"missing required key {path}{key}")
    return table[key]


def _no_unknown(table: dict, allowed: set, path: str):
    for key in table:
        if key not in allowed:
            raise ConfigError(f"unknown key {path}{key}")


def _number(value, path: str, positive=False, nonnegative=False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path} must be a number, got {value!r}")
    v = float(value)
    if positive and not v > 0.0:
        raise ConfigError(f"{path} must be positive, got {value!r}")
    if nonnegative and v < 0.0:
        raise ConfigError(f"{path} must be nonnegative, got {value!r}")
    return v


def _integer(value, path: str, minimum=None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path} must be an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{path} must be at least {minimum}, got {value}")
    return value


def parse_config(path: str) -> Scenario:
    try:
        with open(path) as f:
            doc = json.load(f)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    return parse_config_dict(doc, default_name=os.path.splitext(os.path.basename(path))[0])


def parse_config_dict(doc: dict, default_name: str = "scenario") -> Scenario:
    _no_unknown(doc, {"name", "mesh", "law", "time", "load", "initial", "solver", "output_dir"}, "")

    name = doc.get("name", default_name)
    if not isinstance(name, str):
        raise ConfigError("name must be a string")

    mesh_tab = _require(doc, "mesh", "")
    _no_unknown(mesh_tab, {"lx", "ly", "nx", "ny"}, "mesh.")
    try:
        domain = DomainSpec(
            lx=_number(_require(mesh_tab, "lx", "mesh."), "mesh.lx", positive=True),
            ly=_number(_require(mesh_tab, "ly", "mesh."), "mesh.ly", positive=True),
            nx=_integer(_require(mesh_tab, "nx", "mesh."), "mesh.nx", minimum=1),
            ny=_integer(_require(mesh_tab, "ny", "mesh."), "mesh.ny", minimum=2),
        )
    except ValueError as exc:
        raise ConfigError(f"mesh: {exc}") from exc
    m = domain.nx + 1

    law_tab = _require(doc, "law", "")
    _no_unknown(law_tab, {"kind", "kappa", "scale", "overrides"}, "law.")
    base = _parse_law_triple(law_tab, "law.")
    per_node = [base] * m
    for idx, kind, kappa, scale in _parse_overrides(law_tab.get("overrides", []), base, m):
        per_node[idx] = (kind, kappa, scale)
    try:
        for kind, kappa, scale in per_node:
            CohesiveLaw(kind, kappa, scale)
    except ValueError as exc:
        raise ConfigError(f"law: {exc}") from exc

    time_tab = _require(doc, "time", "")
    _no_unknown(time_tab, {"T", "steps"}, "time.")
    T = _number(_require(time_tab, "T", "time."), "time.T", positive=True)
    steps = _integer(_require(time_tab, "steps", "time."), "time.steps", minimum=1)

    load_tab = _require(doc, "load", "")
    _no_unknown(load_tab, {"breakpoints"}, "load.")
    bps = _require(load_tab, "breakpoints", "load.")
    if (not isinstance(bps, list) or len(bps) < 2
            or any(not isinstance(p, list) or len(p) != 2 for p in bps)):
        raise ConfigError("load.breakpoints must be a list of [t, amp] pairs (at least two)")
    try:
        load = LoadProgram(tuple((float(t), float(a)) for t, a in bps))
    except ValueError as exc:
        raise ConfigError(f"load.breakpoints: {exc}") from exc
    if load.T != T:
        raise ConfigError(f"load.breakpoints must end at time.T = {T!r}, got {load.T!r}")

    init_tab = doc.get("initial", {})
    _no_unknown(init_tab, {"z0", "V0"}, "initial.")
    z0_spec = init_tab.get("z0", 0.0)
    V0_spec = init_tab.get("V0", 0.0)
    for key, spec in (("initial.z0", z0_spec), ("initial.V0", V0_spec)):
        if not isinstance(spec, (int, float, list)):
            raise ConfigError(f"{key} must be a number or an array")

    solver_tab = doc.get("solver", {})
    _no_unknown(solver_tab, {"tol", "max_sweeps"}, "solver.")
    solver = SolverOptions(
        tol=_number(solver_tab.get("tol", 1e-10), "solver.tol", positive=True),
        max_sweeps=_integer(solver_tab.get("max_sweeps", 10_000), "solver.max_sweeps", minimum=1),
    )

    output_dir = doc.get("output_dir", os.path.join("out", name))
    if not isinstance(output_dir, str):
        raise ConfigError("output_dir must be a string")

    return Scenario(name=name, domain=domain, law_field_spec=per_node, load=load,
                    steps=steps, T=T, z0_spec=z0_spec, V0_spec=V0_spec,
                    solver=solver, output_dir=output_dir)


def _parse_law_triple(tab: dict, path: str):
    kind = _require(tab, "kind", path)
    if kind not in ("capped_linear", "exponential"):
        raise ConfigError(f"{path}kind must be 'capped_linear' or 'exponential', got {kind!r}")
    kappa = _number(_require(tab, "kappa", path), path + "kappa", positive=True)
    scale = _number(_require(tab, "scale", path), path + "scale", positive=True)
    return (kind, kappa, scale)


def _parse_overrides(overrides, base, m: int):
    if not isinstance(overrides, list):
        raise ConfigError("law.overrides must be a list")
    out = []
    for i, ov in enumerate(overrides):
        if not isinstance(ov, dict):
            raise ConfigError(f"law.overrides[{i}] must be an object")
        _no_unknown(ov, {"node", "kind", "kappa", "scale"}, f"law.overrides[{i}].")
        node = _integer(_require(ov, "node", f"law.overrides[{i}]."),
                        f"law.overrides[{i}].node", minimum=0)
        if node >= m:
            raise ConfigError(f"law.overrides[{i}].node = {node} exceeds the interface size {m}")
        kind = ov.get("kind", base[0])
        if kind not in ("capped_linear", "exponential"):
            raise ConfigError(f"law.overrides[{i}].kind must be a known law kind")
        kappa = _number(ov.get("kappa", base[1]), f"law.overrides[{i}].kappa", positive=True)
        scale = _number(ov.get("scale", base[2]), f"law.overrides[{i}].scale", positive=True)
        out.append((node, kind, kappa, scale))
    return out


def resolve_output_dir(scenario: Scenario, override: Optional[str] = None) -> str:
    """Output directory priority: COHESIVE_OUT, CLI flag, then the config."""
    env = os.environ.get("COHESIVE_OUT")
    if env:
        return os.path.join(env, scenario.name)
    if override:
        return override
    return scenario.output_dir
