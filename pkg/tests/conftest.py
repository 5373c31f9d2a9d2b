import os
import sys

import numpy as np
import pytest

from cohesivefatigue import cli
from cohesivefatigue.laws import CohesiveLaw, LawField
from cohesivefatigue.mesh import DomainSpec, build_mesh, assemble_stiffness
from cohesivefatigue.reduced import condense
from cohesivefatigue.scenario import parse_config, shipped_scenario_names, shipped_scenario_path
from cohesivefatigue.evolution import run


def build_model(lx=1.0, ly=1.0, nx=1, ny=2):
    mesh = build_mesh(DomainSpec(lx=lx, ly=ly, nx=nx, ny=ny))
    system = assemble_stiffness(mesh)
    return mesh, system, condense(mesh, system)


@pytest.fixture(scope="session")
def two_bar():
    """Unit-square two-bar mesh, stiffness and condensed model."""
    return build_model()


@pytest.fixture(scope="session")
def capped_law():
    return CohesiveLaw("capped_linear", 0.5, 1.0)


@pytest.fixture(scope="session")
def exp_law():
    return CohesiveLaw("exponential", 1.0, 5.0)


@pytest.fixture(scope="session")
def shipped_outputs(tmp_path_factory):
    """Every shipped scenario run once through the CLI; name -> output dir."""
    root = tmp_path_factory.mktemp("shipped")
    out = {}
    for name in shipped_scenario_names():
        outdir = root / name
        code = cli.main(["run", name, "--out", str(outdir)])
        assert code == 0, f"shipped scenario {name} failed to run"
        out[name] = outdir
    return out


@pytest.fixture(scope="session")
def shipped_trajectories():
    """Every shipped scenario run once in-process; name -> (scenario parts, trajectory)."""
    out = {}
    for name in shipped_scenario_names():
        scenario = parse_config(shipped_scenario_path(name))
        mesh, model, laws, initial = scenario.build()
        traj = run(model, laws, scenario.load, scenario.steps, initial=initial,
                   opts=scenario.solver)
        out[name] = {"scenario": scenario, "mesh": mesh, "model": model,
                     "laws": laws, "initial": initial, "traj": traj}
    return out
