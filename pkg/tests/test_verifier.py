import copy

import numpy as np
import pytest

from cohesivefatigue.laws import CohesiveLaw, LawField
from cohesivefatigue.evolution import InitialState, LoadProgram, run
from cohesivefatigue.verifier import (audit_trajectory, check_energy_balance,
                                      check_flow_rule, check_global_stability,
                                      check_irreversibility, check_kkt,
                                      refinement_study)

from conftest import build_model

CAPPED = CohesiveLaw("capped_linear", 0.5, 1.0)


@pytest.fixture(scope="module")
def audited_run():
    _, _, model = build_model()
    laws = LawField.uniform(CAPPED, 2)
    traj = run(model, laws, LoadProgram(((0.0, 0.0), (2.0, 2.0))), 300)
    return traj, model, laws


def _copy_traj(traj):
    return copy.deepcopy(traj)


def test_all_checks_pass_on_clean_run(audited_run):
    traj, model, laws = audited_run
    report = audit_trajectory(traj, model, laws)
    assert report.passed, report.summary_lines()
    names = {c.name for c in report.checks}
    assert names == {"energy_balance", "irreversibility", "kkt_traction_bound",
                     "flow_rule", "global_stability"}


def test_zero_load_energy_balance(two_bar):
    _, _, model = two_bar
    laws = LawField.uniform(CAPPED, 2)
    traj = run(model, laws, LoadProgram(((0.0, 0.0), (1.0, 0.0))), 20)
    res = check_energy_balance(traj)
    assert res.passed and res.details["max_abs_drift"] == 0.0


def test_energy_balance_violation_detected(audited_run):
    traj, _, _ = audited_run
    bad = _copy_traj(traj)
    bad.drift = bad.drift + 2.0 * bad.eta_k + 1.0
    assert not check_energy_balance(bad).passed


def test_irreversibility_negative_test(audited_run):
    traj, _, _ = audited_run
    bad = _copy_traj(traj)
    step = bad.k // 2
    bad.V[step, 1] -= 0.05
    res = check_irreversibility(bad)
    assert not res.passed
    assert res.node == 1 and res.step in (step, step + 1)


def test_kkt_negative_test(audited_run):
    traj, laws_model, laws = audited_run
    bad = _copy_traj(traj)
    bad.tractions[10, 0] = 0.75    # beyond the threshold 0.5
    res = check_kkt(bad, laws)
    assert not res.passed and res.worst == pytest.approx(0.25, abs=1e-12)
    assert (res.step, res.node) == (10, 0)


def test_flow_rule_negative_test(audited_run):
    traj, _, laws = audited_run
    bad = _copy_traj(traj)
    # pick a genuinely slipping step on the plateau and flip the traction sign
    step = int(np.flatnonzero(np.abs(np.diff(bad.z[:, 0])) > 1e-6)[2]) + 1
    bad.tractions[step, 0] = -bad.tractions[step, 0]
    assert not check_flow_rule(bad, laws).passed
    # slack steps are vacuous for the flow rule
    quiet = _copy_traj(traj)
    quiet.tractions[3, 0] = 0.2     # stick step, within threshold
    assert check_flow_rule(quiet, laws).passed


def test_flow_rule_sign_convention(audited_run):
    traj, _, laws = audited_run
    dz = np.diff(traj.z, axis=0)
    slipping = np.abs(dz) > 1e-8
    gp = laws.derivative(traj.V[1:])
    assert np.all(np.abs(traj.tractions[1:][slipping]
                         - (np.sign(dz) * gp)[slipping]) <= 1e-6)


def test_global_stability_negative_test(audited_run):
    traj, model, laws = audited_run
    bad = _copy_traj(traj)
    # plant a non-minimizing state mid-plateau (z far from the plateau value)
    step = bad.state_at(1.0)
    bad.z[step] = np.array([-1.0, 2.5])
    res = check_global_stability(bad, model, laws, sample_steps=[step])
    assert not res.passed and res.step == step


def test_global_stability_all_broken_state(two_bar):
    _, _, model = two_bar
    laws = LawField.uniform(CAPPED, 2)
    traj = run(model, laws, LoadProgram(((0.0, 0.0), (1.0, 0.9))), 30,
               initial=InitialState(z0=np.zeros(2), V0=np.full(2, 5.0)))
    res = check_global_stability(traj, model, laws)
    assert res.passed


def test_refinement_two_bar_monotone(two_bar):
    _, _, model = two_bar
    laws = LawField.uniform(CAPPED, 2)
    table = refinement_study(model, laws, LoadProgram(((0.0, 0.0), (2.0, 2.0))),
                             [50, 100, 200, 400, 800])
    assert table.reference_k == 800
    assert table.errors_nonincreasing()
    ref_row = [r for r in table.rows if r.k == 800][0]
    assert ref_row.v_theta_err == 0.0 and ref_row.jump_err == 0.0
    assert all(r.rupture_t is not None for r in table.rows)


def test_refinement_zero_load_all_zero(two_bar):
    _, _, model = two_bar
    laws = LawField.uniform(CAPPED, 2)
    table = refinement_study(model, laws, LoadProgram(((0.0, 0.0), (1.0, 0.0))),
                             [10, 20, 40])
    for row in table.rows:
        assert row.v_theta_err == 0.0 and row.jump_err == 0.0 and row.max_drift == 0.0


def test_refinement_cyclic_short(two_bar):
    mesh, _, model = build_model(1.0, 0.5, 1, 2)
    laws = LawField.uniform(CohesiveLaw("exponential", 1.0, 5.0), 2)
    bp = [(0.0, 0.0)]
    for n in range(4):
        bp += [(n + 0.5, 0.3), (n + 1.0, 0.0)]
    table = refinement_study(model, laws, LoadProgram(tuple(bp)), [100, 200, 400, 1600])
    assert table.errors_nonincreasing()


def test_refinement_rejects_tiny_k(two_bar):
    _, _, model = two_bar
    laws = LawField.uniform(CAPPED, 2)
    with pytest.raises(ValueError):
        refinement_study(model, laws, LoadProgram(((0.0, 0.0), (1.0, 0.0))), [5, 50])


def test_report_serialization(audited_run, tmp_path):
    traj, model, laws = audited_run
    report = audit_trajectory(traj, model, laws, with_stability=False)
    path = tmp_path / "audit.json"
    report.to_json(path)
    import json
    doc = json.loads(path.read_text())
    assert doc["passed"] is True
    assert len(doc["checks"]) == 4
    assert all("worst" in c for c in doc["checks"])
