import numpy as np
import pytest

from bidual.certify import (
    HypothesisViolated,
    InfeasibleRelaxation,
    lower_bound,
    oracle_for,
    verify_certificate,
)
from bidual.model import OracleResult, ProblemInstance, SparsityCertificate, SparsityMode
from bidual.relax import solve_dual

from conftest import random_weighted_instance

ENTRY, GROUP = SparsityMode.entry(), SparsityMode.group()


def micro_examples():
    return [
        (ProblemInstance.from_mode(np.eye(2), [1, 0], ENTRY, M=1), 1.0, 1),
        (ProblemInstance.from_mode([[1, 1]], [2], ENTRY, M=2), 1.0, 1),
        (ProblemInstance.from_mode([[1, 1]], [1], GROUP, [2], M=1), 0.5, 1),
    ]


@pytest.mark.parametrize("case", range(3))
def test_micro_examples(case):
    inst, bound, value = micro_examples()[case]
    cert = lower_bound(inst)
    assert cert.bound == pytest.approx(bound, abs=1e-12)
    res = oracle_for(inst)
    assert res.value == value
    rep = verify_certificate(cert, res)
    assert rep.valid and rep.ok and rep.hypothesis_satisfied
    assert rep.gap == pytest.approx(value - bound, abs=1e-12)


def test_integer_bound_rounds_up():
    inst = ProblemInstance.from_mode([[1, 1]], [1], GROUP, [2], M=1)
    assert lower_bound(inst).integer_bound == 1
    assert lower_bound(ProblemInstance.from_mode(np.eye(2), [1, 0], ENTRY, M=1)).integer_bound == 1
    mixed = ProblemInstance.mixed([[1.0], [1.0]], [1, 1], [1], 0.01, M=1)
    assert lower_bound(mixed).integer_bound is None


def _fake_cert(bound, M=1.0):
    return SparsityCertificate(bound=bound, kind=ENTRY, M_used=M, relaxation_objective=bound,
                               integer_bound=None, x_relaxed=np.zeros(2))


def test_overshooting_bound_is_flagged_invalid():
    res = OracleResult(1.0, frozenset({0}), np.array([1.0, 0.0]), True, 2)
    rep = verify_certificate(_fake_cert(1.2), res)
    assert rep.hypothesis_satisfied
    assert not rep.valid and not rep.ok
    assert "NO" in rep.summary()


def test_hypothesis_violation_reported_or_raised():
    res = OracleResult(1.0, frozenset({0}), np.array([3.0, 0.0]), True, 2)
    rep = verify_certificate(_fake_cert(1.2, M=1.0), res)
    assert not rep.hypothesis_satisfied and not rep.valid and rep.ok
    with pytest.raises(HypothesisViolated):
        verify_certificate(_fake_cert(0.5, M=1.0), res, strict=True)
    with pytest.raises(ValueError):
        verify_certificate(_fake_cert(0.5), OracleResult(1.0, frozenset(), None, False, 1))


def test_infeasible_box():
    with pytest.raises(InfeasibleRelaxation):
        lower_bound(ProblemInstance.from_mode([[1, 1]], [10], ENTRY, M=1))
    with pytest.raises(ValueError):
        lower_bound(ProblemInstance.from_mode(np.eye(2), [1, 0], ENTRY))


def test_bound_equals_dual_optimum(rng):
    for _ in range(30):
        inst = random_weighted_instance(rng)
        assert lower_bound(inst).bound == pytest.approx(max(0.0, solve_dual(inst).objective), abs=1e-8)


def test_gap_grows_with_M():
    # a planted 1-sparse solution of size 1: larger boxes only loosen the bound
    A = np.array([[1.0, 2.0, -1.0], [0.5, 1.0, 3.0]])
    inst = ProblemInstance.from_mode(A, A @ [1.0, 0, 0], ENTRY, M=1)
    res = oracle_for(inst)
    gaps = [verify_certificate(lower_bound(inst.with_M(M)), res).gap for M in (1, 2, 5, 20)]
    assert all(b >= a - 1e-12 for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] > gaps[0]


def test_sound_on_random_weighted_instances(rng):
    for _ in range(40):
        inst = random_weighted_instance(rng, m_range=(2, 4), n_range=(4, 8))
        res = oracle_for(inst)
        M = max(float(np.max(np.abs(res.witness_x))), 1e-6)
        rep = verify_certificate(lower_bound(inst.with_M(M)), res, strict=True)
        assert rep.valid
