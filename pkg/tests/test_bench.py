import csv
import io

import numpy as np
import pytest

from bidual.bench import (
    CSV_HEADER,
    ClassifyConfig,
    SweepConfig,
    gen_instance,
    records_to_csv,
    run_classify,
    run_sweep,
    summarize,
    trial_seed,
)
from bidual.oracle import oracle_entry


def test_gen_instance_is_reproducible():
    a, x_a = gen_instance(4, 8, 2, 42)
    b, x_b = gen_instance(4, 8, 2, 42)
    assert a == b and np.array_equal(x_a, x_b)
    assert np.count_nonzero(x_a) == 2
    assert a.M == pytest.approx(np.max(np.abs(x_a)))
    c, _ = gen_instance(4, 8, 2, trial_seed(42, 2, 0))
    d, _ = gen_instance(4, 8, 2, trial_seed(42, 2, 1))
    assert not np.array_equal(c.A, d.A)


def test_zero_sparsity_convention():
    inst, x0 = gen_instance(4, 8, 0, 1)
    assert inst.M == 1.0
    np.testing.assert_array_equal(inst.b, 0)
    assert not x0.any()
    with pytest.raises(ValueError):
        gen_instance(4, 8, 9, 1)


def test_dense_planted_vector_needs_at_most_m_entries():
    inst, _ = gen_instance(3, 6, 6, 7)
    assert oracle_entry(inst.with_M("conservative")).value <= 3


def test_one_trial_one_level_gives_one_record_per_multiplier():
    recs = run_sweep(SweepConfig(m=8, n=16, sparsity_grid=(3,), trials=1))
    assert [r.multiplier for r in recs] == [1.0, 2.0, 5.0]
    assert all(r.status == "optimal" for r in recs)


def test_csv_is_byte_stable_without_timing():
    cfg = SweepConfig(m=8, n=16, sparsity_grid=(1, 3), trials=3, rng_seed=5)
    a = records_to_csv(run_sweep(cfg, timing=False))
    b = records_to_csv(run_sweep(cfg, timing=False))
    assert a == b
    rows = list(csv.reader(io.StringIO(a)))
    assert tuple(rows[0]) == CSV_HEADER
    assert len(rows) == 1 + 2 * 3 * 3
    assert all(r[-1] == "0" for r in rows[1:])


def test_parallel_matches_serial():
    cfg = SweepConfig(m=8, n=16, sparsity_grid=(2, 4), trials=4, rng_seed=3)
    assert records_to_csv(run_sweep(cfg, threads=2, timing=False)) == records_to_csv(run_sweep(cfg, timing=False))


def test_bounds_weakly_decrease_in_multiplier():
    recs = run_sweep(SweepConfig(m=12, n=24, sparsity_grid=(2, 5), trials=5, rng_seed=9), timing=False)
    by_inst = {}
    for r in recs:
        by_inst.setdefault((r.sparsity, r.trial), []).append(r.bound)
    for bounds in by_inst.values():
        assert all(b <= a + 1e-9 for a, b in zip(bounds, bounds[1:]))


def test_small_scale_soundness_against_oracle():
    recs = run_sweep(SweepConfig(m=6, n=12, sparsity_grid=(1, 2, 4), M_multipliers=(1.0,), trials=6), oracle=True)
    for r in recs:
        assert r.oracle_value <= r.truth
        if r.hypothesis_ok:
            assert r.bound <= r.oracle_value + 1e-9
        if r.planted_optimal:
            assert r.bound <= r.sparsity + 1e-9


def test_summary_shape():
    recs = run_sweep(SweepConfig(m=8, n=16, sparsity_grid=(1, 2), trials=4), timing=False)
    cells = summarize(recs)["cells"]
    assert len(cells) == 6
    for c in cells:
        assert c["count"] == 4 and c["min"] <= c["median"] <= c["max"]


def test_config_validation():
    with pytest.raises(ValueError):
        SweepConfig(trials=0)
    with pytest.raises(ValueError):
        SweepConfig(n=10, sparsity_grid=(11,))
    with pytest.raises(ValueError):
        ClassifyConfig(rho=1.0)
    with pytest.raises(ValueError):
        ClassifyConfig(gamma=-1)


def test_single_class_is_always_right():
    rep = run_classify(ClassifyConfig(K=1, trials=10))
    assert rep.accuracy == 1.0


def test_classification_deterministic_and_serialisable():
    cfg = ClassifyConfig(trials=10, rng_seed=4)
    a, b = run_classify(cfg), run_classify(cfg)
    assert a.to_json() == b.to_json()
    assert run_classify(cfg, threads=2).to_json() == a.to_json()
    assert a.failures == 0 and 0 <= a.accuracy <= 1


def test_heavy_corruption_degrades_accuracy():
    clean = run_classify(ClassifyConfig(rho=0.0, trials=40)).accuracy
    dirty = run_classify(ClassifyConfig(rho=0.9, trials=40)).accuracy
    assert clean >= 0.9
    assert dirty < clean
