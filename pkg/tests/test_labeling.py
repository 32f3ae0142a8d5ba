import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import DEFAULT_BC, STD_GRID, UNIT
from vhcm import rng
from vhcm.labeling import (RejectedSpec, admissible_bounds, build_fulldomain_dataset,
                           build_references, build_window_dataset, deduplicate,
                           find_reference_region, normalize, post_process, preprocess,
                           reconstruct_labels, reference_config, reference_for_polynomial,
                           split_indices, windows)
from vhcm.loads import LoadSpec, sample_load
from vhcm.solver import (check_regions, labels_from_intervals, nonlocal_intervals,
                         relative_error, solve_nonlocal, solve_vhcm)

G = STD_GRID


def test_admissible_bounds():
    assert admissible_bounds(G) == (17, 239)


@pytest.mark.parametrize("family,x_jump", [("f1", 0.4), ("f2", 0.55), ("f1", 0.5)])
def test_reference_region_is_minimal(family, x_jump):
    spec = LoadSpec(family, x_jump=x_jump)
    ref = find_reference_region(spec, G, UNIT, DEFAULT_BC)
    (a, b), = nonlocal_intervals(ref.labels)
    c = G.snap(x_jump)
    half = c - a
    assert b - c == half and half >= G.m
    assert ref.alpha == half * G.h
    assert 0 < ref.achieved_error < 0.01
    f = sample_load(spec, G)
    u = solve_nonlocal(G, UNIT, DEFAULT_BC, f)
    again = relative_error(u, solve_vhcm(G, UNIT, ref.labels, DEFAULT_BC, f))
    assert again == ref.achieved_error
    if half > G.m:
        narrower = labels_from_intervals(G.n, [(a + 1, b - 1)])
        assert relative_error(u, solve_vhcm(G, UNIT, narrower, DEFAULT_BC, f)) >= 0.01


def test_negated_load_has_same_region():
    spec = LoadSpec("f2", x_jump=0.45)
    a = find_reference_region(spec, G, UNIT, DEFAULT_BC)
    b = find_reference_region(spec.negate(), G, UNIT, DEFAULT_BC)
    assert np.array_equal(a.labels, b.labels)
    assert a.achieved_error == pytest.approx(b.achieved_error, rel=1e-12)


def test_reference_rejected_near_boundary():
    with pytest.raises(RejectedSpec):
        find_reference_region(LoadSpec("f2", x_jump=0.09), G, UNIT, DEFAULT_BC)


def test_polynomial_reference_is_all_local():
    ref = reference_for_polynomial(LoadSpec("f3", c1=12.0, c2=-3.0), G, UNIT, DEFAULT_BC)
    assert not ref.labels.any()
    assert ref.achieved_error < 1e-10
    with pytest.raises(ValueError):
        find_reference_region(LoadSpec("f3"), G, UNIT, DEFAULT_BC)
    assert not reference_config(LoadSpec("f3", c1=1.0), G, UNIT, DEFAULT_BC).labels.any()


def test_normalize():
    v = np.random.default_rng(0).standard_normal(100) * 7 + 3
    z = normalize(v)
    assert abs(z.mean()) < 1e-12
    assert abs(z.var() - 1) < 1e-9
    assert np.array_equal(normalize(np.full(5, 2.0)), np.zeros(5))


def test_preprocess_polynomial_is_zero():
    x = preprocess(sample_load(LoadSpec("f3", c1=5.0, c2=1.0), G), G)
    assert np.all(x == 0.0)


def test_windows():
    x = np.arange(1.0, 258.0)
    w = windows(x, 8)
    assert w.shape == (257, 33)
    assert np.array_equal(w[:, 16], x)
    assert np.all(w[0, :16] == 0) and np.array_equal(w[0, 16:], x[:17])
    assert np.array_equal(w[100], x[84:117])


def _run(n_nodes, start, length):
    lab = np.zeros(n_nodes, dtype=np.int8)
    lab[start:start + length] = 1
    return lab


def test_post_process_examples():
    assert not post_process(_run(257, 100, 5), 8).any()
    out = post_process(_run(257, 100, 8), 8)
    (a, b), = nonlocal_intervals(out)
    assert b - a == 16 and a <= 100 and b >= 107
    assert not post_process(np.zeros(257), 8).any()


def test_post_process_keeps_wide_runs():
    lab = _run(257, 60, 40)
    assert np.array_equal(post_process(lab, 8), lab)


def test_post_process_shifts_into_interior():
    out = post_process(_run(257, 10, 9), 8)
    (a, b), = nonlocal_intervals(out)
    assert a == 17 and b - a >= 16


def test_post_process_keeps_runs_split_by_one_local_node():
    lab = _run(257, 50, 20) | _run(257, 71, 20)
    assert nonlocal_intervals(post_process(lab, 8)) == [(50, 69), (71, 90)]


def test_post_process_merges_runs_that_collide_when_widened():
    # (50, 58) widens to (46, 62) and (64, 72) to (60, 76)
    lab = _run(257, 50, 9) | _run(257, 64, 9)
    assert nonlocal_intervals(post_process(lab, 8)) == [(46, 76)]


labels_strategy = st.lists(st.integers(0, 1), min_size=257, max_size=257)


@settings(max_examples=80, deadline=None)
@given(labels_strategy)
def test_post_process_idempotent_and_admissible(bits):
    lab = np.array(bits, dtype=np.int8)
    once = post_process(lab, 8)
    assert np.array_equal(post_process(once, 8), once)
    check_regions(G, nonlocal_intervals(once))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 256), st.integers(1, 60))
def test_post_process_single_runs(start, length):
    lab = _run(257, start, length)
    out = post_process(lab, 8)
    if lab.sum() < 8:
        assert not out.any()
    else:
        check_regions(G, nonlocal_intervals(out))


def test_split_sizes_and_determinism():
    s = split_indices(786, 0)
    assert [int(np.sum(s == k)) for k in ("train", "validation", "test")] == [589, 78, 119]
    assert np.array_equal(s, split_indices(786, 0))
    assert not np.array_equal(s, split_indices(786, 1))


def test_rng_streams_independent_and_repeatable():
    a = rng.stream(3, "split").random(5)
    assert np.array_equal(a, rng.stream(3, "split").random(5))
    assert not np.array_equal(a, rng.stream(3, "init").random(5))
    assert not np.array_equal(a, rng.stream(4, "split").random(5))


def test_deduplicate_prefers_earlier_split():
    x = np.array([[1.0, 2.0], [1.0, 2.0], [1.0, 2.0 + 1e-12], [3.0, 4.0], [1.0, 2.0]])
    y = np.array([[0], [0], [0], [1], [1]])
    split = np.array(["test", "train", "validation", "train", "train"])
    keep = deduplicate(x, y, split)
    assert keep.tolist() == [False, True, False, True, True]


@pytest.fixture(scope="module")
def small_refs():
    return build_references(G, UNIT, DEFAULT_BC, seed=1, per_family=3, n_polynomial=3)


def test_build_references_counts(small_refs):
    fams = [r.spec.family.value for r in small_refs]
    assert fams.count("f1") == 6 and fams.count("f2") == 6 and fams.count("f3") == 3
    assert sum(r.spec.negated for r in small_refs) == 6
    assert all(r.achieved_error < 0.01 for r in small_refs)


def test_fulldomain_dataset(small_refs):
    ds = build_fulldomain_dataset(small_refs, G, seed=0)
    assert ds.inputs.shape == (15, 257) and ds.labels.shape == (15, 257)
    assert sum(ds.counts().values()) == 15


def test_window_dataset_reconstructs_and_has_no_duplicates(small_refs):
    ds = build_window_dataset(small_refs, G, seed=0)
    assert ds.inputs.shape[1] == 33 and ds.labels.shape[1] == 1
    keys = {(np.round(x, 9) + 0.0).tobytes() + y.tobytes() for x, y in zip(ds.inputs, ds.labels)}
    assert len(keys) == len(ds)
    for i, r in enumerate(small_refs):
        rec = reconstruct_labels(ds, i, G.node_count)
        kept = rec >= 0
        assert np.array_equal(rec[kept], r.labels[kept])
    full = build_window_dataset(small_refs, G, seed=0, dedup=False)
    assert len(full) == 15 * 257 > len(ds)
