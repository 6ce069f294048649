"""Graph container, label state, and relational feature extraction."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hybridcc.graph import (
    KNOWN,
    PREDICTED,
    UNSET,
    DataGraph,
    LabelState,
    class_prior,
    compute_multiset_features,
    compute_proportion_features,
    neighbors,
)


def line_graph(n, known=None, n_classes=2, attr_dim=2):
    edges = [(i, i + 1) for i in range(n - 1)]
    attrs = np.arange(n * attr_dim, dtype=float).reshape(n, attr_dim)
    domain = tuple(f"c{k}" for k in range(n_classes))
    return DataGraph.build(edges, attrs, domain, known_labels=known or {})


def test_build_symmetrizes_and_deduplicates():
    g = DataGraph.build(
        [(0, 1), (1, 0), (0, 1), (1, 2), (2, 2)],
        np.zeros((3, 1)),
        ("a", "b"),
        known_labels={0: 0},
    )
    assert g.node_count == 3
    assert list(g.degrees) == [1, 2, 1]
    assert set(neighbors(g, 1).tolist()) == {0, 2}
    # the self loop on node 2 is dropped, not counted as degree
    assert list(neighbors(g, 2)) == [1]


def test_build_rejects_isolated_nodes():
    with pytest.raises(ValueError, match="node 2 is isolated"):
        DataGraph.build([(0, 1)], np.zeros((3, 1)), ("a", "b"))


def test_known_label_bookkeeping():
    g = line_graph(4, known={1: 0, 3: 1})
    assert list(g.known_nodes) == [1, 3]
    assert list(g.unknown_nodes) == [0, 2]
    assert g.known_mask().sum() == 2
    st0 = LabelState.from_graph(g)
    assert list(st0.provenance) == [UNSET, KNOWN, UNSET, KNOWN]
    assert st0.labels[1] == 0 and st0.labels[3] == 1
    assert st0.labels[0] == -1


def test_known_labels_are_immutable():
    g = line_graph(3, known={0: 1})
    st0 = LabelState.from_graph(g)
    with pytest.raises(ValueError, match="immutable"):
        st0.set_predicted(np.array([0]), np.array([0]))


def test_set_predicted_marks_provenance():
    g = line_graph(3, known={0: 1})
    st0 = LabelState.from_graph(g)
    st0.set_predicted(np.array([1, 2]), np.array([0, 1]))
    assert st0.all_labeled
    assert list(st0.provenance) == [KNOWN, PREDICTED, PREDICTED]
    assert list(st0.predicted_nodes()) == [1, 2]


def test_with_known_labels_leaves_original_untouched():
    g = line_graph(4, known={0: 0})
    h = g.with_known_labels({1: 1, 2: 0})
    assert list(h.known_nodes) == [1, 2]
    assert list(g.known_nodes) == [0]
    assert h.indptr is g.indptr  # structure is shared, labels are not


def test_multiset_counts_on_a_path():
    # 0(c0) - 1 - 2(c1), node 1 predicted c1
    g = line_graph(3, known={0: 0, 2: 1})
    st0 = LabelState.from_graph(g)
    st0.set_predicted(np.array([1]), np.array([1]))
    counts = compute_multiset_features(g, st0)
    assert counts.tolist() == [[0, 1], [1, 1], [0, 1]]
    props = compute_proportion_features(g, st0)
    assert props.tolist() == [[0, 1], [0.5, 0.5], [0, 1]]


def test_multiset_requires_complete_labeling():
    g = line_graph(3, known={0: 0})
    with pytest.raises(ValueError):
        compute_multiset_features(g, LabelState.from_graph(g))


def test_within_mask_restricts_to_chosen_neighbors():
    # only known neighbors count; node 1 sees just node 0, node 2 sees nobody
    g = line_graph(3, known={0: 0})
    st0 = LabelState.from_graph(g)
    mask = g.known_mask()
    counts = compute_multiset_features(g, st0, within=mask)
    assert counts.tolist() == [[0, 0], [1, 0], [0, 0]]
    props = compute_proportion_features(g, st0, within=mask)
    assert props[1].tolist() == [1, 0]
    assert props[2].tolist() == [0, 0]  # zero row, not NaN


def test_class_prior_uses_laplace_smoothing():
    g = line_graph(5, known={0: 0, 1: 0, 2: 1})
    prior = class_prior(LabelState.from_graph(g), known_only=True, smoothing=1.0)
    assert np.allclose(prior, [0.6, 0.4])  # (2+1)/(3+2), (1+1)/(3+2)


def test_class_prior_unsmoothed():
    g = line_graph(4, known={0: 0, 1: 0, 2: 0})
    prior = class_prior(LabelState.from_graph(g), known_only=True, smoothing=0.0)
    assert prior.tolist() == [1.0, 0.0]


@settings(max_examples=50, deadline=None)
@given(
    n=st.integers(min_value=2, max_value=30),
    extra=st.lists(
        st.tuples(st.integers(0, 29), st.integers(0, 29)), max_size=40
    ),
    seed=st.integers(0, 2**31 - 1),
)
def test_feature_rows_account_for_every_neighbor(n, extra, seed):
    """Multiset rows sum to the degree; proportion rows sum to one."""
    edges = [(i, i + 1) for i in range(n - 1)]
    edges += [(a % n, b % n) for a, b in extra if a % n != b % n]
    g = DataGraph.build(edges, np.zeros((n, 1)), ("x", "y", "z"))
    rng = np.random.default_rng(seed)
    st0 = LabelState.from_graph(g)
    st0.set_predicted(np.arange(n), rng.integers(0, 3, size=n))
    counts = compute_multiset_features(g, st0)
    assert np.array_equal(counts.sum(axis=1), g.degrees)
    props = compute_proportion_features(g, st0)
    assert np.allclose(props.sum(axis=1), 1.0)
