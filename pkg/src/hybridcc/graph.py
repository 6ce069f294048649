"""Graph container, label bookkeeping, and neighbor-label features.

A single partially labeled network: every node carries an attribute vector,
a subset of nodes has a known class label, and the downstream task is to
infer the labels of the remaining nodes. Relational features summarize the
labels currently assigned to a node's neighborhood, either as fractions of
the neighborhood (for vector-based classifiers) or as raw per-class counts
(for classifiers that treat each neighbor label as one observation).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "UNSET",
    "KNOWN",
    "PREDICTED",
    "DataGraph",
    "LabelState",
    "neighbors",
    "compute_proportion_features",
    "compute_multiset_features",
    "class_prior",
]

# Provenance codes for LabelState.provenance.
UNSET = 0
KNOWN = 1
PREDICTED = 2


@dataclass(frozen=True)
class DataGraph:
    """Immutable undirected graph with node attributes and known labels.

    Adjacency is stored in compressed sparse row form: the neighbors of node
    ``i`` are ``neighbor_ids[indptr[i]:indptr[i + 1]]``, sorted and
    deduplicated. Self loops are dropped at construction and every node must
    have degree >= 1 (isolated nodes are removed during data preparation).

    ``known_labels`` maps node index to class index for the nodes whose label
    is given; all other nodes are the inference target. The graph object is
    never mutated after construction, so one instance can be shared freely
    across concurrently running trials.
    """

    indptr: np.ndarray
    neighbor_ids: np.ndarray
    degrees: np.ndarray
    attributes: np.ndarray
    label_domain: tuple[str, ...]
    known_labels: dict[int, int]

    @classmethod
    def build(cls, edges, attributes, label_domain, known_labels=None):
        """Construct a graph from an edge list.

        ``edges`` is a sequence of (i, j) node-index pairs. Duplicates and
        reversed orientations collapse to a single undirected edge; self
        loops are discarded. Raises ``ValueError`` for out-of-range
        endpoints, isolated nodes, fewer than two classes, or known labels
        outside the class domain.
        """
        attributes = np.asarray(attributes, dtype=float)
        if attributes.ndim != 2:
            raise ValueError("attributes must be a 2-D (nodes x features) array")
        n = attributes.shape[0]
        label_domain = tuple(label_domain)
        if len(label_domain) < 2:
            raise ValueError("label domain must contain at least 2 classes")

        pairs = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        if pairs.size and (pairs.min() < 0 or pairs.max() >= n):
            raise ValueError("edge endpoint out of range")
        pairs = pairs[pairs[:, 0] != pairs[:, 1]]  # no self loops
        lo = np.minimum(pairs[:, 0], pairs[:, 1])
        hi = np.maximum(pairs[:, 0], pairs[:, 1])
        undirected = np.unique(np.stack([lo, hi], axis=1), axis=0)

        src = np.concatenate([undirected[:, 0], undirected[:, 1]])
        dst = np.concatenate([undirected[:, 1], undirected[:, 0]])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]

        degrees = np.bincount(src, minlength=n)
        if np.any(degrees == 0):
            bad = int(np.flatnonzero(degrees == 0)[0])
            raise ValueError(f"node {bad} is isolated (degree 0)")
        indptr = np.concatenate([[0], np.cumsum(degrees)])

        known = dict(known_labels) if known_labels else {}
        for node, cls_idx in known.items():
            if not 0 <= node < n:
                raise ValueError(f"known label for out-of-range node {node}")
            if not 0 <= cls_idx < len(label_domain):
                raise ValueError(f"known class index {cls_idx} outside label domain")

        return cls(
            indptr=indptr,
            neighbor_ids=dst,
            degrees=degrees,
            attributes=attributes,
            label_domain=label_domain,
            known_labels=known,
        )

    @property
    def node_count(self) -> int:
        return self.attributes.shape[0]

    @property
    def n_classes(self) -> int:
        return len(self.label_domain)

    @property
    def known_nodes(self) -> np.ndarray:
        """Sorted indices of nodes with a given label."""
        return np.array(sorted(self.known_labels), dtype=np.int64)

    @property
    def unknown_nodes(self) -> np.ndarray:
        """Sorted indices of nodes whose label must be inferred."""
        mask = np.ones(self.node_count, dtype=bool)
        if self.known_labels:
            mask[self.known_nodes] = False
        return np.flatnonzero(mask)

    def known_mask(self) -> np.ndarray:
        mask = np.zeros(self.node_count, dtype=bool)
        if self.known_labels:
            mask[self.known_nodes] = True
        return mask

    def with_known_labels(self, known_labels) -> "DataGraph":
        """Same topology and attributes, different known-label partition."""
        known = dict(known_labels)
        for node, cls_idx in known.items():
            if not 0 <= node < self.node_count:
                raise ValueError(f"known label for out-of-range node {node}")
            if not 0 <= cls_idx < self.n_classes:
                raise ValueError(f"known class index {cls_idx} outside label domain")
        return replace(self, known_labels=known)


@dataclass
class LabelState:
    """Current hard label of every node plus where it came from.

    Nodes with a given label keep provenance ``KNOWN`` and may never be
    reassigned. Inferred nodes carry ``PREDICTED``; ``UNSET`` marks nodes
    that have not been labeled yet (before bootstrap). ``labels`` holds -1
    for unset nodes. One state belongs to one inference run; it is mutable
    and must not be shared across runs.
    """

    labels: np.ndarray
    provenance: np.ndarray
    n_classes: int

    @classmethod
    def from_graph(cls, graph: DataGraph) -> "LabelState":
        labels = np.full(graph.node_count, -1, dtype=np.int64)
        provenance = np.full(graph.node_count, UNSET, dtype=np.uint8)
        if graph.known_labels:
            idx = graph.known_nodes
            labels[idx] = [graph.known_labels[i] for i in idx]
            provenance[idx] = KNOWN
        return cls(labels=labels, provenance=provenance, n_classes=graph.n_classes)

    def copy(self) -> "LabelState":
        return LabelState(self.labels.copy(), self.provenance.copy(), self.n_classes)

    @property
    def all_labeled(self) -> bool:
        return not np.any(self.provenance == UNSET)

    def predicted_nodes(self) -> np.ndarray:
        return np.flatnonzero(self.provenance == PREDICTED)

    def set_predicted(self, nodes, labels) -> None:
        """Assign predicted labels; refuses to touch known nodes."""
        nodes = np.asarray(nodes, dtype=np.int64)
        labels = np.asarray(labels, dtype=np.int64)
        if nodes.shape != labels.shape:
            raise ValueError("nodes and labels must have matching shapes")
        if np.any(self.provenance[nodes] == KNOWN):
            raise ValueError("known labels are immutable")
        if labels.size and (labels.min() < 0 or labels.max() >= self.n_classes):
            raise ValueError("label index outside class domain")
        self.labels[nodes] = labels
        self.provenance[nodes] = PREDICTED


def neighbors(graph: DataGraph, node: int) -> np.ndarray:
    """Sorted, deduplicated neighbor indices of ``node``."""
    if not 0 <= node < graph.node_count:
        raise IndexError(f"node index {node} out of range [0, {graph.node_count})")
    return graph.neighbor_ids[graph.indptr[node] : graph.indptr[node + 1]].copy()


def _neighbor_label_counts(graph, state, within):
    if len(state.labels) != graph.node_count:
        raise ValueError("label state does not match graph size")
    c = state.n_classes
    src = np.repeat(np.arange(graph.node_count), graph.degrees)
    dst = graph.neighbor_ids
    if within is not None:
        keep = within[dst]
        src, dst = src[keep], dst[keep]
    labels = state.labels[dst]
    if labels.size and labels.min() < 0:
        raise ValueError("relational features require labels on all contributing nodes")
    counts = np.bincount(src * c + labels, minlength=graph.node_count * c)
    return counts.reshape(graph.node_count, c)


def compute_multiset_features(graph: DataGraph, state: LabelState, within=None) -> np.ndarray:
    """Per-node count of neighbors carrying each class label.

    Returns an integer (nodes x classes) matrix; row sums equal node degree.
    ``within`` optionally restricts the neighborhood to a boolean node mask
    (used when only a trusted subset of labels may contribute); masked-out
    neighbors are ignored entirely.
    """
    if within is None and not state.all_labeled:
        raise ValueError("relational features require a fully labeled state")
    return _neighbor_label_counts(graph, state, within)


def compute_proportion_features(graph: DataGraph, state: LabelState, within=None) -> np.ndarray:
    """Per-node fraction of neighbors carrying each class label.

    Row i is the normalized label histogram of node i's neighborhood, so
    entries lie in [0, 1] and sum to 1. With a ``within`` mask the histogram
    is taken over the unmasked neighbors only, and a node with no unmasked
    neighbor gets an all-zero row.
    """
    counts = compute_multiset_features(graph, state, within)
    denom = counts.sum(axis=1)
    out = np.zeros(counts.shape, dtype=float)
    nz = denom > 0
    out[nz] = counts[nz] / denom[nz, None]
    return out


def class_prior(state: LabelState, known_only: bool = True, smoothing: float = 1.0) -> np.ndarray:
    """Smoothed class distribution of the labeled nodes.

    Counts labels over the known nodes (or over all labeled nodes when
    ``known_only`` is false) and returns
    ``(count_c + smoothing) / (N + n_classes * smoothing)``.
    """
    if smoothing < 0:
        raise ValueError("smoothing must be >= 0")
    if not np.any(state.provenance == KNOWN):
        raise ValueError("class prior requires at least one known label")
    if known_only:
        selected = state.provenance == KNOWN
    else:
        selected = state.provenance != UNSET
    picked = state.labels[selected]
    counts = np.bincount(picked, minlength=state.n_classes).astype(float)
    total = picked.size + state.n_classes * smoothing
    return (counts + smoothing) / total
