"""Shared fixtures: small synthetic datasets written to disk once per session."""

import pytest

from hybridcc.synthetic import generate_dataset, write_dataset


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory):
    """An easy homophilous 2-class dataset on disk: (nodes_path, edges_path)."""
    out = tmp_path_factory.mktemp("smalldata")
    data = generate_dataset(80, 2, 0.85, 0.8, seed=17, avg_degree=6.0, attr_dim=3)
    return write_dataset(str(out), data)
