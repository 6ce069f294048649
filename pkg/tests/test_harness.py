"""Experiment harness: config, sampling, tuning, statistics, and reports."""

import math
import os

import numpy as np
import pytest

import hybridcc.harness as harness
from hybridcc.graph import DataGraph, LabelState
from hybridcc.harness import (
    ConfigError,
    ExperimentConfig,
    accuracy,
    cross_validate_hyperparams,
    degenerate_flag,
    paired_t_test,
    parse_config_file,
    run_experiment,
    sample_known,
    summarize,
)
from hybridcc.learning import ClassifierSpec


def chain_graph(n, known=None):
    edges = [(i, i + 1) for i in range(n - 1)]
    return DataGraph.build(edges, np.zeros((n, 1)), ("a", "b"), known_labels=known or {})


def tiny_config(small_dataset, tmp_path, **overrides):
    nodes, edges = small_dataset
    defaults = dict(
        nodes_path=nodes,
        edges_path=edges,
        densities=(0.1,),
        trials=3,
        variants=("known-onepass", "attr-only"),
        classifiers=("lr",),
        master_seed=1,
        cv_folds=3,
        sigma_grid=(1.0,),
        alpha_grid=(1.0,),
        ica_iterations=3,
        em_iterations=2,
        output_dir=str(tmp_path / "reports"),
    )
    defaults.update(overrides)
    return ExperimentConfig(**defaults)


# ------------------------------------------------------------------ config


def test_config_validation_messages():
    base = dict(nodes_path="n", edges_path="e")
    with pytest.raises(ConfigError, match="density"):
        ExperimentConfig(densities=(1.5,), **base)
    with pytest.raises(ConfigError, match="unknown variant"):
        ExperimentConfig(variants=("em",), **base)
    with pytest.raises(ConfigError, match="duplicates"):
        ExperimentConfig(variants=("all-em", "all-em"), **base)
    with pytest.raises(ConfigError, match="unknown classifier"):
        ExperimentConfig(classifiers=("svm",), **base)
    with pytest.raises(ConfigError, match="positive"):
        ExperimentConfig(sigma_grid=(0.0, 1.0), **base)
    with pytest.raises(ConfigError, match="trials"):
        ExperimentConfig(trials=0, **base)
    with pytest.raises(ConfigError, match="normalization"):
        ExperimentConfig(normalization="scale", **base)


def test_parse_config_round_trip(tmp_path):
    text = (
        "# experiment\n"
        "nodes_path = data/nodes.tsv\n"
        "edges_path = data/edges.tsv\n"
        "densities = 0.01, 0.05\n"
        "trials = 4\n"
        "variants = all-em, attr-only\n"
        "classifiers = lr+nb+reg, lr\n"
        "master_seed = 9\n"
        "sigma_grid = 0.1, 1\n"
        "alpha_grid = 1\n"
        "normalization = minmax\n"
    )
    path = tmp_path / "exp.cfg"
    path.write_text(text)
    cfg = parse_config_file(str(path))
    assert cfg.densities == (0.01, 0.05)
    assert cfg.trials == 4
    assert cfg.variants == ("all-em", "attr-only")
    assert cfg.classifiers == ("lr+nb+reg", "lr")
    assert cfg.sigma_grid == (0.1, 1.0)
    assert cfg.normalization == "minmax"
    assert cfg.output_dir == "reports"  # default untouched


@pytest.mark.parametrize(
    "line,match",
    [
        ("budget = 3", "unknown config key"),
        ("trials = many", "cannot parse"),
        ("no equals sign here", "expected 'key = value'"),
    ],
)
def test_parse_config_errors_name_the_line(tmp_path, line, match):
    path = tmp_path / "exp.cfg"
    path.write_text(f"nodes_path = n\nedges_path = e\n{line}\n")
    with pytest.raises(ConfigError, match=f"line 3.*{match}|{match}"):
        parse_config_file(str(path))


def test_parse_config_rejects_repeated_key(tmp_path):
    path = tmp_path / "exp.cfg"
    path.write_text("nodes_path = n\nedges_path = e\ntrials = 2\ntrials = 3\n")
    with pytest.raises(ConfigError, match="repeated"):
        parse_config_file(str(path))


def test_parse_config_requires_paths(tmp_path):
    path = tmp_path / "exp.cfg"
    path.write_text("trials = 2\n")
    with pytest.raises(ConfigError, match="required"):
        parse_config_file(str(path))


# ---------------------------------------------------------------- sampling


def test_sample_known_size_follows_rounding():
    g = chain_graph(2708)
    picks = sample_known(g, 0.01, seed=0)
    assert picks.size == 27  # round(27.08)
    assert picks.size == np.unique(picks).size
    assert np.all(np.diff(picks) > 0)  # sorted, no repeats


def test_sample_known_clamps_to_one_with_warning():
    g = chain_graph(20)
    with pytest.warns(UserWarning, match="clamping"):
        picks = sample_known(g, 0.01, seed=0)
    assert picks.size == 1


def test_sample_known_seeded_determinism():
    g = chain_graph(100)
    a = sample_known(g, 0.1, seed=np.random.SeedSequence((3, 0, 1, 0)))
    b = sample_known(g, 0.1, seed=np.random.SeedSequence((3, 0, 1, 0)))
    c = sample_known(g, 0.1, seed=np.random.SeedSequence((3, 0, 2, 0)))
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_sample_known_rejects_degenerate_density():
    g = chain_graph(10)
    for bad in (0.0, 1.0, -0.5):
        with pytest.raises(ValueError):
            sample_known(g, bad, seed=0)


def test_stratified_folds_partition_the_known_set():
    rng = np.random.default_rng(0)
    known = np.arange(23)
    labels = np.array([0] * 13 + [1] * 10)
    folds = harness._stratified_folds(known, labels, 5, rng)
    merged = np.concatenate(folds)
    assert np.array_equal(np.sort(merged), known)
    sizes = sorted(f.size for f in folds)
    assert sizes[-1] - sizes[0] <= 1  # balanced


# ----------------------------------------------------------------- tuning


def test_cv_singleton_grids_short_circuit(monkeypatch):
    g = chain_graph(30, known={0: 0, 5: 1, 10: 0, 15: 1, 20: 0, 25: 1})

    def boom(*a, **k):
        raise AssertionError("no training should happen for singleton grids")

    monkeypatch.setattr(harness, "lr_train", boom)
    monkeypatch.setattr(harness, "ssl_learn", boom)
    sigma, alpha = cross_validate_hyperparams(
        g, ClassifierSpec("lr+nb+reg"), (7.0,), (0.3,), folds=3, seed=0
    )
    assert (sigma, alpha) == (7.0, 0.3)


def test_cv_alpha_skipped_without_nb():
    g = chain_graph(30, known={0: 0, 5: 1, 10: 0, 15: 1, 20: 0, 25: 1})
    sigma, alpha = cross_validate_hyperparams(
        g, ClassifierSpec("lr+lr"), (1.0,), (0.1, 1.0, 10.0), folds=3, seed=0
    )
    assert sigma == 1.0 and alpha is None


def test_cv_returns_values_from_the_grids(small_dataset):
    from hybridcc.data import prepare_dataset

    nodes, edges = small_dataset
    prepared = prepare_dataset(nodes, edges)
    g, truth = prepared.graph, prepared.truth
    picks = sample_known(g, 0.3, seed=1)
    tg = g.with_known_labels({int(i): int(truth[i]) for i in picks})
    sigma_grid, alpha_grid = (0.1, 1.0, 10.0), (0.5, 2.0)
    sigma, alpha = cross_validate_hyperparams(
        tg, ClassifierSpec("lr+nb"), sigma_grid, alpha_grid, folds=4, seed=2
    )
    assert sigma in sigma_grid
    assert alpha in alpha_grid


def test_cv_degenerate_folds_fall_back_to_midpoints():
    g = chain_graph(10, known={0: 0})  # one known node: every fold unusable
    with pytest.warns(UserWarning, match="midpoint"):
        sigma, alpha = cross_validate_hyperparams(
            g, ClassifierSpec("lr+nb"), (0.1, 1.0, 10.0), (0.5, 1.0), folds=3, seed=0
        )
    assert sigma == 1.0  # middle of the sorted grid
    assert alpha == 1.0


def test_pick_best_breaks_ties_toward_smaller_values():
    assert harness._pick_best((10.0, 0.1, 1.0), {0.1: 0.8, 1.0: 0.8, 10.0: 0.7}) == 0.1
    assert harness._grid_midpoint((10.0, 0.1, 1.0)) == 1.0


# -------------------------------------------------------------- statistics


def test_accuracy_counts_matches_only():
    state = LabelState(np.array([0, 1, 1, -1]), np.array([2, 2, 2, 0], dtype=np.uint8), 2)
    truth = np.array([0, 0, 1, 1])
    assert accuracy(state, truth, np.array([0, 1, 2])) == pytest.approx(2 / 3)
    with pytest.raises(ValueError, match="empty"):
        accuracy(state, truth, np.array([], dtype=np.int64))
    with pytest.raises(ValueError, match="without an assigned label"):
        accuracy(state, truth, np.array([3]))


def test_paired_t_test_hand_oracle():
    b = np.zeros(5)
    a = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
    t, p, sig = paired_t_test(a, b)
    assert t == pytest.approx(4.242640687119285, abs=1e-12)
    assert p == pytest.approx(0.013235599563682695, abs=1e-12)
    assert sig


def test_paired_t_test_zero_variance_rules():
    same = np.array([0.5, 0.5, 0.5])
    t, p, sig = paired_t_test(same, same)
    assert (t, p, sig) == (0.0, 1.0, False)
    t, p, sig = paired_t_test(same + 0.1, same)
    assert t == math.inf and p == 0.0 and sig
    t, p, sig = paired_t_test(same - 0.1, same)
    assert t == -math.inf and sig


def test_paired_t_test_input_validation():
    with pytest.raises(ValueError):
        paired_t_test(np.array([1.0]), np.array([1.0]))
    with pytest.raises(ValueError):
        paired_t_test(np.array([1.0, 2.0]), np.array([1.0]))


def test_degenerate_flag_requires_both_conditions():
    n = 20
    labels = np.zeros(n, dtype=np.int64)
    state = LabelState(labels, np.full(n, 2, dtype=np.uint8), 2)
    nodes = np.arange(n)
    # piled onto class 0 while the target calls class 0 a minority
    assert degenerate_flag(state, nodes, np.array([0.3, 0.7]))
    # same pile but the target agrees class 0 dominates: not degenerate
    assert not degenerate_flag(state, nodes, np.array([0.8, 0.2]))
    mixed = labels.copy()
    mixed[: n // 2] = 1
    state2 = LabelState(mixed, np.full(n, 2, dtype=np.uint8), 2)
    assert not degenerate_flag(state2, nodes, np.array([0.3, 0.7]))


# ------------------------------------------------------------- experiment


def test_run_experiment_produces_full_grid(small_dataset, tmp_path):
    cfg = tiny_config(small_dataset, tmp_path)
    results = run_experiment(cfg)
    assert len(results) == 1 * 3 * 2  # densities x trials x combos
    assert all(r.status == "ok" for r in results)
    assert os.path.exists(os.path.join(cfg.output_dir, "trials.csv"))
    assert os.path.exists(os.path.join(cfg.output_dir, "summary.csv"))
    # report order: combo-major, trial-minor
    assert [(r.variant, r.trial) for r in results] == [
        ("known-onepass", 0), ("known-onepass", 1), ("known-onepass", 2),
        ("attr-only", 0), ("attr-only", 1), ("attr-only", 2),
    ]


def test_run_experiment_pairs_the_known_sample(small_dataset, tmp_path):
    cfg = tiny_config(small_dataset, tmp_path)
    results = run_experiment(cfg)
    by_trial = {}
    for r in results:
        by_trial.setdefault((r.density, r.trial), set()).add(r.known_fingerprint)
    for fingerprints in by_trial.values():
        assert len(fingerprints) == 1  # every combo saw the same known set
    distinct = {next(iter(v)) for v in by_trial.values()}
    assert len(distinct) == 3  # and trials saw different ones


def test_run_experiment_is_byte_deterministic(small_dataset, tmp_path):
    cfg_a = tiny_config(small_dataset, tmp_path, output_dir=str(tmp_path / "a"))
    cfg_b = tiny_config(small_dataset, tmp_path, output_dir=str(tmp_path / "b"))
    run_experiment(cfg_a)
    run_experiment(cfg_b)
    for name in ("trials.csv", "summary.csv"):
        a = open(os.path.join(cfg_a.output_dir, name), "rb").read()
        b = open(os.path.join(cfg_b.output_dir, name), "rb").read()
        assert a == b


def test_run_experiment_records_tuned_hyperparams(small_dataset, tmp_path):
    cfg = tiny_config(
        small_dataset, tmp_path,
        variants=("known-onepass",), classifiers=("lr+nb",),
        sigma_grid=(0.1, 1.0), alpha_grid=(0.5, 2.0), trials=2,
    )
    results = run_experiment(cfg)
    for r in results:
        assert r.sigma_sq in cfg.sigma_grid
        assert r.nb_alpha in cfg.alpha_grid


def test_run_experiment_isolates_cell_failures(small_dataset, tmp_path, monkeypatch):
    real = harness._run_cell

    def flaky(variant, spec, trial_graph, ica_config, em_iterations):
        if variant == "known-onepass":
            raise RuntimeError("injected\nfailure")
        return real(variant, spec, trial_graph, ica_config, em_iterations)

    monkeypatch.setattr(harness, "_run_cell", flaky)
    cfg = tiny_config(small_dataset, tmp_path)
    results = run_experiment(cfg)
    broken = [r for r in results if r.variant == "known-onepass"]
    fine = [r for r in results if r.variant == "attr-only"]
    assert all(r.status == "error" and r.accuracy is None for r in broken)
    assert all(r.note == "RuntimeError: injected failure" for r in broken)  # sanitized
    assert all(r.status == "ok" for r in fine)


def test_relational_only_ignores_classifier_grid(small_dataset, tmp_path):
    cfg = tiny_config(
        small_dataset, tmp_path,
        variants=("relat-only", "attr-only"), classifiers=("lr", "lr+nb"),
        trials=2,
    )
    results = run_experiment(cfg)
    relat = [r for r in results if r.variant == "relat-only"]
    assert len(relat) == 2  # one per trial, not one per classifier
    assert all(r.classifier == "wvrn" for r in relat)
    assert all(r.sigma_sq is None and r.nb_alpha is None for r in relat)


def test_summary_means_are_arithmetic_means(small_dataset, tmp_path):
    cfg = tiny_config(small_dataset, tmp_path)
    results = run_experiment(cfg)
    rows = summarize(results, cfg)
    for row in rows:
        cell = [
            r.accuracy for r in results
            if (r.variant, r.classifier) == (row.variant, row.classifier)
            and r.status == "ok"
        ]
        assert row.means[0.1] == pytest.approx(float(np.mean(cell)), abs=1e-15)


def test_summary_marks_reference_and_differences(small_dataset, tmp_path):
    cfg = tiny_config(small_dataset, tmp_path)
    results = run_experiment(cfg)

    def always_better(a, b, level):
        return math.inf, 0.0, True

    rows = summarize(results, cfg, significance_test=always_better)
    assert rows[0].marks[0.1] == "ref"
    second = rows[1]
    cell_mean = rows[1].means[0.1]
    ref_mean = rows[0].means[0.1]
    assert second.marks[0.1] == ("+" if cell_mean > ref_mean else "*")


def test_trials_csv_layout(small_dataset, tmp_path):
    cfg = tiny_config(small_dataset, tmp_path, trials=1)
    run_experiment(cfg)
    lines = open(os.path.join(cfg.output_dir, "trials.csv")).read().splitlines()
    assert lines[0] == "density,trial,variant,classifier,accuracy,sigma_sq,nb_alpha,degenerate,status,note"
    first = lines[1].split(",")
    assert first[0] == "0.1"
    assert first[2] == "known-onepass"
    assert len(first[4].split(".")[1]) == 4  # accuracy printed to 4 decimals
    assert first[8] == "ok"


def test_summary_csv_notes_significance_caveats(small_dataset, tmp_path):
    cfg = tiny_config(small_dataset, tmp_path)
    run_experiment(cfg)
    text = open(os.path.join(cfg.output_dir, "summary.csv")).read()
    assert text.splitlines()[0] == "variant,classifier,mean_0.1,sig_0.1"
    assert "# significance: paired t-test" in text
    assert "no correction for network dependence" in text


def test_summary_csv_single_trial_skips_significance(small_dataset, tmp_path):
    cfg = tiny_config(small_dataset, tmp_path, trials=1)
    run_experiment(cfg)
    text = open(os.path.join(cfg.output_dir, "summary.csv")).read()
    assert "insufficient trials" in text
    assert "paired t-test against" not in text
