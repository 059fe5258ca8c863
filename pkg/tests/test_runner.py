import csv
import io
import os
import statistics
from dataclasses import replace

import pytest

from navmine import runner
from navmine.clf import group_by_user, read_clf
from navmine.eval import pattern_accuracy, session_accuracy
from navmine.miner import read_patterns, sequential_apriori
from navmine.reconstruct import HEURISTICS, make_reconstructor
from navmine.runner import (
    RESULT_FIELDS,
    ConfigError,
    ExperimentConfig,
    ResultRow,
    experiment_config,
    parse_config,
    run_pattern_sweep,
    run_session_sweep,
    summarize,
    write_results,
)
from navmine.session import read_sessions
from navmine.topology import load_topology, resolve_log_entries

SMALL = dict(n_pages=40, avg_outdegree=4.0, n_agents=120)


def strip_runtime(rows):
    return [replace(r, runtime_ms=0.0) for r in rows]


def small_session_cfg(**kw):
    return ExperimentConfig(**{**SMALL, "sweep": "stp", "values": [0.1], "replications": 1, **kw})


def test_single_value_single_replication_gives_four_rows():
    rows = run_session_sweep(small_session_cfg())
    assert [r.heuristic for r in rows] == list(HEURISTICS)
    assert all(r.swept_var == "stp" and r.value == 0.1 and r.pattern_accuracy is None for r in rows)
    assert all(0 <= r.session_accuracy <= 1 and r.runtime_ms >= 0 for r in rows)


def test_pattern_sweep_cardinality():
    cfg = experiment_config(1, supports="desk", replications=2, **SMALL)
    rows = run_pattern_sweep(cfg)
    assert len(rows) == 2 * 5 * 4
    keys = [(r.value, r.heuristic, r.replication) for r in rows]
    assert keys == sorted(keys, key=lambda k: (k[0], HEURISTICS.index(k[1]), k[2]))


def test_sweep_is_deterministic():
    cfg = small_session_cfg(values=[0.05, 0.2], replications=2)
    assert strip_runtime(run_session_sweep(cfg)) == strip_runtime(run_session_sweep(cfg))
    other = strip_runtime(run_session_sweep(replace(cfg, seed=1)))
    assert other != strip_runtime(run_session_sweep(cfg))


def test_parallel_matches_sequential():
    cfg = small_session_cfg(values=[0.05, 0.2], replications=2)
    seq = strip_runtime(run_session_sweep(cfg))
    assert strip_runtime(run_session_sweep(replace(cfg, workers=2))) == seq


def test_replications_use_distinct_topologies_and_seeds():
    cfg = small_session_cfg(replications=3)
    seeds = {runner.derive_seed(cfg.seed, rep, 0) for rep in range(3)}
    assert len(seeds) == 3


def test_rows_recomputable_from_persisted_artifacts(tmp_path):
    cfg = experiment_config(5, supports="desk", replications=1, **SMALL)
    rows = run_pattern_sweep(cfg, workdir=tmp_path)
    cell = tmp_path / cfg.key() / "rep00_v00"
    topology = load_topology(cell / "topology.txt")
    real = read_sessions(cell / "real.tsv")
    streams = group_by_user(resolve_log_entries(read_clf(cell / "access.log"), topology))
    for r in rows:
        persisted = read_sessions(cell / f"recon_{r.heuristic}.tsv")
        again = make_reconstructor(r.heuristic, topology, cfg.rho, cfg.delta).fit().transform(streams)
        assert [s.pages for s in again] == [s.pages for s in persisted]
        assert session_accuracy(real, persisted) == pytest.approx(r.session_accuracy, abs=1e-6)
        mp_a, _ = sequential_apriori(real, topology, r.value)
        mp_h = read_patterns(cell / f"patterns_{r.heuristic}_{r.value:g}.txt")
        if r.pattern_accuracy is None:
            assert not mp_a
        else:
            assert pattern_accuracy(mp_a, mp_h) == pytest.approx(r.pattern_accuracy, abs=1e-6)


def test_resume_reads_finished_cells(tmp_path, monkeypatch):
    cfg = small_session_cfg(values=[0.1, 0.2])
    first = run_session_sweep(cfg, workdir=tmp_path)

    def boom(*a, **k):
        raise AssertionError("finished cell was simulated again")

    monkeypatch.setattr(runner, "simulate", boom)
    assert run_session_sweep(cfg, workdir=tmp_path) == first
    assert len(os.listdir(tmp_path)) == 1
    run_dir = tmp_path / cfg.key()
    assert sorted(os.listdir(run_dir)) == ["rep00_v00", "rep00_v01"]


def test_config_key_ignores_workers_only():
    cfg = small_session_cfg()
    assert cfg.key() == replace(cfg, workers=4).key()
    assert cfg.key() != replace(cfg, seed=3).key()


def test_same_user_capture_never_exceeds_global():
    g = run_session_sweep(small_session_cfg())
    u = run_session_sweep(small_session_cfg(capture="same_user"))
    assert all(b.session_accuracy <= a.session_accuracy for a, b in zip(g, u))


def test_parse_config_plain_and_presets():
    cfg = parse_config("""
        # figure3 preset, shrunk
        preset = figure3
        n_agents = 50   # tiny
        replications = 2
        heuristics = ssra,no
    """)
    assert (cfg.sweep, cfg.stp, cfg.nip, cfg.lpp) == ("lpp", 0.05, 0.30, 0.30)
    assert cfg.values == [0.01, 0.2, 0.4, 0.6, 0.9]
    assert (cfg.n_agents, cfg.replications, cfg.heuristics) == (50, 2, ["ssra", "no"])

    cfg = parse_config("experiment = 4\nsupports = desk\n")
    assert (cfg.stp, cfg.lpp, cfg.nip, cfg.sweep) == (0.10, 0.40, 0.40, "min_support")
    assert cfg.values == [0.05, 0.10, 0.15, 0.20, 0.25]
    assert parse_config("preset = experiment5").values == [0.0005, 0.001, 0.0015, 0.002, 0.0025]

    cfg = parse_config("sweep = nip\nvalues = 0, 0.5\nmax_length = none\n")
    assert (cfg.sweep, cfg.values, cfg.max_length) == ("nip", [0.0, 0.5], None)


@pytest.mark.parametrize("text", [
    "bogus = 1", "sweep = rho", "values = 1.5", "values =", "replications = 0",
    "n_agents = many", "heuristics = to3", "experiment = 9", "capture = maybe",
    "sweep = min_support\nvalues = 0", "no equals sign", "supports = huge",
    "rho = 4000", "avg_outdegree = 400",
])
def test_parse_config_rejects(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_sweep_kind_mismatch():
    with pytest.raises(ConfigError):
        run_pattern_sweep(small_session_cfg())
    with pytest.raises(ConfigError):
        run_session_sweep(experiment_config(1))


def test_pattern_experiment_table():
    assert runner.PATTERN_EXPERIMENTS[4] == (0.10, 0.40, 0.40)
    assert runner.PATTERN_EXPERIMENTS[5] == (0.20, 0.20, 0.20)
    combos = set(runner.PATTERN_EXPERIMENTS.values())
    assert combos == {(s, l, n) for s in (0.1, 0.2) for l in (0.2, 0.4) for n in (0.2, 0.4)}


def test_write_results_header_and_blank_pattern_accuracy():
    buf = io.StringIO()
    write_results([ResultRow("stp", 0.05, "ssra", 0, 0.9, None, 12.34)], buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == ",".join(RESULT_FIELDS)
    assert lines[0] == "swept_var,value,heuristic,replication,session_accuracy,pattern_accuracy,runtime_ms"
    row = next(csv.DictReader(io.StringIO(buf.getvalue())))
    assert row["pattern_accuracy"] == "" and row["value"] == "0.05"


def test_summarize_mean_and_sample_sd():
    rows = [ResultRow("stp", 0.1, "to1", i, acc, pat, 1.0)
            for i, (acc, pat) in enumerate([(0.5, 0.2), (0.7, None), (0.9, 0.6)])]
    (s,) = summarize(rows)
    assert s["n"] == 3
    assert s["session_mean"] == pytest.approx(statistics.mean([0.5, 0.7, 0.9]))
    assert s["session_sd"] == pytest.approx(statistics.stdev([0.5, 0.7, 0.9]))
    assert s["pattern_mean"] == pytest.approx(0.4)
    assert s["pattern_sd"] == pytest.approx(statistics.stdev([0.2, 0.6]))
