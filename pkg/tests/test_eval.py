import csv
import io
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from navmine.eval import (
    REPORT_FIELDS,
    AccuracyReport,
    captured,
    evaluate,
    pattern_accuracy,
    session_accuracy,
)
from navmine.miner import Pattern
from navmine.session import Session
from oracles import contains


def test_session_accuracy_examples():
    assert session_accuracy([("P1", "P3", "P5")], [("P9", "P1", "P3", "P5", "P8")]) == 1.0
    assert session_accuracy([("P1", "P3", "P5")], [("P1", "P9", "P3", "P5", "P8")]) == 0.0
    real = [("A", "B"), ("C",), ("A", "B")]
    assert session_accuracy(real, real) == 1.0


def test_session_accuracy_needs_real_sessions():
    with pytest.raises(ValueError):
        session_accuracy([], [("A",)])
    assert session_accuracy([("A",)], []) == 0.0


def test_duplicate_real_sessions_count_separately():
    assert session_accuracy([("A",), ("A",), ("B",)], [("A",)]) == pytest.approx(2 / 3)


def test_accepts_session_objects():
    r = Session(("A", "B"), (1, 2), "0")
    h = Session(("X", "A", "B"), (0, 5, 6), "10.0.0.0")
    assert session_accuracy([r], [h]) == 1.0


def test_same_user_capture():
    real = [("A", "B"), ("A", "B")]
    recon = [("A", "B", "C")]
    assert list(captured(real, recon, ["u1", "u2"], ["u2"])) == [False, True]
    assert list(captured(real, recon)) == [True, True]
    with pytest.raises(ValueError):
        captured(real, recon, ["u1", "u2"], None)
    with pytest.raises(ValueError):
        captured(real, recon, ["u1"], ["u2"])


def naive_captured(real, recon, real_users=None, recon_users=None):
    out = []
    for i, r in enumerate(real):
        out.append(any(
            contains(h, r) and (real_users is None or real_users[i] == recon_users[j])
            for j, h in enumerate(recon)
        ))
    return out


seqs = st.lists(st.lists(st.sampled_from("abcd"), min_size=1, max_size=6).map(tuple), max_size=15)


@settings(max_examples=300)
@given(seqs, seqs)
def test_capture_matches_naive_oracle(real, recon):
    assert list(captured(real, recon)) == naive_captured(real, recon)


@settings(max_examples=200)
@given(seqs, seqs, st.data())
def test_same_user_capture_matches_naive_oracle(real, recon, data):
    ru = data.draw(st.lists(st.sampled_from("xy"), min_size=len(real), max_size=len(real)))
    hu = data.draw(st.lists(st.sampled_from("xyz"), min_size=len(recon), max_size=len(recon)))
    assert list(captured(real, recon, ru, hu)) == naive_captured(real, recon, ru, hu)


@settings(max_examples=200)
@given(seqs.filter(bool), seqs, seqs, st.randoms(use_true_random=False))
def test_accuracy_monotone_and_permutation_invariant(real, recon, extra, rnd):
    base = session_accuracy(real, recon)
    assert session_accuracy(real, recon + extra) >= base
    r2, h2 = real[:], recon[:]
    rnd.shuffle(r2)
    rnd.shuffle(h2)
    assert session_accuracy(r2, h2) == base


def test_pattern_accuracy_examples():
    a, b, c = ("P1", "P2"), ("P2", "P3"), ("P4",)
    assert pattern_accuracy([a, b], [a, b]) == 1.0
    assert pattern_accuracy([a], [b]) == 0.0
    assert pattern_accuracy([a, b], [b, c]) == 0.5
    with pytest.raises(ValueError):
        pattern_accuracy([], [a])


def test_pattern_accuracy_ignores_supports_and_false_positives():
    mp_a = [Pattern(("A", "B"), 0.3)]
    mp_h = [Pattern(("A", "B"), 0.9), Pattern(("Z",), 0.5), Pattern(("Y", "X"), 0.5)]
    assert pattern_accuracy(mp_a, mp_h) == 1.0


def test_report_csv_row():
    rep = AccuracyReport("ssra", 0.75, 0.5, 4, 5, 2, 3, {"rho": 600, "delta": 1800})
    rows = list(csv.DictReader(io.StringIO(rep.to_csv())))
    assert tuple(rows[0]) == REPORT_FIELDS
    assert rows[0]["session_accuracy"] == "0.75"
    assert json.loads(rows[0]["params"]) == {"delta": 1800, "rho": 600}
    assert rep.to_csv(header=False).count("\n") == 1


def test_evaluate_with_patterns(table2_sessions, table2_topology):
    rep = evaluate(table2_sessions, table2_sessions, "ssra", table2_topology, 0.4)
    assert (rep.session_accuracy, rep.pattern_accuracy) == (1.0, 1.0)
    assert rep.n_true_patterns == rep.n_found_patterns == 1
    assert rep.params_echo == {"min_support": 0.4}
    assert evaluate(table2_sessions, [], "to1").pattern_accuracy is None
    with pytest.raises(ValueError):
        evaluate(table2_sessions, [], "to1", min_support=0.4)
