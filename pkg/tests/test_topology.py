import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from navmine.topology import (
    TopologyError,
    TopologyGenParams,
    WebTopology,
    format_topology,
    generate_random_topology,
    load_topology,
    parse_topology,
    save_topology,
)


def test_figure1_links(figure1):
    assert figure1.has_link("P1", "P20")
    assert not figure1.has_link("P20", "P13")
    assert not figure1.has_link("P23", "P13")
    assert not figure1.has_link("P1", "P1")


def test_has_link_unknown_page_names_it(figure1):
    with pytest.raises(KeyError, match="P99"):
        figure1.has_link("P99", "P1")
    with pytest.raises(KeyError, match="P98"):
        figure1.has_link("P1", "P98")


@pytest.mark.parametrize("pages, links, entry, msg", [
    (["A"], {"A": ["A"]}, ["A"], "self-loop"),
    (["A"], {"A": ["B"]}, ["A"], "undeclared"),
    (["A"], {"B": ["A"]}, ["A"], "undeclared"),
    (["A", "A"], {}, ["A"], "duplicate"),
    (["A"], {}, [], "entry"),
    (["A"], {}, ["Z"], "entry"),
])
def test_invariants_enforced(pages, links, entry, msg):
    with pytest.raises(TopologyError, match=msg):
        WebTopology(pages, links, entry)


def test_desk_scale_mean_outdegree():
    t = generate_random_topology(TopologyGenParams(300, 15.0, 0.05, seed=11))
    mean = t.n_links / len(t)
    assert abs(mean - 15) <= 1
    assert len(t.entry_pages) == math.ceil(0.05 * 300)
    assert all(p not in t.successors[p] for p in t.pages)


def test_single_page_topology():
    t = generate_random_topology(TopologyGenParams(1, 0.5, 0.05, seed=0))
    assert t.n_links == 0
    assert t.entry_pages == t.pages == ("P1",)


def test_generation_is_deterministic():
    p = TopologyGenParams(80, 6.0, 0.1, seed=5)
    assert generate_random_topology(p) == generate_random_topology(p)
    assert generate_random_topology(p) != generate_random_topology(TopologyGenParams(80, 6.0, 0.1, seed=6))


@pytest.mark.parametrize("kw", [
    dict(n_pages=0), dict(avg_outdegree=0), dict(n_pages=10, avg_outdegree=10),
    dict(entry_fraction=0), dict(entry_fraction=1.5),
])
def test_bad_generation_params(kw):
    with pytest.raises(ValueError):
        TopologyGenParams(**kw).validate()


def test_figure1_file_round_trip(figure1, tmp_path):
    path = tmp_path / "fig1.txt"
    save_topology(figure1, path)
    assert load_topology(path) == figure1


def test_parse_format_with_comments_and_whitespace():
    text = """
    # tiny site
    pages: 3
    P1 : P2 , P3   # two links
    P2:P3
    P3:
    entry: P1
    """
    t = parse_topology(text)
    assert t.successors == {"P1": ("P2", "P3"), "P2": ("P3",), "P3": ()}
    assert t.entry_pages == ("P1",)
    assert parse_topology(format_topology(t)) == t


@pytest.mark.parametrize("text, line", [
    ("pages: 2\nP1: P7\nP2:\nentry: P1\n", 2),
    ("pages: 2\nP1: P2\nP2:\nentry: P9\n", 4),
    ("pages: 2\nP1 P2\nentry: P1\n", 2),
    ("pages: x\n", 1),
])
def test_parse_errors_carry_line_numbers(text, line):
    with pytest.raises(TopologyError) as exc:
        parse_topology(text)
    assert exc.value.line_no == line


def test_empty_pages_section_is_rejected():
    with pytest.raises(TopologyError, match="empty pages"):
        parse_topology("pages: 0\nentry: P1\n")


def test_resolve_log_paths(figure1):
    assert figure1.resolve("/P13.html") == "P13"
    assert figure1.resolve("P13") == "P13"
    assert figure1.resolve("/P13.htm") == "P13"
    assert figure1.resolve("/nothing.html") is None


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 40), st.floats(0.2, 5.0), st.integers(0, 2**31))
def test_matrix_list_consistency(n, d, seed):
    d = min(d, n - 1 - 1e-9)
    t = generate_random_topology(TopologyGenParams(n, d, 0.2, seed))
    for a in t.pages:
        for b in t.pages:
            assert t.has_link(a, b) == (b in t.successors[a])
    assert parse_topology(format_topology(t)) == t


def test_resolve_log_entries(figure1):
    from navmine.clf import LogEntry
    from navmine.topology import resolve_log_entries
    es = [LogEntry(1, 1, "u", "/P1.html"), LogEntry(2, 2, "u", "/P13.html")]
    assert [e.page for e in resolve_log_entries(es, figure1)] == ["P1", "P13"]
    with pytest.raises(ValueError, match="/x.html"):
        resolve_log_entries(es + [LogEntry(3, 3, "u", "/x.html")], figure1)
