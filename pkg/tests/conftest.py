import pytest

from navmine.topology import WebTopology


def chain_topology(edges, pages=None, entry=None):
    """WebTopology from an edge list; pages default to every endpoint."""
    pages = list(pages or dict.fromkeys(p for e in edges for p in e))
    links = {p: [] for p in pages}
    for a, b in edges:
        links[a].append(b)
    return WebTopology(pages, links, entry or pages[:1])


@pytest.fixture
def figure1():
    # only the edges the worked example forces
    return chain_topology(
        [("P1", "P20"), ("P20", "P23"), ("P1", "P13"), ("P13", "P34")],
        pages=["P1", "P13", "P20", "P23", "P34"],
    )


@pytest.fixture
def table2_sessions():
    return [
        ("P1", "P13", "P49", "P23"),
        ("P1", "P13", "P34", "P23"),
        ("P1", "P13", "P49"),
        ("P1", "P20", "P23"),
        ("P13", "P49"),
    ]


@pytest.fixture
def table2_topology():
    return chain_topology(
        [("P1", "P13"), ("P13", "P49"), ("P13", "P34"), ("P49", "P23"),
         ("P34", "P23"), ("P1", "P20"), ("P20", "P23")],
        pages=["P1", "P13", "P20", "P23", "P34", "P49"],
    )


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
