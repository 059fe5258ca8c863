"""Input validation helpers shared by the estimators."""
from __future__ import annotations

from .clf import LogEntry, UserStream, group_by_user
from .session import Session


def check_streams(X):
    """Return a list of UserStream from streams or a flat list of LogEntry."""
    if X is None:
        raise ValueError("expected user streams or log entries, got None")
    X = list(X)
    if not X:
        return []
    if all(isinstance(x, UserStream) for x in X):
        return X
    if all(isinstance(x, LogEntry) for x in X):
        return group_by_user(X)
    raise TypeError("expected a list of UserStream or a list of LogEntry")


def check_topology_pages(streams, topology):
    unknown = {e.page for s in streams for e in s.entries if e.page not in topology}
    if unknown:
        shown = ", ".join(sorted(map(str, unknown))[:5])
        raise ValueError(f"{len(unknown)} page(s) not in topology: {shown}")


def page_tuples(sessions):
    """Page sequences of sessions, accepting Session objects or plain sequences."""
    out = []
    for s in sessions:
        out.append(s.pages if isinstance(s, Session) else tuple(s))
    return out


def check_fraction(value, name, low_open=True):
    v = float(value)
    ok = (0 < v <= 1) if low_open else (0 <= v <= 1)
    if not ok:
        bounds = "(0, 1]" if low_open else "[0, 1]"
        raise ValueError(f"{name} must be in {bounds}, got {value}")
    return v
