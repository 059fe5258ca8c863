"""Reactive session reconstruction heuristics.

``to1`` caps total session duration, ``to2`` caps the gap between
consecutive requests, ``no`` (navigation oriented) patches topology gaps
with artificial backward moves, and ``ssra`` (Smart-SRA) combines the time
rules with topology-driven splitting into maximal sub-sessions.

All functions take a :class:`~navmine.clf.UserStream` or any sequence of
``(page, timestamp)`` pairs already sorted by time. Durations are seconds.
"""
from __future__ import annotations

from dataclasses import dataclass

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_streams, check_topology_pages
from .session import Session

DEFAULT_RHO = 10 * 60
DEFAULT_DELTA = 30 * 60
HEURISTICS = ("to1", "to2", "no", "ssra")


@dataclass
class ReconstructionParams:
    page_stay_rho: float = DEFAULT_RHO
    session_duration_delta: float = DEFAULT_DELTA
    heuristic: str = "ssra"

    def validate(self):
        if not 0 < self.page_stay_rho <= self.session_duration_delta:
            raise ValueError("need 0 < page_stay_rho <= session_duration_delta")
        if self.heuristic not in HEURISTICS:
            raise ValueError(f"unknown heuristic {self.heuristic!r}; pick one of {HEURISTICS}")
        return self


def _visits(stream):
    entries = getattr(stream, "entries", None)
    if entries is not None:
        return [(e.page, e.timestamp) for e in entries]
    return [tuple(v) for v in stream]


def _source(stream):
    return str(getattr(stream, "user_id", ""))


def _split_on_gap(visits, rho):
    out, cur = [], []
    for v in visits:
        if cur and v[1] - cur[-1][1] > rho:
            out.append(cur)
            cur = []
        cur.append(v)
    if cur:
        out.append(cur)
    return out


def _split_on_duration(visits, delta):
    out, cur = [], []
    for v in visits:
        if cur and not v[1] - cur[0][1] < delta:
            out.append(cur)
            cur = []
        cur.append(v)
    if cur:
        out.append(cur)
    return out


def to1_reconstruct(stream, delta=DEFAULT_DELTA):
    """Greedy split so every session spans less than ``delta``."""
    src = _source(stream)
    return [Session.from_visits(v, src) for v in _split_on_duration(_visits(stream), delta)]


def to2_reconstruct(stream, rho=DEFAULT_RHO):
    """Split wherever consecutive requests are more than ``rho`` apart."""
    src = _source(stream)
    return [Session.from_visits(v, src) for v in _split_on_gap(_visits(stream), rho)]


def _artificial_times(t_last, t_new, k):
    # one-second steps back from t_new; spread evenly when they would collide
    if t_new - k > t_last:
        return [t_new - (k - i) for i in range(k)]
    step = (t_new - t_last) / (k + 1)
    return [t_last + step * (i + 1) for i in range(k)]


def no_reconstruct(stream, topology):
    """Navigation-oriented reconstruction with backward-move insertion."""
    src = _source(stream)
    links = topology.links_from
    sessions = []
    cur = []
    for page, ts in _visits(stream):
        if not cur:
            cur.append((page, ts))
            continue
        if page in links(cur[-1][0]):
            cur.append((page, ts))
            continue
        q = None
        for i in range(len(cur) - 2, -1, -1):
            if page in links(cur[i][0]):
                q = i
                break
        if q is None:
            sessions.append(cur)
            cur = [(page, ts)]
            continue
        back = [cur[i][0] for i in range(len(cur) - 2, q - 1, -1)]
        times = _artificial_times(cur[-1][1], ts, len(back))
        cur.extend(zip(back, times))
        cur.append((page, ts))
    if cur:
        sessions.append(cur)
    return [Session.from_visits(v, src) for v in sessions]


def ssra_phase1(stream, rho=DEFAULT_RHO, delta=DEFAULT_DELTA):
    """Candidate sessions: split on gaps above ``rho``, then on span ``delta``."""
    out = []
    for part in _split_on_gap(_visits(stream), rho):
        out.extend(_split_on_duration(part, delta))
    return out


def ssra_phase2(candidate, topology, rho=DEFAULT_RHO, source=""):
    """Maximal topology-consistent sub-sessions of one candidate.

    Repeatedly removes the pages that have no referrer (an earlier remaining
    page linking to them) and appends each to every open session whose last
    page links to it within ``rho``; an extended session is replaced by its
    extensions, and a page that extends nothing opens a new session.
    """
    visits = [tuple(v) for v in candidate]
    links = topology.links_from
    remaining = list(range(len(visits)))
    open_sessions = []
    while remaining:
        dangling, keep = [], []
        for pos, i in enumerate(remaining):
            page, ts = visits[i]
            referred = False
            for j in remaining[:pos]:
                rp, rt = visits[j]
                if rt < ts and page in links(rp):
                    referred = True
                    break
            (keep if referred else dangling).append(i)
        remaining = keep

        superseded = set()
        grown = []
        for i in dangling:
            page, ts = visits[i]
            extended = False
            for k, sess in enumerate(open_sessions):
                lp, lt = sess[-1]
                if lt < ts and ts - lt <= rho and page in links(lp):
                    grown.append(sess + [(page, ts)])
                    superseded.add(k)
                    extended = True
            if not extended:
                grown.append([(page, ts)])
        open_sessions = [s for k, s in enumerate(open_sessions) if k not in superseded] + grown

    open_sessions.sort(key=lambda s: s[0][1])
    return [Session.from_visits(s, source) for s in open_sessions]


def smart_sra(stream, topology, rho=DEFAULT_RHO, delta=DEFAULT_DELTA):
    src = _source(stream)
    out = []
    for cand in ssra_phase1(stream, rho, delta):
        out.extend(ssra_phase2(cand, topology, rho, src))
    return out


class SessionReconstructor(TransformerMixin, BaseEstimator):
    """Base class: ``fit`` checks parameters, ``transform`` maps streams to sessions.

    ``transform`` accepts a list of :class:`~navmine.clf.UserStream` or a flat
    list of :class:`~navmine.clf.LogEntry` (grouped per user first) and
    returns one flat list of sessions ordered by user, then start time.
    """

    needs_topology = False

    def fit(self, X=None, y=None):
        self._validate_params_local()
        if self.needs_topology:
            if getattr(self, "topology", None) is None:
                raise ValueError(f"{type(self).__name__} requires a topology")
            self.topology_ = self.topology
        self.fitted_ = True
        return self

    def _validate_params_local(self):
        pass

    def transform(self, X):
        check_is_fitted(self, "fitted_")
        streams = check_streams(X)
        if self.needs_topology:
            check_topology_pages(streams, self.topology_)
        out = []
        for stream in streams:
            sessions = self._reconstruct(stream)
            sessions.sort(key=lambda s: s.timestamps[0])
            out.extend(sessions)
        return out

    def _reconstruct(self, stream):
        raise NotImplementedError


class TO1Reconstructor(SessionReconstructor):
    def __init__(self, delta=DEFAULT_DELTA):
        self.delta = delta

    def _validate_params_local(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")

    def _reconstruct(self, stream):
        return to1_reconstruct(stream, self.delta)


class TO2Reconstructor(SessionReconstructor):
    def __init__(self, rho=DEFAULT_RHO):
        self.rho = rho

    def _validate_params_local(self):
        if not self.rho > 0:
            raise ValueError("rho must be positive")

    def _reconstruct(self, stream):
        return to2_reconstruct(stream, self.rho)


class NavigationReconstructor(SessionReconstructor):
    needs_topology = True

    def __init__(self, topology=None):
        self.topology = topology

    def _reconstruct(self, stream):
        return no_reconstruct(stream, self.topology_)


class SmartSRA(SessionReconstructor):
    """Smart-SRA: time-window candidates split into maximal topology paths."""

    needs_topology = True

    def __init__(self, topology=None, rho=DEFAULT_RHO, delta=DEFAULT_DELTA):
        self.topology = topology
        self.rho = rho
        self.delta = delta

    def _validate_params_local(self):
        ReconstructionParams(self.rho, self.delta).validate()

    def _reconstruct(self, stream):
        return smart_sra(stream, self.topology_, self.rho, self.delta)


def make_reconstructor(heuristic, topology=None, rho=DEFAULT_RHO, delta=DEFAULT_DELTA):
    heuristic = heuristic.lower()
    if heuristic == "to1":
        return TO1Reconstructor(delta=delta)
    if heuristic == "to2":
        return TO2Reconstructor(rho=rho)
    if heuristic == "no":
        return NavigationReconstructor(topology=topology)
    if heuristic == "ssra":
        return SmartSRA(topology=topology, rho=rho, delta=delta)
    raise ValueError(f"unknown heuristic {heuristic!r}; pick one of {HEURISTICS}")
