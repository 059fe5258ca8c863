"""Web-user agent simulator.

Each agent browses a :class:`~navmine.topology.WebTopology` and yields two
views of the same activity: the real sessions (root-to-leaf paths of its
navigation tree) and the cache-censored requests the server would log.
"""
from __future__ import annotations

import random
from dataclasses import asdict, dataclass

import numpy as np

from .clf import LogEntry, format_clf_line
from .session import Session

MINUTE = 60

NEW, BACK, FORWARD = 0, 1, 2


@dataclass
class SimulationParams:
    """Agent behaviour knobs. Durations are seconds."""

    stp: float = 0.05
    lpp: float = 0.30
    nip: float = 0.30
    mean_stay: float = 2.2 * MINUTE
    sd_stay: float = 0.5 * MINUTE
    max_gap: float = 10 * MINUTE
    n_agents: int = 10000
    seed: int = 0
    start_time: int = 1136073600  # 2006-01-01T00:00:00Z
    start_spread: int = 86400
    max_requests: int = 10000
    composition: str = "nested"

    def validate(self):
        for name in ("stp", "lpp", "nip"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if self.composition not in ("nested", "categorical"):
            raise ValueError("composition must be 'nested' or 'categorical'")
        if self.composition == "categorical" and self.lpp + self.nip > 1.0 + 1e-12:
            raise ValueError(f"lpp + nip must not exceed 1 (got {self.lpp + self.nip:g})")
        if not (self.sd_stay > 0 and self.mean_stay > 0):
            raise ValueError("mean_stay and sd_stay must be positive")
        if not self.mean_stay + 3 * self.sd_stay < self.max_gap:
            raise ValueError("mean_stay + 3*sd_stay must be below max_gap")
        if self.n_agents < 0:
            raise ValueError("n_agents must be non-negative")
        if self.max_requests < 1:
            raise ValueError("max_requests must be positive")
        return self

    def as_dict(self):
        return asdict(self)

    def behaviour_weights(self):
        """Unnormalised (new episode, back-jump, forward) weights for one step.

        ``nested``: a new episode with probability nip, otherwise a back-jump
        with probability lpp, otherwise a forward link. ``categorical``: one
        draw over (nip, lpp, 1 - nip - lpp).
        """
        if self.composition == "nested":
            rest = 1.0 - self.nip
            return self.nip, rest * self.lpp, rest * (1.0 - self.lpp)
        return self.nip, self.lpp, max(0.0, 1.0 - self.lpp - self.nip)


class AgentRandom:
    """Random decisions of one agent.

    Subclass or duck-type this to script a trace deterministically.
    """

    def __init__(self, seed):
        self._rng = random.Random(seed)

    def terminate(self, n, stp):
        return self._rng.random() < 1.0 - (1.0 - stp) ** n

    def action(self, weights):
        """Index drawn from unnormalised non-negative ``weights``."""
        total = sum(weights)
        u = self._rng.random() * total
        acc = 0.0
        last = 0
        for i, w in enumerate(weights):
            if w <= 0:
                continue
            acc += w
            last = i
            if u < acc:
                return i
        return last

    def pick(self, items):
        return items[int(self._rng.random() * len(items))]

    def stay(self, mean, sd, max_gap):
        # redraw-truncate to whole seconds in [1, max_gap)
        while True:
            gap = int(round(self._rng.gauss(mean, sd)))
            if 1 <= gap < max_gap:
                return gap

    def start_offset(self, spread):
        return int(self._rng.random() * spread) if spread > 0 else 0


def agent_ip(agent_id):
    if not 0 <= agent_id < 1 << 24:
        raise ValueError("agent id does not fit a 10.0.0.0/8 address")
    return f"10.{(agent_id >> 16) & 255}.{(agent_id >> 8) & 255}.{agent_id & 255}"


def agent_seeds(seed, n_agents):
    """Independent per-agent seeds derived from one base seed."""
    if n_agents == 0:
        return []
    ss = np.random.SeedSequence(seed)
    state = ss.generate_state(2 * n_agents, dtype=np.uint32).reshape(n_agents, 2)
    return [(int(hi) << 32) | int(lo) for hi, lo in state]


def _leaf_paths(nodes, source):
    """Root-to-leaf paths of one episode's navigation tree, in leaf order."""
    has_child = [False] * len(nodes)
    for _, _, parent in nodes:
        if parent >= 0:
            has_child[parent] = True
    out = []
    for i, leaf in enumerate(has_child):
        if leaf:
            continue
        path = []
        while i >= 0:
            page, ts, i = nodes[i]
            path.append((page, ts))
        path.reverse()
        out.append(Session.from_visits(path, source))
    return out


def simulate_agent(topology, params, agent_id, agent_seed, rng=None):
    """Simulate one agent.

    Each episode is a navigation tree whose nodes are page visits. A forward
    move adds a child to the current node, a back-jump adds a child to an
    earlier node of the episode (one that has out-links and was visited less
    than ``max_gap`` before the new request), and a new-initial-page move
    closes the episode and starts a fresh tree with an empty cache. Only the
    first visit of a page within an episode reaches the server log.

    Returns ``(real_sessions, log_entries)`` where real sessions are the
    root-to-leaf paths of every episode tree. ``rng`` overrides the
    :class:`AgentRandom` built from ``agent_seed``.
    """
    if not topology.entry_pages:
        raise ValueError("topology has no entry pages")
    rng = rng if rng is not None else AgentRandom(agent_seed)
    succ = topology.successors
    entries = topology.entry_pages
    ip = agent_ip(agent_id)
    source = str(agent_id)
    stp = params.stp
    new_weight, back_weight, fwd_weight = params.behaviour_weights()
    max_gap = params.max_gap

    sessions = []
    log = []
    t = params.start_time + rng.start_offset(params.start_spread)

    def start_episode(now):
        page = rng.pick(entries)
        log.append(LogEntry(now, 0, ip, page))
        return [(page, now, -1)], {page}

    # nodes: (page, timestamp, parent index); the current node is always the last
    nodes, cache = start_episode(t)
    n = 1
    requests = 1
    while requests < params.max_requests:
        n += 1
        if rng.terminate(n, stp):
            break
        gap = rng.stay(params.mean_stay, params.sd_stay, max_gap)
        t_new = t + gap
        current = len(nodes) - 1

        weights = [new_weight, 0.0, 0.0]
        back_targets = None
        if back_weight > 0:
            back_targets = []
            for i in range(current - 1, -1, -1):
                page, ts, _ = nodes[i]
                if t_new - ts >= max_gap:
                    break
                if succ[page]:
                    back_targets.append(i)
            if back_targets:
                back_targets.reverse()
                weights[BACK] = back_weight
        if succ[nodes[current][0]]:
            weights[FORWARD] = fwd_weight
        if sum(weights) <= 0:
            break
        choice = rng.action(weights)

        if choice == NEW:
            sessions.extend(_leaf_paths(nodes, source))
            nodes, cache = start_episode(t_new)
            n = 1
        else:
            parent = rng.pick(back_targets) if choice == BACK else current
            page = rng.pick(succ[nodes[parent][0]])
            nodes.append((page, t_new, parent))
            if page not in cache:
                cache.add(page)
                log.append(LogEntry(t_new, 0, ip, page))
        t = t_new
        requests += 1

    sessions.extend(_leaf_paths(nodes, source))
    return sessions, log


def simulate(topology, params):
    """Run ``params.n_agents`` independent agents.

    Returns ``(real_sessions, server_log)``; the log is sorted by timestamp
    then agent id and numbered in that order.
    """
    params.validate()
    sessions = []
    tagged = []
    for agent_id, seed in enumerate(agent_seeds(params.seed, params.n_agents)):
        s, log = simulate_agent(topology, params, agent_id, seed)
        sessions.extend(s)
        tagged.extend((e.timestamp, agent_id, k, e) for k, e in enumerate(log))
    tagged.sort(key=lambda x: x[:3])
    server_log = [
        LogEntry(ts, line_no, e.user_id, e.page, e.status)
        for line_no, (ts, _, _, e) in enumerate(tagged, start=1)
    ]
    return sessions, server_log


def page_path(page):
    return f"/{page}.html"


def write_server_log(entries, path):
    """Write simulated requests as CLF lines with ``/<page>.html`` paths."""
    with open(path, "w", encoding="utf-8") as fh:
        for e in entries:
            fh.write(format_clf_line(LogEntry(e.timestamp, e.raw_line_no, e.user_id,
                                              page_path(e.page), e.status)))
            fh.write("\n")
