"""Maximal frequent navigation patterns via topology-pruned sequential apriori.

Patterns are contiguous: a session supports a pattern only if the pattern's
pages occur back to back in it. Length-(k+1) candidates are built by
appending a frequent page to a frequent length-k pattern, and only when the
pattern's last page links to that page.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_fraction, page_tuples


@dataclass(frozen=True)
class Pattern:
    pages: tuple
    support: float
    maximal: bool = True

    def __len__(self):
        return len(self.pages)


@dataclass
class PatternLevel:
    """Candidates examined at one length, split by whether they met the threshold."""

    k: int
    patterns: dict = field(default_factory=dict)
    rejected: dict = field(default_factory=dict)


def is_subsession(pattern, session):
    """True iff ``pattern`` occurs as a contiguous run inside ``session``."""
    p = tuple(pattern)
    s = session.pages if hasattr(session, "pages") else tuple(session)
    n, m = len(p), len(s)
    if n == 0:
        return True
    first = p[0]
    for k in range(m - n + 1):
        if s[k] == first and s[k:k + n] == p:
            return True
    return False


def support(pattern, sessions):
    """Fraction of sessions that contain ``pattern`` contiguously."""
    sessions = list(sessions)
    if not sessions:
        raise ValueError("support is undefined over an empty session list")
    hits = sum(1 for s in sessions if is_subsession(pattern, s))
    return hits / len(sessions)


def _meets(value, threshold, strict):
    return value > threshold if strict else value >= threshold


def _n_sessions(occ):
    # occurrence lists are sorted by session index
    count, last = 0, -1
    for sid, _ in occ:
        if sid != last:
            count += 1
            last = sid
    return count


def sequential_apriori(sessions, topology, min_support, max_length=None, strict=False,
                       join="frequent", pages=None, include_singletons=False):
    """Mine maximal frequent contiguous patterns.

    Parameters
    ----------
    sessions : sequence of Session or page sequences
    topology : WebTopology
        Supplies the link test used to prune candidates.
    min_support : float in (0, 1]
    max_length : int, optional
        Longest pattern to build; defaults to the longest session.
    strict : bool
        Use ``support > min_support`` instead of ``>=``.
    join : {"frequent", "all"}
        Pages appended to length-k patterns: only frequent single pages, or
        every page (the unpruned form; output is identical).
    pages : iterable, optional
        Universe of single pages; defaults to the topology's pages.
    include_singletons : bool
        Report a frequent single page that no frequent pattern extends as
        maximal. Off by default: only extended patterns are ever flagged
        maximal, so the result holds patterns of length two or more.

    Returns
    -------
    (maximal, levels) : list of Pattern sorted by pages, list of PatternLevel
    """
    seqs = page_tuples(sessions)
    if not seqs:
        raise ValueError("cannot mine an empty session list")
    min_support = check_fraction(min_support, "min_support")
    if join not in ("frequent", "all"):
        raise ValueError("join must be 'frequent' or 'all'")
    universe = list(topology.pages if pages is None else pages)
    universe_set = set(universe)
    for s in seqs:
        for p in s:
            if p not in universe_set:
                raise ValueError(f"session page {p!r} is not in the page set")
    n = len(seqs)
    longest = max(len(s) for s in seqs)
    max_length = longest if max_length is None else min(int(max_length), longest)

    occ1 = defaultdict(list)
    for sid, s in enumerate(seqs):
        for pos, p in enumerate(s):
            occ1[p].append((sid, pos))

    level = PatternLevel(1)
    current = {}
    for p in universe:
        sup = _n_sessions(occ1.get(p, ())) / n
        if _meets(sup, min_support, strict):
            level.patterns[(p,)] = sup
            current[(p,)] = occ1[p]
        else:
            level.rejected[(p,)] = sup
    levels = [level]
    maximal = {pat: include_singletons for pat in level.patterns}
    frequent_pages = {pat[0] for pat in level.patterns}
    join_pages = frequent_pages if join == "frequent" else universe_set

    k = 1
    while current and k < max_length:
        nxt_level = PatternLevel(k + 1)
        nxt = {}
        for pat in sorted(current):
            occ = current[pat]
            following = defaultdict(list)
            for sid, pos in occ:
                s = seqs[sid]
                if pos + 1 < len(s):
                    following[s[pos + 1]].append((sid, pos + 1))
            for pj in topology.successors[pat[-1]]:
                if pj not in join_pages:
                    continue
                cand = pat + (pj,)
                cand_occ = following.get(pj, [])
                sup = _n_sessions(cand_occ) / n
                if not _meets(sup, min_support, strict):
                    nxt_level.rejected[cand] = sup
                    continue
                maximal[cand] = True
                maximal[pat] = False
                if (pj,) in maximal:
                    maximal[(pj,)] = False
                suffix = cand[1:]
                if suffix in current:
                    maximal[suffix] = False
                    nxt_level.patterns[cand] = sup
                    nxt[cand] = cand_occ
        if not nxt and not nxt_level.rejected:
            break
        levels.append(nxt_level)
        current = nxt
        k += 1

    result = [
        Pattern(pat, sup, True)
        for lvl in levels
        for pat, sup in lvl.patterns.items()
        if maximal.get(pat, False)
    ]
    result.sort(key=lambda p: p.pages)
    return result, levels


class SequentialApriori(BaseEstimator):
    """Estimator wrapper around :func:`sequential_apriori`.

    After ``fit(sessions)``: ``maximal_patterns_`` (list of Pattern),
    ``frequent_patterns_`` (dict pages -> support over every level),
    ``levels_`` and ``n_sessions_``.
    """

    def __init__(self, topology=None, min_support=0.05, max_length=None, strict=False,
                 join="frequent", include_singletons=False):
        self.topology = topology
        self.min_support = min_support
        self.max_length = max_length
        self.strict = strict
        self.join = join
        self.include_singletons = include_singletons

    def fit(self, X, y=None):
        if self.topology is None:
            raise ValueError("SequentialApriori requires a topology")
        X = list(X)
        maximal, levels = sequential_apriori(
            X, self.topology, self.min_support, max_length=self.max_length,
            strict=self.strict, join=self.join, include_singletons=self.include_singletons,
        )
        self.maximal_patterns_ = maximal
        self.levels_ = levels
        self.frequent_patterns_ = {p: s for lvl in levels for p, s in lvl.patterns.items()}
        self.n_sessions_ = len(X)
        return self

    def transform(self, X):
        """Support of every maximal pattern in the sessions ``X``."""
        check_is_fitted(self, "maximal_patterns_")
        seqs = page_tuples(X)
        return [support(p.pages, seqs) for p in self.maximal_patterns_]


def format_pattern(pattern):
    return f"{','.join(pattern.pages)}\tsupport={pattern.support:.6f}"


def write_patterns(patterns, path):
    lines = sorted(format_pattern(p) for p in patterns)
    with open(path, "w", encoding="utf-8") as fh:
        for line in lines:
            fh.write(line + "\n")


def read_patterns(path):
    out = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            pages, sep, sup = line.partition("\t")
            if not sep or not sup.startswith("support="):
                raise ValueError(f"line {line_no}: expected '<pages>\\tsupport=<value>'")
            out.append(Pattern(tuple(pages.split(",")), float(sup[len("support="):]), True))
    return out
