"""Directed hyperlink graph of a web site."""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, replace

import numpy as np


class TopologyError(ValueError):
    """Invalid topology contents or file syntax."""

    def __init__(self, message, line_no=None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class WebTopology:
    """Pages, their out-links and the site's entry pages.

    ``successors`` maps each page to a tuple of linked pages; membership
    tests go through a per-page frozenset, which plays the role of the
    Link matrix.
    """

    def __init__(self, pages, links, entry_pages):
        self.pages = tuple(pages)
        if len(set(self.pages)) != len(self.pages):
            raise TopologyError("duplicate page ids")
        page_set = set(self.pages)
        succ = {p: [] for p in self.pages}
        for a, targets in dict(links).items():
            if a not in page_set:
                raise TopologyError(f"link from undeclared page {a!r}")
            seen = set()
            for b in targets:
                if b not in page_set:
                    raise TopologyError(f"link to undeclared page {b!r}")
                if b == a:
                    raise TopologyError(f"self-loop on page {a!r}")
                if b not in seen:
                    seen.add(b)
                    succ[a].append(b)
        self.successors = {p: tuple(v) for p, v in succ.items()}
        self._link_sets = {p: frozenset(v) for p, v in self.successors.items()}

        self.entry_pages = tuple(dict.fromkeys(entry_pages))
        if not self.entry_pages:
            raise TopologyError("at least one entry page is required")
        for e in self.entry_pages:
            if e not in page_set:
                raise TopologyError(f"entry page {e!r} is not declared")
        self._index = {p: i for i, p in enumerate(self.pages)}

    def __len__(self):
        return len(self.pages)

    def __contains__(self, page):
        return page in self._link_sets

    def __eq__(self, other):
        if not isinstance(other, WebTopology):
            return NotImplemented
        return (
            self.pages == other.pages
            and self._link_sets == other._link_sets
            and set(self.entry_pages) == set(other.entry_pages)
        )

    def __repr__(self):
        return (f"WebTopology(n_pages={len(self.pages)}, n_links={self.n_links}, "
                f"n_entry={len(self.entry_pages)})")

    @property
    def n_links(self):
        return sum(len(v) for v in self.successors.values())

    def has_link(self, a, b):
        out = self._link_sets.get(a)
        if out is None:
            raise KeyError(f"unknown page {a!r}")
        if b not in self._link_sets:
            raise KeyError(f"unknown page {b!r}")
        return b in out

    def links_from(self, a):
        """Frozen set of pages ``a`` links to (unchecked fast path)."""
        return self._link_sets[a]

    def out_degree(self, page):
        return len(self.successors[page])

    def resolve(self, token):
        """Map a log path such as ``/P13.html`` to the page id ``P13``.

        Exact ids win; otherwise the leading slash and an ``.html``/``.htm``
        suffix are stripped. Returns None when nothing matches.
        """
        if token in self._link_sets:
            return token
        stripped = token.lstrip("/")
        for suffix in (".html", ".htm"):
            if stripped.endswith(suffix):
                stripped = stripped[: -len(suffix)]
                break
        return stripped if stripped in self._link_sets else None

    def index_of(self, page):
        return self._index[page]


@dataclass
class TopologyGenParams:
    n_pages: int = 300
    avg_outdegree: float = 15.0
    entry_fraction: float = 0.05
    seed: int = 0

    def validate(self):
        if int(self.n_pages) != self.n_pages or self.n_pages < 1:
            raise ValueError(f"n_pages must be a positive integer, got {self.n_pages}")
        if not self.avg_outdegree > 0:
            raise ValueError("avg_outdegree must be positive")
        if self.n_pages > 1 and not self.avg_outdegree < self.n_pages:
            raise ValueError("avg_outdegree must be smaller than n_pages")
        if not 0 < self.entry_fraction <= 1:
            raise ValueError("entry_fraction must be in (0, 1]")
        return self


def page_name(i):
    return f"P{i}"


def generate_random_topology(params):
    """Directed random graph with independent edges.

    Every ordered pair (a, b), a != b, is linked with probability
    ``avg_outdegree / (n_pages - 1)``; entry pages are a uniform sample of
    ``ceil(entry_fraction * n_pages)`` pages.
    """
    params.validate()
    n = int(params.n_pages)
    rng = np.random.default_rng(params.seed)
    pages = [page_name(i) for i in range(1, n + 1)]
    links = {}
    if n > 1:
        p = params.avg_outdegree / (n - 1)
        adj = rng.random((n, n)) < p
        np.fill_diagonal(adj, False)
        for i in range(n):
            links[pages[i]] = [pages[j] for j in np.flatnonzero(adj[i])]
    n_entry = max(1, math.ceil(params.entry_fraction * n))
    entry_idx = np.sort(rng.choice(n, size=n_entry, replace=False))
    return WebTopology(pages, links, [pages[i] for i in entry_idx])


_TOKEN_RE = re.compile(r"^[^\s,:#]+$")


def _split_ids(text, line_no):
    ids = [t.strip() for t in text.split(",")]
    ids = [t for t in ids if t]
    for t in ids:
        if not _TOKEN_RE.match(t):
            raise TopologyError(f"bad page id {t!r}", line_no)
    return ids


def parse_topology(text):
    """Parse the ``pages: n`` / ``P<i>: succ,...`` / ``entry: ...`` format."""
    n_declared = None
    pages, links, entry = [], {}, None
    refs = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, sep, rest = line.partition(":")
        if not sep:
            raise TopologyError(f"expected 'key: value', got {raw.strip()!r}", line_no)
        head = head.strip()
        if n_declared is None:
            if head != "pages":
                raise TopologyError("file must start with 'pages: <n>'", line_no)
            try:
                n_declared = int(rest.strip())
            except ValueError:
                raise TopologyError(f"bad page count {rest.strip()!r}", line_no) from None
            continue
        if head == "pages":
            raise TopologyError("duplicate 'pages' header", line_no)
        if head == "entry":
            if entry is not None:
                raise TopologyError("duplicate 'entry' line", line_no)
            entry = _split_ids(rest, line_no)
            refs.extend((t, line_no) for t in entry)
            continue
        if entry is not None:
            raise TopologyError("page lines must precede the 'entry' line", line_no)
        if not _TOKEN_RE.match(head):
            raise TopologyError(f"bad page id {head!r}", line_no)
        if head in links:
            raise TopologyError(f"page {head!r} declared twice", line_no)
        pages.append(head)
        links[head] = _split_ids(rest, line_no)
        refs.extend((t, line_no) for t in links[head])

    if n_declared is None:
        raise TopologyError("missing 'pages: <n>' header")
    if not pages:
        raise TopologyError("empty pages section")
    if n_declared != len(pages):
        raise TopologyError(f"header declares {n_declared} pages, found {len(pages)}")
    if not entry:
        raise TopologyError("missing or empty 'entry' line")
    declared = set(pages)
    for t, line_no in refs:
        if t not in declared:
            raise TopologyError(f"dangling reference to undeclared page {t!r}", line_no)
    try:
        return WebTopology(pages, links, entry)
    except TopologyError:
        raise
    except ValueError as exc:
        raise TopologyError(str(exc)) from None


def format_topology(topology):
    lines = [f"pages: {len(topology.pages)}"]
    for p in topology.pages:
        lines.append(f"{p}: {','.join(topology.successors[p])}")
    lines.append(f"entry: {','.join(topology.entry_pages)}")
    return "\n".join(lines) + "\n"


def load_topology(path):
    with open(path, encoding="utf-8") as fh:
        return parse_topology(fh.read())


def save_topology(topology, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_topology(topology))


def resolve_log_entries(entries, topology):
    """Rewrite logged paths (``/P13.html``) as topology page ids.

    Raises ValueError listing paths that match no page.
    """
    out, unknown = [], set()
    for e in entries:
        page = topology.resolve(e.page)
        if page is None:
            unknown.add(e.page)
        else:
            out.append(replace(e, page=page))
    if unknown:
        shown = ", ".join(sorted(unknown)[:5])
        raise ValueError(f"{len(unknown)} logged path(s) match no topology page: {shown}")
    return out
