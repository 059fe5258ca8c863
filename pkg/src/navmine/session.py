"""Session records and the tab-separated session file format.

One line per session::

    <source>\t<page>@<epoch>,<page>@<epoch>,...

``source`` is the agent id for simulated ground truth and the client
address for reconstructed sessions.
"""
from __future__ import annotations

from dataclasses import dataclass


class SessionFormatError(ValueError):
    def __init__(self, message, line_no=None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Session:
    pages: tuple
    timestamps: tuple
    source: str = ""

    def __post_init__(self):
        if len(self.pages) != len(self.timestamps):
            raise ValueError("pages and timestamps differ in length")

    @classmethod
    def from_visits(cls, visits, source=""):
        pages = tuple(p for p, _ in visits)
        stamps = tuple(t for _, t in visits)
        return cls(pages, stamps, str(source))

    def __len__(self):
        return len(self.pages)

    @property
    def visits(self):
        return list(zip(self.pages, self.timestamps))

    @property
    def span(self):
        return self.timestamps[-1] - self.timestamps[0] if self.pages else 0

    @property
    def gaps(self):
        ts = self.timestamps
        return [b - a for a, b in zip(ts, ts[1:])]


def _fmt_time(t):
    if isinstance(t, float) and not t.is_integer():
        return repr(t)
    return str(int(t))


def _parse_time(text):
    return float(text) if "." in text else int(text)


def format_session(session):
    body = ",".join(f"{p}@{_fmt_time(t)}" for p, t in zip(session.pages, session.timestamps))
    return f"{session.source}\t{body}"


def parse_session_line(line, line_no=None):
    source, sep, body = line.rstrip("\r\n").partition("\t")
    if not sep:
        raise SessionFormatError("missing tab separator", line_no)
    pages, stamps = [], []
    for item in body.split(","):
        page, at, when = item.strip().rpartition("@")
        if not at or not page:
            raise SessionFormatError(f"bad visit {item!r}", line_no)
        try:
            stamps.append(_parse_time(when))
        except ValueError:
            raise SessionFormatError(f"bad timestamp in {item!r}", line_no) from None
        pages.append(page)
    return Session(tuple(pages), tuple(stamps), source)


def write_sessions(sessions, path):
    with open(path, "w", encoding="utf-8") as fh:
        for s in sessions:
            if len(s):
                fh.write(format_session(s))
                fh.write("\n")


def read_sessions(path):
    out = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if line.strip() and not line.startswith("#"):
                out.append(parse_session_line(line, line_no))
    return out
