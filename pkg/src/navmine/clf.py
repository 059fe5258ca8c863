"""Common Log Format ingestion.

Turns access-log lines into :class:`LogEntry` records and groups them into
per-user, time-ordered :class:`UserStream` objects.
"""
from __future__ import annotations

import gzip
import io
import logging
import re
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from itertools import groupby
from operator import attrgetter

logger = logging.getLogger(__name__)

MONTHS = {
    "Jan": 1, "Feb": 2, "Mar": 3, "Apr": 4, "May": 5, "Jun": 6,
    "Jul": 7, "Aug": 8, "Sep": 9, "Oct": 10, "Nov": 11, "Dec": 12,
}
MONTH_NAMES = {v: k for k, v in MONTHS.items()}

DEFAULT_ASSET_EXTENSIONS = frozenset({"gif", "jpg", "jpeg", "png", "css", "js", "ico"})

_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)
_MIN_TS = int((datetime(1990, 1, 1, tzinfo=timezone.utc) - _EPOCH).total_seconds())
_MAX_TS = int((datetime(2101, 1, 1, tzinfo=timezone.utc) - _EPOCH).total_seconds())

# remotehost rfc931 authuser [date] "request" status bytes
_LINE_RE = re.compile(
    r'^(?P<host>\S+) (?P<ident>\S+) (?P<user>\S+) \[(?P<ts>[^\]]+)\] '
    r'"(?P<request>[^"]*)" (?P<status>\d{3}) (?P<size>\S+)\s*$'
)
_TS_RE = re.compile(
    r"^(?P<d>\d{2})/(?P<mon>[A-Z][a-z]{2})/(?P<y>\d{4}):(?P<H>\d{2}):(?P<M>\d{2}):(?P<S>\d{2}) "
    r"(?P<sign>[+-])(?P<zh>\d{2})(?P<zm>\d{2})$"
)
_SLASHES_RE = re.compile(r"/{2,}")


class CLFParseError(ValueError):
    """A log line that does not follow the Common Log Format."""

    def __init__(self, line_no, reason, line=""):
        self.line_no = line_no
        self.reason = reason
        self.line = line
        super().__init__(f"line {line_no}: {reason}")


@dataclass(frozen=True)
class Skipped:
    """Marker for a well-formed line that is not a page view."""

    line_no: int
    reason: str


@dataclass(frozen=True, order=True)
class LogEntry:
    timestamp: int
    raw_line_no: int
    user_id: str
    page: str
    status: int = 200


@dataclass
class UserStream:
    user_id: str
    entries: list

    def __len__(self):
        return len(self.entries)

    @property
    def pages(self):
        return [e.page for e in self.entries]

    @property
    def timestamps(self):
        return [e.timestamp for e in self.entries]


def parse_timestamp(text):
    """Parse ``dd/Mon/yyyy:HH:MM:SS +zzzz`` into UTC epoch seconds."""
    m = _TS_RE.match(text)
    if m is None or m["mon"] not in MONTHS:
        raise ValueError(f"unparseable timestamp {text!r}")
    offset = timedelta(hours=int(m["zh"]), minutes=int(m["zm"]))
    if m["sign"] == "-":
        offset = -offset
    try:
        dt = datetime(
            int(m["y"]), MONTHS[m["mon"]], int(m["d"]),
            int(m["H"]), int(m["M"]), int(m["S"]),
            tzinfo=timezone(offset),
        )
    except ValueError as exc:
        raise ValueError(f"invalid timestamp {text!r}: {exc}") from None
    ts = int((dt - _EPOCH).total_seconds())
    if not _MIN_TS <= ts < _MAX_TS:
        raise ValueError(f"timestamp {text!r} outside 1990-2100")
    return ts


def format_timestamp(ts):
    dt = _EPOCH + timedelta(seconds=int(ts))
    return f"{dt.day:02d}/{MONTH_NAMES[dt.month]}/{dt.year:04d}:{dt:%H:%M:%S} +0000"


def canonicalize_path(path):
    """Strip query and fragment, collapse slashes, map ``.../index.html`` to ``.../``."""
    path = path.split("#", 1)[0].split("?", 1)[0]
    path = _SLASHES_RE.sub("/", path)
    if not path.startswith("/"):
        path = "/" + path
    if path.endswith("/index.html"):
        path = path[: -len("index.html")]
    return path


def _extension(path):
    tail = path.rsplit("/", 1)[-1]
    if "." not in tail:
        return ""
    return tail.rsplit(".", 1)[-1].lower()


def parse_clf_line(line, line_no, asset_extensions=DEFAULT_ASSET_EXTENSIONS,
                   methods=("GET",), status_range=(200, 399)):
    """Parse one physical CLF line.

    Returns a :class:`LogEntry`, or a :class:`Skipped` marker for requests
    that are not page views (wrong method, failed status, embedded asset).
    Raises :class:`CLFParseError` for malformed lines.
    """
    m = _LINE_RE.match(line.rstrip("\r\n"))
    if m is None:
        raise CLFParseError(line_no, "malformed line", line)
    try:
        ts = parse_timestamp(m["ts"])
    except ValueError as exc:
        raise CLFParseError(line_no, str(exc), line) from None
    parts = m["request"].split()
    if len(parts) not in (2, 3):
        raise CLFParseError(line_no, f"bad request field {m['request']!r}", line)
    method, raw_path = parts[0], parts[1]
    status = int(m["status"])

    if method not in methods:
        return Skipped(line_no, f"method {method}")
    if not status_range[0] <= status <= status_range[1]:
        return Skipped(line_no, f"status {status}")
    page = canonicalize_path(raw_path)
    if _extension(page) in asset_extensions:
        return Skipped(line_no, "asset")
    return LogEntry(timestamp=ts, raw_line_no=line_no, user_id=m["host"], page=page, status=status)


def format_clf_line(entry, size="-"):
    return (
        f'{entry.user_id} - - [{format_timestamp(entry.timestamp)}] '
        f'"GET {entry.page} HTTP/1.0" {entry.status} {size}'
    )


def _open_text(path):
    with open(path, "rb") as fh:
        magic = fh.read(2)
    if magic == b"\x1f\x8b":
        return io.TextIOWrapper(gzip.open(path, "rb"), encoding="utf-8", errors="replace")
    return open(path, encoding="utf-8", errors="replace")


def parse_lines(lines, strict=False, diagnostics=None, **kwargs):
    """Parse an iterable of lines (numbered from 1).

    Malformed lines are reported to ``diagnostics`` (a list, if given) and to
    the module logger; with ``strict=True`` the first one is raised instead.
    """
    entries = []
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            result = parse_clf_line(line, line_no, **kwargs)
        except CLFParseError as exc:
            if strict:
                raise
            logger.debug("%s", exc)
            if diagnostics is not None:
                diagnostics.append(exc)
            continue
        if isinstance(result, Skipped):
            if diagnostics is not None:
                diagnostics.append(result)
            continue
        entries.append(result)
    return entries


def read_clf(path, strict=False, diagnostics=None, **kwargs):
    """Read a (possibly gzip-compressed) CLF file into a list of entries."""
    with _open_text(path) as fh:
        return parse_lines(fh, strict=strict, diagnostics=diagnostics, **kwargs)


def write_clf(entries, path):
    with open(path, "w", encoding="utf-8") as fh:
        for e in entries:
            fh.write(format_clf_line(e))
            fh.write("\n")


def group_by_user(entries):
    """Partition entries into one timestamp-ordered stream per user.

    Ties on timestamp keep original file order. Streams come back sorted by
    user id so the result does not depend on input order.
    """
    key = attrgetter("user_id")
    ordered = sorted(entries, key=lambda e: (e.user_id, e.timestamp, e.raw_line_no))
    return [UserStream(uid, list(group)) for uid, group in groupby(ordered, key=key)]
