"""Accuracy of reconstructed sessions and of mined patterns against ground truth."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from ._validation import page_tuples

_BASE = np.uint64(0x9E3779B97F4A7C15)
_BASE_INV = np.uint64(pow(int(_BASE), -1, 1 << 64))
_USER_MIX = np.uint64(0xC2B2AE3D27D4EB4F)


def _powers(base, n):
    out = np.empty(n, dtype=np.uint64)
    if n:
        out[0] = 1
        out[1:] = base
        with np.errstate(over="ignore"):
            out = np.cumprod(out, dtype=np.uint64)
    return out


def captured(real, recon, real_users=None, recon_users=None):
    """Boolean array: is ``real[i]`` a contiguous run inside some ``recon`` session?

    With ``real_users``/``recon_users`` (one key per session) a real session
    only counts as captured by reconstructed sessions of the same user.

    Windows of the concatenated reconstructed sessions are matched by a
    polynomial hash modulo 2**64 and every hit is confirmed element-wise,
    so the result is exact.
    """
    real = page_tuples(real)
    recon = page_tuples(recon)
    result = np.zeros(len(real), dtype=bool)
    if not real or not recon:
        return result
    per_user = real_users is not None or recon_users is not None
    if per_user:
        if real_users is None or recon_users is None:
            raise ValueError("give both real_users and recon_users, or neither")
        real_users, recon_users = list(real_users), list(recon_users)
        if len(real_users) != len(real) or len(recon_users) != len(recon):
            raise ValueError("one user key per session is required")

    vocab = {}
    users = {}
    flat, owner = [], []
    for j, s in enumerate(recon):
        u = users.setdefault(recon_users[j], len(users) + 1) if per_user else 0
        for p in s:
            flat.append(vocab.setdefault(p, len(vocab) + 1))
            owner.append(u)
        flat.append(0)
        owner.append(0)
    arr = np.asarray(flat, dtype=np.uint64)
    owner = np.asarray(owner, dtype=np.uint64)
    n = len(arr)
    pw = _powers(_BASE, n + 1)
    inv = _powers(_BASE_INV, n + 1)
    with np.errstate(over="ignore"):
        prefix = np.zeros(n + 1, dtype=np.uint64)
        np.cumsum(arr * pw[:n], dtype=np.uint64, out=prefix[1:])

    sep = np.flatnonzero(arr == 0)
    starts = np.arange(n)
    run_left = sep[np.searchsorted(sep, starts)] - starts

    by_len = {}
    for i, r in enumerate(real):
        if per_user:
            u = users.get(real_users[i])
            if u is None:
                continue
        else:
            u = 0
        if not r:
            result[i] = True
            continue
        codes = [vocab.get(p, 0) for p in r]
        if 0 in codes:
            continue
        by_len.setdefault(len(r), []).append((i, u, codes))

    for length, items in by_len.items():
        idx = np.flatnonzero(run_left >= length)
        if not len(idx):
            continue
        with np.errstate(over="ignore"):
            win = (prefix[idx + length] - prefix[idx]) * inv[idx] + owner[idx] * _USER_MIX
        order = np.argsort(win, kind="stable")
        win_sorted = win[order]
        codes = np.asarray([c for _, _, c in items], dtype=np.uint64)
        owners = np.asarray([u for _, u, _ in items], dtype=np.uint64)
        with np.errstate(over="ignore"):
            want = (codes * pw[:length]).sum(axis=1, dtype=np.uint64) + owners * _USER_MIX
        lo = np.searchsorted(win_sorted, want, side="left")
        hi = np.searchsorted(win_sorted, want, side="right")
        for (i, u, _), row, a, b in zip(items, codes, lo, hi):
            for k in range(a, b):
                pos = idx[order[k]]
                if owner[pos] == u and np.array_equal(arr[pos:pos + length], row):
                    result[i] = True
                    break
    return result


def session_accuracy(real, recon, real_users=None, recon_users=None):
    """Share of real sessions captured by at least one reconstructed session.

    Pass per-session user keys to restrict capture to the same user.
    """
    real = page_tuples(real)
    if not real:
        raise ValueError("session accuracy needs at least one real session")
    return float(captured(real, recon, real_users, recon_users).sum()) / len(real)


def _pattern_keys(patterns):
    return {tuple(p.pages) if hasattr(p, "pages") else tuple(p) for p in patterns}


def pattern_accuracy(mp_a, mp_h):
    """|MP_A & MP_H| / |MP_A|, comparing patterns by page sequence only."""
    true_set = _pattern_keys(mp_a)
    if not true_set:
        raise ValueError("pattern accuracy needs a non-empty true pattern set")
    return len(true_set & _pattern_keys(mp_h)) / len(true_set)


REPORT_FIELDS = (
    "heuristic", "session_accuracy", "pattern_accuracy", "n_real_sessions",
    "n_reconstructed", "n_true_patterns", "n_found_patterns", "params",
)


@dataclass
class AccuracyReport:
    heuristic: str
    session_accuracy: float
    pattern_accuracy: float | None = None
    n_real_sessions: int = 0
    n_reconstructed: int = 0
    n_true_patterns: int = 0
    n_found_patterns: int = 0
    params_echo: dict = field(default_factory=dict)

    def as_row(self):
        d = asdict(self)
        params = d.pop("params_echo")
        d["params"] = json.dumps(params, sort_keys=True, separators=(",", ":"))
        if d["pattern_accuracy"] is None:
            d["pattern_accuracy"] = ""
        return d

    def to_csv(self, header=True):
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=REPORT_FIELDS, lineterminator="\n")
        if header:
            w.writeheader()
        w.writerow(self.as_row())
        return buf.getvalue()


def evaluate(real, recon, heuristic, topology=None, min_support=None, params=None,
             real_users=None, recon_users=None):
    """Build an :class:`AccuracyReport`; pattern accuracy only when ``min_support`` is given."""
    from .miner import sequential_apriori

    report = AccuracyReport(
        heuristic=heuristic,
        session_accuracy=session_accuracy(real, recon, real_users, recon_users),
        n_real_sessions=len(real),
        n_reconstructed=len(recon),
        params_echo=dict(params or {}),
    )
    if min_support is not None:
        if topology is None:
            raise ValueError("pattern accuracy needs a topology")
        mp_a, _ = sequential_apriori(real, topology, min_support)
        mp_h, _ = sequential_apriori(recon, topology, min_support) if recon else ([], [])
        report.n_true_patterns = len(mp_a)
        report.n_found_patterns = len(mp_h)
        report.pattern_accuracy = pattern_accuracy(mp_a, mp_h) if mp_a else None
        report.params_echo.setdefault("min_support", min_support)
    return report
