"""End-to-end experiment grids: topology -> simulation -> reconstruction -> mining -> accuracy."""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .clf import group_by_user
from .eval import pattern_accuracy, session_accuracy
from .miner import sequential_apriori, write_patterns
from .reconstruct import DEFAULT_DELTA, DEFAULT_RHO, HEURISTICS, make_reconstructor
from .session import write_sessions
from .simulator import SimulationParams, agent_ip, simulate, write_server_log
from .topology import TopologyGenParams, generate_random_topology, save_topology

logger = logging.getLogger(__name__)

RESULT_FIELDS = (
    "swept_var", "value", "heuristic", "replication",
    "session_accuracy", "pattern_accuracy", "runtime_ms",
)
SWEEPABLE = ("stp", "lpp", "nip", "min_support")

FIGURE_PRESETS = {
    "figure2": {"sweep": "stp", "values": [0.01, 0.05, 0.10, 0.15, 0.20], "lpp": 0.30, "nip": 0.30},
    "figure3": {"sweep": "lpp", "values": [0.01, 0.20, 0.40, 0.60, 0.90], "stp": 0.05, "nip": 0.30},
    "figure4": {"sweep": "nip", "values": [0.00, 0.20, 0.40, 0.60, 0.90], "stp": 0.05, "lpp": 0.30},
}

# experiment number -> (stp, lpp, nip)
PATTERN_EXPERIMENTS = {
    1: (0.10, 0.20, 0.20),
    2: (0.10, 0.20, 0.40),
    3: (0.10, 0.40, 0.20),
    4: (0.10, 0.40, 0.40),
    5: (0.20, 0.20, 0.20),
    6: (0.20, 0.20, 0.40),
    7: (0.20, 0.40, 0.20),
    8: (0.20, 0.40, 0.40),
}

SUPPORT_PRESETS = {
    "literal": [0.0005, 0.0010, 0.0015, 0.0020, 0.0025],
    "desk": [0.05, 0.10, 0.15, 0.20, 0.25],
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    sweep: str = "stp"
    values: list = field(default_factory=lambda: list(FIGURE_PRESETS["figure2"]["values"]))
    # topology
    n_pages: int = 300
    avg_outdegree: float = 15.0
    entry_fraction: float = 0.05
    # simulation
    stp: float = 0.05
    lpp: float = 0.30
    nip: float = 0.30
    mean_stay: float = 132.0
    sd_stay: float = 30.0
    max_gap: float = 600.0
    n_agents: int = 10000
    composition: str = "nested"
    # reconstruction
    rho: float = DEFAULT_RHO
    delta: float = DEFAULT_DELTA
    heuristics: list = field(default_factory=lambda: list(HEURISTICS))
    capture: str = "any"
    # mining
    min_support: float = 0.001
    max_length: int | None = None
    # bookkeeping
    replications: int = 5
    seed: int = 0
    experiment: int | None = None
    workers: int = 1

    def validate(self):
        if self.sweep not in SWEEPABLE:
            raise ConfigError(f"sweep must be one of {SWEEPABLE}, got {self.sweep!r}")
        if not self.values:
            raise ConfigError("values must be non-empty")
        for v in self.values:
            if not 0 <= v <= 1:
                raise ConfigError(f"swept value {v} outside [0, 1]")
        if self.sweep == "min_support" and any(v <= 0 for v in self.values):
            raise ConfigError("min_support values must be positive")
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        if self.capture not in ("any", "same_user"):
            raise ConfigError("capture must be 'any' or 'same_user'")
        for h in self.heuristics:
            if h not in HEURISTICS:
                raise ConfigError(f"unknown heuristic {h!r}")
        if self.experiment is not None and self.experiment not in PATTERN_EXPERIMENTS:
            raise ConfigError(f"experiment must be 1-8, got {self.experiment}")
        if not 0 < self.rho <= self.delta:
            raise ConfigError("need 0 < rho <= delta")
        try:
            self.topology_params(0).validate()
            self.simulation_params(0).validate()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return self

    @property
    def is_pattern_sweep(self):
        return self.sweep == "min_support"

    def topology_params(self, seed):
        return TopologyGenParams(self.n_pages, self.avg_outdegree, self.entry_fraction, seed)

    def simulation_params(self, seed, **override):
        values = dict(stp=self.stp, lpp=self.lpp, nip=self.nip)
        values.update(override)
        return SimulationParams(
            mean_stay=self.mean_stay, sd_stay=self.sd_stay, max_gap=self.max_gap,
            n_agents=self.n_agents, seed=seed, composition=self.composition, **values,
        )

    def key(self):
        """Content hash of everything that affects results."""
        d = asdict(self)
        d.pop("workers")
        blob = json.dumps(d, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    @classmethod
    def preset(cls, name, **kwargs):
        """Config for a named figure preset or ``experimentN`` pattern grid."""
        if name in FIGURE_PRESETS:
            p = dict(FIGURE_PRESETS[name])
            return cls(**{**p, "values": list(p["values"]), **kwargs}).validate()
        if name.startswith("experiment"):
            num = int(name[len("experiment"):])
            return experiment_config(num, **kwargs)
        raise ConfigError(f"unknown preset {name!r}")


def experiment_config(number, supports="literal", **kwargs):
    if number not in PATTERN_EXPERIMENTS:
        raise ConfigError(f"experiment must be 1-8, got {number}")
    stp, lpp, nip = PATTERN_EXPERIMENTS[number]
    values = SUPPORT_PRESETS[supports] if isinstance(supports, str) else list(supports)
    base = dict(sweep="min_support", values=list(values), stp=stp, lpp=lpp, nip=nip,
                experiment=number)
    base.update(kwargs)
    return ExperimentConfig(**base).validate()


_LIST_FIELDS = {"values": float, "heuristics": str}


def _coerce(name, text, ftype):
    text = text.strip()
    if name in _LIST_FIELDS:
        conv = _LIST_FIELDS[name]
        return [conv(x.strip()) for x in text.split(",") if x.strip()]
    if text.lower() in ("none", ""):
        return None
    if name in ("n_pages", "n_agents", "replications", "seed", "experiment", "workers",
                "max_length"):
        return int(text)
    if name in ("sweep", "composition", "capture"):
        return text
    return float(text)


def parse_config(text):
    """Parse flat ``key = value`` text into an :class:`ExperimentConfig`.

    ``preset = figure2|figure3|figure4|experimentN`` seeds defaults, and
    ``supports = literal|desk`` picks a support grid for pattern sweeps.
    Later keys override the preset.
    """
    known = {f.name for f in fields(ExperimentConfig)}
    items = {}
    preset = supports = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError(f"line {line_no}: expected key = value")
        if key == "preset":
            preset = value.strip()
            continue
        if key == "supports":
            supports = value.strip()
            continue
        if key not in known:
            raise ConfigError(f"line {line_no}: unknown key {key!r}")
        try:
            items[key] = _coerce(key, value, None)
        except ValueError:
            raise ConfigError(f"line {line_no}: bad value for {key}: {value.strip()!r}") from None
    if supports is not None and supports not in SUPPORT_PRESETS:
        raise ConfigError(f"supports must be one of {sorted(SUPPORT_PRESETS)}")
    if "experiment" in items and items["experiment"] is not None and preset is None:
        preset = f"experiment{items['experiment']}"
    if preset is not None:
        extra = {"supports": supports} if supports and preset.startswith("experiment") else {}
        cfg = ExperimentConfig.preset(preset, **extra)
        for k, v in items.items():
            setattr(cfg, k, v)
    else:
        if supports is not None:
            items.setdefault("values", list(SUPPORT_PRESETS[supports]))
            items.setdefault("sweep", "min_support")
        cfg = ExperimentConfig(**items)
    return cfg.validate()


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


@dataclass
class ResultRow:
    swept_var: str
    value: float
    heuristic: str
    replication: int
    session_accuracy: float
    pattern_accuracy: float | None
    runtime_ms: float

    def __post_init__(self):
        # keep in-memory rows identical to rows read back from CSV
        self.session_accuracy = round(self.session_accuracy, 6)
        if self.pattern_accuracy is not None:
            self.pattern_accuracy = round(self.pattern_accuracy, 6)
        self.runtime_ms = round(self.runtime_ms, 1)

    def as_csv(self):
        return {
            "swept_var": self.swept_var,
            "value": f"{self.value:g}",
            "heuristic": self.heuristic,
            "replication": str(self.replication),
            "session_accuracy": f"{self.session_accuracy:.6f}",
            "pattern_accuracy": "" if self.pattern_accuracy is None else f"{self.pattern_accuracy:.6f}",
            "runtime_ms": f"{self.runtime_ms:.1f}",
        }


def derive_seed(base, *path):
    return int(np.random.SeedSequence([int(base), *map(int, path)]).generate_state(1)[0])


def _cell_dir(workdir, cfg, rep, vi):
    if workdir is None:
        return None
    d = os.path.join(workdir, cfg.key(), f"rep{rep:02d}_v{vi:02d}")
    os.makedirs(d, exist_ok=True)
    return d


def _read_rows(path):
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for r in csv.DictReader(fh):
            rows.append(ResultRow(
                r["swept_var"], float(r["value"]), r["heuristic"], int(r["replication"]),
                float(r["session_accuracy"]),
                float(r["pattern_accuracy"]) if r["pattern_accuracy"] else None,
                float(r["runtime_ms"]),
            ))
    return rows


def write_results(rows, path_or_file):
    own = isinstance(path_or_file, (str, os.PathLike))
    fh = open(path_or_file, "w", newline="", encoding="utf-8") if own else path_or_file
    try:
        w = csv.DictWriter(fh, fieldnames=RESULT_FIELDS, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow(r.as_csv())
    finally:
        if own:
            fh.close()


def _simulate_cell(cfg, rep, vi, cell, **override):
    topology = generate_random_topology(cfg.topology_params(derive_seed(cfg.seed, rep, 0)))
    params = cfg.simulation_params(derive_seed(cfg.seed, rep, vi + 1), **override)
    real, log = simulate(topology, params)
    if cell is not None:
        save_topology(topology, os.path.join(cell, "topology.txt"))
        write_server_log(log, os.path.join(cell, "access.log"))
        write_sessions(real, os.path.join(cell, "real.tsv"))
    return topology, real, group_by_user(log)


def _reconstruct_all(cfg, topology, streams, cell):
    out = {}
    for h in cfg.heuristics:
        t0 = time.perf_counter()
        rec = make_reconstructor(h, topology, cfg.rho, cfg.delta).fit().transform(streams)
        out[h] = (rec, (time.perf_counter() - t0) * 1000)
        if cell is not None:
            write_sessions(rec, os.path.join(cell, f"recon_{h}.tsv"))
    return out


def _accuracy(cfg, real, rec):
    if cfg.capture == "same_user":
        return session_accuracy(real, rec, [agent_ip(int(s.source)) for s in real],
                                [s.source for s in rec])
    return session_accuracy(real, rec)


def _session_cell(cfg, rep, vi, workdir):
    cell = _cell_dir(workdir, cfg, rep, vi)
    done = cell and os.path.join(cell, "rows.csv")
    if done and os.path.exists(done):
        return _read_rows(done)
    value = cfg.values[vi]
    topology, real, streams = _simulate_cell(cfg, rep, vi, cell, **{cfg.sweep: value})
    rows = []
    for h, (rec, ms) in _reconstruct_all(cfg, topology, streams, cell).items():
        rows.append(ResultRow(cfg.sweep, value, h, rep, _accuracy(cfg, real, rec), None, ms))
    if done:
        write_results(rows, done)
    return rows


def _pattern_cell(cfg, rep, workdir):
    cell = _cell_dir(workdir, cfg, rep, 0)
    done = cell and os.path.join(cell, "rows.csv")
    if done and os.path.exists(done):
        return _read_rows(done)
    topology, real, streams = _simulate_cell(cfg, rep, 0, cell)
    recs = _reconstruct_all(cfg, topology, streams, cell)
    sess_acc = {h: _accuracy(cfg, real, rec) for h, (rec, _) in recs.items()}
    rows = []
    for support in cfg.values:
        mp_a, _ = sequential_apriori(real, topology, support, max_length=cfg.max_length)
        if cell is not None:
            write_patterns(mp_a, os.path.join(cell, f"patterns_real_{support:g}.txt"))
        for h, (rec, ms) in recs.items():
            t0 = time.perf_counter()
            mp_h, _ = sequential_apriori(rec, topology, support, max_length=cfg.max_length)
            mine_ms = (time.perf_counter() - t0) * 1000
            if cell is not None:
                write_patterns(mp_h, os.path.join(cell, f"patterns_{h}_{support:g}.txt"))
            acc = pattern_accuracy(mp_a, mp_h) if mp_a else None
            if acc is None:
                logger.warning("no frequent real patterns at support %g (rep %d)", support, rep)
            rows.append(ResultRow("min_support", support, h, rep, sess_acc[h], acc, ms + mine_ms))
    if done:
        write_results(rows, done)
    return rows


def _order(rows, cfg):
    hidx = {h: i for i, h in enumerate(cfg.heuristics)}
    vidx = {v: i for i, v in enumerate(cfg.values)}
    return sorted(rows, key=lambda r: (vidx[r.value], hidx[r.heuristic], r.replication))


def _run_jobs(fn, jobs, workers):
    if workers and workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(fn, *job) for job in jobs]
            return [row for f in futures for row in f.result()]
    return [row for job in jobs for row in fn(*job)]


def run_session_sweep(cfg, workdir=None):
    """Session accuracy for every swept value x heuristic x replication."""
    cfg.validate()
    if cfg.is_pattern_sweep:
        raise ConfigError("run_session_sweep needs stp, lpp or nip as the swept variable")
    jobs = [(cfg, rep, vi, workdir) for rep in range(cfg.replications)
            for vi in range(len(cfg.values))]
    return _order(_run_jobs(_session_cell, jobs, cfg.workers), cfg)


def run_pattern_sweep(cfg, workdir=None):
    """Session and pattern accuracy for every support value x heuristic x replication."""
    cfg.validate()
    if not cfg.is_pattern_sweep:
        raise ConfigError("run_pattern_sweep needs min_support as the swept variable")
    jobs = [(cfg, rep, workdir) for rep in range(cfg.replications)]
    return _order(_run_jobs(_pattern_cell, jobs, cfg.workers), cfg)


def run_experiment(cfg, workdir=None):
    return run_pattern_sweep(cfg, workdir) if cfg.is_pattern_sweep else run_session_sweep(cfg, workdir)


def _mean_sd(xs):
    xs = [x for x in xs if x is not None]
    if not xs:
        return None, None
    m = sum(xs) / len(xs)
    sd = math.sqrt(sum((x - m) ** 2 for x in xs) / (len(xs) - 1)) if len(xs) > 1 else 0.0
    return m, sd


def summarize(rows):
    """Mean and sample standard deviation per (swept value, heuristic)."""
    groups = {}
    for r in rows:
        groups.setdefault((r.swept_var, r.value, r.heuristic), []).append(r)
    out = []
    for (var, value, h), rs in groups.items():
        sm, ssd = _mean_sd([r.session_accuracy for r in rs])
        pm, psd = _mean_sd([r.pattern_accuracy for r in rs])
        out.append({
            "swept_var": var, "value": value, "heuristic": h, "n": len(rs),
            "session_mean": sm, "session_sd": ssd, "pattern_mean": pm, "pattern_sd": psd,
        })
    return out
