"""Monte Carlo experiments on sandpile groups of random digraphs.

Trial i draws from ``Generator(Philox(key=seed, counter=i << 192))``: the
trial index sits in the top word of Philox's 256-bit counter, so streams of
different trials never overlap and results do not depend on how trials are
split across workers.  Results are reduced in trial order and reports are
serialized with sorted keys and no timestamps, so identical configs give
byte-identical output.

Every ``audit_every``-th trial is recomputed through the integral Smith
normal form; any disagreement with the fast route raises ConsistencyError.
"""

from __future__ import annotations

import copy
import csv
import io
import json
import math
import multiprocessing
import subprocess
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from statistics import NormalDist

import numpy as np

from . import __version__
from .abelian_groups import (
    TRIVIAL,
    AbelianGroup,
    direct_sum,
    enumerate_groups,
    exponent,
    from_cyclic_orders,
    is_cyclic,
    order,
    parse_group,
    sur_count,
    tensor_mod,
)
from .cohen_lenstra import cyclic_constant, prob_Y, q_total
from .random_digraph import EdgeModel, bernoulli, is_strongly_connected, sample_digraph, uniform
from .sandpile import (
    ConsistencyError,
    Infinite,
    sylow_fast,
    tensor_fast,
    total_sandpile,
    total_sandpile_fast,
)

SCHEMA_VERSION = 1
INFINITE = "infinite"
NOT_STRONGLY_CONNECTED = "not_strongly_connected"
LARGE = "large"
OTHER = "other"
EVENTS = ("coeulerian", "cyclic", "eulerian", "infinite", "not_strongly_connected")
# groups with at least this limiting mass are always listed in distribution reports
THEORY_MASS_FLOOR = 1e-3
_THEORY_TOL = 1e-12
_REFERENCE_TOL = 1e-10
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class ExperimentConfig:
    n: int
    trials: int
    model: EdgeModel
    master_seed: int = 0
    primes: tuple[int, ...] | None = None
    modulus: int | None = None
    target: AbelianGroup | None = None
    workers: int = 1
    depth: int = 6
    audit_every: int = 100
    events: tuple[str, ...] = field(default=EVENTS)

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        if self.depth < 1:
            raise ValueError("depth must be at least 1")
        if self.audit_every < 1:
            raise ValueError("audit_every must be at least 1")
        if self.primes is not None:
            object.__setattr__(self, "primes", tuple(sorted({int(p) for p in self.primes})))
        unknown = set(self.events) - set(EVENTS)
        if unknown:
            raise ValueError(f"unknown events {sorted(unknown)}; choose from {list(EVENTS)}")

    def to_json(self) -> dict:
        # workers is deliberately absent: it must not change the report
        return {
            "n": self.n,
            "trials": self.trials,
            "model": self.model.to_json(),
            "master_seed": self.master_seed,
            "primes": list(self.primes) if self.primes is not None else None,
            "modulus": self.modulus,
            "target": str(self.target) if self.target is not None else None,
            "depth": self.depth,
            "audit_every": self.audit_every,
            "events": list(self.events),
        }

    @classmethod
    def from_json(cls, obj: dict) -> ExperimentConfig:
        obj = dict(obj)
        model = obj.pop("model", None)
        if isinstance(model, dict):
            obj["model"] = EdgeModel.from_json(model)
        else:
            obj["model"] = model_by_name(model or "bernoulli", q=obj.pop("q", 0.5), k=obj.pop("k", 2))
        obj.pop("q", None)
        obj.pop("k", None)
        if isinstance(obj.get("target"), str):
            obj["target"] = parse_group(obj["target"])
        if "events" in obj:
            obj["events"] = tuple(obj["events"])
        allowed = set(cls.__dataclass_fields__)
        unknown = set(obj) - allowed
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        return cls(**obj)


def model_by_name(name: str, q: float = 0.5, k: int = 2) -> EdgeModel:
    if name == "bernoulli":
        return bernoulli(q)
    if name == "uniform":
        return uniform(k)
    path = Path(name)
    if path.exists():
        return EdgeModel.from_file(path)
    raise ValueError(f"unknown model {name!r}: use bernoulli, uniform or a JSON file")


def trial_rng(master_seed: int, trial_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=master_seed & _MASK64, counter=trial_index << 192))


def build_stamp() -> dict:
    try:
        described = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=10,
        )
        git = described.stdout.strip() if described.returncode == 0 else None
    except (OSError, subprocess.SubprocessError):
        git = None
    return {"package": "digraph_sandpile", "version": __version__, "git": git or None}


# --- statistics -----------------------------------------------------------


def _z(level: float) -> float:
    return NormalDist().inv_cdf(0.5 + level / 2)


def wilson_interval(successes: int, trials: int, level: float = 0.95) -> tuple[float, float]:
    if trials < 1 or not 0 <= successes <= trials:
        raise ValueError("need 0 <= successes <= trials and trials >= 1")
    z = _z(level)
    phat = successes / trials
    denom = 1 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    # clamp so the interval always contains phat despite rounding
    return min(max(0.0, center - half), phat), max(min(1.0, center + half), phat)


def total_variation(empirical: dict, theory: dict) -> float:
    """Half the L1 distance; missing theoretical mass goes to an "other" bucket."""
    emp = dict(empirical)
    thy = dict(theory)
    residual = 1.0 - sum(thy.values())
    if residual > 0:
        thy[OTHER] = thy.get(OTHER, 0.0) + residual
    keys = sorted(set(emp) | set(thy), key=str)
    return min(1.0, 0.5 * sum(abs(emp.get(k, 0.0) - thy.get(k, 0.0)) for k in keys))


# --- trials -----------------------------------------------------------------


def _audit(index: int, cfg: ExperimentConfig) -> bool:
    return index % cfg.audit_every == 0


def _dist_trial(cfg: ExperimentConfig, index: int) -> dict:
    G = sample_digraph(cfg.n, cfg.model, trial_rng(cfg.master_seed, index))
    if not is_strongly_connected(G):
        S = total_sandpile(G)
        return {"outcome": INFINITE if isinstance(S, Infinite) else NOT_STRONGLY_CONNECTED, "audited": False}
    sylow, overflow = {}, False
    for p in cfg.primes:
        parts, over = sylow_fast(G, p, cfg.depth)
        sylow[p] = parts
        overflow |= over
    audited = _audit(index, cfg)
    if audited:
        S = total_sandpile(G)
        if isinstance(S, Infinite):
            raise ConsistencyError(f"trial {index}: strongly connected but infinite")
        cap = cfg.depth + 1
        exact = {p: tuple(min(x, cap) for x in S.partition(p)) for p in cfg.primes}
        if exact != sylow:
            raise ConsistencyError(f"trial {index}: fast Sylow parts {sylow} != integral {exact}")
    outcome = LARGE if overflow else str(AbelianGroup(sylow))
    return {"outcome": outcome, "audited": audited}


def _moment_trial(cfg: ExperimentConfig, index: int) -> dict:
    G = sample_digraph(cfg.n, cfg.model, trial_rng(cfg.master_seed, index))
    # coker(M) tensor Z/a is computed directly, so no conditioning is needed
    T = tensor_fast(G, cfg.modulus)
    audited = _audit(index, cfg)
    if audited:
        S = total_sandpile(G)
        free, torsion = (S.free_rank, S.torsion) if isinstance(S, Infinite) else (0, S)
        exact = direct_sum(tensor_mod(torsion, cfg.modulus), from_cyclic_orders([cfg.modulus] * free))
        if exact != T:
            raise ConsistencyError(f"trial {index}: fast tensor {T} != integral {exact}")
    return {"sur": sur_count(T, cfg.target), "outcome": _bucket(G) or str(T), "audited": audited}


def _bucket(G) -> str | None:
    if is_strongly_connected(G):
        return None
    return INFINITE if isinstance(total_sandpile(G), Infinite) else NOT_STRONGLY_CONNECTED


def _rate_trial(cfg: ExperimentConfig, index: int) -> dict:
    G = sample_digraph(cfg.n, cfg.model, trial_rng(cfg.master_seed, index))
    sc = is_strongly_connected(G)
    S = total_sandpile_fast(G)
    audited = sc and _audit(index, cfg)
    if audited:
        exact = total_sandpile(G)
        if exact != S:
            raise ConsistencyError(f"trial {index}: fast group {S} != integral {exact}")
    infinite = isinstance(S, Infinite)
    if infinite:
        cyclic = S.free_rank == 1 and S.torsion == TRIVIAL
    else:
        cyclic = is_cyclic(S)
    events = {
        "coeulerian": S == TRIVIAL,
        "cyclic": cyclic,
        "eulerian": G.is_balanced(),
        "infinite": infinite,
        "not_strongly_connected": not sc,
    }
    outcome = INFINITE if infinite else (NOT_STRONGLY_CONNECTED if not sc else str(S))
    return {"outcome": outcome, "events": events, "audited": audited}


_TRIALS = {"distribution": _dist_trial, "moment": _moment_trial, "rate": _rate_trial}


def _run_chunk(kind: str, cfg: ExperimentConfig, indices: range) -> list[dict]:
    fn = _TRIALS[kind]
    return [fn(cfg, i) for i in indices]


def _chunks(trials: int, workers: int) -> list[range]:
    size = max(1, math.ceil(trials / (4 * workers)))
    return [range(s, min(trials, s + size)) for s in range(0, trials, size)]


def run_trials(kind: str, cfg: ExperimentConfig) -> list[dict]:
    """Per-trial records in trial order."""
    chunks = _chunks(cfg.trials, cfg.workers)
    if cfg.workers == 1:
        return [r for c in chunks for r in _run_chunk(kind, cfg, c)]
    ctx = multiprocessing.get_context("spawn")
    with ProcessPoolExecutor(max_workers=cfg.workers, mp_context=ctx) as pool:
        futures = [pool.submit(_run_chunk, kind, cfg, c) for c in chunks]
        return [r for f in futures for r in f.result()]


# --- reports ----------------------------------------------------------------


def _rate_row(count: int, trials: int) -> dict:
    lo95, hi95 = wilson_interval(count, trials, 0.95)
    lo99, hi99 = wilson_interval(count, trials, 0.99)
    return {
        "count": count,
        "frequency": count / trials,
        "ci95": [lo95, hi95],
        "ci99": [lo99, hi99],
    }


def _base_report(kind: str, cfg: ExperimentConfig, records: list[dict]) -> dict:
    counts = Counter(r["outcome"] for r in records)
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": kind,
        "config": cfg.to_json(),
        "build": build_stamp(),
        "trials": cfg.trials,
        "counts": dict(sorted(counts.items())),
        "audit": {"audited": sum(r["audited"] for r in records), "mismatches": 0},
    }


def _theory_table(primes: tuple[int, ...], depth: int, observed) -> dict[str, float]:
    groups = {}
    for H in enumerate_groups(primes, depth):
        mass = float(prob_Y(H, primes, _THEORY_TOL).value)
        if mass >= THEORY_MASS_FLOOR:
            groups[str(H)] = mass
    for H in observed:
        if str(H) not in groups:
            groups[str(H)] = float(prob_Y(H, primes, _THEORY_TOL).value)
    return groups


def run_distribution(cfg: ExperimentConfig) -> dict:
    """Empirical distribution of the P-part of S against prod Q_p / (|G||Aut G|)."""
    if not cfg.primes:
        raise ValueError("distribution runs need a nonempty set of primes")
    records = run_trials("distribution", cfg)
    report = _base_report("distribution", cfg, records)
    counts = report["counts"]
    observed = [parse_group(lbl) for lbl in counts if lbl not in (INFINITE, NOT_STRONGLY_CONNECTED, LARGE)]
    theory = _theory_table(cfg.primes, cfg.depth, observed)
    rows = []
    for label in sorted(set(counts) | set(theory)):
        row = {"outcome": label, **_rate_row(counts.get(label, 0), cfg.trials)}
        row["theory"] = theory.get(label)
        rows.append(row)
    empirical = {lbl: c / cfg.trials for lbl, c in counts.items()}
    # buckets and "large" have no listed theory; they fall into "other"
    emp_other = sum(v for k, v in empirical.items() if k not in theory)
    emp = {k: v for k, v in empirical.items() if k in theory}
    emp[OTHER] = emp_other
    report["outcomes"] = rows
    report["total_variation"] = total_variation(emp, theory)
    report["reference"] = "limiting law prod_{p in P} Q_p / (|G| |Aut G|)"
    return report


def run_moment(cfg: ExperimentConfig) -> dict:
    """Sample mean of #Sur(S tensor Z/a, G) against 1/|G|."""
    if cfg.modulus is None or cfg.modulus < 1:
        raise ValueError("moment runs need a positive modulus")
    G = cfg.target if cfg.target is not None else TRIVIAL
    if cfg.modulus % exponent(G):
        raise ValueError(f"exponent {exponent(G)} of the target does not divide the modulus {cfg.modulus}")
    if cfg.target is None:
        cfg = ExperimentConfig(**{**cfg.__dict__, "target": G})
    records = run_trials("moment", cfg)
    report = _base_report("moment", cfg, records)
    values = [r["sur"] for r in records]
    N = len(values)
    mean = Fraction(sum(values), N)
    if N > 1:
        var = Fraction(sum((v - mean) ** 2 for v in values), N - 1)
        stderr = math.sqrt(var / N)
    else:
        stderr = None
    z = _z(0.95)
    m = float(mean)
    report["sur_counts"] = {str(k): v for k, v in sorted(Counter(values).items())}
    report["mean"] = m
    report["stderr"] = stderr
    report["ci95"] = [m - z * stderr, m + z * stderr] if stderr is not None else None
    report["reference"] = {"value": 1 / order(G), "exact": f"1/{order(G)}"}
    report["deviation"] = m - 1 / order(G)
    return report


def run_event_rate(cfg: ExperimentConfig, events=None) -> dict:
    """Frequencies of structural events, each with Wilson intervals.

    The limits only bound the limsup from above; equality is a conjecture, so
    references carry "bound" and "conjectured_limit" separately.
    """
    events = tuple(events) if events is not None else cfg.events
    unknown = set(events) - set(EVENTS)
    if unknown:
        raise ValueError(f"unknown events {sorted(unknown)}")
    records = run_trials("rate", cfg)
    report = _base_report("rate", cfg, records)
    refs = _event_references()
    table = {}
    for ev in events:
        row = _rate_row(sum(r["events"][ev] for r in records), cfg.trials)
        row["wilson_half_width95"] = (row["ci95"][1] - row["ci95"][0]) / 2
        row.update(copy.deepcopy(refs.get(ev, {"bound": None, "conjectured_limit": None})))
        table[ev] = row
    report["events"] = table
    return report


@lru_cache(maxsize=1)
def _event_references() -> dict:
    Q = float(q_total(_REFERENCE_TOL).value)
    C = float(cyclic_constant(_REFERENCE_TOL).value)
    return {
        "coeulerian": {
            "bound": {"value": Q, "statement": "limsup of P(coeulerian) is at most Q"},
            "conjectured_limit": {"value": Q, "statement": "conjecture: P(coeulerian) tends to Q"},
        },
        "cyclic": {
            "bound": {"value": C, "statement": "limsup of P(S cyclic) is at most the cyclic constant"},
            "conjectured_limit": {"value": C, "statement": "conjecture: P(S cyclic) tends to the cyclic constant"},
        },
    }


def dumps_report(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def report_to_csv(report: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    kind = report["kind"]
    if kind == "distribution":
        w.writerow(["outcome", "count", "frequency", "ci95_lo", "ci95_hi", "ci99_lo", "ci99_hi", "theory"])
        for r in report["outcomes"]:
            theory = "" if r["theory"] is None else repr(r["theory"])
            w.writerow([r["outcome"], r["count"], repr(r["frequency"]), *map(repr, r["ci95"]), *map(repr, r["ci99"]), theory])
    elif kind == "rate":
        w.writerow(["event", "count", "frequency", "ci95_lo", "ci95_hi", "ci99_lo", "ci99_hi", "bound", "conjectured_limit"])
        for ev, r in report["events"].items():
            bound = "" if r["bound"] is None else repr(r["bound"]["value"])
            conj = "" if r["conjectured_limit"] is None else repr(r["conjectured_limit"]["value"])
            w.writerow([ev, r["count"], repr(r["frequency"]), *map(repr, r["ci95"]), *map(repr, r["ci99"]), bound, conj])
    else:
        w.writerow(["sur_count", "trials"])
        for k, v in report["sur_counts"].items():
            w.writerow([k, v])
        w.writerow(["mean", repr(report["mean"])])
        w.writerow(["stderr", "" if report["stderr"] is None else repr(report["stderr"])])
        w.writerow(["reference", repr(report["reference"]["value"])])
    return buf.getvalue()
