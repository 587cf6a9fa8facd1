"""Seeded Monte Carlo sessions checked against the exact oracles.

Every session splits its trials into fixed blocks of ``BLOCK_SIZE``; block
``k`` of task ``t`` draws from ``derive_substream(seed, (t, k))``.  Blocks can
therefore run on any number of worker processes (``lanes``) and the merged
tallies, hence the reports, do not depend on how they were scheduled.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Optional, Sequence

from . import entangled as ent
from .die import (
    DieState,
    RollDirection,
    hidden_measurement_probability,
    sample_roll,
    state_vector_of,
)
from .hilbert import (
    projector_for,
    sequential_joint_probability,
    total_probability_decomposition,
)
from .rng import SEED_MAX, derive_substream

BLOCK_SIZE = 8192
CI_FLOOR = 1e-9

SINGLE_ROLL = "single-roll"
SEQUENTIAL_ROLL = "sequential-roll"
CHSH_SESSION = "chsh-session"
DISCOVERY_SESSION = "discovery-session"
PROTOCOLS = (SINGLE_ROLL, SEQUENTIAL_ROLL, CHSH_SESSION, DISCOVERY_SESSION)


class InvalidConfig(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Parameters of one seeded session.

    ``protocol`` may be left as ``None``; the session fills it in when it
    echoes the configuration.  A non-``None`` protocol must match the session
    it is passed to.
    """

    seed: int
    trials: int
    protocol: Optional[str] = None
    sigma_level: float = 3.0

    def __post_init__(self):
        if isinstance(self.seed, bool) or not isinstance(self.seed, int):
            raise InvalidConfig(f"seed must be an integer, got {self.seed!r}")
        if not 0 <= self.seed <= SEED_MAX:
            raise InvalidConfig(f"seed must fit in 64 unsigned bits, got {self.seed}")
        if isinstance(self.trials, bool) or not isinstance(self.trials, int) \
                or self.trials < 1:
            raise InvalidConfig(f"trials must be a positive integer, got {self.trials!r}")
        if not (isinstance(self.sigma_level, (int, float))
                and math.isfinite(self.sigma_level) and self.sigma_level > 0):
            raise InvalidConfig(f"sigma_level must be positive, got {self.sigma_level!r}")
        if self.protocol is not None and self.protocol not in PROTOCOLS:
            raise InvalidConfig(f"unknown protocol {self.protocol!r}")

    def _for(self, protocol: str) -> "RunConfig":
        if self.protocol is not None and self.protocol != protocol:
            raise InvalidConfig(
                f"config is for protocol {self.protocol!r}, not {protocol!r}")
        return RunConfig(self.seed, self.trials, protocol, float(self.sigma_level))

    def as_dict(self) -> dict[str, Any]:
        return {"seed": self.seed, "trials": self.trials,
                "protocol": self.protocol, "sigma_level": float(self.sigma_level)}


@dataclass(frozen=True)
class FrequencyEstimate:
    count: int
    n: int
    sigma_level: float = 3.0

    def __post_init__(self):
        if self.n < 1 or not 0 <= self.count <= self.n:
            raise ValueError(f"need 0 <= count <= n and n >= 1, got {self.count}/{self.n}")

    @property
    def p_hat(self) -> float:
        return self.count / self.n

    @property
    def ci_half_width(self) -> float:
        p = self.p_hat
        return self.sigma_level * math.sqrt(p * (1.0 - p) / self.n)

    def as_dict(self) -> dict[str, Any]:
        return {"count": self.count, "n": self.n, "p_hat": self.p_hat,
                "ci_half_width": self.ci_half_width}


@dataclass(frozen=True)
class ComparisonRow:
    label: str
    analytic: float
    estimate: FrequencyEstimate

    @property
    def passed(self) -> bool:
        if min(self.analytic, 1.0 - self.analytic) <= CI_FLOOR:
            # an impossible or certain outcome admits no sampling error
            tol = CI_FLOOR
        else:
            tol = self.estimate.ci_half_width
        return abs(self.estimate.p_hat - self.analytic) <= tol

    def as_dict(self) -> dict[str, Any]:
        return {"label": self.label, "analytic": self.analytic,
                "estimate": self.estimate.as_dict(), "pass": self.passed}


@dataclass(frozen=True)
class ComparisonReport:
    config: dict
    rows: tuple[ComparisonRow, ...]
    extras: dict = field(default_factory=dict)

    @property
    def overall_pass(self) -> bool:
        return all(r.passed for r in self.rows)

    def row(self, label: str) -> ComparisonRow:
        for r in self.rows:
            if r.label == label:
                return r
        raise KeyError(label)

    def as_dict(self) -> dict[str, Any]:
        return {"config": self.config,
                "rows": [r.as_dict() for r in self.rows],
                "pass": self.overall_pass,
                "extras": self.extras}

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2)

    def to_csv(self) -> str:
        return rows_to_csv(self.rows)


CSV_COLUMNS = ("label", "analytic", "count", "n", "p_hat", "ci_half_width", "pass")


def rows_to_csv(rows: Sequence[ComparisonRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        e = r.estimate
        w.writerow([r.label, repr(r.analytic), e.count, e.n, repr(e.p_hat),
                    repr(e.ci_half_width), str(r.passed).lower()])
    return buf.getvalue()


def compare(tallies: Mapping[str, int], analytic: Mapping[str, float], n: int,
            sigma_level: float) -> tuple[ComparisonRow, ...]:
    """One row per analytic label, in the order of ``analytic``."""
    extra = set(tallies) - set(analytic)
    if extra:
        raise ValueError(f"tallied outcomes without an analytic value: {sorted(extra)}")
    return tuple(
        ComparisonRow(label, float(p),
                      FrequencyEstimate(int(tallies.get(label, 0)), n, sigma_level))
        for label, p in analytic.items())


# -- block workers (module level so they pickle for process lanes) ----------

def _reading_label(r: int) -> str:
    return f"{r:+d}"


def _block_single(seed, tag, block, count, state, direction):
    rng = derive_substream(seed, (tag, block))
    tally = Counter()
    for _ in range(count):
        tally[_reading_label(sample_roll(state, direction, rng).reading)] += 1
    return tally


def _block_sequential(seed, tag, block, count, state, first, then):
    rng = derive_substream(seed, (tag, block))
    tally = Counter()
    for _ in range(count):
        r1, collapsed = sample_roll(state, first, rng)
        r2 = sample_roll(collapsed, then, rng).reading
        tally[f"{r1:+d},{r2:+d}"] += 1
    return tally


def _block_coincidence(seed, tag, block, count, choice_a, choice_b, prepared):
    rng = derive_substream(seed, (tag, block))
    tally = Counter()
    if prepared is None:
        for _ in range(count):
            outcome, rod = ent.sample_coincidence(choice_a, choice_b, rng)
            tally[(outcome.label, rod.value)] += 1
    else:
        dist = ent.discovery_variant_distribution(prepared, choice_a, choice_b)
        for _ in range(count):
            # reading faces moves nothing, so the rod stays on
            tally[(dist.sample(rng).label, ent.RodState.CONNECTED.value)] += 1
    return tally


def _call(job):
    fn, args = job
    return fn(*args)


def _run_blocks(fn, seed: int, tag: int, trials: int, args: tuple,
                lanes: int = 1) -> Counter:
    jobs = []
    for block, start in enumerate(range(0, trials, BLOCK_SIZE)):
        count = min(BLOCK_SIZE, trials - start)
        jobs.append((fn, (seed, tag, block, count) + args))
    if lanes < 1:
        raise InvalidConfig(f"lanes must be >= 1, got {lanes}")
    if lanes == 1 or len(jobs) == 1:
        parts = [_call(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=lanes) as pool:
            parts = list(pool.map(_call, jobs))
    total = Counter()
    for p in parts:
        total.update(p)
    return total


# -- sessions ---------------------------------------------------------------

SingleOracle = Callable[[DieState, RollDirection, int], float]


def run_single_die_session(cfg: RunConfig, state: DieState, direction: RollDirection,
                           *, lanes: int = 1,
                           oracle: SingleOracle = hidden_measurement_probability
                           ) -> ComparisonReport:
    """Roll a die prepared in ``state`` ``cfg.trials`` times along ``direction``."""
    cfg = cfg._for(SINGLE_ROLL)
    state, direction = DieState(state), RollDirection(direction)
    tally = _run_blocks(_block_single, cfg.seed, 0, cfg.trials, (state, direction), lanes)
    analytic = {_reading_label(r): oracle(state, direction, r) for r in (1, -1)}
    config = cfg.as_dict() | {"state": state.value, "direction": direction.value}
    return ComparisonReport(config, compare(tally, analytic, cfg.trials, cfg.sigma_level))


SequentialOracle = Callable[[DieState, RollDirection, RollDirection, int, int], float]


def sequential_oracle(state: DieState, first: RollDirection, then: RollDirection,
                      r1: int, r2: int) -> float:
    return sequential_joint_probability(
        state_vector_of(state), projector_for(first, r1), projector_for(then, r2))


def run_sequential_session(cfg: RunConfig, state: DieState, first_dir: RollDirection,
                           then_dir: RollDirection, *, lanes: int = 1,
                           oracle: SequentialOracle = sequential_oracle
                           ) -> ComparisonReport:
    """Roll along ``first_dir``, then roll the resulting die along ``then_dir``.

    A second, independent batch of direct ``then_dir`` rolls estimates the
    marginal so the gap between it and the sum of the two sequential paths
    (the interference term) can be measured as well as computed.
    """
    cfg = cfg._for(SEQUENTIAL_ROLL)
    state = DieState(state)
    first, then = RollDirection(first_dir), RollDirection(then_dir)
    tally = _run_blocks(_block_sequential, cfg.seed, 0, cfg.trials,
                        (state, first, then), lanes)
    direct = _run_blocks(_block_single, cfg.seed, 1, cfg.trials, (state, then), lanes)

    analytic = {f"{r1:+d},{r2:+d}": oracle(state, first, then, r1, r2)
                for r1 in (1, -1) for r2 in (1, -1)}
    rows = compare(tally, analytic, cfg.trials, cfg.sigma_level)

    dec = total_probability_decomposition(
        state_vector_of(state), projector_for(first, 1), projector_for(then, 1))
    direct_est = FrequencyEstimate(direct["+1"], cfg.trials, cfg.sigma_level)
    seq_sum = (tally["+1,+1"] + tally["-1,+1"]) / cfg.trials
    extras = {
        "analytic": {
            "marginal": dec.marginal,
            "joint_then": dec.joint_then,
            "joint_complement_then": dec.joint_complement_then,
            "interference": dec.interference,
            "classical_sum": dec.classical_sum,
            "deficit": dec.marginal - dec.classical_sum,
            "residual": dec.residual,
        },
        "estimate": {
            "direct_marginal": direct_est.as_dict(),
            "sequential_sum": seq_sum,
            "deficit": direct_est.p_hat - seq_sum,
        },
    }
    config = cfg.as_dict() | {"state": state.value, "first": first.value,
                              "then": then.value}
    return ComparisonReport(config, rows, extras)


@dataclass(frozen=True)
class ChshSessionResult:
    report: ent.ChshReport
    per_pair: ComparisonReport
    estimated: ent.ChshReport
    e_ci: tuple[float, float, float, float]

    @property
    def i_ci(self) -> float:
        """Sum of the four expectation half-widths (union bound)."""
        return float(sum(self.e_ci))

    @property
    def estimated_i(self) -> float:
        return self.estimated.i_value

    def as_dict(self) -> dict[str, Any]:
        d = self.per_pair.as_dict()
        d["analytic"] = _chsh_dict(self.report) | {
            "bell_bound": ent.BELL_BOUND, "tsirelson_bound": ent.TSIRELSON_BOUND}
        d["estimate"] = _chsh_dict(self.estimated) | {
            "e_ci": list(self.e_ci), "i_ci": self.i_ci}
        return d

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2)

    def to_csv(self) -> str:
        return self.per_pair.to_csv()


def _chsh_dict(r: ent.ChshReport) -> dict[str, float]:
    return {"E_ab": r.e_ab, "E_ab'": r.e_ab_prime, "E_a'b": r.e_aprime_b,
            "E_a'b'": r.e_aprime_bprime, "I": r.i_value}


def _parse_prepared(prepared) -> tuple[DieState, DieState]:
    try:
        a, b = prepared
        return DieState(a), DieState(b)
    except (TypeError, ValueError) as exc:
        raise InvalidConfig(f"prepared must be a pair of die states, got {prepared!r}") from exc


def run_chsh_session(cfg: RunConfig, variant: str = "rolled", prepared=None, *,
                     lanes: int = 1) -> ChshSessionResult:
    """Run ``cfg.trials`` coincidences for each of the four choice pairs.

    ``variant="rolled"`` uses the rod-linked joint roll; ``"discovery"``
    replaces the roll by reading the faces of the ``prepared`` pair.
    """
    if variant == "rolled":
        if prepared is not None:
            raise InvalidConfig("the rolled variant takes no prepared configuration")
        cfg = cfg._for(CHSH_SESSION)
        source = ent.coincidence_distribution
    elif variant == "discovery":
        cfg = cfg._for(DISCOVERY_SESSION)
        prepared = _parse_prepared(prepared)
        source = ent.discovery_source(prepared)
    else:
        raise InvalidConfig(f"unknown CHSH variant {variant!r}")

    n = cfg.trials
    tallies: dict[str, int] = {}
    analytic: dict[str, float] = {}
    e_hat, e_half = [], []
    anti_violations = 0
    detached = {}
    for tag, ((ca, cb), pl) in enumerate(zip(ent.CHOICE_PAIRS, ent.PAIR_LABELS)):
        raw = _run_blocks(_block_coincidence, cfg.seed, tag, n, (ca, cb, prepared), lanes)
        outcome_counts = Counter()
        for (label, rod), c in raw.items():
            outcome_counts[label] += c
            if rod == ent.RodState.DETACHED.value:
                detached[pl] = detached.get(pl, 0) + c
        detached.setdefault(pl, 0)
        dist = source(ca, cb)
        for o in ent.OUTCOMES:
            key = f"{pl}:{o.label}"
            analytic[key] = dist[o]
            if outcome_counts[o.label]:
                tallies[key] = outcome_counts[o.label]
        same = outcome_counts["+1,+1"] + outcome_counts["-1,-1"]
        q = FrequencyEstimate(same, n, cfg.sigma_level)
        e_hat.append(2.0 * q.p_hat - 1.0)
        e_half.append(2.0 * q.ci_half_width)
        if variant == "rolled" and (ca, cb) == ent.CHOICE_PAIRS[0]:
            anti_violations = same

    per_pair = ComparisonReport(
        cfg.as_dict() | {"variant": variant,
                         "prepared": None if prepared is None else [p.value for p in prepared]},
        compare(tallies, analytic, n, cfg.sigma_level),
        {"rod_detached": detached,
         "anticorrelation_violations": anti_violations},
    )
    return ChshSessionResult(
        report=ent.chsh_value(source),
        per_pair=per_pair,
        estimated=ent.ChshReport.from_expectations(*e_hat),
        e_ci=tuple(e_half),
    )


def run_from_config(config: Mapping[str, Any], *, lanes: int = 1):
    """Replay a session from the ``config`` block of a serialized report."""
    cfg = RunConfig(int(config["seed"]), int(config["trials"]), config["protocol"],
                    float(config.get("sigma_level", 3.0)))
    if cfg.protocol == SINGLE_ROLL:
        return run_single_die_session(cfg, DieState(config["state"]),
                                      RollDirection(config["direction"]), lanes=lanes)
    if cfg.protocol == SEQUENTIAL_ROLL:
        return run_sequential_session(cfg, DieState(config["state"]),
                                      RollDirection(config["first"]),
                                      RollDirection(config["then"]), lanes=lanes)
    if cfg.protocol == CHSH_SESSION:
        return run_chsh_session(cfg, "rolled", lanes=lanes)
    if cfg.protocol == DISCOVERY_SESSION:
        return run_chsh_session(cfg, "discovery", config["prepared"], lanes=lanes)
    raise InvalidConfig(f"config has no protocol: {dict(config)!r}")
