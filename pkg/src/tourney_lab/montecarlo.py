"""Truth rankings, mass tournament replicates and format comparison.

Determinism contract: replicate k of plan p draws every sample from a stream
derived solely from (master_seed, p, k). Streams are built by feeding the
key into a :class:`numpy.random.SeedSequence`, never by sharing a sequential
generator, so results are identical for any worker count or completion order.
Aggregation is keyed by replicate index.

The truth ranking is a point estimate over the full pool. Replicates are
bootstrap-sampled from that same pool, which makes the experiment in-sample
by construction; adjacent-stability bootstrap probabilities are reported so
the fragility of the truth ordering itself is visible alongside.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .formats import FormatPlan, SeedingPolicy, execute, plan_from_token
from .model import ResultPool
from .ranking import (
    PointsTable,
    Ranking,
    SchemeKind,
    l1_distance,
    rank_from_points,
    rank_order,
    round_half_away,
    scheme_totals,
)

_U64 = (1 << 64) - 1
_BOOTSTRAP_BLOCK = 256


def _hash64(text: str) -> int:
    """Stable 64-bit key for a string (independent of PYTHONHASHSEED)."""
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "big")


def derive_rng(master_seed: int, *key: int | str) -> np.random.Generator:
    """Independent stream for (master_seed, key...); pure function of its args."""
    entropy = [master_seed & _U64]
    for part in key:
        entropy.append(_hash64(part) if isinstance(part, str) else part & _U64)
    return np.random.default_rng(np.random.SeedSequence(entropy))


def replicate_rng(master_seed: int, plan_id: str, replicate: int) -> np.random.Generator:
    """The stream for one tournament replicate."""
    return derive_rng(master_seed, plan_id, replicate)


@dataclass(frozen=True)
class ExperimentConfig:
    """Inputs that fully determine an experiment's results.

    ``worker_count_hint`` only schedules work; it never changes output.
    """

    plans: tuple[str, ...]
    replicates: int = 10_000
    master_seed: int = 0
    scheme: SchemeKind = SchemeKind.CONTINUOUS
    seeding_policy: SeedingPolicy = SeedingPolicy.RANDOM_PER_REPLICATE
    worker_count_hint: int = 1

    def __post_init__(self) -> None:
        if not self.plans:
            raise ValueError("config needs at least one plan")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if self.worker_count_hint < 1:
            raise ValueError("worker_count_hint must be >= 1")


@dataclass(frozen=True)
class TruthReport:
    """Point-estimate ranking over a full pool, with bootstrap stability of
    each adjacent rank pair (probability the pair keeps its order when the
    pool is resampled)."""

    ranking: Ranking
    totals: PointsTable
    adjacent_stability: np.ndarray | None


def estimate_truth(
    pool: ResultPool,
    scheme: SchemeKind = SchemeKind.CONTINUOUS,
    bootstrap_rounds: int = 1000,
    seed: int = 0,
) -> TruthReport:
    """Rank the full pool; optionally bootstrap adjacent-pair stability.

    The ranking itself uses no randomness. With ``bootstrap_rounds`` 0 the
    stability estimate is omitted.
    """
    table = scheme_totals(pool, scheme)
    ranking = rank_from_points(table)
    stability = None
    if bootstrap_rounds > 0:
        stability = _adjacent_stability(pool, scheme, ranking, bootstrap_rounds, seed)
    return TruthReport(ranking=ranking, totals=table, adjacent_stability=stability)


def _adjacent_stability(
    pool: ResultPool,
    scheme: SchemeKind,
    ranking: Ranking,
    rounds: int,
    seed: int,
) -> np.ndarray:
    n = len(pool.teams)
    rng = derive_rng(seed, "truth-bootstrap")
    order = ranking.order()
    upper, lower = order[:-1], order[1:]
    kept = np.zeros(n - 1)

    done = 0
    while done < rounds:
        block = min(_BOOTSTRAP_BLOCK, rounds - done)
        pts = np.zeros((block, n))
        gd = np.zeros((block, n))
        gf = np.zeros((block, n))
        for i, j in pool.teams.pairs():
            games = pool.games_for(i, j)
            m = len(games)
            idx = rng.integers(m, size=(block, m))
            gi = games[:, 0][idx]
            gj = games[:, 1][idx]
            mean_gi = gi.mean(axis=1)
            mean_gj = gj.mean(axis=1)
            if scheme is SchemeKind.CONTINUOUS:
                pi = np.where(gi > gj, 3.0, np.where(gi < gj, 0.0, 1.0)).mean(axis=1)
                pj = np.where(gj > gi, 3.0, np.where(gj < gi, 0.0, 1.0)).mean(axis=1)
            else:
                mean_gi = round_half_away(mean_gi)
                mean_gj = round_half_away(mean_gj)
                pi = np.where(mean_gi > mean_gj, 3.0, np.where(mean_gi < mean_gj, 0.0, 1.0))
                pj = np.where(mean_gj > mean_gi, 3.0, np.where(mean_gj < mean_gi, 0.0, 1.0))
            pts[:, i] += pi
            pts[:, j] += pj
            gd[:, i] += mean_gi - mean_gj
            gd[:, j] += mean_gj - mean_gi
            gf[:, i] += mean_gi
            gf[:, j] += mean_gj
        rank_of = np.empty(n, dtype=np.int64)
        for r in range(block):
            o = rank_order(pts[r], gd[r], gf[r])
            rank_of[o] = np.arange(1, n + 1)
            kept += rank_of[upper] < rank_of[lower]
        done += block

    return kept / rounds


@dataclass(frozen=True)
class DiscrepancyDistribution:
    """All replicate d1 values for one format, plus summary statistics."""

    format_id: str
    d1_values: np.ndarray
    max_d1: int

    def __post_init__(self) -> None:
        values = np.asarray(self.d1_values, dtype=np.int64)
        if (values < 0).any() or (values > self.max_d1).any():
            raise ValueError(f"{self.format_id}: d1 values outside [0, {self.max_d1}]")
        if (values % 2 != 0).any():
            raise ValueError(f"{self.format_id}: d1 values must be even")
        values.setflags(write=False)
        object.__setattr__(self, "d1_values", values)

    @property
    def replicates(self) -> int:
        return len(self.d1_values)

    @property
    def mean(self) -> float:
        return float(self.d1_values.mean())

    @property
    def median(self) -> float:
        return float(np.median(self.d1_values))

    @property
    def percentile_5(self) -> float:
        return float(np.percentile(self.d1_values, 5))

    @property
    def percentile_95(self) -> float:
        return float(np.percentile(self.d1_values, 95))

    def histogram(self) -> tuple[np.ndarray, np.ndarray]:
        """Counts over the even bins 0, 2, ..., max_d1; mass = replicates."""
        bins = np.arange(0, self.max_d1 + 2, 2)
        counts = np.bincount(self.d1_values // 2, minlength=len(bins))
        return bins, counts[: len(bins)]

    def summary(self) -> dict:
        bins, counts = self.histogram()
        return {
            "format": self.format_id,
            "replicates": self.replicates,
            "mean": self.mean,
            "median": self.median,
            "p5": self.percentile_5,
            "p95": self.percentile_95,
            "histogram": {"d1": bins.tolist(), "count": counts.tolist()},
        }


def simulate_replicate(
    plan: FormatPlan,
    pool: ResultPool,
    truth: Ranking,
    master_seed: int,
    replicate: int,
) -> int:
    """d1 between one simulated tournament and the truth ranking."""
    rng = replicate_rng(master_seed, plan.id, replicate)
    outcome = execute(plan, pool, rng)
    return l1_distance(outcome.final_ranking, truth)


def _d1_chunk(args: tuple) -> list[int]:
    plan, pool, truth, master_seed, start, stop = args
    return [
        simulate_replicate(plan, pool, truth, master_seed, k)
        for k in range(start, stop)
    ]


def replicate_d1_values(
    plan: FormatPlan,
    pool: ResultPool,
    truth: Ranking,
    master_seed: int,
    replicates: int,
    workers: int = 1,
) -> np.ndarray:
    """d1 for replicates 0..replicates-1 of one plan, in replicate order.

    ``workers`` splits the replicate range across processes; each replicate
    still derives its own stream, so the result is identical for any value.
    """
    if workers <= 1 or replicates < 64:
        values = _d1_chunk((plan, pool, truth, master_seed, 0, replicates))
        return np.array(values, dtype=np.int64)

    bounds = np.linspace(0, replicates, num=workers * 4 + 1, dtype=int)
    chunks = [
        (plan, pool, truth, master_seed, int(lo), int(hi))
        for lo, hi in zip(bounds[:-1], bounds[1:])
        if hi > lo
    ]
    out = np.empty(replicates, dtype=np.int64)
    with ProcessPoolExecutor(max_workers=workers) as pool_exec:
        for (_, _, _, _, lo, hi), values in zip(chunks, pool_exec.map(_d1_chunk, chunks)):
            out[lo:hi] = values
    return out


def run_experiment(
    config: ExperimentConfig,
    pool: ResultPool,
    truth: Ranking,
) -> list[DiscrepancyDistribution]:
    """Replicate every plan in the config against one truth ranking."""
    if truth.teams != pool.teams:
        raise ValueError("truth ranking is over a different team set than the pool")
    n = len(pool.teams)
    max_d1 = n * n // 2
    distributions = []
    for token in config.plans:
        plan = plan_from_token(token, seeding=config.seeding_policy, n_teams=n)
        values = replicate_d1_values(
            plan, pool, truth, config.master_seed, config.replicates,
            workers=config.worker_count_hint,
        )
        distributions.append(
            DiscrepancyDistribution(format_id=token, d1_values=values, max_d1=max_d1)
        )
    return distributions


@dataclass(frozen=True)
class PairwiseDiff:
    format_a: str
    format_b: str
    mean_diff: float
    ci_low: float
    ci_high: float
    conclusive: bool


@dataclass(frozen=True)
class ComparisonReport:
    """Formats ordered best (smallest mean d1) first, with pairwise mean
    differences and bootstrap confidence intervals."""

    summaries: tuple[dict, ...]
    pairwise: tuple[PairwiseDiff, ...]
    ordering: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "formats": list(self.summaries),
            "pairwise": [
                {
                    "format_a": p.format_a,
                    "format_b": p.format_b,
                    "mean_diff": p.mean_diff,
                    "ci95_low": p.ci_low,
                    "ci95_high": p.ci_high,
                    "conclusive": p.conclusive,
                }
                for p in self.pairwise
            ],
            "ordering_by_mean_d1": list(self.ordering),
        }


def compare_formats(
    distributions: list[DiscrepancyDistribution],
    resamples: int = 1000,
    seed: int = 0,
) -> ComparisonReport:
    """Summaries, pairwise bootstrap CIs on mean differences, and an ordering.

    A pairwise difference whose 95% interval covers zero is flagged
    inconclusive. Requires at least two distributions with equal replicate
    counts.
    """
    if len(distributions) < 2:
        raise ValueError("need at least two distributions to compare")
    counts = {d.replicates for d in distributions}
    if len(counts) != 1:
        raise ValueError(f"replicate counts differ: {sorted(counts)}")

    pairwise = []
    for i in range(len(distributions)):
        for j in range(i + 1, len(distributions)):
            a, b = distributions[i], distributions[j]
            diff = a.mean - b.mean
            lo, hi = _bootstrap_mean_diff_ci(
                a.d1_values, b.d1_values, resamples,
                derive_rng(seed, "compare", a.format_id, b.format_id),
            )
            pairwise.append(
                PairwiseDiff(
                    format_a=a.format_id,
                    format_b=b.format_id,
                    mean_diff=diff,
                    ci_low=lo,
                    ci_high=hi,
                    conclusive=not (lo <= 0.0 <= hi),
                )
            )

    ordering = tuple(
        d.format_id for d in sorted(distributions, key=lambda d: (d.mean, d.format_id))
    )
    return ComparisonReport(
        summaries=tuple(d.summary() for d in distributions),
        pairwise=tuple(pairwise),
        ordering=ordering,
    )


def _bootstrap_mean_diff_ci(
    a: np.ndarray, b: np.ndarray, resamples: int, rng: np.random.Generator
) -> tuple[float, float]:
    n = len(a)
    diffs = np.empty(resamples)
    for r in range(resamples):
        diffs[r] = a[rng.integers(n, size=n)].mean() - b[rng.integers(n, size=n)].mean()
    lo, hi = np.percentile(diffs, [2.5, 97.5])
    return float(lo), float(hi)
