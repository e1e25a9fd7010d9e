"""Point schemes, rankings and the L1 rank distance.

Two point schemes are supported. The continuous scheme sums, over opponents,
the mean 3/1/0 points earned across all games against that opponent. The
discrete scheme first rounds each pair's mean scoreline to the nearest
integers (halves away from zero) and awards 3/1/0 on the rounded pair;
this is the scheme with discretisation boundary effects, so continuous is
the default everywhere.

Rankings are dense permutations of 1..n. Ties never surface as shared ranks:
they are broken by goal difference, then goals scored, then lower team index,
so ranking construction is fully deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable

import numpy as np

from .model import ResultPool, Scoreline, TeamSet


class SchemeKind(Enum):
    CONTINUOUS = "continuous"
    DISCRETE = "discrete"

    @classmethod
    def from_token(cls, token: str) -> "SchemeKind":
        try:
            return cls(token.lower())
        except ValueError:
            valid = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown scheme {token!r} (valid: {valid})") from None


class Ranking:
    """Assignment of ranks 1..n to the n teams of a team set.

    ``rank_of[i]`` is team i's rank; rank 1 is best. The vector is always a
    bijection onto {1..n}.
    """

    __slots__ = ("teams", "rank_of")

    def __init__(self, teams: TeamSet, rank_of: Iterable[int], _checked: bool = False):
        ranks = np.asarray(rank_of, dtype=np.int64)
        if not _checked:
            n = len(teams)
            if ranks.shape != (n,):
                raise ValueError(f"rank vector must have length {n}")
            if not np.array_equal(np.sort(ranks), np.arange(1, n + 1)):
                raise ValueError("ranks must be a permutation of 1..n")
        self.teams = teams
        self.rank_of = ranks
        self.rank_of.setflags(write=False)

    def order(self) -> np.ndarray:
        """Team indices from rank 1 to rank n."""
        return np.argsort(self.rank_of, kind="stable")

    def to_lines(self) -> list[str]:
        """Serialized form: one team name per line, rank 1 first."""
        return [self.teams.names[i] for i in self.order()]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Ranking):
            return NotImplemented
        return self.teams == other.teams and np.array_equal(self.rank_of, other.rank_of)

    def __repr__(self) -> str:
        return f"Ranking({' > '.join(self.to_lines())})"


def ranking_from_lines(teams: TeamSet, lines: Iterable[str]) -> Ranking:
    """Inverse of :meth:`Ranking.to_lines`; validates coverage of the team set."""
    names = [line.strip() for line in lines if line.strip()]
    if sorted(names) != sorted(teams.names):
        raise ValueError("ranking lines must list every team exactly once")
    rank_of = np.empty(len(teams), dtype=np.int64)
    for rank, name in enumerate(names, start=1):
        rank_of[teams.index_of(name)] = rank
    return Ranking(teams, rank_of, _checked=True)


@dataclass(frozen=True)
class PointsTable:
    """Per-team totals plus the deterministic tie-break keys."""

    teams: TeamSet
    totals: np.ndarray
    goal_diff: np.ndarray
    goals_for: np.ndarray


def game_points(s: Scoreline) -> tuple[int, int]:
    """3 for a win, 1 for a draw, 0 for a loss."""
    if s.goals_first > s.goals_second:
        return 3, 0
    if s.goals_first < s.goals_second:
        return 0, 3
    return 1, 1


def round_half_away(x: np.ndarray | float) -> np.ndarray | float:
    """Round to nearest integer, halves away from zero (scores are >= 0)."""
    return np.floor(np.asarray(x, dtype=float) + 0.5)


def continuous_totals(pool: ResultPool) -> PointsTable:
    """Sum over opponents of the mean 3/1/0 points earned against them.

    Tie-break keys are the mean goal difference and mean goals scored,
    summed over opponents.
    """
    n = len(pool.teams)
    totals = np.zeros(n)
    goal_diff = np.zeros(n)
    goals_for = np.zeros(n)
    for i, j in pool.teams.pairs():
        s = pool.pair_summary(i, j)
        totals[i] += s.mean_points_first
        totals[j] += s.mean_points_second
        goal_diff[i] += s.mean_goals_first - s.mean_goals_second
        goal_diff[j] += s.mean_goals_second - s.mean_goals_first
        goals_for[i] += s.mean_goals_first
        goals_for[j] += s.mean_goals_second
    return PointsTable(pool.teams, totals, goal_diff, goals_for)


def discrete_totals(pool: ResultPool) -> PointsTable:
    """Award 3/1/0 on each pair's mean scoreline rounded to whole goals.

    Tie-break keys use the rounded per-pair scores, matching the scheme's
    discretised view of the data.
    """
    n = len(pool.teams)
    totals = np.zeros(n)
    goal_diff = np.zeros(n)
    goals_for = np.zeros(n)
    for i, j in pool.teams.pairs():
        s = pool.pair_summary(i, j)
        gi = float(round_half_away(s.mean_goals_first))
        gj = float(round_half_away(s.mean_goals_second))
        pi, pj = game_points(Scoreline(int(gi), int(gj)))
        totals[i] += pi
        totals[j] += pj
        goal_diff[i] += gi - gj
        goal_diff[j] += gj - gi
        goals_for[i] += gi
        goals_for[j] += gj
    return PointsTable(pool.teams, totals, goal_diff, goals_for)


def scheme_totals(pool: ResultPool, scheme: SchemeKind) -> PointsTable:
    if scheme is SchemeKind.CONTINUOUS:
        return continuous_totals(pool)
    return discrete_totals(pool)


def rank_from_points(table: PointsTable) -> Ranking:
    """Rank 1 = highest total; ties broken by goal difference, then goals
    scored, then lower team index."""
    order = rank_order(table.totals, table.goal_diff, table.goals_for)
    rank_of = np.empty(len(order), dtype=np.int64)
    rank_of[order] = np.arange(1, len(order) + 1)
    return Ranking(table.teams, rank_of, _checked=True)


def rank_order(
    totals: np.ndarray, goal_diff: np.ndarray, goals_for: np.ndarray
) -> np.ndarray:
    """Team indices best-first under the standard tie-break chain.

    lexsort's final key dominates; ascending index order is the built-in
    last-resort tie-break.
    """
    return np.lexsort((-goals_for, -goal_diff, -totals))


def l1_distance(a: Ranking, b: Ranking) -> int:
    """Sum over teams of the absolute rank difference between two rankings.

    A metric on rankings of the same team set: zero iff equal, symmetric,
    triangle inequality; always even and at most floor(n^2 / 2).
    """
    if a.teams != b.teams:
        raise ValueError("rankings are over different team sets")
    return int(np.abs(a.rank_of - b.rank_of).sum())
