"""Declarative tournament plans and their execution engine.

A plan is a sequence of stages over named slots. Seeding binds teams to the
slots ``seed1..seedN``; every later stage consumes slots produced earlier and
produces new ones (group positions, game winners/losers). Final ranks come
either from classification games, each deciding one adjacent rank pair, or
from direct slot-to-rank assignments on the plan.

Three historical 8-team formats are built in, alongside a configurable pure
round-robin:

* ``rc2012``       - two groups of four, two-legged cross semifinals, then
                     classification games (20 fixtures; semifinalists play 6
                     games, the rest 4).
* ``rc2013-de``    - double elimination without a grand-final bracket reset
                     (14 bracket games, i.e. 2n-2) plus 2 classification
                     games for ranks 5/6 and 7/8.
* ``rc2014-hybrid``- full round-robin (28 games) plus 4 classification games
                     for each adjacent rank pair (32 fixtures).
* ``round-robin:g``- every pair meets g times, ranked by mean points.

Knockout fixtures need a winner, but sampled scorelines can be draws: the
engine resamples the same pair's pool up to 100 times and takes the first
decisive result; if every attempt draws, an unbiased coin from the execution's
stream decides, recorded in the fixture's resolution note. Two-legged ties
are decided on aggregate goals, with an aggregate draw falling through to one
extra decisive sample. Resamples and deciders are resolution machinery, not
fixtures; they never count toward game totals.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .model import ResultPool, Scoreline, TeamSet, sample_game
from .ranking import Ranking, continuous_totals, rank_from_points

RESAMPLE_CAP = 100

VALID_PLAN_TOKENS = ("rc2012", "rc2013-de", "rc2014-hybrid", "round-robin:<g>")


class FormatError(ValueError):
    """Malformed plan, or a plan applied to an unsupported team count."""


class SeedingPolicy(Enum):
    RANDOM_PER_REPLICATE = "random"
    TRUTH_SEEDED = "truth"

    @classmethod
    def from_token(cls, token: str) -> "SeedingPolicy":
        try:
            return cls(token.lower())
        except ValueError:
            valid = ", ".join(p.value for p in cls)
            raise ValueError(f"unknown seeding policy {token!r} (valid: {valid})") from None


@dataclass(frozen=True)
class GroupRoundRobin:
    """Round-robin among the entrant slots; binds ``<label><pos>`` slots,
    position 1 = group winner."""

    label: str
    entrants: tuple[str, ...]
    games_per_pairing: int = 1

    @property
    def produced(self) -> tuple[str, ...]:
        return tuple(f"{self.label}{pos}" for pos in range(1, len(self.entrants) + 1))


@dataclass(frozen=True)
class BracketGame:
    name: str
    slot_a: str
    slot_b: str
    winner_slot: str
    loser_slot: str


@dataclass(frozen=True)
class Bracket:
    """An ordered set of decisive games over named slots. Single- and
    double-elimination topologies are both just wiring between slots."""

    name: str
    games: tuple[BracketGame, ...]


@dataclass(frozen=True)
class TwoLeggedTie:
    """Two games with sides swapped, decided on aggregate goals."""

    name: str
    slot_a: str
    slot_b: str
    winner_slot: str
    loser_slot: str


@dataclass(frozen=True)
class ClassificationPair:
    """One decisive game deciding the adjacent rank pair (k, k+1)."""

    name: str
    slot_a: str
    slot_b: str
    ranks: tuple[int, int]


StageSpec = GroupRoundRobin | Bracket | TwoLeggedTie | ClassificationPair


@dataclass(frozen=True)
class FormatPlan:
    id: str
    n_teams: int
    stages: tuple[StageSpec, ...]
    slot_ranks: dict[str, int] = field(default_factory=dict)
    seeding_policy: SeedingPolicy = SeedingPolicy.RANDOM_PER_REPLICATE
    expected_fixtures: int | None = None

    def __post_init__(self) -> None:
        self._validate()

    def _validate(self) -> None:
        """Every stage input must be produced earlier; ranks must tile 1..n."""
        available = {f"seed{r}" for r in range(1, self.n_teams + 1)}
        ranks_assigned: list[int] = sorted(self.slot_ranks.values())

        def need(slot: str, where: str) -> None:
            if slot not in available:
                raise FormatError(f"{self.id}: stage {where} references unknown slot {slot!r}")

        def produce(slot: str, where: str) -> None:
            if slot in available:
                raise FormatError(f"{self.id}: stage {where} redefines slot {slot!r}")
            available.add(slot)

        for stage in self.stages:
            if isinstance(stage, GroupRoundRobin):
                if len(set(stage.entrants)) != len(stage.entrants) or len(stage.entrants) < 2:
                    raise FormatError(f"{self.id}: group {stage.label} entrants invalid")
                if stage.games_per_pairing < 1:
                    raise FormatError(f"{self.id}: games_per_pairing must be >= 1")
                for slot in stage.entrants:
                    need(slot, stage.label)
                for slot in stage.produced:
                    produce(slot, stage.label)
            elif isinstance(stage, Bracket):
                for game in stage.games:
                    need(game.slot_a, game.name)
                    need(game.slot_b, game.name)
                    produce(game.winner_slot, game.name)
                    produce(game.loser_slot, game.name)
            elif isinstance(stage, TwoLeggedTie):
                need(stage.slot_a, stage.name)
                need(stage.slot_b, stage.name)
                produce(stage.winner_slot, stage.name)
                produce(stage.loser_slot, stage.name)
            elif isinstance(stage, ClassificationPair):
                need(stage.slot_a, stage.name)
                need(stage.slot_b, stage.name)
                lo, hi = stage.ranks
                if hi != lo + 1:
                    raise FormatError(f"{self.id}: {stage.name} must decide adjacent ranks")
                ranks_assigned += [lo, hi]
            else:
                raise FormatError(f"{self.id}: unknown stage kind {type(stage).__name__}")

        for slot in self.slot_ranks:
            if slot not in available:
                raise FormatError(f"{self.id}: slot_ranks references unknown slot {slot!r}")
        if sorted(ranks_assigned) != list(range(1, self.n_teams + 1)):
            raise FormatError(
                f"{self.id}: ranks assigned {sorted(ranks_assigned)} do not tile 1..{self.n_teams}"
            )


@dataclass(frozen=True, slots=True)
class FixtureRecord:
    stage: str
    first: int
    second: int
    scoreline: Scoreline
    resolution: str


@dataclass(frozen=True)
class TournamentOutcome:
    plan_id: str
    teams: TeamSet
    fixtures: tuple[FixtureRecord, ...]
    final_ranking: Ranking
    games_played_total: int
    games_played_per_team: np.ndarray


def outcome_csv_rows(outcome: TournamentOutcome) -> list[str]:
    """One fixture per row: ``stage,team_a,team_b,goals_a,goals_b,resolution``."""
    names = outcome.teams.names
    rows = ["stage,team_a,team_b,goals_a,goals_b,resolution"]
    for fx in outcome.fixtures:
        rows.append(
            f"{fx.stage},{names[fx.first]},{names[fx.second]},"
            f"{fx.scoreline.goals_first},{fx.scoreline.goals_second},{fx.resolution}"
        )
    return rows


# --- plan constructors -----------------------------------------------------

def plan_rc2014_hybrid(
    seeding: SeedingPolicy = SeedingPolicy.RANDOM_PER_REPLICATE,
) -> FormatPlan:
    """Full 8-team round-robin, then classification games 1v2/3v4/5v6/7v8."""
    seeds = tuple(f"seed{r}" for r in range(1, 9))
    stages: list[StageSpec] = [GroupRoundRobin("R", seeds, 1)]
    for k in (1, 3, 5, 7):
        stages.append(ClassificationPair(f"classify-{k}v{k + 1}", f"R{k}", f"R{k + 1}", (k, k + 1)))
    return FormatPlan(
        id="rc2014-hybrid",
        n_teams=8,
        stages=tuple(stages),
        seeding_policy=seeding,
        expected_fixtures=32,
    )


def plan_rc2013_double_elim(
    seeding: SeedingPolicy = SeedingPolicy.RANDOM_PER_REPLICATE,
) -> FormatPlan:
    """8-team double elimination, no grand-final reset, 2 classification games.

    Winners bracket 4+2+1 games, losers bracket 2+2+1+1, single grand final:
    14 bracket games. The grand final decides ranks 1/2, the losers-bracket
    final and semifinal losers take ranks 3 and 4, losers-round-2 losers play
    for 5/6 and losers-round-1 losers for 7/8.
    """
    games = (
        # winners bracket, standard slot template
        BracketGame("wb-qf1", "seed1", "seed8", "wq1w", "wq1l"),
        BracketGame("wb-qf2", "seed4", "seed5", "wq2w", "wq2l"),
        BracketGame("wb-qf3", "seed2", "seed7", "wq3w", "wq3l"),
        BracketGame("wb-qf4", "seed3", "seed6", "wq4w", "wq4l"),
        BracketGame("wb-sf1", "wq1w", "wq2w", "ws1w", "ws1l"),
        BracketGame("wb-sf2", "wq3w", "wq4w", "ws2w", "ws2l"),
        BracketGame("wb-final", "ws1w", "ws2w", "wfw", "wfl"),
        # losers bracket; round 2 cross-pairs to avoid immediate rematches
        BracketGame("lb-r1g1", "wq1l", "wq2l", "l1g1w", "l1g1l"),
        BracketGame("lb-r1g2", "wq3l", "wq4l", "l1g2w", "l1g2l"),
        BracketGame("lb-r2g1", "ws2l", "l1g1w", "l2g1w", "l2g1l"),
        BracketGame("lb-r2g2", "ws1l", "l1g2w", "l2g2w", "l2g2l"),
        BracketGame("lb-r3", "l2g1w", "l2g2w", "l3w", "l3l"),
        BracketGame("lb-final", "wfl", "l3w", "lfw", "lfl"),
    )
    stages: tuple[StageSpec, ...] = (
        Bracket("double-elim", games),
        ClassificationPair("grand-final", "wfw", "lfw", (1, 2)),
        ClassificationPair("classify-5v6", "l2g1l", "l2g2l", (5, 6)),
        ClassificationPair("classify-7v8", "l1g1l", "l1g2l", (7, 8)),
    )
    return FormatPlan(
        id="rc2013-de",
        n_teams=8,
        stages=stages,
        slot_ranks={"lfl": 3, "l3l": 4},
        seeding_policy=seeding,
        expected_fixtures=16,
    )


def plan_rc2012(
    seeding: SeedingPolicy = SeedingPolicy.RANDOM_PER_REPLICATE,
) -> FormatPlan:
    """Two snake-seeded groups of four, two-legged cross semifinals, then
    one classification game per adjacent rank pair.

    Group winners and runners-up play 3 group games, 2 semifinal legs and one
    final/classification game (6 each); the bottom half plays 4.
    """
    stages: tuple[StageSpec, ...] = (
        GroupRoundRobin("A", ("seed1", "seed4", "seed5", "seed8"), 1),
        GroupRoundRobin("B", ("seed2", "seed3", "seed6", "seed7"), 1),
        TwoLeggedTie("semi-1", "A1", "B2", "sf1w", "sf1l"),
        TwoLeggedTie("semi-2", "B1", "A2", "sf2w", "sf2l"),
        ClassificationPair("final", "sf1w", "sf2w", (1, 2)),
        ClassificationPair("classify-3v4", "sf1l", "sf2l", (3, 4)),
        ClassificationPair("classify-5v6", "A3", "B3", (5, 6)),
        ClassificationPair("classify-7v8", "A4", "B4", (7, 8)),
    )
    return FormatPlan(
        id="rc2012",
        n_teams=8,
        stages=stages,
        seeding_policy=seeding,
        expected_fixtures=20,
    )


def plan_pure_round_robin(
    games_per_pairing: int,
    n_teams: int = 8,
    seeding: SeedingPolicy = SeedingPolicy.RANDOM_PER_REPLICATE,
) -> FormatPlan:
    """Every pair meets ``games_per_pairing`` times; mean points rank directly."""
    if n_teams < 2:
        raise FormatError("round robin needs at least 2 teams")
    if games_per_pairing < 1:
        raise FormatError("games_per_pairing must be >= 1")
    seeds = tuple(f"seed{r}" for r in range(1, n_teams + 1))
    stage = GroupRoundRobin("R", seeds, games_per_pairing)
    return FormatPlan(
        id=f"round-robin:{games_per_pairing}",
        n_teams=n_teams,
        stages=(stage,),
        slot_ranks={f"R{k}": k for k in range(1, n_teams + 1)},
        seeding_policy=seeding,
        expected_fixtures=n_teams * (n_teams - 1) // 2 * games_per_pairing,
    )


def plan_from_token(
    token: str,
    seeding: SeedingPolicy = SeedingPolicy.RANDOM_PER_REPLICATE,
    n_teams: int = 8,
) -> FormatPlan:
    """Resolve a CLI plan token (``rc2012``, ``rc2013-de``, ``rc2014-hybrid``,
    ``round-robin:<g>``) to its plan."""
    if token == "rc2012":
        return plan_rc2012(seeding)
    if token == "rc2013-de":
        return plan_rc2013_double_elim(seeding)
    if token == "rc2014-hybrid":
        return plan_rc2014_hybrid(seeding)
    if token.startswith("round-robin:"):
        raw = token.split(":", 1)[1]
        try:
            games = int(raw)
        except ValueError:
            games = 0
        if games < 1:
            raise FormatError(f"bad round-robin game count in token {token!r}")
        return plan_pure_round_robin(games, n_teams=n_teams, seeding=seeding)
    raise FormatError(
        f"unknown format token {token!r} (valid: {', '.join(VALID_PLAN_TOKENS)})"
    )


# --- execution -------------------------------------------------------------

def execute(plan: FormatPlan, pool: ResultPool, rng: np.random.Generator) -> TournamentOutcome:
    """Play out one tournament by bootstrap-sampling every fixture's scoreline.

    Deterministic function of (plan, pool, rng state). The rng must be
    dedicated to this execution; concurrent executions need distinct streams.
    """
    n = len(pool.teams)
    if n != plan.n_teams:
        raise FormatError(
            f"plan {plan.id} is for {plan.n_teams} teams, pool has {n}"
        )
    state = _Execution(plan, pool, rng)
    for stage in plan.stages:
        if isinstance(stage, GroupRoundRobin):
            state.run_group(stage)
        elif isinstance(stage, Bracket):
            for game in stage.games:
                state.run_knockout(game.name, game.slot_a, game.slot_b,
                                   game.winner_slot, game.loser_slot)
        elif isinstance(stage, TwoLeggedTie):
            state.run_two_legged(stage)
        elif isinstance(stage, ClassificationPair):
            state.run_classification(stage)
    return state.finish()


class _Execution:
    def __init__(self, plan: FormatPlan, pool: ResultPool, rng: np.random.Generator):
        self.plan = plan
        self.pool = pool
        self.rng = rng
        self.teams = pool.teams
        n = len(pool.teams)
        self.fixtures: list[FixtureRecord] = []
        self.played = np.zeros(n, dtype=np.int64)
        self.rank_of = np.zeros(n, dtype=np.int64)
        self.slots: dict[str, int] = self._seed_slots()

    def _seed_slots(self) -> dict[str, int]:
        n = self.plan.n_teams
        if self.plan.seeding_policy is SeedingPolicy.TRUTH_SEEDED:
            order = truth_seed_order(self.pool)
        else:
            order = self.rng.permutation(n)
        return {f"seed{r + 1}": int(team) for r, team in enumerate(order)}

    def _record(self, stage: str, a: int, b: int, s: Scoreline, note: str) -> None:
        self.fixtures.append(FixtureRecord(stage, a, b, s, note))
        self.played[a] += 1
        self.played[b] += 1

    def _sample_decisive(self, a: int, b: int) -> tuple[Scoreline, int, str]:
        """First decisive sample within the resample cap, else a coin flip.

        Returns (recorded scoreline, winner team index, resolution note).
        """
        s = sample_game(self.pool, (a, b), self.rng)
        if s.goals_first != s.goals_second:
            return s, (a if s.goals_first > s.goals_second else b), ""
        for attempt in range(1, RESAMPLE_CAP + 1):
            s2 = sample_game(self.pool, (a, b), self.rng)
            if s2.goals_first != s2.goals_second:
                winner = a if s2.goals_first > s2.goals_second else b
                return s2, winner, f"draw-resample({attempt})"
        winner = a if int(self.rng.integers(2)) == 0 else b
        return s, winner, f"coin({self.teams.names[winner]})"

    def run_group(self, stage: GroupRoundRobin) -> None:
        entrants = [self.slots[slot] for slot in stage.entrants]
        k = len(entrants)
        g = stage.games_per_pairing
        points = np.zeros(k)
        goal_diff = np.zeros(k)
        goals_for = np.zeros(k)
        for pa in range(k):
            for pb in range(pa + 1, k):
                a, b = entrants[pa], entrants[pb]
                for _ in range(g):
                    s = sample_game(self.pool, (a, b), self.rng)
                    self._record(stage.label, a, b, s, "")
                    if s.goals_first > s.goals_second:
                        points[pa] += 3
                    elif s.goals_first < s.goals_second:
                        points[pb] += 3
                    else:
                        points[pa] += 1
                        points[pb] += 1
                    goal_diff[pa] += s.goals_first - s.goals_second
                    goal_diff[pb] += s.goals_second - s.goals_first
                    goals_for[pa] += s.goals_first
                    goals_for[pb] += s.goals_second
        # mean points per pairing: same order as sums, matches the continuous
        # view of the played games
        order = sorted(
            range(k),
            key=lambda p: (-points[p], -goal_diff[p], -goals_for[p], entrants[p]),
        )
        for pos, p in enumerate(order, start=1):
            self.slots[f"{stage.label}{pos}"] = entrants[p]

    def run_knockout(self, name: str, slot_a: str, slot_b: str,
                     winner_slot: str, loser_slot: str) -> None:
        a, b = self.slots[slot_a], self.slots[slot_b]
        s, winner, note = self._sample_decisive(a, b)
        self._record(name, a, b, s, note)
        self.slots[winner_slot] = winner
        self.slots[loser_slot] = b if winner == a else a

    def run_two_legged(self, stage: TwoLeggedTie) -> None:
        a, b = self.slots[stage.slot_a], self.slots[stage.slot_b]
        leg1 = sample_game(self.pool, (a, b), self.rng)
        self._record(f"{stage.name}-leg1", a, b, leg1, "")
        leg2 = sample_game(self.pool, (b, a), self.rng)
        agg_a = leg1.goals_first + leg2.goals_second
        agg_b = leg1.goals_second + leg2.goals_first
        if agg_a != agg_b:
            winner = a if agg_a > agg_b else b
            note = ""
        else:
            decider, winner, suffix = self._sample_decisive(a, b)
            note = f"aggregate-draw({agg_a}-{agg_b});decider({decider.goals_first}-{decider.goals_second})"
            if suffix:
                note += f";{suffix}"
        self._record(f"{stage.name}-leg2", b, a, leg2, note)
        self.slots[stage.winner_slot] = winner
        self.slots[stage.loser_slot] = b if winner == a else a

    def run_classification(self, stage: ClassificationPair) -> None:
        a, b = self.slots[stage.slot_a], self.slots[stage.slot_b]
        s, winner, note = self._sample_decisive(a, b)
        self._record(stage.name, a, b, s, note)
        loser = b if winner == a else a
        self.rank_of[winner] = stage.ranks[0]
        self.rank_of[loser] = stage.ranks[1]

    def finish(self) -> TournamentOutcome:
        for slot, rank in self.plan.slot_ranks.items():
            self.rank_of[self.slots[slot]] = rank
        n = len(self.teams)
        if not np.array_equal(np.sort(self.rank_of), np.arange(1, n + 1)):
            raise FormatError(f"plan {self.plan.id} produced an incomplete ranking")
        if (
            self.plan.expected_fixtures is not None
            and len(self.fixtures) != self.plan.expected_fixtures
        ):
            raise FormatError(
                f"plan {self.plan.id} played {len(self.fixtures)} fixtures, "
                f"expected {self.plan.expected_fixtures}"
            )
        return TournamentOutcome(
            plan_id=self.plan.id,
            teams=self.teams,
            fixtures=tuple(self.fixtures),
            final_ranking=Ranking(self.teams, self.rank_of, _checked=True),
            games_played_total=len(self.fixtures),
            games_played_per_team=self.played,
        )


def truth_seed_order(pool: ResultPool) -> np.ndarray:
    """Seed order by the pool's own continuous ranking (cached on the pool)."""
    cached = getattr(pool, "_truth_seed_order", None)
    if cached is None:
        cached = rank_from_points(continuous_totals(pool)).order()
        pool._truth_seed_order = cached  # type: ignore[attr-defined]
    return cached
