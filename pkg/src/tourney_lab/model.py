"""Teams, scorelines and empirical result pools.

A :class:`ResultPool` holds, for every unordered pair of teams, the multiset
of scorelines observed between them. Pools are the empirical distributions
that tournament simulations bootstrap-sample from. They are immutable once
built, so any number of concurrent readers may share one; random streams are
never stored on the pool itself.

Game-record files are plain CSV with header ``team_a,team_b,goals_a,goals_b``,
one game per row. Team names must not contain commas (there is no quoting).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, NamedTuple

import numpy as np

GAME_FILE_HEADER = ("team_a", "team_b", "goals_a", "goals_b")

_U64 = (1 << 64) - 1


class PoolLoadError(ValueError):
    """Raised when a game-record stream cannot be turned into a valid pool."""


class ModelFileError(ValueError):
    """Raised when a synthetic-model file is malformed."""


class Scoreline(NamedTuple):
    goals_first: int
    goals_second: int

    def swapped(self) -> "Scoreline":
        return Scoreline(self.goals_second, self.goals_first)


@dataclass(frozen=True)
class TeamSet:
    """Dense team indexing: team i is ``names[i]``, i in [0, n)."""

    names: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.names) < 2:
            raise ValueError("a team set needs at least 2 teams")
        if len(set(self.names)) != len(self.names):
            raise ValueError("team names must be unique")
        for name in self.names:
            if not name or "," in name:
                raise ValueError(f"invalid team name: {name!r}")

    def __len__(self) -> int:
        return len(self.names)

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown team: {name!r}") from None

    def pairs(self) -> Iterable[tuple[int, int]]:
        """All unordered pairs (i, j) with i < j, in canonical order."""
        n = len(self.names)
        for i in range(n):
            for j in range(i + 1, n):
                yield i, j


@dataclass(frozen=True)
class PairSummary:
    """Per-pair aggregate of a pool, oriented to the lower-indexed team."""

    mean_goals_first: float
    mean_goals_second: float
    mean_points_first: float
    mean_points_second: float
    games: int


class ResultPool:
    """Immutable per-pair scoreline multisets over a :class:`TeamSet`.

    Games for pair (i, j) are stored canonically with i < j and column 0
    holding the lower-indexed team's goals.
    """

    def __init__(self, teams: TeamSet, games: dict[tuple[int, int], np.ndarray]):
        n = len(teams)
        store: dict[tuple[int, int], np.ndarray] = {}
        for i, j in teams.pairs():
            arr = games.get((i, j))
            if arr is None or len(arr) == 0:
                raise PoolLoadError(
                    f"no games recorded for pair {teams.names[i]} vs {teams.names[j]}"
                )
            arr = np.asarray(arr, dtype=np.int64)
            if arr.ndim != 2 or arr.shape[1] != 2 or (arr < 0).any():
                raise PoolLoadError(
                    f"bad scorelines for pair {teams.names[i]} vs {teams.names[j]}"
                )
            arr.setflags(write=False)
            store[(i, j)] = arr
        extra = set(games) - set(store)
        if extra:
            raise PoolLoadError(f"games recorded for unknown or reversed pairs: {sorted(extra)}")
        self.teams = teams
        self._games = store
        self._summaries: dict[tuple[int, int], PairSummary] = {}
        _ = n

    def games_for(self, a: int, b: int) -> np.ndarray:
        """Scorelines for the pair, column 0 oriented to team ``a``."""
        if a == b:
            raise ValueError("a team cannot play itself")
        if a < b:
            return self._games[(a, b)]
        return self._games[(b, a)][:, ::-1]

    def count(self, a: int, b: int) -> int:
        lo, hi = (a, b) if a < b else (b, a)
        return len(self._games[(lo, hi)])

    @property
    def total_games(self) -> int:
        return sum(len(v) for v in self._games.values())

    def pair_summary(self, a: int, b: int) -> PairSummary:
        """Mean goals and mean 3/1/0 points for the pair, oriented to ``a``."""
        lo, hi = (a, b) if a < b else (b, a)
        summary = self._summaries.get((lo, hi))
        if summary is None:
            games = self._games[(lo, hi)]
            pts_lo, pts_hi = _points_columns(games)
            summary = PairSummary(
                mean_goals_first=float(games[:, 0].mean()),
                mean_goals_second=float(games[:, 1].mean()),
                mean_points_first=float(pts_lo.mean()),
                mean_points_second=float(pts_hi.mean()),
                games=len(games),
            )
            self._summaries[(lo, hi)] = summary
        if a == lo:
            return summary
        return PairSummary(
            mean_goals_first=summary.mean_goals_second,
            mean_goals_second=summary.mean_goals_first,
            mean_points_first=summary.mean_points_second,
            mean_points_second=summary.mean_points_first,
            games=summary.games,
        )

    def to_rows(self) -> Iterable[tuple[str, str, int, int]]:
        """Canonical serialization rows, lower-indexed team first."""
        names = self.teams.names
        for (i, j), games in self._games.items():
            for gi, gj in games.tolist():
                yield names[i], names[j], gi, gj

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ResultPool):
            return NotImplemented
        if self.teams != other.teams:
            return False
        return all(
            np.array_equal(self._games[pair], other._games[pair])
            for pair in self._games
        )

    def __repr__(self) -> str:
        return (
            f"ResultPool({len(self.teams)} teams, "
            f"{len(self._games)} pairs, {self.total_games} games)"
        )


def _points_columns(games: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """3/1/0 points per game for each side of a (m, 2) scoreline array."""
    first, second = games[:, 0], games[:, 1]
    pts_first = np.where(first > second, 3, np.where(first < second, 0, 1))
    pts_second = np.where(second > first, 3, np.where(second < first, 0, 1))
    return pts_first, pts_second


def load_pool(source: str | Path | IO[str] | Iterable[str]) -> ResultPool:
    """Read a game-record stream into a canonical :class:`ResultPool`.

    The team set is inferred from the distinct names in order of first
    appearance. Every unordered pair must have at least one game; a missing
    pair, a malformed row, or a team playing itself is a :class:`PoolLoadError`
    naming the offending pair or line.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            return _parse_rows(fh)
    return _parse_rows(source)


def _parse_rows(lines: Iterable[str]) -> ResultPool:
    names: list[str] = []
    index: dict[str, int] = {}
    raw: dict[tuple[int, int], list[tuple[int, int]]] = {}
    header_seen = False
    any_rows = False

    for lineno, line in enumerate(lines, start=1):
        text = line.strip()
        if not text:
            continue
        fields = [f.strip() for f in text.split(",")]
        if not header_seen:
            if tuple(f.lower() for f in fields) != GAME_FILE_HEADER:
                raise PoolLoadError(
                    f"line {lineno}: expected header {','.join(GAME_FILE_HEADER)}"
                )
            header_seen = True
            continue
        if len(fields) != 4:
            raise PoolLoadError(
                f"line {lineno}: expected 4 comma-separated fields, got {len(fields)}"
                " (team names must not contain commas)"
            )
        name_a, name_b, raw_a, raw_b = fields
        if not name_a or not name_b:
            raise PoolLoadError(f"line {lineno}: empty team name")
        if name_a == name_b:
            raise PoolLoadError(f"line {lineno}: team {name_a!r} cannot play itself")
        try:
            goals_a, goals_b = int(raw_a), int(raw_b)
        except ValueError:
            raise PoolLoadError(f"line {lineno}: goals must be integers") from None
        if goals_a < 0 or goals_b < 0:
            raise PoolLoadError(f"line {lineno}: goals must be non-negative")
        for name in (name_a, name_b):
            if name not in index:
                index[name] = len(names)
                names.append(name)
        a, b = index[name_a], index[name_b]
        if a < b:
            raw.setdefault((a, b), []).append((goals_a, goals_b))
        else:
            raw.setdefault((b, a), []).append((goals_b, goals_a))
        any_rows = True

    if not header_seen:
        raise PoolLoadError("empty game-record stream (missing header)")
    if not any_rows:
        raise PoolLoadError("game-record stream has a header but no games")

    teams = TeamSet(tuple(names))
    missing = [
        f"{names[i]} vs {names[j]}" for i, j in teams.pairs() if (i, j) not in raw
    ]
    if missing:
        raise PoolLoadError(f"no games recorded for pair(s): {'; '.join(missing)}")
    games = {pair: np.array(rows, dtype=np.int64) for pair, rows in raw.items()}
    return ResultPool(teams, games)


def write_game_records(pool: ResultPool, path: str | Path) -> None:
    """Write a pool back to a game-record CSV (canonical row order)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(GAME_FILE_HEADER) + "\n")
        for name_a, name_b, goals_a, goals_b in pool.to_rows():
            fh.write(f"{name_a},{name_b},{goals_a},{goals_b}\n")


def sample_game(
    pool: ResultPool, pair: tuple[int, int], rng: np.random.Generator
) -> Scoreline:
    """Draw one scoreline uniformly with replacement from the pair's pool.

    The result is oriented to the caller's (first, second) order, whichever
    way round the pair is asked for.
    """
    a, b = pair
    if a == b:
        raise ValueError("a team cannot play itself")
    lo, hi = (a, b) if a < b else (b, a)
    games = pool._games[(lo, hi)]
    row = games[int(rng.integers(len(games)))]
    if a == lo:
        return Scoreline(int(row[0]), int(row[1]))
    return Scoreline(int(row[1]), int(row[0]))


@dataclass(frozen=True)
class SyntheticModel:
    """Log-linear independent-Poisson goal model with optional per-ordered-pair
    offsets, used to manufacture pools for testing and calibration.

    Expected goals for team a against team b are
    ``base_rate * exp(attack[a] - defense[b] + nontransitivity[a, b])``.
    A positive offset cycle among three teams produces rock-paper-scissors
    behaviour no strength ladder can express.
    """

    teams: TeamSet
    attack: np.ndarray
    defense: np.ndarray
    base_rate: float
    nontransitivity: np.ndarray = field(default=None)  # type: ignore[assignment]
    seed: int = 0

    def __post_init__(self) -> None:
        n = len(self.teams)
        if not (self.base_rate > 0 and math.isfinite(self.base_rate)):
            raise ValueError("base_rate must be positive and finite")
        attack = np.asarray(self.attack, dtype=float)
        defense = np.asarray(self.defense, dtype=float)
        if attack.shape != (n,) or defense.shape != (n,):
            raise ValueError("attack/defense must have one value per team")
        nt = self.nontransitivity
        nt = np.zeros((n, n)) if nt is None else np.asarray(nt, dtype=float)
        if nt.shape != (n, n):
            raise ValueError("nontransitivity must be an n-by-n offset matrix")
        if not (np.isfinite(attack).all() and np.isfinite(defense).all() and np.isfinite(nt).all()):
            raise ValueError("model parameters must be finite")
        object.__setattr__(self, "attack", attack)
        object.__setattr__(self, "defense", defense)
        object.__setattr__(self, "nontransitivity", nt)

    def expected_goals(self, a: int, b: int) -> float:
        """Expected goals scored by team a against team b."""
        return float(
            self.base_rate
            * math.exp(self.attack[a] - self.defense[b] + self.nontransitivity[a, b])
        )


def generate_synthetic_pool(model: SyntheticModel, games_per_pair: int) -> ResultPool:
    """Draw ``games_per_pair`` independent-Poisson scorelines for every pair.

    Pure function of (model, games_per_pair), including the model's seed.
    """
    if games_per_pair < 1:
        raise ValueError("games_per_pair must be >= 1")
    rng = np.random.default_rng(np.random.SeedSequence(model.seed & _U64))
    games: dict[tuple[int, int], np.ndarray] = {}
    for i, j in model.teams.pairs():
        lam_i = model.expected_goals(i, j)
        lam_j = model.expected_goals(j, i)
        goals_i = rng.poisson(lam_i, size=games_per_pair)
        goals_j = rng.poisson(lam_j, size=games_per_pair)
        games[(i, j)] = np.column_stack([goals_i, goals_j])
    return ResultPool(model.teams, games)


def load_synthetic_model(path: str | Path) -> SyntheticModel:
    """Parse a synthetic-model file.

    INI-style sections: ``[model]`` with ``base_rate`` and optional ``seed``,
    one ``[team NAME]`` section per team with ``attack`` and ``defense``, and
    an optional ``[nontransitivity]`` section of ``A vs B = offset`` lines.
    Team order in the file fixes team indices.
    """
    import configparser

    parser = configparser.ConfigParser()
    parser.optionxform = str  # keep team-name case
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ModelFileError(f"cannot parse model file {path}: {exc}") from exc

    if "model" not in parser:
        raise ModelFileError("model file needs a [model] section with base_rate")
    try:
        base_rate = parser.getfloat("model", "base_rate")
    except (configparser.NoOptionError, ValueError) as exc:
        raise ModelFileError(f"bad or missing base_rate: {exc}") from exc
    try:
        seed = parser.getint("model", "seed", fallback=0)
    except ValueError as exc:
        raise ModelFileError(f"bad seed: {exc}") from exc

    names: list[str] = []
    attack: list[float] = []
    defense: list[float] = []
    for section in parser.sections():
        if not section.startswith("team "):
            continue
        name = section[len("team "):].strip()
        if not name:
            raise ModelFileError(f"empty team name in section [{section}]")
        try:
            attack.append(parser.getfloat(section, "attack"))
            defense.append(parser.getfloat(section, "defense"))
        except (configparser.NoOptionError, ValueError) as exc:
            raise ModelFileError(f"team {name!r}: bad attack/defense: {exc}") from exc
        names.append(name)
    if len(names) < 2:
        raise ModelFileError("model file must define at least 2 [team NAME] sections")

    try:
        teams = TeamSet(tuple(names))
    except ValueError as exc:
        raise ModelFileError(str(exc)) from exc

    nt = np.zeros((len(names), len(names)))
    if "nontransitivity" in parser:
        for key, value in parser.items("nontransitivity"):
            parts = [p.strip() for p in key.split(" vs ")]
            if len(parts) != 2:
                raise ModelFileError(
                    f"nontransitivity key must look like 'A vs B', got {key!r}"
                )
            try:
                a, b = teams.index_of(parts[0]), teams.index_of(parts[1])
            except KeyError as exc:
                raise ModelFileError(f"nontransitivity names unknown team: {exc}") from exc
            if a == b:
                raise ModelFileError(f"nontransitivity pair {key!r} repeats a team")
            try:
                nt[a, b] = float(value)
            except ValueError as exc:
                raise ModelFileError(f"bad nontransitivity offset for {key!r}") from exc

    try:
        return SyntheticModel(
            teams=teams,
            attack=np.array(attack),
            defense=np.array(defense),
            base_rate=base_rate,
            nontransitivity=nt,
            seed=seed,
        )
    except ValueError as exc:
        raise ModelFileError(str(exc)) from exc


def write_synthetic_model(model: SyntheticModel, path: str | Path) -> None:
    """Write a model file that :func:`load_synthetic_model` reads back."""
    lines = ["[model]", f"base_rate = {model.base_rate!r}", f"seed = {model.seed}", ""]
    for i, name in enumerate(model.teams.names):
        lines += [
            f"[team {name}]",
            f"attack = {model.attack[i]!r}",
            f"defense = {model.defense[i]!r}",
            "",
        ]
    nt_lines = [
        f"{model.teams.names[a]} vs {model.teams.names[b]} = {model.nontransitivity[a, b]!r}"
        for a in range(len(model.teams))
        for b in range(len(model.teams))
        if model.nontransitivity[a, b] != 0.0
    ]
    if nt_lines:
        lines += ["[nontransitivity]", *nt_lines, ""]
    Path(path).write_text("\n".join(lines), encoding="utf-8")
