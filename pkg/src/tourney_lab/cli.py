"""The ``tourney-lab`` command line: gen, truth and simulate.

All randomness flows from explicit seeds recorded in the run manifest; there
is no wall-clock seeding, so reruns with the same inputs produce byte-identical
result files (manifests differ only in their timestamp). ``--workers`` is a
scheduling hint and never changes output.

Exit codes: 0 success, 1 runtime failure, 2 input validation failure.
"""

from __future__ import annotations

import argparse
import datetime
import hashlib
import json
import sys
from pathlib import Path

from . import __version__
from .formats import FormatError, SeedingPolicy, plan_from_token
from .model import (
    ModelFileError,
    PoolLoadError,
    generate_synthetic_pool,
    load_pool,
    load_synthetic_model,
    write_game_records,
)
from .ranking import SchemeKind, ranking_from_lines
from .montecarlo import (
    ExperimentConfig,
    compare_formats,
    estimate_truth,
    run_experiment,
)


class CliValidationError(ValueError):
    """Bad user input (exit code 2)."""


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (CliValidationError, PoolLoadError, ModelFileError, FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tourney-lab",
        description="Evaluate tournament formats by bootstrap simulation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a synthetic game-record file")
    gen.add_argument("--model", required=True, help="synthetic-model file")
    gen.add_argument("--games", required=True, type=int, help="games per pair")
    gen.add_argument("--seed", type=int, default=None,
                     help="override the model file's seed")
    gen.add_argument("--out", required=True, help="output game-record CSV")
    gen.set_defaults(handler=_cmd_gen)

    truth = sub.add_parser("truth", help="rank a full game pool")
    truth.add_argument("--games", required=True, help="game-record CSV")
    truth.add_argument("--scheme", default="continuous",
                       choices=["continuous", "discrete"])
    truth.add_argument("--bootstrap", type=int, default=1000,
                       help="stability bootstrap rounds (0 = skip)")
    truth.add_argument("--out", required=True, help="output directory")
    truth.set_defaults(handler=_cmd_truth)

    sim = sub.add_parser("simulate", help="replay formats and score rankings")
    sim.add_argument("--config", required=True, help="experiment config file")
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument("--workers", type=int, default=None,
                     help="worker hint; never changes results")
    sim.set_defaults(handler=_cmd_simulate)

    return parser


def _cmd_gen(args: argparse.Namespace) -> int:
    if args.games < 1:
        raise CliValidationError("--games must be >= 1")
    model = load_synthetic_model(_existing_file(args.model))
    if args.seed is not None:
        model = type(model)(
            teams=model.teams,
            attack=model.attack,
            defense=model.defense,
            base_rate=model.base_rate,
            nontransitivity=model.nontransitivity,
            seed=args.seed,
        )
    pool = generate_synthetic_pool(model, args.games)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_game_records(pool, out)
    print(f"wrote {pool.total_games} games for {len(pool.teams)} teams to {out}")
    return 0


def _cmd_truth(args: argparse.Namespace) -> int:
    if args.bootstrap < 0:
        raise CliValidationError("--bootstrap must be >= 0")
    games_path = _existing_file(args.games)
    pool = load_pool(games_path)
    scheme = SchemeKind.from_token(args.scheme)
    report = estimate_truth(pool, scheme=scheme, bootstrap_rounds=args.bootstrap)

    out = _ensure_dir(args.out)
    (out / "ranking.txt").write_text(
        "\n".join(report.ranking.to_lines()) + "\n", encoding="utf-8"
    )

    order = report.ranking.order()
    lines = ["rank,team,points,goal_diff,goals_for"]
    for rank, team in enumerate(order, start=1):
        lines.append(
            f"{rank},{pool.teams.names[team]},{report.totals.totals[team]!r},"
            f"{report.totals.goal_diff[team]!r},{report.totals.goals_for[team]!r}"
        )
    (out / "totals.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    if report.adjacent_stability is not None:
        lines = ["rank_pair,team_upper,team_lower,probability"]
        for k in range(len(order) - 1):
            lines.append(
                f"{k + 1}-{k + 2},{pool.teams.names[order[k]]},"
                f"{pool.teams.names[order[k + 1]]},{report.adjacent_stability[k]!r}"
            )
        (out / "stability.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    _write_manifest(
        out,
        command="truth",
        config={"scheme": scheme.value, "bootstrap_rounds": args.bootstrap},
        inputs={str(games_path): _digest(games_path)},
        master_seed=0,
    )
    print(f"truth ranking: {' > '.join(report.ranking.to_lines())}")
    return 0


_SIM_KEYS = {"games", "plans", "replicates", "seed", "scheme", "seeding", "truth", "workers"}


def _cmd_simulate(args: argparse.Namespace) -> int:
    config_path = _existing_file(args.config)
    raw = _parse_kv_config(config_path)

    unknown = set(raw) - _SIM_KEYS
    if unknown:
        raise CliValidationError(
            f"unknown config keys: {', '.join(sorted(unknown))} "
            f"(valid: {', '.join(sorted(_SIM_KEYS))})"
        )
    for key in ("games", "plans", "replicates", "seed"):
        if key not in raw:
            raise CliValidationError(f"config is missing required key {key!r}")

    base = config_path.parent
    games_path = _existing_file(base / raw["games"])
    plan_tokens = tuple(t.strip() for t in raw["plans"].split(",") if t.strip())
    if not plan_tokens:
        raise CliValidationError("config key 'plans' lists no formats")
    replicates = _positive_int(raw, "replicates")
    master_seed = _config_int(raw, "seed")
    scheme = SchemeKind.from_token(raw.get("scheme", "continuous"))
    seeding = SeedingPolicy.from_token(raw.get("seeding", "random"))
    workers = args.workers
    if workers is None:
        workers = int(raw.get("workers", "1"))
    if workers < 1:
        raise CliValidationError("workers must be >= 1")

    # fail fast: resolve every token before any sampling starts
    for token in plan_tokens:
        plan_from_token(token, seeding=seeding)

    pool = load_pool(games_path)
    inputs = {str(games_path): _digest(games_path)}
    if "truth" in raw:
        truth_path = _existing_file(base / raw["truth"])
        truth = ranking_from_lines(
            pool.teams, truth_path.read_text(encoding="utf-8").splitlines()
        )
        inputs[str(truth_path)] = _digest(truth_path)
    else:
        truth = estimate_truth(pool, scheme=scheme, bootstrap_rounds=0).ranking

    config = ExperimentConfig(
        plans=plan_tokens,
        replicates=replicates,
        master_seed=master_seed,
        scheme=scheme,
        seeding_policy=seeding,
        worker_count_hint=workers,
    )
    distributions = run_experiment(config, pool, truth)

    out = _ensure_dir(args.out)
    for dist in distributions:
        rows = ["format,replicate,d1"]
        rows += [
            f"{dist.format_id},{k},{int(v)}" for k, v in enumerate(dist.d1_values)
        ]
        name = f"d1_{_safe_name(dist.format_id)}.csv"
        (out / name).write_text("\n".join(rows) + "\n", encoding="utf-8")

    hist_rows = ["format,d1,count"]
    for dist in distributions:
        bins, counts = dist.histogram()
        hist_rows += [
            f"{dist.format_id},{int(d)},{int(c)}" for d, c in zip(bins, counts)
        ]
    (out / "histogram.csv").write_text("\n".join(hist_rows) + "\n", encoding="utf-8")

    config_echo = {
        "games": raw["games"],
        "plans": list(plan_tokens),
        "replicates": replicates,
        "scheme": scheme.value,
        "seeding": seeding.value,
        "truth": raw.get("truth", "<computed from pool>"),
    }
    summary: dict = {
        "master_seed": master_seed,
        "config": config_echo,
        "formats": [d.summary() for d in distributions],
    }
    if len(distributions) >= 2:
        summary["comparison"] = compare_formats(distributions).to_dict()
    (out / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )

    _write_manifest(
        out, command="simulate", config=config_echo, inputs=inputs,
        master_seed=master_seed,
    )
    means = ", ".join(f"{d.format_id}: {d.mean:.3f}" for d in distributions)
    print(f"mean d1 over {replicates} replicates -> {means}")
    return 0


def _parse_kv_config(path: Path) -> dict[str, str]:
    """Flat ``key = value`` file; '#' starts a comment, blank lines ignored."""
    values: dict[str, str] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise CliValidationError(f"{path}:{lineno}: expected 'key = value'")
        key, value = text.split("=", 1)
        key, value = key.strip(), value.strip()
        if not key or not value:
            raise CliValidationError(f"{path}:{lineno}: empty key or value")
        if key in values:
            raise CliValidationError(f"{path}:{lineno}: duplicate key {key!r}")
        values[key] = value
    if not values:
        raise CliValidationError(f"{path}: config file is empty")
    return values


def _config_int(raw: dict[str, str], key: str) -> int:
    try:
        return int(raw[key])
    except ValueError:
        raise CliValidationError(f"config key {key!r} must be an integer") from None


def _positive_int(raw: dict[str, str], key: str) -> int:
    value = _config_int(raw, key)
    if value < 1:
        raise CliValidationError(f"config key {key!r} must be >= 1")
    return value


def _existing_file(path: str | Path) -> Path:
    p = Path(path)
    if not p.is_file():
        raise CliValidationError(f"no such file: {p}")
    return p


def _ensure_dir(path: str | Path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _digest(path: Path) -> str:
    return "sha256:" + hashlib.sha256(path.read_bytes()).hexdigest()


def _safe_name(token: str) -> str:
    return token.replace(":", "-").replace("/", "-")


def _write_manifest(
    out: Path, command: str, config: dict, inputs: dict[str, str], master_seed: int
) -> None:
    manifest = {
        "artifact": "tourney-lab",
        "version": __version__,
        "command": command,
        "master_seed": master_seed,
        "config": config,
        "inputs": inputs,
        "created_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


if __name__ == "__main__":
    sys.exit(main())
