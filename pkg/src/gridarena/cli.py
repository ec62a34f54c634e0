"""Command-line front door.

Subcommands: `gen` (write level sets), `eval` (cross-play tournament from
a manifest), `eav` (expected action variation from a manifest), and
`features` (level-feature distribution statistics).

Exit codes: 0 success, 2 configuration/manifest error, 3 generation
error, 4 runtime error. The worker count for match execution comes from
--workers or the GRIDARENA_WORKERS environment variable; results are
merged in task order, so parallelism never changes outputs.

The manifest is a JSON object; keys:

    env          env id string
    levels       list of level file paths, or {"dir": path} to glob *.txt
    test_levels  optional, same shape as levels
    populations  list of {"id", "kind" (uniform|diverse|zoo), "size", "seed"}
    grouping     optional [count_a, count_b]
    matches      optional matches per ordered pairing (default 100)
    horizon      optional episode-length override
    seed         root seed
    out_dir      output directory
"""

from __future__ import annotations

import argparse
import json
import statistics
import sys
from pathlib import Path

from . import eav as eav_mod
from . import evaluation
from .envs import ENV_IDS, generate_level, load_level
from .errors import ConfigurationError, GenerationError, GridArenaError, LevelParseError
from .policies import build_population
from .seeding import derive_seed

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_GENERATION = 3
EXIT_RUNTIME = 4

HELD_OUT_SET_SIZE = 100


def train_level_seed(root_seed: int, index: int) -> int:
    """Seed of the index-th training level (1-based); because each level
    depends only on (root, index), a set of size L1 is a bit-exact prefix
    of any larger set with the same root."""
    return derive_seed(root_seed, "train-level", index)


def test_level_seed(root_seed: int, index: int) -> int:
    """Held-out levels draw from a disjoint derivation namespace."""
    return derive_seed(root_seed, "test-level", index)


def cmd_gen(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    params = {}
    if args.env == "harvest_patch" and args.patches is not None:
        params = {"patches": args.patches, "radius": args.radius, "density": args.density}
    for i in range(1, args.levels + 1):
        level = generate_level(args.env, train_level_seed(args.seed, i), **params)
        (out_dir / f"level_{i:05d}.txt").write_text(level.to_text())
    if args.test_set:
        for i in range(1, HELD_OUT_SET_SIZE + 1):
            level = generate_level(args.env, test_level_seed(args.seed, i), **params)
            (out_dir / f"test_{i:03d}.txt").write_text(level.to_text())
    print(f"wrote {args.levels} training level(s)"
          + (f" and {HELD_OUT_SET_SIZE} held-out level(s)" if args.test_set else "")
          + f" to {out_dir}")
    return EXIT_OK


def _load_manifest(path: str) -> dict:
    try:
        manifest = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read manifest {path}: {exc}") from exc
    for key in ("env", "populations"):
        if key not in manifest:
            raise ConfigurationError(f"manifest is missing required key {key!r}")
    if manifest["env"] not in ENV_IDS:
        raise ConfigurationError(f"manifest env {manifest['env']!r} not in {ENV_IDS}")
    return manifest


def _load_levels(spec, base: Path):
    if spec is None:
        raise ConfigurationError("manifest has no levels")
    if isinstance(spec, dict) and "dir" in spec:
        paths = sorted((base / spec["dir"]).glob("*.txt"))
    else:
        paths = [base / p for p in spec]
    if not paths:
        raise ConfigurationError("level list is empty")
    levels = []
    for p in paths:
        if not p.exists():
            raise ConfigurationError(f"level file {p} does not exist")
        levels.append(load_level(p.read_text()))
    return levels


def _build_populations(manifest, levels):
    env_id = manifest["env"]
    pops = []
    for k, spec in enumerate(manifest["populations"]):
        spec = dict(spec)
        spec.setdefault("id", f"pop{k}")
        pops.append(build_population(env_id, spec, level=levels[0] if levels else None))
    if not pops:
        raise ConfigurationError("manifest lists no populations")
    return pops


def _grid(manifest, pops, levels, grouping, workers, seed_tag):
    return evaluation.run_pairing_grid(
        pops, levels, grouping,
        matches_per_pairing=int(manifest.get("matches", evaluation.DEFAULT_MATCHES_PER_PAIRING)),
        seed=derive_seed(int(manifest.get("seed", 0)), seed_tag),
        workers=workers,
        horizon=manifest.get("horizon"),
    )


def _matrix_text(ids, matrix) -> str:
    width = max(8, max(len(i) for i in ids) + 2)
    lines = [" " * width + "".join(f"{i:>{width}}" for i in ids)]
    for i, row in zip(ids, matrix):
        lines.append(f"{i:<{width}}" + "".join(f"{v:>{width}.3f}" for v in row))
    return "\n".join(lines) + "\n"


def cmd_eval(args) -> int:
    manifest = _load_manifest(args.manifest)
    base = Path(args.manifest).parent
    out_dir = Path(manifest.get("out_dir", "eval_out"))
    if not out_dir.is_absolute():
        out_dir = base / out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    env_id = manifest["env"]
    levels = _load_levels(manifest.get("levels"), base)
    pops = _build_populations(manifest, levels)
    grouping = (evaluation.CrossPlayGrouping(env_id, *manifest["grouping"])
                if "grouping" in manifest else evaluation.CrossPlayGrouping.default(env_id))
    workers = args.workers

    results = _grid(manifest, pops, levels, grouping, workers, "train")
    (out_dir / "matches.jsonl").write_text(
        "".join(r.to_json_line() + "\n" for r in results))
    ids, focal = evaluation.mean_focal_matrix(results)
    (out_dir / "reward_matrix.txt").write_text(_matrix_text(ids, focal))
    if env_id == "capture_the_flag":
        ids, wins = evaluation.win_matrix(results)
        (out_dir / "win_matrix.txt").write_text(_matrix_text(ids, wins))
        (out_dir / "ratings.txt").write_text(evaluation.fit_elo(results).text())

    if manifest.get("test_levels"):
        test_levels = _load_levels(manifest["test_levels"], base)
        test_results = _grid(manifest, pops, test_levels, grouping, workers, "test")
        (out_dir / "matches_test.jsonl").write_text(
            "".join(r.to_json_line() + "\n" for r in test_results))
        lines = ["population\ttrain\ttest\tgap(train-test)\t|gap|"]
        for pop in pops:
            train_perf = _population_focal_mean(results, pop.id)
            test_perf = _population_focal_mean(test_results, pop.id)
            signed = evaluation.generalization_gap(train_perf, test_perf, signed=True)
            lines.append(f"{pop.id}\t{train_perf:.3f}\t{test_perf:.3f}"
                         f"\t{signed:.3f}\t{abs(signed):.3f}")
        (out_dir / "generalization_gaps.txt").write_text("\n".join(lines) + "\n")
        if env_id == "capture_the_flag":
            (out_dir / "ratings_test.txt").write_text(evaluation.fit_elo(test_results).text())
    print(f"wrote evaluation outputs to {out_dir}")
    return EXIT_OK


def _population_focal_mean(results, pop_id: str) -> float:
    focal = [sum(r.focal_rewards) / len(r.focal_rewards)
             for r in results if r.pop_a == pop_id]
    return sum(focal) / len(focal) if focal else float("nan")


def cmd_eav(args) -> int:
    manifest = _load_manifest(args.manifest)
    base = Path(args.manifest).parent
    levels = _load_levels(manifest.get("levels"), base)
    pops = _build_populations(manifest, levels)
    report = eav_mod.expected_action_variation(
        pops, levels,
        E=args.eav_E, J=args.eav_J, R=args.eav_R,
        seed=args.seed if args.seed is not None else int(manifest.get("seed", 0)),
        horizon=manifest.get("horizon"),
    )
    text = report.text()
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_features(args) -> int:
    rows = []
    for i in range(1, args.samples + 1):
        level = generate_level(args.env, derive_seed(args.seed, "features", i))
        header = json.loads(level.to_text().split("features: ")[1].splitlines()[0])
        rows.append(header)
    keys = sorted(rows[0])
    print(f"{'feature':<18}{'min':>12}{'median':>12}{'max':>12}   ({args.samples} samples)")
    for key in keys:
        values = [float(r[key]) for r in rows]
        print(f"{key:<18}{min(values):>12.3f}{statistics.median(values):>12.3f}"
              f"{max(values):>12.3f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gridarena")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a level set (optionally plus held-out levels)")
    p.add_argument("--env", required=True, choices=ENV_IDS)
    p.add_argument("--levels", type=int, required=True, help="training set size L")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--test-set", action="store_true",
                   help=f"also write the {HELD_OUT_SET_SIZE} held-out levels")
    p.add_argument("--patches", type=int, default=None, help="harvest_patch only")
    p.add_argument("--radius", type=int, default=4, help="harvest_patch only")
    p.add_argument("--density", type=float, default=0.95, help="harvest_patch only")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("eval", help="run the cross-play tournament in a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("eav", help="expected action variation for manifest populations")
    p.add_argument("--manifest", required=True)
    p.add_argument("--eav-E", type=int, default=eav_mod.DEFAULT_E)
    p.add_argument("--eav-J", type=int, default=eav_mod.DEFAULT_J)
    p.add_argument("--eav-R", type=int, default=eav_mod.DEFAULT_R)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eav)

    p = sub.add_parser("features", help="distribution of level features over samples")
    p.add_argument("--env", required=True, choices=ENV_IDS)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_features)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, LevelParseError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GenerationError as exc:
        print(f"generation error: {exc}", file=sys.stderr)
        return EXIT_GENERATION
    except (GridArenaError, ValueError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
