"""Command-line surface: synthesize data, build comparisons, score, grade, report.

Exit codes: 0 ok, 2 usage, 3 I/O failure, 4 configuration or data
mismatch, 5 grading failure. Every command is idempotent: identical
inputs and seeds produce bitwise-identical output files, and no command
mutates its inputs. Omitted paths default into $BBAUTH_DATA_DIR when
that variable is set.

Configuration files are flat `key = value` text ('#' starts a comment);
explicit command-line flags override file values, which override
built-in defaults.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from .data import DatasetSplit, SplitKind, TaskKind, parse_dataset, serialize_dataset
from .errors import BBAuthError, MissingScore, NonFiniteScore
from .protocol import (
    build_comparisons,
    comparison_list_from_json,
    comparison_list_to_json,
    grade,
    grade_report_from_json,
    grade_report_table,
    grade_report_to_json,
    key_file_from_json,
    key_file_to_json,
    leaderboard_table,
    rank,
    score_file_from_csv,
    score_file_to_csv,
)
from .runner import MATCHERS, RunConfig, score_comparisons
from .synth import GenConfig, generate_dataset

_EXIT_OK = 0
_EXIT_USAGE = 2
_EXIT_IO = 3
_EXIT_CONFIG = 4
_EXIT_GRADING = 5


def _data_dir() -> Path | None:
    value = os.environ.get("BBAUTH_DATA_DIR")
    return Path(value) if value else None


def _default_path(name: str) -> Path | None:
    base = _data_dir()
    return base / name if base else None


def _load_config_file(path: str | None) -> dict[str, str]:
    if not path:
        return {}
    values: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        values[key.strip()] = value.strip()
    return values


def _resolve(args, file_cfg: dict[str, str], key: str, default, cast):
    flag_value = getattr(args, key, None)
    if flag_value is not None:
        return flag_value
    if key in file_cfg:
        return cast(file_cfg[key])
    return default


def _load_split(path: Path) -> DatasetSplit:
    text = path.read_text()
    try:
        declared = json.loads(text).get("split")
    except json.JSONDecodeError as exc:
        raise BBAuthError(f"{path}: not valid JSON: {exc}") from None
    try:
        kind = SplitKind(declared)
    except ValueError:
        raise BBAuthError(f"{path}: unknown split {declared!r}") from None
    return parse_dataset(text, kind)


def _require(path: Path | None, what: str) -> Path | None:
    if path is None:
        print(f"error: no {what} given and BBAUTH_DATA_DIR is not set", file=sys.stderr)
    return path


# --- synth ------------------------------------------------------------------

def cmd_synth(args) -> int:
    file_cfg = _load_config_file(args.config)
    try:
        config = GenConfig(
            n_users=_resolve(args, file_cfg, "users", 8, int),
            n_train_users=_resolve(args, file_cfg, "train_users", 8, int),
            n_validation_users=_resolve(args, file_cfg, "validation_users", 4, int),
            sigma_between=_resolve(args, file_cfg, "sigma_between", 3.0, float),
            sigma_within=_resolve(args, file_cfg, "sigma_within", 1.0, float),
            imitation_alpha=_resolve(args, file_cfg, "alpha", 0.5, float),
            device_bias_beta=_resolve(args, file_cfg, "beta", 0.2, float),
            master_seed=_resolve(args, file_cfg, "seed", 42, int),
        )
    except BBAuthError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_CONFIG
    out_dir = Path(args.out) if args.out else _data_dir()
    if out_dir is None:
        print("error: --out is required when BBAUTH_DATA_DIR is not set", file=sys.stderr)
        return _EXIT_USAGE
    manifest_path = out_dir / "manifest.json"
    if manifest_path.exists() and not args.force:
        print(f"error: {manifest_path} exists; pass --force to overwrite", file=sys.stderr)
        return _EXIT_IO

    generated = generate_dataset(config)
    out_dir.mkdir(parents=True, exist_ok=True)
    for split in (generated.train, generated.validation, generated.evaluation):
        (out_dir / f"{split.split_kind.value}.json").write_text(serialize_dataset(split))
    for (split_kind, task), (clist, key) in sorted(
        generated.keys.items(), key=lambda kv: (kv[0][0].value, kv[0][1].value)
    ):
        stem = f"{split_kind.value}_{task.value}"
        (out_dir / f"comparisons_{stem}.json").write_text(comparison_list_to_json(clist))
        (out_dir / f"key_{stem}.json").write_text(key_file_to_json(key))
    manifest_path.write_text(json.dumps(generated.manifest, sort_keys=True, indent=2) + "\n")
    print(json.dumps(generated.manifest["sessions"], sort_keys=True))
    return _EXIT_OK


# --- comparisons --------------------------------------------------------------

def cmd_comparisons(args) -> int:
    file_cfg = _load_config_file(args.config)
    data_path = _require(Path(args.data) if args.data else _default_path("evaluation.json"), "--data")
    if data_path is None:
        return _EXIT_USAGE
    task = TaskKind(args.task)
    seed = _resolve(args, file_cfg, "seed", 0, int)
    split = _load_split(data_path)
    try:
        clist, key = build_comparisons(split, task, seed, args.policy, args.sample_k)
    except BBAuthError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_CONFIG
    Path(args.out_list).write_text(comparison_list_to_json(clist))
    Path(args.out_key).write_text(key_file_to_json(key))
    print(f"{len(clist.comparisons)} comparisons for task {task.value}")
    return _EXIT_OK


# --- score --------------------------------------------------------------------

def cmd_score(args) -> int:
    file_cfg = _load_config_file(args.config)
    data_path = _require(Path(args.data) if args.data else _default_path("evaluation.json"), "--data")
    if data_path is None:
        return _EXIT_USAGE
    clist = comparison_list_from_json(Path(args.comparisons).read_text())
    try:
        config = RunConfig(
            matcher=args.matcher,
            task=clist.task,
            seed=_resolve(args, file_cfg, "seed", 0, int),
            threads=_resolve(args, file_cfg, "threads", 1, int),
            gamma=_resolve(args, file_cfg, "gamma", 1.0, float),
            tau=_resolve(args, file_cfg, "tau", None, float),
            margin=_resolve(args, file_cfg, "margin", 1.0, float),
            epochs=_resolve(args, file_cfg, "epochs", 50, int),
            batch_size=_resolve(args, file_cfg, "batch_size", 16, int),
            learning_rate=_resolve(args, file_cfg, "learning_rate", 0.001, float),
            target_len=_resolve(args, file_cfg, "target_len", None, int),
            dwt_length=_resolve(args, file_cfg, "dwt_length", 64, int),
            dwt_width=_resolve(args, file_cfg, "dwt_width", 8, int),
            top_k=_resolve(args, file_cfg, "top_k", None, int),
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_CONFIG
    split = _load_split(data_path)
    train_split = None
    train_path = Path(args.train) if args.train else _default_path("train.json")
    needs_train = config.matcher == "siamese" or (
        config.matcher == "softdtw" and config.tau is None
    )
    if needs_train:
        if train_path is None or not train_path.exists():
            print(f"error: matcher {config.matcher!r} needs --train", file=sys.stderr)
            return _EXIT_CONFIG
        train_split = _load_split(train_path)
    started = time.perf_counter()
    try:
        run = score_comparisons(split, clist, config, train_split)
    except (BBAuthError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_CONFIG
    order = [c.comparison_id for c in clist.comparisons]
    Path(args.out).write_text(score_file_to_csv(run.scores, order))
    total = time.perf_counter() - started
    print(
        f"{config.matcher}: {int(run.timings['comparisons'])} comparisons, "
        f"setup {run.timings['setup_s']:.2f}s, prepare {run.timings['prepare_s']:.2f}s, "
        f"score {run.timings['score_s']:.2f}s, total {total:.2f}s"
    )
    return _EXIT_OK


# --- grade ----------------------------------------------------------------------

def cmd_grade(args) -> int:
    scores_text = Path(args.scores).read_text()
    key = key_file_from_json(Path(args.key).read_text())
    try:
        scores, warnings = score_file_from_csv(scores_text)
        report = grade(scores, key)
    except MissingScore as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_GRADING
    except (NonFiniteScore, BBAuthError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_GRADING
    for warning in (*warnings, *report.warnings):
        print(f"warning: {warning}", file=sys.stderr)
    if args.out_prefix:
        Path(args.out_prefix + ".json").write_text(grade_report_to_json(report) + "\n")
        Path(args.out_prefix + ".txt").write_text(grade_report_table(report))
    if args.format == "json":
        print(grade_report_to_json(report))
    else:
        print(grade_report_table(report), end="")
    return _EXIT_OK


# --- report ----------------------------------------------------------------------

def cmd_report(args) -> int:
    entries = []
    for item in args.entry:
        if "=" not in item:
            print(f"error: --entry needs team=path, got {item!r}", file=sys.stderr)
            return _EXIT_USAGE
        team, path = item.split("=", 1)
        entries.append((team, grade_report_from_json(Path(path).read_text())))
    ordered = rank(entries)
    table = leaderboard_table(ordered)
    if args.out:
        Path(args.out).write_text(table)
    if args.format == "json":
        print(
            json.dumps(
                [
                    {"rank": i + 1, "team": team, "auc_mixed": round(r.auc_mixed, 2),
                     "auc_random": round(r.auc_random, 2), "auc_skilled": round(r.auc_skilled, 2)}
                    for i, (team, r) in enumerate(ordered)
                ],
                sort_keys=True,
            )
        )
    else:
        print(table, end="")
    return _EXIT_OK


# --- parser ----------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--seed", type=int, default=None, help="master seed")
    shared.add_argument("--config", default=None, help="flat key=value configuration file")
    shared.add_argument("--threads", type=int, default=None, help="worker threads for scoring")
    shared.add_argument("--format", choices=("json", "table"), default="table")

    parser = argparse.ArgumentParser(prog="bbauth", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[shared], help="generate synthetic splits and keys")
    p.add_argument("--users", type=int, default=None, help="evaluation users/devices")
    p.add_argument("--train-users", dest="train_users", type=int, default=None)
    p.add_argument("--val-users", dest="validation_users", type=int, default=None)
    p.add_argument("--sigma-between", dest="sigma_between", type=float, default=None)
    p.add_argument("--sigma-within", dest="sigma_within", type=float, default=None)
    p.add_argument("--alpha", type=float, default=None, help="skilled imitation strength in [0,1]")
    p.add_argument("--beta", type=float, default=None, help="device bias magnitude")
    p.add_argument("--out", default=None, help="output directory (default: $BBAUTH_DATA_DIR)")
    p.add_argument("--force", action="store_true", help="overwrite an existing output directory")
    p.set_defaults(handler=cmd_synth)

    p = sub.add_parser("comparisons", parents=[shared], help="build a comparison list and key")
    p.add_argument("--data", default=None, help="split document (default: $BBAUTH_DATA_DIR/evaluation.json)")
    p.add_argument("--task", required=True, choices=[t.value for t in TaskKind])
    p.add_argument("--policy", choices=("all", "sample"), default="all")
    p.add_argument("--sample-k", dest="sample_k", type=int, default=None)
    p.add_argument("--out-list", dest="out_list", required=True)
    p.add_argument("--out-key", dest="out_key", required=True)
    p.set_defaults(handler=cmd_comparisons)

    p = sub.add_parser("score", parents=[shared], help="score a comparison list with one matcher")
    p.add_argument("--data", default=None, help="split document (default: $BBAUTH_DATA_DIR/evaluation.json)")
    p.add_argument("--train", default=None, help="training split (default: $BBAUTH_DATA_DIR/train.json)")
    p.add_argument("--comparisons", required=True)
    p.add_argument("--matcher", required=True, choices=MATCHERS)
    p.add_argument("--out", required=True, help="score CSV path")
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--margin", type=float, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    p.add_argument("--learning-rate", dest="learning_rate", type=float, default=None)
    p.add_argument("--target-len", dest="target_len", type=int, default=None)
    p.add_argument("--dwt-length", dest="dwt_length", type=int, default=None)
    p.add_argument("--dwt-width", dest="dwt_width", type=int, default=None)
    p.add_argument("--top-k", dest="top_k", type=int, default=None)
    p.set_defaults(handler=cmd_score)

    p = sub.add_parser("grade", parents=[shared], help="grade a score file against a key")
    p.add_argument("--scores", required=True)
    p.add_argument("--key", required=True)
    p.add_argument("--out-prefix", dest="out_prefix", default=None,
                   help="write <prefix>.json and <prefix>.txt")
    p.set_defaults(handler=cmd_grade)

    p = sub.add_parser("report", parents=[shared], help="rank graded submissions")
    p.add_argument("--entry", action="append", required=True, metavar="TEAM=REPORT.JSON")
    p.add_argument("--out", default=None, help="leaderboard text file")
    p.set_defaults(handler=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_IO
    except (BBAuthError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
