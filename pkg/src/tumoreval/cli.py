"""Command-line entry point: ``tumoreval {segeval,features,survival,report}``.

Exit codes: 0 success, 1 usage or configuration error, 2 data errors
(partial results are still written where possible).

Every run that writes outputs also writes ``run_manifest.json`` next to them
with the seed, the parsed configuration, the argument vector and SHA-256
digests of every input file. ``tumoreval --replay run_manifest.json``
re-executes the recorded arguments after checking the input digests.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import platform
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from . import __version__
from .crossval import (
    ABLATION_FAMILIES,
    CVConfig,
    ComparisonTable,
    ablate_age,
    cross_validate,
    write_plot_csv,
)
from .errors import (
    BadFoldCount,
    MissingSegmentation,
    NoMatchingCases,
    TooFewRecords,
    TumorEvalError,
)
from .features import (
    build_dataset,
    filter_gtr,
    load_feature_csv,
    load_survival_csv,
    normalize_apply,
    normalize_fit,
    write_feature_csv,
)
from .metrics import (
    CSV_HEADER as METRICS_CSV_HEADER,
    METRICS,
    REGIONS,
    evaluate_case,
    parse_empty_policy,
    read_metrics_csv,
    summarize,
    write_metrics_csv,
)
from .models import resolve_models, save_model
from .tables import render_metric_table
from .volgrid import find_volumes, load_volume

__all__ = ["main", "build_parser", "EXIT_OK", "EXIT_USAGE", "EXIT_DATA"]

log = logging.getLogger("tumoreval")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

MANIFEST_NAME = "run_manifest.json"

# errors that mean "fix the invocation" rather than "fix the data"
_CONFIG_ERRORS = (NoMatchingCases, TooFewRecords, BadFoldCount)


class UsageError(Exception):
    """Bad flags or inconsistent configuration (exit code 1)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# helpers


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _digest_inputs(paths: Iterable[Path]) -> dict[str, str]:
    out = {}
    for p in paths:
        p = Path(p)
        files = sorted(q for q in p.rglob("*") if q.is_file()) if p.is_dir() else [p]
        for f in files:
            out[str(f.resolve())] = _sha256(f)
    return out


def _write_manifest(out_dir: Path, args, argv: Sequence[str], inputs: Iterable[Path],
                    outputs: Iterable[Path]) -> Path:
    config = {k: v for k, v in vars(args).items() if k not in ("handler", "replay", "replay_out")}
    doc = {
        "tool": "tumoreval",
        "version": __version__,
        "subcommand": args.command,
        "seed": args.seed,
        "argv": list(argv),
        "cwd": str(Path.cwd()),
        "config": json.loads(json.dumps(config, default=str)),
        "inputs": _digest_inputs(inputs),
        "outputs": sorted(str(Path(p).name) for p in outputs),
        "python": platform.python_version(),
        "numpy": np.__version__,
    }
    path = out_dir / MANIFEST_NAME
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    return path


def _pmap(fn: Callable, items: Sequence, jobs: int) -> list:
    """Ordered map, threaded when ``jobs > 1``."""
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _require_dir(path: str, what: str) -> Path:
    p = Path(path)
    if not p.is_dir():
        raise UsageError(f"{what} {path!r} is not a directory")
    return p


def _require_file(path: str, what: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"{what} {path!r} does not exist")
    return p


def _emit(text: str) -> None:
    sys.stdout.write(text)
    if not text.endswith("\n"):
        sys.stdout.write("\n")


# ---------------------------------------------------------------------------
# segeval


def _evaluate_pair(item):
    case_id, pred_path, gt_path, empty_value = item
    try:
        return evaluate_case(load_volume(pred_path), load_volume(gt_path), empty_value, case_id), None
    except (TumorEvalError, OSError) as exc:
        return None, f"{case_id}: {exc}"


def _summary_json(stats) -> str:
    doc = {
        m: {r.value: vars(stats[(m, r)]) for r in REGIONS}
        for m in METRICS
    }
    doc["n_cases"] = stats.n
    return json.dumps(doc, indent=1)


def cmd_segeval(args) -> int:
    pred_dir = _require_dir(args.pred_dir, "prediction directory")
    gt_dir = _require_dir(args.gt_dir, "ground-truth directory")
    try:
        empty_value = parse_empty_policy(args.empty_policy)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    out_dir = Path(args.out)
    preds, gts = find_volumes(pred_dir), find_volumes(gt_dir)
    common = sorted(set(preds) & set(gts))
    problems = [f"{c}: no ground truth in {gt_dir}" for c in sorted(set(preds) - set(gts))]
    problems += [f"{c}: no prediction in {pred_dir}" for c in sorted(set(gts) - set(preds))]
    if not common:
        raise NoMatchingCases(f"no case stems shared by {pred_dir} and {gt_dir}")

    items = [(c, preds[c], gts[c], empty_value) for c in common]
    results = _pmap(_evaluate_pair, items, args.jobs)
    reports = [r for r, _ in results if r is not None]
    problems += [e for _, e in results if e is not None]

    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = [out_dir / "metrics.csv"]
    write_metrics_csv(reports, outputs[0])
    summary = None
    if reports:
        stats = summarize(reports)
        summary = render_metric_table(stats)
        outputs.append(out_dir / "summary.txt")
        outputs[-1].write_text(summary)
    if problems:
        outputs.append(out_dir / "errors.txt")
        outputs[-1].write_text("\n".join(problems) + "\n")
    _write_manifest(out_dir, args, args.argv, [pred_dir, gt_dir], outputs)

    if args.format == "csv":
        _emit(outputs[0].read_text())
    elif args.format == "json":
        _emit(_summary_json(stats) if reports else "{}")
    elif summary is not None:
        _emit(summary)
    print(f"evaluated {len(reports)} of {len(common)} matched cases", file=sys.stderr)
    for p in problems:
        print(f"error: {p}", file=sys.stderr)
    return EXIT_DATA if problems else EXIT_OK


# ---------------------------------------------------------------------------
# features


def _load_segmentations(records, seg_dir: Path, jobs: int) -> dict:
    available = find_volumes(seg_dir)
    for rec in records:
        if rec.case_id not in available:
            raise MissingSegmentation(rec.case_id)
    vols = _pmap(lambda r: load_volume(available[r.case_id]), list(records), jobs)
    return {r.case_id: v for r, v in zip(records, vols)}


def cmd_features(args) -> int:
    seg_dir = _require_dir(args.seg_dir, "segmentation directory")
    survival_csv = _require_file(args.survival_csv, "survival table")
    out = Path(args.out)
    records = filter_gtr(load_survival_csv(survival_csv))
    volumes = _load_segmentations(records, seg_dir, args.jobs)
    out.parent.mkdir(parents=True, exist_ok=True)
    n = write_feature_csv(records, volumes, out)
    _write_manifest(out.parent, args, args.argv, [seg_dir, survival_csv], [out])
    if args.format == "csv":
        _emit(out.read_text())
    elif args.format == "json":
        _emit(json.dumps({"rows": n, "output": str(out)}))
    print(f"wrote {n} GTR rows to {out}", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# survival


def _survival_dataset(args, include_age: bool):
    if args.features:
        if args.seg_dir or args.survival_csv:
            raise UsageError("use either --features or --seg-dir with --survival-csv, not both")
        path = _require_file(args.features, "feature table")
        return load_feature_csv(path, include_age), [path]
    if not (args.seg_dir and args.survival_csv):
        raise UsageError("survival needs --features, or both --seg-dir and --survival-csv")
    seg_dir = _require_dir(args.seg_dir, "segmentation directory")
    survival_csv = _require_file(args.survival_csv, "survival table")
    records = filter_gtr(load_survival_csv(survival_csv))
    volumes = _load_segmentations(records, seg_dir, args.jobs)
    return build_dataset(records, volumes, include_age), [seg_dir, survival_csv]


def _apply_overrides(specs, args):
    out = []
    for s in specs:
        if s.family.value == "svr":
            extra = {}
            if args.svr_c is not None:
                extra["C"] = args.svr_c
            if args.svr_epsilon is not None:
                extra["epsilon"] = args.svr_epsilon
            s = s.with_params(**extra) if extra else s
        out.append(s)
    return out


def cmd_survival(args) -> int:
    try:
        specs = _apply_overrides(resolve_models(args.models), args)
        cfg = CVConfig(k=args.k, seed=args.seed, normalize_mode=args.normalize,
                       clamp_nonneg=args.clamp_nonneg)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if args.k < 2:
        raise UsageError(f"--k must be at least 2, got {args.k}")
    include_age = not args.no_age
    d, inputs = _survival_dataset(args, include_age)
    if d.n < args.k:
        raise TooFewRecords(f"{d.n} usable GTR records for {args.k}-fold cross-validation")

    out_dir = Path(args.out)
    (out_dir / "plots").mkdir(parents=True, exist_ok=True)
    reports = _pmap(lambda s: cross_validate(s, d, cfg), specs, args.jobs)
    table = ComparisonTable.from_reports(reports)
    outputs = [out_dir / "comparison.csv", out_dir / "comparison.txt"]
    table.write_csv(outputs[0])
    text = table.render_all()
    outputs[1].write_text(text)
    for r in reports:
        p = out_dir / "plots" / f"{r.name}.csv"
        write_plot_csv(r, p)
        outputs.append(p)

    ablation = None
    if include_age and not args.no_ablation:
        names = {s.name for s in specs}
        families = {f: [m for m in ms if m in names] for f, ms in ABLATION_FAMILIES.items()}
        families = {f: ms for f, ms in families.items() if ms}
        if families:
            ablation = ablate_age(d, cfg, families, {r.name: r for r in reports},
                                  {s.name: s for s in specs})
            outputs += [out_dir / "ablation.txt", out_dir / "ablation.csv"]
            outputs[-2].write_text(ablation.render())
            with open(outputs[-1], "w", newline="") as fh:
                w = csv.DictWriter(fh, list(ablation.rows()[0]))
                w.writeheader()
                w.writerows(ablation.rows())

    if args.save_models:
        (out_dir / "models").mkdir(exist_ok=True)
        norm = normalize_fit(d.X)
        Xn = normalize_apply(norm, d.X)
        for s in specs:
            p = out_dir / "models" / f"{s.name}.json"
            save_model(s.fit(Xn, d.y, seed_offset=args.seed), p, d.feature_names, norm)
            outputs.append(p)

    _write_manifest(out_dir, args, args.argv, inputs, outputs)
    if args.format == "csv":
        _emit(outputs[0].read_text())
    elif args.format == "json":
        doc = {"models": table.rows(), "n_cases": d.n, "features": list(d.feature_names)}
        if ablation is not None:
            doc["ablation"] = ablation.rows()
        _emit(json.dumps(doc, indent=1))
    else:
        _emit(text + ("\n" + ablation.render() if ablation is not None else ""))
    return EXIT_OK


# ---------------------------------------------------------------------------
# report


def _csv_header(path: Path) -> tuple[str, ...]:
    with open(path, newline="") as fh:
        return tuple(next(csv.reader(fh), ()))


def cmd_report(args) -> int:
    path = _require_file(args.input, "input table")
    header = _csv_header(path)
    if header == METRICS_CSV_HEADER:
        reports = read_metrics_csv(path)
        if not reports:
            raise NoMatchingCases(f"{path} holds no cases")
        stats = summarize(reports)
        if args.format == "json":
            _emit(_summary_json(stats))
        elif args.format == "csv":
            buf = io.StringIO()
            w = csv.writer(buf)
            w.writerow(["metric", "region", "mean", "std", "median", "q25", "q75"])
            for m in METRICS:
                for r in REGIONS:
                    s = stats[(m, r)]
                    w.writerow([m, r.value] + [repr(v) for v in (s.mean, s.std, s.median, s.q25, s.q75)])
            _emit(buf.getvalue())
        else:
            _emit(render_metric_table(stats))
    elif header[:2] == ("model", "rmse"):
        table = ComparisonTable.read_csv(path)
        if args.format == "json":
            _emit(table.to_json())
        elif args.format == "csv":
            _emit(path.read_text())
        else:
            _emit(table.render_all())
    else:
        raise UsageError(f"{path}: not a metrics or comparison CSV")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser and dispatch


def _global_flags(p: argparse.ArgumentParser, defaults: bool) -> None:
    d = (lambda v: v) if defaults else (lambda v: argparse.SUPPRESS)
    p.add_argument("--seed", type=int, default=d(0), help="root seed for every random draw")
    p.add_argument("--jobs", type=int, default=d(1), help="worker threads (cases or models)")
    p.add_argument("--format", choices=("text", "csv", "json"), default=d("text"),
                   help="stdout format")
    p.add_argument("-v", "--verbose", action="store_true", default=d(False))


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="tumoreval", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("--replay", metavar="MANIFEST", help="re-run the command recorded in a manifest")
    ap.add_argument("--replay-out", metavar="PATH", help="with --replay, write outputs here instead")
    _global_flags(ap, defaults=True)
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    common = _Parser(add_help=False)
    _global_flags(common, defaults=False)

    p = sub.add_parser("segeval", parents=[common], help="segmentation metrics per case")
    p.add_argument("pred_dir")
    p.add_argument("gt_dir")
    p.add_argument("--out", default="segeval_out", help="output directory")
    p.add_argument("--empty-policy", default="diagonal",
                   help="HD95 when exactly one mask is empty: 'diagonal' or 'fixed:<mm>'")
    p.set_defaults(handler=cmd_segeval)

    p = sub.add_parser("features", parents=[common], help="volumetric feature table for GTR cases")
    p.add_argument("seg_dir")
    p.add_argument("survival_csv")
    p.add_argument("--out", default="features.csv", help="output CSV path")
    p.set_defaults(handler=cmd_features)

    p = sub.add_parser("survival", parents=[common], help="cross-validated survival regression")
    p.add_argument("--features", help="feature CSV written by 'features'")
    p.add_argument("--seg-dir")
    p.add_argument("--survival-csv")
    p.add_argument("--models", default="all", help="comma list of model names, families or 'all'")
    p.add_argument("--no-age", action="store_true", help="drop the age feature")
    p.add_argument("--k", type=int, default=5, help="number of folds")
    p.add_argument("--normalize", choices=("per_fold", "global"), default="per_fold")
    p.add_argument("--clamp-nonneg", action="store_true", help="clip negative predictions to 0")
    p.add_argument("--no-ablation", action="store_true", help="skip the with/without-age table")
    p.add_argument("--save-models", action="store_true", help="refit on all rows and save JSON models")
    p.add_argument("--svr-c", type=float, help="SVR box constraint")
    p.add_argument("--svr-epsilon", type=float, help="SVR tube half-width")
    p.add_argument("--out", default="survival_out", help="output directory")
    p.set_defaults(handler=cmd_survival)

    p = sub.add_parser("report", parents=[common], help="re-render a metrics or comparison CSV")
    p.add_argument("input")
    p.set_defaults(handler=cmd_report)
    return ap


def _replay_argv(manifest_path: str, out: str | None) -> list[str]:
    try:
        doc = json.loads(Path(manifest_path).read_text())
        argv = list(doc["argv"])
        digests = dict(doc["inputs"])
        cwd = Path(doc["cwd"])
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"cannot read manifest {manifest_path!r}: {exc}") from exc
    for path, digest in digests.items():
        if not Path(path).is_file():
            raise UsageError(f"replay input {path} is missing")
        if _sha256(Path(path)) != digest:
            raise UsageError(f"replay input {path} changed since the recorded run")
    if "--replay" in argv:
        raise UsageError("manifest records a replay; refusing to recurse")
    if out is not None:
        argv += ["--out", str(Path(out).resolve())]
    # relative paths in the recorded argv refer to the original directory
    if cwd.is_dir():
        os.chdir(cwd)
    return argv


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        if args.replay:
            if args.command:
                raise UsageError("--replay takes no subcommand")
            argv = _replay_argv(args.replay, args.replay_out)
            args = parser.parse_args(argv)
        if not args.command:
            parser.print_usage(sys.stderr)
            return EXIT_USAGE
        if args.jobs < 1:
            raise UsageError("--jobs must be at least 1")
        args.argv = argv
        return args.handler(args)
    except UsageError as exc:
        print(f"tumoreval: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _CONFIG_ERRORS as exc:
        print(f"tumoreval: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TumorEvalError as exc:
        print(f"tumoreval: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"tumoreval: I/O error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
