"""Command-line entry point for schema generation, runs, and analyses.

Exit codes: 0 success, 1 usage, 2 I/O or configuration problem,
3 backend failure (the run is resumable from its checkpoint).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import re
import sys
from pathlib import Path
from random import Random

from . import analysis
from .backends import (
    AuthenticationError,
    BackendHardFailure,
    HttpTransport,
    LlmEvaluator,
    OracleEvaluator,
    SchemaGenerationError,
    generate_schema,
    load_landscape_file,
)
from .dataset import DatasetError, load_manifest, manifest_digest, split_records
from .engine import (
    CheckpointError,
    EvolutionRun,
    Mode,
    RunAborted,
    RunConfig,
    load_checkpoint_file,
)
from .schema import (
    DataItem,
    Genotype,
    SchemaError,
    load_schema_file,
    render_cue_list,
    save_schema,
    schema_digest,
)

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONFIG = 2
EXIT_BACKEND = 3

LOG_FILENAME = "run.log.jsonl"
CHECKPOINT_FILENAME = "checkpoint.json"
BEST_FILENAME = "best.json"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # exit 1 on usage problems, not argparse's 2
        raise UsageError(f"{self.prog}: {message}")


def _add_llm_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--model", default=None, help="chat model name (default gpt-4o)")
    parser.add_argument("--endpoint", default=None, help="base URL override for the LLM API")
    parser.add_argument(
        "--min-interval", type=float, default=None,
        help="minimum seconds between LLM requests (rate ceiling)",
    )


def _add_backend_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--backend", choices=["oracle", "llm"], default=None)
    parser.add_argument("--landscape", default=None, help="landscape JSON file (oracle backend)")
    _add_llm_flags(parser)


def build_parser() -> _Parser:
    parser = _Parser(prog="clear-ga", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-schema", help="generate a cue schema from a dataset via the LLM")
    p.add_argument("--item", required=True, choices=[i.value for i in DataItem])
    p.add_argument("--dataset", required=True, help="dataset manifest JSON")
    p.add_argument("--out", required=True, help="schema file to write")
    p.add_argument("--region", default=None, help="region override (default: first building's)")
    p.add_argument("--seed", type=int, default=0, help="representative sampling seed")
    p.add_argument("--clusters", type=int, default=8, help="target category count")
    p.add_argument("--retry-limit", type=int, default=2)
    p.add_argument("--current-year", type=int, default=2025)
    _add_llm_flags(p)
    p.set_defaults(func=cmd_gen_schema)

    p = sub.add_parser("run", help="run the evolutionary search")
    p.add_argument("--item", default=None, choices=[i.value for i in DataItem])
    p.add_argument("--mode", default=None, choices=[m.value for m in Mode])
    p.add_argument("--schema", default=None, help="schema JSON file")
    p.add_argument("--dataset", default=None, help="dataset manifest JSON")
    p.add_argument("--out-dir", default=None, help="directory for log/checkpoint/best files")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--seeds", default=None, metavar="A..B", help="inclusive seed range loop")
    p.add_argument("--config", default=None, help="JSON config file (flags override it)")
    p.add_argument("--population-size", type=int, default=None)
    p.add_argument("--generations", type=int, default=None)
    p.add_argument("--parent-fraction", type=float, default=None)
    p.add_argument("--elites", type=int, default=None)
    p.add_argument("--mutation-ops", type=int, default=None)
    p.add_argument("--concurrency", type=int, default=None)
    p.add_argument("--retry-limit", type=int, default=None)
    p.add_argument("--current-year", type=int, default=None)
    p.add_argument("--train-fraction", type=float, default=0.6)
    p.add_argument(
        "--stop-after", type=int, default=None, metavar="GEN",
        help="pause after this generation's evaluation; resume later",
    )
    _add_backend_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("resume", help="continue a checkpointed run")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--concurrency", type=int, default=None)
    p.add_argument("--stop-after", type=int, default=None, metavar="GEN")
    p.add_argument("--endpoint", default=None)
    p.set_defaults(func=cmd_resume)

    p = sub.add_parser("ablate", help="remove each cue of a solution in turn and re-measure")
    p.add_argument("--genotype", required=True, help="best-genotype JSON from a run")
    p.add_argument("--schema", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--split", choices=["train", "test"], default="test")
    p.add_argument("--item", default=None, choices=[i.value for i in DataItem])
    p.add_argument("--seed", type=int, default=None, help="split seed (default: from genotype file)")
    p.add_argument("--train-fraction", type=float, default=0.6)
    p.add_argument("--current-year", type=int, default=2025)
    p.add_argument("--retry-limit", type=int, default=3)
    p.add_argument("--out", default=None, help="CSV report path")
    _add_backend_flags(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("probe", help="repeat a single-cue evaluation to measure consistency")
    p.add_argument("--schema", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--item", required=True, choices=[i.value for i in DataItem])
    p.add_argument("--cue", required=True)
    p.add_argument("--category", default=None, help="category name (if the cue is ambiguous)")
    p.add_argument("--building", required=True, help="building id from the manifest")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--current-year", type=int, default=2025)
    p.add_argument("--retry-limit", type=int, default=3)
    p.add_argument("--out", default=None, help="JSON report path")
    _add_backend_flags(p)
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("report", help="summarize one or more run logs")
    p.add_argument("--log", required=True, nargs="+", help="run log file(s)")
    p.add_argument("--out-dir", default=None, help="directory for CSV series")
    p.set_defaults(func=cmd_report)

    return parser


def _make_transport(args) -> HttpTransport:
    return HttpTransport(
        endpoint=args.endpoint,
        model=args.model or "gpt-4o",
        min_request_interval=args.min_interval or 0.0,
    )


def _make_evaluator(args, config: RunConfig):
    if config.backend == "oracle":
        if not config.landscape_path:
            raise UsageError("oracle backend needs --landscape")
        landscape = load_landscape_file(config.landscape_path)
        return OracleEvaluator(landscape)
    transport = HttpTransport(
        endpoint=getattr(args, "endpoint", None),
        model=config.llm_model,
        min_request_interval=config.llm_min_interval,
    )
    return LlmEvaluator(
        transport, retry_limit=config.retry_limit, current_year=config.current_year
    )


def _write_best(path: Path, config: RunConfig, result) -> None:
    doc = {
        "data_item": config.data_item.value,
        "mode": config.mode.value,
        "seed": config.seed,
        "best_error": result.best_recorded_error,
        "cue_list": render_cue_list(result.best_genotype),
        "chromosomes": [list(ch) for ch in result.best_genotype.chromosomes],
    }
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def _parse_seeds(text: str) -> list[int]:
    m = re.fullmatch(r"(\d+)\.\.(\d+)", text)
    if not m:
        raise UsageError(f"--seeds must look like A..B, got {text!r}")
    start, end = int(m.group(1)), int(m.group(2))
    if end < start:
        raise UsageError(f"--seeds range is empty: {text!r}")
    return list(range(start, end + 1))


def cmd_gen_schema(args) -> int:
    try:
        transport = _make_transport(args)
    except AuthenticationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    records = load_manifest(args.dataset, current_year=args.current_year)
    try:
        schema = generate_schema(
            records,
            DataItem(args.item),
            transport,
            Random(args.seed),
            region=args.region,
            cluster_target=args.clusters,
            retry_limit=args.retry_limit,
        )
    except SchemaGenerationError as exc:
        if exc.raw_response:
            raw_path = Path(args.out).with_suffix(".raw.txt")
            raw_path.write_text(exc.raw_response, encoding="utf-8")
            print(f"error: {exc} (raw response saved to {raw_path})", file=sys.stderr)
        else:
            print(f"error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    save_schema(schema, args.out)
    total = sum(len(c.cues) for c in schema.categories)
    print(f"wrote {args.out}: {schema.category_count} categories, {total} cues")
    for category in schema.categories:
        print(f"  {category.name}: {len(category.cues)} cues")
    return EXIT_OK


def _build_run_config(args, seed: int, out_dir: Path) -> RunConfig:
    values: dict = {}
    if args.config:
        try:
            values.update(json.loads(Path(args.config).read_text(encoding="utf-8")))
        except json.JSONDecodeError as exc:
            raise DatasetError(f"config file {args.config} is not valid JSON: {exc}") from None
    flag_map = {
        "data_item": args.item,
        "mode": args.mode,
        "population_size": args.population_size,
        "generations": args.generations,
        "parent_fraction": args.parent_fraction,
        "elites": args.elites,
        "mutation_ops_per_child": args.mutation_ops,
        "evaluation_concurrency": args.concurrency,
        "retry_limit": args.retry_limit,
        "current_year": args.current_year,
        "backend": args.backend,
        "llm_model": args.model,
        "llm_min_interval": args.min_interval,
        "schema_path": args.schema,
        "dataset_path": args.dataset,
        "landscape_path": args.landscape,
    }
    values.update({k: v for k, v in flag_map.items() if v is not None})
    if "data_item" not in values:
        raise UsageError("--item is required (or provide data_item in --config)")
    values["seed"] = seed
    values["checkpoint_path"] = str(out_dir / CHECKPOINT_FILENAME)
    values["log_path"] = str(out_dir / LOG_FILENAME)
    try:
        return RunConfig(**values)
    except TypeError as exc:
        raise UsageError(f"bad config: {exc}") from None


def _run_one(args, seed: int | None, out_dir: Path) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    config = _build_run_config(args, seed if seed is not None else 0, out_dir)
    if config.backend == "oracle" and seed is None:
        raise UsageError("oracle runs need --seed (or --seeds) for reproducibility")
    if not config.schema_path or not config.dataset_path:
        raise UsageError("--schema and --dataset are required")
    schema = load_schema_file(config.schema_path)
    config.schema_sha256 = schema_digest(schema)
    config.dataset_sha256 = manifest_digest(config.dataset_path)
    records = load_manifest(config.dataset_path, current_year=config.current_year)
    training, _ = split_records(
        records, config.data_item, Random(config.seed), train_fraction=args.train_fraction
    )
    evaluator = _make_evaluator(args, config)
    run = EvolutionRun(config, schema, evaluator, training)
    result = run.run(stop_after_generation=args.stop_after)
    if not result.completed:
        print(
            f"paused after generation {run.generation}; resume with: "
            f"clear-ga resume --checkpoint {config.checkpoint_path}"
        )
        return EXIT_OK
    _write_best(out_dir / BEST_FILENAME, config, result)
    print(
        f"seed {seed}: best error {result.best_recorded_error:g} "
        f"({len(result.per_generation_log)} generations logged)"
    )
    print(f"  best cues: {render_cue_list(result.best_genotype) or '(none)'}")
    print(f"  outputs in {out_dir}")
    return EXIT_OK


def cmd_run(args) -> int:
    out_dir = Path(args.out_dir) if args.out_dir else Path("runs")
    if args.seeds is not None:
        for seed in _parse_seeds(args.seeds):
            status = _run_one(args, seed, out_dir / f"seed{seed}")
            if status != EXIT_OK:
                return status
        return EXIT_OK
    return _run_one(args, args.seed, out_dir)


def cmd_resume(args) -> int:
    doc = load_checkpoint_file(args.checkpoint)
    try:
        config = RunConfig.from_json_obj(doc["config"])
    except KeyError:
        raise CheckpointError("checkpoint has no config record") from None
    if args.concurrency is not None:
        config.evaluation_concurrency = args.concurrency
        doc["config"]["evaluation_concurrency"] = args.concurrency
    if not config.schema_path or not config.dataset_path:
        raise CheckpointError("checkpoint config lacks schema/dataset paths")
    schema = load_schema_file(config.schema_path)
    records = load_manifest(config.dataset_path, current_year=config.current_year)
    training, _ = split_records(records, config.data_item, Random(config.seed))
    evaluator = _make_evaluator(args, config)
    run = EvolutionRun.resume(
        doc,
        schema,
        evaluator,
        training,
        schema_sha256=schema_digest(schema),
        dataset_sha256=manifest_digest(config.dataset_path),
    )
    if run.finished:
        print(f"run already complete at generation {run.generation}; nothing to do")
        return EXIT_OK
    result = run.run(stop_after_generation=args.stop_after)
    if not result.completed:
        print(
            f"paused after generation {run.generation}; resume with: "
            f"clear-ga resume --checkpoint {config.checkpoint_path}"
        )
        return EXIT_OK
    out_dir = Path(args.checkpoint).parent
    _write_best(out_dir / BEST_FILENAME, config, result)
    print(f"resumed run finished: best error {result.best_recorded_error:g}")
    return EXIT_OK


def _load_best_genotype(path: str) -> tuple[dict, Genotype]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        return doc, Genotype(tuple(tuple(ch) for ch in doc["chromosomes"]))
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise DatasetError(f"bad genotype file {path}: {exc}") from None


def _analysis_config(args, item: DataItem, seed: int) -> RunConfig:
    return RunConfig(
        data_item=item,
        seed=seed,
        backend=args.backend or "oracle",
        landscape_path=args.landscape,
        llm_model=args.model or "gpt-4o",
        llm_min_interval=args.min_interval or 0.0,
        retry_limit=args.retry_limit,
        current_year=args.current_year,
    )


def cmd_ablate(args) -> int:
    doc, genotype = _load_best_genotype(args.genotype)
    item = DataItem(args.item) if args.item else DataItem(doc["data_item"])
    seed = args.seed if args.seed is not None else int(doc.get("seed", 0))
    schema = load_schema_file(args.schema)
    records = load_manifest(args.dataset, current_year=args.current_year)
    training, test = split_records(
        records, item, Random(seed), train_fraction=args.train_fraction
    )
    split = training if args.split == "train" else test
    evaluator = _make_evaluator(args, _analysis_config(args, item, seed))
    report = analysis.ablate(genotype, schema, evaluator, split, item)
    print(f"base error on {args.split} split: {report.base_error:g}")
    for row in report.rows:
        if row.failed:
            print(f"  - {row.cue} [{row.category}]: evaluation failed")
        else:
            print(f"  - {row.cue} [{row.category}]: {row.new_error:g} (delta {row.delta:+g})")
    if report.mean_new_error is not None:
        print(f"mean new error {report.mean_new_error:g}, stddev {report.stddev:g}")
    if report.failed_rows:
        print(f"warning: {report.failed_rows} row(s) failed and were excluded")
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["cue", "category", "new_error", "delta", "failed"])
            for row in report.rows:
                writer.writerow([row.cue, row.category, row.new_error, row.delta, row.failed])
        print(f"wrote {args.out}")
    return EXIT_OK


def cmd_probe(args) -> int:
    schema = load_schema_file(args.schema)
    item = DataItem(args.item)
    records = load_manifest(args.dataset, current_year=args.current_year)
    by_id = {r.id: r for r in records}
    if args.building not in by_id:
        raise DatasetError(f"building {args.building!r} not in manifest")
    matches = [
        i for i, category in enumerate(schema.categories)
        if args.cue in category.cues and (args.category is None or category.name == args.category)
    ]
    if not matches:
        raise UsageError(f"cue {args.cue!r} not found in schema")
    if len(matches) > 1:
        raise UsageError(f"cue {args.cue!r} is in several categories; pass --category")
    evaluator = _make_evaluator(args, _analysis_config(args, item, 0))
    report = analysis.consistency_probe(
        schema, matches[0], args.cue, by_id[args.building], evaluator, item, args.n
    )
    cv_text = f"{report.cv:.4f}" if report.cv is not None else "undefined (mean 0)"
    print(f"cue {report.cue!r} on building {args.building} ({report.samples} samples)")
    print(f"  disagreement rate: {report.disagreement_rate:.2f}")
    print(f"  cv: {cv_text}")
    print(f"  responses: {report.responses}")
    if args.out:
        Path(args.out).write_text(
            json.dumps(report.to_json_obj(), indent=2) + "\n", encoding="utf-8"
        )
        print(f"wrote {args.out}")
    return EXIT_OK


def _write_csv(path: Path, rows: list[dict]) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        for row in rows:
            writer.writerow(
                {k: (json.dumps(v) if isinstance(v, list) else v) for k, v in row.items()}
            )


def cmd_report(args) -> int:
    labeled = []
    for path in args.log:
        config, rows = analysis.load_run_log(path)
        label = Path(path).parent.name or Path(path).stem
        if config:
            cfg = config.get("config", {})
            label = f"{cfg.get('data_item', label)}_{cfg.get('mode', '')}_s{cfg.get('seed', '')}"
        labeled.append((label, rows))
        print(analysis.render_text_summary(label, rows))
    summary = analysis.summarize(labeled)
    if args.out_dir:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for label, series in summary["runs"].items():
            path = out_dir / f"{label}_series.csv"
            _write_csv(path, series)
            print(f"wrote {path}")
        if "comparison" in summary:
            path = out_dir / "comparison.csv"
            _write_csv(path, summary["comparison"])
            print(f"wrote {path}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RunAborted as exc:
        print(f"error: {exc}", file=sys.stderr)
        if exc.checkpoint_path:
            print(f"resume with: clear-ga resume --checkpoint {exc.checkpoint_path}", file=sys.stderr)
        return EXIT_BACKEND
    except (BackendHardFailure, SchemaGenerationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except AuthenticationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SchemaError, DatasetError, CheckpointError, analysis.ReportError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def entry_point() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
