"""Post-run tooling: cue ablation, response-consistency probing, log reports.

Ablation removes each cue of a solution in turn and re-measures error on a
held-out split, showing whether every surviving cue pulls its weight.
Consistency probing repeats a single-cue evaluation on one building and
summarizes how much the estimator's answers wander.
"""

from __future__ import annotations

import json
import logging
import statistics
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .backends.base import EvaluationFailure, EvaluationRequest, Evaluator
from .dataset import BuildingRecord
from .engine import GenerationStats, evaluate_genotype
from .fitness import (
    HeatingClass,
    ValueRange,
    WindowClass,
    YearRange,
    heating_error,
    windows_error,
)
from .schema import CueSchema, DataItem, Genotype, validate_genotype

log = logging.getLogger(__name__)


class ReportError(ValueError):
    """Raised for malformed run-log input."""


def cv(values: Sequence[float]) -> float:
    """Coefficient of variation: population standard deviation over mean.

    Undefined (and refused) when the mean is zero.
    """
    if not values:
        raise ValueError("cv of an empty sequence")
    mean = statistics.fmean(values)
    if mean == 0:
        raise ValueError("cv undefined: mean is zero")
    return statistics.pstdev(values) / mean


@dataclass
class AblationRow:
    cue: str
    category: str
    new_error: float | None
    delta: float | None
    failed: bool = False


@dataclass
class AblationReport:
    base_error: float
    rows: list[AblationRow]
    mean_new_error: float | None
    stddev: float | None
    failed_rows: int

    def to_json_obj(self) -> dict:
        return {
            "base_error": self.base_error,
            "mean_new_error": self.mean_new_error,
            "stddev": self.stddev,
            "failed_rows": self.failed_rows,
            "rows": [
                {
                    "cue": r.cue,
                    "category": r.category,
                    "new_error": r.new_error,
                    "delta": r.delta,
                    "failed": r.failed,
                }
                for r in self.rows
            ],
        }


def _without_cue(genotype: Genotype, index: int, position: int) -> Genotype:
    chromosomes = [list(ch) for ch in genotype.chromosomes]
    del chromosomes[index][position]
    return Genotype(tuple(tuple(ch) for ch in chromosomes))


def ablate(
    genotype: Genotype,
    schema: CueSchema,
    evaluator: Evaluator,
    records: Sequence[BuildingRecord],
    item: DataItem,
) -> AblationReport:
    """Remove each cue in turn and record the error change against the full genotype.

    The summary mean and (population) standard deviation cover successful
    rows only; rows whose evaluation permanently fails are marked and counted.
    """
    item = DataItem(item)
    validate_genotype(genotype, schema)
    if genotype.cue_count() == 0:
        raise ValueError("cannot ablate an empty genotype")
    if not records:
        raise ValueError("evaluation split is empty")
    base_error = evaluate_genotype(
        genotype, records, item, evaluator, penalize_failures=False
    )
    rows: list[AblationRow] = []
    for index, chromosome in enumerate(genotype.chromosomes):
        for position, cue in enumerate(chromosome):
            variant = _without_cue(genotype, index, position)
            category = schema.categories[index].name
            try:
                new_error = evaluate_genotype(
                    variant, records, item, evaluator, penalize_failures=False
                )
            except EvaluationFailure as exc:
                log.warning("ablation row for cue %r failed: %s", cue, exc)
                rows.append(AblationRow(cue=cue, category=category, new_error=None,
                                        delta=None, failed=True))
                continue
            rows.append(
                AblationRow(cue=cue, category=category, new_error=new_error,
                            delta=new_error - base_error)
            )
    successful = [r.new_error for r in rows if not r.failed]
    return AblationReport(
        base_error=base_error,
        rows=rows,
        mean_new_error=statistics.fmean(successful) if successful else None,
        stddev=statistics.pstdev(successful) if successful else None,
        failed_rows=len(rows) - len(successful),
    )


@dataclass
class ConsistencyReport:
    cue: str
    samples: int
    disagreement_rate: float
    cv: float | None
    values: list[float]
    responses: list[str]

    def to_json_obj(self) -> dict:
        return {
            "cue": self.cue,
            "samples": self.samples,
            "disagreement_rate": self.disagreement_rate,
            "cv": self.cv,
            "values": self.values,
            "responses": self.responses,
        }


def _single_cue_genotype(schema: CueSchema, category_index: int, cue: str) -> Genotype:
    chromosomes = [() for _ in schema.categories]
    chromosomes[category_index] = (cue,)
    genotype = Genotype(tuple(chromosomes))
    validate_genotype(genotype, schema)
    return genotype


def _coded_value(item: DataItem, estimate, truth) -> float:
    """Numeric coding for consistency statistics.

    Categorical answers are coded by their error-matrix distance from the
    building's ground truth, numeric answers are used directly (range
    estimates by their midpoint).
    """
    if item is DataItem.HEATING:
        return float(heating_error(estimate, truth.heating))
    if item is DataItem.WINDOWS:
        return float(windows_error(estimate, truth.windows))
    if isinstance(estimate, YearRange):
        return (estimate.start + estimate.end) / 2.0
    if isinstance(estimate, ValueRange):
        return estimate.midpoint
    return float(estimate)


def _render_response(estimate) -> str:
    if isinstance(estimate, (HeatingClass, WindowClass)):
        return estimate.value
    if isinstance(estimate, YearRange):
        return f"{estimate.start}-{estimate.end}"
    if isinstance(estimate, ValueRange):
        return f"{estimate.start}-{estimate.end}" if not estimate.is_point else f"{estimate.start}"
    return f"{estimate}"


def consistency_probe(
    schema: CueSchema,
    category_index: int,
    cue: str,
    building: BuildingRecord,
    evaluator: Evaluator,
    item: DataItem,
    n: int,
) -> ConsistencyReport:
    """Evaluate a lone cue ``n`` times on one building and summarize the spread.

    Disagreement rate is the fraction of answers differing from the modal
    answer (ties broken by first observation); cv is reported as absent when
    its mean is zero. Failed samples are skipped; if every sample fails the
    probe raises.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    item = DataItem(item)
    genotype = _single_cue_genotype(schema, category_index, cue)
    values: list[float] = []
    responses: list[str] = []
    failures = 0
    for counter in range(n):
        request = EvaluationRequest(
            genotype=genotype, building=building, data_item=item, eval_counter=counter
        )
        try:
            estimate = evaluator.evaluate(request)
        except EvaluationFailure as exc:
            failures += 1
            log.warning("probe sample %d failed: %s", counter, exc)
            continue
        values.append(_coded_value(item, estimate, building.truth))
        responses.append(_render_response(estimate))
    if not values:
        raise EvaluationFailure(f"all {n} probe evaluations failed")

    first_seen: dict[float, int] = {}
    counts: dict[float, int] = {}
    for i, value in enumerate(values):
        first_seen.setdefault(value, i)
        counts[value] = counts.get(value, 0) + 1
    mode = max(counts, key=lambda v: (counts[v], -first_seen[v]))
    disagreement = sum(1 for v in values if v != mode) / len(values)
    try:
        spread = cv(values)
    except ValueError:
        spread = None
    return ConsistencyReport(
        cue=cue,
        samples=len(values),
        disagreement_rate=disagreement,
        cv=spread,
        values=values,
        responses=responses,
    )


# --- run-log reports ----------------------------------------------------------


def load_run_log(path: str | Path) -> tuple[dict | None, list[GenerationStats]]:
    """Read a JSONL run log; returns (config record or None, generation rows)."""
    path = Path(path)
    config: dict | None = None
    rows: list[GenerationStats] = []
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ReportError(f"cannot read log {path}: {exc}") from None
    if not lines:
        raise ReportError(f"{path}:1: log file is empty")
    for number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ReportError(f"{path}:{number}: invalid JSON: {exc.msg}") from None
        kind = obj.get("type")
        if kind == "config":
            config = obj
        elif kind == "generation":
            try:
                rows.append(GenerationStats.from_json_obj(obj))
            except TypeError as exc:
                raise ReportError(f"{path}:{number}: bad generation record: {exc}") from None
        else:
            raise ReportError(f"{path}:{number}: unknown record type {kind!r}")
    if not rows:
        raise ReportError(f"{path}:1: no generation records")
    return config, rows


def run_series(rows: list[GenerationStats]) -> list[dict]:
    """Per-generation series: error distribution stats, fitness cv, cue counts."""
    series = []
    for row in rows:
        try:
            fitness_cv = cv(row.errors)
        except ValueError:
            fitness_cv = None
        series.append(
            {
                "generation": row.generation,
                "best_error": row.best_error,
                "best_ever_error": row.best_ever_error,
                "mean_error": statistics.fmean(row.errors),
                "fitness_cv": fitness_cv,
                "mean_cue_count": row.mean_cue_count,
                "chromosome_mean_cue_counts": list(row.chromosome_mean_cue_counts),
                "errors": list(row.errors),
            }
        )
    return series


def comparison_series(labeled_runs: list[tuple[str, list[GenerationStats]]]) -> list[dict]:
    """Generation-aligned comparison of best error and fitness cv across runs."""
    longest = max(len(rows) for _, rows in labeled_runs)
    out = []
    per_run = {label: run_series(rows) for label, rows in labeled_runs}
    for generation in range(longest):
        entry: dict = {"generation": generation}
        for label, series in per_run.items():
            if generation < len(series):
                entry[f"{label}_best_error"] = series[generation]["best_error"]
                entry[f"{label}_fitness_cv"] = series[generation]["fitness_cv"]
            else:
                entry[f"{label}_best_error"] = None
                entry[f"{label}_fitness_cv"] = None
        out.append(entry)
    return out


def summarize(labeled_runs: list[tuple[str, list[GenerationStats]]]) -> dict:
    """One summary document over run logs: per-run series plus, for two or
    more runs (e.g. fixed vs variable, or categorical vs continuous windows),
    a generation-aligned comparison with the per-generation fitness cv."""
    if not labeled_runs:
        raise ValueError("no runs to summarize")
    document: dict = {"runs": {label: run_series(rows) for label, rows in labeled_runs}}
    if len(labeled_runs) > 1:
        document["comparison"] = comparison_series(labeled_runs)
    return document


def render_text_summary(label: str, rows: list[GenerationStats]) -> str:
    series = run_series(rows)
    first, last = series[0], series[-1]
    lines = [
        f"run {label}: {len(series)} generations",
        f"  best error: {first['best_error']:g} -> {last['best_error']:g} "
        f"(best ever {last['best_ever_error']:g})",
        f"  mean cue count: {first['mean_cue_count']:.2f} -> {last['mean_cue_count']:.2f}",
    ]
    return "\n".join(lines)
