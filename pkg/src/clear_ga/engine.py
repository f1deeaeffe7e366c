"""The generational loop: evaluation dispatch, worst-of ledger, selection,
elitism, reproduction, termination, and checkpoint/resume.

Every member is re-evaluated every generation, elites included; the ledger
keeps the worst error ever recorded per genotype key, which penalizes
solutions that only look good under a lucky draw of estimator noise. The
loop is deterministic given the seed and a deterministic evaluator: the
random stream is consumed only by initialization and reproduction, never by
evaluation, and ledger merging is commutative, so results are identical at
any evaluation concurrency.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import threading
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import asdict, dataclass
from enum import Enum
from pathlib import Path
from random import Random
from typing import Callable, Sequence

from .backends.base import BackendHardFailure, EvaluationFailure, EvaluationRequest, Evaluator
from .dataset import BuildingRecord, require_truth
from .fitness import aggregate_fitness, building_error, failure_penalty
from .genome import crossover_fixed, crossover_variable, mutate_fixed, mutate_variable
from .schema import CueSchema, DataItem, Genotype, canonical_key, random_genotype

log = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "clear-ga/checkpoint/1"


class Mode(str, Enum):
    FIXED = "fixed"
    VARIABLE = "variable"


class CheckpointError(ValueError):
    """Raised for unreadable or structurally invalid checkpoint documents."""


class ConfigMismatchError(CheckpointError):
    """Resume inputs do not match what the checkpoint was written with."""


class RunAborted(RuntimeError):
    """The evaluator hard-failed; ``checkpoint_path`` names the resumable state."""

    def __init__(self, message: str, checkpoint_path: str | None):
        super().__init__(message)
        self.checkpoint_path = checkpoint_path


@dataclass
class RunConfig:
    """Hyperparameters, data item, backend choice, seed, and output paths."""

    data_item: DataItem
    mode: Mode = Mode.VARIABLE
    population_size: int = 15
    generations: int = 20
    parent_fraction: float = 0.33
    elites: int = 2
    seed: int = 0
    mutation_ops_per_child: int = 1
    evaluation_concurrency: int = 1
    retry_limit: int = 3
    current_year: int = 2025
    backend: str = "oracle"
    llm_model: str = "gpt-4o"
    llm_min_interval: float = 0.0
    schema_path: str | None = None
    dataset_path: str | None = None
    landscape_path: str | None = None
    checkpoint_path: str | None = None
    log_path: str | None = None
    schema_sha256: str = ""
    dataset_sha256: str = ""

    def __post_init__(self) -> None:
        self.data_item = DataItem(self.data_item)
        self.mode = Mode(self.mode)
        if self.population_size < 2:
            raise ValueError("population_size must be >= 2")
        if not 0 < self.parent_fraction <= 1:
            raise ValueError("parent_fraction must be in (0, 1]")
        if not 0 <= self.elites < self.population_size:
            raise ValueError("elites must be in [0, population_size)")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")
        if self.mutation_ops_per_child < 0:
            raise ValueError("mutation_ops_per_child must be >= 0")
        if self.evaluation_concurrency < 1:
            raise ValueError("evaluation_concurrency must be >= 1")
        if self.retry_limit < 0:
            raise ValueError("retry_limit must be >= 0")
        if self.backend not in ("oracle", "llm"):
            raise ValueError(f"backend must be 'oracle' or 'llm', got {self.backend!r}")

    # Fields that define the run's semantics; anything else (paths, worker
    # counts) may change between checkpoint and resume without altering the
    # result.
    _SEMANTIC_FIELDS = (
        "data_item",
        "mode",
        "population_size",
        "generations",
        "parent_fraction",
        "elites",
        "seed",
        "mutation_ops_per_child",
        "current_year",
        "schema_sha256",
        "dataset_sha256",
    )

    def digest(self) -> str:
        payload = {name: getattr(self, name) for name in self._SEMANTIC_FIELDS}
        payload["data_item"] = self.data_item.value
        payload["mode"] = self.mode.value
        canonical = json.dumps(payload, sort_keys=True)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def to_json_obj(self) -> dict:
        obj = asdict(self)
        obj["data_item"] = self.data_item.value
        obj["mode"] = self.mode.value
        return obj

    @classmethod
    def from_json_obj(cls, obj: dict) -> "RunConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(obj) - known
        if unknown:
            raise CheckpointError(f"unknown config fields: {sorted(unknown)}")
        return cls(**obj)


@dataclass
class LedgerEntry:
    worst_error: float
    evaluations: int
    first_seen_generation: int


class FitnessLedger:
    """Worst-of fitness cache keyed by canonical genotype key.

    ``record`` merges with max, so applying the same multiset of records in
    any order yields the same ledger; that property is what makes concurrent
    evaluation order-irrelevant.
    """

    def __init__(self) -> None:
        self.entries: dict[str, LedgerEntry] = {}
        self._lock = threading.Lock()

    def record(self, key: str, error: float, generation: int) -> LedgerEntry:
        if error < 0:
            raise ValueError("error must be >= 0")
        with self._lock:
            entry = self.entries.get(key)
            if entry is None:
                entry = LedgerEntry(worst_error=error, evaluations=1, first_seen_generation=generation)
                self.entries[key] = entry
            else:
                entry.worst_error = max(entry.worst_error, error)
                entry.evaluations += 1
                entry.first_seen_generation = min(entry.first_seen_generation, generation)
            return entry

    def worst(self, key: str) -> float:
        return self.entries[key].worst_error

    def evaluations(self, key: str) -> int:
        entry = self.entries.get(key)
        return entry.evaluations if entry else 0

    def best_key(self) -> str:
        """Key with the lowest worst-of error; earliest-recorded wins ties."""
        if not self.entries:
            raise ValueError("ledger is empty")
        best = None
        best_error = math.inf
        for key, entry in self.entries.items():
            if entry.worst_error < best_error:
                best = key
                best_error = entry.worst_error
        return best

    def to_json_obj(self) -> list[dict]:
        return [
            {"key": key, "worst_error": e.worst_error, "evaluations": e.evaluations,
             "first_seen_generation": e.first_seen_generation}
            for key, e in self.entries.items()
        ]

    @classmethod
    def from_json_obj(cls, rows: list[dict]) -> "FitnessLedger":
        ledger = cls()
        for row in rows:
            ledger.entries[row["key"]] = LedgerEntry(
                worst_error=row["worst_error"],
                evaluations=row["evaluations"],
                first_seen_generation=row["first_seen_generation"],
            )
        return ledger


@dataclass
class Member:
    genotype: Genotype
    recorded_error: float | None = None


@dataclass
class GenerationStats:
    """One machine-readable run-log row: the data behind fitness/cue-count plots."""

    generation: int
    errors: list[float]
    best_error: float
    best_ever_error: float
    mean_cue_count: float
    chromosome_mean_cue_counts: list[float]
    parent_pool_size: int | None
    perfect: bool

    def to_json_obj(self) -> dict:
        obj = asdict(self)
        obj["type"] = "generation"
        return obj

    @classmethod
    def from_json_obj(cls, obj: dict) -> "GenerationStats":
        fields = {k: v for k, v in obj.items() if k != "type"}
        return cls(**fields)


@dataclass
class RunResult:
    best_genotype: Genotype
    best_recorded_error: float
    per_generation_log: list[GenerationStats]
    completed: bool


def evaluate_genotype(
    genotype: Genotype,
    records: Sequence[BuildingRecord],
    item: DataItem,
    evaluator: Evaluator,
    eval_counter: int = 0,
    penalize_failures: bool = True,
) -> float:
    """Sum of per-building errors for one genotype over a split.

    A permanent per-building failure either charges the item's worst-case
    penalty (engine policy) or propagates, per ``penalize_failures``.
    """
    errors = []
    for building in records:
        request = EvaluationRequest(
            genotype=genotype, building=building, data_item=item, eval_counter=eval_counter
        )
        try:
            estimate = evaluator.evaluate(request)
            errors.append(building_error(item, estimate, building.truth))
        except EvaluationFailure:
            if not penalize_failures:
                raise
            log.warning("building %s: estimate unavailable, charging failure penalty", building.id)
            errors.append(failure_penalty(item))
    return aggregate_fitness(errors)


def parent_pool_size(population_size: int, parent_fraction: float) -> int:
    return math.ceil(parent_fraction * population_size)


def select_parents(population: Sequence[Member], parent_fraction: float) -> list[Member]:
    """Best ceil(fraction * N) members, ranked by recorded error, ties stable."""
    if any(m.recorded_error is None for m in population):
        raise ValueError("population must be evaluated before selection")
    ranked = sorted(population, key=lambda m: m.recorded_error)
    pool = ranked[: parent_pool_size(len(population), parent_fraction)]
    if not pool:
        raise ValueError("parent pool is empty")
    return pool


def next_generation(
    population: Sequence[Member],
    schema: CueSchema,
    config: RunConfig,
    rng: Random,
) -> tuple[list[Member], int]:
    """Elites copied verbatim plus crossover+mutation offspring; returns (members, pool size)."""
    ranked = sorted(population, key=lambda m: m.recorded_error)
    elites = [Member(m.genotype) for m in ranked[: config.elites]]
    pool = select_parents(population, config.parent_fraction)
    if config.mode is Mode.FIXED:
        crossover, mutate = crossover_fixed, mutate_fixed
    else:
        crossover, mutate = crossover_variable, mutate_variable
    offspring: list[Member] = []
    for _ in range(config.population_size - config.elites):
        first = rng.randrange(len(pool))
        second = rng.randrange(len(pool))
        while len(pool) >= 2 and second == first:
            second = rng.randrange(len(pool))
        child = crossover(pool[first].genotype, pool[second].genotype, rng)
        for _ in range(config.mutation_ops_per_child):
            child = mutate(child, schema, rng)
        offspring.append(Member(child))
    return elites + offspring, len(pool)


def _rng_state_to_json(state: tuple) -> list:
    version, internal, gauss_next = state
    return [version, list(internal), gauss_next]

def _rng_state_from_json(obj: list) -> tuple:
    version, internal, gauss_next = obj
    return (version, tuple(internal), gauss_next)


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


OnGeneration = Callable[[GenerationStats, list[Member]], None]


class EvolutionRun:
    """State of one run; construct fresh or via :meth:`resume`, then call :meth:`run`."""

    def __init__(
        self,
        config: RunConfig,
        schema: CueSchema,
        evaluator: Evaluator,
        training: Sequence[BuildingRecord],
    ):
        if schema.data_item is not config.data_item:
            raise ValueError(
                f"schema is for {schema.data_item.value!r}, run wants {config.data_item.value!r}"
            )
        if not training:
            raise ValueError("training split is empty")
        require_truth(list(training), config.data_item)
        self.config = config
        self.schema = schema
        self.evaluator = evaluator
        self.training = list(training)
        self.rng = Random(config.seed)
        self.generation = 0
        self.population = [
            Member(random_genotype(schema, self.rng)) for _ in range(config.population_size)
        ]
        self.ledger = FitnessLedger()
        self.genotypes_by_key: dict[str, Genotype] = {}
        self.log_rows: list[GenerationStats] = []
        self._evaluated = False
        self._last_pool_size: int | None = None
        self._log_started = False

    # -- persistence -----------------------------------------------------

    def checkpoint_obj(self) -> dict:
        """Snapshot between generations; resuming from it reproduces the run exactly."""
        return {
            "format": CHECKPOINT_FORMAT,
            "digest": self.config.digest(),
            "config": self.config.to_json_obj(),
            "generation": self.generation,
            "evaluated": self._evaluated,
            "population": [
                {
                    "chromosomes": [list(ch) for ch in m.genotype.chromosomes],
                    "recorded_error": m.recorded_error,
                }
                for m in self.population
            ],
            "ledger": self.ledger.to_json_obj(),
            "genotypes": [
                {"key": key, "chromosomes": [list(ch) for ch in g.chromosomes]}
                for key, g in self.genotypes_by_key.items()
            ],
            "rng_state": _rng_state_to_json(self.rng.getstate()),
            "log": [row.to_json_obj() for row in self.log_rows],
        }

    def write_checkpoint(self) -> None:
        if not self.config.checkpoint_path:
            return
        path = Path(self.config.checkpoint_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        _atomic_write(path, json.dumps(self.checkpoint_obj()) + "\n")

    @classmethod
    def resume(
        cls,
        checkpoint: dict,
        schema: CueSchema,
        evaluator: Evaluator,
        training: Sequence[BuildingRecord],
        schema_sha256: str = "",
        dataset_sha256: str = "",
    ) -> "EvolutionRun":
        """Rebuild run state from a checkpoint document.

        Refuses to continue if the stored digest does not match the stored
        config (tampering) or if the caller-supplied schema/dataset hashes
        differ from the ones the run started with.
        """
        if not isinstance(checkpoint, dict) or checkpoint.get("format") != CHECKPOINT_FORMAT:
            raise CheckpointError(f"not a {CHECKPOINT_FORMAT} document")
        try:
            config = RunConfig.from_json_obj(checkpoint["config"])
        except CheckpointError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise CheckpointError(f"corrupt checkpoint document: {exc}") from None
        if config.digest() != checkpoint.get("digest"):
            raise ConfigMismatchError(
                "checkpoint digest does not match its config; refusing to resume"
            )
        if schema_sha256 and config.schema_sha256 and schema_sha256 != config.schema_sha256:
            raise ConfigMismatchError("schema file differs from the checkpointed run")
        if dataset_sha256 and config.dataset_sha256 and dataset_sha256 != config.dataset_sha256:
            raise ConfigMismatchError("dataset file differs from the checkpointed run")
        if schema.data_item is not config.data_item:
            raise ConfigMismatchError(
                f"schema is for {schema.data_item.value!r}, checkpoint wants "
                f"{config.data_item.value!r}"
            )
        training = list(training)
        require_truth(training, config.data_item)
        try:
            run = cls.__new__(cls)
            run.config = config
            run.schema = schema
            run.evaluator = evaluator
            run.training = training
            run.rng = Random()
            run.rng.setstate(_rng_state_from_json(checkpoint["rng_state"]))
            run.generation = checkpoint["generation"]
            run._evaluated = checkpoint["evaluated"]
            run.population = [
                Member(
                    genotype=Genotype(tuple(tuple(ch) for ch in m["chromosomes"])),
                    recorded_error=m["recorded_error"],
                )
                for m in checkpoint["population"]
            ]
            run.ledger = FitnessLedger.from_json_obj(checkpoint["ledger"])
            run.genotypes_by_key = {
                g["key"]: Genotype(tuple(tuple(ch) for ch in g["chromosomes"]))
                for g in checkpoint["genotypes"]
            }
            run.log_rows = [GenerationStats.from_json_obj(row) for row in checkpoint["log"]]
            run._last_pool_size = None
            run._log_started = False
        except (KeyError, TypeError, ValueError) as exc:
            raise CheckpointError(f"corrupt checkpoint document: {exc}") from None
        return run

    # -- run log ----------------------------------------------------------

    def _config_log_line(self) -> str:
        describe = getattr(self.evaluator, "describe", None)
        record = {
            "type": "config",
            "config": self.config.to_json_obj(),
            "digest": self.config.digest(),
            "evaluator": describe() if callable(describe) else {},
        }
        return json.dumps(record) + "\n"

    def _start_log(self) -> None:
        """(Re)write the log header plus any rows already in memory.

        Rewriting on resume guarantees the file is byte-identical to an
        uninterrupted run even if the previous process died mid-write.
        """
        if not self.config.log_path:
            return
        path = Path(self.config.log_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8") as fh:
            fh.write(self._config_log_line())
            for row in self.log_rows:
                fh.write(json.dumps(row.to_json_obj()) + "\n")
        self._log_started = True

    def _append_log_row(self, stats: GenerationStats) -> None:
        if not self.config.log_path:
            return
        if not self._log_started:
            self._start_log()
            return
        with Path(self.config.log_path).open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(stats.to_json_obj()) + "\n")

    # -- the loop ----------------------------------------------------------

    def _assign_eval_counters(self) -> list[int]:
        # Pre-assigning counters keeps noisy-backend draws identical no matter
        # how evaluations interleave across worker threads.
        counters = []
        pending: dict[str, int] = {}
        for member in self.population:
            key = canonical_key(member.genotype)
            offset = pending.get(key, 0)
            counters.append(self.ledger.evaluations(key) + offset)
            pending[key] = offset + 1
        return counters

    def _evaluate_population(self) -> None:
        config = self.config
        counters = self._assign_eval_counters()
        results: list[float | None] = [None] * len(self.population)

        def evaluate_member(index: int) -> float:
            return evaluate_genotype(
                self.population[index].genotype,
                self.training,
                config.data_item,
                self.evaluator,
                eval_counter=counters[index],
            )

        if config.evaluation_concurrency > 1:
            with ThreadPoolExecutor(max_workers=config.evaluation_concurrency) as executor:
                futures = {executor.submit(evaluate_member, i): i for i in range(len(self.population))}
                for future in as_completed(futures):
                    results[futures[future]] = future.result()
        else:
            for i in range(len(self.population)):
                results[i] = evaluate_member(i)

        for member, error in zip(self.population, results):
            key = canonical_key(member.genotype)
            self.genotypes_by_key.setdefault(key, member.genotype)
            self.ledger.record(key, error, self.generation)
        for member in self.population:
            member.recorded_error = self.ledger.worst(canonical_key(member.genotype))
        self._evaluated = True

    def _collect_stats(self) -> GenerationStats:
        errors = [m.recorded_error for m in self.population]
        counts = [m.genotype.cue_count() for m in self.population]
        per_chromosome = [
            sum(len(m.genotype.chromosomes[i]) for m in self.population) / len(self.population)
            for i in range(self.schema.category_count)
        ]
        best = min(errors)
        return GenerationStats(
            generation=self.generation,
            errors=errors,
            best_error=best,
            best_ever_error=self.ledger.entries[self.ledger.best_key()].worst_error,
            mean_cue_count=sum(counts) / len(counts),
            chromosome_mean_cue_counts=per_chromosome,
            parent_pool_size=self._last_pool_size,
            perfect=best == 0,
        )

    def _step_evaluate(self, on_generation: OnGeneration | None) -> GenerationStats:
        self._evaluate_population()
        stats = self._collect_stats()
        self.log_rows.append(stats)
        self._append_log_row(stats)
        self.write_checkpoint()
        if on_generation is not None:
            on_generation(stats, self.population)
        log.info(
            "generation %d: best %.4g, best-ever %.4g, mean cues %.2f",
            stats.generation, stats.best_error, stats.best_ever_error, stats.mean_cue_count,
        )
        return stats

    def _terminal(self) -> bool:
        return self.log_rows[-1].perfect or self.generation >= self.config.generations

    @property
    def finished(self) -> bool:
        """True when the run has already met a termination condition."""
        return self._evaluated and bool(self.log_rows) and self._terminal()

    def _result(self, completed: bool) -> RunResult:
        best_key = self.ledger.best_key()
        return RunResult(
            best_genotype=self.genotypes_by_key[best_key],
            best_recorded_error=self.ledger.worst(best_key),
            per_generation_log=list(self.log_rows),
            completed=completed,
        )

    def run(
        self,
        on_generation: OnGeneration | None = None,
        stop_after_generation: int | None = None,
    ) -> RunResult:
        """Run to termination: perfect fitness or the configured generation count.

        ``stop_after_generation`` pauses the run after that generation's
        evaluation and checkpoint, returning a partial result that a later
        :meth:`resume` continues exactly; useful for budget-limited sessions.
        """
        if not self._log_started:
            self._start_log()
        try:
            if not self._evaluated:
                self._step_evaluate(on_generation)
            while not self._terminal():
                if stop_after_generation is not None and self.generation >= stop_after_generation:
                    return self._result(completed=False)
                self.population, self._last_pool_size = next_generation(
                    self.population, self.schema, self.config, self.rng
                )
                self.generation += 1
                self._step_evaluate(on_generation)
            return self._result(completed=True)
        except BackendHardFailure as exc:
            path = self.config.checkpoint_path
            written = path if path and Path(path).exists() else None
            log.error("evaluator hard failure at generation %d: %s", self.generation, exc)
            raise RunAborted(
                f"evaluator hard failure at generation {self.generation}: {exc}", written
            ) from exc


def evolve(
    config: RunConfig,
    schema: CueSchema,
    evaluator: Evaluator,
    training: Sequence[BuildingRecord],
    on_generation: OnGeneration | None = None,
    stop_after_generation: int | None = None,
) -> RunResult:
    """Convenience wrapper: build an :class:`EvolutionRun` and run it."""
    run = EvolutionRun(config, schema, evaluator, training)
    return run.run(on_generation=on_generation, stop_after_generation=stop_after_generation)


def load_checkpoint_file(path: str | Path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"checkpoint {path} is not valid JSON: {exc}") from None
