"""Deterministic planted-cue landscape: an offline stand-in estimator.

The landscape plants a known-optimal set of cues with per-cue benefit
weights. Every cue present in a genotype either earns its benefit (planted)
or costs the distractor penalty, on top of a base error; seeded Gaussian
noise emulates estimator inconsistency. The resulting latent score is read
out as an estimate of the requested data item such that the building error
reproduces the score (exactly for continuous items, quantized for
categorical ones). Because the latent score ignores the data item, the
categorical windows read-out and the continuous U-value read-out expose the
same noise stream through two encodings.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from random import Random

from ..dataset import BuildingRecord
from ..fitness import (
    DataEstimate,
    GroundTruth,
    HeatingClass,
    UVALUE_TARGETS,
    WindowClass,
    YearRange,
    heating_error,
    windows_error,
)
from ..schema import DataItem, Genotype, canonical_key
from .base import EvaluationRequest


@dataclass(frozen=True)
class PlantedCue:
    category: int
    cue: str
    benefit: float


@dataclass(frozen=True)
class PlantedLandscape:
    """Synthetic fitness landscape with a unique zero-noise optimum.

    Construction guarantees the optimum is exactly the planted set: every
    benefit exceeds the distractor penalty, the penalty is positive, and the
    base error covers the total benefit so the clamp at zero cannot create
    ties around the optimum.
    """

    planted: tuple[PlantedCue, ...]
    distractor_penalty: float
    base_error: float
    noise_scale: float
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "planted", tuple(self.planted))
        if self.noise_scale < 0:
            raise ValueError("noise_scale must be >= 0")
        if self.distractor_penalty <= 0:
            raise ValueError("distractor_penalty must be > 0")
        seen = set()
        for p in self.planted:
            if p.category < 0:
                raise ValueError(f"planted cue {p.cue!r}: category index must be >= 0")
            if p.benefit <= self.distractor_penalty:
                raise ValueError(
                    f"planted cue {p.cue!r}: benefit {p.benefit} must exceed "
                    f"distractor penalty {self.distractor_penalty}"
                )
            if (p.category, p.cue) in seen:
                raise ValueError(f"planted cue {p.cue!r} repeated in category {p.category}")
            seen.add((p.category, p.cue))
        if self.base_error < self.total_benefit:
            raise ValueError(
                f"base_error {self.base_error} must cover the total benefit "
                f"{self.total_benefit} so the optimum stays unique under clamping"
            )

    @cached_property
    def benefits(self) -> dict[tuple[int, str], float]:
        return {(p.category, p.cue): p.benefit for p in self.planted}

    @property
    def total_benefit(self) -> float:
        return sum(p.benefit for p in self.planted)

    def noise(self, genotype_key: str, building_id: str, eval_counter: int) -> float:
        if self.noise_scale == 0:
            return 0.0
        material = f"{self.seed}|{building_id}|{eval_counter}|{genotype_key}"
        digest = hashlib.sha256(material.encode("utf-8")).digest()
        stream = Random(int.from_bytes(digest[:8], "big"))
        return stream.gauss(0.0, self.noise_scale)

    def latent_score(self, genotype: Genotype, building_id: str, eval_counter: int) -> float:
        """Clamped-at-zero error the genotype earns on one building."""
        gain = 0.0
        distractors = 0
        for index, cue in genotype.iter_cues():
            benefit = self.benefits.get((index, cue))
            if benefit is None:
                distractors += 1
            else:
                gain += benefit
        raw = self.base_error - gain + self.distractor_penalty * distractors
        raw += self.noise(canonical_key(genotype), building_id, eval_counter)
        return max(raw, 0.0)

    def describe(self) -> dict:
        return {
            "backend": "oracle",
            "seed": self.seed,
            "base_error": self.base_error,
            "distractor_penalty": self.distractor_penalty,
            "noise_scale": self.noise_scale,
            "planted_cues": len(self.planted),
        }


def _require(value, item: DataItem, building_id: str):
    if value is None:
        raise ValueError(f"building {building_id!r} has no ground truth for {item.value}")
    return value


def _quantized_class(score: float, truth, error_fn, classes) -> DataEstimate:
    # Step thresholds at 1 and 2 mirror the categorical error scales; when no
    # class sits at the desired distance (some matrix rows skip a level) we
    # fall back toward the truth.
    desired = 0 if score < 1 else (1 if score < 2 else 2)
    for target in range(desired, -1, -1):
        for candidate in classes:
            if error_fn(candidate, truth) == target:
                return candidate
    return truth


def oracle_evaluate(
    genotype: Genotype,
    building: BuildingRecord,
    landscape: PlantedLandscape,
    eval_counter: int,
    item: DataItem,
) -> DataEstimate:
    """Turn the latent score into an estimate whose error reproduces the score.

    Continuous items (energy, lighting, U-value) reproduce it exactly; the
    age item rounds to whole years; categorical items quantize it onto the
    class-error ladder.
    """
    item = DataItem(item)
    truth: GroundTruth = building.truth
    score = landscape.latent_score(genotype, building.id, eval_counter)
    if item is DataItem.ENERGY:
        return _require(truth.energy_kwh_m2, item, building.id) + score
    if item is DataItem.LIGHTING:
        actual = _require(truth.lighting_pct, item, building.id)
        estimate = actual + score if actual + score <= 100 else actual - score
        return min(max(estimate, 0.0), 100.0)
    if item is DataItem.BUILDING_AGE:
        age = _require(truth.age, item, building.id)
        offset = math.floor(score + 0.5)
        return YearRange(age.end + offset, age.end + offset)
    if item is DataItem.WINDOWS_UVALUE:
        target = UVALUE_TARGETS[_require(truth.windows, item, building.id)]
        return target + score
    if item is DataItem.WINDOWS:
        actual = _require(truth.windows, item, building.id)
        return _quantized_class(score, actual, windows_error, list(WindowClass))
    actual = _require(truth.heating, item, building.id)
    return _quantized_class(score, actual, heating_error, list(HeatingClass))


class OracleEvaluator:
    """Evaluator backed by a planted landscape; a pure function of the request."""

    def __init__(self, landscape: PlantedLandscape):
        self.landscape = landscape

    def evaluate(self, request: EvaluationRequest) -> DataEstimate:
        return oracle_evaluate(
            request.genotype,
            request.building,
            self.landscape,
            request.eval_counter,
            request.data_item,
        )

    def describe(self) -> dict:
        return self.landscape.describe()


def landscape_to_json_obj(landscape: PlantedLandscape) -> dict:
    return {
        "seed": landscape.seed,
        "base_error": landscape.base_error,
        "distractor_penalty": landscape.distractor_penalty,
        "noise_scale": landscape.noise_scale,
        "planted": [
            {"category": p.category, "cue": p.cue, "benefit": p.benefit}
            for p in landscape.planted
        ],
    }


def landscape_from_json_obj(obj: object) -> PlantedLandscape:
    if not isinstance(obj, dict):
        raise ValueError("landscape document must be a JSON object")
    try:
        planted = tuple(
            PlantedCue(category=int(p["category"]), cue=str(p["cue"]), benefit=float(p["benefit"]))
            for p in obj.get("planted", [])
        )
        return PlantedLandscape(
            planted=planted,
            distractor_penalty=float(obj["distractor_penalty"]),
            base_error=float(obj["base_error"]),
            noise_scale=float(obj.get("noise_scale", 0.0)),
            seed=int(obj.get("seed", 0)),
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"invalid landscape document: {exc}") from None


def load_landscape_file(path: str | Path) -> PlantedLandscape:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"landscape file {path} is not valid JSON: {exc}") from None
    return landscape_from_json_obj(obj)


def save_landscape(landscape: PlantedLandscape, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(landscape_to_json_obj(landscape), indent=2) + "\n", encoding="utf-8"
    )
