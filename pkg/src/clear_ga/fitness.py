"""Per-building error functions for every data item, and fitness aggregation.

Lower is better everywhere; zero is a perfect score. All functions here are
pure and reentrant.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Union

from .schema import DataItem


@dataclass(frozen=True)
class YearRange:
    """Inclusive year span; an exact year is the degenerate range start == end."""

    start: int
    end: int

    def __post_init__(self) -> None:
        if self.start > self.end:
            raise ValueError(f"year range start {self.start} exceeds end {self.end}")

    @property
    def is_exact(self) -> bool:
        return self.start == self.end


@dataclass(frozen=True)
class ValueRange:
    """Inclusive numeric span for estimates; a point value has start == end."""

    start: float
    end: float

    def __post_init__(self) -> None:
        if self.start > self.end:
            raise ValueError(f"range start {self.start} exceeds end {self.end}")

    @property
    def is_point(self) -> bool:
        return self.start == self.end

    @property
    def midpoint(self) -> float:
        return (self.start + self.end) / 2.0


class HeatingClass(str, Enum):
    UNDERFLOOR = "underfloor"
    WARM_AIR = "warm_air"
    WATER_RADIATORS = "water_radiators"
    ELECTRIC_PANEL = "electric_panel"
    ELECTRIC_STORAGE = "electric_storage"


class WindowClass(str, Enum):
    SINGLE = "single"
    DOUBLE = "double"
    HIGH_EFFICIENCY = "high_efficiency"


DataEstimate = Union[YearRange, ValueRange, HeatingClass, WindowClass, float]


@dataclass(frozen=True)
class GroundTruth:
    """Confirmed values for one building; fields may be absent for unused items."""

    age: YearRange | None = None
    lighting_pct: float | None = None
    heating: HeatingClass | None = None
    windows: WindowClass | None = None
    energy_kwh_m2: float | None = None


def range_point_error(start_a: float, end_a: float, point_b: float) -> float:
    """Distance from a point to an inclusive range; zero inside."""
    if start_a > end_a:
        raise ValueError(f"range start {start_a} exceeds end {end_a}")
    if start_a <= point_b <= end_a:
        return 0
    return min(abs(point_b - start_a), abs(point_b - end_a))


def range_range_error(a: YearRange | ValueRange, b: YearRange | ValueRange) -> float:
    """Gap between two inclusive ranges; zero when they overlap."""
    if a.end < b.start:
        return b.start - a.end
    if b.end < a.start:
        return a.start - b.end
    return 0


# Classes that look alike in images carry a reduced penalty when confused:
# underfloor vents resemble warm-air vents, panel heaters resemble storage
# heaters. Everything else is a full miss.
_HEATING_CONFUSION_GROUP = {
    HeatingClass.UNDERFLOOR: 0,
    HeatingClass.WARM_AIR: 0,
    HeatingClass.WATER_RADIATORS: 1,
    HeatingClass.ELECTRIC_PANEL: 2,
    HeatingClass.ELECTRIC_STORAGE: 2,
}


def heating_error(estimate: HeatingClass, truth: HeatingClass) -> int:
    if estimate == truth:
        return 0
    if _HEATING_CONFUSION_GROUP[estimate] == _HEATING_CONFUSION_GROUP[truth]:
        return 1
    return 2


WINDOW_ORDINAL = {
    WindowClass.SINGLE: 0,
    WindowClass.DOUBLE: 1,
    WindowClass.HIGH_EFFICIENCY: 2,
}


def windows_error(estimate: WindowClass, truth: WindowClass) -> int:
    return abs(WINDOW_ORDINAL[estimate] - WINDOW_ORDINAL[truth])


def lighting_error(estimate_pct: float, truth_pct: float) -> float:
    return abs(estimate_pct - truth_pct)


def energy_error(estimate: ValueRange | float, truth: float) -> float:
    """Absolute difference for a point estimate, range-to-point gap for a range."""
    if isinstance(estimate, ValueRange):
        return range_point_error(estimate.start, estimate.end, truth)
    return abs(estimate - truth)


# Reference U-values per glazing class for the real-valued windows variant.
UVALUE_TARGETS = {
    WindowClass.SINGLE: 0.5,
    WindowClass.DOUBLE: 2.0,
    WindowClass.HIGH_EFFICIENCY: 4.8,
}


def uvalue_error(estimate_u: float, truth: WindowClass) -> float:
    if estimate_u <= 0:
        raise ValueError(f"U-value estimate must be positive, got {estimate_u}")
    return abs(estimate_u - UVALUE_TARGETS[truth])


# Worst-case error charged when a building's estimate cannot be obtained or
# parsed after retries; keeps the population totally ordered under failures.
# Age: span of the cleaned 1000-to-now scale rounded up. U-value: span of the
# reference targets.
FAILURE_PENALTY: dict[DataItem, float] = {
    DataItem.BUILDING_AGE: 1024.0,
    DataItem.LIGHTING: 100.0,
    DataItem.HEATING: 2.0,
    DataItem.WINDOWS: 2.0,
    DataItem.WINDOWS_UVALUE: 4.3,
    DataItem.ENERGY: 450.0,
}


def failure_penalty(item: DataItem) -> float:
    return FAILURE_PENALTY[DataItem(item)]


def _require_truth(value, item: DataItem):
    if value is None:
        raise ValueError(f"ground truth is missing the field for {item.value}")
    return value


def building_error(item: DataItem, estimate: DataEstimate, truth: GroundTruth) -> float:
    """Dispatch to the item's error function; raises if the estimate variant mismatches."""
    item = DataItem(item)
    if item is DataItem.BUILDING_AGE:
        truth_age = _require_truth(truth.age, item)
        if not isinstance(estimate, YearRange):
            raise ValueError(f"building_age estimate must be a YearRange, got {estimate!r}")
        if truth_age.is_exact:
            return range_point_error(estimate.start, estimate.end, truth_age.start)
        return range_range_error(estimate, truth_age)
    if item is DataItem.LIGHTING:
        if not isinstance(estimate, (int, float)) or isinstance(estimate, bool):
            raise ValueError(f"lighting estimate must be a percentage, got {estimate!r}")
        return lighting_error(float(estimate), _require_truth(truth.lighting_pct, item))
    if item is DataItem.HEATING:
        if not isinstance(estimate, HeatingClass):
            raise ValueError(f"heating estimate must be a HeatingClass, got {estimate!r}")
        return float(heating_error(estimate, _require_truth(truth.heating, item)))
    if item is DataItem.WINDOWS:
        if not isinstance(estimate, WindowClass):
            raise ValueError(f"windows estimate must be a WindowClass, got {estimate!r}")
        return float(windows_error(estimate, _require_truth(truth.windows, item)))
    if item is DataItem.WINDOWS_UVALUE:
        if not isinstance(estimate, (int, float)) or isinstance(estimate, bool):
            raise ValueError(f"U-value estimate must be a number, got {estimate!r}")
        return uvalue_error(float(estimate), _require_truth(truth.windows, item))
    if not isinstance(estimate, (ValueRange, int, float)) or isinstance(estimate, bool):
        raise ValueError(f"energy estimate must be a number or range, got {estimate!r}")
    return energy_error(estimate, float(_require_truth(truth.energy_kwh_m2, item)))


def aggregate_fitness(per_building_errors: list[float]) -> float:
    """Sum of per-building errors over the evaluation split; zero is perfect."""
    if not per_building_errors:
        raise ValueError("cannot aggregate an empty list of building errors")
    return float(sum(per_building_errors))
