"""Min-max calibration of raw outcome scores against a reference corpus.

Bounds default to the (1, 99) percentiles with clipping; (0, 100) gives
literal min-max. Type coverage never passes through here.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import ReviewCorpus
from .outcomes import CALIBRATED_OUTCOMES, compute_pair_outcomes

CALIBRATION_SCHEMA = "slate-lens/calibration/v1"


class CalibrationError(ValueError):
    pass


@dataclass(frozen=True)
class CalibrationTable:
    reference: str
    percentiles: tuple[float, float]
    bounds: dict[str, tuple[float, float]]  # measure -> (lo, hi)

    def to_json(self) -> dict:
        return {
            "schema": CALIBRATION_SCHEMA,
            "reference": self.reference,
            "percentiles": list(self.percentiles),
            "bounds": {m: {"lo": lo, "hi": hi} for m, (lo, hi) in sorted(self.bounds.items())},
        }

    @staticmethod
    def from_json(obj: dict) -> "CalibrationTable":
        if obj.get("schema") != CALIBRATION_SCHEMA:
            raise CalibrationError(f"unexpected calibration schema {obj.get('schema')!r}")
        bounds = {
            m: (float(b["lo"]), float(b["hi"])) for m, b in obj["bounds"].items()
        }
        for m, (lo, hi) in bounds.items():
            if not lo < hi:
                raise CalibrationError(f"measure {m}: lo must be < hi")
        return CalibrationTable(
            reference=str(obj.get("reference", "")),
            percentiles=tuple(float(p) for p in obj.get("percentiles", (1.0, 99.0))),
            bounds=bounds,
        )

    def save(self, path: Path | str) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n")

    @staticmethod
    def load(path: Path | str) -> "CalibrationTable":
        return CalibrationTable.from_json(json.loads(Path(path).read_text()))


def fit_calibration(
    reference: ReviewCorpus,
    annotations,
    percentiles: tuple[float, float] = (1.0, 99.0),
    reference_id: str = "",
) -> CalibrationTable:
    """Empirical percentile bounds of each raw measure over all review pairs
    of the reference corpus."""
    p_lo, p_hi = percentiles
    if not 0 <= p_lo < p_hi <= 100:
        raise CalibrationError(f"invalid percentiles {percentiles}")
    n_multi = sum(
        1 for sub in reference.submissions.values() if len(sub.assigned_reviewers) >= 2
    )
    if n_multi < 30:
        raise CalibrationError(
            f"reference corpus has only {n_multi} submissions with >= 2 reviews (need 30)"
        )
    pair_values = compute_pair_outcomes(reference, annotations, calibration_table=None)
    bounds: dict[str, tuple[float, float]] = {}
    for measure in CALIBRATED_OUTCOMES:
        values = np.array([v[measure] for v in pair_values.values()])
        lo = float(np.percentile(values, p_lo))
        hi = float(np.percentile(values, p_hi))
        if not lo < hi:
            raise CalibrationError(f"degenerate raw range for measure {measure!r}")
        bounds[measure] = (lo, hi)
    return CalibrationTable(reference=reference_id, percentiles=(p_lo, p_hi), bounds=bounds)


def normalize_outcome(raw: float, measure: str, table: CalibrationTable) -> float:
    """Clipped min-max normalization into [0,1]."""
    if measure not in table.bounds:
        raise CalibrationError(f"unknown measure id {measure!r}")
    lo, hi = table.bounds[measure]
    return float(np.clip((raw - lo) / (hi - lo), 0.0, 1.0))
