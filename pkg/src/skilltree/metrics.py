"""Scoring: exact match, zero-shot accuracy and weighted-average accuracy."""

from __future__ import annotations

import csv
import json
import logging
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .lang import parse_program, trace
from .taskgen import Example

logger = logging.getLogger(__name__)

_SPACES = re.compile(r"\s+")
_DIGIT_GAP = re.compile(r"(?<=\d) (?=\d)")


class ScoringError(ValueError):
    pass


class CurveError(ValueError):
    pass


@dataclass(frozen=True)
class PredictionRecord:
    id: str
    prediction: str


@dataclass(frozen=True)
class WAConfig:
    alpha: float = 1000.0
    n_steps: int = 100

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.n_steps < 1:
            raise ValueError("n_steps must be at least 1")


@dataclass(frozen=True)
class LearningCurve:
    steps: tuple[int, ...]
    accuracies: tuple[float, ...]

    def __post_init__(self):
        if len(self.steps) != len(self.accuracies):
            raise CurveError("steps and accuracies differ in length")
        for a, b in zip(self.steps, self.steps[1:]):
            if b <= a:
                raise CurveError(f"steps must be strictly increasing ({a} then {b})")
        for s in self.steps:
            if s < 0:
                raise CurveError(f"negative step {s}")
        for acc in self.accuracies:
            if not 0.0 <= acc <= 1.0:
                raise CurveError(f"accuracy {acc} outside [0, 1]")

    @classmethod
    def from_values(cls, accuracies: Sequence[float]) -> LearningCurve:
        return cls(tuple(range(len(accuracies))), tuple(float(a) for a in accuracies))

    def __len__(self) -> int:
        return len(self.steps)


def normalize(text: str) -> str:
    """Strip, collapse whitespace runs and undo digit splitting."""
    text = _SPACES.sub(" ", text.strip())
    return _DIGIT_GAP.sub("", text)


def final_answer(text: str) -> str:
    """Answer part of a prediction; for a trace, the value after the last '='."""
    text = normalize(text)
    last = text.rsplit(";", 1)[-1]
    return last.rsplit("=", 1)[-1].strip()


def gold_trace(gold: Example) -> str:
    if gold.scratchpad is not None:
        return gold.scratchpad
    return trace(parse_program(gold.question)).text


def exact_match(prediction: str, gold: Example, scratchpad_mode: bool = False) -> bool:
    if scratchpad_mode:
        steps = normalize(gold_trace(gold))
        return normalize(prediction) == steps and final_answer(prediction) == normalize(gold.answer)
    return final_answer(prediction) == normalize(gold.answer)


def zero_shot_accuracy(
    preds: Iterable[PredictionRecord],
    gold: Sequence[Example],
    scratchpad_mode: bool = False,
    strict: bool = False,
) -> float:
    """Fraction of gold examples predicted exactly; missing ids count as wrong."""
    by_id: dict[str, str] = {}
    for rec in preds:
        if rec.id in by_id:
            raise ScoringError(f"duplicate prediction for id {rec.id!r}")
        by_id[rec.id] = rec.prediction
    gold_ids = {ex.id for ex in gold}
    if len(gold_ids) != len(gold):
        raise ScoringError("gold ids are not unique")
    unknown = by_id.keys() - gold_ids
    missing = gold_ids - by_id.keys()
    if strict and (unknown or missing):
        raise ScoringError(f"{len(missing)} missing and {len(unknown)} unknown prediction ids")
    if unknown:
        logger.warning("ignoring %d predictions with unknown ids", len(unknown))
    if not gold:
        return 0.0
    correct = sum(
        1 for ex in gold if ex.id in by_id and exact_match(by_id[ex.id], ex, scratchpad_mode)
    )
    return correct / len(gold)


def derive_weights(cfg: WAConfig = WAConfig()) -> np.ndarray:
    """Linearly decreasing weights w_0..w_N summing to one.

    w_min = 2 / ((N+1)(alpha+1)), w_max = alpha * w_min and
    w_i = w_max - i * (w_max - w_min) / N.
    """
    n, alpha = cfg.n_steps, float(cfg.alpha)
    w_min = 2.0 / ((n + 1) * (alpha + 1.0))
    w_max = alpha * w_min
    slope = (w_max - w_min) / n
    return w_max - slope * np.arange(n + 1)


def weighted_average_accuracy(curve: LearningCurve | Sequence[float], cfg: WAConfig = WAConfig()) -> float:
    """Early-weighted average of the first N+1 points of a learning curve.

    Points are matched to weights by position.  Shorter curves are
    normalized by the weights actually used.
    """
    acc = curve.accuracies if isinstance(curve, LearningCurve) else tuple(curve)
    if not acc:
        raise CurveError("empty learning curve")
    w = derive_weights(cfg)
    k = min(len(acc), len(w))
    used = w[:k]
    values = np.asarray(acc[:k], dtype=float)
    result = float(np.dot(used, values) / used.sum())
    # keep exact bounds despite rounding
    return min(max(result, float(values.min())), float(values.max()))


def ingest_curve(path) -> LearningCurve:
    steps, accs = [], []
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["step", "accuracy"]:
            raise CurveError(f"{path}: expected header 'step,accuracy', got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise CurveError(f"{path}:{lineno}: expected 2 fields, got {len(row)}")
            try:
                steps.append(int(row[0]))
                accs.append(float(row[1]))
            except ValueError:
                raise CurveError(f"{path}:{lineno}: malformed row {row}") from None
    if not steps:
        raise CurveError(f"{path}: no data rows")
    return LearningCurve(tuple(steps), tuple(accs))


def read_predictions(path) -> list[PredictionRecord]:
    records = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                d = json.loads(line)
                records.append(PredictionRecord(str(d["id"]), str(d["prediction"])))
            except (json.JSONDecodeError, KeyError, TypeError) as e:
                raise ScoringError(f"{path}:{lineno}: bad prediction record ({e})") from None
    return records


def score_report(
    preds: Sequence[PredictionRecord],
    gold: Sequence[Example],
    setting: str | None = None,
    scratchpad_mode: bool = False,
    curve: LearningCurve | None = None,
    wa_cfg: WAConfig = WAConfig(),
    strict: bool = False,
) -> dict:
    za = zero_shot_accuracy(preds, gold, scratchpad_mode=False, strict=strict)
    report = {
        "setting": setting,
        "n": len(gold),
        "scratchpad_mode": scratchpad_mode,
        "za": za,
        "za_pct": round(100 * za, 1),
    }
    if scratchpad_mode:
        sp = zero_shot_accuracy(preds, gold, scratchpad_mode=True, strict=strict)
        report["za_scratchpad"] = sp
        report["za_scratchpad_pct"] = round(100 * sp, 1)
    if curve is not None:
        wa = weighted_average_accuracy(curve, wa_cfg)
        report.update(wa=wa, wa_pct=round(100 * wa, 1), wa_alpha=wa_cfg.alpha, wa_n_steps=wa_cfg.n_steps)
    else:
        report["wa"] = None
    return report


def format_report(report: dict) -> str:
    rows = [("setting", report.get("setting") or "-"), ("n", str(report["n"]))]
    rows.append(("ZA", f"{report['za_pct']:.1f}"))
    if "za_scratchpad" in report:
        rows.append(("ZA (steps)", f"{report['za_scratchpad_pct']:.1f}"))
    if report.get("wa") is not None:
        rows.append(("WA", f"{report['wa_pct']:.1f}"))
    width = max(len(k) for k, _ in rows)
    return "\n".join(f"{k:<{width}}  {v}" for k, v in rows)
