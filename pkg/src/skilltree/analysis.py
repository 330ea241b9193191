"""Complexity of domain templates and its rank correlation with accuracy."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, fields
from importlib import resources
from typing import Iterable, Mapping, Sequence

from .lang import BinOp, rhs_literals
from .taskgen import DOMAINS, SETTINGS, DomainSpec, Setting, get_setting

DIMENSIONS = ("variables", "numbers", "operations", "references")
MODELS = ("base", "large", "xl")
METRICS = ("ZA", "WA")
COLUMNS = tuple((m, k) for m in MODELS for k in METRICS)

UNDEFINED = "undefined"


@dataclass(frozen=True)
class ComplexityProfile:
    variables: int
    numbers: int
    operations: int
    references: int

    def as_tuple(self) -> tuple[int, ...]:
        return tuple(getattr(self, f.name) for f in fields(self))


@dataclass(frozen=True)
class ComplexityDelta:
    variables: int
    numbers: int
    operations: int
    references: int

    def __getitem__(self, dim: str) -> int:
        return getattr(self, dim)


def complexity_profile(spec: DomainSpec, variables: str = "distinct", count_query: bool = False) -> ComplexityProfile:
    """Count variables, literals, operators and right-hand references.

    ``variables="distinct"`` counts distinct names; ``"total"`` counts every
    occurrence (targets and references).  ``count_query`` adds the query
    line as one more variable access.
    """
    p = spec.program
    if variables == "distinct":
        n_vars = len(p.variables)
    elif variables == "total":
        n_vars = sum(1 + len(st.refs) for st in p.statements) + (1 if count_query else 0)
    else:
        raise ValueError(f"unknown variable counting convention {variables!r}")
    refs = sum(len(st.refs) for st in p.statements) + (1 if count_query else 0)
    return ComplexityProfile(
        variables=n_vars,
        numbers=sum(len(rhs_literals(st.rhs)) for st in p.statements),
        operations=sum(isinstance(st.rhs, BinOp) for st in p.statements),
        references=refs,
    )


def complexity_delta(
    setting: Setting,
    registry: Mapping[int, DomainSpec] = DOMAINS,
    variables: str = "distinct",
    count_query: bool = False,
) -> ComplexityDelta:
    """Test-domain count minus the largest count among training domains."""
    test = complexity_profile(registry[setting.test_domain], variables, count_query)
    train = [complexity_profile(registry[d], variables, count_query) for d in setting.train_domains]
    return ComplexityDelta(
        **{dim: getattr(test, dim) - max(getattr(t, dim) for t in train) for dim in DIMENSIONS}
    )


def average_ranks(values: Sequence[float]) -> list[float]:
    """1-based ranks; tied values share the mean of their positions."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        mean_rank = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = mean_rank
        i = j + 1
    return ranks


def spearman(x: Sequence[float], y: Sequence[float]) -> float | None:
    """Spearman's rho with average ranks for ties.

    Returns ``None`` when either input has no variance, since the
    coefficient is undefined there.
    """
    if len(x) != len(y):
        raise ValueError(f"length mismatch: {len(x)} vs {len(y)}")
    if len(x) < 2:
        raise ValueError("need at least two observations")
    rx, ry = average_ranks(x), average_ranks(y)
    mx, my = sum(rx) / len(rx), sum(ry) / len(ry)
    dx = [r - mx for r in rx]
    dy = [r - my for r in ry]
    sxx = sum(d * d for d in dx)
    syy = sum(d * d for d in dy)
    if sxx == 0 or syy == 0:
        return None
    rho = sum(a * b for a, b in zip(dx, dy)) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, rho))


@dataclass
class CorrelationTable:
    columns: tuple[tuple[str, str], ...]
    rows: dict[str, list[float | None]]

    def average(self, dim: str) -> float | None:
        vals = [v for v in self.rows[dim] if v is not None]
        return sum(vals) / len(vals) if vals else None

    def cell(self, dim: str, model: str, metric: str) -> float | None:
        return self.rows[dim][self.columns.index((model, metric))]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["dimension", *[f"{m}_{k}" for m, k in self.columns], "average"])
        for dim, vals in self.rows.items():
            w.writerow([dim, *[_fmt(v) for v in vals], _fmt(self.average(dim))])
        return buf.getvalue()

    def to_text(self) -> str:
        head1 = ["Complexity"] + [m for m, _ in self.columns] + ["Average"]
        head2 = ["dimensions"] + [k for _, k in self.columns] + [""]
        body = [[f"Δ#{dim}"] + [_fmt(v) for v in vals] + [_fmt(self.average(dim))] for dim, vals in self.rows.items()]
        table = [head1, head2, *body]
        widths = [max(len(r[i]) for r in table) for i in range(len(head1))]
        lines = []
        for n, r in enumerate(table):
            cells = [r[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(r[1:], widths[1:])]
            lines.append("  ".join(cells).rstrip())
            if n == 1:
                lines.append("-" * len(lines[0]))
        return "\n".join(lines)


def _fmt(v: float | None) -> str:
    return UNDEFINED if v is None else f"{v:.3f}"


def correlation_table(
    accuracies: Mapping[tuple[str, str, str], float],
    settings: Iterable[Setting] = SETTINGS,
    deltas: Mapping[str, ComplexityDelta] | None = None,
    variables: str = "distinct",
    count_query: bool = False,
) -> CorrelationTable:
    """Spearman coefficient per complexity dimension and accuracy column.

    ``accuracies`` maps ``(setting key, model, metric)`` to a value.
    """
    settings = list(settings)
    if deltas is None:
        deltas = {s.key: complexity_delta(s, variables=variables, count_query=count_query) for s in settings}
    columns = tuple(c for c in COLUMNS if any((s.key, *c) in accuracies for s in settings))
    missing = [(s.key, *c) for s in settings for c in columns if (s.key, *c) not in accuracies]
    if missing:
        raise KeyError(f"accuracy fixture is missing {missing[:3]}{'...' if len(missing) > 3 else ''}")
    rows = {}
    for dim in DIMENSIONS:
        x = [deltas[s.key][dim] for s in settings]
        rows[dim] = [spearman(x, [accuracies[(s.key, *c)] for s in settings]) for c in columns]
    return CorrelationTable(columns, rows)


def load_accuracies(source=None) -> dict[tuple[str, str, str], float]:
    """Read a ``setting,model,metric,value`` CSV; ``#`` lines are comments.

    With no argument the bundled T5 accuracy fixture is used.
    """
    if source is None:
        text = resources.files("skilltree.data").joinpath("t5_accuracy.csv").read_text(encoding="utf-8")
    else:
        with open(source, encoding="utf-8") as f:
            text = f.read()
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    reader = csv.DictReader(lines)
    if reader.fieldnames != ["setting", "model", "metric", "value"]:
        raise ValueError(f"expected header setting,model,metric,value, got {reader.fieldnames}")
    out = {}
    for row in reader:
        key = (get_setting(row["setting"]).key, row["model"].strip(), row["metric"].strip().upper())
        if key in out:
            raise ValueError(f"duplicate fixture entry {key}")
        out[key] = float(row["value"])
    return out
