"""Randomized datasets for the ten skill-tree domains.

Each domain is a fixed template program (e.g. domain 10 is
``A=1+2,B=A+3,C=B+4,C=?``).  Sampling replaces template variables with
symbols from an alphabet, template literals with random numbers, and every
operator slot with a random operator of the active family, then shuffles
the statement order.  The gold answer always comes from the interpreter.
"""

from __future__ import annotations

import functools
import hashlib
import json
import random
from dataclasses import asdict, dataclass, field, replace
from typing import Iterable, Iterator

from .lang import (
    ARITH,
    STRING,
    BinOp,
    Num,
    Operator,
    Program,
    Statement,
    Var,
    evaluate_all,
    parse_program,
    render_program,
    render_value,
    split_digits,
    trace,
)

MAX_REJECTIONS = 10_000

TRAIN_ALPHABET = tuple("ABCDEFGHIJKLMNOPQRSTU")
SUBST_ALPHABET = ("α", "β", "γ", "δ", "ε")

SPLITS = ("train", "valid", "test")


class ExhaustionError(RuntimeError):
    """Sampling could not produce an acceptable new example."""


@dataclass(frozen=True)
class DomainSpec:
    id: int
    template: str
    primitive: bool
    mode: str = ARITH
    scratchpad: bool = False

    @property
    def program(self) -> Program:
        return _template_program(self.template)

    def with_options(self, mode: str | None = None, scratchpad: bool | None = None) -> DomainSpec:
        return replace(
            self,
            mode=self.mode if mode is None else mode,
            scratchpad=self.scratchpad if scratchpad is None else scratchpad,
        )


DOMAINS: dict[int, DomainSpec] = {
    d.id: d
    for d in (
        DomainSpec(1, "A=1,B=2,B=?", primitive=True),
        DomainSpec(2, "A=1+2,A=?", primitive=True),
        DomainSpec(3, "A=1,B=2,C=3,C=?", primitive=True),
        DomainSpec(4, "A=1+2,B=2+3,B=?", primitive=False),
        DomainSpec(5, "A=1+2,B=2+3,C=3+4,C=?", primitive=False),
        DomainSpec(6, "A=1,B=A,B=?", primitive=True),
        DomainSpec(7, "A=1,B=2,C=B+3,C=?", primitive=False),
        DomainSpec(8, "A=1+2,B=2+3,C=B,C=?", primitive=False),
        DomainSpec(9, "A=1+2,B=A+3,B=?", primitive=False),
        DomainSpec(10, "A=1+2,B=A+3,C=B+4,C=?", primitive=False),
    )
}


@functools.lru_cache(maxsize=None)
def _template_program(template: str) -> Program:
    return parse_program(template, mode=ARITH)


# immediate predecessors of each domain in the skill tree
PARENTS: dict[int, frozenset[int]] = {
    3: frozenset({1}),
    4: frozenset({1, 2}),
    5: frozenset({2, 3, 4}),
    7: frozenset({2, 3, 6}),
    8: frozenset({2, 3, 6}),
    9: frozenset({1, 2, 6}),
    10: frozenset({7, 8, 9}),
}


@dataclass(frozen=True)
class Setting:
    train_domains: frozenset[int]
    test_domain: int
    type: str
    substitutivity: bool = False

    @property
    def key(self) -> str:
        """Shell-safe name, e.g. ``2,3-5``."""
        return f"{','.join(map(str, sorted(self.train_domains)))}-{self.test_domain}"

    @property
    def label(self) -> str:
        return f"{','.join(map(str, sorted(self.train_domains)))}→{self.test_domain}"

    def __str__(self) -> str:
        return self.label


SETTINGS: tuple[Setting, ...] = (
    Setting(frozenset({1, 2}), 4, "systematicity"),
    Setting(frozenset({2, 3}), 5, "systematicity"),
    Setting(frozenset({2, 3, 6}), 8, "systematicity"),
    Setting(frozenset({2, 3, 6}), 7, "systematicity"),
    Setting(frozenset({1, 2, 6}), 9, "systematicity"),
    Setting(frozenset({7, 8}), 10, "systematicity"),
    Setting(frozenset({1}), 3, "productivity"),
    Setting(frozenset({4}), 5, "productivity"),
    Setting(frozenset({9}), 10, "productivity"),
)


def get_setting(name: str, substitutivity: bool = False) -> Setting:
    """Look up one of the nine settings by ``2,3-5`` / ``2,3->5`` / ``2,3→5``."""
    norm = name.replace(" ", "").replace("→", "-").replace("->", "-")
    try:
        train, test = norm.rsplit("-", 1)
        key = (frozenset(int(x) for x in train.split(",")), int(test))
    except ValueError:
        raise KeyError(f"cannot parse setting {name!r}") from None
    for s in SETTINGS:
        if (s.train_domains, s.test_domain) == key:
            return replace(s, substitutivity=substitutivity)
    raise KeyError(f"unknown setting {name!r}")


def augment_primitives(setting: Setting, registry: dict[int, DomainSpec] | None = None) -> frozenset[int]:
    """Training domains plus the primitive domains reachable leftward."""
    registry = DOMAINS if registry is None else registry
    if (setting.train_domains, setting.test_domain) not in {(s.train_domains, s.test_domain) for s in SETTINGS}:
        raise KeyError(f"unknown setting {setting.label}")
    domains = set(setting.train_domains)
    # 7,8->10 deliberately trains on complex domains alone
    if setting.train_domains == frozenset({7, 8}) and setting.test_domain == 10:
        return frozenset(domains)
    reached: set[int] = set()
    stack = list(domains)
    while stack:
        d = stack.pop()
        for parent in PARENTS.get(d, ()):
            if parent not in reached:
                reached.add(parent)
                stack.append(parent)
    added = {d for d in reached if registry[d].primitive} - domains
    if 3 in domains | added:
        added.discard(1)
    return frozenset(domains | added)


@dataclass
class GenConfig:
    train_alphabet: tuple[str, ...] = TRAIN_ALPHABET
    subst_alphabet: tuple[str, ...] = SUBST_ALPHABET
    number_range: tuple[int, int] = (0, 99)
    train_size: int = 100_000
    valid_size: int | None = None
    test_size: int = 3_200
    seed: int = 0
    answer_cap: int | None = None
    cap_to_train: bool = True
    allow_negative: bool = False
    digit_split: bool = False

    def __post_init__(self):
        self.train_alphabet = tuple(self.train_alphabet)
        self.subst_alphabet = tuple(self.subst_alphabet)
        self.number_range = tuple(self.number_range)
        if len(set(self.train_alphabet)) != len(self.train_alphabet):
            raise ValueError("training alphabet has repeated symbols")
        if len(self.train_alphabet) != 21 or len(set(self.subst_alphabet)) != 5:
            raise ValueError("need 21 training symbols and 5 distinct substitution symbols")
        if set(self.train_alphabet) & set(self.subst_alphabet):
            raise ValueError("training and substitution alphabets overlap")
        for sym in self.train_alphabet + self.subst_alphabet:
            if len(sym) != 1 or not sym.isalpha():
                raise ValueError(f"variable symbol {sym!r} must be a single letter")
        lo, hi = self.number_range
        if not 0 <= lo <= hi:
            raise ValueError(f"bad number range {self.number_range}")

    @property
    def sizes(self) -> dict[str, int]:
        valid = self.test_size if self.valid_size is None else self.valid_size
        return {"train": self.train_size, "valid": valid, "test": self.test_size}


@dataclass
class Example:
    id: str
    domain: int
    split: str
    question: str
    answer: str
    scratchpad: str | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["scratchpad"] is None:
            del d["scratchpad"]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False)

    @classmethod
    def from_dict(cls, d: dict) -> Example:
        return cls(
            id=str(d["id"]),
            domain=int(d["domain"]),
            split=d["split"],
            question=d["question"],
            answer=str(d["answer"]),
            scratchpad=d.get("scratchpad"),
        )


@dataclass
class Dataset:
    domain: int
    mode: str = ARITH
    digit_split: bool = False
    splits: dict[str, list[Example]] = field(default_factory=lambda: {s: [] for s in SPLITS})

    @property
    def train(self) -> list[Example]:
        return self.splits["train"]

    @property
    def valid(self) -> list[Example]:
        return self.splits["valid"]

    @property
    def test(self) -> list[Example]:
        return self.splits["test"]

    def examples(self) -> Iterator[Example]:
        for split in SPLITS:
            yield from self.splits[split]


def rng_for(seed: int, *parts) -> random.Random:
    """Independent, platform-stable stream keyed by ``seed`` and ``parts``."""
    key = ":".join(str(x) for x in (seed, *parts)).encode()
    return random.Random(int.from_bytes(hashlib.sha256(key).digest()[:8], "big"))


def answer_magnitude(answer: str) -> int:
    return int(answer.replace(" ", ""))


def _instantiate(template: Program, spec: DomainSpec, cfg: GenConfig, rng: random.Random, alphabet) -> Program:
    names = rng.sample(alphabet, len(template.variables))
    mapping = dict(zip(template.variables, names))
    lo, hi = cfg.number_range
    ops = Operator.for_mode(spec.mode)

    def operand(x):
        if isinstance(x, Num):
            return Num(str(rng.randint(lo, hi)))
        return Var(mapping[x.name])

    statements = []
    for st in template.statements:
        rhs = st.rhs
        if isinstance(rhs, BinOp):
            rhs = BinOp(operand(rhs.left), rng.choice(ops), operand(rhs.right))
        else:
            rhs = operand(rhs)
        statements.append(Statement(mapping[st.target], rhs))
    rng.shuffle(statements)
    return Program(tuple(statements), mapping[template.query], spec.mode)


def sample_example(
    spec: DomainSpec,
    cfg: GenConfig,
    rng: random.Random,
    answer_cap: int | None = None,
    example_id: str = "",
    split: str = "train",
    alphabet: tuple[str, ...] | None = None,
) -> Example:
    """Draw one valid example, redrawing on negative values or cap violations."""
    template = spec.program
    alphabet = cfg.train_alphabet if alphabet is None else alphabet
    caps = [c for c in (cfg.answer_cap, answer_cap) if c is not None]
    cap = min(caps) if caps else None
    for _ in range(MAX_REJECTIONS):
        p = _instantiate(template, spec, cfg, rng, alphabet)
        env = evaluate_all(p)
        if spec.mode == ARITH:
            if not cfg.allow_negative and any(v < 0 for v in env.values()):
                continue
            if cap is not None and env[p.query] > cap:
                continue
        return make_example(p, spec, example_id, split, cfg.digit_split)
    raise ExhaustionError(
        f"domain {spec.id}: {MAX_REJECTIONS} consecutive rejections (cap={cap}, range={cfg.number_range})"
    )


def make_example(p: Program, spec: DomainSpec, example_id: str, split: str, digit_split: bool = False) -> Example:
    env = evaluate_all(p)
    return Example(
        id=example_id,
        domain=spec.id,
        split=split,
        question=render_program(p, digit_split=digit_split),
        answer=render_value(env[p.query], digit_split),
        scratchpad=_render_trace(p, digit_split) if spec.scratchpad else None,
    )


def _render_trace(p: Program, digit_split: bool) -> str:
    text = trace(p).text
    return split_digits(text) if digit_split else text


def _fill(
    spec: DomainSpec,
    cfg: GenConfig,
    split: str,
    count: int,
    seen: set[str],
    answer_cap: int | None,
    shards: int = 1,
) -> list[Example]:
    """Generate ``count`` examples whose questions are not in ``seen``.

    Each shard draws from its own stream; shard outputs are merged in shard
    order and any shortfall from collisions is topped up from one more stream.
    """
    shards = max(1, min(shards, count)) if count else 1
    quotas = [count // shards + (i < count % shards) for i in range(shards)]
    out: list[Example] = []

    def draw(rng: random.Random, quota: int, local_seen: set[str]) -> list[Example]:
        got: list[Example] = []
        misses = 0
        while len(got) < quota:
            ex = sample_example(spec, cfg, rng, answer_cap=answer_cap, split=split)
            if ex.question in local_seen:
                misses += 1
                if misses >= MAX_REJECTIONS:
                    raise ExhaustionError(
                        f"domain {spec.id} {split}: only {len(got)} of {quota} unique questions "
                        f"found after {MAX_REJECTIONS} consecutive duplicates"
                    )
                continue
            misses = 0
            local_seen.add(ex.question)
            got.append(ex)
        return got

    for i, quota in enumerate(quotas):
        rng = rng_for(cfg.seed, spec.id, spec.mode, split, "shard", i)
        for ex in draw(rng, quota, set(seen)):
            if ex.question not in seen:
                seen.add(ex.question)
                out.append(ex)
    if len(out) < count:
        rng = rng_for(cfg.seed, spec.id, spec.mode, split, "topup")
        extra = draw(rng, count - len(out), seen)
        out.extend(extra)
    for n, ex in enumerate(out):
        ex.id = f"d{spec.id}-{split}-{n:06d}"
    return out


def build_split(spec: DomainSpec, cfg: GenConfig, answer_cap: int | None = None, shards: int = 1) -> Dataset:
    """Train/valid/test examples for one domain, pairwise disjoint.

    With ``cfg.cap_to_train`` the valid and test answers are capped at the
    largest training answer.  ``answer_cap`` applies to every split and is
    used to cap a test domain by other domains' training data.
    """
    sizes = cfg.sizes
    seen: set[str] = set()
    ds = Dataset(spec.id, spec.mode, cfg.digit_split)
    ds.splits["train"] = _fill(spec, cfg, "train", sizes["train"], seen, answer_cap, shards)
    held_out_cap = answer_cap
    if cfg.cap_to_train and spec.mode == ARITH and ds.train:
        top = max(answer_magnitude(ex.answer) for ex in ds.train)
        held_out_cap = top if held_out_cap is None else min(held_out_cap, top)
    for split in ("valid", "test"):
        ds.splits[split] = _fill(spec, cfg, split, sizes[split], seen, held_out_cap, shards)
    return ds


def substitutize(ds: Dataset, cfg: GenConfig) -> Dataset:
    """Rename variables of valid/test questions into the substitution alphabet."""
    out = Dataset(ds.domain, ds.mode, ds.digit_split)
    out.splits["train"] = list(ds.train)
    for split in ("valid", "test"):
        renamed = []
        for ex in ds.splits[split]:
            p = parse_program(ex.question, mode=ds.mode)
            names = p.variables
            if len(names) > len(cfg.subst_alphabet):
                raise ValueError(
                    f"{ex.id}: {len(names)} variables but only {len(cfg.subst_alphabet)} substitution symbols"
                )
            rng = rng_for(cfg.seed, "subst", ex.id)
            mapping = dict(zip(names, rng.sample(cfg.subst_alphabet, len(names))))
            q = p.rename(mapping)
            renamed.append(
                replace(
                    ex,
                    question=render_program(q, digit_split=ds.digit_split),
                    scratchpad=None if ex.scratchpad is None else _render_trace(q, ds.digit_split),
                )
            )
        out.splits[split] = renamed
    return out


def check_example(ex: Example, mode: str = ARITH) -> bool:
    """True when the stored answer (and trace, if any) match the interpreter."""
    p = parse_program(ex.question, mode=mode)
    env = evaluate_all(p)
    if ex.answer.replace(" ", "") != str(env[p.query]):
        return False
    if ex.scratchpad is not None and ex.scratchpad.replace(" ", "") != trace(p).text.replace(" ", ""):
        return False
    return True


def shape_signature(p: Program) -> tuple:
    """Structure of a program independent of names, literals, operators and order."""
    bindings = p.bindings
    depth: dict[str, int] = {}

    def d(name):
        if name not in depth:
            refs = bindings[name].refs
            depth[name] = 1 + max((d(r) for r in refs), default=-1)
        return depth[name]

    kinds = []
    for st in p.statements:
        rhs = st.rhs
        if isinstance(rhs, BinOp):
            kind = ("op", tuple(sorted(type(x).__name__ for x in (rhs.left, rhs.right))))
        else:
            kind = (type(rhs).__name__,)
        kinds.append((kind, d(st.target), st.target == p.query))
    return tuple(sorted(kinds))


def write_jsonl(path, examples: Iterable[Example]) -> None:
    from .io import atomic_write_text

    atomic_write_text(path, "".join(ex.to_json() + "\n" for ex in examples))


def read_jsonl(path) -> list[Example]:
    with open(path, encoding="utf-8") as f:
        return [Example.from_dict(json.loads(line)) for line in f if line.strip()]
