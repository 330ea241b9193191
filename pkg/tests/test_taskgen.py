import itertools

import pytest

from skilltree.lang import ARITH, STRING, Operator, apply_arith, evaluate, parse_program, render_program, trace
from skilltree.taskgen import (
    DOMAINS,
    SETTINGS,
    SUBST_ALPHABET,
    TRAIN_ALPHABET,
    DomainSpec,
    Example,
    ExhaustionError,
    GenConfig,
    Setting,
    augment_primitives,
    build_split,
    check_example,
    get_setting,
    read_jsonl,
    rng_for,
    sample_example,
    shape_signature,
    substitutize,
    write_jsonl,
)


def small(**kw):
    base = dict(train_size=200, valid_size=50, test_size=50, seed=3)
    base.update(kw)
    return GenConfig(**base)


class TestDomains:
    def test_templates(self):
        assert DOMAINS[10].template == "A=1+2,B=A+3,C=B+4,C=?"
        assert DOMAINS[1].template == "A=1,B=2,B=?"
        assert DOMAINS[6].template == "A=1,B=A,B=?"

    def test_primitive_domains(self):
        assert {d for d, s in DOMAINS.items() if s.primitive} == {1, 2, 3, 6}

    def test_nine_settings(self):
        assert len(SETTINGS) == 9
        assert sum(s.type == "systematicity" for s in SETTINGS) == 6
        assert get_setting("2,3-5").label == "2,3→5"
        assert get_setting("2,3→5") == get_setting("3,2->5")
        with pytest.raises(KeyError):
            get_setting("1,2-10")


class TestConfig:
    def test_defaults(self):
        cfg = GenConfig()
        assert len(cfg.train_alphabet) == 21
        assert len(cfg.subst_alphabet) == 5
        assert not set(cfg.train_alphabet) & set(cfg.subst_alphabet)
        assert cfg.sizes == {"train": 100_000, "valid": 3_200, "test": 3_200}

    def test_rejects_overlapping_alphabets(self):
        with pytest.raises(ValueError):
            GenConfig(subst_alphabet=("A", "β", "γ", "δ", "ε"))


class TestSample:
    def test_domain1_has_distractor(self):
        ex = sample_example(DOMAINS[1], GenConfig(), rng_for(0, "t"))
        p = parse_program(ex.question)
        assert len(p.statements) == 2
        assert len(trace(p).steps) == 1

    def test_degenerate_range(self):
        ex = sample_example(DOMAINS[2], GenConfig(number_range=(0, 0)), rng_for(0, "t"))
        assert ex.answer == "0"
        q = ex.question
        assert q[1:] in {"=0+0," + q[0] + "=?", "=0-0," + q[0] + "=?", "=0max0," + q[0] + "=?", "=0min0," + q[0] + "=?"}

    def test_deterministic(self):
        cfg = GenConfig(seed=17)
        a = sample_example(DOMAINS[9], cfg, rng_for(cfg.seed, "x"))
        b = sample_example(DOMAINS[9], cfg, rng_for(cfg.seed, "x"))
        assert a.to_json() == b.to_json()

    def test_no_negative_values(self):
        rng = rng_for(0, "neg")
        for _ in range(300):
            ex = sample_example(DOMAINS[10], GenConfig(), rng)
            p = parse_program(ex.question)
            assert int(ex.answer) >= 0
            assert all(not s.startswith("-") for s in trace(p).steps)

    def test_cap_exhaustion(self):
        cfg = GenConfig(number_range=(5, 9))
        with pytest.raises(ExhaustionError):
            sample_example(DOMAINS[2], cfg, rng_for(0, "cap"), answer_cap=-1)

    def test_string_mode(self):
        spec = DOMAINS[9].with_options(mode=STRING, scratchpad=True)
        ex = sample_example(spec, GenConfig(), rng_for(1, "s"))
        p = parse_program(ex.question, mode=STRING)
        assert ex.answer == evaluate(p)
        assert ex.scratchpad == trace(p).text
        assert check_example(ex, mode=STRING)


def count_domain2_questions(lo, hi, alphabet_size=21):
    """Brute-force size of domain 2's question space with non-negative answers."""
    count = 0
    for l, r in itertools.product(range(lo, hi + 1), repeat=2):
        for op in Operator.for_mode(ARITH):
            if apply_arith(op, l, r) >= 0:
                count += 1
    return count * alphabet_size


class TestBuildSplit:
    def test_disjoint_and_unique(self):
        ds = build_split(DOMAINS[4], small())
        qs = [ex.question for ex in ds.examples()]
        assert len(qs) == len(set(qs)) == 300

    def test_sizes_and_ids(self):
        ds = build_split(DOMAINS[3], small())
        assert (len(ds.train), len(ds.valid), len(ds.test)) == (200, 50, 50)
        assert ds.train[0].id == "d3-train-000000"
        assert {ex.split for ex in ds.test} == {"test"}

    def test_zero_train(self):
        ds = build_split(DOMAINS[5], small(train_size=0))
        assert ds.train == []
        assert not {e.question for e in ds.valid} & {e.question for e in ds.test}

    def test_oracle_consistency(self):
        spec = DOMAINS[10].with_options(scratchpad=True)
        ds = build_split(spec, small())
        assert all(check_example(ex) for ex in ds.examples())

    def test_cap_law(self):
        ds = build_split(DOMAINS[9], small(train_size=30, test_size=200))
        top = max(int(e.answer) for e in ds.train)
        assert max(int(e.answer) for e in ds.test + ds.valid) <= top

    def test_question_space_count(self):
        assert count_domain2_questions(0, 9) == 7455

    def test_exhaustion_when_space_too_small(self):
        space = count_domain2_questions(0, 9)
        cfg = GenConfig(number_range=(0, 9), train_size=space + 1, test_size=0, cap_to_train=False)
        with pytest.raises(ExhaustionError):
            build_split(DOMAINS[2], cfg)

    def test_feasible_below_space(self):
        cfg = GenConfig(number_range=(0, 9), train_size=3000, test_size=100, seed=1)
        ds = build_split(DOMAINS[2], cfg)
        assert len(ds.train) == 3000

    def test_reproducible(self):
        a = build_split(DOMAINS[7], small(seed=11))
        b = build_split(DOMAINS[7], small(seed=11))
        assert [e.to_json() for e in a.examples()] == [e.to_json() for e in b.examples()]
        c = build_split(DOMAINS[7], small(seed=12))
        assert [e.question for e in a.train] != [e.question for e in c.train]

    def test_sharded_generation(self):
        ds = build_split(DOMAINS[8], small(), shards=4)
        qs = [ex.question for ex in ds.examples()]
        assert len(qs) == len(set(qs)) == 300
        again = build_split(DOMAINS[8], small(), shards=4)
        assert [e.question for e in again.train] == [e.question for e in ds.train]

    @pytest.mark.parametrize("domain", sorted(DOMAINS))
    def test_template_fidelity(self, domain):
        spec = DOMAINS[domain]
        ds = build_split(spec, small(train_size=100, test_size=10))
        expected = shape_signature(spec.program)
        for ex in ds.examples():
            assert shape_signature(parse_program(ex.question)) == expected

    def test_digit_split_examples(self):
        ds = build_split(DOMAINS[2], small(digit_split=True))
        assert all(check_example(ex) for ex in ds.examples())
        assert any(" " in ex.question for ex in ds.train)


class TestSubstitutize:
    def test_renaming(self):
        cfg = small()
        ds = build_split(DOMAINS[10].with_options(scratchpad=True), cfg)
        sub = substitutize(ds, cfg)
        assert sub.train == ds.train
        sigma = set(TRAIN_ALPHABET)
        for old, new in zip(ds.test + ds.valid, sub.test + sub.valid):
            assert not sigma & set(new.question)
            assert set(new.question) & set(SUBST_ALPHABET)
            assert new.answer == old.answer
            assert check_example(new)
            assert evaluate(parse_program(new.question)) == evaluate(parse_program(old.question))

    def test_untouched_training_has_no_subst_symbols(self):
        cfg = small()
        ds = build_split(DOMAINS[5], cfg)
        assert not any(set(SUBST_ALPHABET) & set(e.question) for e in ds.examples())

    def test_single_variable_example(self):
        cfg = small()
        ds = build_split(DOMAINS[2], small(train_size=0, test_size=5))
        ds.splits["test"] = [Example("x", 2, "test", "A=1+2,A=?", "3")]
        sub = substitutize(ds, cfg)
        q = sub.test[0].question
        assert q[0] in SUBST_ALPHABET and q == f"{q[0]}=1+2,{q[0]}=?"
        assert sub.test[0].answer == "3"

    def test_too_few_symbols(self):
        ds = build_split(DOMAINS[2], small(train_size=0, test_size=1))
        ds.splits["test"] = [Example("x", 0, "test", "A=1,B=2,C=3,D=4,E=5,F=A,F=?", "1")]
        with pytest.raises(ValueError):
            substitutize(ds, small())


class TestAugment:
    def test_domain7(self):
        s = get_setting("2,3,6-7")
        assert augment_primitives(s) == {2, 3, 6}

    def test_single_complex_domain(self):
        assert augment_primitives(get_setting("9-10")) == {9, 1, 2, 6}
        assert augment_primitives(get_setting("4-5")) == {4, 1, 2}

    def test_primitive_only(self):
        assert augment_primitives(get_setting("1,2-4")) == {1, 2}
        assert augment_primitives(get_setting("1-3")) == {1}

    def test_no_augmentation_for_7_8(self):
        assert augment_primitives(get_setting("7,8-10")) == {7, 8}

    def test_three_excludes_one(self):
        # 3 reaches 1 through the tree but 1 is still left out
        assert augment_primitives(get_setting("2,3-5")) == {2, 3}

    def test_unknown_setting(self):
        with pytest.raises(KeyError):
            augment_primitives(Setting(frozenset({5}), 10, "productivity"))


def test_jsonl_round_trip(tmp_path):
    ds = build_split(DOMAINS[6].with_options(scratchpad=True), small(train_size=10, test_size=3))
    path = tmp_path / "train.jsonl"
    write_jsonl(path, ds.train)
    assert read_jsonl(path) == ds.train
    plain = build_split(DOMAINS[6], small(train_size=3, test_size=0))
    write_jsonl(path, plain.train)
    assert "scratchpad" not in path.read_text()
