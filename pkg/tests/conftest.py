import pytest
from hypothesis import strategies as st

from skilltree.lang import ARITH, STRING, BinOp, Num, Operator, Program, Statement, Var

LETTERS = "ABCDEFGHIJKLMNOPQRSTUαβγδε"


@st.composite
def programs(draw, mode=None, max_statements=6):
    """Random valid programs: a DAG of statements in shuffled order."""
    mode = draw(st.sampled_from([ARITH, STRING])) if mode is None else mode
    n = draw(st.integers(1, max_statements))
    names = draw(st.lists(st.sampled_from(LETTERS), min_size=n, max_size=n, unique=True))
    literal = st.integers(0, 999).map(lambda v: Num(str(v)))
    statements = []
    for i, name in enumerate(names):
        earlier = [Var(x) for x in names[:i]]
        operand = st.one_of(literal, st.sampled_from(earlier)) if earlier else literal
        kind = draw(st.sampled_from(["lit", "ref", "op"] if earlier else ["lit", "op"]))
        if kind == "lit":
            rhs = draw(literal)
        elif kind == "ref":
            rhs = draw(st.sampled_from(earlier))
        else:
            op = draw(st.sampled_from(Operator.for_mode(mode)))
            rhs = BinOp(draw(operand), op, draw(operand))
        statements.append(Statement(name, rhs))
    order = draw(st.permutations(statements))
    query = draw(st.sampled_from(names))
    return Program(tuple(order), query, mode)


# ---- acceptance reporting: one PASS/FAIL line per criterion

_ACCEPTANCE: dict[str, list[str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(label): acceptance criterion")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    label = _LABELS.get(report.nodeid)
    if label is not None:
        _ACCEPTANCE.setdefault(label, []).append(report.outcome)


_LABELS: dict[str, str] = {}


def pytest_collection_modifyitems(items):
    for item in items:
        marker = item.get_closest_marker("acceptance")
        if marker:
            _LABELS[item.nodeid] = marker.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_ACCEPTANCE):
        outcomes = _ACCEPTANCE[label]
        status = "PASS" if all(o == "passed" for o in outcomes) else "FAIL"
        terminalreporter.write_line(f"{status}  {label}  ({outcomes.count('passed')}/{len(outcomes)} checks)")


@pytest.fixture
def d2_program():
    return Program(
        (Statement("A", BinOp(Num("1"), Operator.ADD, Num("2"))), Statement("B", BinOp(Var("A"), Operator.ADD, Num("3")))),
        "B",
    )
