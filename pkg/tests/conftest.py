from pathlib import Path

import pytest

from ltlplan import build_ts, builtin_map, compile_dfa, decompose, parse_ltl

FIXTURES = Path(__file__).parent / "fixtures"

SEQ4 = "F(g1 & F(g2 & F(g3 & F(g4))))"
SEQ4_SAFE = "F(g1 & F(g2 & F(g3 & F(g4)))) & G(g1 -> X G(!us))"
SEQ4_SAFE_LITERAL = "F(g1 & F(g2 & F(g3 & F(g4)))) & G(g1 & X G(!us))"
DISJ = "F(g1||g2 & F(g3 & F(g4)))"

# filled by test_acceptance.py, reported after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def canonical():
    return builtin_map("canonical")


@pytest.fixture(scope="session")
def canonical_unsafe():
    return builtin_map("canonical_unsafe")


@pytest.fixture(scope="session")
def grid(canonical):
    return decompose(canonical)


@pytest.fixture(scope="session")
def grid_unsafe(canonical_unsafe):
    return decompose(canonical_unsafe)


@pytest.fixture(scope="session")
def ts(grid, canonical):
    return build_ts(grid, canonical)


@pytest.fixture(scope="session")
def ts_unsafe(grid_unsafe, canonical_unsafe):
    return build_ts(grid_unsafe, canonical_unsafe)


@pytest.fixture(scope="session")
def dfa_seq():
    return compile_dfa(parse_ltl(SEQ4))


@pytest.fixture(scope="session")
def dfa_safe():
    return compile_dfa(parse_ltl(SEQ4_SAFE))


@pytest.fixture(scope="session")
def dfa_disj():
    return compile_dfa(parse_ltl(DISJ))
