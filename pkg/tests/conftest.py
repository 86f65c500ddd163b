from pathlib import Path

import pytest

from earleydl import parse_program
from earleydl.store import FactStore

DATA = Path(__file__).parent / "data"

P1 = """\
.edb par/2.
anc(X,Y) :- par(X,Y).
anc(X,Y) :- anc(X,Z), par(Z,Y).
?- anc(a,Y).
"""

SG = """\
.edb up/2.
.edb down/2.
.edb flat/2.
sg(X,Y) :- flat(X,Y).
sg(X,Y) :- up(X,U), sg(U,V), down(V,Y).
?- sg(a,Y).
"""

# criterion number -> (description, passed, detail); filled by test_acceptance
ACCEPTANCE: dict = {}
REPORTS: list = []


def store_of(p, facts) -> FactStore:
    return FactStore.from_facts(p.edb, facts)


@pytest.fixture
def p1():
    return parse_program(P1)


@pytest.fixture
def p1_store(p1):
    return store_of(p1, [("par", ("a", "b")), ("par", ("b", "c"))])


@pytest.fixture
def sg():
    return parse_program(SG)


@pytest.fixture
def sg_store(sg):
    return store_of(sg, [("up", ("a", "b")), ("down", ("b", "c")), ("flat", ("b", "b"))])


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, text): acceptance criterion n")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call" and not (rep.when == "setup" and rep.failed):
        return
    n, text = mark.args
    detail = ""
    if rep.failed:
        detail = str(rep.longrepr.reprcrash.message) if hasattr(rep.longrepr, "reprcrash") else "failed"
    prev = ACCEPTANCE.get(n)
    passed = rep.passed and (prev is None or prev[1])
    ACCEPTANCE[n] = (text, passed, detail or (prev[2] if prev else ""))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE and not REPORTS:
        return
    tr = terminalreporter
    if REPORTS:
        tr.section("benchmark tables")
        for block in REPORTS:
            tr.write(block if block.endswith("\n") else block + "\n")
    if ACCEPTANCE:
        tr.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            text, passed, detail = ACCEPTANCE[n]
            line = f"criterion {n}: {'PASS' if passed else 'FAIL'} - {text}"
            if not passed and detail:
                line += f" ({detail.splitlines()[0][:160]})"
            tr.write_line(line)
