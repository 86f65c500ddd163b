import pytest

from earleydl import Const, load_facts
from earleydl.store import FactLoadError, FactStore, UnknownPredicate

from conftest import DATA

PAR = [("par", 2)]


def consts(*names):
    return tuple(Const(n) for n in names)


def test_csv_ingestion():
    s = load_facts([DATA / "par.csv"], PAR)
    assert [f.args for f in s.facts(("par", 2))] == [consts("a", "b"), consts("b", "c")]


def test_duplicate_rows_collapse(tmp_path):
    f = tmp_path / "par.csv"
    f.write_text("a,b\na,b\n a , b \n")
    s = load_facts([f], PAR)
    assert len(s.facts(("par", 2))) == 1


def test_csv_arity_mismatch_names_predicate_and_line(tmp_path):
    f = tmp_path / "par.csv"
    f.write_text("a,b\na,b,c\n")
    with pytest.raises(FactLoadError) as ei:
        load_facts([f], PAR)
    msg = str(ei.value)
    assert "par/2" in msg and ":2:" in msg


def test_csv_empty_field_and_unknown_predicate(tmp_path):
    f = tmp_path / "par.csv"
    f.write_text("a,\n")
    with pytest.raises(FactLoadError, match="empty field"):
        load_facts([f], PAR)
    g = tmp_path / "other.csv"
    g.write_text("a\n")
    with pytest.raises(FactLoadError, match="unknown predicate"):
        load_facts([g], PAR)


def test_dl_facts_file(tmp_path):
    f = tmp_path / "facts.dl"
    f.write_text("par(a,b).\n% note\npar(b,c).\n")
    s = load_facts([f], PAR)
    assert len(s) == 2
    bad = tmp_path / "bad.dl"
    bad.write_text("par(a,b).\npar(a).\n")
    with pytest.raises(FactLoadError, match=":2:"):
        load_facts([bad], PAR)
    bad.write_text("zz(a).\n")
    with pytest.raises(FactLoadError, match="unknown predicate zz/1"):
        load_facts([bad], PAR)


def test_mixed_sources_union(tmp_path):
    f = tmp_path / "more.dl"
    f.write_text("par(c,d).\npar(a,b).\n")
    s = load_facts([DATA / "par.csv", f], PAR)
    assert len(s) == 3


@pytest.fixture
def store():
    return FactStore.from_facts(PAR, [("par", ("a", "b")), ("par", ("b", "c"))])


def test_lookup_examples(store):
    assert [f.args for f in store.lookup(("par", 2), "bf", [Const("a")])] == [consts("a", "b")]
    assert [f.args for f in store.lookup(("par", 2), "ff", [])] == [consts("a", "b"), consts("b", "c")]
    assert store.lookup(("par", 2), "bb", [Const("a"), Const("c")]) == []


def test_lookup_counts_calls(store):
    assert store.lookup_count(("par", 2)) == 0
    for _ in range(3):
        store.lookup(("par", 2), "fb", [Const("c")])
    assert store.lookup_count(("par", 2)) == 3
    assert store.total_lookups() == 3
    store.reset_counters()
    assert store.total_lookups() == 0


def test_lookup_errors(store):
    with pytest.raises(UnknownPredicate):
        store.lookup(("nope", 1), "f", [])
    with pytest.raises(ValueError):
        store.lookup(("par", 2), "b", [Const("a")])


def test_contains(store):
    from earleydl.store import Fact

    assert Fact(("par", 2), consts("a", "b")) in store
    assert Fact(("par", 2), consts("b", "a")) not in store
