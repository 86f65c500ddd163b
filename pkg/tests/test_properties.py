import random

from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from earleydl import (
    Atom,
    Const,
    Program,
    Rule,
    Var,
    answer_query,
    build_automaton,
    earley_run,
    emit_rewritten_program,
    parse_program,
    print_program,
    run_automaton,
    validate_program,
)
from earleydl.automaton import Item, canonicalize, dump_automaton
from earleydl.earley import DerivedRule, subsumes
from earleydl.randprog import random_case
from earleydl.store import FactStore

from oracles import brute_subsumes

seeds = st.integers(min_value=0, max_value=2**32 - 1)
SETTINGS = settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@SETTINGS
@given(seeds)
def test_print_parse_round_trip(seed):
    p = random_case(random.Random(seed)).program
    assert parse_program(print_program(p)) == p


@SETTINGS
@given(seeds)
def test_generated_programs_validate(seed):
    assert validate_program(random_case(random.Random(seed)).program) == []


@SETTINGS
@given(seeds, st.integers(0, 2))
def test_broken_programs_rejected(seed, how):
    p = random_case(random.Random(seed)).program
    r = p.rules[0]
    if how == 0:
        bad = Rule(Atom(r.head.name, r.head.args + (Var("Unbound"),)), r.body)
        p = Program(p.edb, (bad,) + p.rules[1:], p.query)
        # the extra head position changes the arity; the query still uses the old one
    elif how == 1:
        name, arity = p.edb[0]
        p = Program(p.edb, p.rules + (Rule(Atom(name, tuple(Const("c0") for _ in range(arity)))),), p.query)
    else:
        p = Program(p.edb, p.rules, None)
    assert validate_program(p) != []


facts_st = st.lists(st.tuples(*[st.sampled_from("abcd")] * 3), max_size=30)


@settings(max_examples=150, deadline=None)
@given(facts_st, st.text(alphabet="bf", min_size=3, max_size=3), st.data())
def test_lookup_equals_linear_filter(rows, pattern, data):
    store = FactStore.from_facts([("e", 3)], [("e", r) for r in rows])
    bound = [i for i, c in enumerate(pattern) if c == "b"]
    values = [Const(data.draw(st.sampled_from("abcd"))) for _ in bound]
    got = store.lookup(("e", 3), pattern, values)
    expect = sorted(
        {tuple(Const(x) for x in r) for r in rows if all(Const(r[i]) is v for i, v in zip(bound, values))},
        key=lambda t: tuple(c.name for c in t),
    )
    assert [f.args for f in got] == expect
    assert store.lookup_count(("e", 3)) == 1


@settings(max_examples=80, deadline=None)
@given(seeds)
def test_four_engines_agree(seed):
    case = random_case(random.Random(seed))
    p, s = case.program, case.store
    oracle = answer_query(p, s)
    assert earley_run(p, s) == oracle
    a = build_automaton(p)
    assert run_automaton(a, s) == oracle
    assert answer_query(emit_rewritten_program(a), s) == oracle


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_dump_deterministic(seed):
    p = random_case(random.Random(seed)).program
    assert dump_automaton(build_automaton(p)) == dump_automaton(build_automaton(p))


@settings(max_examples=60, deadline=None)
@given(seeds, st.randoms(use_true_random=False))
def test_canonicalize_invariant_under_renaming_and_order(seed, rnd):
    a = build_automaton(random_case(random.Random(seed)).program)
    for state in a.states[:10]:
        slots = list(range(state.param_count))
        fresh = rnd.sample(range(100, 100 + 3 * len(slots) + 1), len(slots))
        m = dict(zip(slots, fresh))

        def ren(x):
            return m.get(x, x) if isinstance(x, int) else x

        items = [
            Item(it.rule_id, it.dot, it.alpha, tuple(ren(x) for x in it.binding),
                 tuple((ren(g0), ren(g1)) for g0, g1 in it.guards))
            for it in state.items
        ]
        rnd.shuffle(items)
        assert canonicalize(items)[0] == state.items


# -- subsumption -------------------------------------------------------------------

VARS3 = [Var("X"), Var("Y"), Var("Z")]
CONSTS3 = [Const("k0"), Const("k1"), Const("k2")]
term = st.sampled_from(VARS3 + CONSTS3)
atom = st.one_of(
    st.tuples(st.just("p"), st.tuples(term, term)),
    st.tuples(st.just("q"), st.tuples(term)),
).map(lambda x: Atom(*x))
rule_st = st.builds(lambda h, b: DerivedRule(h, tuple(b)), atom, st.lists(atom, max_size=2))


@settings(max_examples=400, deadline=None)
@given(rule_st, rule_st)
def test_subsumes_matches_brute_force(g, s):
    assert subsumes(g, s) == brute_subsumes(g, s)


@settings(max_examples=300, deadline=None)
@given(rule_st, st.fixed_dictionaries({v: term for v in VARS3}))
def test_instances_are_subsumed(g, theta):
    def ap(a):
        return Atom(a.name, tuple(theta.get(t, t) for t in a.args))

    s = DerivedRule(ap(g.head), tuple(ap(a) for a in g.body))
    assert subsumes(g, s)
    assert brute_subsumes(g, s)
