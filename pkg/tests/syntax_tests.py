import unittest

import hypothesis as hyp
from hypothesis import strategies as st

from ambient_gym.calculus.syntax import (
    Ambient, CapOp, CapPrefix, ChanType, Direction, Flavor, GroupDecl, GroupTable, GroupType, Input, Kind, Name,
    Output, Par, Repl, Restrict, Sum, Warn, Zero, audit, bound_names, free_names, fresh_name, par, prefix_sum,
    substitute,
)

T = ChanType(GroupType('G'))

names = st.sampled_from([Name(t) for t in ('a', 'b', 'c', 'h', 'k', 'm', 'n')])

prefixes = st.one_of(
    st.builds(CapPrefix, st.sampled_from(list(CapOp)), names),
    st.builds(Output, st.sampled_from(list(Direction)), names, names),
    st.builds(Input, st.sampled_from(list(Direction)), names, names),
)

processes = st.recursive(
    st.just(Zero()),
    lambda inner: st.one_of(
        st.builds(prefix_sum, prefixes, inner),
        st.builds(lambda p, q: Par((p, q)), inner, inner),
        st.builds(Repl, inner),
        st.builds(Ambient, names, inner),
        st.builds(lambda n, p: Restrict(n, T, p), names, inner),
    ),
    max_leaves=12,
)


class NameTests(unittest.TestCase):

    def test_free_names(self):
        h, c, n = Name('h', Kind.CAPABILITY), Name('c'), Name('n')

        self.assertEqual(free_names(Zero()), frozenset())
        self.assertEqual(free_names(prefix_sum(CapPrefix(CapOp.ENTER, h))), {h})
        self.assertEqual(free_names(Restrict(n, T, prefix_sum(Output(Direction.LOCAL, c, n)))), {c})

    def test_input_binds_its_continuation(self):
        c, x = Name('c'), Name('x')
        p = prefix_sum(Input(Direction.P2C, c, x), Ambient(x, Zero()))

        self.assertEqual(free_names(p), {c})
        self.assertEqual(bound_names(p), {x})

    def test_ambient_names_are_free(self):
        self.assertEqual(free_names(Ambient(Name('a'), Zero())), {Name('a')})

    def test_name_identity_is_text(self):
        self.assertEqual(Name('a', Kind.AMBIENT), Name('a', Kind.CHANNEL))
        self.assertEqual(len({Name('a', Kind.AMBIENT), Name('a')}), 1)

    def test_fresh_name(self):
        m = Name('m')

        self.assertEqual(fresh_name(m, {m}), Name('m1'))
        self.assertEqual(fresh_name(m, {m, Name('m1')}), Name('m2'))
        self.assertEqual(fresh_name(m, set()), m)

    def test_fresh_name_keeps_kind(self):
        self.assertEqual(fresh_name(Name('a', Kind.AMBIENT), {Name('a')}).kind, Kind.AMBIENT)

    @hyp.given(st.sets(st.sampled_from(['m', 'm1', 'm2', 'm3', 'n', 'x']).map(Name)))
    def test_fresh_name_avoids(self, avoid):
        accumulated = set(avoid)
        seen = []
        for _ in range(5):
            fresh = fresh_name(Name('m'), accumulated)
            self.assertNotIn(fresh, accumulated)
            self.assertNotIn(fresh, seen)
            accumulated.add(fresh)
            seen.append(fresh)


class SubstitutionTests(unittest.TestCase):

    def test_direct_replacement(self):
        d, n, m = Name('d'), Name('n'), Name('m')
        p = prefix_sum(Output(Direction.LOCAL, d, n))

        self.assertEqual(substitute(p, n, m), prefix_sum(Output(Direction.LOCAL, d, m)))
        self.assertEqual(substitute(Zero(), n, m), Zero())

    def test_capture_renames_binder(self):
        c, n, m = Name('c'), Name('n'), Name('m')
        p = Restrict(m, T, prefix_sum(Output(Direction.LOCAL, c, n)))

        result = substitute(p, n, m)

        self.assertEqual(result, Restrict(Name('m1'), T, prefix_sum(Output(Direction.LOCAL, c, m))))

    def test_capture_renames_input_binder(self):
        c, n, m = Name('c'), Name('n'), Name('m')
        p = prefix_sum(Input(Direction.LOCAL, c, m), Ambient(n, Ambient(m, Zero())))

        result = substitute(p, n, m)

        prefix, cont = result.branches[0]
        self.assertEqual(prefix.binder, Name('m1'))
        self.assertEqual(cont, Ambient(m, Ambient(Name('m1'), Zero())))

    def test_shadowed_target_untouched(self):
        c, n, m = Name('c'), Name('n'), Name('m')
        p = Restrict(n, T, prefix_sum(Output(Direction.LOCAL, c, n)))

        self.assertEqual(substitute(p, n, m), p)

    @hyp.given(processes, names)
    def test_identity_substitution(self, p, n):
        self.assertEqual(substitute(p, n, n), p)

    @hyp.given(processes, names, names)
    def test_free_names_after_substitution(self, p, n, m):
        before = free_names(p)
        after = free_names(substitute(p, n, m))

        self.assertTrue(after <= (before - {n}) | {m})
        if n in before:
            self.assertEqual(after, (before - {n}) | {m})


class AuditTests(unittest.TestCase):

    def test_clean_process(self):
        p = par(Ambient(Name('a'), prefix_sum(CapPrefix(CapOp.ENTER, Name('h')))), Repl(Zero()))
        self.assertIsNone(audit(p))

    def test_mixed_sum(self):
        s = Sum(((CapPrefix(CapOp.ENTER, Name('h')), Zero()), (Output(Direction.LOCAL, Name('c'), Name('a')), Zero())),
                Flavor.CAPABILITY)
        self.assertEqual(audit(Ambient(Name('a'), s)), 'mixed capability sum')

    def test_runtime_forms(self):
        p = Par((Warn('G'), Ambient(Name('a'), Zero())))

        self.assertIsNone(audit(p))
        self.assertIsNotNone(audit(p, runtime_ok=False))

    def test_uncollapsed_par(self):
        self.assertEqual(audit(Par((Zero(),))), 'uncollapsed parallel composition')

    def test_par_collapses(self):
        a = Ambient(Name('a'), Zero())

        self.assertEqual(par(), Zero())
        self.assertEqual(par(a, Zero()), a)
        self.assertEqual(par(Par((a, a)), a), Par((a, a, a)))

    @hyp.given(processes)
    def test_generated_processes_keep_flavors(self, p):
        self.assertIsNone(audit(p, runtime_ok=False))


class GroupTableTests(unittest.TestCase):

    def test_univ_is_implicit(self):
        groups = GroupTable([GroupDecl('G', frozenset(['H']), frozenset(['H'])), GroupDecl('H')])

        self.assertIn('Univ', groups)
        self.assertEqual(groups.stay('Univ'), {'Univ'})
        self.assertEqual(groups.names(), ['G', 'H'])
        self.assertEqual(groups.stay('H'), {'Univ'})

    def test_duplicate_group(self):
        with self.assertRaises(ValueError):
            GroupTable([GroupDecl('G'), GroupDecl('G')])
