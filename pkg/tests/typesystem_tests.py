import unittest

from ambient_gym.calculus.parser import parse_model, parse_process
from ambient_gym.calculus.syntax import CapType, GroupDecl, GroupTable, Label, Name, Warn
from ambient_gym.calculus.typesystem import (
    GroupTypeError, TypeEnv, check_model, compatible, declaration_findings, member_group, top_level_groups,
    type_process, well_formed_cap,
)
from ambient_gym.envs import load_model

GROUPS = GroupTable([
    GroupDecl('G'),
    GroupDecl('K', frozenset(['G']), frozenset(['G'])),
    GroupDecl('L', frozenset(['G', 'K']), frozenset(['K'])),
])

HEADER = """
group G
group K { stay: G; }
group L { stay: G, K; cross: K; }
name a : amb(G)
name b : amb(K)
name l : amb(L)
name h : cap(ea, {K}, {G})
name x : cap(ee, {K}, {G})
name m : cap(mm, {G}, {K})
name c : ch(group K)
"""


def model(system):
    return parse_model(HEADER + 'system ' + system)


class CapabilityTests(unittest.TestCase):

    def test_member_group(self):
        self.assertTrue(member_group('G', frozenset(['G'])))
        self.assertTrue(member_group('G', frozenset(['Univ'])))
        self.assertFalse(member_group('G', frozenset(['K'])))

    def test_well_formed(self):
        y = CapType(frozenset(['K']), frozenset(['G']), Label.EA)
        self.assertEqual(well_formed_cap(y, GROUPS), (True, None))

    def test_ill_formed_witness(self):
        y = CapType(frozenset(['L']), frozenset(['G', 'K']), Label.EE)
        self.assertEqual(well_formed_cap(y, GROUPS), (False, ('G', 'L')))

    def test_merge_always_well_formed(self):
        y = CapType(frozenset(['K']), frozenset(['L']), Label.MM)
        self.assertEqual(well_formed_cap(y, GROUPS), (True, None))

    def test_compatible(self):
        y = CapType(frozenset(['K']), frozenset(['G']), Label.EA)

        self.assertTrue(compatible(y, 'K', GROUPS))
        self.assertTrue(compatible(y, 'G', GROUPS))
        self.assertFalse(compatible(y, 'L', GROUPS))


class TypeEnvTests(unittest.TestCase):

    def test_name_occurs_once(self):
        env = TypeEnv([(Name('a'), CapType(frozenset(['G']), frozenset(['G']), Label.MM))])
        with self.assertRaises(ValueError):
            env.extend(Name('a'), CapType(frozenset(['G']), frozenset(['G']), Label.MM))

    def test_without(self):
        m = model('0')
        self.assertEqual(m.env.without([Name('a'), Name('b')]).names(), [Name(t) for t in ('l', 'h', 'x', 'm', 'c')])


class JudgmentTests(unittest.TestCase):

    def judge(self, system):
        m = model(system)
        return type_process(m.env, m.groups, m.system)

    def test_prefix_collects_capability(self):
        j = self.judge('enter h')

        self.assertEqual(j.groups, frozenset())
        self.assertEqual([y.label for y in j.caps], [Label.EA])

    def test_ambient_empties_capabilities(self):
        j = self.judge('a[ accept h | b[ enter h ] ]')

        self.assertEqual(j.groups, {'G'})
        self.assertEqual(j.caps, frozenset())

    def test_par_unions(self):
        self.assertEqual(self.judge('a[ 0 ] | !l[ 0 ] | (new k : ch(group K)) local k!{b}').groups, {'G', 'L'})

    def test_stay_violation(self):
        with self.assertRaises(GroupTypeError) as ctx:
            self.judge('l[ b[ 0 ] ]')
        self.assertEqual(ctx.exception.kind, GroupTypeError.STAY_VIOLATION)
        self.assertEqual(ctx.exception.subject, 'l')
        self.assertEqual(ctx.exception.context, 'L not in stay set of K')
        self.assertEqual(ctx.exception.group, 'K')

    def test_incompatible_capability(self):
        with self.assertRaises(GroupTypeError) as ctx:
            self.judge('a[ l[ enter h ] ]')
        self.assertEqual(ctx.exception.kind, GroupTypeError.INCOMPAT_CAP)
        self.assertEqual(ctx.exception.context, 'L')
        self.assertEqual(ctx.exception.path, (0,))

    def test_prefix_mismatch(self):
        with self.assertRaises(GroupTypeError) as ctx:
            self.judge('a[ expel h ]')
        self.assertEqual(ctx.exception.kind, GroupTypeError.PREFIX_MISMATCH)

    def test_kind_mismatch(self):
        with self.assertRaises(GroupTypeError) as ctx:
            self.judge('h[ 0 ]')
        self.assertEqual(ctx.exception.kind, GroupTypeError.KIND_MISMATCH)
        with self.assertRaises(GroupTypeError) as ctx:
            self.judge('enter a')
        self.assertEqual(ctx.exception.kind, GroupTypeError.KIND_MISMATCH)

    def test_channel_mismatch(self):
        with self.assertRaises(GroupTypeError) as ctx:
            self.judge('local c!{a}')
        self.assertEqual(ctx.exception.kind, GroupTypeError.CHANNEL_MISMATCH)
        with self.assertRaises(GroupTypeError) as ctx:
            self.judge('local h!{b}')
        self.assertEqual(ctx.exception.kind, GroupTypeError.CHANNEL_MISMATCH)

    def test_error_path_follows_continuations(self):
        with self.assertRaises(GroupTypeError) as ctx:
            self.judge('a[ local c!{b}.local c!{a} ]')
        self.assertEqual(ctx.exception.path, (0, 0, 0, 0))
        with self.assertRaises(GroupTypeError) as ctx:
            self.judge('a[ local c!{b} + local c!{b}.local c?{y}.local c!{a} ]')
        self.assertEqual(ctx.exception.path, (0, 1, 0, 0, 0, 0))

    def test_input_binder_typed_by_channel(self):
        self.assertEqual(self.judge('a[ local c?{y}.y[ 0 ] ]').groups, {'G'})
        with self.assertRaises(GroupTypeError) as ctx:
            self.judge('b[ local c?{y}.y[ 0 ] ]')
        self.assertEqual(ctx.exception.kind, GroupTypeError.STAY_VIOLATION)

    def test_restriction_extends_environment(self):
        j = self.judge('(new k : cap(ea, {K}, {G})) a[ accept k | b[ enter k ] ]')
        self.assertEqual(j.groups, {'G'})

    def test_shadowing_restriction(self):
        self.assertEqual(self.judge('(new a : amb(K)) a[ 0 ]').groups, {'K'})

    def test_runtime_forms_rejected(self):
        m = model('0')
        with self.assertRaises(ValueError):
            type_process(m.env, m.groups, Warn('G'))

    def test_top_level_groups(self):
        m = model('a[ b[ 0 ] ] | local c?{y}.y[ 0 ] | !l[ 0 ]')
        self.assertEqual(top_level_groups(m.system, m.env), {'G', 'K', 'L'})


class CheckModelTests(unittest.TestCase):

    def test_blood(self):
        report = check_model(load_model('blood'))

        self.assertTrue(report.ok)
        self.assertEqual(report.to_json()['groups'], ['A+', 'B+', 'O+'])
        self.assertEqual(report.to_json()['deltas'], [])

    def test_phage(self):
        report = check_model(load_model('phage'))

        self.assertTrue(report.ok)
        self.assertEqual(sorted(report.judgment.groups), ['Coat', 'EnvOk', 'EnvVirus'])

    def test_conveyor(self):
        report = check_model(load_model('conveyor'))

        self.assertTrue(report.ok)
        self.assertEqual(sorted(report.judgment.groups), ['C', 'CConv'])

    def test_conveyor_literal(self):
        report = check_model(load_model('conveyor_literal'))

        self.assertFalse(report.ok)
        self.assertIsNone(report.judgment)
        error, = report.errors
        self.assertEqual(error.kind, GroupTypeError.ILL_FORMED_CAP)
        self.assertEqual(error.subject, "h'")
        self.assertEqual(error.context, 'C not in cross set of Hphi')

    def test_cross_not_in_stay(self):
        m = parse_model('group G group K { stay: G; cross: G, K; } system 0')
        findings = declaration_findings(m.groups, m.env)

        self.assertEqual([(f.kind, f.subject, f.context) for f in findings],
                         [(GroupTypeError.CROSS_NOT_IN_STAY, 'K', 'K')])

    def test_nested_capability_in_channel(self):
        m = parse_model('group G group K { stay: G; } name c : ch(cap(ea, {K}, {K})) system 0')
        self.assertEqual([f.kind for f in check_model(m).errors], [GroupTypeError.ILL_FORMED_CAP])

    def test_type_error_is_reported(self):
        report = check_model(model('l[ b[ 0 ] ]'))

        self.assertFalse(report.ok)
        self.assertEqual(report.to_json()['status'], 'error')
        self.assertEqual(report.to_json()['errors'][0]['kind'], 'stay_violation')

    def test_parse_process_in_model_context(self):
        m = load_model('blood')
        p = parse_process('t1[ r1[ 0 ] ]', m.env, m.groups)

        self.assertEqual(type_process(m.env, m.groups, p).groups, {'A+'})
