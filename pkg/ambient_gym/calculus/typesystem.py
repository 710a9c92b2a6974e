"""
Group-type system: environment formation, capability well-formedness,
capability/group compatibility and the synthesising judgment
`Γ ⊢ P : Ḡ; Δ`.
"""
import logging
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import FrozenSet, List, Optional, Tuple

from .syntax import (
    UNIV, Ambient, ArgType, CapPrefix, CapType, ChanType, GroupTable, GroupType, Input,
    Label, Name, Output, Par, Process, Repl, Restrict, Sum, Zero, RUNTIME_FORMS,
    free_names, fresh_name, kind_of, pretty_type, substitute,
)

TOP_LEVEL = frozenset([UNIV])


class TypeEnv(object):
    """
    Γ: an ordered, immutable map from names to argument types. A name may
    occur at most once.
    """
    def __init__(self, bindings=()):
        self._bindings = OrderedDict()
        for name, t in bindings:
            if name in self._bindings:
                raise ValueError('{} already occurs in the environment'.format(name))
            self._bindings[name] = t

    def extend(self, name: Name, t: ArgType) -> 'TypeEnv':
        if name in self._bindings:
            raise ValueError('{} already occurs in the environment'.format(name))
        return TypeEnv(list(self._bindings.items()) + [(Name(name.text, kind_of(t)), t)])

    def without(self, names) -> 'TypeEnv':
        names = set(names)
        return TypeEnv([(n, t) for n, t in self._bindings.items() if n not in names])

    def __contains__(self, name):
        return name in self._bindings

    def __getitem__(self, name) -> ArgType:
        return self._bindings[name]

    def get(self, name, default=None) -> Optional[ArgType]:
        return self._bindings.get(name, default)

    def items(self):
        return list(self._bindings.items())

    def names(self):
        return list(self._bindings)

    def __len__(self):
        return len(self._bindings)

    def __eq__(self, other):
        return isinstance(other, TypeEnv) and self.items() == other.items()

    def __hash__(self):
        return hash(tuple(self.items()))

    def __repr__(self):
        return 'TypeEnv({})'.format(', '.join('{}: {}'.format(n, pretty_type(t)) for n, t in self.items()))


@dataclass(frozen=True)
class Judgment(object):
    groups: FrozenSet[str] = frozenset()
    caps: FrozenSet[CapType] = frozenset()

    def union(self, other: 'Judgment') -> 'Judgment':
        return Judgment(self.groups | other.groups, self.caps | other.caps)


class GroupTypeError(Exception):
    ILL_FORMED_CAP = 'ill_formed_cap'
    STAY_VIOLATION = 'stay_violation'
    INCOMPAT_CAP = 'incompat_cap'
    PREFIX_MISMATCH = 'prefix_mismatch'
    CHANNEL_MISMATCH = 'channel_mismatch'
    UNKNOWN_NAME = 'unknown_name'
    KIND_MISMATCH = 'kind_mismatch'
    CROSS_NOT_IN_STAY = 'cross_not_in_stay'

    def __init__(self, kind, subject, context, path=(), group=None):
        super(GroupTypeError, self).__init__('{}: {} ({}) at {}'.format(kind, subject, context, list(path)))
        self.kind = kind
        self.subject = subject
        self.context = context
        self.path = tuple(path)
        self.group = group

    def to_json(self):
        return {
            'kind': self.kind,
            'subject': self.subject,
            'context': self.context,
            'path': list(self.path),
        }


def member_group(g: str, s: FrozenSet[str]) -> bool:
    """`g ∈ s` with Univ read as a wildcard."""
    return g in s or UNIV in s


def well_formed_cap(y: CapType, groups: GroupTable) -> Tuple[bool, Optional[Tuple[str, str]]]:
    """
    Returns (True, None) or (False, (host, mover)) where `host ∉ C_mover`
    witnesses the failure. mm capabilities are always well formed.
    """
    if y.label == Label.MM:
        return True, None
    for host in sorted(y.hosts):
        for mover in sorted(y.movers):
            if not member_group(host, groups.cross(mover)):
                return False, (host, mover)
    return True, None


def compatible(y: CapType, g: str, groups: GroupTable) -> bool:
    return well_formed_cap(y, groups)[0] and (g in y.movers or g in y.hosts)


def _nested_caps(t: ArgType):
    if isinstance(t, CapType):
        yield t
    elif isinstance(t, ChanType):
        for y in _nested_caps(t.payload):
            yield y


class _Checker(object):

    def __init__(self, groups: GroupTable):
        self.groups = groups

    def lookup(self, env: TypeEnv, name: Name, path) -> ArgType:
        t = env.get(name)
        if t is None:
            raise GroupTypeError(GroupTypeError.UNKNOWN_NAME, name.text, 'not in Dom(Γ)', path)
        return t

    def open_binder(self, env: TypeEnv, binder: Name, body: Process):
        if binder not in env:
            return binder, body
        fresh = fresh_name(binder, set(env.names()) | free_names(body))
        return fresh, substitute(body, binder, fresh)

    def judge(self, env: TypeEnv, p: Process, path) -> Judgment:
        if isinstance(p, Zero):
            return Judgment()
        if isinstance(p, Par):
            result = Judgment()
            for i, c in enumerate(p.components):
                result = result.union(self.judge(env, c, path + (i,)))
            return result
        if isinstance(p, Repl):
            return self.judge(env, p.body, path + (0,))
        if isinstance(p, Restrict):
            name, body = self.open_binder(env, p.name, p.body)
            return self.judge(env.extend(name, p.annot), body, path + (0,))
        if isinstance(p, Ambient):
            return self.ambient(env, p, path)
        if isinstance(p, Sum):
            result = Judgment()
            for i, (prefix, cont) in enumerate(p.branches):
                result = result.union(self.branch(env, prefix, cont, path + (i,)))
            return result
        if isinstance(p, RUNTIME_FORMS):
            raise ValueError('runtime-only term {!r} has no static typing'.format(p))
        raise ValueError('not a process: {!r}'.format(p))

    def ambient(self, env: TypeEnv, p: Ambient, path) -> Judgment:
        t = self.lookup(env, p.name, path)
        if not isinstance(t, GroupType):
            raise GroupTypeError(GroupTypeError.KIND_MISMATCH, p.name.text, 'ambient name has type {}'.format(
                pretty_type(t)), path)
        inner = self.judge(env, p.body, path + (0,))
        for g in sorted(inner.groups):
            if not member_group(t.group, self.groups.stay(g)):
                raise GroupTypeError(GroupTypeError.STAY_VIOLATION, p.name.text,
                                     '{} not in stay set of {}'.format(t.group, g), path, group=g)
        for y in sorted(inner.caps, key=pretty_type):
            if not compatible(y, t.group, self.groups):
                raise GroupTypeError(GroupTypeError.INCOMPAT_CAP, pretty_type(y), t.group, path)
        return Judgment(frozenset([t.group]), frozenset())

    def branch(self, env: TypeEnv, prefix, cont: Process, path) -> Judgment:
        if isinstance(prefix, CapPrefix):
            t = self.lookup(env, prefix.name, path)
            if not isinstance(t, CapType):
                raise GroupTypeError(GroupTypeError.KIND_MISMATCH, prefix.name.text,
                                     '{} used with {}'.format(pretty_type(t), prefix.op.value), path)
            ok, witness = well_formed_cap(t, self.groups)
            if not ok:
                raise GroupTypeError(GroupTypeError.ILL_FORMED_CAP, prefix.name.text,
                                     '{} not in cross set of {}'.format(*witness), path)
            if not t.admits(prefix.op):
                raise GroupTypeError(GroupTypeError.PREFIX_MISMATCH, prefix.name.text,
                                     '{} not in {}'.format(prefix.op.value, pretty_type(t)), path)
            inner = self.judge(env, cont, path + (0,))
            return Judgment(inner.groups, inner.caps | {t})
        channel_type = self.lookup(env, prefix.channel, path)
        if not isinstance(channel_type, ChanType):
            raise GroupTypeError(GroupTypeError.CHANNEL_MISMATCH, prefix.channel.text,
                                 '{} is not a channel'.format(pretty_type(channel_type)), path)
        if isinstance(prefix, Output):
            payload_type = self.lookup(env, prefix.payload, path)
            if payload_type != channel_type.payload:
                raise GroupTypeError(GroupTypeError.CHANNEL_MISMATCH, prefix.payload.text,
                                     'sent {} on {}'.format(pretty_type(payload_type), pretty_type(channel_type)),
                                     path)
            return self.judge(env, cont, path + (0,))
        binder, body = self.open_binder(env, prefix.binder, cont)
        return self.judge(env.extend(binder, channel_type.payload), body, path + (0,))


def type_process(env: TypeEnv, groups: GroupTable, p: Process, path=()) -> Judgment:
    """Synthesise `Γ ⊢ p : Ḡ; Δ`, raising GroupTypeError on the first failed premise."""
    return _Checker(groups).judge(env, p, tuple(path))


def top_level_groups(p: Process, env: TypeEnv) -> FrozenSet[str]:
    """Groups of the ambients reachable without crossing an ambient boundary."""
    if isinstance(p, Ambient):
        t = env.get(p.name)
        return frozenset([t.group]) if isinstance(t, GroupType) else frozenset()
    if isinstance(p, Par):
        return frozenset().union(*[top_level_groups(c, env) for c in p.components])
    if isinstance(p, Repl):
        return top_level_groups(p.body, env)
    if isinstance(p, Restrict):
        return top_level_groups(p.body, env if p.name in env else env.extend(p.name, p.annot))
    if isinstance(p, Sum):
        found = set()
        for prefix, cont in p.branches:
            inner = env
            if isinstance(prefix, Input):
                channel_type = env.get(prefix.channel)
                if isinstance(channel_type, ChanType) and prefix.binder not in env:
                    inner = env.extend(prefix.binder, channel_type.payload)
            found |= top_level_groups(cont, inner)
        return frozenset(found)
    return frozenset()


@dataclass
class CheckReport(object):
    judgment: Optional[Judgment] = None
    errors: List[GroupTypeError] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.judgment is not None and not self.errors

    def to_json(self):
        judgment = self.judgment or Judgment()
        return {
            'status': 'ok' if self.ok else 'error',
            'groups': sorted(judgment.groups),
            'deltas': sorted(pretty_type(y) for y in judgment.caps),
            'errors': [e.to_json() for e in self.errors],
        }


def declaration_findings(groups: GroupTable, env: TypeEnv) -> List[GroupTypeError]:
    findings = []
    for decl in groups:
        if UNIV in decl.stay:
            continue
        extra = decl.cross - decl.stay
        if extra:
            findings.append(GroupTypeError(GroupTypeError.CROSS_NOT_IN_STAY, decl.name,
                                           ', '.join(sorted(extra))))
    for name, t in env.items():
        for y in _nested_caps(t):
            ok, witness = well_formed_cap(y, groups)
            if not ok:
                findings.append(GroupTypeError(GroupTypeError.ILL_FORMED_CAP, name.text,
                                               '{} not in cross set of {}'.format(*witness)))
    return findings


def check_model(m) -> CheckReport:
    """Declaration checks, then the judgment of the system process. Never raises."""
    report = CheckReport(errors=declaration_findings(m.groups, m.env))
    if report.errors:
        logging.debug('{} declaration findings, system not typed'.format(len(report.errors)))
        return report
    try:
        report.judgment = type_process(m.env, m.groups, m.system)
    except GroupTypeError as e:
        report.errors.append(e)
    return report
