"""
Abstract syntax of BioAmbients processes and of group types.

All values are frozen dataclasses, so terms can be shared freely and used
as dictionary keys.
"""
import enum
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, Iterator, Optional, Tuple, Union

UNIV = 'Univ'


class Kind(enum.Enum):
    AMBIENT = 'ambient'
    CHANNEL = 'channel'
    CAPABILITY = 'capability'


@dataclass(frozen=True, order=True)
class Name(object):
    text: str
    kind: Kind = field(default=Kind.CHANNEL, compare=False, hash=False)

    def __str__(self):
        return self.text


class Label(enum.Enum):
    EA = 'ea'
    EE = 'ee'
    MM = 'mm'


class Direction(enum.Enum):
    LOCAL = 'local'
    S2S = 's2s'
    P2C = 'p2c'
    C2P = 'c2p'


class CapOp(enum.Enum):
    ENTER = 'enter'
    ACCEPT = 'accept'
    EXIT = 'exit'
    EXPEL = 'expel'
    MERGE_PLUS = 'merge+'
    MERGE_MINUS = 'merge-'

    @property
    def label(self):
        return _OP_LABELS[self]


_OP_LABELS = {
    CapOp.ENTER: Label.EA, CapOp.ACCEPT: Label.EA,
    CapOp.EXIT: Label.EE, CapOp.EXPEL: Label.EE,
    CapOp.MERGE_PLUS: Label.MM, CapOp.MERGE_MINUS: Label.MM,
}


# -- types ------------------------------------------------------------------

@dataclass(frozen=True)
class GroupDecl(object):
    name: str
    stay: FrozenSet[str] = frozenset([UNIV])
    cross: FrozenSet[str] = frozenset([UNIV])


class GroupTable(object):
    """
    Ordered, immutable table of declared group types. `Univ` is implicit:
    it may stay anywhere and cross anything.
    """
    def __init__(self, decls: Iterable[GroupDecl] = ()):
        self._decls = {}  # type: Dict[str, GroupDecl]
        for decl in decls:
            if decl.name in self._decls:
                raise ValueError('duplicate group {}'.format(decl.name))
            self._decls[decl.name] = decl

    def __contains__(self, group):
        return group == UNIV or group in self._decls

    def __iter__(self) -> Iterator[GroupDecl]:
        return iter(self._decls.values())

    def __len__(self):
        return len(self._decls)

    def __eq__(self, other):
        return isinstance(other, GroupTable) and list(self) == list(other)

    def __hash__(self):
        return hash(tuple(self))

    def __repr__(self):
        return 'GroupTable({!r})'.format(list(self))

    def names(self):
        return list(self._decls)

    def stay(self, group: str) -> FrozenSet[str]:
        if group == UNIV:
            return frozenset([UNIV])
        return self._decls[group].stay

    def cross(self, group: str) -> FrozenSet[str]:
        if group == UNIV:
            return frozenset([UNIV])
        return self._decls[group].cross


@dataclass(frozen=True)
class GroupType(object):
    group: str


@dataclass(frozen=True)
class CapType(object):
    movers: FrozenSet[str]
    hosts: FrozenSet[str]
    label: Label

    def admits(self, op: CapOp) -> bool:
        """`op ∈ Y`: the prefix is one of the two paired by the label."""
        return op.label == self.label


@dataclass(frozen=True)
class ChanType(object):
    payload: 'ArgType'


ArgType = Union[GroupType, CapType, ChanType]


def kind_of(t: ArgType) -> Kind:
    if isinstance(t, GroupType):
        return Kind.AMBIENT
    if isinstance(t, CapType):
        return Kind.CAPABILITY
    return Kind.CHANNEL


def type_groups(t: ArgType) -> FrozenSet[str]:
    """Every group mentioned by an argument type."""
    if isinstance(t, GroupType):
        return frozenset([t.group])
    if isinstance(t, CapType):
        return t.movers | t.hosts
    return type_groups(t.payload)


# -- prefixes ---------------------------------------------------------------

@dataclass(frozen=True)
class CapPrefix(object):
    op: CapOp
    name: Name


@dataclass(frozen=True)
class Output(object):
    direction: Direction
    channel: Name
    payload: Name


@dataclass(frozen=True)
class Input(object):
    direction: Direction
    channel: Name
    binder: Name


Prefix = Union[CapPrefix, Output, Input]


# -- processes --------------------------------------------------------------

class Flavor(enum.Enum):
    CAPABILITY = 'capability'
    COMMUNICATION = 'communication'


@dataclass(frozen=True)
class Zero(object):
    pass


@dataclass(frozen=True)
class Restrict(object):
    name: Name
    annot: ArgType
    body: 'Process'


@dataclass(frozen=True)
class Par(object):
    components: Tuple['Process', ...]


@dataclass(frozen=True)
class Repl(object):
    body: 'Process'


@dataclass(frozen=True)
class Ambient(object):
    name: Name
    body: 'Process'


@dataclass(frozen=True)
class Sum(object):
    branches: Tuple[Tuple[Prefix, 'Process'], ...]
    flavor: Flavor


@dataclass(frozen=True)
class Warn(object):
    group: str


@dataclass(frozen=True)
class ExError(object):
    host: str
    mover: str


@dataclass(frozen=True)
class MergeError(object):
    host: str
    content: str


Process = Union[Zero, Restrict, Par, Repl, Ambient, Sum, Warn, ExError, MergeError]

RUNTIME_FORMS = (Warn, ExError, MergeError)


def flavor_of(prefix: Prefix) -> Flavor:
    return Flavor.CAPABILITY if isinstance(prefix, CapPrefix) else Flavor.COMMUNICATION


def prefix_sum(prefix: Prefix, continuation: Process = Zero()) -> Sum:
    return Sum(((prefix, continuation),), flavor_of(prefix))


def par(*components: Process) -> Process:
    """Parallel composition with the one-element and empty cases collapsed."""
    flat = []
    for c in components:
        if isinstance(c, Par):
            flat.extend(c.components)
        elif not isinstance(c, Zero):
            flat.append(c)
    if not flat:
        return Zero()
    if len(flat) == 1:
        return flat[0]
    return Par(tuple(flat))


def components(p: Process) -> Tuple[Process, ...]:
    if isinstance(p, Par):
        return p.components
    if isinstance(p, Zero):
        return ()
    return (p,)


# -- names ------------------------------------------------------------------

def prefix_names(prefix: Prefix) -> Tuple[Name, ...]:
    if isinstance(prefix, CapPrefix):
        return (prefix.name,)
    if isinstance(prefix, Output):
        return (prefix.channel, prefix.payload)
    return (prefix.channel,)


def free_names(p: Process) -> FrozenSet[Name]:
    if isinstance(p, Restrict):
        return free_names(p.body) - {p.name}
    if isinstance(p, Par):
        return frozenset().union(*[free_names(c) for c in p.components])
    if isinstance(p, Repl):
        return free_names(p.body)
    if isinstance(p, Ambient):
        return free_names(p.body) | {p.name}
    if isinstance(p, Sum):
        names = set()
        for prefix, cont in p.branches:
            names.update(prefix_names(prefix))
            inner = free_names(cont)
            if isinstance(prefix, Input):
                inner = inner - {prefix.binder}
            names.update(inner)
        return frozenset(names)
    return frozenset()


def bound_names(p: Process) -> FrozenSet[Name]:
    if isinstance(p, Restrict):
        return bound_names(p.body) | {p.name}
    if isinstance(p, Par):
        return frozenset().union(*[bound_names(c) for c in p.components])
    if isinstance(p, (Repl, Ambient)):
        return bound_names(p.body)
    if isinstance(p, Sum):
        names = set()
        for prefix, cont in p.branches:
            names.update(bound_names(cont))
            if isinstance(prefix, Input):
                names.add(prefix.binder)
        return frozenset(names)
    return frozenset()


def fresh_name(hint: Name, avoid: Iterable[Name]) -> Name:
    """
    Deterministic fresh name: the hint itself when free, else the hint's
    stem followed by the smallest positive integer that avoids `avoid`.
    """
    taken = {n.text for n in avoid}
    if hint.text not in taken:
        return hint
    stem = hint.text
    index = 1
    while '{}{}'.format(stem, index) in taken:
        index += 1
    return Name('{}{}'.format(stem, index), hint.kind)


def _rename(n: Name, target: Name, replacement: Name) -> Name:
    return replacement if n == target else n


def _subst_prefix(prefix: Prefix, target: Name, replacement: Name) -> Prefix:
    if isinstance(prefix, CapPrefix):
        return CapPrefix(prefix.op, _rename(prefix.name, target, replacement))
    if isinstance(prefix, Output):
        return Output(prefix.direction, _rename(prefix.channel, target, replacement),
                      _rename(prefix.payload, target, replacement))
    return Input(prefix.direction, _rename(prefix.channel, target, replacement), prefix.binder)


def substitute(p: Process, target: Name, replacement: Name) -> Process:
    """`p{replacement/target}`, alpha-renaming binders that would capture."""
    if target == replacement:
        return p
    if isinstance(p, Restrict):
        if p.name == target:
            return p
        name, body = p.name, p.body
        if name == replacement and target in free_names(body):
            name = fresh_name(name, free_names(body) | {replacement, target})
            body = substitute(body, p.name, name)
        return Restrict(name, p.annot, substitute(body, target, replacement))
    if isinstance(p, Par):
        return Par(tuple(substitute(c, target, replacement) for c in p.components))
    if isinstance(p, Repl):
        return Repl(substitute(p.body, target, replacement))
    if isinstance(p, Ambient):
        return Ambient(_rename(p.name, target, replacement), substitute(p.body, target, replacement))
    if isinstance(p, Sum):
        branches = []
        for prefix, cont in p.branches:
            prefix2 = _subst_prefix(prefix, target, replacement)
            if isinstance(prefix, Input):
                binder = prefix.binder
                if binder == target:
                    branches.append((prefix2, cont))
                    continue
                if binder == replacement and target in free_names(cont):
                    binder = fresh_name(binder, free_names(cont) | {replacement, target})
                    cont = substitute(cont, prefix.binder, binder)
                    prefix2 = Input(prefix2.direction, prefix2.channel, binder)
            branches.append((prefix2, substitute(cont, target, replacement)))
        return Sum(tuple(branches), p.flavor)
    return p


def audit(p: Process, runtime_ok: bool = True) -> Optional[str]:
    """
    Structural audit: returns a description of the first malformed subterm
    (mixed sum flavors, empty sums, uncollapsed Par, or runtime-only forms
    when `runtime_ok` is false), or None when the term is clean.
    """
    if isinstance(p, RUNTIME_FORMS):
        return None if runtime_ok else 'runtime form {!r} in a source process'.format(p)
    if isinstance(p, Sum):
        if not p.branches:
            return 'empty sum'
        for prefix, cont in p.branches:
            if flavor_of(prefix) != p.flavor:
                return 'mixed {} sum'.format(p.flavor.value)
            problem = audit(cont, runtime_ok)
            if problem:
                return problem
        return None
    if isinstance(p, Par):
        if len(p.components) < 2:
            return 'uncollapsed parallel composition'
        for c in p.components:
            problem = audit(c, runtime_ok)
            if problem:
                return problem
        return None
    if isinstance(p, (Restrict, Repl, Ambient)):
        return audit(p.body, runtime_ok)
    return None


def pretty_type(t: ArgType, as_arg: bool = False) -> str:
    """Concrete `.ba` rendering of a type (`group G` inside channel types)."""
    if isinstance(t, GroupType):
        return 'group {}'.format(t.group) if as_arg else 'amb({})'.format(t.group)
    if isinstance(t, CapType):
        return 'cap({}, {{{}}}, {{{}}})'.format(
            t.label.value, ', '.join(sorted(t.movers)), ', '.join(sorted(t.hosts)))
    return 'ch({})'.format(pretty_type(t.payload, as_arg=True))
