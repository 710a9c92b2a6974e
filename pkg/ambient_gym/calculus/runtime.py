"""
Typed reduction semantics.

Running configurations are `RuntimeState` values: a canonical term, the
environment (extended with the restrictions opened so far) and the group
table. `enumerate_redexes` lists every applicable reduction, unfolding
replications lazily up to a per-replication budget; `apply_redex` fires
one and returns either the next state or an error verdict.
"""
import enum
import hashlib
import logging
from collections import defaultdict
from dataclasses import dataclass
from functools import cached_property
from itertools import permutations
from typing import Dict, FrozenSet, List, Optional, Tuple, Union

from .parser import pretty
from .syntax import (
    Ambient, CapOp, CapPrefix, Direction, GroupType, Input, Name, Output, Par, Process, Repl,
    Restrict, Sum, Warn, Zero, components, free_names, fresh_name, par, pretty_type, substitute,
)
from .typesystem import GroupTypeError, TypeEnv, member_group, type_process

# -- structural congruence ----------------------------------------------------


def _normal(p: Process) -> Process:
    if isinstance(p, Par):
        return par(*[_normal(c) for c in p.components])
    if isinstance(p, Repl):
        body = _normal(p.body)
        return Zero() if isinstance(body, Zero) else Repl(body)
    if isinstance(p, Ambient):
        return Ambient(p.name, _normal(p.body))
    if isinstance(p, Sum):
        return Sum(tuple((prefix, _normal(cont)) for prefix, cont in p.branches), p.flavor)
    if isinstance(p, Restrict):
        binders = []
        while isinstance(p, Restrict):
            # an inner binder with the same name shadows the outer one
            binders = [b for b in binders if b[0] != p.name] + [(p.name, p.annot)]
            p = p.body
        return _place(binders, _normal(p))
    return p


def _wrap_block(binders, body: Process) -> Process:
    for name, annot in reversed(binders):
        body = Restrict(name, annot, body)
    return body


def _place(binders, body: Process) -> Process:
    """Push a block of restrictions as far inward as the axioms allow."""
    comps = list(components(body))
    if len(comps) == 1 and isinstance(comps[0], Restrict):
        inner = comps[0]
        inner_binders = []
        while isinstance(inner, Restrict):
            inner_binders.append((inner.name, inner.annot))
            inner = inner.body
        names = {n for n, _ in inner_binders}
        return _place([b for b in binders if b[0] not in names] + inner_binders, inner)
    fns = [free_names(c) for c in comps]
    live = [b for b in binders if any(b[0] in fn for fn in fns)]
    if not live:
        return body
    parent = list(range(len(comps)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for name, _ in live:
        holders = [i for i, fn in enumerate(fns) if name in fn]
        for i in holders[1:]:
            parent[find(i)] = find(holders[0])
    outside, clusters = [], defaultdict(list)
    for i, c in enumerate(comps):
        if any(b[0] in fns[i] for b in live):
            clusters[find(i)].append(i)
        else:
            outside.append(c)
    parts = outside
    for root in sorted(clusters):
        members = clusters[root]
        block = [b for b in live if any(b[0] in fns[i] for i in members)]
        if len(members) == 1:
            c = comps[members[0]]
            if isinstance(c, Ambient) and all(c.name != n for n, _ in block):
                parts.append(Ambient(c.name, _place(block, c.body)))
                continue
            if isinstance(c, Restrict):
                parts.append(_place(block, c))
                continue
        parts.append(_wrap_block(block, par(*[comps[i] for i in members])))
    return par(*parts)


def _label(n: Name, labels: Dict[Name, str]) -> str:
    return labels.get(n, n.text)


def _order(p: Process, labels: Dict[Name, str], depth: int = 0) -> Tuple[Process, str]:
    """
    Sort parallel compositions and restriction blocks. Returns the ordered
    term and its key: a rendering in which every bound name is replaced by
    its position among the binders in scope, so alpha-equivalent terms get
    the same key.
    """
    if isinstance(p, Par):
        parts = sorted((_order(c, labels, depth) for c in p.components), key=lambda part: part[1])
        return Par(tuple(t for t, _ in parts)), '(' + '|'.join(k for _, k in parts) + ')'
    if isinstance(p, Repl):
        body, key = _order(p.body, labels, depth)
        return Repl(body), '!' + key
    if isinstance(p, Ambient):
        body, key = _order(p.body, labels, depth)
        return Ambient(p.name, body), '{}[{}]'.format(_label(p.name, labels), key)
    if isinstance(p, Sum):
        branches, keys = [], []
        for prefix, cont in p.branches:
            inner, inner_depth = labels, depth
            if isinstance(prefix, CapPrefix):
                head = '{} {}'.format(prefix.op.value, _label(prefix.name, labels))
            elif isinstance(prefix, Output):
                head = '{} {}!{}'.format(prefix.direction.value, _label(prefix.channel, labels),
                                         _label(prefix.payload, labels))
            else:
                head = '{} {}?'.format(prefix.direction.value, _label(prefix.channel, labels))
                inner, inner_depth = {**labels, prefix.binder: '?{}'.format(depth)}, depth + 1
            body, key = _order(cont, inner, inner_depth)
            branches.append((prefix, body))
            keys.append('{}.{}'.format(head, key))
        return Sum(tuple(branches), p.flavor), '<' + '+'.join(keys) + '>'
    if isinstance(p, Restrict):
        binders = []
        while isinstance(p, Restrict):
            binders.append((p.name, p.annot))
            p = p.body
        binders = _block_order(binders, p, labels, depth)
        body, key = _order(p, _block_labels(binders, labels, depth), depth + len(binders))
        head = ''.join('(new {})'.format(pretty_type(annot)) for _, annot in binders)
        return _wrap_block(binders, body), head + key
    if isinstance(p, Zero):
        return p, '0'
    return p, pretty(p)


def _block_labels(binders, labels, depth):
    return {**labels, **{name: '#{}'.format(depth + i) for i, (name, _) in enumerate(binders)}}


def _refine(binders, body, labels, depth, colour):
    """Split binders of equal colour by how they occur in `body` until stable."""
    while True:
        provisional = {**labels, **{name: '%' + colour[name] for name, _ in binders}}
        signatures = {}
        for name, _ in binders:
            marked = {**provisional, name: '@'}
            signatures[name] = '{}/{}'.format(colour[name], _order(body, marked, depth + len(binders))[1])
        ranks = {sig: i for i, sig in enumerate(sorted(set(signatures.values())))}
        refined = {name: '{:04d}'.format(ranks[signatures[name]]) for name, _ in binders}
        if len(set(refined.values())) == len(set(colour.values())):
            return colour
        colour = refined


def _block_order(binders, body, labels, depth):
    """Canonical order of one restriction block: the one giving the least key."""
    def search(colour):
        colour = _refine(binders, body, labels, depth, colour)
        classes = defaultdict(list)
        for name, annot in binders:
            classes[colour[name]].append((name, annot))
        tied = [members for c, members in sorted(classes.items()) if len(members) > 1]
        if not tied:
            order = sorted(binders, key=lambda b: colour[b[0]])
            return _order(body, _block_labels(order, labels, depth), depth + len(order))[1], order
        best = None
        for name, _ in tied[0]:
            candidate = search({**colour, name: colour[name] + '*'})
            if best is None or candidate[0] < best[0]:
                best = candidate
        return best

    if len(binders) == 1:
        return binders
    return search({name: pretty_type(annot) for name, annot in binders})[1]


def _rename(p: Process, mapping: Dict[Name, Name], taken: set) -> Process:
    def nm(n):
        return mapping.get(n, n)

    if isinstance(p, Par):
        return Par(tuple(_rename(c, mapping, taken) for c in p.components))
    if isinstance(p, Repl):
        return Repl(_rename(p.body, mapping, taken))
    if isinstance(p, Ambient):
        return Ambient(nm(p.name), _rename(p.body, mapping, taken))
    if isinstance(p, Restrict):
        new = fresh_name(Name('n', p.name.kind), taken)
        taken.add(new)
        return Restrict(new, p.annot, _rename(p.body, {**mapping, p.name: new}, taken))
    if isinstance(p, Sum):
        branches = []
        for prefix, cont in p.branches:
            if isinstance(prefix, CapPrefix):
                branches.append((CapPrefix(prefix.op, nm(prefix.name)), _rename(cont, mapping, taken)))
            elif isinstance(prefix, Output):
                branches.append((Output(prefix.direction, nm(prefix.channel), nm(prefix.payload)),
                                 _rename(cont, mapping, taken)))
            else:
                new = fresh_name(Name('m', prefix.binder.kind), taken)
                taken.add(new)
                branches.append((Input(prefix.direction, nm(prefix.channel), new),
                                 _rename(cont, {**mapping, prefix.binder: new}, taken)))
        return Sum(tuple(branches), p.flavor)
    return p


def canonicalize(p: Process) -> Process:
    """
    Normal form modulo structural congruence (replication unfolding
    excepted): flattened sorted parallel compositions, no dead
    restrictions, restrictions pushed inward, binders renamed `n`, `n1`, …
    for restrictions and `m`, `m1`, … for inputs.
    """
    p = _order(_normal(p), {})[0]
    return _rename(p, {}, set(free_names(p)))


def alpha_equivalent(p: Process, q: Process) -> bool:
    return canonicalize(p) == canonicalize(q)


# -- states -------------------------------------------------------------------

@dataclass(frozen=True)
class RuntimeState(object):
    term: Process
    env: TypeEnv
    groups: object
    opened: FrozenSet[Name] = frozenset()

    @classmethod
    def initial(cls, model) -> 'RuntimeState':
        return settle(model.system, model.env, model.groups)

    @cached_property
    def key(self) -> str:
        closed = self.term
        for name in sorted(self.opened, reverse=True):
            closed = Restrict(name, self.env[name], closed)
        return pretty(canonicalize(closed))

    @cached_property
    def hash(self) -> str:
        return hashlib.sha1(self.key.encode('utf-8')).hexdigest()[:16]

    @property
    def warns(self) -> List[str]:
        return [c.group for c in components(self.term) if isinstance(c, Warn)]

    def pretty(self) -> str:
        return pretty(self.term)


def _open(p: Process, env: TypeEnv, opened: set):
    """Scope extrusion: lift every restriction not under a prefix or `!` into `env`."""
    if isinstance(p, Restrict):
        name = fresh_name(p.name, set(env.names()) | free_names(p))
        env = env.extend(name, p.annot)
        opened.add(name)
        logging.debug('opened restricted name {} as {}'.format(p.name, name))
        return _open(substitute(p.body, p.name, name), env, opened)
    if isinstance(p, Par):
        parts = []
        for c in p.components:
            c, env = _open(c, env, opened)
            parts.append(c)
        return Par(tuple(parts)), env
    if isinstance(p, Ambient):
        body, env = _open(p.body, env, opened)
        return Ambient(p.name, body), env
    return p, env


def settle(term: Process, env: TypeEnv, groups, opened=frozenset()) -> RuntimeState:
    opened = set(opened)
    term, env = _open(term, env, opened)
    term = canonicalize(term)
    live = free_names(term)
    dead = [n for n in opened if n not in live]
    return RuntimeState(term, env.without(dead), groups, frozenset(opened - set(dead)))


# -- redexes --------------------------------------------------------------------

class Rule(enum.Enum):
    RED_IN = 'RedIn'
    RED_OUT = 'RedOut'
    RED_MERGE = 'RedMerge'
    RED_LOCAL = 'RedLocal'
    RED_PARENT_OUTPUT = 'RedParentOutput'
    RED_PARENT_INPUT = 'RedParentInput'
    RED_SIBLING = 'RedSibling'


_RULE_ORDER = {rule: i for i, rule in enumerate(Rule)}

# A reference picks a component of a parallel body: (i,) is component i,
# (i, j, k) is leaf k of the j-th unfolded copy of the replication at i, or
# of the restriction block at i when j is 0. Further (j, k) pairs descend
# into leaves that are themselves replications.
Ref = Tuple[int, ...]
Location = Tuple[Ref, ...]


@dataclass(frozen=True)
class Redex(object):
    rule: Rule
    site: Location
    participants: Tuple[Tuple[Location, int], ...]  # (location relative to site, branch index)
    sync: Name
    repl_unfoldings: int = 0

    @property
    def sync_text(self) -> str:
        return self.sync.text.split('@')[0]

    def sort_key(self):
        return self.site, _RULE_ORDER[self.rule], self.participants

    def to_json(self):
        return {
            'rule': self.rule.value,
            'sync': self.sync_text,
            'site': [list(ref) for ref in self.site],
            'participants': [[[list(ref) for ref in loc], branch] for loc, branch in self.participants],
            'repl_unfoldings': self.repl_unfoldings,
        }

    @classmethod
    def from_json(cls, data) -> 'Redex':
        return cls(
            Rule(data['rule']),
            tuple(tuple(ref) for ref in data['site']),
            tuple((tuple(tuple(ref) for ref in loc), branch) for loc, branch in data['participants']),
            Name(data['sync']),
            data['repl_unfoldings'],
        )

    def describe(self) -> str:
        return '{} on {} at {}'.format(self.rule.value, self.sync_text, [list(ref) for ref in self.site])


def _unfold(p: Process, rename) -> List[Process]:
    """Leaves of one copy of a replicated body, its restrictions stripped via `rename`."""
    leaves = []

    def walk(q):
        if isinstance(q, Restrict):
            walk(substitute(q.body, q.name, rename(q.name, q.annot)))
        elif isinstance(q, Par):
            for c in q.components:
                walk(c)
        elif not isinstance(q, Zero):
            leaves.append(q)

    walk(p)
    return leaves


def _expose(ref: Ref, p: Process, budget: int, site: Location, items: list):
    if isinstance(p, (Sum, Ambient)):
        items.append((ref, p))
        return
    if isinstance(p, Repl):
        unfoldings = [(j, p.body) for j in range(1, budget + 1)]
    elif isinstance(p, Restrict):
        unfoldings = [(0, p)]
    else:
        return
    for j, q in unfoldings:
        tag = '@{}/{}'.format(site, '.'.join(str(x) for x in ref + (j,)))
        leaves = _unfold(q, lambda n, t, tag=tag: Name(n.text + tag, n.kind))
        for k, leaf in enumerate(leaves):
            _expose(ref + (j, k), leaf, budget, site, items)


def _items(body: Process, budget: int, site: Location):
    """Sums and ambients of a body, looking through replications and restrictions."""
    items = []
    for i, c in enumerate(components(body)):
        _expose((i,), c, budget, site, items)
    return items


def _branches(s: Sum):
    return list(enumerate(prefix for prefix, _ in s.branches))


def _is_cap(prefix, op: CapOp) -> bool:
    return isinstance(prefix, CapPrefix) and prefix.op == op


def _is_comm(prefix, cls, direction: Direction) -> bool:
    return isinstance(prefix, cls) and prefix.direction == direction


def _copies(site: Location, participants) -> Optional[int]:
    """Number of unfolded copies a redex needs, or None if it skips a copy."""
    used = set()
    for loc, _ in participants:
        full = site + loc
        for depth, ref in enumerate(full):
            for m in range(1, len(ref), 2):
                if ref[m] > 0:
                    used.add((full[:depth], ref[:m], ref[m]))
    for ctx, origin, j in used:
        if j > 1 and (ctx, origin, j - 1) not in used:
            return None
    return len(used)


def _site_redexes(site: Location, body: Process, budget: int, out: list):
    items = _items(body, budget, site)
    sums = [(ref, p) for ref, p in items if isinstance(p, Sum)]
    ambients = [(ref, p) for ref, p in items if isinstance(p, Ambient)]
    inner = {ref: _items(a.body, budget, site + (ref,)) for ref, a in ambients}
    inner_sums = {ref: [(r, p) for r, p in its if isinstance(p, Sum)] for ref, its in inner.items()}

    def emit(rule, participants, sync):
        copies = _copies(site, participants)
        if copies is not None:
            out.append(Redex(rule, site, tuple(participants), sync, copies))

    for (r1, s1), (r2, s2) in permutations(sums, 2):
        for b1, pre1 in _branches(s1):
            if not _is_comm(pre1, Input, Direction.LOCAL):
                continue
            for b2, pre2 in _branches(s2):
                if _is_comm(pre2, Output, Direction.LOCAL) and pre2.channel == pre1.channel:
                    emit(Rule.RED_LOCAL, [((r1,), b1), ((r2,), b2)], pre1.channel)

    for (ra, a), (rb, b) in permutations(ambients, 2):
        for sa, suma in inner_sums[ra]:
            for ba, pa in _branches(suma):
                for sb, sumb in inner_sums[rb]:
                    for bb, pb in _branches(sumb):
                        first, second = ((ra, sa), ba), ((rb, sb), bb)
                        if _is_cap(pa, CapOp.ENTER) and _is_cap(pb, CapOp.ACCEPT) and pa.name == pb.name:
                            emit(Rule.RED_IN, [first, second], pa.name)
                        elif (_is_cap(pa, CapOp.MERGE_PLUS) and _is_cap(pb, CapOp.MERGE_MINUS)
                              and pa.name == pb.name):
                            emit(Rule.RED_MERGE, [first, second], pa.name)
                        elif (_is_comm(pa, Output, Direction.S2S) and _is_comm(pb, Input, Direction.S2S)
                              and pa.channel == pb.channel):
                            emit(Rule.RED_SIBLING, [first, second], pa.channel)

    for ra, a in ambients:
        for rs, s in sums:
            for bs, ps in _branches(s):
                for rc, c in inner_sums[ra]:
                    for bc, pc in _branches(c):
                        if (_is_comm(ps, Output, Direction.P2C) and _is_comm(pc, Input, Direction.C2P)
                                and ps.channel == pc.channel):
                            emit(Rule.RED_PARENT_OUTPUT, [((rs,), bs), ((ra, rc), bc)], ps.channel)
                        elif (_is_comm(pc, Output, Direction.C2P) and _is_comm(ps, Input, Direction.P2C)
                              and ps.channel == pc.channel):
                            emit(Rule.RED_PARENT_INPUT, [((ra, rc), bc), ((rs,), bs)], ps.channel)
        for rb, b in inner[ra]:
            if not isinstance(b, Ambient):
                continue
            for rx, x in _items(b.body, budget, site + (ra, rb)):
                if not isinstance(x, Sum):
                    continue
                for bx, px in _branches(x):
                    if not _is_cap(px, CapOp.EXIT):
                        continue
                    for re_, e in inner_sums[ra]:
                        for be, pe in _branches(e):
                            if _is_cap(pe, CapOp.EXPEL) and pe.name == px.name:
                                emit(Rule.RED_OUT, [((ra, rb, rx), bx), ((ra, re_), be)], px.name)

    for ra, a in ambients:
        _site_redexes(site + (ra,), a.body, budget, out)


def enumerate_redexes(s: RuntimeState, repl_budget: int = 1) -> List[Redex]:
    out = []
    _site_redexes((), s.term, repl_budget, out)
    out.sort(key=Redex.sort_key)
    logging.debug('{} redexes in state {}'.format(len(out), s.hash))
    return out


# -- materialisation ------------------------------------------------------------

def _materialize(body: Process, locs, env: TypeEnv, new_names: list):
    """
    Make the unfolded copies named by `locs` real components of `body`.
    Returns the rewritten body (a Par, not collapsed, so indices stay valid),
    the extended environment and each location's concrete index path.
    """
    comps = list(components(body))
    unfolded = {}

    def rename(n, t):
        nonlocal env
        fresh = fresh_name(n, set(env.names()) | set(new_names))
        env = env.extend(fresh, t)
        new_names.append(fresh)
        return fresh

    def resolve(ref):
        index = ref[0]
        for m in range(1, len(ref), 2):
            key = ref[:m + 1]
            if key not in unfolded:
                source = comps[index]
                if ref[m] == 0:
                    comps[index] = Zero()
                    leaves = _unfold(source, rename)
                else:
                    leaves = _unfold(source.body, rename)
                unfolded[key] = len(comps)
                comps.extend(leaves)
            index = unfolded[key] + ref[m + 1]
        return index

    mapping = {}
    deeper = defaultdict(list)
    for loc in sorted(set(locs)):
        index = resolve(loc[0])
        if len(loc) == 1:
            mapping[loc] = (index,)
        else:
            deeper[index].append(loc)
    for index in sorted(deeper):
        amb = comps[index]
        sub_locs = [loc[1:] for loc in deeper[index]]
        inner, env, sub_map = _materialize(amb.body, sub_locs, env, new_names)
        comps[index] = Ambient(amb.name, inner)
        for loc in deeper[index]:
            mapping[loc] = (index,) + sub_map[loc[1:]]
    return Par(tuple(comps)), env, mapping


@dataclass
class _Context(object):
    """A redex made concrete: the site's components and the participants' paths in them."""
    term: Process
    env: TypeEnv
    groups: object
    site: Tuple[int, ...]
    comps: List[Process]
    paths: List[Tuple[int, ...]]
    branches: List[int]
    new_names: list

    def group(self, name: Name) -> str:
        t = self.env[name]
        if not isinstance(t, GroupType):
            raise ValueError('{} is not an ambient name'.format(name))
        return t.group

    def rebuild(self, comps: List[Process]) -> Process:
        def down(p, path):
            if not path:
                return par(*comps)
            parts = list(components(p))
            target = parts[path[0]]
            parts[path[0]] = Ambient(target.name, down(target.body, path[1:]))
            return Par(tuple(parts))

        return down(self.term, self.site)

    def site_host(self) -> Optional[Ambient]:
        if not self.site:
            return None
        p = self.term
        for index in self.site:
            p = components(p)[index]
            host = p
            p = p.body
        return host


def _prepare(s: RuntimeState, r: Redex) -> _Context:
    locs = [r.site + loc for loc, _ in r.participants]
    new_names = []
    term, env, mapping = _materialize(s.term, locs, s.env, new_names)
    paths = [mapping[loc] for loc in locs]
    site = paths[0][:len(r.site)]
    body = term
    for index in site:
        body = components(body)[index].body
    return _Context(term, env, s.groups, site, list(components(body)),
                    [path[len(site):] for path in paths], [b for _, b in r.participants], new_names)


def _split(body_comps, index, branch):
    """Fire branch `branch` of the sum at `index`: (prefix, continuation, rest of the body)."""
    chosen = body_comps[index]
    prefix, cont = chosen.branches[branch]
    rest = [c for k, c in enumerate(body_comps) if k != index]
    return prefix, cont, rest


def _without(comps, *indices):
    return [c for k, c in enumerate(comps) if k not in indices]


# -- outcomes -------------------------------------------------------------------

@dataclass(frozen=True)
class Next(object):
    state: RuntimeState
    emitted_warn: Optional[str] = None


@dataclass(frozen=True)
class Error(object):
    EXIT = 'exit'
    MERGE = 'merge'

    kind: str
    host: str
    offender: str

    def pretty(self) -> str:
        form = 'exerror' if self.kind == self.EXIT else 'merror'
        return '{}({}, {})'.format(form, self.host, self.offender)

    def to_json(self):
        return {'error': self.kind, 'host': self.host, 'offender': self.offender}


Outcome = Union[Next, Error]


class Semantics(object):
    """
    The reduction rules. `strict` re-types the whole merged ambient on
    RedMerge in addition to the rule's own premises: a stay violation it
    finds becomes a merge error naming the violating group, any other
    failure is logged and the merge goes ahead.
    """
    def __init__(self, strict: bool = False):
        self.strict = strict

    def apply(self, s: RuntimeState, r: Redex) -> Outcome:
        try:
            ctx = _prepare(s, r)
            handler = getattr(self, '_' + r.rule.name.lower())
        except (KeyError, IndexError, AttributeError) as exc:
            raise ValueError('redex {} does not apply: {}'.format(r.describe(), exc))
        result = handler(ctx)
        if isinstance(result, Error):
            logging.debug('{} -> {}'.format(r.describe(), result.pretty()))
            return result
        comps, warn = result
        state = settle(ctx.rebuild(comps), ctx.env, s.groups, s.opened | set(ctx.new_names))
        return Next(state, warn)

    def _red_in(self, ctx):
        (ia, sa), (ib, sb) = ctx.paths
        a, b = ctx.comps[ia], ctx.comps[ib]
        _, p, q = _split(list(components(a.body)), sa, ctx.branches[0])
        _, r, rest = _split(list(components(b.body)), sb, ctx.branches[1])
        g_a, g_b = ctx.group(a.name), ctx.group(b.name)
        if not member_group(g_b, ctx.groups.stay(g_a)):
            # RedIn has no error form; the successor may not type
            logging.debug('RedIn moved {} ({}) into {} ({}) outside its stay set'.format(
                a.name, g_a, b.name, g_b))
        moved = Ambient(a.name, par(p, *q))
        return _without(ctx.comps, ia, ib) + [Ambient(b.name, par(moved, r, *rest))], None

    def _red_out(self, ctx):
        (ia, ib, ix), (_, ie) = ctx.paths
        a = ctx.comps[ia]
        a_comps = list(components(a.body))
        b = a_comps[ib]
        _, p, q = _split(list(components(b.body)), ix, ctx.branches[0])
        _, r, _ = _split(a_comps, ie, ctx.branches[1])
        s = _without(a_comps, ib, ie)
        g_b = ctx.group(b.name)
        comps = _without(ctx.comps, ia) + [Ambient(a.name, par(r, *s)), Ambient(b.name, par(p, *q))]
        host = ctx.site_host()
        if host is None:
            return comps + [Warn(g_b)], g_b
        g_host = ctx.group(host.name)
        if member_group(g_host, ctx.groups.stay(g_b)):
            return comps, None
        return Error(Error.EXIT, g_host, g_b)

    def _red_merge(self, ctx):
        (ia, sa), (ib, sb) = ctx.paths
        a, b = ctx.comps[ia], ctx.comps[ib]
        _, p, q = _split(list(components(a.body)), sa, ctx.branches[0])
        _, r, s = _split(list(components(b.body)), sb, ctx.branches[1])
        g_a = ctx.group(a.name)
        judged = type_process(ctx.env, ctx.groups, r).union(type_process(ctx.env, ctx.groups, par(*s)))
        for g in sorted(judged.groups):
            if not member_group(g_a, ctx.groups.stay(g)):
                return Error(Error.MERGE, g_a, g)
        merged = Ambient(a.name, par(p, *q, r, *s))
        if self.strict:
            try:
                type_process(ctx.env, ctx.groups, merged)
            except GroupTypeError as e:
                if e.kind == GroupTypeError.STAY_VIOLATION and e.subject == a.name.text:
                    return Error(Error.MERGE, g_a, e.group)
                logging.warning('merged {} does not type: {}'.format(a.name, e))
        return _without(ctx.comps, ia, ib) + [merged], None

    def _red_local(self, ctx):
        ((i_in,), (i_out,)) = ctx.paths
        pre_in, p, _ = _split(ctx.comps, i_in, ctx.branches[0])
        pre_out, q, _ = _split(ctx.comps, i_out, ctx.branches[1])
        return _without(ctx.comps, i_in, i_out) + [substitute(p, pre_in.binder, pre_out.payload), q], None

    def _red_parent_output(self, ctx):
        (i_out,), (ia, ic) = ctx.paths
        pre_out, p, _ = _split(ctx.comps, i_out, ctx.branches[0])
        a = ctx.comps[ia]
        pre_in, q, r = _split(list(components(a.body)), ic, ctx.branches[1])
        child = Ambient(a.name, par(substitute(q, pre_in.binder, pre_out.payload), *r))
        return _without(ctx.comps, i_out, ia) + [p, child], None

    def _red_parent_input(self, ctx):
        (ia, ic), (i_in,) = ctx.paths
        a = ctx.comps[ia]
        pre_out, p, r = _split(list(components(a.body)), ic, ctx.branches[0])
        pre_in, q, _ = _split(ctx.comps, i_in, ctx.branches[1])
        child = Ambient(a.name, par(*(r + [p])))
        return _without(ctx.comps, ia, i_in) + [child, substitute(q, pre_in.binder, pre_out.payload)], None

    def _red_sibling(self, ctx):
        (ia, sa), (ib, sb) = ctx.paths
        a, b = ctx.comps[ia], ctx.comps[ib]
        pre_out, p, r = _split(list(components(a.body)), sa, ctx.branches[0])
        pre_in, q, s = _split(list(components(b.body)), sb, ctx.branches[1])
        return _without(ctx.comps, ia, ib) + [
            Ambient(a.name, par(*(r + [p]))),
            Ambient(b.name, par(substitute(q, pre_in.binder, pre_out.payload), *s)),
        ], None


_DEFAULT = Semantics()


def apply_redex(s: RuntimeState, r: Redex, strict: bool = False) -> Outcome:
    return (Semantics(strict) if strict else _DEFAULT).apply(s, r)


def successors(s: RuntimeState, repl_budget: int = 1, strict: bool = False) -> List[Outcome]:
    return [apply_redex(s, r, strict) for r in enumerate_redexes(s, repl_budget)]


def strip_warns(p: Process) -> Process:
    return par(*[c for c in components(p) if not isinstance(c, Warn)])


def type_state(s: RuntimeState):
    """Type a state, ignoring top-level warnings. Raises GroupTypeError."""
    return type_process(s.env, s.groups, strip_warns(s.term))


def merge_oracle(s: RuntimeState, r: Redex) -> bool:
    """
    Whether the merged ambient of a RedMerge redex is well typed as a
    whole, judged by re-typing the full merged body.
    """
    if r.rule != Rule.RED_MERGE:
        raise ValueError('{} is not a merge'.format(r.describe()))
    ctx = _prepare(s, r)
    (ia, sa), (ib, sb) = ctx.paths
    a, b = ctx.comps[ia], ctx.comps[ib]
    _, p, q = _split(list(components(a.body)), sa, ctx.branches[0])
    _, rr, rest = _split(list(components(b.body)), sb, ctx.branches[1])
    try:
        judged = type_process(ctx.env, ctx.groups, par(p, *q, rr, *rest))
    except GroupTypeError:
        return False
    g_a = ctx.group(a.name)
    return all(member_group(g_a, ctx.groups.stay(g)) for g in judged.groups)


@dataclass(frozen=True)
class TraceRecord(object):
    step: int
    rule: str
    sync: str
    site: Location
    emitted_warn: Optional[str]
    state_pretty: str
    state_hash: str

    def to_json(self):
        return {
            'step': self.step,
            'rule': self.rule,
            'sync': self.sync,
            'site': [list(ref) for ref in self.site],
            'emitted_warn': self.emitted_warn,
            'state_pretty': self.state_pretty,
            'state_hash': self.state_hash,
        }
