"""
Seeded generators of random well-typed models and of structurally
congruent variants of processes.
"""
import logging

import numpy as np

from ...calculus.parser import Model
from ...calculus.syntax import (
    UNIV, Ambient, CapOp, CapPrefix, CapType, ChanType, Direction, GroupDecl, GroupTable, GroupType, Input,
    Label, Name, Output, Par, Repl, Restrict, Sum, Zero, Kind, free_names, fresh_name, par, prefix_sum, substitute,
)
from ...calculus.typesystem import TypeEnv, check_model, member_group

ENTER_ACCEPT = (CapOp.ENTER, CapOp.ACCEPT)
EXIT_EXPEL = (CapOp.EXIT, CapOp.EXPEL)


class ModelSampler(object):
    """
    Random models that type by construction: nesting respects stay sets,
    every ea/ee capability pairs one mover group with one host group it
    may cross, and an ambient only uses a capability in its own role.
    Merge capabilities are typed with every group on both sides, and an
    ambient that can be merged holds a single choice of `merge-` prefixes,
    so merging never moves foreign capabilities into the receiver.
    """
    def __init__(self, seed=None, max_ambients=4, max_groups=3, max_prefixes=6, max_tries=100):
        self.rng = np.random.RandomState(seed)
        self.max_ambients = max_ambients
        self.max_groups = max_groups
        self.max_prefixes = max_prefixes
        self.max_tries = max_tries

    def chance(self, p):
        return self.rng.uniform() < p

    def pick(self, seq):
        return seq[self.rng.randint(len(seq))]

    def subset(self, seq, min_size=1):
        size = self.rng.randint(min_size, len(seq) + 1)
        chosen = self.rng.choice(len(seq), size=size, replace=False)
        return frozenset(seq[i] for i in sorted(chosen))

    # -- declarations -------------------------------------------------------

    def groups(self):
        names = ['G%d' % i for i in range(self.rng.randint(1, self.max_groups + 1))]
        decls = []
        for name in names:
            stay = frozenset([UNIV]) if self.chance(0.25) else self.subset(names)
            cross = stay if self.chance(0.5) or UNIV in stay else self.subset(sorted(stay))
            decls.append(GroupDecl(name, stay, cross))
        return GroupTable(decls)

    def capabilities(self, groups):
        """Well formed ea and ee names, one per crossable (mover, host) pair."""
        caps = []
        names = groups.names()
        for label, prefix in ((Label.EA, 'e'), (Label.EE, 'x')):
            for mover in names:
                for host in names:
                    if member_group(host, groups.cross(mover)) and self.chance(0.7):
                        caps.append((Name('%s%d' % (prefix, len(caps)), Kind.CAPABILITY),
                                     CapType(frozenset([mover]), frozenset([host]), label)))
        every = frozenset(names)
        for i in range(self.rng.randint(1, 3)):
            caps.append((Name('m%d' % i, Kind.CAPABILITY), CapType(every, every, Label.MM)))
        return caps

    # -- processes ----------------------------------------------------------

    def role_prefixes(self, group, caps, env, channels):
        """Prefixes an ambient of `group` may use, capabilities in its own role only."""
        options = []
        for name, y in caps:
            if y.label == Label.MM:
                options.append(CapPrefix(CapOp.MERGE_PLUS, name))
                continue
            ops = ENTER_ACCEPT if y.label == Label.EA else EXIT_EXPEL
            if group in y.movers:
                options.append(CapPrefix(ops[0], name))
            if group in y.hosts:
                options.append(CapPrefix(ops[1], name))
        for channel, t in channels:
            direction = self.pick(list(Direction))
            payloads = [n for n, u in env.items() if u == t.payload]
            if payloads:
                options.append(Output(direction, channel, self.pick(payloads)))
            options.append(Input(direction, channel, Name('y%d' % self.rng.randint(100), Kind.AMBIENT)))
        return options

    def chain(self, options, length):
        """`length` prefixes in sequence, or a choice between two when they share a flavor."""
        prefixes = [self.pick(options) for _ in range(length)]
        if length == 2 and self.chance(0.3) and type(prefixes[0]) is CapPrefix and type(prefixes[1]) is CapPrefix:
            return Sum(tuple((p, Zero()) for p in prefixes), prefix_sum(prefixes[0]).flavor)
        p = Zero()
        for prefix in reversed(prefixes):
            p = prefix_sum(prefix, p)
        return p

    def body(self, group, caps, env, channels, budget):
        parts = []
        options = self.role_prefixes(group, caps, env, channels)
        while budget > 0 and options:
            length = min(budget, self.rng.randint(1, 3))
            budget -= length
            p = self.chain(options, length)
            parts.append(Repl(p) if self.chance(0.25) else p)
        return parts

    def draw(self) -> Model:
        groups = self.groups()
        caps = self.capabilities(groups)
        names = groups.names()

        ambients = []
        for i in range(self.rng.randint(1, self.max_ambients + 1)):
            ambients.append((Name('a%d' % i, Kind.AMBIENT), self.pick(names)))
        bindings = [(n, GroupType(g)) for n, g in ambients] + caps
        channels = []
        for i in range(self.rng.randint(0, 2)):
            channels.append((Name('c%d' % i), ChanType(GroupType(self.pick(names)))))
        env = TypeEnv(bindings + channels)

        parents = {}
        for i, (name, group) in enumerate(ambients):
            hosts = [j for j in range(i) if member_group(ambients[j][1], groups.stay(group))]
            if hosts and self.chance(0.5):
                parents[i] = self.pick(hosts)

        contents = {}
        for i, (name, group) in enumerate(ambients):
            if self.chance(0.25):
                merge = [CapPrefix(CapOp.MERGE_MINUS, n) for n, y in caps if y.label == Label.MM]
                contents[i] = [Sum(tuple((p, Zero()) for p in merge[:self.rng.randint(1, len(merge) + 1)]),
                                   prefix_sum(merge[0]).flavor)]
            else:
                budget = self.rng.randint(0, self.max_prefixes + 1)
                contents[i] = self.body(group, caps, env, channels, budget)
            channel, t = self.pick(channels) if channels else (None, None)
            payloads = [n for n, u in env.items() if t is not None and u == t.payload]
            if payloads and self.chance(0.2):
                k = Name('k', Kind.CHANNEL)
                contents[i].append(Restrict(k, t, par(
                    prefix_sum(Output(Direction.LOCAL, k, self.pick(payloads))),
                    prefix_sum(Input(Direction.LOCAL, k, Name('z', Kind.AMBIENT))),
                )))

        def build(i):
            children = [build(j) for j in sorted(parents) if parents[j] == i]
            return Ambient(ambients[i][0], par(*(contents[i] + children)))

        top = [build(i) for i in range(len(ambients)) if i not in parents]
        return Model(groups, env, par(*top))

    def sample(self) -> Model:
        for _ in range(self.max_tries):
            m = self.draw()
            if check_model(m).ok:
                return m
            logging.debug('rejected a sampled model: {}'.format(check_model(m).to_json()['errors']))
        raise RuntimeError('no well-typed model after {} draws'.format(self.max_tries))

    def merge_configuration(self) -> Model:
        """A receiver and a donor joined by one merge capability, each with random content."""
        for _ in range(self.max_tries):
            groups = self.groups()
            names = groups.names()
            every = frozenset(names)
            h = Name('h', Kind.CAPABILITY)
            receiver = (Name('a', Kind.AMBIENT), self.pick(names))
            donor = (Name('b', Kind.AMBIENT), self.pick(names))
            children = [(Name('c%d' % i, Kind.AMBIENT), self.pick(names)) for i in range(self.rng.randint(0, 4))]
            env = TypeEnv([(n, GroupType(g)) for n, g in [receiver, donor] + children]
                          + [(h, CapType(every, every, Label.MM))])
            inside = {receiver[0]: [], donor[0]: []}
            for name, group in children:
                owner = self.pick([receiver, donor])
                if member_group(owner[1], groups.stay(group)):
                    inside[owner[0]].append(Ambient(name, Zero()))
            a = Ambient(receiver[0], par(prefix_sum(CapPrefix(CapOp.MERGE_PLUS, h)), *inside[receiver[0]]))
            b = Ambient(donor[0], par(prefix_sum(CapPrefix(CapOp.MERGE_MINUS, h)), *inside[donor[0]]))
            m = Model(groups, env, par(a, b))
            if check_model(m).ok:
                return m
        raise RuntimeError('no well-typed merge configuration after {} draws'.format(self.max_tries))


class CongruenceRewriter(object):
    """Applies one randomly chosen structural congruence axiom somewhere in a process."""

    def __init__(self, seed=None):
        self.rng = np.random.RandomState(seed)

    def rewrite(self, p):
        sites = list(self._sites(p, ()))
        path, _ = sites[self.rng.randint(len(sites))]
        return self._replace(p, path, self._axiom)

    def _sites(self, p, path):
        yield path, p
        if isinstance(p, Par):
            for i, c in enumerate(p.components):
                for site in self._sites(c, path + (i,)):
                    yield site
        elif isinstance(p, (Repl, Ambient, Restrict)):
            for site in self._sites(p.body, path + (0,)):
                yield site

    def _replace(self, p, path, f):
        if not path:
            return f(p)
        if isinstance(p, Par):
            parts = list(p.components)
            parts[path[0]] = self._replace(parts[path[0]], path[1:], f)
            return Par(tuple(parts))
        body = self._replace(p.body, path[1:], f)
        if isinstance(p, Repl):
            return Repl(body)
        if isinstance(p, Ambient):
            return Ambient(p.name, body)
        return Restrict(p.name, p.annot, body)

    def _axiom(self, p):
        choices = [self._add_zero, self._dead_restriction, self._wrap_par]
        if isinstance(p, Par):
            choices += [self._commute, self._associate]
            if any(isinstance(c, Restrict) for c in p.components):
                choices.append(self._extrude)
        if isinstance(p, Restrict):
            choices.append(self._alpha)
            if isinstance(p.body, Restrict):
                choices.append(self._swap)
            if isinstance(p.body, Ambient) and p.body.name != p.name:
                choices.append(self._into_ambient)
        return choices[self.rng.randint(len(choices))](p)

    def _add_zero(self, p):
        return Par((p, Zero()))

    def _wrap_par(self, p):
        return Par((p,)) if not isinstance(p, Par) else p

    def _dead_restriction(self, p):
        name = fresh_name(Name('dead', Kind.CHANNEL), free_names(p))
        return Restrict(name, ChanType(GroupType(UNIV)), p)

    def _commute(self, p):
        parts = list(p.components)
        self.rng.shuffle(parts)
        return Par(tuple(parts))

    def _associate(self, p):
        if len(p.components) < 3:
            return p
        return Par((Par(p.components[:2]),) + p.components[2:])

    def _extrude(self, p):
        """(new n) P | Q  becomes  (new n) (P | Q), renaming n away from Q first."""
        i = [k for k, c in enumerate(p.components) if isinstance(c, Restrict)][0]
        r = p.components[i]
        others = p.components[:i] + p.components[i + 1:]
        avoid = free_names(Par(others)) | free_names(r.body)
        name = fresh_name(r.name, avoid)
        body = r.body if name == r.name else substitute(r.body, r.name, name)
        return Restrict(name, r.annot, Par(others + (body,)))

    def _alpha(self, p):
        name = fresh_name(Name(p.name.text + 'x', p.name.kind), free_names(p.body) | {p.name})
        return Restrict(name, p.annot, substitute(p.body, p.name, name))

    def _swap(self, p):
        inner = p.body
        if inner.name == p.name:
            return p
        return Restrict(inner.name, inner.annot, Restrict(p.name, p.annot, inner.body))

    def _into_ambient(self, p):
        amb = p.body
        return Ambient(amb.name, Restrict(p.name, p.annot, amb.body))

