"""
Bounded breadth-first exploration of the states reachable from a model,
with error witnesses, an empirical preservation check and graph export.
"""
import json
import logging
import multiprocessing
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import graphviz
import networkx as nx

from .runtime import Error, Next, Redex, RuntimeState, apply_redex, enumerate_redexes, type_state
from .typesystem import GroupTypeError, check_model, member_group

FORMATS = ('json', 'dot')


class ExplorationRefused(Exception):

    def __init__(self, report):
        kinds = ', '.join(e.kind for e in report.errors) or 'no judgment'
        super(ExplorationRefused, self).__init__('model does not type-check ({})'.format(kinds))
        self.report = report


@dataclass(frozen=True)
class Bounds(object):
    max_depth: int = 32
    max_states: int = 10000
    repl_budget: int = 1

    def __post_init__(self):
        if self.max_depth < 0 or self.repl_budget < 0 or self.max_states < 1:
            raise ValueError('invalid bounds {}'.format(self))

    def to_json(self):
        return {'max_depth': self.max_depth, 'max_states': self.max_states, 'repl_budget': self.repl_budget}


@dataclass(frozen=True)
class ErrorRecord(object):
    kind: str
    host: str
    offender: str
    witness: Tuple[Redex, ...]

    def to_json(self):
        return {
            'kind': self.kind,
            'host': self.host,
            'offender': self.offender,
            'witness': [r.to_json() for r in self.witness],
        }


def error_node(e: Error) -> str:
    return 'error/{}/{}/{}'.format(e.kind, e.host, e.offender)


class StateGraph(object):
    """
    Transition graph of an exploration. Nodes are state hashes and error
    verdicts; edges carry the redex that was fired. Insertion order is
    kept, so two explorations of the same model serialise identically.
    """
    def __init__(self, initial: Optional[str] = None, bounds: Optional[Bounds] = None):
        self.graph = nx.MultiDiGraph()
        self.initial = initial
        self.bounds = bounds or Bounds()
        self.edges = []  # type: List[Tuple[str, Redex, str]]
        self.errors = []  # type: List[ErrorRecord]
        self.truncated = False

    @property
    def states(self) -> Dict[str, dict]:
        return {node: {k: v for k, v in data.items() if k != 'kind'}
                for node, data in self.graph.nodes(data=True) if data['kind'] == 'state'}

    def __contains__(self, node):
        return node in self.graph

    def add_state(self, s: RuntimeState, depth: int):
        try:
            type_state(s)
            typed = True
        except GroupTypeError as e:
            logging.debug('state {} does not type: {}'.format(s.hash, e))
            typed = False
        self.add_state_node(s.hash, s.pretty(), depth, typed, s.warns)

    def add_state_node(self, node, pretty, depth, typed, warns):
        self.graph.add_node(node, kind='state', pretty=pretty, depth=depth, typed=typed, warns=list(warns))

    def add_error(self, e: Error, witness):
        node = error_node(e)
        if node not in self.graph:
            self.graph.add_node(node, kind='error', label=e.pretty())
            self.errors.append(ErrorRecord(e.kind, e.host, e.offender, tuple(witness)))
            logging.info('reached {} in {} steps'.format(e.pretty(), len(witness)))
        return node

    def add_edge(self, src: str, r: Redex, dst: str):
        self.graph.add_edge(src, dst, redex=r)
        self.edges.append((src, r, dst))

    def quiescent(self) -> List[str]:
        return [node for node in self.states if self.graph.out_degree(node) == 0]

    def verdict(self, node: str) -> Optional[dict]:
        data = self.graph.nodes[node]
        if data['kind'] != 'error':
            return None
        _, kind, host, offender = node.split('/', 3)
        return Error(kind, host, offender).to_json()

    def to_json(self):
        return {
            'initial': self.initial,
            'states': self.states,
            'edges': [{'from': src, 'redex': r.to_json(), 'to': self.verdict(dst) or dst}
                      for src, r, dst in self.edges],
            'errors': [e.to_json() for e in self.errors],
            'truncated': self.truncated,
            'bounds': self.bounds.to_json(),
        }

    @classmethod
    def from_json(cls, data) -> 'StateGraph':
        for key in ('initial', 'states', 'edges', 'errors', 'truncated', 'bounds'):
            if key not in data:
                raise ValueError('state graph is missing {!r}'.format(key))
        g = cls(data['initial'], Bounds(**data['bounds']))
        for node, attrs in data['states'].items():
            g.add_state_node(node, attrs['pretty'], attrs['depth'], attrs['typed'], attrs['warns'])
        for record in data['errors']:
            e = Error(record['kind'], record['host'], record['offender'])
            g.add_error(e, [Redex.from_json(r) for r in record['witness']])
        for edge in data['edges']:
            dst = edge['to']
            if isinstance(dst, dict):
                dst = g.add_error(Error(dst['error'], dst['host'], dst['offender']), ())
            g.add_edge(edge['from'], Redex.from_json(edge['redex']), dst)
        g.truncated = bool(data['truncated'])
        return g

    def summary(self) -> List[str]:
        lines = ['states: {}'.format(len(self.states)), 'transitions: {}'.format(len(self.edges))]
        for e in self.errors:
            lines.append('error: {} after {} steps'.format(Error(e.kind, e.host, e.offender).pretty(),
                                                           len(e.witness)))
        if self.truncated:
            lines.append('truncated at {}'.format(self.bounds.to_json()))
        return lines


def _expand(job):
    s, repl_budget, strict = job
    return [(r, apply_redex(s, r, strict)) for r in enumerate_redexes(s, repl_budget)]


def _witness(parents, node) -> List[Redex]:
    trace = []
    while parents[node] is not None:
        node, r = parents[node]
        trace.append(r)
    return list(reversed(trace))


def explore(m, b: Bounds = Bounds(), workers: int = 1, strict: bool = False) -> StateGraph:
    """
    Breadth-first search from the canonical initial state. States are
    identified by canonical hash; error verdicts are terminal nodes
    recorded with a shortest witness trace.
    """
    report = check_model(m)
    if not report.ok:
        raise ExplorationRefused(report)
    initial = RuntimeState.initial(m)
    g = StateGraph(initial.hash, b)
    g.add_state(initial, 0)
    parents = {initial.hash: None}
    frontier = [initial]
    pool = multiprocessing.Pool(workers) if workers > 1 else None
    try:
        depth = 0
        while frontier:
            if depth >= b.max_depth:
                g.truncated = g.truncated or any(enumerate_redexes(s, b.repl_budget) for s in frontier)
                break
            jobs = [(s, b.repl_budget, strict) for s in frontier]
            expansions = pool.map(_expand, jobs) if pool else [_expand(job) for job in jobs]
            frontier = []
            for s, steps in zip([job[0] for job in jobs], expansions):
                for r, outcome in steps:
                    if isinstance(outcome, Error):
                        g.add_edge(s.hash, r, g.add_error(outcome, _witness(parents, s.hash) + [r]))
                        continue
                    t = outcome.state
                    if t.hash not in parents:
                        if len(parents) >= b.max_states:
                            g.truncated = True
                            continue
                        parents[t.hash] = (s.hash, r)
                        g.add_state(t, depth + 1)
                        frontier.append(t)
                    g.add_edge(s.hash, r, t.hash)
            depth += 1
            logging.info('depth {}: {} states, {} in frontier'.format(depth, len(parents), len(frontier)))
    finally:
        if pool:
            pool.close()
            pool.join()
    return g


def replay(m, witness, strict: bool = False):
    """Fire `witness` from the initial state of `m`; returns the last outcome."""
    outcome = Next(RuntimeState.initial(m))
    for r in witness:
        if not isinstance(outcome, Next):
            raise ValueError('witness continues past an error')
        outcome = apply_redex(outcome.state, r, strict)
    return outcome


@dataclass
class TheoremReport(object):
    PASS = 'pass'
    FAIL = 'fail'
    TRUNCATED_PASS = 'truncated-pass'

    status: str
    states: int
    steps: int
    counterexamples: List[dict] = field(default_factory=list)

    def to_json(self):
        return {
            'status': self.status,
            'states': self.states,
            'steps': self.steps,
            'counterexamples': self.counterexamples,
        }


def check_preservation(g: StateGraph, groups) -> TheoremReport:
    """
    Every step from a well-typed explored state must reach a state that
    types (top-level warnings aside) or an error verdict whose stay
    violation really holds.
    """
    counterexamples = []
    for src, r, dst in g.edges:
        if not g.graph.nodes[src]['typed']:
            continue
        data = g.graph.nodes[dst]
        if data['kind'] == 'state':
            if not data['typed']:
                counterexamples.append({'state': g.graph.nodes[src]['pretty'], 'redex': r.to_json(),
                                        'reason': 'successor does not type'})
            continue
        verdict = g.verdict(dst)
        if member_group(verdict['host'], groups.stay(verdict['offender'])):
            counterexamples.append({'state': g.graph.nodes[src]['pretty'], 'redex': r.to_json(),
                                    'reason': 'spurious {}'.format(data['label'])})
    if not g.graph.nodes[g.initial]['typed']:
        counterexamples.insert(0, {'state': g.graph.nodes[g.initial]['pretty'], 'redex': None,
                                   'reason': 'initial state does not type'})
    if counterexamples:
        status = TheoremReport.FAIL
    elif g.truncated:
        status = TheoremReport.TRUNCATED_PASS
    else:
        status = TheoremReport.PASS
    logging.info('subject reduction: {} over {} steps'.format(status, len(g.edges)))
    return TheoremReport(status, len(g.states), len(g.edges), counterexamples)


def verify_subject_reduction(m, b: Bounds = Bounds(), workers: int = 1) -> TheoremReport:
    return check_preservation(explore(m, b, workers), m.groups)


def _dot(g: StateGraph) -> str:
    dot = graphviz.Digraph('states')
    for node, data in g.graph.nodes(data=True):
        if data['kind'] == 'error':
            dot.node(node, label=data['label'], shape='doublecircle')
        else:
            attrs = {'shape': 'box'}
            if node == g.initial:
                attrs['style'] = 'bold'
            if not data['typed']:
                attrs['color'] = 'red'
            dot.node(node, label=data['pretty'], **attrs)
    for src, r, dst in g.edges:
        dot.edge(src, dst, label='{} {}'.format(r.rule.value, r.sync_text))
    return dot.source


def export_graph(g: StateGraph, fmt: str = 'json') -> bytes:
    if fmt == 'json':
        return (json.dumps(g.to_json(), indent=2, sort_keys=True) + '\n').encode('utf-8')
    if fmt == 'dot':
        return _dot(g).encode('utf-8')
    raise ValueError('unknown export format {!r}, expected one of {}'.format(fmt, ', '.join(FORMATS)))
