"""
`bioamb`: check, step through, run and explore `.ba` models.

Exit codes: 0 success, 1 type error, 2 an error state was produced or
reached, 3 parse error, 4 usage error.
"""
import argparse
import json
import logging
import sys
from dataclasses import dataclass
from typing import Optional

from .calculus.explorer import Bounds, ExplorationRefused, TheoremReport, check_preservation, explore, export_graph
from .calculus.parser import ParseError, parse_model
from .calculus.typesystem import check_model
from .envs.ambient_env import AmbientEnv

EXIT_OK = 0
EXIT_TYPE_ERROR = 1
EXIT_ERROR_REACHED = 2
EXIT_PARSE_ERROR = 3
EXIT_USAGE = 4

COMMANDS = ('check', 'step', 'run', 'explore', 'verify')


class UsageError(Exception):
    pass


class _ArgumentParser(argparse.ArgumentParser):

    def error(self, message):
        raise UsageError(message)


@dataclass(frozen=True)
class CliConfig(object):
    command: str
    file: str
    depth: int = Bounds.max_depth
    max_states: int = Bounds.max_states
    repl_budget: int = Bounds.repl_budget
    max_steps: int = 100
    seed: int = 0
    json: bool = False
    dot_out: Optional[str] = None
    json_out: Optional[str] = None
    apply: Optional[int] = None
    interactive: bool = False
    workers: int = 1
    strict: bool = False
    verbose: bool = False

    @classmethod
    def from_args(cls, args) -> 'CliConfig':
        if args.command not in COMMANDS:
            raise UsageError('unknown command {!r}'.format(args.command))
        given = {k: v for k, v in vars(args).items() if k in cls.__dataclass_fields__ and v is not None}
        cfg = cls(**given)
        for flag in ('depth', 'repl_budget', 'max_steps'):
            if getattr(cfg, flag) < 0:
                raise UsageError('--{} must not be negative'.format(flag.replace('_', '-')))
        if cfg.max_states < 1 or cfg.workers < 1:
            raise UsageError('--max-states and --workers must be positive')
        if cfg.apply is not None and cfg.interactive:
            raise UsageError('--apply and --interactive are exclusive')
        return cfg

    @property
    def bounds(self) -> Bounds:
        return Bounds(self.depth, self.max_states, self.repl_budget)


def get_arg_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('file', type=str, help="Path to a .ba model")
    common.add_argument('--json', action='store_true', help="Machine-readable output on stdout")
    common.add_argument('--repl-budget', type=int, dest='repl_budget',
                        help="Copies of a replication unfolded per redex. Default 1")
    common.add_argument('--strict', action='store_true', help="Re-type the whole merged ambient on merge")
    common.add_argument('-v', '--verbose', action='store_true', help="Debug logging on stderr")

    bounded = argparse.ArgumentParser(add_help=False)
    bounded.add_argument('--depth', type=int, help="Maximum BFS depth. Default 32")
    bounded.add_argument('--max-states', type=int, dest='max_states', help="Maximum explored states. Default 10000")
    bounded.add_argument('--workers', type=int, help="Processes expanding the frontier. Default 1")
    bounded.add_argument('--dot', type=str, dest='dot_out', help="Write the state graph as DOT to this path")
    bounded.add_argument('--json-out', type=str, dest='json_out', help="Write the state graph as JSON to this path")

    parser = _ArgumentParser(prog='bioamb', description=__doc__.strip().splitlines()[0])
    commands = parser.add_subparsers(dest='command', parser_class=_ArgumentParser)
    commands.required = True
    commands.add_parser('check', parents=[common], help="Parse and type-check a model")
    step = commands.add_parser('step', parents=[common], help="List the enabled redexes, optionally fire one")
    step.add_argument('--apply', type=int, help="Index of the redex to fire")
    step.add_argument('--interactive', action='store_true', help="Read redex indices from stdin")
    run = commands.add_parser('run', parents=[common], help="Fire randomly chosen redexes")
    run.add_argument('--seed', type=int, help="Seed of the redex choice. Default 0")
    run.add_argument('--max-steps', type=int, dest='max_steps', help="Stop after this many steps. Default 100")
    commands.add_parser('explore', parents=[common, bounded], help="Bounded exploration of the reachable states")
    commands.add_parser('verify', parents=[common, bounded], help="Check type preservation over the explored steps")
    return parser


class _Session(object):
    """One command over one parsed model, writing to the given streams."""

    def __init__(self, cfg: CliConfig, model, stdin, stdout, stderr):
        self.cfg = cfg
        self.model = model
        self.stdin = stdin
        self.stdout = stdout
        self.stderr = stderr

    def out(self, line=''):
        print(line, file=self.stdout)

    def err(self, line):
        print(line, file=self.stderr)

    def dump(self, data):
        self.out(json.dumps(data, sort_keys=True))

    def type_errors(self, report) -> int:
        if self.cfg.json:
            self.dump(report.to_json())
        for e in report.errors:
            self.err('{}: type error: {}'.format(self.cfg.file, e))
        return EXIT_TYPE_ERROR

    def check(self) -> int:
        report = check_model(self.model)
        if not report.ok:
            return self.type_errors(report)
        if self.cfg.json:
            self.dump(report.to_json())
            return EXIT_OK
        data = report.to_json()
        self.out('groups: {}'.format(', '.join(data['groups'])))
        if data['deltas']:
            self.out('capabilities: {}'.format(', '.join(data['deltas'])))
        return EXIT_OK

    def env(self) -> AmbientEnv:
        return AmbientEnv(self.model, repl_budget=self.cfg.repl_budget, strict=self.cfg.strict)

    def show_redexes(self, env: AmbientEnv):
        if self.cfg.json:
            self.dump({'state': env.state.pretty(), 'state_hash': env.state.hash,
                       'redexes': [r.to_json() for r in env.redexes]})
            return
        self.out(env.state.pretty())
        if not env.redexes:
            self.out('quiescent')
        for i, r in enumerate(env.redexes):
            self.out('[{}] {}'.format(i, r.describe()))

    def show_record(self, record, info):
        if self.cfg.json:
            data = record.to_json()
            data['outcome'] = info['outcome']
            self.dump(data)
            return
        line = '{}: {} on {} -> {}'.format(record.step, record.rule, record.sync, record.state_pretty)
        if record.emitted_warn:
            line += '  (warn {})'.format(record.emitted_warn)
        self.out(line)

    def fire(self, env: AmbientEnv, index: int) -> Optional[int]:
        """Fires one redex; returns an exit code once the episode is over."""
        if not 0 <= index < len(env.redexes):
            self.err('no redex with index {}, {} enabled'.format(index, len(env.redexes)))
            return None if self.cfg.interactive else EXIT_USAGE
        _, _, terminated, _, info = env.step(index)
        self.show_record(info['record'], info)
        if env.verdict is not None:
            return EXIT_ERROR_REACHED
        return EXIT_OK if terminated else None

    def step(self) -> int:
        env = self.env()
        env.reset(seed=self.cfg.seed)
        self.show_redexes(env)
        if self.cfg.apply is not None:
            code = self.fire(env, self.cfg.apply)
            return EXIT_OK if code is None else code
        while self.cfg.interactive and env.redexes:
            print('> ', end='', file=self.stdout, flush=True)
            line = self.stdin.readline()
            if not line or line.strip() in ('', 'q', 'quit'):
                break
            try:
                index = int(line)
            except ValueError:
                self.err('expected a redex index, got {!r}'.format(line.strip()))
                continue
            code = self.fire(env, index)
            if code is not None:
                return code
            self.show_redexes(env)
        return EXIT_OK

    def run(self) -> int:
        env = self.env()
        env.reset(seed=self.cfg.seed)
        if not self.cfg.json:
            self.out('0: {}'.format(env.state.pretty()))
        for _ in range(self.cfg.max_steps):
            if env.quiescent:
                break
            _, _, terminated, _, info = env.step(env.sample_action())
            self.show_record(info['record'], info)
            if terminated:
                break
        if env.verdict is not None:
            self.err('reached {} after {} steps'.format(env.verdict.pretty(), env.steps))
            return EXIT_ERROR_REACHED
        logging.info('run stopped after {} steps, quiescent: {}'.format(env.steps, env.quiescent))
        return EXIT_OK

    def write_graph(self, g):
        for path, fmt in ((self.cfg.dot_out, 'dot'), (self.cfg.json_out, 'json')):
            if path:
                with open(path, 'wb') as f:
                    f.write(export_graph(g, fmt))
                logging.info('wrote {} graph to {}'.format(fmt, path))

    def explored(self):
        return explore(self.model, self.cfg.bounds, self.cfg.workers, self.cfg.strict)

    def explore(self) -> int:
        g = self.explored()
        self.write_graph(g)
        if self.cfg.json:
            self.stdout.write(export_graph(g, 'json').decode('utf-8'))
        else:
            for line in g.summary():
                self.out(line)
        return EXIT_ERROR_REACHED if g.errors else EXIT_OK

    def verify(self) -> int:
        g = self.explored()
        self.write_graph(g)
        report = check_preservation(g, self.model.groups)
        if self.cfg.json:
            self.dump(report.to_json())
        else:
            self.out('subject reduction: {} ({} states, {} steps)'.format(report.status, report.states, report.steps))
            for c in report.counterexamples:
                self.out('counterexample: {} in {}'.format(c['reason'], c['state']))
        return EXIT_TYPE_ERROR if report.status == TheoremReport.FAIL else EXIT_OK

    def __call__(self) -> int:
        if self.cfg.command != 'check':
            report = check_model(self.model)
            if not report.ok:
                return self.type_errors(report)
        return getattr(self, self.cfg.command)()


def run_cli(args, stdin=None, stdout=None, stderr=None) -> int:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        cfg = CliConfig.from_args(get_arg_parser().parse_args(list(args)))
    except UsageError as e:
        print('bioamb: {}'.format(e), file=stderr)
        return EXIT_USAGE
    except SystemExit as e:
        return e.code or EXIT_OK

    logging.getLogger().setLevel(logging.DEBUG if cfg.verbose else logging.WARNING)
    logging.debug('Configuration: {}'.format(cfg))

    try:
        with open(cfg.file) as f:
            source = f.read()
    except OSError as e:
        print('bioamb: cannot read {}: {}'.format(cfg.file, e.strerror), file=stderr)
        return EXIT_USAGE
    try:
        model = parse_model(source)
    except ParseError as e:
        print('{}:{}'.format(cfg.file, e), file=stderr)
        return EXIT_PARSE_ERROR

    try:
        return _Session(cfg, model, stdin, stdout, stderr)()
    except ExplorationRefused as e:
        print('{}: {}'.format(cfg.file, e), file=stderr)
        return EXIT_TYPE_ERROR


def main():
    logging.basicConfig(stream=sys.stderr, level=logging.WARNING)
    sys.exit(run_cli(sys.argv[1:]))


if __name__ == '__main__':
    main()
