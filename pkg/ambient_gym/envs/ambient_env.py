import os
import string

import gym
from gym import spaces

from ..calculus.parser import Model, parse_model
from ..calculus.runtime import Error, RuntimeState, TraceRecord, apply_redex, enumerate_redexes

DATA_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'data')


def load_model(model) -> Model:
    """A Model, a shipped fixture name (`blood`, `phage`, ...) or a path to a `.ba` file."""
    if isinstance(model, Model):
        return model
    path = model
    if not os.path.exists(path):
        path = os.path.join(DATA_DIR, '%s.ba' % model)
    with open(path) as f:
        return parse_model(f.read())


class AmbientEnv(gym.Env):
    """
    A running model as an environment. The observation is the canonical
    text of the current state and an action is the index of one of the
    redexes enabled in it (`info['redexes']`). An error verdict ends the
    episode with reward -1; so does quiescence, with reward 0.
    """
    metadata = {'render_modes': ['ansi']}

    ERROR_REWARD = -1.
    MAX_TEXT = 1 << 16

    def __init__(self, model='blood', repl_budget=1, strict=False, max_redexes=256):
        super(AmbientEnv, self).__init__()

        self.model = load_model(model)
        self.repl_budget = repl_budget
        self.strict = strict

        self.observation_space = spaces.Text(self.MAX_TEXT, min_length=0, charset=string.printable)
        self.action_space = spaces.Discrete(max_redexes)

        self.state = None
        self.redexes = []
        self.verdict = None
        self.steps = 0

    @property
    def quiescent(self) -> bool:
        return self.verdict is None and not self.redexes

    def _observation(self) -> str:
        if self.verdict is not None:
            return self.verdict.pretty()
        return self.state.pretty()

    def _info(self, **extra):
        info = {
            'state_hash': self.state.hash,
            'redexes': [r.describe() for r in self.redexes],
            'warns': self.state.warns,
        }
        info.update(extra)
        return info

    def reset(self, *, seed=None, options=None):
        super(AmbientEnv, self).reset(seed=seed)
        self.state = RuntimeState.initial(self.model)
        self.redexes = enumerate_redexes(self.state, self.repl_budget)
        self.verdict = None
        self.steps = 0
        return self._observation(), self._info()

    def sample_action(self) -> int:
        """A uniformly chosen enabled redex, drawn from the seeded generator."""
        if not self.redexes:
            raise ValueError('no redex is enabled')
        return int(self.np_random.integers(len(self.redexes)))

    def step(self, action):
        if self.verdict is not None:
            raise ValueError('the episode ended with {}'.format(self.verdict.pretty()))
        if not 0 <= action < len(self.redexes):
            raise ValueError('action {} out of range, {} redexes enabled'.format(action, len(self.redexes)))

        redex = self.redexes[action]
        outcome = apply_redex(self.state, redex, self.strict)
        self.steps += 1

        if isinstance(outcome, Error):
            self.verdict = outcome
            self.redexes = []
            record = TraceRecord(self.steps, redex.rule.value, redex.sync_text, redex.site, None,
                                 outcome.pretty(), self.state.hash)
            return self._observation(), self.ERROR_REWARD, True, False, self._info(
                outcome=outcome.to_json(), emitted_warn=None, record=record)

        self.state = outcome.state
        self.redexes = enumerate_redexes(self.state, self.repl_budget)
        record = TraceRecord(self.steps, redex.rule.value, redex.sync_text, redex.site, outcome.emitted_warn,
                             self.state.pretty(), self.state.hash)
        return self._observation(), 0., self.quiescent, False, self._info(
            outcome='next', emitted_warn=outcome.emitted_warn, record=record)

    def render(self):
        return self._observation()
