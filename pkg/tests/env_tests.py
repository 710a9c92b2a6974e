import os
import unittest

import gym

import ambient_gym  # noqa: F401
from ambient_gym.calculus.parser import parse_model
from ambient_gym.envs import AmbientEnv, load_model
from ambient_gym.envs.ambient_env import DATA_DIR


class AmbientEnvTests(unittest.TestCase):

    def setUp(self):
        self.env = AmbientEnv('blood')
        self.obs, self.info = self.env.reset(seed=0)

    def action(self, sync):
        return [r.sync_text for r in self.env.redexes].index(sync)

    def test_reset(self):
        self.assertEqual(len(self.env.redexes), 2)
        self.assertEqual(len(self.info['redexes']), 2)
        self.assertEqual(self.info['warns'], [])
        self.assertEqual(self.obs, self.env.state.pretty())
        self.assertTrue(self.env.observation_space.contains(self.obs))

    def test_incompatible_merge_ends_episode(self):
        obs, reward, terminated, truncated, info = self.env.step(self.action('h1'))

        self.assertEqual(obs, 'merror(A+, b)')
        self.assertEqual(reward, -1.)
        self.assertTrue(terminated)
        self.assertFalse(truncated)
        self.assertEqual(info['outcome'], {'error': 'merge', 'host': 'A+', 'offender': 'b'})
        self.assertEqual(info['record'].rule, 'RedMerge')
        with self.assertRaises(ValueError):
            self.env.step(0)

    def test_compatible_merge(self):
        obs, reward, terminated, _, info = self.env.step(self.action('h2'))

        self.assertEqual(info['outcome'], 'next')
        self.assertEqual(reward, 0.)
        self.assertFalse(terminated)
        self.assertNotIn('t3', obs)
        self.assertEqual(self.env.steps, 1)

    def test_invalid_action(self):
        with self.assertRaises(ValueError):
            self.env.step(len(self.env.redexes))

    def test_seeded_sampling(self):
        def actions(seed):
            env = AmbientEnv('phage')
            env.reset(seed=seed)
            chosen = []
            for _ in range(5):
                if env.quiescent or env.verdict is not None:
                    break
                a = env.sample_action()
                chosen.append(a)
                env.step(a)
            return chosen

        self.assertEqual(actions(3), actions(3))

    def test_quiescent_model(self):
        env = AmbientEnv(parse_model('system 0'))
        env.reset()

        self.assertTrue(env.quiescent)
        with self.assertRaises(ValueError):
            env.sample_action()


class LoadModelTests(unittest.TestCase):

    def test_by_name_and_path(self):
        self.assertEqual(load_model('phage'), load_model(os.path.join(DATA_DIR, 'phage.ba')))

    def test_model_passes_through(self):
        m = load_model('blood')
        self.assertIs(load_model(m), m)

    def test_missing(self):
        with self.assertRaises(OSError):
            load_model('no_such_model')


class RegistrationTests(unittest.TestCase):

    def test_make(self):
        env = gym.make('BioAmbients-blood-v0')
        obs, info = env.reset(seed=1)

        self.assertEqual(len(info['redexes']), 2)
        self.assertIn('t1[', obs)
        env.close()
