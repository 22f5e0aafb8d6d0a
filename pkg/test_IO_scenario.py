import os
import tempfile
import unittest
import numpy as np
import IO_scenario
from errors import ConfigError, ScenarioError


class TestScenarioFiles(unittest.TestCase):

    def setUp(self):

        self.tmp = tempfile.TemporaryDirectory()
        with open(IO_scenario.resolve_scenario('sim1'), 'r') as f:
            self.sim1 = f.read()


    def tearDown(self):

        self.tmp.cleanup()


    def write(self, text, name='scenario.yaml'):

        path = os.path.join(self.tmp.name, name)
        with open(path, 'w') as f:
            f.write(text)
        return path


    def test_bundled(self):

        config = IO_scenario.load_scenario('sim1')
        self.assertEqual(config.law, 'A')
        self.assertEqual((config.formation.n, config.formation.l, config.formation.d), (5, 2, 2))
        self.assertEqual(len(config.formation.edges), 9)
        self.assertEqual(config.gains.k1, 0.5)
        self.assertEqual(config.gains.k2, 2.)
        self.assertAlmostEqual(config.gains.delta1, np.sqrt(2.))
        self.assertAlmostEqual(config.gains.delta2, 1.)
        self.assertEqual(config.output.decimation, 10)
        self.assertEqual(config.init.seed, 1)
        np.testing.assert_allclose(config.formation.bearings[(2, 1)], [1./np.sqrt(2.)]*2)
        np.testing.assert_allclose(config.formation.leader_bearings[(0, 1)], [0., 1.])

        config = IO_scenario.load_scenario('sim2')
        self.assertEqual(config.law, 'B')
        self.assertEqual(tuple(config.gains[:6]), (1., 1., 1., 0.5, 2., 1.))
        self.assertEqual(config.reconstructed, ('k6',))
        self.assertEqual(config.controller.estimator, 'corrected')
        self.assertEqual(config.checks.thresholds.estimator, 1e-4)


    def test_missing_file(self):

        with self.assertRaises(ConfigError):
            IO_scenario.load_scenario(os.path.join(self.tmp.name, 'nothing.yaml'))


    def test_unknown_key_has_line(self):

        path = self.write(self.sim1.replace('law: A\n', 'law: A\nbogus: 1\n'))
        with self.assertRaises(ScenarioError) as cm:
            IO_scenario.load_scenario(path)
        self.assertIn('line 4: bogus: unknown key', cm.exception.violations)


    def test_single_leader(self):

        text = self.sim1.replace('leaders: 2', 'leaders: 1').replace('[[0, 0], [0, 2]]', '[[0, 0]]')
        with self.assertRaises(ScenarioError) as cm:
            IO_scenario.load_scenario(self.write(text))
        self.assertIn('at least 2 leaders', str(cm.exception))


    def test_gain_inequality(self):

        with self.assertRaises(ScenarioError) as cm:
            IO_scenario.load_scenario(self.write(self.sim1.replace('k2: 2', 'k2: 1.5')))
        self.assertIn('law A gain inequality: k2=1.5 <= delta2+k1*delta1=1.70711', str(cm.exception))
        ## without validation the scenario still loads
        config = IO_scenario.load_scenario(self.write(self.sim1.replace('k2: 2', 'k2: 1.5')), validate=False)
        self.assertEqual(config.gains.k2, 1.5)


    def test_delta_below_profile(self):

        with self.assertRaises(ScenarioError) as cm:
            IO_scenario.load_scenario(self.write(self.sim1.replace('k2: 2', 'k2: 2\n  delta2: 0.5')))
        self.assertIn('gains.delta2', str(cm.exception))


    def test_parse_error(self):

        with self.assertRaises(ConfigError) as cm:
            IO_scenario.load_scenario(self.write('name: [sim1\nlaw: A\n'))
        self.assertIsNotNone(cm.exception.line)


    def test_leader_bearing(self):

        ## without the fixed leader bearing the five agents are not rigid
        text = self.sim1.replace('    - {from: 1, to: 2, bearing: [0, 1]}\n', '').replace('  leader_bearings:', '  leader_bearings: []')
        with self.assertRaises(ScenarioError) as cm:
            IO_scenario.load_scenario(self.write(text))
        self.assertIn('rank(B)=6, expected 7', str(cm.exception))

        text = self.sim1.replace('{from: 1, to: 2, bearing: [0, 1]}', '{from: 1, to: 2, bearing: [1, 0]}')
        with self.assertRaises(ScenarioError) as cm:
            IO_scenario.load_scenario(self.write(text))
        self.assertIn('do not satisfy leader bearing (1,2)', str(cm.exception))

        text = self.sim1.replace('{from: 1, to: 2, bearing: [0, 1]}', '{from: 1, to: 3, bearing: [0, 1]}')
        with self.assertRaises(ScenarioError) as cm:
            IO_scenario.load_scenario(self.write(text))
        self.assertIn('leader bearing (1,3) must join two different leaders', str(cm.exception))


    def test_null_values(self):

        with self.assertRaises(ScenarioError) as cm:
            IO_scenario.load_scenario(self.write(self.sim1.replace('step: 0.001', 'step: null')))
        self.assertIn('integrator.step: expected a number, got null', str(cm.exception))

        with self.assertRaises(ScenarioError) as cm:
            IO_scenario.load_scenario(self.write(self.sim1.replace('position: 1.0e-3', 'position: null')))
        self.assertIn('checks.position: expected a number, got null', str(cm.exception))
        self.assertTrue(all(v.startswith('line ') for v in cm.exception.violations))

        ## a missing key still takes its default
        config = IO_scenario.load_scenario(self.write(self.sim1.replace('  position: 1.0e-3\n', '')))
        self.assertEqual(config.checks.thresholds.position, 1e-3)


    def test_several_violations(self):

        text = (self.sim1.replace('law: A', 'law: C').replace('step: 0.001', 'step: -1')
                .replace('decimation: 10', 'decimation: 0'))
        with self.assertRaises(ScenarioError) as cm:
            IO_scenario.load_scenario(self.write(text))
        messages = '\n'.join(cm.exception.violations)
        for field in ('law', 'integrator', 'output.decimation'):
            self.assertIn(field, messages)


    def test_dump_and_load(self):

        config = IO_scenario.load_scenario('sim2')
        path = os.path.join(self.tmp.name, 'again.yaml')
        IO_scenario.dump_scenario(config, path)
        again = IO_scenario.load_scenario(path)
        self.assertEqual(again.name, config.name)
        self.assertEqual(again.formation.edges, config.formation.edges)
        self.assertEqual(list(again.formation.leader_bearings), [(0, 1)])
        for e in config.formation.edges:
            np.testing.assert_array_equal(again.formation.bearings[e], config.formation.bearings[e])
        self.assertEqual(again.gains, config.gains)
        self.assertEqual(again.integrator, config.integrator)
        self.assertEqual(again.reconstructed, config.reconstructed)
        self.assertEqual(again.checks, config.checks)
        self.assertEqual(again.profile.params(), config.profile.params())


class TestOverrides(unittest.TestCase):

    def setUp(self):

        self.config = IO_scenario.load_scenario('sim1')


    def test_replace(self):

        config = IO_scenario.apply_overrides(self.config, seed=4, boundary_layer=0.1, decimation=5, duration=2.)
        self.assertEqual(config.init.seed, 4)
        self.assertEqual(config.controller.boundary_layer, 0.1)
        self.assertEqual(config.output.decimation, 5)
        self.assertEqual(config.integrator.duration, 2.)
        self.assertEqual(self.config.init.seed, 1)


    def test_revalidate(self):

        ## sim1 has no gains for law B
        with self.assertRaises(ScenarioError):
            IO_scenario.apply_overrides(self.config, law='B')
        with self.assertRaises(ScenarioError):
            IO_scenario.apply_overrides(self.config, decimation=0)
        with self.assertRaises(ScenarioError):
            IO_scenario.apply_overrides(self.config, estimator='other')
        with self.assertRaises(ScenarioError):
            IO_scenario.apply_overrides(self.config, step=1., duration=0.5)


if __name__ == '__main__':

    unittest.main()
