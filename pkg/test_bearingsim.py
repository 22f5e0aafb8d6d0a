import os
import tempfile
import unittest
import IO_scenario
import IO_trace
import bearingsim


class TestCommandLine(unittest.TestCase):

    def setUp(self):

        self.tmp = tempfile.TemporaryDirectory()
        ## a two-second copy of sim1 for the quick runs
        self.short = os.path.join(self.tmp.name, 'short.yaml')
        config = IO_scenario.apply_overrides(IO_scenario.load_scenario('sim1'), duration=2.)
        IO_scenario.dump_scenario(config._replace(name='short'), self.short)


    def tearDown(self):

        self.tmp.cleanup()


    def out(self, name):

        return os.path.join(self.tmp.name, name)


    def test_check(self):

        self.assertEqual(bearingsim.main(['check', 'sim1']), 0)
        self.assertEqual(bearingsim.main(['check', '--scenario', 'sim2']), 0)


    def test_invalid_scenario(self):

        with open(IO_scenario.resolve_scenario('sim1'), 'r') as f:
            text = f.read().replace('k2: 2', 'k2: 1.5')
        path = self.out('bad.yaml')
        with open(path, 'w') as f:
            f.write(text)
        self.assertEqual(bearingsim.main(['check', path]), 2)
        self.assertEqual(bearingsim.main(['run', path, '--out', self.out('bad')]), 2)
        self.assertEqual(bearingsim.main(['check', self.out('missing.yaml')]), 2)
        self.assertEqual(bearingsim.main(['run', 'sim1', '--law', 'B', '--out', self.out('bad')]), 2)


    def test_rigidity(self):

        self.assertEqual(bearingsim.main(['rigidity', 'sim1', '--out', self.out('rigidity')]), 0)
        report = IO_trace.read_yaml(os.path.join(self.out('rigidity'), 'rigidity.yaml'))
        self.assertEqual(report['rank'], 7)
        self.assertEqual(report['bearing_constraints'], 10)
        self.assertTrue(report['rigid'])
        self.assertTrue(report['bff_positive_definite'])


    def test_short_run(self):

        out = self.out('short')
        self.assertEqual(bearingsim.main(['run', self.short, '--out', out, '--seed', '3', '--hdf5']), 0)
        for name in bearingsim.OUTPUT_FILES + ('trace.h5',):
            self.assertTrue(os.path.isfile(os.path.join(out, name)), name)
        report = IO_trace.read_yaml(os.path.join(out, 'report.yaml'))
        self.assertEqual(report['status'], 'INCONCLUSIVE')
        self.assertEqual(report['seed'], 3)
        self.assertIn('sliding_surface', report)
        ## too short to converge
        self.assertEqual(bearingsim.main(['run', self.short, '--out', out, '--assert-convergence']), 1)


    def test_golden_run(self):

        out = self.out('sim1')
        self.assertEqual(bearingsim.main(['run', 'sim1', '--out', out, '--assert-convergence']), 0)
        for name in bearingsim.OUTPUT_FILES:
            self.assertTrue(os.path.isfile(os.path.join(out, name)), name)
        report = IO_trace.read_yaml(os.path.join(out, 'report.yaml'))
        self.assertEqual(report['status'], 'PASS')
        self.assertTrue(report['sliding_surface']['passed'])


    def test_literal_estimator(self):

        out = self.out('literal')
        code = bearingsim.main(['run', 'sim2', '--out', out, '--law-flag', 'printed-estimator'])
        self.assertEqual(code, 1)
        report = IO_trace.read_yaml(os.path.join(out, 'report.yaml'))
        self.assertEqual(report['status'], 'FAIL')
        self.assertTrue(report['diverged'])
        self.assertEqual(report['estimator'], 'printed')
        self.assertGreater(report['estimator_eigenvalues']['max_real_literal'], 0.)


    def test_sweep(self):

        out = self.out('sweep')
        self.assertEqual(bearingsim.main(['sweep', self.short, '--out', out, '--seeds', '1', '2']), 0)
        summary = IO_trace.read_yaml(os.path.join(out, 'sweep.yaml'))
        self.assertEqual(summary['runs'], 2)
        self.assertEqual(summary['seeds'], [1, 2])
        self.assertEqual(summary['status_counts']['INCONCLUSIVE'], 2)
        for seed in (1, 2):
            self.assertTrue(os.path.isfile(os.path.join(out, 'seed_{}'.format(seed), 'trace.csv')))


    def test_aggregate(self):

        results = [{'status': 'PASS', 'final_max': {'position': 1e-4}},
                   {'status': 'FAIL', 'final_max': {'position': 3e-4}}]
        stats = bearingsim.aggregate(results)
        self.assertEqual(stats['runs'], 2)
        self.assertEqual(stats['status_counts'], {'PASS': 1, 'FAIL': 1, 'INCONCLUSIVE': 0})
        self.assertAlmostEqual(stats['final_max']['position']['mean'], 2e-4)


if __name__ == '__main__':

    unittest.main()
