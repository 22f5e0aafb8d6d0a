import numpy as np
import numpy.linalg as la
import unittest
import formation
import controllers
import localization
import integrator
import analysis
import IO_scenario
from errors import HypothesisError
from test_integrator import short_scenario, with_init


class TestSettlingBound(unittest.TestCase):

    def test_examples(self):

        self.assertEqual(analysis.settling_time_bound(0., 1., 0.5), 0.)
        self.assertAlmostEqual(analysis.settling_time_bound(4., 1., 0.5), 4.)
        self.assertAlmostEqual(analysis.settling_time_bound(8., 2., 2./3.), 3.)


    def test_domain(self):

        with self.assertRaises(ValueError):
            analysis.settling_time_bound(-1., 1., 0.5)
        with self.assertRaises(ValueError):
            analysis.settling_time_bound(1., 0., 0.5)
        for alpha in (0., 1., 1.5):
            with self.assertRaises(ValueError):
                analysis.settling_time_bound(1., 1., alpha)


class TestFiniteTimeOracle(unittest.TestCase):

    def setUp(self):

        self.rng = np.random.default_rng(17)


    def test_scalar(self):

        h = 1e-3
        result = analysis.finite_time_oracle(np.eye(1), 1., [1.], h=h)
        self.assertAlmostEqual(result.bound, 1.)
        self.assertAlmostEqual(result.kappa, np.sqrt(2.))
        self.assertAlmostEqual(result.settling_time, 1. - 10.*h, delta=2.*h)
        self.assertTrue(result.passed)

        result = analysis.finite_time_oracle(np.eye(3), 1., np.zeros(3))
        self.assertEqual(result.settling_time, 0.)
        self.assertEqual(result.bound, 0.)
        self.assertTrue(result.passed)


    def test_random_instances(self):

        m = 4
        for _ in range(20):
            Q = self.rng.normal(size=(m, m))
            A = Q.dot(Q.T)/m + 0.5*np.eye(m)
            k = self.rng.uniform(1., 3.)
            sup = 0.5*k
            disturbance = analysis.Disturbance(lambda t, a=sup: np.array([a*np.sin(3.*t)]), sup)
            x0 = 2.*self.rng.normal(size=m)
            result = analysis.finite_time_oracle(A, k, x0, disturbance)
            self.assertTrue(result.passed, result)
            self.assertGreaterEqual(result.bound, 0.)


    def test_hypotheses(self):

        disturbance = analysis.Disturbance(lambda t: np.array([1.]), 1.)
        with self.assertRaises(HypothesisError):
            analysis.finite_time_oracle(np.eye(2), 1., [1., 1.], disturbance)
        with self.assertRaises(HypothesisError):
            analysis.finite_time_oracle(np.diag([1., 0.]), 1., [1., 1.])


class TestSlidingSurface(unittest.TestCase):

    @classmethod
    def setUpClass(cls):

        cls.config = IO_scenario.load_scenario('sim1')
        cls.trace = integrator.simulate(cls.config)


    def test_settles_within_bound(self):

        check = analysis.sliding_settling_check(self.trace, self.config.gains)
        self.assertTrue(check.passed, check)
        self.assertAlmostEqual(check.threshold, 10.*2.*1e-3)
        self.assertLess(check.settling_time, 30.)
        ## the surface stays within a few multiples of k2 h once reached
        self.assertLess(check.band, 10.*check.threshold)


    def test_sliding_norm_decreases(self):

        ## V = 0.5 s^T B_ff^-1 s drops at rate >= (k2 - delta2 - k1 delta1)|s|_1 while far from the band
        B_ff = formation.build_bearing_laplacian(self.config.formation).B_ff
        s = self.trace.s.reshape((len(self.trace.t), -1))
        V = 0.5*np.einsum('ka,ka->k', s, la.solve(B_ff, s.T).T)
        reaching = np.nonzero(np.sum(np.abs(s[:-1]), axis=1) > 1.)[0]
        self.assertGreater(len(reaching), 5)
        self.assertTrue(np.all(V[reaching + 1] < V[reaching]))
        check = analysis.sliding_settling_check(self.trace, self.config.gains)
        self.assertLess(self.trace.t[reaching[-1]], check.settling_time)


    def test_oracle_on_bff(self):

        gains = self.config.gains
        B_ff = formation.build_bearing_laplacian(self.config.formation).B_ff
        profile = self.config.profile
        omega = analysis.Disturbance(lambda t: profile.acceleration(t) + gains.k1*profile.velocity(t),
                                     gains.delta2 + gains.k1*gains.delta1)
        result = analysis.finite_time_oracle(B_ff, gains.k2, self.trace.s[0].reshape(-1), omega)
        self.assertTrue(result.passed, result)
        self.assertAlmostEqual(result.xi, 2. - 1. - 0.5*np.sqrt(2.))


    def test_golden_report(self):

        report = analysis.convergence_report(self.trace, self.config.checks.thresholds)
        self.assertEqual(report['status'], 'PASS', report)
        self.assertFalse(report['diverged'])
        self.assertLessEqual(report['final_max']['position'], 1e-3)
        self.assertLessEqual(report['final_max']['bearing'], 1e-4)
        self.assertLessEqual(report['final_max']['velocity'], 1e-2)
        self.assertIsNotNone(report['crossings']['position']['settled'])


    def test_wrong_law(self):

        with self.assertRaises(ValueError):
            analysis.sliding_settling_check(self.trace._replace(law='B'), self.config.gains)


class TestDecayRates(unittest.TestCase):

    def test_fit(self):

        t = np.linspace(0., 10., 101)
        self.assertAlmostEqual(analysis.fit_decay_rate(t, 3.*np.exp(-0.7*t)), 0.7)
        self.assertAlmostEqual(analysis.fit_decay_rate(t, np.exp(-0.2*t), window=(0., 1.)), 0.2)
        with self.assertRaises(ValueError):
            analysis.fit_decay_rate(t, np.zeros_like(t))


    def test_sliding_phase_rate(self):

        ## start on the surface, v = v_c - k1 (p - p*): then p - p* decays like exp(-k1 t)
        config = short_scenario('sim1', duration=10.)
        offsets = np.array([[3., -2.], [-2., 3.], [2., 2.]])
        realization = localization.solve_desired_positions(config.formation)
        v_c = config.profile.velocity(0.)
        config = with_init(config, follower_positions=realization.p_star[2:] + offsets,
                           follower_velocities=v_c - 0.5*offsets)
        trace = integrator.simulate(config)

        check = analysis.sliding_settling_check(trace, config.gains)
        self.assertEqual(check.settling_time, 0.)
        traj = localization.target_trajectory(realization, config.profile)
        B_ff = formation.build_bearing_laplacian(config.formation).B_ff
        phi = np.array([la.norm(B_ff.dot((p[2:] - localization.target_at(traj, t)[2:]).reshape(-1)))
                        for t, p in zip(trace.t, trace.p)])
        rate = analysis.fit_decay_rate(trace.t, phi, window=(0.05, 0.5))
        self.assertAlmostEqual(rate, 0.5, delta=0.05)


    def test_cascade(self):

        self.assertAlmostEqual(analysis.spectral_abscissa(analysis.cascade_matrix(1., 1., 6)), -0.5)
        self.assertLess(analysis.spectral_abscissa(analysis.cascade_matrix(2., 3., 2)), 0.)


class TestConvergenceReport(unittest.TestCase):

    def test_crossings(self):

        t = np.array([0., 1., 2., 3.])
        self.assertEqual(analysis._first_crossing(t, np.array([5., 0.5, 2., 0.1]), 1.), (1., 3.))
        self.assertEqual(analysis._first_crossing(t, np.array([5., 0.5, 0.2, 2.]), 1.), (1., None))
        self.assertEqual(analysis._first_crossing(t, np.array([5., 4., 3., 2.]), 1.), (None, None))
        self.assertAlmostEqual(analysis._max_rebound(np.array([4., 1., 3., 0.5])), 3.)


    def test_golden_seeds(self):

        for seed in range(1, 6):
            config = short_scenario('sim1', seed=seed, decimation=50)
            report = analysis.convergence_report(integrator.simulate(config), config.checks.thresholds)
            self.assertEqual(report['status'], 'PASS', 'seed {}: {}'.format(seed, report['final_max']))


    def test_law_B(self):

        config = IO_scenario.load_scenario('sim2')
        report = analysis.convergence_report(integrator.simulate(config), config.checks.thresholds)
        self.assertEqual(report['status'], 'PASS', report)
        self.assertLessEqual(report['final_max']['gamma'], 1e-4)
        self.assertLessEqual(report['final_max']['delta'], 1e-4)
        L_ff = formation.build_laplacian(config.formation).L_ff
        abscissa = controllers.estimator_spectral_abscissa(L_ff, config.gains.k3, config.gains.k6, config.formation.d)
        self.assertLess(abscissa, 0.)
        self.assertGreaterEqual(report['decay_rates']['estimator'], 0.9*abs(abscissa))


    def test_law_B_seeds(self):

        for seed in range(2, 5):
            config = short_scenario('sim2', seed=seed, decimation=50)
            report = analysis.convergence_report(integrator.simulate(config), config.checks.thresholds)
            self.assertEqual(report['status'], 'PASS', 'seed {}: {}'.format(seed, report['final_max']))


    def test_short_run_inconclusive(self):

        config = short_scenario('sim1', duration=2.)
        report = analysis.convergence_report(integrator.simulate(config), config.checks.thresholds)
        self.assertEqual(report['status'], 'INCONCLUSIVE')
        self.assertFalse(report['diverged'])


    def test_literal_estimator_fails(self):

        config = short_scenario('sim2', duration=12., estimator='printed')
        report = analysis.convergence_report(integrator.simulate(config, partial=True), config.checks.thresholds)
        self.assertEqual(report['status'], 'FAIL')
        self.assertTrue(report['diverged'])
        self.assertGreater(report['growth']['estimator'], analysis.GROWTH_LIMIT)


if __name__ == '__main__':

    unittest.main()
