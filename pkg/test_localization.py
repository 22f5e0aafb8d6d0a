import numpy as np
import numpy.linalg as la
import unittest
import formation
import localization
from errors import NotLocalizableError, ConfigError
from test_formation import five_agent_formation, P_STAR


class TestDesiredPositions(unittest.TestCase):

    def setUp(self):

        self.spec = five_agent_formation()


    def test_five_agents(self):

        real = localization.solve_desired_positions(self.spec)
        np.testing.assert_allclose(real.p_star, P_STAR, atol=1e-8)
        np.testing.assert_array_equal(real.p_star[:2], self.spec.leader_pos)
        self.assertLess(real.residual, 1e-10)
        self.assertLess(real.bearing_error, 1e-8)
        for (i, j) in self.spec.edges:
            np.testing.assert_allclose(formation.bearing_of(real.p_star[i], real.p_star[j]),
                                       self.spec.bearings[(i, j)], atol=1e-8)


    def test_dense_solve_oracle(self):

        blocks = formation.build_bearing_laplacian(self.spec)
        p_F = la.solve(blocks.B_ff, -blocks.B_fl.dot(self.spec.leader_pos.reshape(-1)))
        real = localization.solve_desired_positions(self.spec)
        np.testing.assert_allclose(real.p_star_F, p_F, atol=1e-10)


    def test_least_squares_oracle(self):

        p_F, cost = localization.least_squares_positions(self.spec, seed=3)
        self.assertLess(cost, 1e-12)
        np.testing.assert_allclose(p_F, P_STAR[2:].reshape(-1), atol=1e-6)


    def test_translation(self):

        w = np.array([1.5, -0.25])
        spec = self.spec._replace(leader_pos=self.spec.leader_pos + w)
        np.testing.assert_allclose(localization.solve_desired_positions(spec).p_star, P_STAR + w, atol=1e-10)


    def test_scaling(self):

        ## doubling the leader separation about leader 1 doubles every offset
        p1 = self.spec.leader_pos[0]
        spec = self.spec._replace(leader_pos=p1 + 2.*(self.spec.leader_pos - p1))
        np.testing.assert_allclose(localization.solve_desired_positions(spec).p_star, p1 + 2.*(P_STAR - p1),
                                   atol=1e-10)


    def test_singular(self):

        spec = formation.make_formation(2, 3, 2, [(2, 0), (2, 1)], {(2, 0): [-1., 0.], (2, 1): [1., 0.]},
                                        [[0., 0.], [2., 0.]])
        with self.assertRaises(NotLocalizableError):
            localization.solve_desired_positions(spec)


    def test_inconsistent_bearings(self):

        ## the linear system is solvable but some realized bearings point the wrong way
        bearings = dict(self.spec.bearings)
        bearings[(3, 1)] = np.array([0.6, 0.8])
        spec = self.spec._replace(bearings=bearings)
        with self.assertRaises(NotLocalizableError):
            localization.solve_desired_positions(spec)
        self.assertGreater(localization.solve_desired_positions(spec, check=False).bearing_error, 1e-8)


class TestProfiles(unittest.TestCase):

    def setUp(self):

        self.profile = localization.make_profile('sinusoidal', offset=[1., 0.], amplitude=[0., 1.])
        self.traj = localization.target_trajectory(localization.solve_desired_positions(five_agent_formation()),
                                                   self.profile)


    def test_sinusoidal_bounds(self):

        self.assertAlmostEqual(self.profile.delta1, np.sqrt(2.))
        self.assertAlmostEqual(self.profile.delta2, 1.)
        t = np.linspace(0., 20., 200001)
        v = self.profile.velocity(t[:, None])
        self.assertAlmostEqual(np.max(la.norm(v, axis=1)), np.sqrt(2.), places=5)
        a = self.profile.acceleration(t[:, None])
        self.assertAlmostEqual(np.max(la.norm(a, axis=1)), 1., places=5)


    def test_target_at(self):

        np.testing.assert_allclose(localization.target_at(self.traj, 0.), P_STAR, atol=1e-12)
        np.testing.assert_allclose(localization.target_at(self.traj, np.pi) - self.traj.p0,
                                   np.tile([np.pi, 2.], (5, 1)), atol=1e-12)
        with self.assertRaises(ValueError):
            localization.target_at(self.traj, -1.)
        np.testing.assert_allclose(localization.target_velocity(self.traj, np.pi/2.), np.tile([1., 1.], (5, 1)))


    def test_bearings_time_invariant(self):

        rng = np.random.default_rng(2)
        spec = five_agent_formation()
        for t1, t2 in rng.uniform(0., 50., (10, 2)):
            p1, p2 = localization.target_at(self.traj, t1), localization.target_at(self.traj, t2)
            for (i, j) in spec.edges:
                np.testing.assert_allclose(formation.bearing_of(p1[i], p1[j]), formation.bearing_of(p2[i], p2[j]),
                                           atol=1e-12)


    def test_constant(self):

        profile = localization.make_profile('constant', value=[0.5, -1.])
        np.testing.assert_allclose(profile.displacement(4.), [2., -4.])
        self.assertEqual(profile.delta2, 0.)
        self.assertAlmostEqual(profile.delta1, np.sqrt(1.25))


    def test_piecewise(self):

        profile = localization.make_profile('piecewise', times=[0., 1., 3.], values=[[1., 0.], [0., 2.], [-1., -1.]])
        np.testing.assert_allclose(profile.velocity(0.5), [1., 0.])
        np.testing.assert_allclose(profile.velocity(1.), [0., 2.])
        np.testing.assert_allclose(profile.displacement(2.), [1., 2.])
        np.testing.assert_allclose(profile.displacement(4.), [0., 3.])
        self.assertAlmostEqual(profile.delta1, 2.)
        self.assertEqual(profile.delta2, 0.)
        ## jumps (1,0)->(0,2)->(-1,-1): sqrt(5) and sqrt(10)
        self.assertAlmostEqual(profile.max_jump, np.sqrt(10.))
        self.assertEqual(localization.make_profile('piecewise', times=[0.], values=[[1., 0.]]).max_jump, 0.)


    def test_unknown_profile(self):

        with self.assertRaises(ConfigError):
            localization.make_profile('chirp', rate=1.)
        with self.assertRaises(ConfigError):
            localization.make_profile('constant', speed=1.)


if __name__ == '__main__':

    unittest.main()
