import logging
from collections import namedtuple
import numpy as np
import numpy.linalg as la
import scipy.linalg as sla
from scipy.optimize import least_squares
from errors import NotLocalizableError, ConfigError
import formation


LOCALIZATION_TOL = 1e-8

"""
DesiredRealization fields:
p_star       : (n,d) desired positions; leader rows are the leader anchors
p_star_F     : stacked follower block (df,)
residual     : |B_ff.p*_F + B_fl.p_L|
bearing_error: max over edges of |g_ij(p*) - g*_ij|
"""
DesiredRealization = namedtuple('DesiredRealization', ['p_star', 'p_star_F', 'residual', 'bearing_error'])
TargetTrajectory = namedtuple('TargetTrajectory', ['p0', 'profile'])


class ConstantProfile:

    """
    Constant common velocity v_c(t) = c.
    delta1 = |c|; delta2 = 0.
    """

    kind = 'constant'

    def __init__(self, value):
        self.value = np.array(value, dtype=float)
        self.delta1 = la.norm(self.value)
        self.delta2 = 0.

    def velocity(self, t):
        return self.value.copy()

    def acceleration(self, t):
        return np.zeros_like(self.value)

    def displacement(self, t):
        return t*self.value

    def params(self):
        return {'value': self.value.tolist()}


class SinusoidalProfile:

    """
    v_c(t) = c + a*sin(w*t + phi), with vectors c, a and scalars w, phi.

    Since |c + a*s| is convex in s = sin(.), its supremum is attained at s = +/-1,
    so delta1 = max(|c+a|, |c-a|) exactly; delta2 = w*|a|.
    """

    kind = 'sinusoidal'

    def __init__(self, offset, amplitude, frequency=1., phase=0.):
        self.offset = np.array(offset, dtype=float)
        self.amplitude = np.array(amplitude, dtype=float)
        self.frequency = float(frequency)
        self.phase = float(phase)
        if self.offset.shape != self.amplitude.shape:
            raise ConfigError('offset and amplitude have different shapes', field='velocity_profile')
        if self.frequency <= 0:
            raise ConfigError('frequency must be positive', field='velocity_profile.frequency')
        self.delta1 = max(la.norm(self.offset + self.amplitude), la.norm(self.offset - self.amplitude))
        self.delta2 = self.frequency*la.norm(self.amplitude)

    def velocity(self, t):
        return self.offset + self.amplitude*np.sin(self.frequency*t + self.phase)

    def acceleration(self, t):
        return self.amplitude*self.frequency*np.cos(self.frequency*t + self.phase)

    def displacement(self, t):
        ## exact integral of v_c from 0 to t
        return (self.offset*t + self.amplitude/self.frequency
                * (np.cos(self.phase) - np.cos(self.frequency*t + self.phase)))

    def params(self):
        return {'offset': self.offset.tolist(), 'amplitude': self.amplitude.tolist(),
                'frequency': self.frequency, 'phase': self.phase}


class PiecewiseProfile:

    """
    Piecewise-constant velocity: values[k] on [times[k], times[k+1]),
    with times[0] = 0 and the last value held forever.
    delta2 = 0 bounds the acceleration between breakpoints only. Each breakpoint
    is an impulse in the acceleration; max_jump is the largest velocity jump,
    after which the sliding surface has to be reached again.
    """

    kind = 'piecewise'

    def __init__(self, times, values):
        self.times = np.array(times, dtype=float)
        self.values = np.array(values, dtype=float)
        if self.values.ndim != 2 or len(self.times) != len(self.values):
            raise ConfigError('need one velocity vector per breakpoint', field='velocity_profile.values')
        if self.times[0] != 0. or np.any(np.diff(self.times) <= 0):
            raise ConfigError('breakpoints must start at 0 and increase', field='velocity_profile.times')
        ## displacement accumulated at each breakpoint
        self.offsets = np.vstack([np.zeros(self.values.shape[1]),
                                  np.cumsum(self.values[:-1]*np.diff(self.times)[:, None], axis=0)])
        self.delta1 = max(la.norm(v) for v in self.values)
        self.delta2 = 0.
        self.max_jump = (float(np.max(la.norm(np.diff(self.values, axis=0), axis=1)))
                         if len(self.values) > 1 else 0.)

    def _segment(self, t):
        return int(np.searchsorted(self.times, t, side='right')) - 1

    def velocity(self, t):
        return self.values[self._segment(t)].copy()

    def acceleration(self, t):
        return np.zeros(self.values.shape[1])

    def displacement(self, t):
        k = self._segment(t)
        return self.offsets[k] + (t - self.times[k])*self.values[k]

    def params(self):
        return {'times': self.times.tolist(), 'values': self.values.tolist()}


PROFILES = {'constant': ConstantProfile, 'sinusoidal': SinusoidalProfile, 'piecewise': PiecewiseProfile}


def make_profile(kind, **params):

    """
    Build a built-in velocity profile by name.

    Parameters
    ----------
    kind   : 'constant', 'sinusoidal' or 'piecewise'
    params : keyword arguments of the profile class

    Returns
    -------
    profile object with velocity(t), acceleration(t), displacement(t), delta1, delta2

    """

    if kind not in PROFILES:
        raise ConfigError('unknown velocity profile {!r}; choose from {}'
                          .format(kind, sorted(PROFILES)), field='velocity_profile.kind')
    try:
        return PROFILES[kind](**params)
    except TypeError as e:
        raise ConfigError(str(e), field='velocity_profile')


def solve_desired_positions(spec, check=True):

    """
    Solve B_ff.p*_F = -B_fl.p_L for the follower desired positions.
    p*_F is the unique zero of phi_F = B_ff(p_F - p*_F) when B_ff is positive definite.

    Parameters
    ----------
    spec  : FormationSpec
    check : raise NotLocalizableError if the realized bearings differ from g*

    Returns
    -------
    DesiredRealization

    """

    if not formation.check_positive_definite_bff(spec, require_leaders=False).ok:
        raise NotLocalizableError('B_ff is singular; follower positions are not unique')
    blocks = formation.build_bearing_laplacian(spec)
    p_L = spec.leader_pos.reshape(-1)
    rhs = -blocks.B_fl.dot(p_L)
    p_F = sla.cho_solve(sla.cho_factor(blocks.B_ff), rhs)
    residual = la.norm(blocks.B_ff.dot(p_F) - rhs)

    p_star = np.vstack([spec.leader_pos, p_F.reshape((spec.n - spec.l, spec.d))])
    edges, bearings = formation.constraints(spec)
    errs = [la.norm(formation.bearing_of(p_star[i], p_star[j], agents=(i, j)) - bearings[(i, j)])
            for (i, j) in edges]
    bearing_error = max(errs) if errs else 0.
    logging.info('desired realization: residual {:.3e}, max bearing mismatch {:.3e}'
                 .format(residual, bearing_error))
    if check and bearing_error > LOCALIZATION_TOL:
        raise NotLocalizableError('desired bearings are inconsistent: realized bearings differ by {:.3e}'
                                  .format(bearing_error))

    return DesiredRealization(p_star, p_F, residual, bearing_error)


def target_trajectory(realization, profile):

    return TargetTrajectory(realization.p_star.copy(), profile)


def target_at(traj, t):

    """
    Desired positions at time t, p*(t) = p*(0) + 1_n (x) int_0^t v_c.

    Returns
    -------
    (n,d) ndarray

    """

    if t < 0:
        raise ValueError('target requested at negative time {}'.format(t))

    return traj.p0 + traj.profile.displacement(t)[None, :]


def target_velocity(traj, t):

    return np.tile(traj.profile.velocity(t), (traj.p0.shape[0], 1))


def least_squares_positions(spec, seed=0, restarts=3, scale=5.):

    """
    Follower positions minimizing sum_ij |P_g*ij (p_j - p_i)|^2 with the leaders held
    at their anchors, by nonlinear least squares from random starts.
    Independent of the Laplacian assembly; used to cross-check solve_desired_positions.

    Parameters
    ----------
    spec     : FormationSpec
    seed     : seed of the random starting points
    restarts : number of random starts
    scale    : starting points are uniform in [-scale, scale]^(df)

    Returns
    -------
    p_F  : stacked (df,) follower positions of the best start
    cost : its objective value

    """

    P = {e: formation.projection_matrix(spec.bearings[e]) for e in spec.edges}
    f = spec.n - spec.l

    def residual(x):
        p = np.vstack([spec.leader_pos, x.reshape((f, spec.d))])
        return np.concatenate([P[(i, j)].dot(p[j] - p[i]) for (i, j) in spec.edges])

    rng = np.random.default_rng(seed)
    best = None
    for _ in range(restarts):
        sol = least_squares(residual, rng.uniform(-scale, scale, f*spec.d), xtol=1e-14, ftol=1e-14, gtol=1e-14)
        if best is None or sol.cost < best.cost:
            best = sol
    logging.debug('least-squares localization: cost {:.3e} after {} starts'.format(best.cost, restarts))

    return best.x, 2.*best.cost
