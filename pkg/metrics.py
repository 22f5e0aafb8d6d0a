from collections import namedtuple
import numpy as np
import numpy.linalg as la
import localization


"""
MetricsSample fields (one sample, or stacked over time with a leading axis):
position_error     : (n,) e_i = |p_i - p*_i(t)|^2, m^2
bearing_error      : (E,) e_ij = |g_ij - g*_ij|^2 per edge, in edge-list order
velocity_error     : (f,) |v_i - v_c(t)| per follower, m/s
sliding_norm       : |s_F|
gamma, delta       : |p_F - p_hat_F|, |v_F - v_hat_F| (law B, nan otherwise)
ref_position_error : |p_bar_F - p*_F(t)| (law B)
ref_velocity_error : |v_bar_F - 1 (x) v_c(t)| (law B)
collision          : True if some edge was too short to define a bearing
"""
MetricsSample = namedtuple('MetricsSample', ['position_error', 'bearing_error', 'velocity_error',
                                             'sliding_norm', 'gamma', 'delta',
                                             'ref_position_error', 'ref_velocity_error', 'collision'])

"""
Trace fields:
law        : 'A' or 'B'
t          : (K,) strictly increasing sample times
p, v       : (K,n,d) positions and velocities of all agents
p_hat ...  : (K,n,d) estimator and reference states (law B), None for law A
s, u       : (K,f,d) sliding variables and inputs of the followers
u_bar      : (K,f,d) reference inputs (law B)
metrics    : MetricsSample of stacked arrays
spec       : formation.FormationSpec
h          : integration step
decimation : steps between samples
duration   : requested T_end
failure    : message of the error that stopped the run early, None for a complete run
"""
Trace = namedtuple('Trace', ['law', 't', 'p', 'v', 'p_hat', 'v_hat', 'p_bar', 'v_bar',
                             's', 'u', 'u_bar', 'metrics', 'spec', 'h', 'decimation', 'duration',
                             'failure'], defaults=(None,))


def compute_metrics(state, t, spec, traj, s_F=None, eps=1e-12):

    """
    Error metrics of a swarm state against the moving target.

    Parameters
    ----------
    state : controllers.SwarmState with (n,d) arrays
    t     : time (s)
    spec  : formation.FormationSpec
    traj  : localization.TargetTrajectory
    s_F   : (f,d) sliding variables, if available
    eps   : edges shorter than this are flagged as collisions

    Returns
    -------
    MetricsSample

    """

    l = spec.l
    p_star = localization.target_at(traj, t)
    v_c = traj.profile.velocity(t)

    position_error = np.sum((state.p - p_star)**2, axis=1)

    bearing_error = np.empty(len(spec.edges))
    collision = False
    for k, (i, j) in enumerate(spec.edges):
        r = state.p[j] - state.p[i]
        dist = la.norm(r)
        if dist < eps:
            bearing_error[k] = np.nan
            collision = True
        else:
            bearing_error[k] = np.sum((r/dist - spec.bearings[(i, j)])**2)

    velocity_error = la.norm(state.v[l:] - v_c[None, :], axis=1)
    sliding_norm = np.nan if s_F is None else la.norm(s_F)

    if state.p_hat is None:
        gamma = delta = ref_p = ref_v = np.nan
    else:
        gamma = la.norm(state.p[l:] - state.p_hat[l:])
        delta = la.norm(state.v[l:] - state.v_hat[l:])
        ref_p = la.norm(state.p_bar[l:] - p_star[l:])
        ref_v = la.norm(state.v_bar[l:] - v_c[None, :])

    return MetricsSample(position_error, bearing_error, velocity_error, sliding_norm,
                         gamma, delta, ref_p, ref_v, collision)


def stack_metrics(samples):

    """ stack a list of MetricsSample along a new leading time axis """

    return MetricsSample(*[np.array(field) for field in zip(*samples)])


def final_window(trace, fraction=0.1):

    """ boolean mask of samples with t >= (1-fraction)*t_end """

    return trace.t >= (1. - fraction)*trace.t[-1]
