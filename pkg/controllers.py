"""
Decentralized sliding-mode tracking laws for the followers.

Law A drives the followers directly with the sliding variable
    s_i = sum_{j in N_i} P_ij (v_i - v_j + k1 (p_i - p_j)),
    u_i = -k1 v_i - k2 sgn(s_i).
Law B runs a consensus estimator of the follower's own position (p_hat, v_hat),
a sliding-mode reference generator (p_bar, v_bar) that is law A applied to the
reference states with gains (k4,k5), and a PD-like tracking law
    u_i = u_bar_i + k1 (p_bar_i - p_hat_i) + k2 (v_bar_i - v_hat_i).

Per-agent functions only see a LocalView of the swarm (own velocity and
internal states, relative measurements and neighbours' communicated variables).
The stacked functions evaluate the same sums for every follower at once and are
what the simulation calls.
"""

import logging
from collections import namedtuple
import numpy as np
import numpy.linalg as la
from errors import GainConditionError, ConfigError
import formation


ESTIMATORS = ('corrected', 'printed')

GainSet = namedtuple('GainSet', ['k1', 'k2', 'k3', 'k4', 'k5', 'k6', 'delta1', 'delta2'],
                     defaults=(None, None, None, None, None, None))
SwarmState = namedtuple('SwarmState', ['p', 'v', 'p_hat', 'v_hat', 'p_bar', 'v_bar'],
                        defaults=(None, None, None, None))
ControllerOptions = namedtuple('ControllerOptions', ['boundary_layer', 'estimator'],
                               defaults=(0., 'corrected'))
ControlOutput = namedtuple('ControlOutput', ['u', 's', 'u_bar', 'dp_hat', 'dv_hat'],
                           defaults=(None, None, None))
GainCheck = namedtuple('GainCheck', ['ok', 'violations', 'margin'])
LocalView = namedtuple('LocalView', ['v', 'rel_p', 'rel_v', 'projectors',
                                     'p_hat', 'v_hat', 'p_bar', 'v_bar',
                                     'nb_p_hat', 'nb_v_hat', 'nb_p_bar', 'nb_v_bar'])


def signum(x, boundary_layer=0.):

    """
    Element-wise sign with sign(0) = 0, or the saturation clip(x/eps,-1,1)
    when a boundary layer eps > 0 is given.
    """

    if boundary_layer > 0:
        return np.clip(np.asarray(x)/boundary_layer, -1., 1.)

    return np.sign(x)


def validate_gains(gains, law):

    """
    Check positivity of the gains and the strict reaching condition of a law.

    Parameters
    ----------
    gains : GainSet
    law   : 'A' (needs k2 > delta2 + k1 delta1) or
            'B' (needs k1..k6 > 0 and k5 > delta2 + k4 delta1)

    Returns
    -------
    GainCheck : ok flag, list of violated conditions, margin of the inequality

    """

    ## ka damps the velocity, kb multiplies the switching term
    if law == 'A':
        names, ka, kb = ('k1', 'k2'), 'k1', 'k2'
    elif law == 'B':
        names, ka, kb = ('k1', 'k2', 'k3', 'k4', 'k5', 'k6'), 'k4', 'k5'
    else:
        raise ConfigError('unknown law {!r}; choose A or B'.format(law), field='law')

    violations = []
    for name in names + ('delta1', 'delta2'):
        value = getattr(gains, name)
        if value is None:
            violations.append('law {}: {} is missing'.format(law, name))
        elif name.startswith('k') and not value > 0:
            violations.append('law {}: {}={:g} must be positive'.format(law, name, value))
        elif name.startswith('delta') and value < 0:
            violations.append('law {}: {}={:g} must be nonnegative'.format(law, name, value))
    if violations:
        return GainCheck(False, violations, None)

    bound = gains.delta2 + getattr(gains, ka)*gains.delta1
    margin = getattr(gains, kb) - bound
    if not margin > 0:
        violations.append('law {} gain inequality: {}={:g} <= delta2+{}*delta1={:.6g}'
                          .format(law, kb, getattr(gains, kb), ka, bound))

    return GainCheck(not violations, violations, margin)


def require_valid_gains(gains, law):

    check = validate_gains(gains, law)
    if not check.ok:
        raise GainConditionError(check.violations)
    logging.debug('law {} gains valid with margin {:.6g}'.format(law, check.margin))

    return check


def local_view(i, state, spec):

    """
    Everything follower i is allowed to use: its own velocity and internal states,
    relative positions/velocities of its neighbours, the projectors of its desired
    bearings and the variables its neighbours communicate.

    Returns
    -------
    LocalView (neighbour quantities stacked in edge-list order)

    """

    nbrs = formation.neighbors(spec, i)
    P = np.array([formation.projection_matrix(spec.bearings[(i, j)]) for j in nbrs])
    rel_p = np.array([state.p[i] - state.p[j] for j in nbrs])
    rel_v = np.array([state.v[i] - state.v[j] for j in nbrs])

    def own(x):
        return None if x is None else x[i].copy()

    def comm(x):
        return None if x is None else np.array([x[j] for j in nbrs])

    return LocalView(state.v[i].copy(), rel_p, rel_v, P,
                     own(state.p_hat), own(state.v_hat), own(state.p_bar), own(state.v_bar),
                     comm(state.p_hat), comm(state.v_hat), comm(state.p_bar), comm(state.v_bar))


def _projected_sum(projectors, rel_v, rel_p, k):

    ## sum_j P_ij (rel_v_j + k rel_p_j)
    return np.einsum('jab,jb->a', projectors, rel_v + k*rel_p)


def _sliding_mode(projectors, rel_v, rel_p, v_own, ka, kb, boundary_layer):

    ## shared by law A and the law B reference generator
    s = _projected_sum(projectors, rel_v, rel_p, ka)
    return -ka*v_own - kb*signum(s, boundary_layer), s


def sliding_variable_A(i, state, spec, gains):

    view = local_view(i, state, spec)

    return _projected_sum(view.projectors, view.rel_v, view.rel_p, gains.k1)


def control_A(i, state, spec, gains, options=ControllerOptions()):

    view = local_view(i, state, spec)
    u, s = _sliding_mode(view.projectors, view.rel_v, view.rel_p, view.v,
                         gains.k1, gains.k2, options.boundary_layer)

    return u


def reference_generator_step_B(i, state, spec, gains, options=ControllerOptions()):

    """
    Reference generator of follower i under law B.

    Returns
    -------
    dp_bar, dv_bar, u_bar, s : derivatives of the reference states,
                               the reference input and its sliding variable

    """

    view = local_view(i, state, spec)
    u_bar, s = _sliding_mode(view.projectors, view.v_bar - view.nb_v_bar, view.p_bar - view.nb_p_bar,
                             view.v_bar, gains.k4, gains.k5, options.boundary_layer)

    return view.v_bar.copy(), u_bar, u_bar, s


def control_B(i, state, spec, gains, options=ControllerOptions()):

    view = local_view(i, state, spec)
    _, _, u_bar, _ = reference_generator_step_B(i, state, spec, gains, options)

    return u_bar + gains.k1*(view.p_bar - view.p_hat) + gains.k2*(view.v_bar - view.v_hat)


def estimator_step_B(i, state, spec, gains, options=ControllerOptions()):

    """
    Consensus estimator of follower i,
        dp_hat_i = v_hat_i
        dv_hat_i = u_i + k3 sum_j [(p_hat_j - p_hat_i) - (p_j - p_i)]
                       + k6 sum_j [(v_hat_j - v_hat_i) - (v_j - v_i)]
    which gives the error dynamics gamma' = delta, delta' = -k3 A gamma - k6 A delta.
    With options.estimator == 'printed' the measured terms enter with a plus
    sign, (p_hat_j - p_hat_i + p_j - p_i), and the estimator diverges.

    Returns
    -------
    dp_hat, dv_hat

    """

    view = local_view(i, state, spec)
    u = control_B(i, state, spec, gains, options)
    sign = 1. if options.estimator == 'printed' else -1.
    ## rel_p = p_i - p_j, so (p_j - p_i) = -rel_p
    pos = np.sum(view.nb_p_hat - view.p_hat - sign*view.rel_p, axis=0)
    vel = np.sum(view.nb_v_hat - view.v_hat - sign*view.rel_v, axis=0)

    return view.v_hat.copy(), u + gains.k3*pos + gains.k6*vel


def _edge_sum(edges, x):

    ## (S . x_e)_i for per-edge rows x_e
    return edges.S.dot(x)


def _stacked_sliding(edges, x_p, x_v, k):

    ## sum_{j in N_i} P_ij (x_v_i - x_v_j + k (x_p_i - x_p_j)) for every agent
    r = (x_v[edges.src] - x_v[edges.dst]) + k*(x_p[edges.src] - x_p[edges.dst])
    return _edge_sum(edges, np.einsum('eab,eb->ea', edges.P, r))


def law_A(state, l, edges, gains, options=ControllerOptions()):

    """
    Law A for all followers at once.

    Parameters
    ----------
    state   : SwarmState with (n,d) p and v
    l       : number of leaders
    edges   : formation.EdgeArrays
    gains   : GainSet
    options : ControllerOptions

    Returns
    -------
    ControlOutput with (f,d) u and s

    """

    s = _stacked_sliding(edges, state.p, state.v, gains.k1)[l:]
    u = -gains.k1*state.v[l:] - gains.k2*signum(s, options.boundary_layer)

    return ControlOutput(u, s)


def law_B(state, l, edges, gains, options=ControllerOptions()):

    """
    Law B for all followers at once. Leader rows of the state must follow the
    leader convention p_hat = p_bar = p, v_hat = v_bar = v_c.

    Returns
    -------
    ControlOutput with (f,d) u, reference sliding variable s, u_bar,
    and estimator derivatives dp_hat, dv_hat

    """

    s = _stacked_sliding(edges, state.p_bar, state.v_bar, gains.k4)[l:]
    u_bar = -gains.k4*state.v_bar[l:] - gains.k5*signum(s, options.boundary_layer)
    u = (u_bar + gains.k1*(state.p_bar[l:] - state.p_hat[l:])
         + gains.k2*(state.v_bar[l:] - state.v_hat[l:]))

    sign = 1. if options.estimator == 'printed' else -1.
    src, dst = edges.src, edges.dst
    pos = _edge_sum(edges, (state.p_hat[dst] - state.p_hat[src]) + sign*(state.p[dst] - state.p[src]))[l:]
    vel = _edge_sum(edges, (state.v_hat[dst] - state.v_hat[src]) + sign*(state.v[dst] - state.v[src]))[l:]
    dv_hat = u + gains.k3*pos + gains.k6*vel

    return ControlOutput(u, s, u_bar, state.v_hat[l:].copy(), dv_hat)


def stacked_phi(B_ff, p_F, p_star_F):

    """ phi_F = B_ff (p_F - p*_F) on stacked (df,) vectors """

    return B_ff.dot(p_F - p_star_F)


def stacked_sliding(B_ff, p_F, v_F, p_star_F, v_star_F, k):

    """ s_F = B_ff (v_F - v*_F + k (p_F - p*_F)) on stacked (df,) vectors """

    return B_ff.dot(v_F - v_star_F + k*(p_F - p_star_F))


def estimator_error_matrix(L_ff, k3, k6, d, literal=False):

    """
    System matrix of the stacked estimator error eta = (gamma, delta),
    gamma = p_F - p_hat_F, delta = v_F - v_hat_F, A = L_ff (x) I_d:
        M = [[0, I], [-k3 A, -k6 A]]
    literal=True flips the sign of the A blocks. This is not the error system of
    the printed estimator: with p_hat = p - gamma its sums keep the homogeneous
    part -k3 A gamma - k6 A delta and add the forcing
        -2 k3 sum_j (p_j - p_i) - 2 k6 sum_j (v_j - v_i),
    which couples back into gamma through the control law. The abscissa of the
    flipped matrix is not the growth rate of a printed-estimator run.
    """

    A = np.kron(L_ff, np.eye(d))
    m = A.shape[0]
    sign = 1. if literal else -1.

    return np.block([[np.zeros((m, m)), np.eye(m)],
                     [sign*k3*A, sign*k6*A]])


def estimator_spectral_abscissa(L_ff, k3, k6, d, literal=False):

    """ largest real part among the eigenvalues of estimator_error_matrix """

    return np.max(la.eigvals(estimator_error_matrix(L_ff, k3, k6, d, literal)).real)
