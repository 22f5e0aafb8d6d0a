import time
import logging
from collections import namedtuple
import numpy as np
import numpy.linalg as la
from errors import ConfigError, CollisionError, NumericalBlowupError, SimulationError
import formation
import localization
import controllers
import metrics


SCHEMES = ('forward-euler', 'rk4')
BLOWUP = 1e12   ## states larger than this count as numerical blowup

IntegratorConfig = namedtuple('IntegratorConfig', ['scheme', 'step', 'duration', 'collision_distance'],
                              defaults=('rk4', 1e-3, 30., 1e-6))

"""
InitConfig fields:
start               : 'random' (followers scattered around p*_F(0)) or 'target' (exactly on the target set)
seed                : seed of the numpy Generator
box_half_width      : half-width of the uniform box around the desired positions (m)
follower_positions  : explicit (f,d) initial positions, overrides the random draw
follower_velocities : explicit (f,d) initial velocities, default zero
estimator_error     : half-width of the uniform initial error of p_hat (m), law B only
"""
InitConfig = namedtuple('InitConfig', ['start', 'seed', 'box_half_width', 'follower_positions',
                                       'follower_velocities', 'estimator_error'],
                        defaults=('random', 0, 3., None, None, 1.))


def integrator_violations(cfg):

    violations = []
    if cfg.scheme not in SCHEMES:
        violations.append('integrator.scheme: unknown scheme {!r}; choose from {}'.format(cfg.scheme, SCHEMES))
    if not cfg.step > 0:
        violations.append('integrator.step: h={} must be positive'.format(cfg.step))
    elif not cfg.duration >= cfg.step:
        violations.append('integrator.duration: T_end={} must be at least h={}'.format(cfg.duration, cfg.step))
    if not cfg.collision_distance >= 0:
        violations.append('integrator.collision_distance must be nonnegative')

    return violations


def euler_step(f, t, y, h):

    return y + h*f(t, y)


def rk4_step(f, t, y, h):

    """ classical fourth-order Runge-Kutta step for y' = f(t,y) """

    k1 = f(t, y)
    k2 = f(t + 0.5*h, y + 0.5*h*k1)
    k3 = f(t + 0.5*h, y + 0.5*h*k2)
    k4 = f(t + h, y + h*k3)

    return y + h*(k1 + 2.*k2 + 2.*k3 + k4)/6.


def step(y, t, rhs, cfg, name_of=None):

    """
    Advance the flat state y from t to t+h with the configured fixed-step scheme.

    Parameters
    ----------
    y       : flat ndarray of states
    t       : current time
    rhs     : callable rhs(t, y) -> dy/dt; may raise CollisionError
    cfg     : IntegratorConfig
    name_of : maps an index of y to the 0-based agent it belongs to

    Returns
    -------
    y_new : state at t+h

    """

    if cfg.scheme == 'rk4':
        y_new = rk4_step(rhs, t, y, cfg.step)
    elif cfg.scheme == 'forward-euler':
        y_new = euler_step(rhs, t, y, cfg.step)
    else:
        raise ConfigError('unknown scheme {!r}'.format(cfg.scheme), field='integrator.scheme')

    bad = np.nonzero(~np.isfinite(y_new) | (np.abs(y_new) > BLOWUP))[0]
    if len(bad):
        idx = bad[0]
        raise NumericalBlowupError(name_of(idx) if name_of else idx, y_new[idx])

    return y_new


def blocks_of(law):

    """ number of (f,d) follower blocks in the flat state """

    return 2 if law == 'A' else 6


def full_state(y, t, spec, traj, law):

    """
    Unpack the flat follower state and add the leaders, which move on the
    closed-form target: p_L(t) = p_L(0) + int v_c, v_L = v_c.
    Under law B the leaders report p_hat = p_bar = p and v_hat = v_bar = v_c.

    Returns
    -------
    controllers.SwarmState with (n,d) arrays

    """

    l, f, d = spec.l, spec.n - spec.l, spec.d
    blocks = y.reshape((blocks_of(law), f, d))
    p_L = localization.target_at(traj, t)[:l]
    v_L = localization.target_velocity(traj, t)[:l]
    p = np.vstack([p_L, blocks[0]])
    v = np.vstack([v_L, blocks[1]])
    if law == 'A':
        return controllers.SwarmState(p, v)

    return controllers.SwarmState(p, v,
                                  np.vstack([p_L, blocks[2]]), np.vstack([v_L, blocks[3]]),
                                  np.vstack([p_L, blocks[4]]), np.vstack([v_L, blocks[5]]))


def pack_state(state, spec, law):

    l = spec.l
    fields = [state.p, state.v] if law == 'A' else list(state)

    return np.concatenate([x[l:].reshape(-1) for x in fields])


def initial_state(spec, realization, profile, init, law):

    """
    Initial swarm state.

    Parameters
    ----------
    spec        : formation.FormationSpec
    realization : localization.DesiredRealization
    profile     : velocity profile
    init        : InitConfig
    law         : 'A' or 'B'

    Returns
    -------
    controllers.SwarmState with (n,d) arrays (leaders on their anchors, v_L = v_c(0))

    """

    l, f, d = spec.l, spec.n - spec.l, spec.d
    p_star = realization.p_star
    v_c = profile.velocity(0.)
    v_L = np.tile(v_c, (l, 1))
    rng = np.random.default_rng(init.seed)

    if init.start == 'target':
        p_F = p_star[l:].copy()
        v_F = np.tile(v_c, (f, 1))
        p_hat_F, v_hat_F = p_F.copy(), v_F.copy()
        p_bar_F, v_bar_F = p_F.copy(), v_F.copy()
    else:
        if init.follower_positions is not None:
            p_F = np.array(init.follower_positions, dtype=float).reshape((f, d))
        else:
            p_F = p_star[l:] + rng.uniform(-init.box_half_width, init.box_half_width, (f, d))
        if init.follower_velocities is not None:
            v_F = np.array(init.follower_velocities, dtype=float).reshape((f, d))
        else:
            v_F = np.zeros((f, d))
        p_hat_F = p_F + rng.uniform(-init.estimator_error, init.estimator_error, (f, d))
        v_hat_F = v_F.copy()
        p_bar_F, v_bar_F = p_hat_F.copy(), np.zeros((f, d))

    p = np.vstack([p_star[:l], p_F])
    v = np.vstack([v_L, v_F])
    if law == 'A':
        return controllers.SwarmState(p, v)

    return controllers.SwarmState(p, v,
                                  np.vstack([p_star[:l], p_hat_F]), np.vstack([v_L, v_hat_F]),
                                  np.vstack([p_star[:l], p_bar_F]), np.vstack([v_L, v_bar_F]))


def evaluate(state, spec, edges, gains, options, law):

    if law == 'A':
        return controllers.law_A(state, spec.l, edges, gains, options)

    return controllers.law_B(state, spec.l, edges, gains, options)


def make_rhs(spec, traj, gains, options, law, collision_distance):

    """
    Right-hand side of the closed loop for the flat follower state.
    Law A: (p_F, v_F)' = (v_F, u);
    law B additionally (p_hat_F, v_hat_F, p_bar_F, v_bar_F)' = (v_hat_F, dv_hat, v_bar_F, u_bar).
    """

    edges = formation.edge_arrays(spec)
    l = spec.l

    def rhs(t, y):
        state = full_state(y, t, spec, traj, law)
        formation.neighbor_distances(edges, state.p, collision_distance)
        out = evaluate(state, spec, edges, gains, options, law)
        if law == 'A':
            parts = [state.v[l:], out.u]
        else:
            parts = [state.v[l:], out.u, state.v_hat[l:], out.dv_hat, state.v_bar[l:], out.u_bar]
        return np.concatenate([x.reshape(-1) for x in parts])

    return rhs


def _advise_step(spec, realization, gains, cfg, law):

    ## switching gain * h should stay well below the smallest desired edge length
    k_switch = gains.k2 if law == 'A' else gains.k5
    scale = min(la.norm(realization.p_star[j] - realization.p_star[i]) for (i, j) in spec.edges)
    if k_switch*cfg.step > 1e-2*scale:
        logging.warning('step h={} is coarse for switching gain {}: k*h = {:.3e} vs edge length {:.3e}'
                        .format(cfg.step, k_switch, k_switch*cfg.step, scale))


def simulate(scenario, law=None, partial=False):

    """
    Run one closed-loop simulation.

    Parameters
    ----------
    scenario : IO_scenario.ScenarioConfig (formation, profile, gains, integrator,
               init, controller and output settings)
    law      : 'A' or 'B'; defaults to scenario.law
    partial  : on a collision or numerical blowup, stop and return the samples
               recorded so far (with trace.failure set) instead of raising

    Returns
    -------
    metrics.Trace sampled every scenario.output.decimation steps,
    floor(N/decimation)+1 samples for N = T_end/h steps

    """

    law = law or scenario.law
    spec = scenario.formation
    cfg = scenario.integrator
    gains = scenario.gains
    options = scenario.controller
    controllers.require_valid_gains(gains, law)

    realization = localization.solve_desired_positions(spec)
    traj = localization.target_trajectory(realization, scenario.profile)
    _advise_step(spec, realization, gains, cfg, law)

    edges = formation.edge_arrays(spec)
    rhs = make_rhs(spec, traj, gains, options, law, cfg.collision_distance)
    fd = (spec.n - spec.l)*spec.d

    def name_of(idx):
        return spec.l + (idx % fd)//spec.d

    y = pack_state(initial_state(spec, realization, scenario.profile, scenario.init, law), spec, law)
    h = cfg.step
    nsteps = int(round(cfg.duration/h))
    decimation = scenario.output.decimation

    records = {'t': [], 'p': [], 'v': [], 'p_hat': [], 'v_hat': [], 'p_bar': [], 'v_bar': [],
               's': [], 'u': [], 'u_bar': []}
    samples = []
    logging.info('simulating law {} for {} steps of h = {} ({})'.format(law, nsteps, h, cfg.scheme))
    t0 = time.time()
    failure = None
    for k in range(nsteps + 1):
        t = k*h
        try:
            if k % decimation == 0:
                state = full_state(y, t, spec, traj, law)
                formation.neighbor_distances(edges, state.p, cfg.collision_distance)
                out = evaluate(state, spec, edges, gains, options, law)
                records['t'].append(t)
                for name in ('p', 'v', 'p_hat', 'v_hat', 'p_bar', 'v_bar'):
                    records[name].append(getattr(state, name))
                records['s'].append(out.s)
                records['u'].append(out.u)
                records['u_bar'].append(out.u_bar)
                samples.append(metrics.compute_metrics(state, t, spec, traj, out.s))
            if k == nsteps:
                break
            y = step(y, t, rhs, cfg, name_of)
        except (CollisionError, NumericalBlowupError) as e:
            err = SimulationError(e, t)
            if not partial or not records['t']:
                raise err
            logging.error('run stopped early: {}'.format(err))
            failure = str(err)
            break
    logging.info('simulation finished in {:.2f} s'.format(time.time() - t0))

    def stacked(name):
        return None if records[name][0] is None else np.array(records[name])

    return metrics.Trace(law, np.array(records['t']), stacked('p'), stacked('v'),
                         stacked('p_hat'), stacked('v_hat'), stacked('p_bar'), stacked('v_bar'),
                         stacked('s'), stacked('u'), stacked('u_bar'),
                         metrics.stack_metrics(samples), spec, h, decimation, cfg.duration, failure)
