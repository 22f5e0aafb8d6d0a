import os
import logging
import numpy as np
import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt
import formation
import localization


def plot_trajectories(path, trace, traj):

    """
    Agent paths in the first two coordinates, initial positions as blue squares,
    final positions as red circles, the final desired formation as dashed edges.
    """

    spec = trace.spec
    p = trace.p
    p_star = localization.target_at(traj, trace.t[-1])

    fig, ax = plt.subplots(figsize=(8, 6))
    for (i, j) in formation.constraints(spec)[0]:
        ax.plot(p_star[[i, j], 0], p_star[[i, j], 1], color='0.7', linestyle='--', linewidth=0.8)
    for i in range(spec.n):
        role = 'leader' if i < spec.l else 'follower'
        ax.plot(p[:, i, 0], p[:, i, 1], linestyle='-', label='agent {} ({})'.format(i+1, role))
    ax.scatter(p[0, :, 0], p[0, :, 1], marker='s', s=50, color='tab:blue', zorder=3, label='initial')
    ax.scatter(p[-1, :, 0], p[-1, :, 1], marker='o', s=50, color='tab:red', zorder=3, label='final')
    ax.set_xlabel('x (m)')
    ax.set_ylabel('y (m)')
    ax.set_title('Trajectories, law {}'.format(trace.law))
    ax.set_aspect('equal', adjustable='datalim')
    ax.legend(fontsize='small')
    ax.grid(True)
    fig.savefig(path, format='svg')
    plt.close(fig)


def plot_errors(path, trace):

    """ position errors e_i and bearing errors e_ij against time, on a log scale """

    spec = trace.spec
    m = trace.metrics
    floor = 1e-16

    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(8, 7), sharex=True)
    for i in range(spec.l, spec.n):
        ax1.semilogy(trace.t, np.maximum(m.position_error[:, i], floor), label='e{}'.format(i+1))
    for k, (i, j) in enumerate(spec.edges):
        ax2.semilogy(trace.t, np.maximum(m.bearing_error[:, k], floor), label='e{}{}'.format(i+1, j+1))
    if trace.law == 'B':
        ax1.semilogy(trace.t, np.maximum(m.gamma, floor), 'k--', label='|gamma|')
    ax1.set_ylabel('position error (m$^2$)')
    ax2.set_ylabel('bearing error')
    ax2.set_xlabel('t (s)')
    for ax in (ax1, ax2):
        ax.legend(fontsize='small', ncol=3)
        ax.grid(True)
    fig.savefig(path, format='svg')
    plt.close(fig)


def plot_velocities(path, trace, traj):

    """ one panel per axis: every agent's velocity component and v_c """

    d = trace.spec.d
    v_c = np.array([traj.profile.velocity(t) for t in trace.t])

    fig, axes = plt.subplots(d, 1, figsize=(8, 3*d), sharex=True)
    for a, ax in enumerate(np.atleast_1d(axes)):
        for i in range(trace.spec.n):
            ax.plot(trace.t, trace.v[:, i, a], linewidth=0.8, label='v{}'.format(i+1))
        ax.plot(trace.t, v_c[:, a], 'k--', label='v_c')
        ax.set_ylabel('velocity {} (m/s)'.format('xyz'[a] if a < 3 else a+1))
        ax.legend(fontsize='small', ncol=3)
        ax.grid(True)
    ax.set_xlabel('t (s)')
    fig.savefig(path, format='svg')
    plt.close(fig)


def plot_run(out_dir, trace, traj):

    """ write trajectories.svg, errors.svg and velocities.svg to out_dir """

    names = {'trajectories': os.path.join(out_dir, 'trajectories.svg'),
             'errors': os.path.join(out_dir, 'errors.svg'),
             'velocities': os.path.join(out_dir, 'velocities.svg')}
    plot_trajectories(names['trajectories'], trace, traj)
    plot_errors(names['errors'], trace)
    plot_velocities(names['velocities'], trace, traj)
    logging.info('wrote figures to {}'.format(out_dir))

    return names
