"""
Trace and report files.

trace.csv  : comma separated, one header line, one row per sample.
             Columns, in order (agents 1-based, axes x, y, z, then a4, a5, ...):
               t
               p<i>_<ax>, v<i>_<ax>          every agent, positions then velocities
               s<i>_<ax>, u<i>_<ax>          every follower
               phat<i>_<ax>, vhat<i>_<ax>,
               pbar<i>_<ax>, vbar<i>_<ax>,
               ubar<i>_<ax>                  every follower, law B only
               e<i>                          position error |p_i - p*_i|^2, every agent
               e<i>_<j>                      bearing error |g_ij - g*_ij|^2, every edge
               ev<i>                         velocity error |v_i - v_c|, every follower
               s_norm                        |s_F|
               gamma, delta, ref_p, ref_v    law B only
metrics.yaml : run summary (scenario, settings, final and extreme metric values)
report.yaml  : convergence report
trace.h5     : optional HDF5 dump of every array of the trace
"""

import logging
import numpy as np
import h5py
import yaml
import metrics


def axis_names(d):

    names = ['x', 'y', 'z']
    return names[:d] if d <= 3 else names + ['a{}'.format(k+1) for k in range(3, d)]


def trace_columns(trace):

    """ header names of trace.csv, in column order """

    spec = trace.spec
    axes = axis_names(spec.d)
    agents = range(1, spec.n + 1)
    followers = range(spec.l + 1, spec.n + 1)

    def block(prefix, who):
        return ['{}{}_{}'.format(prefix, i, ax) for i in who for ax in axes]

    cols = ['t'] + block('p', agents) + block('v', agents) + block('s', followers) + block('u', followers)
    if trace.law == 'B':
        for prefix in ('phat', 'vhat', 'pbar', 'vbar', 'ubar'):
            cols += block(prefix, followers)
    cols += ['e{}'.format(i) for i in agents]
    cols += ['e{}_{}'.format(i+1, j+1) for (i, j) in spec.edges]
    cols += ['ev{}'.format(i) for i in followers]
    cols += ['s_norm']
    if trace.law == 'B':
        cols += ['gamma', 'delta', 'ref_p', 'ref_v']

    return cols


def trace_table(trace):

    """ (K, ncols) array in the column order of trace_columns """

    K = len(trace.t)
    l = trace.spec.l
    m = trace.metrics

    def flat(x):
        return x.reshape((K, -1))

    parts = [trace.t[:, None], flat(trace.p), flat(trace.v), flat(trace.s), flat(trace.u)]
    if trace.law == 'B':
        parts += [flat(trace.p_hat[:, l:]), flat(trace.v_hat[:, l:]),
                  flat(trace.p_bar[:, l:]), flat(trace.v_bar[:, l:]), flat(trace.u_bar)]
    parts += [m.position_error, m.bearing_error, m.velocity_error, m.sliding_norm[:, None]]
    if trace.law == 'B':
        parts += [np.column_stack([m.gamma, m.delta, m.ref_position_error, m.ref_velocity_error])]

    return np.hstack(parts)


def write_trace(path, trace):

    cols = trace_columns(trace)
    table = trace_table(trace)
    np.savetxt(path, table, delimiter=',', header=','.join(cols), comments='', fmt='%.17g')
    logging.info('wrote {} samples x {} columns to {}'.format(table.shape[0], table.shape[1], path))


def read_trace(path):

    """
    Returns
    -------
    columns : list of header names
    table   : (K, ncols) ndarray

    """

    with open(path, 'r') as f:
        columns = f.readline().strip().split(',')
        table = np.loadtxt(f, delimiter=',', ndmin=2)
    if table.shape[1] != len(columns):
        raise ValueError('{}: header names {} columns, rows have {}'.format(path, len(columns), table.shape[1]))

    return columns, table


def _plain(x):

    ## numpy scalars and arrays to YAML-friendly Python values
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (np.floating, float)):
        return float(x)
    return x


def run_summary(trace, config, realization):

    """
    Summary of a run: settings, desired realization, final and extreme
    metric values (agent indices 1-based).
    """

    m = trace.metrics
    spec = trace.spec
    mask = metrics.final_window(trace)
    summary = {'scenario': config.name,
               'law': trace.law,
               'seed': config.init.seed,
               'estimator': config.controller.estimator,
               'boundary_layer': config.controller.boundary_layer,
               'scheme': config.integrator.scheme,
               'step': trace.h,
               'duration': trace.duration,
               'decimation': trace.decimation,
               'samples': len(trace.t),
               't_end': trace.t[-1],
               'desired_positions': {'agent{}'.format(i+1): realization.p_star[i] for i in range(spec.n)},
               'final_position_error': {'agent{}'.format(i+1): m.position_error[-1, i] for i in range(spec.n)},
               'final_bearing_error': {'edge{}_{}'.format(i+1, j+1): m.bearing_error[-1, k]
                                       for k, (i, j) in enumerate(spec.edges)},
               'final_velocity_error': {'agent{}'.format(i+1): m.velocity_error[-1, k]
                                        for k, i in enumerate(range(spec.l, spec.n))},
               'window_max': {'position': np.max(m.position_error[mask]),
                              'bearing': np.max(m.bearing_error[mask]),
                              'velocity': np.max(m.velocity_error[mask]),
                              'sliding_norm': np.max(m.sliding_norm[mask])},
               'initial_max': {'position': np.max(m.position_error[0]),
                               'bearing': np.max(m.bearing_error[0]),
                               'velocity': np.max(m.velocity_error[0])}}
    if trace.law == 'B':
        summary['window_max'].update({'gamma': np.max(m.gamma[mask]), 'delta': np.max(m.delta[mask]),
                                      'ref_position': np.max(m.ref_position_error[mask]),
                                      'ref_velocity': np.max(m.ref_velocity_error[mask])})
    if trace.failure is not None:
        summary['failure'] = trace.failure

    return _plain(summary)


def write_yaml(path, data):

    with open(path, 'w') as f:
        yaml.safe_dump(_plain(data), f, default_flow_style=False, sort_keys=False)


def read_yaml(path):

    with open(path, 'r') as f:
        return yaml.safe_load(f)


def write_hdf5(path, trace, scenario_text=None):

    """ dump every array of the trace, with the settings as attributes """

    with h5py.File(path, 'w') as f:
        f.attrs['law'] = trace.law
        f.attrs['h'] = trace.h
        f.attrs['decimation'] = trace.decimation
        f.attrs['duration'] = trace.duration
        f.attrs['n'] = trace.spec.n
        f.attrs['l'] = trace.spec.l
        f.attrs['d'] = trace.spec.d
        f.attrs['edges'] = np.array(trace.spec.edges, dtype=int) + 1
        if trace.spec.leader_bearings:
            f.attrs['leader_bearings'] = np.array(list(trace.spec.leader_bearings), dtype=int) + 1
        if scenario_text is not None:
            f.attrs['scenario'] = scenario_text
        if trace.failure is not None:
            f.attrs['failure'] = trace.failure
        for name in ('t', 'p', 'v', 'p_hat', 'v_hat', 'p_bar', 'v_bar', 's', 'u', 'u_bar'):
            value = getattr(trace, name)
            if value is not None:
                f[name] = value
        group = f.create_group('metrics')
        for name, value in trace.metrics._asdict().items():
            group[name] = np.asarray(value)
    logging.info('wrote HDF5 trace to {}'.format(path))


def read_hdf5(path):

    """ returns (attrs dict, dict of arrays, dict of metric arrays) """

    with h5py.File(path, 'r') as f:
        attrs = dict(f.attrs)
        arrays = {name: f[name][()] for name in f if name != 'metrics'}
        mets = {name: f['metrics'][name][()] for name in f['metrics']}

    return attrs, arrays, mets
