import os, sys, time, argparse, logging
from concurrent.futures import ProcessPoolExecutor
import numpy as np
import yaml
from errors import BearingSimError, SimulationError
import formation
import localization
import controllers
import integrator
import analysis
import IO_scenario
import IO_trace
import plotting


OUTPUT_FILES = ('trace.csv', 'metrics.yaml', 'report.yaml',
                'trajectories.svg', 'errors.svg', 'velocities.svg')
LAW_FLAGS = {'printed-estimator': 'printed'}


def setup_logging(logfile=None):

    if logfile:
        logging.basicConfig(filename=logfile, filemode='w', format='%(levelname)s:%(message)s', level=logging.DEBUG)
        console = logging.StreamHandler()
        console.setLevel(logging.INFO)
        console.setFormatter(logging.Formatter('%(levelname)s:%(message)s'))
        logging.getLogger('').addHandler(console)
    else:
        logging.basicConfig(format='%(levelname)s:%(message)s', level=logging.INFO)


def overrides_of(args):

    """ command-line overrides as keyword arguments of IO_scenario.apply_overrides """

    return {'seed': args.seed, 'law': args.law, 'boundary_layer': args.boundary_layer,
            'estimator': LAW_FLAGS.get(args.law_flag), 'decimation': args.decimation}


def load_config(args, validate=True):

    path = args.scenario or args.scenario_pos
    if path is None:
        raise BearingSimError('no scenario given; use --scenario <path> or a bundled name (sim1, sim2)')
    config = IO_scenario.load_scenario(path, validate=validate)
    overrides = overrides_of(args)
    if validate:
        config = IO_scenario.apply_overrides(config, **overrides)

    return config


def formation_analysis(spec):

    """
    Desired realization, rigidity of (G,p*), definiteness of B_ff and,
    for the estimator, the spectral abscissae of the error matrices.
    """

    realization = localization.solve_desired_positions(spec)
    rigidity = formation.check_infinitesimal_bearing_rigidity(spec, realization.p_star)
    definite = formation.check_positive_definite_bff(spec, require_leaders=False)
    L_ff = formation.build_laplacian(spec).L_ff

    return {'desired_positions': {'agent{}'.format(i+1): realization.p_star[i] for i in range(spec.n)},
            'localization_residual': realization.residual,
            'bearing_constraints': len(formation.constraints(spec)[0]),
            'rigid': rigidity.rigid,
            'rank': rigidity.rank,
            'expected_rank': rigidity.expected_rank,
            'nullity': rigidity.nullity,
            'singular_values': rigidity.singular_values,
            'bff_positive_definite': definite.ok,
            'bff_lambda_min': definite.lambda_min,
            'bff_lambda_max': definite.lambda_max,
            'follower_laplacian': L_ff}, realization


def estimator_analysis(spec, gains):

    L_ff = formation.build_laplacian(spec).L_ff
    corrected = controllers.estimator_spectral_abscissa(L_ff, gains.k3, gains.k6, spec.d)
    literal = controllers.estimator_spectral_abscissa(L_ff, gains.k3, gains.k6, spec.d, literal=True)
    cascade = analysis.spectral_abscissa(analysis.cascade_matrix(gains.k1, gains.k2, spec.d*(spec.n - spec.l)))
    logging.info('estimator error matrix: max Re = {:.4f} (corrected), {:.4f} (printed sign)'
                 .format(corrected, literal))

    return {'max_real_corrected': corrected, 'max_real_literal': literal,
            'tracking_cascade_max_real': cascade}


def run_scenario(config, out_dir, hdf5=False):

    """
    Simulate a validated scenario and write the trace, summary, report and figures
    into out_dir.

    Returns
    -------
    report : dict, the content of report.yaml

    """

    os.makedirs(out_dir, exist_ok=True)
    t0 = time.time()
    check, realization = formation_analysis(config.formation)
    trace = integrator.simulate(config, partial=True)
    traj = localization.target_trajectory(realization, config.profile)

    report = analysis.convergence_report(trace, config.checks.thresholds, config.checks.min_duration)
    report['scenario'] = config.name
    report['seed'] = config.init.seed
    report['estimator'] = config.controller.estimator
    report['formation'] = {key: check[key] for key in ('rigid', 'rank', 'expected_rank',
                                                       'bff_lambda_min', 'bff_lambda_max')}
    report['gain_margin'] = controllers.validate_gains(config.gains, trace.law).margin
    if trace.law == 'A' and trace.failure is None:
        sliding = analysis.sliding_settling_check(trace, config.gains)
        report['sliding_surface'] = sliding._asdict()
    if trace.law == 'B':
        report['estimator_eigenvalues'] = estimator_analysis(config.formation, config.gains)

    IO_trace.write_trace(os.path.join(out_dir, 'trace.csv'), trace)
    IO_trace.write_yaml(os.path.join(out_dir, 'metrics.yaml'), IO_trace.run_summary(trace, config, realization))
    IO_trace.write_yaml(os.path.join(out_dir, 'report.yaml'), report)
    plotting.plot_run(out_dir, trace, traj)
    if hdf5 or config.output.hdf5:
        text = yaml.safe_dump(IO_scenario.scenario_to_dict(config), sort_keys=False)
        IO_trace.write_hdf5(os.path.join(out_dir, 'trace.h5'), trace, text)
    logging.info('run {} finished in {:.2f} s: {}'.format(config.name, time.time() - t0, report['status']))

    return report


def cmd_check(args):

    config = load_config(args)
    check, _ = formation_analysis(config.formation)
    gains = controllers.validate_gains(config.gains, config.law)
    logging.info('scenario {} is valid: law {}, rank(B) = {} (expected {}), lambda_min(B_ff) = {:.4f}, '
                 'gain margin {:.4f}'.format(config.name, config.law, check['rank'], check['expected_rank'],
                                             check['bff_lambda_min'], gains.margin))
    if config.law == 'B':
        estimator_analysis(config.formation, config.gains)

    return 0


def cmd_rigidity(args):

    config = load_config(args, validate=False)
    try:
        check, _ = formation_analysis(config.formation)
    except BearingSimError as e:
        logging.error('formation analysis failed: {}'.format(e))
        return 1
    logging.info('rank(B) = {}, expected {} (nullity {}); B_ff eigenvalues in [{:.4f}, {:.4f}]'
                 .format(check['rank'], check['expected_rank'], check['nullity'],
                         check['bff_lambda_min'], check['bff_lambda_max']))
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        IO_trace.write_yaml(os.path.join(args.out, 'rigidity.yaml'), check)

    return 0 if check['rigid'] and check['bff_positive_definite'] else 1


def cmd_run(args):

    config = load_config(args)
    out_dir = args.out or os.path.join('runs', config.name)
    report = run_scenario(config, out_dir, args.hdf5)
    if report['diverged']:
        logging.error('run diverged: {}'.format(report['failure'] or 'error growth over {}x'
                                                .format(analysis.GROWTH_LIMIT)))
        return 1
    if args.assert_convergence and report['status'] != 'PASS':
        logging.error('convergence status {}'.format(report['status']))
        return 1

    return 0


def _sweep_job(job):

    ## runs in a worker process; every run writes to its own directory
    path, overrides, seed, out_dir, hdf5 = job
    config = IO_scenario.apply_overrides(IO_scenario.load_scenario(path), **dict(overrides, seed=seed))
    try:
        report = run_scenario(config, out_dir, hdf5)
    except SimulationError as e:
        return {'seed': seed, 'status': 'FAIL', 'diverged': True, 'failure': str(e), 'final_max': {}}

    return {key: report[key] for key in ('seed', 'status', 'diverged', 'failure', 'final_max')}


def aggregate(results):

    """ min/max/mean of every final-window maximum over the runs """

    names = sorted({name for r in results for name in r['final_max']})
    stats = {}
    for name in names:
        values = np.array([r['final_max'][name] for r in results if name in r['final_max']])
        stats[name] = {'min': values.min(), 'max': values.max(), 'mean': values.mean()}
    counts = {status: sum(r['status'] == status for r in results) for status in ('PASS', 'FAIL', 'INCONCLUSIVE')}

    return {'runs': len(results), 'status_counts': counts, 'final_max': stats}


def cmd_sweep(args):

    config = load_config(args)
    if args.seeds:
        seeds = list(args.seeds)
    else:
        base = config.init.seed
        seeds = list(range(base, base + args.n_seeds))
    out_dir = args.out or os.path.join('runs', config.name + '_sweep')
    path = IO_scenario.resolve_scenario(args.scenario or args.scenario_pos)
    overrides = overrides_of(args)
    overrides.pop('seed')
    jobs = [(path, overrides, seed, os.path.join(out_dir, 'seed_{}'.format(seed)), args.hdf5) for seed in seeds]

    logging.info('sweeping {} seeds of {} with {} workers'.format(len(seeds), config.name, args.workers))
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_sweep_job, jobs))
    else:
        results = [_sweep_job(job) for job in jobs]

    summary = aggregate(results)
    summary['scenario'] = config.name
    summary['seeds'] = seeds
    summary['results'] = results
    os.makedirs(out_dir, exist_ok=True)
    IO_trace.write_yaml(os.path.join(out_dir, 'sweep.yaml'), summary)
    logging.info('sweep finished: {}'.format(summary['status_counts']))

    if any(r['diverged'] for r in results):
        return 1
    if args.assert_convergence and summary['status_counts']['PASS'] != len(results):
        return 1

    return 0


def build_parser():

    parser = argparse.ArgumentParser(description='Bearing-based leader-follower formation tracking: '
                                     'scenario checks, simulation runs, seed sweeps and rigidity analysis.')
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('scenario_pos', nargs='?', metavar='scenario',
                        help='scenario file, or a bundled scenario name (sim1, sim2)')
    common.add_argument('--scenario', help='scenario file, or a bundled scenario name')
    common.add_argument('--out', help='output directory')
    common.add_argument('--seed', type=int, help='(int) seed of the random initial positions')
    common.add_argument('--law', choices=IO_scenario.LAWS, help='override the control law')
    common.add_argument('--boundary-layer', type=float,
                        help='(float) width of the saturation replacing sign(.); 0 for pure sign')
    common.add_argument('--law-flag', choices=sorted(LAW_FLAGS),
                        help='run a variant of the control law')
    common.add_argument('--decimation', type=int, help='(int) integration steps between trace samples')
    common.add_argument('--assert-convergence', action='store_true',
                        help='exit with status 1 unless the convergence report says PASS')
    common.add_argument('--hdf5', action='store_true', help='also write trace.h5')
    common.add_argument('--logfile', help='logfile to save to')

    sub = parser.add_subparsers(dest='command')
    sub.required = True
    sub.add_parser('check', parents=[common], help='validate a scenario without simulating').set_defaults(func=cmd_check)
    sub.add_parser('run', parents=[common], help='simulate a scenario and write trace, reports and figures'
                   ).set_defaults(func=cmd_run)
    sub.add_parser('rigidity', parents=[common], help='bearing rigidity analysis of the desired formation'
                   ).set_defaults(func=cmd_rigidity)
    sweep = sub.add_parser('sweep', parents=[common], help='run a scenario for several seeds')
    sweep.add_argument('--seeds', type=int, nargs='+', help='(int) explicit list of seeds')
    sweep.add_argument('--n-seeds', type=int, default=5, help='(int) number of consecutive seeds. Default is 5.')
    sweep.add_argument('--workers', type=int, default=1, help='(int) worker processes. Default is 1.')
    sweep.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None):

    args = build_parser().parse_args(argv)
    setup_logging(args.logfile)
    try:
        return args.func(args)
    except SimulationError as e:
        logging.error('simulation failed: {}'.format(e))
        return 1
    except BearingSimError as e:
        logging.error('invalid scenario: {}'.format(e))
        return 2


if __name__ == '__main__':

    sys.exit(main())
