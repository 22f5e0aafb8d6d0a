"""
Reading and writing of scenario files.

A scenario is a YAML document with the sections
    name, law, formation, velocity_profile, gains, reconstructed,
    integrator, initialization, controller, output, checks
Agent indices in the file are 1-based, leaders come first.
Every problem found while loading is collected and reported at once
as a ScenarioError, each line prefixed by its dotted field path
(and the line in the file, where known).
"""

import os
import logging
from collections import namedtuple
import numpy as np
import yaml
from errors import ConfigError, ScenarioError, NotLocalizableError, AmbiguousRigidityError
import formation
import localization
import controllers
import integrator
import analysis


SCENARIO_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'scenarios')
LAWS = ('A', 'B')
GAIN_NAMES = ('k1', 'k2', 'k3', 'k4', 'k5', 'k6', 'delta1', 'delta2')

OutputConfig = namedtuple('OutputConfig', ['decimation', 'hdf5'], defaults=(1, False))
CheckConfig = namedtuple('CheckConfig', ['thresholds', 'min_duration', 'allow_nonrigid'],
                         defaults=(analysis.Thresholds(), analysis.MIN_DURATION, False))
ScenarioConfig = namedtuple('ScenarioConfig', ['name', 'law', 'formation', 'profile', 'gains',
                                               'reconstructed', 'integrator', 'init', 'controller',
                                               'output', 'checks'])

SECTIONS = {'name', 'law', 'formation', 'velocity_profile', 'gains', 'reconstructed',
            'integrator', 'initialization', 'controller', 'output', 'checks'}
FORMATION_KEYS = {'dimension', 'agents', 'leaders', 'leader_positions', 'edges', 'leader_bearings', 'renormalize'}
EDGE_KEYS = {'from', 'to', 'bearing'}
INTEGRATOR_KEYS = set(integrator.IntegratorConfig._fields)
INIT_KEYS = set(integrator.InitConfig._fields)
CONTROLLER_KEYS = set(controllers.ControllerOptions._fields)
OUTPUT_KEYS = set(OutputConfig._fields)
CHECK_KEYS = set(analysis.Thresholds._fields) | {'min_duration', 'allow_nonrigid'}


def resolve_scenario(path):

    """ path of a scenario file; bare names such as sim1 refer to the bundled scenarios """

    if os.path.isfile(path):
        return path
    bundled = os.path.join(SCENARIO_DIR, path if path.endswith('.yaml') else path + '.yaml')
    if os.path.isfile(bundled):
        return bundled
    raise ConfigError('no scenario file {!r}'.format(path))


def _line_index(node, path='', index=None):

    ## dotted field path -> 1-based line of its value in the document
    if index is None:
        index = {}
    if isinstance(node, yaml.MappingNode):
        for key, value in node.value:
            child = '{}.{}'.format(path, key.value) if path else str(key.value)
            index[child] = key.start_mark.line + 1
            _line_index(value, child, index)
    elif isinstance(node, yaml.SequenceNode):
        for k, value in enumerate(node.value):
            index['{}[{}]'.format(path, k)] = value.start_mark.line + 1
            _line_index(value, '{}[{}]'.format(path, k), index)

    return index


class _Collector:

    """ gathers violations with their field path and line """

    def __init__(self, lines):
        self.lines = lines
        self.violations = []

    def add(self, field, message):
        line = self.lines.get(field)
        prefix = 'line {}: '.format(line) if line is not None else ''
        self.violations.append('{}{}: {}'.format(prefix, field, message))

    def section(self, data, name, allowed, required=False):
        sec = data.get(name)
        if sec is None:
            if required:
                self.add(name, 'section is missing')
            return {}
        if not isinstance(sec, dict):
            self.add(name, 'expected a mapping, got {}'.format(type(sec).__name__))
            return {}
        for key in sorted(set(sec) - allowed, key=str):
            self.add('{}.{}'.format(name, key), 'unknown key')
        return sec

    def number(self, sec, name, key, default=None, kind=float, required=False):
        field = '{}.{}'.format(name, key)
        if key in sec and sec[key] is None:
            self.add(field, 'expected a number, got null')
            return None
        value = sec.get(key, default)
        if value is None:
            if required:
                self.add(field, 'value is missing')
            return None
        if isinstance(value, bool):
            self.add(field, 'expected a number, got {!r}'.format(value))
            return None
        try:
            out = kind(value)
        except (TypeError, ValueError):
            self.add(field, 'expected a number, got {!r}'.format(value))
            return None
        if kind is int and out != value:
            self.add(field, 'expected an integer, got {!r}'.format(value))
            return None
        return out

    def array(self, value, field, shape=None):
        try:
            out = np.array(value, dtype=float)
        except (TypeError, ValueError):
            self.add(field, 'expected numbers, got {!r}'.format(value))
            return None
        if shape is not None and out.shape != shape:
            self.add(field, 'has shape {}, expected {}'.format(out.shape, shape))
            return None
        return out


def _parse_pairs(raw, name, d, c):

    ## list of {from, to, bearing} entries -> 0-based pairs and their bearings
    pairs, bearings = [], {}
    for k, entry in enumerate(raw):
        field = '{}[{}]'.format(name, k)
        if not isinstance(entry, dict):
            c.add(field, 'expected a mapping with from, to and bearing')
            continue
        for key in sorted(set(entry) - EDGE_KEYS, key=str):
            c.add('{}.{}'.format(field, key), 'unknown key')
        i = c.number(entry, field, 'from', kind=int, required=True)
        j = c.number(entry, field, 'to', kind=int, required=True)
        g = c.array(entry.get('bearing'), field + '.bearing', (d,))
        if None in (i, j) or g is None:
            continue
        pairs.append((i - 1, j - 1))
        bearings[(i - 1, j - 1)] = g

    return pairs, bearings


def _parse_formation(data, c):

    sec = c.section(data, 'formation', FORMATION_KEYS, required=True)
    if not sec:
        return None
    d = c.number(sec, 'formation', 'dimension', kind=int, required=True)
    n = c.number(sec, 'formation', 'agents', kind=int, required=True)
    l = c.number(sec, 'formation', 'leaders', kind=int, required=True)
    if None in (d, n, l):
        return None
    leader_pos = c.array(sec.get('leader_positions'), 'formation.leader_positions', (l, d))

    raw = sec.get('edges')
    if not isinstance(raw, list) or not raw:
        c.add('formation.edges', 'expected a non-empty list of edges')
        return None
    edges, bearings = _parse_pairs(raw, 'formation.edges', d, c)
    fixed = sec.get('leader_bearings') or []
    if not isinstance(fixed, list):
        c.add('formation.leader_bearings', 'expected a list of leader pairs')
        return None
    leader_pairs, leader_bearings = _parse_pairs(fixed, 'formation.leader_bearings', d, c)
    if leader_pos is None or len(edges) != len(raw) or len(leader_pairs) != len(fixed):
        return None

    renormalize = bool(sec.get('renormalize', False))
    spec = formation.make_formation(d, n, l, edges, bearings, leader_pos,
                                    renormalize=renormalize, validate=False,
                                    leader_bearings=leader_bearings)
    for message in formation.formation_violations(spec):
        c.add('formation', message)

    return spec


def _parse_profile(data, c):

    sec = data.get('velocity_profile')
    if not isinstance(sec, dict) or 'kind' not in sec:
        c.add('velocity_profile', 'expected a mapping with a kind')
        return None
    params = {key: value for key, value in sec.items() if key != 'kind'}
    try:
        return localization.make_profile(sec['kind'], **params)
    except (ConfigError, ValueError) as e:
        c.add('velocity_profile', str(e))
        return None


def _parse_gains(data, c, profile):

    sec = c.section(data, 'gains', set(GAIN_NAMES), required=True)
    values = {name: c.number(sec, 'gains', name) for name in GAIN_NAMES}
    if profile is not None:
        for name in ('delta1', 'delta2'):
            bound = getattr(profile, name)
            if values[name] is None:
                values[name] = float(bound)
            elif values[name] < bound - 1e-12:
                c.add('gains.' + name, '{:g} is below the bound {:.6g} of the velocity profile'
                      .format(values[name], bound))

    return controllers.GainSet(**values)


def _parse_integrator(data, c):

    sec = c.section(data, 'integrator', INTEGRATOR_KEYS)
    defaults = integrator.IntegratorConfig()
    cfg = integrator.IntegratorConfig(
        str(sec.get('scheme', defaults.scheme)),
        c.number(sec, 'integrator', 'step', defaults.step),
        c.number(sec, 'integrator', 'duration', defaults.duration),
        c.number(sec, 'integrator', 'collision_distance', defaults.collision_distance))
    if None in cfg:
        return None
    for message in integrator.integrator_violations(cfg):
        c.add('integrator', message)

    return cfg


def _parse_init(data, c, spec):

    sec = c.section(data, 'initialization', INIT_KEYS)
    defaults = integrator.InitConfig()
    start = sec.get('start', defaults.start)
    if start not in ('random', 'target'):
        c.add('initialization.start', 'expected random or target, got {!r}'.format(start))
    seed = c.number(sec, 'initialization', 'seed', defaults.seed, kind=int)
    if seed is not None and seed < 0:
        c.add('initialization.seed', 'must be nonnegative')
    width = c.number(sec, 'initialization', 'box_half_width', defaults.box_half_width)
    if width is not None and width < 0:
        c.add('initialization.box_half_width', 'must be nonnegative')
    offset = c.number(sec, 'initialization', 'estimator_error', defaults.estimator_error)
    if offset is not None and offset < 0:
        c.add('initialization.estimator_error', 'must be nonnegative')

    explicit = {}
    for key in ('follower_positions', 'follower_velocities'):
        value = sec.get(key)
        if value is None or spec is None:
            explicit[key] = None
            continue
        arr = c.array(value, 'initialization.' + key, (spec.n - spec.l, spec.d))
        explicit[key] = None if arr is None else arr

    return integrator.InitConfig(start, seed, width, explicit['follower_positions'],
                                 explicit['follower_velocities'], offset)


def _parse_controller(data, c):

    sec = c.section(data, 'controller', CONTROLLER_KEYS)
    layer = c.number(sec, 'controller', 'boundary_layer', 0.)
    if layer is not None and layer < 0:
        c.add('controller.boundary_layer', 'must be nonnegative')
    estimator = sec.get('estimator', 'corrected')
    if estimator not in controllers.ESTIMATORS:
        c.add('controller.estimator', 'expected one of {}, got {!r}'.format(controllers.ESTIMATORS, estimator))

    return controllers.ControllerOptions(layer, estimator)


def _parse_output(data, c):

    sec = c.section(data, 'output', OUTPUT_KEYS)
    decimation = c.number(sec, 'output', 'decimation', 1, kind=int)
    if decimation is not None and decimation < 1:
        c.add('output.decimation', 'must be at least 1')

    return OutputConfig(decimation, bool(sec.get('hdf5', False)))


def _parse_checks(data, c):

    sec = c.section(data, 'checks', CHECK_KEYS)
    defaults = analysis.Thresholds()
    thresholds = analysis.Thresholds(*[c.number(sec, 'checks', name, getattr(defaults, name))
                                       for name in analysis.Thresholds._fields])
    min_duration = c.number(sec, 'checks', 'min_duration', analysis.MIN_DURATION)

    return CheckConfig(thresholds, min_duration, bool(sec.get('allow_nonrigid', False)))


def scenario_from_dict(data, lines=None, validate=True):

    """
    Build a ScenarioConfig from the parsed YAML document.

    Parameters
    ----------
    data     : dict as returned by yaml.safe_load
    lines    : dotted field path -> line number, for the messages
    validate : run the cross-validation of validate_scenario

    Returns
    -------
    ScenarioConfig

    """

    c = _Collector(lines or {})
    if not isinstance(data, dict):
        raise ScenarioError(['scenario: expected a mapping at the top level'])
    for key in sorted(set(data) - SECTIONS, key=str):
        c.add(str(key), 'unknown key')

    law = data.get('law')
    if law not in LAWS:
        c.add('law', 'expected A or B, got {!r}'.format(law))
    spec = _parse_formation(data, c)
    profile = _parse_profile(data, c)
    if spec is not None and profile is not None and len(profile.velocity(0.)) != spec.d:
        c.add('velocity_profile', 'velocity has dimension {}, formation has {}'
              .format(len(profile.velocity(0.)), spec.d))
    gains = _parse_gains(data, c, profile)

    reconstructed = data.get('reconstructed') or []
    if not isinstance(reconstructed, list):
        c.add('reconstructed', 'expected a list of gain names')
        reconstructed = []
    for name in reconstructed:
        if name not in GAIN_NAMES:
            c.add('reconstructed', 'unknown gain {!r}'.format(name))

    config = ScenarioConfig(str(data.get('name', 'scenario')), law, spec, profile, gains,
                            tuple(reconstructed), _parse_integrator(data, c), _parse_init(data, c, spec),
                            _parse_controller(data, c), _parse_output(data, c), _parse_checks(data, c))
    if c.violations:
        raise ScenarioError(c.violations)

    return validate_scenario(config, lines) if validate else config


def validate_scenario(config, lines=None):

    """
    Cross-validation of a complete scenario: gain inequalities of the chosen law,
    localizability and infinitesimal bearing rigidity of the desired formation
    (unless checks.allow_nonrigid is set).

    Returns
    -------
    config, unchanged; raises ScenarioError with every violation otherwise

    """

    c = _Collector(lines or {})
    check = controllers.validate_gains(config.gains, config.law) if config.law in LAWS else None
    if check is not None:
        for message in check.violations:
            c.add('gains', message)
    for message in formation.formation_violations(config.formation):
        c.add('formation', message)
    if not c.violations:
        try:
            realization = localization.solve_desired_positions(config.formation)
            report = formation.check_infinitesimal_bearing_rigidity(config.formation, realization.p_star)
            if not report.rigid:
                message = 'desired formation is not infinitesimally bearing rigid: rank(B)={}, expected {}'.format(
                    report.rank, report.expected_rank)
                if config.checks.allow_nonrigid:
                    logging.warning(message)
                else:
                    c.add('formation', message)
        except (NotLocalizableError, AmbiguousRigidityError) as e:
            c.add('formation', str(e))
    if c.violations:
        raise ScenarioError(c.violations)
    for name in config.reconstructed:
        logging.info('gain {} = {} is a reconstructed value'.format(name, getattr(config.gains, name)))
    if getattr(config.profile, 'max_jump', 0.) > 0:
        logging.warning('velocity profile jumps by up to {:.4g} m/s; delta2 bounds the pieces between jumps only'
                        .format(config.profile.max_jump))

    return config


def load_scenario(path, validate=True):

    """
    Read and validate a scenario file.

    Parameters
    ----------
    path     : file name, or the name of a bundled scenario (sim1, sim2)
    validate : cross-validate gains, localizability and rigidity

    Returns
    -------
    ScenarioConfig

    """

    path = resolve_scenario(path)
    with open(path, 'r') as f:
        text = f.read()
    try:
        data = yaml.safe_load(text)
        lines = _line_index(yaml.compose(text)) if data else {}
    except yaml.YAMLError as e:
        mark = getattr(e, 'problem_mark', None)
        raise ConfigError('cannot parse {}: {}'.format(path, getattr(e, 'problem', e)),
                          line=None if mark is None else mark.line + 1)
    logging.info('loading scenario {}'.format(path))

    return scenario_from_dict(data, lines, validate)


def apply_overrides(config, seed=None, law=None, boundary_layer=None, estimator=None,
                    decimation=None, scheme=None, step=None, duration=None):

    """ replace the given settings and re-validate the whole scenario """

    violations = []
    if law is not None:
        config = config._replace(law=law)
    if seed is not None:
        config = config._replace(init=config.init._replace(seed=int(seed)))
    if boundary_layer is not None:
        if boundary_layer < 0:
            violations.append('controller.boundary_layer: must be nonnegative')
        config = config._replace(controller=config.controller._replace(boundary_layer=float(boundary_layer)))
    if estimator is not None:
        if estimator not in controllers.ESTIMATORS:
            violations.append('controller.estimator: expected one of {}'.format(controllers.ESTIMATORS))
        config = config._replace(controller=config.controller._replace(estimator=estimator))
    if decimation is not None:
        if decimation < 1:
            violations.append('output.decimation: must be at least 1')
        config = config._replace(output=config.output._replace(decimation=int(decimation)))
    updates = {key: value for key, value in (('scheme', scheme), ('step', step), ('duration', duration))
               if value is not None}
    if updates:
        config = config._replace(integrator=config.integrator._replace(**updates))
        violations += integrator.integrator_violations(config.integrator)
    if violations:
        raise ScenarioError(violations)

    return validate_scenario(config)


def _floats(x):

    return None if x is None else np.asarray(x, dtype=float).tolist()


def scenario_to_dict(config):

    """ inverse of scenario_from_dict, with 1-based agent indices and plain Python values """

    spec = config.formation
    def entries(bearings):
        return [{'from': i + 1, 'to': j + 1, 'bearing': _floats(g)} for (i, j), g in bearings.items()]

    profile = {'kind': config.profile.kind}
    profile.update(config.profile.params())
    init = {'start': config.init.start, 'seed': int(config.init.seed),
            'box_half_width': float(config.init.box_half_width),
            'follower_positions': _floats(config.init.follower_positions),
            'follower_velocities': _floats(config.init.follower_velocities),
            'estimator_error': float(config.init.estimator_error)}

    return {'name': config.name,
            'law': config.law,
            'formation': {'dimension': spec.d, 'agents': spec.n, 'leaders': spec.l,
                          'leader_positions': _floats(spec.leader_pos),
                          'edges': entries({e: spec.bearings[e] for e in spec.edges}),
                          'leader_bearings': entries(spec.leader_bearings or {}),
                          'renormalize': False},
            'velocity_profile': profile,
            'gains': {name: float(getattr(config.gains, name)) for name in GAIN_NAMES
                      if getattr(config.gains, name) is not None},
            'reconstructed': list(config.reconstructed),
            'integrator': {'scheme': config.integrator.scheme, 'step': float(config.integrator.step),
                           'duration': float(config.integrator.duration),
                           'collision_distance': float(config.integrator.collision_distance)},
            'initialization': {key: value for key, value in init.items() if value is not None},
            'controller': {'boundary_layer': float(config.controller.boundary_layer),
                           'estimator': config.controller.estimator},
            'output': {'decimation': int(config.output.decimation), 'hdf5': bool(config.output.hdf5)},
            'checks': dict([(name, float(value)) for name, value in config.checks.thresholds._asdict().items()]
                           + [('min_duration', float(config.checks.min_duration)),
                              ('allow_nonrigid', bool(config.checks.allow_nonrigid))])}


def dump_scenario(config, path):

    with open(path, 'w') as f:
        yaml.safe_dump(scenario_to_dict(config), f, default_flow_style=None, sort_keys=False)
