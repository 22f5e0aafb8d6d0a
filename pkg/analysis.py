import logging
from collections import namedtuple
import numpy as np
import numpy.linalg as la
import scipy.linalg as sla
from errors import HypothesisError
import formation
import metrics


"""
Disturbance fields:
func : callable t -> (dd,) disturbance d(t), applied to every block as 1_n (x) d(t)
sup  : sup_t |d(t)|
"""
Disturbance = namedtuple('Disturbance', ['func', 'sup'])
OracleResult = namedtuple('OracleResult', ['settling_time', 'bound', 'V0', 'kappa', 'xi',
                                           'threshold', 'slack', 'passed'])
SlidingCheck = namedtuple('SlidingCheck', ['settling_time', 'bound', 'V0', 'kappa', 'threshold',
                                           'slack', 'band', 'passed'])
Thresholds = namedtuple('Thresholds', ['position', 'bearing', 'velocity', 'estimator'],
                        defaults=(1e-3, 1e-4, 1e-2, 1e-4))

BAND_STEPS = 10        ## one chattering band, in integration steps
MIN_DURATION = 20.     ## runs shorter than this cannot FAIL on thresholds alone
GROWTH_LIMIT = 10.     ## growth factor of an error norm that counts as divergence


def settling_time_bound(V0, kappa, alpha):

    """
    Upper bound on the time at which a Lyapunov function with
    dV/dt <= -kappa V^alpha reaches zero,
        T <= V0^(1-alpha) / (kappa (1-alpha)).

    Parameters
    ----------
    V0    : initial value, V0 >= 0
    kappa : decay constant, kappa > 0
    alpha : exponent in (0,1)

    Returns
    -------
    T : bound in seconds

    """

    if not V0 >= 0:
        raise ValueError('V0={} must be nonnegative'.format(V0))
    if not kappa > 0:
        raise ValueError('kappa={} must be positive'.format(kappa))
    if not 0 < alpha < 1:
        raise ValueError('alpha={} must lie in (0,1)'.format(alpha))

    return V0**(1. - alpha)/(kappa*(1. - alpha))


def _lyapunov_constants(A, x0, xi):

    ## V0 = 0.5 x0^T A^-1 x0 and kappa = xi sqrt(2/lambda_max(A^-1)) = xi sqrt(2 lambda_min(A))
    eigs = sla.eigvalsh(A)
    if not eigs[0] > 0:
        raise HypothesisError('matrix is not positive definite: lambda_min = {:.3e}'.format(eigs[0]))
    V0 = 0.5*x0.dot(sla.cho_solve(sla.cho_factor(A), x0))
    kappa = xi*np.sqrt(2.*eigs[0])

    return V0, kappa, eigs


def finite_time_oracle(A, k, x0, disturbance=None, h=1e-3, threshold=None, t_max=None):

    """
    Simulate x' = -A (k sign(x) + 1_n (x) d(t)) with forward Euler and compare the
    first time |x|_inf drops below threshold with the finite-time bound for
    V = 0.5 x^T A^-1 x, xi = k - sup|d|, kappa = xi sqrt(2/lambda_max(A^-1)), alpha = 1/2.

    Parameters
    ----------
    A           : (m,m) symmetric positive definite matrix
    k           : switching gain
    x0          : (m,) initial state
    disturbance : Disturbance, or None for d = 0
    h           : step
    threshold   : settling threshold on |x|_inf;
                  default BAND_STEPS*h*lambda_max(A)*(k + sup|d|)
    t_max       : give up after this time; default 2*bound + 1

    Returns
    -------
    OracleResult; passed if the simulated time is within the bound plus one
    chattering band of BAND_STEPS steps

    """

    A = 0.5*(np.asarray(A, dtype=float) + np.asarray(A, dtype=float).T)
    x = np.array(x0, dtype=float).reshape(-1)
    sup = 0. if disturbance is None else disturbance.sup
    if not sup < k:
        raise HypothesisError('disturbance bound {:.6g} is not below the gain k={:.6g}'.format(sup, k))

    xi = k - sup
    V0, kappa, eigs = _lyapunov_constants(A, x, xi)
    bound = settling_time_bound(V0, kappa, 0.5)
    if threshold is None:
        threshold = BAND_STEPS*h*eigs[-1]*(k + sup)
    if t_max is None:
        t_max = 2.*bound + 1.
    slack = BAND_STEPS*h

    t = 0.
    settled = None
    nsteps = int(np.ceil(t_max/h))
    for n in range(nsteps + 1):
        t = n*h
        if np.max(np.abs(x), initial=0.) < threshold:
            settled = t
            break
        force = k*np.sign(x)
        if disturbance is not None:
            d = np.atleast_1d(disturbance.func(t))
            force = force + np.tile(d, len(x)//len(d))
        x = x - h*A.dot(force)

    if settled is None:
        settled = np.inf
    passed = bool(settled <= bound + slack)
    logging.debug('finite-time oracle: settled at {:.4f} s, bound {:.4f} s, kappa {:.4g}'
                  .format(settled, bound, kappa))

    return OracleResult(settled, bound, V0, kappa, xi, threshold, slack, passed)


def sliding_settling_check(trace, gains, band_factor=BAND_STEPS):

    """
    Finite-time reaching of the sliding surface in a law A trace.
    V(0) = 0.5 s_F^T B_ff^-1 s_F, kappa = (k2 - delta2 - k1 delta1) sqrt(2/lambda_max(B_ff^-1)),
    alpha = 1/2. The surface counts as reached at the first sample with
    |s_F|_inf < band_factor*k2*h.

    Parameters
    ----------
    trace       : metrics.Trace of a law A run
    gains       : controllers.GainSet
    band_factor : width of the chattering band in steps

    Returns
    -------
    SlidingCheck; band is the largest |s_F|_inf after the surface was reached.
    The slack is one chattering band plus one sampling interval.

    """

    if trace.law != 'A':
        raise ValueError('sliding surface check applies to law A traces')
    B_ff = formation.build_bearing_laplacian(trace.spec).B_ff
    s0 = trace.s[0].reshape(-1)
    xi = gains.k2 - gains.delta2 - gains.k1*gains.delta1
    if not xi > 0:
        raise HypothesisError('k2 - delta2 - k1 delta1 = {:.6g} is not positive'.format(xi))
    V0, kappa, _ = _lyapunov_constants(B_ff, s0, xi)
    bound = settling_time_bound(V0, kappa, 0.5)

    threshold = band_factor*gains.k2*trace.h
    s_inf = np.max(np.abs(trace.s.reshape((len(trace.t), -1))), axis=1)
    below = np.nonzero(s_inf < threshold)[0]
    if len(below):
        settled = trace.t[below[0]]
        band = np.max(s_inf[below[0]:])
    else:
        settled, band = np.inf, np.nan
    slack = (band_factor + trace.decimation)*trace.h
    logging.info('sliding surface reached at {:.3f} s (bound {:.3f} s); chattering band {:.3e} = {:.2f} k2 h'
                 .format(settled, bound, band, band/(gains.k2*trace.h)))

    return SlidingCheck(settled, bound, V0, kappa, threshold, slack, band, bool(settled <= bound + slack))


def fit_decay_rate(t, norms, window=(0.5, 0.9), t_end=None):

    """
    Exponential decay rate r of norms ~ C exp(-r t), by least squares on log(norms)
    over [window[0]*t_end, window[1]*t_end].

    Returns
    -------
    r : fitted rate (positive for decay)

    """

    t = np.asarray(t, dtype=float)
    norms = np.asarray(norms, dtype=float)
    t_end = t[-1] if t_end is None else t_end
    mask = (t >= window[0]*t_end) & (t <= window[1]*t_end) & np.isfinite(norms) & (norms > 0)
    if np.sum(mask) < 2:
        raise ValueError('not enough positive samples in the fit window')
    slope, _ = np.polyfit(t[mask], np.log(norms[mask]), 1)

    return -slope


def cascade_matrix(k1, k2, m):

    """ system matrix [[0, I], [-k1 I, -k2 I]] of the tracking errors (x, y) for stacked dimension m """

    I = np.eye(m)

    return np.block([[np.zeros((m, m)), I], [-k1*I, -k2*I]])


def spectral_abscissa(M):

    return np.max(la.eigvals(M).real)


def _first_crossing(t, series, threshold):

    ## first sample below threshold, and first sample after which it stays below
    below = series < threshold
    if not np.any(below):
        return None, None
    first = float(t[np.argmax(below)])
    above = np.nonzero(~below)[0]
    if not len(above):
        return first, float(t[0])
    if above[-1] == len(t) - 1:
        return first, None

    return first, float(t[above[-1] + 1])


def _max_rebound(series):

    ## largest ratio of a later value to the running minimum before it
    with np.errstate(divide='ignore', invalid='ignore'):
        ratio = series[1:]/np.minimum.accumulate(series)[:-1]
    ratio = ratio[np.isfinite(ratio)]

    return float(np.max(ratio)) if len(ratio) else 1.


def _growth(series):

    ## final value relative to the initial one
    if not (np.isfinite(series[0]) and series[0] > 0):
        return np.nan
    return float(series[-1]/series[0])


def convergence_report(trace, thresholds=Thresholds(), min_duration=MIN_DURATION, window=0.1):

    """
    Summarize a trace against the convergence thresholds.

    Parameters
    ----------
    trace        : metrics.Trace
    thresholds   : Thresholds for position (m^2), bearing, velocity (m/s) and
                   estimator (law B) errors
    min_duration : traces ending before this time report INCONCLUSIVE instead of FAIL
    window       : final fraction of the run used for the maxima

    Returns
    -------
    report : dict with status (PASS, FAIL or INCONCLUSIVE), final-window maxima,
             first-crossing and settling times, rebound ratios, decay rates,
             growth of the estimator error and a divergence flag

    """

    m = trace.metrics
    t = trace.t
    series = {'position': np.max(m.position_error, axis=1),
              'bearing': np.max(m.bearing_error, axis=1),
              'velocity': np.max(m.velocity_error, axis=1)}
    limits = {'position': thresholds.position, 'bearing': thresholds.bearing,
              'velocity': thresholds.velocity}
    if trace.law == 'B':
        series['gamma'] = m.gamma
        series['delta'] = m.delta
        limits['gamma'] = limits['delta'] = thresholds.estimator
    sliding = m.sliding_norm

    mask = metrics.final_window(trace, window)
    finite = all(np.all(np.isfinite(x)) for x in series.values()) and not np.any(m.collision)
    final = {name: float(np.max(x[mask])) for name, x in series.items()}
    passed = {name: bool(final[name] <= limits[name]) for name in series}

    crossings = {}
    for name, x in series.items():
        first, settled = _first_crossing(t, x, limits[name])
        crossings[name] = {'first': first, 'settled': settled}

    norms = {'position': np.sqrt(np.sum(m.position_error, axis=1))}
    if trace.law == 'B':
        norms['estimator'] = np.hypot(m.gamma, m.delta)
    rates = {}
    for name, x in norms.items():
        try:
            rates[name] = float(fit_decay_rate(t, x, t_end=trace.duration))
        except ValueError:
            rates[name] = None

    growth = {name: _growth(x) for name, x in norms.items()}
    diverged = (trace.failure is not None or not finite
                or any(g > GROWTH_LIMIT for g in growth.values() if np.isfinite(g)))

    if diverged:
        status = 'FAIL'
    elif all(passed.values()):
        status = 'PASS'
    elif t[-1] < min_duration:
        status = 'INCONCLUSIVE'
    else:
        status = 'FAIL'

    report = {'status': status,
              'law': trace.law,
              't_end': float(t[-1]),
              'samples': int(len(t)),
              'thresholds': dict(limits),
              'final_max': final,
              'passed': passed,
              'crossings': crossings,
              'max_rebound': {name: _max_rebound(x) for name, x in series.items()},
              'sliding_norm_final': float(np.max(sliding[mask])),
              'decay_rates': rates,
              'growth': {name: (None if np.isnan(g) else g) for name, g in growth.items()},
              'diverged': bool(diverged),
              'failure': trace.failure}
    logging.info('convergence: {} (final maxima {})'.format(
        status, ', '.join('{} {:.3e}'.format(k, v) for k, v in final.items())))

    return report
