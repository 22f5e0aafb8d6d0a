import logging
from collections import namedtuple
import numpy as np
import numpy.linalg as la
import scipy.linalg as sla
from errors import (InvalidBearingError, CollisionError, FormationError,
                    HypothesisError, AmbiguousRigidityError)


BEARING_TOL = 1e-9      ## allowed deviation of |g| from 1
RANK_RTOL = 1e-8        ## singular values below RANK_RTOL*sigma_max count as zero
AMBIGUOUS_FACTOR = 1e2  ## singular values in [RANK_RTOL, AMBIGUOUS_FACTOR*RANK_RTOL) are ambiguous
DEFINITE_TOL = 1e-9
LEADER_BEARING_TOL = 1e-6   ## leader anchors must match their fixed bearings this closely

"""
FormationSpec fields (all agent indices 0-based; leaders are 0..l-1):
d          : dimension of the ambient space
n          : number of agents
l          : number of leaders
edges      : tuple of (i,j) pairs, i senses j
bearings   : dict (i,j) -> desired unit bearing g*_ij, one entry per edge
leader_pos : (l,d) array of leader desired positions
leader_bearings : dict (i,j) -> fixed desired bearing between leaders i < j, or None;
                  a constraint on the formation shape, not a sensing edge
"""
FormationSpec = namedtuple('FormationSpec', ['d', 'n', 'l', 'edges', 'bearings', 'leader_pos',
                                             'leader_bearings'], defaults=(None,))
LaplacianBlocks = namedtuple('LaplacianBlocks', ['L', 'L_fl', 'L_ff'])
BearingLaplacianBlocks = namedtuple('BearingLaplacianBlocks', ['B', 'B_ll', 'B_lf', 'B_fl', 'B_ff'])
RigidityReport = namedtuple('RigidityReport', ['rigid', 'rank', 'expected_rank', 'nullity', 'singular_values'])
DefinitenessReport = namedtuple('DefinitenessReport', ['ok', 'lambda_min', 'lambda_max'])
EdgeArrays = namedtuple('EdgeArrays', ['src', 'dst', 'P', 'S'])


def projection_matrix(g, tol=BEARING_TOL):

    """
    Orthogonal projector onto the complement of a unit vector,
    P_g = I_d - g g^T.

    Parameters
    ----------
    g   : unit vector in R^d
    tol : allowed deviation of |g| from 1

    Returns
    -------
    P : dxd symmetric idempotent matrix with P.g = 0

    """

    g = np.asarray(g, dtype=float)
    if abs(la.norm(g) - 1.) > tol:
        raise InvalidBearingError('bearing {} has norm {:.12f}, not 1'.format(g, la.norm(g)))

    return np.eye(len(g)) - np.outer(g, g)


def bearing_of(p_i, p_j, eps=1e-9, agents=(None, None)):

    """
    Unit vector pointing from p_i towards p_j.

    Parameters
    ----------
    p_i, p_j : positions in R^d
    eps      : distance below which the two positions count as coincident
    agents   : (i,j) indices used in the collision message, if known

    Returns
    -------
    g_ij : unit vector (p_j - p_i)/|p_j - p_i|

    """

    r = np.asarray(p_j, dtype=float) - np.asarray(p_i, dtype=float)
    dist = la.norm(r)
    if dist < eps:
        raise CollisionError(agents[0], agents[1], dist)

    return r/dist


def formation_violations(spec, tol=BEARING_TOL):

    """
    Check the graph and bearing rules for a leader-follower formation.

    Parameters
    ----------
    spec : FormationSpec
    tol  : unit norm tolerance for the desired bearings

    Returns
    -------
    violations : list of strings, empty if spec is valid
                 (agent indices in the messages are 1-based)

    """

    violations = []
    d, n, l = spec.d, spec.n, spec.l
    if d < 2:
        violations.append('dimension d={} must be at least 2'.format(d))
    if l < 2:
        violations.append('leaders l={}: at least 2 leaders are required for B_ff to be positive definite'.format(l))
    if l >= n:
        violations.append('leaders l={} leaves no followers among n={} agents'.format(l, n))
    if np.shape(spec.leader_pos) != (l, d):
        violations.append('leader positions have shape {}, expected ({}, {})'
                          .format(np.shape(spec.leader_pos), l, d))

    edgeset = set(spec.edges)
    if len(edgeset) != len(spec.edges):
        violations.append('edge list contains duplicates')
    for (i, j) in spec.edges:
        label = '({},{})'.format(i+1, j+1)
        if not (0 <= i < n and 0 <= j < n):
            violations.append('edge {} refers to an agent outside 1..{}'.format(label, n))
            continue
        if i == j:
            violations.append('edge {} is a self loop'.format(label))
        if i < l:
            violations.append('edge {} starts at a leader; leaders sense nobody'.format(label))
        elif j >= l and (j, i) not in edgeset:
            violations.append('edge {} between followers must be bidirectional'.format(label))

        if (i, j) not in spec.bearings:
            violations.append('edge {} has no desired bearing'.format(label))
            continue
        g = np.asarray(spec.bearings[(i, j)], dtype=float)
        if g.shape != (d,):
            violations.append('bearing {} has shape {}, expected ({},)'.format(label, g.shape, d))
            continue
        if not abs(la.norm(g) - 1.) <= tol:
            violations.append('bearing {} has norm {:.12f}, not 1'.format(label, la.norm(g)))
        if (j, i) in spec.bearings:
            if la.norm(g + np.asarray(spec.bearings[(j, i)])) > 10*tol:
                violations.append('bearings {} and ({},{}) are not opposite'.format(label, j+1, i+1))

    for (i, j) in spec.bearings:
        if (i, j) not in edgeset:
            violations.append('bearing ({},{}) has no matching edge'.format(i+1, j+1))

    leader_pos = np.asarray(spec.leader_pos, dtype=float)
    for (i, j), g in (spec.leader_bearings or {}).items():
        label = '({},{})'.format(i+1, j+1)
        if not (0 <= i < l and 0 <= j < l) or i == j:
            violations.append('leader bearing {} must join two different leaders'.format(label))
            continue
        if (j, i) in spec.leader_bearings:
            violations.append('leader bearing {} is given in both directions'.format(label))
        g = np.asarray(g, dtype=float)
        if g.shape != (d,):
            violations.append('leader bearing {} has shape {}, expected ({},)'.format(label, g.shape, d))
            continue
        if not abs(la.norm(g) - 1.) <= tol:
            violations.append('leader bearing {} has norm {:.12f}, not 1'.format(label, la.norm(g)))
        elif leader_pos.shape == (l, d):
            r = leader_pos[j] - leader_pos[i]
            if not la.norm(r) > 0 or la.norm(r/la.norm(r) - g) > LEADER_BEARING_TOL:
                violations.append('leader positions {} and {} do not satisfy leader bearing {}'
                                  .format(leader_pos[i].tolist(), leader_pos[j].tolist(), label))

    return violations


def make_formation(d, n, l, edges, bearings, leader_pos, renormalize=False,
                   validate=True, tol=BEARING_TOL, leader_bearings=None):

    """
    Build a FormationSpec from 0-based edges and bearings.

    Parameters
    ----------
    d, n, l         : dimension, number of agents, number of leaders
    edges           : iterable of (i,j) pairs
    bearings        : dict (i,j) -> desired bearing
    leader_pos      : (l,d) leader positions
    renormalize     : rescale the desired bearings to unit length before validation
    validate        : raise FormationError when formation_violations is not empty
    leader_bearings : dict (i,j) -> fixed bearing between two leaders

    Returns
    -------
    spec : FormationSpec

    """

    def as_arrays(pairs):
        out = {(int(i), int(j)): np.array(g, dtype=float) for (i, j), g in pairs.items()}
        if renormalize:
            out = {e: g/la.norm(g) for e, g in out.items()}
        return out

    edges = tuple((int(i), int(j)) for i, j in edges)
    spec = FormationSpec(int(d), int(n), int(l), edges, as_arrays(bearings),
                         np.array(leader_pos, dtype=float).reshape((int(l), int(d))),
                         as_arrays(leader_bearings or {}))
    if validate:
        violations = formation_violations(spec, tol)
        if violations:
            raise FormationError('; '.join(violations))

    return spec


def constraints(spec):

    """
    Every desired bearing constraint of the formation: the sensing edges
    followed by the fixed leader-leader bearings.

    Returns
    -------
    edges, bearings : tuple of (i,j) pairs and dict (i,j) -> unit bearing

    """

    extra = spec.leader_bearings or {}
    bearings = dict(spec.bearings)
    bearings.update(extra)

    return spec.edges + tuple(extra), bearings


def followers(spec):

    return range(spec.l, spec.n)


def neighbors(spec, i):

    """ list of agents j with (i,j) in E, in edge-list order """

    return [j for (k, j) in spec.edges if k == i]


def build_laplacian(spec):

    """
    Laplacian of the directed interaction graph,
    l_ij = -1 if (i,j) in E, l_ii = -sum_j l_ij.

    Returns
    -------
    LaplacianBlocks : L (nxn), follower-leader block L_fl (fxl),
                      follower-follower block L_ff (fxf)

    """

    L = np.zeros((spec.n, spec.n))
    for (i, j) in spec.edges:
        L[i, j] = -1.
    L -= np.diag(L.sum(axis=1))

    return LaplacianBlocks(L, L[spec.l:, :spec.l], L[spec.l:, spec.l:])


def bearing_laplacian(n, d, edges, bearings):

    """
    Assemble the bearing Laplacian over the undirected graph underlying edges.
    Each unordered pair {i,j} contributes P_ij to blocks ii and jj and -P_ij to
    blocks ij and ji, so the result is symmetric positive semidefinite.

    Parameters
    ----------
    n, d     : number of agents, dimension
    edges    : iterable of (i,j) pairs, 0-based
    bearings : dict (i,j) -> unit bearing

    Returns
    -------
    B : (dn,dn) ndarray

    """

    B = np.zeros((d*n, d*n))
    seen = set()
    for (i, j) in edges:
        if (j, i) in seen:
            continue
        seen.add((i, j))
        P = projection_matrix(bearings[(i, j)])
        B[d*i:d*(i+1), d*i:d*(i+1)] += P
        B[d*j:d*(j+1), d*j:d*(j+1)] += P
        B[d*i:d*(i+1), d*j:d*(j+1)] -= P
        B[d*j:d*(j+1), d*i:d*(i+1)] -= P

    return B


def build_bearing_laplacian(spec):

    """
    Bearing Laplacian of the desired formation, partitioned at index d*l.
    The follower rows equal sum_{j in N_i} P_{g*_ij} on the diagonal and
    -P_{g*_ij} off the diagonal. Leader-leader bearings only enter B_ll.

    Returns
    -------
    BearingLaplacianBlocks : B, B_ll, B_lf, B_fl, B_ff

    """

    B = bearing_laplacian(spec.n, spec.d, *constraints(spec))
    k = spec.d*spec.l

    return BearingLaplacianBlocks(B, B[:k, :k], B[:k, k:], B[k:, :k], B[k:, k:])


def framework_rigidity(n, d, edges, positions, rtol=RANK_RTOL):

    """
    Infinitesimal bearing rigidity test for a framework (G,p).
    The framework is rigid iff rank(B) = dn - d - 1, i.e. the only
    bearing-preserving motions are translations and the scaling about the centroid.

    Parameters
    ----------
    n, d      : number of agents, dimension
    edges     : iterable of (i,j) pairs, 0-based
    positions : (n,d) realization
    rtol      : relative singular value threshold

    Returns
    -------
    RigidityReport : rigid flag, rank, expected rank, nullity, singular values

    """

    positions = np.asarray(positions, dtype=float).reshape((n, d))
    bearings = {(i, j): bearing_of(positions[i], positions[j], agents=(i, j)) for (i, j) in edges}
    B = bearing_laplacian(n, d, edges, bearings)
    sv = sla.svdvals(B)
    smax = sv[0] if sv[0] > 0 else 1.
    rel = sv/smax
    ambiguous = rel[(rel >= rtol) & (rel < AMBIGUOUS_FACTOR*rtol)]
    if len(ambiguous):
        raise AmbiguousRigidityError(sv, rtol*smax)
    rank = int(np.sum(rel >= rtol))
    expected = d*n - d - 1
    logging.debug('bearing Laplacian singular values: {}'.format(sv))

    return RigidityReport(rank == expected, rank, expected, d*n - rank, sv)


def check_infinitesimal_bearing_rigidity(spec, p_star, rtol=RANK_RTOL):

    """
    Rigidity of the desired formation (G,p*), leader-leader bearings included.

    Parameters
    ----------
    spec   : FormationSpec
    p_star : (n,d) or stacked (dn,) desired realization

    Returns
    -------
    RigidityReport

    """

    edges, _ = constraints(spec)
    report = framework_rigidity(spec.n, spec.d, edges, p_star, rtol)
    logging.info('bearing rigidity: rank(B) = {}, expected {}, nullity {}'
                 .format(report.rank, report.expected_rank, report.nullity))

    return report


def check_positive_definite_bff(spec, tol=DEFINITE_TOL, require_leaders=True):

    """
    Check that the follower block B_ff is positive definite.

    Parameters
    ----------
    spec            : FormationSpec
    tol             : smallest eigenvalue must exceed tol
    require_leaders : raise HypothesisError if the formation has fewer than two leaders;
                      if False, just report the eigenvalues

    Returns
    -------
    DefinitenessReport : ok flag, lambda_min(B_ff), lambda_max(B_ff)

    """

    if spec.l < 2 and require_leaders:
        raise HypothesisError('formation has {} leader(s); at least 2 are required'.format(spec.l))
    B_ff = build_bearing_laplacian(spec).B_ff
    eigs = sla.eigvalsh(0.5*(B_ff + B_ff.T))
    logging.info('B_ff eigenvalues: min {:.6e}, max {:.6e}'.format(eigs[0], eigs[-1]))

    return DefinitenessReport(bool(eigs[0] > tol), eigs[0], eigs[-1])


def edge_arrays(spec):

    """
    Per-edge arrays used to evaluate neighbour sums for all agents at once.

    Returns
    -------
    EdgeArrays : src (E,), dst (E,), projectors P (E,d,d),
                 incidence S (n,E) with S[i,e] = 1 if edge e starts at i,
                 so that sum_{j in N_i} x_ij = (S.x)_i

    """

    src = np.array([i for (i, j) in spec.edges], dtype=int)
    dst = np.array([j for (i, j) in spec.edges], dtype=int)
    P = np.array([projection_matrix(spec.bearings[e]) for e in spec.edges]).reshape((-1, spec.d, spec.d))
    S = np.zeros((spec.n, len(spec.edges)))
    S[src, np.arange(len(spec.edges))] = 1.

    return EdgeArrays(src, dst, P, S)


def neighbor_distances(edges, p, eps):

    """
    Distances between the endpoints of every edge.
    Raises CollisionError for the first edge shorter than eps.

    Parameters
    ----------
    edges : EdgeArrays
    p     : (n,d) positions
    eps   : collision distance

    """

    r = la.norm(p[edges.dst] - p[edges.src], axis=1)
    hit = np.nonzero(r < eps)[0]
    if len(hit):
        i, j = edges.src[hit[0]], edges.dst[hit[0]]
        raise CollisionError(i, j, r[hit[0]])

    return r
