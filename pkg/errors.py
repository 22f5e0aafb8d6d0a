"""
Exceptions raised by the formation tracking code.

Everything derives from ValueError so callers that only catch ValueError
(as the command-line scripts do) keep working.
Agent indices are stored 0-based and printed 1-based.
"""


class BearingSimError(ValueError):
    pass


class InvalidBearingError(BearingSimError):
    pass


class FormationError(BearingSimError):
    pass


class HypothesisError(BearingSimError):
    pass


class NotLocalizableError(BearingSimError):
    pass


class AmbiguousRigidityError(BearingSimError):

    def __init__(self, singular_values, tol):
        self.singular_values = singular_values
        self.tol = tol
        super().__init__('rank is ambiguous: singular values {} straddle tolerance {:.3e}'
                         .format(list(singular_values), tol))


class CollisionError(BearingSimError):

    def __init__(self, agent, neighbor, distance):
        self.agent = agent
        self.neighbor = neighbor
        self.distance = distance
        if agent is None:
            super().__init__('positions are {:.3e} m apart'.format(distance))
        else:
            super().__init__('agents {} and {} are {:.3e} m apart'
                             .format(agent+1, neighbor+1, distance))


class GainConditionError(BearingSimError):

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__('; '.join(self.violations))


class ConfigError(BearingSimError):

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        where = ''
        if field is not None:
            where += '{}: '.format(field)
        if line is not None:
            where = 'line {}: '.format(line) + where
        super().__init__(where + message)


class ScenarioError(BearingSimError):

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__('\n'.join(self.violations))


class NumericalBlowupError(BearingSimError):

    def __init__(self, agent, value):
        self.agent = agent
        self.value = value
        super().__init__('non-finite or overflowing state at agent {} (value {})'
                         .format(agent+1, value))


class SimulationError(BearingSimError):

    def __init__(self, cause, time):
        self.cause = cause
        self.time = time
        self.agent = getattr(cause, 'agent', None)
        super().__init__('t = {:.6f} s: {}'.format(time, cause))
