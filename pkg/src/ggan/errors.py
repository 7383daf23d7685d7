"""Exception types raised across the package."""


class GGanError(Exception):
    """Base class for all errors raised by ggan."""


# graph construction / compilation
class GraphError(GGanError, ValueError):
    pass


class CycleDetected(GraphError):
    def __init__(self, nodes):
        self.nodes = tuple(nodes)
        super().__init__("cycle through: " + " -> ".join(self.nodes))


class DuplicateName(GraphError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"duplicate variable name {name!r}")


class ObservedParentOfLatent(GraphError):
    def __init__(self, parent, child):
        self.parent, self.child = parent, child
        super().__init__(f"observed variable {parent!r} cannot be a parent of latent {child!r}")


class UnknownVariable(GraphError, KeyError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"unknown variable {name!r}")

    def __str__(self):
        return self.args[0]


class TieGroupMismatch(GraphError):
    pass


# numerics
class ShapeMismatch(GGanError, ValueError):
    pass


class NonFiniteGradient(GGanError, FloatingPointError):
    pass


class BadDimension(GGanError, ValueError):
    pass


class BadParameter(GGanError, ValueError):
    pass


# sampling
class NonPositiveTemperature(GGanError, ValueError):
    pass


class MissingDependencyFn(GGanError, KeyError):
    pass


class MissingObserved(GGanError, KeyError):
    pass


# training
class MissingVariable(GGanError, KeyError):
    pass


class TrainingDiverged(GGanError, FloatingPointError):
    """Raised when an objective becomes non-finite; ``record`` holds the diagnostic."""

    def __init__(self, record, trace=None):
        self.record = record
        self.trace = trace if trace is not None else []
        super().__init__(f"non-finite objective at step {record.get('step')}: {record}")


class EmptyInput(GGanError, ValueError):
    pass


# io
class BadMagic(GGanError, ValueError):
    pass


class TruncatedFile(GGanError, ValueError):
    pass


class VersionMismatch(GGanError, ValueError):
    pass


class CorruptManifest(GGanError, ValueError):
    pass
