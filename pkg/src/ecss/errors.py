"""Exception hierarchy shared by every ecss module."""


class ElementsError(Exception):
    """Base class for all engine errors."""


# scenegraph
class UnknownEntity(ElementsError, KeyError):
    pass


class HierarchyError(ElementsError, ValueError):
    pass


class CycleError(HierarchyError):
    pass


class DuplicateComponent(ElementsError, ValueError):
    pass


class EventDeliveryError(ElementsError):
    """Raised after a publish when one or more listeners failed.

    Every listener still receives the event; ``errors`` holds
    ``(listener, exception)`` pairs in delivery order.
    """

    def __init__(self, topic, errors):
        self.topic = topic
        self.errors = list(errors)
        super().__init__(f"{len(self.errors)} listener(s) failed on topic {topic!r}")


# math
class MathError(ElementsError, ValueError):
    pass


class DegenerateAxis(MathError):
    pass


class NonUnitQuaternion(MathError):
    pass


class InvalidFrustum(MathError):
    pass


class DegenerateBasis(MathError):
    pass


class SingularMatrix(MathError):
    pass


class DecompositionError(MathError):
    pass


# geometric algebra
class NonPositiveDilation(MathError):
    pass


class PointAtInfinity(MathError):
    pass


# systems / rendering
class NoCamera(ElementsError):
    pass


class MultipleCameras(ElementsError):
    pass


class MalformedMesh(ElementsError, ValueError):
    pass


class MalformedBuffer(ElementsError, ValueError):
    pass


# animation
class EmptyTrack(ElementsError, ValueError):
    pass


class InvalidInfluence(ElementsError, ValueError):
    pass


class UnnormalizedWeights(InvalidInfluence):
    pass


# input files
class SceneError(ElementsError):
    """Base for errors caused by bad user input files (CLI exit code 2)."""


class ParseError(SceneError):
    def __init__(self, message, path=None, line=None, column=None):
        self.path = path
        self.line = line
        self.column = column
        where = ""
        if path is not None:
            where = str(path)
        if line is not None:
            where += f":{line}"
            if column is not None:
                where += f":{column}"
        super().__init__(f"{where}: {message}" if where else message)


class IndexOutOfRange(ParseError):
    pass


class ValidationError(SceneError):
    pass
