"""Exception hierarchy shared across the compiler."""


class ModelError(Exception):
    """Base class for every error raised by nn2c."""


class GraphError(ModelError):
    """Structural violation in the layer graph (bad fan-in, missing weights, ...)."""


class ShapeError(ModelError):
    """Tensor or layer shapes are inconsistent."""


class CycleError(GraphError):
    """The layer graph contains a cycle."""


class DanglingInputError(GraphError):
    """A layer names a predecessor that does not exist."""


class ModelSyntaxError(ModelError):
    """Model document is malformed or carries fields outside the schema."""


class VersionError(ModelError):
    """Document or sidecar declares an unsupported format version."""


class UnsupportedLayerError(ModelError):
    """Layer type string has no registered builder."""


class MissingWeightsError(ModelError):
    """A weighted layer's weights cannot be resolved."""


class MagicError(ModelError):
    """Weight sidecar does not start with the expected magic bytes."""


class TruncationError(ModelError):
    """Weight sidecar ends before the declared payload."""


class DuplicateKeyError(ModelError):
    """Weight sidecar contains the same tensor key twice."""


class IdentifierError(ModelError):
    """Requested symbol prefix cannot be turned into a C identifier."""


class DomainError(ModelError):
    """Numeric argument outside its documented domain."""
