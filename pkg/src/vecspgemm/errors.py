"""Exception taxonomy shared across the package."""


class InputError(ValueError):
    """Caller handed us inconsistent data (bad shapes, out-of-range parameters)."""


class FormatError(ValueError):
    """A text stream does not follow the expected file format."""


class ModelFault(RuntimeError):
    """A kernel violated the vector-machine contract (bad index, write clash).

    This always indicates a bug in kernel code, never in user data.
    """


class InternalError(RuntimeError):
    """An internal invariant broke (e.g. a hash table filled up despite sizing)."""
