"""Exception hierarchy shared across the package.

Library code raises these; the command-line front end maps them onto its
exit-code contract (see :mod:`pkmsens.cli`).
"""


class PkmSensError(Exception):
    """Base class for all errors raised by this package."""


class KinematicsError(PkmSensError):
    """Base class for kinematic evaluation failures."""


class OutOfWorkspace(KinematicsError):
    """The requested point cannot be reached on the working branch."""


class NoConvergence(KinematicsError):
    """An iterative solve failed to reach its residual tolerance."""


class SingularConfiguration(KinematicsError):
    """A kinematic system matrix is numerically singular (cond > 1e12)."""


class FlatParallelogram(SingularConfiguration):
    """The parallelogram orientation system is degenerate.

    Happens when the rod directions make the orientation constraint matrix
    singular; the platform orientation error is then unbounded to first
    order.
    """


class EmptyGrid(PkmSensError):
    """A workspace aggregation was requested over zero usable points."""


class ConfigError(PkmSensError):
    """Invalid configuration input (file contents, keys, or values)."""
