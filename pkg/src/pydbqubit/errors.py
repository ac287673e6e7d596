"""Exception hierarchy shared by every pydbqubit module."""

from __future__ import annotations


class DbQubitError(Exception):
    """Base class of all errors raised by pydbqubit."""


class ConfigError(DbQubitError):
    """A configuration document violates the schema.

    The dotted path of the offending field is kept in ``path``.
    """

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
        self.message = message


class LayoutStructureError(DbQubitError):
    """Malformed layout (bad pair indices, shared sites, no pairs)."""


class DomainError(DbQubitError, ValueError):
    """An argument lies outside the documented domain of an operation."""


class CalibrationError(DbQubitError):
    """A root-find over a well parameter could not be bracketed."""


class NoTunnelingError(DbQubitError):
    """The single-well ground state sits at or above the barrier."""


class CapacityError(DbQubitError):
    """A dense representation would exceed its dimension cap."""


class ProjectionError(DbQubitError):
    """The Hubbard problem cannot be projected onto charge qubits."""


class RegimeError(DbQubitError):
    """A gate was requested outside the regime where its error bound holds."""


class CouplingError(DbQubitError):
    """A two-qubit gate was requested for uncoupled qubits."""


class ScheduleError(DbQubitError):
    """A pulse schedule carries non-finite or non-positive entries."""


class StepSizeError(DbQubitError):
    """The fixed Lindblad step violates the step-size contract."""

    def __init__(self, message: str, suggested_dt: float):
        super().__init__(f"{message} (suggested dt <= {suggested_dt:.6g} fs)")
        self.suggested_dt = suggested_dt
