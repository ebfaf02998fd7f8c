"""Shared exception types, mapped to CLI exit codes in cli.py."""


class MfcError(Exception):
    """Base class for all package errors."""


class ConfigError(MfcError):
    """Malformed scenario/config input. CLI exit code 2."""


class SimulationDiverged(MfcError):
    """Plant state became non-finite; run aborted. CLI exit code 3."""


class TransportWatchdog(MfcError):
    """No traffic in either direction for the watchdog period. CLI exit code 4."""


class ProtocolError(MfcError):
    """Datagram with wrong magic or unsupported version."""


class FramingError(MfcError):
    """Datagram with inconsistent length."""


class EncodingError(MfcError):
    """Datagram that cannot be encoded (payload too long)."""


class InsufficientWindow(MfcError):
    """Estimator window does not yet span the configured horizon."""


class ControllerFault(MfcError):
    """Non-finite input reached a control law; caller must hold last output."""
