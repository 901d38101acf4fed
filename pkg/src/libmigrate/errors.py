"""Exception hierarchy shared by every stage of the migration pipeline."""

from __future__ import annotations


class MigrationError(Exception):
    """Base class for all harness errors."""


class ConfigError(MigrationError):
    pass


# prompts


class TemplateError(MigrationError):
    pass


class MissingExample(TemplateError):
    pass


class MissingGuide(TemplateError):
    pass


# gateway


class ReplayMiss(MigrationError):
    def __init__(self, digest: str):
        super().__init__(f"no stored completion for request {digest}")
        self.digest = digest


class TransportError(MigrationError):
    pass


class EndpointError(MigrationError):
    def __init__(self, status: int, body: str):
        super().__init__(f"endpoint returned HTTP {status}: {body[:500]}")
        self.status = status
        self.body = body


class ExtractionError(MigrationError):
    pass


class NoCodeFound(ExtractionError):
    pass


class UnbalancedMarkers(ExtractionError):
    pass


# workspace


class IoFailure(MigrationError):
    pass


class EmptyProject(MigrationError):
    pass


class PathEscape(MigrationError):
    pass


class ManifestNotFound(MigrationError):
    pass


class PackageNotFound(MigrationError):
    pass


# toolchain


class ToolTimeout(MigrationError):
    pass


class UnparseableOutput(MigrationError):
    pass
