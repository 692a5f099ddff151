from __future__ import annotations


class ToolkitError(Exception):
    """Base class for all domain/service errors."""


# -------------------------
# Generic / input
# -------------------------

class ValidationError(ToolkitError):
    """Input, config or state failed validation."""


class DomainError(ValidationError):
    """Argument lies outside the mathematical domain of an operation."""


class CodeFormatError(ValidationError):
    """Code definition file is malformed or describes a rank-deficient matrix."""


# -------------------------
# Numerics
# -------------------------

class QuadratureError(ToolkitError):
    """Gaussian quadrature did not converge under order doubling."""


class NotFoundError(ToolkitError):
    """A searched-for point (e.g. an inflection) does not exist in the window."""


class FitError(ToolkitError):
    """Least-squares design matrix is degenerate."""


# -------------------------
# Optimization / feasibility
# -------------------------

class InfeasibleError(ToolkitError):
    """No rate-power pair (or code) satisfies the constraints."""


class UnreachableError(InfeasibleError):
    """Target CEP is not met anywhere in the SNR search window."""


# -------------------------
# Persistence
# -------------------------

class StoreError(ToolkitError):
    """Results store could not be read or written."""
