"""Exception hierarchy shared across the toolkit.

Domain errors describe a physically meaningful failure of an otherwise
well-formed request (no phase matching, wavelength outside dispersion data,
...). Configuration errors describe malformed input. The CLI maps domain
errors to exit code 1 and configuration errors to exit code 2.
"""


class SpdcError(Exception):
    """Base class for all toolkit errors."""


class DomainError(SpdcError):
    """A well-formed request with no physically valid answer."""

    code = "domain_error"


class WavelengthRangeError(DomainError):
    """Wavelength outside the validity range of a material's dispersion fit."""

    code = "wavelength_range"


class NoPhaseMatchError(DomainError):
    """No collinear solution inside the searchable wavelength bracket."""

    code = "no_phase_match"


class ResolutionError(DomainError):
    """Spectral grid too coarse (or too narrow) to resolve a width."""

    code = "resolution"


class DegenerateScanError(DomainError):
    """Length scan with zero abscissa variance; regression is undefined."""

    code = "degenerate_scan"


class InvalidStackError(DomainError):
    """Optical stack violates its structural invariants."""

    code = "invalid_stack"


class SingularSystemError(DomainError):
    """Compensator thickness directions are linearly dependent."""

    code = "singular_system"


class NegativeThicknessError(DomainError):
    """No orientation-sign assignment yields nonnegative thicknesses."""

    code = "negative_thickness"


class ZeroWeightError(DomainError):
    """Spectral weight integrates to zero over the requested window."""

    code = "zero_weight"


class ConfigError(SpdcError):
    """Malformed configuration or usage error (CLI exit code 2)."""

    code = "config_error"


DOMAIN_ERRORS_BY_CODE = {
    cls.code: cls
    for cls in (
        WavelengthRangeError,
        NoPhaseMatchError,
        ResolutionError,
        DegenerateScanError,
        InvalidStackError,
        SingularSystemError,
        NegativeThicknessError,
        ZeroWeightError,
        DomainError,
    )
}
