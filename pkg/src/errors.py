"""
ADSALA error hierarchy

Library code raises these; the CLI maps them to exit codes:
0 success, 1 user error, 2 environment/resource error, 3 data-quality abort.
"""

from typing import Optional

EXIT_OK = 0
EXIT_USER_ERROR = 1
EXIT_ENVIRONMENT_ERROR = 2
EXIT_DATA_QUALITY = 3


class AdsalaError(Exception):
    """Base class for all ADSALA errors."""

    exit_code = EXIT_USER_ERROR


class ShapeError(AdsalaError, ValueError):
    """Operand dimensions do not agree with the GEMM shape."""


class ParameterError(AdsalaError, ValueError):
    """An argument is outside its allowed range."""


class ConfigError(AdsalaError, ValueError):
    """Configuration file or environment override is invalid."""


class ContractError(AdsalaError, ValueError):
    """Caller violated an interface contract (schema mismatch, length mismatch)."""


class ParseError(AdsalaError, ValueError):
    """A dataset or shape file could not be parsed."""

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        self.path = path
        self.line = line
        location = ""
        if path is not None:
            location = f"{path}"
        if line is not None:
            location = f"{location}:{line}" if location else f"line {line}"
        super().__init__(f"{location}: {message}" if location else message)


class ResourceError(AdsalaError, MemoryError):
    """Allocation or other host resource failure."""

    exit_code = EXIT_ENVIRONMENT_ERROR


class ExhaustionError(AdsalaError):
    """Sampler could not produce enough admissible distinct shapes."""

    exit_code = EXIT_ENVIRONMENT_ERROR


class GatheringError(AdsalaError):
    """Too many timing runs failed during data gathering."""

    exit_code = EXIT_ENVIRONMENT_ERROR


class NumericalError(AdsalaError, ArithmeticError):
    """A numerical routine failed (singular system, non-finite output)."""

    exit_code = EXIT_ENVIRONMENT_ERROR


class DataQualityError(AdsalaError):
    """Gathered data is too noisy to train on."""

    exit_code = EXIT_DATA_QUALITY


class BundleError(AdsalaError):
    """A model bundle is missing or unreadable."""


class BundleCorruptionError(BundleError):
    """Bundle checksum does not verify."""


class BundleVersionError(BundleError):
    """Bundle was written by an unsupported format version."""

    def __init__(self, found: int, supported: int):
        self.found = found
        self.supported = supported
        super().__init__(
            f"Unsupported bundle format version {found} (this build reads version {supported})"
        )


def exit_code_for(exc: BaseException) -> int:
    """Map an exception to a CLI exit code."""
    if isinstance(exc, AdsalaError):
        return exc.exit_code
    if isinstance(exc, (OSError, MemoryError)):
        return EXIT_ENVIRONMENT_ERROR
    return EXIT_USER_ERROR
