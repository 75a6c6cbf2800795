"""Exception hierarchy shared by all avlocbench modules."""

from __future__ import annotations


class AvlocError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(AvlocError):
    """Input violates a documented contract (schema, range, invariant).

    CLI maps this to exit code 2.
    """


class ManifestError(ValidationError):
    """Malformed manifest file or manifest-level invariant violation."""


class TaxonomyError(ValidationError):
    """Malformed taxonomy file or incomplete fine-to-broad coverage."""


class MapFormatError(ValidationError):
    """Similarity-map file violates the AVSM binary format."""


class MetricError(ValidationError):
    """Metric called on inputs outside its domain."""


class CalibrationError(ValidationError):
    """Threshold calibration is missing required distributions."""
