"""Exception hierarchy for the workbench.

Every domain failure derives from ForensirisError so callers (CLI, service)
can map "data problems" to one exit code / HTTP class and let genuine bugs
propagate.
"""

from __future__ import annotations


class ForensirisError(Exception):
    """Base class for all domain errors raised by this package."""

    error_code = "error"


class InvalidConfig(ForensirisError):
    """A configuration object violates its own invariants."""

    error_code = "invalid_config"


# --- ingestion / formats ---------------------------------------------------

class UnsupportedFormat(ForensirisError):
    error_code = "unsupported_format"


class CorruptFile(ForensirisError):
    error_code = "corrupt_file"


class DimensionTooSmall(ForensirisError):
    error_code = "dimension_too_small"


class SchemaMismatch(ForensirisError):
    error_code = "schema_mismatch"


class MissingField(ForensirisError):
    """A required metadata field is empty. ``row`` is the 1-based data row."""

    error_code = "missing_field"

    def __init__(self, row: int, field: str):
        super().__init__(f"row {row}: missing required field '{field}'")
        self.row = row
        self.field = field


class BadMagic(ForensirisError):
    error_code = "bad_magic"


class VersionUnsupported(ForensirisError):
    error_code = "version_unsupported"


class LengthMismatch(ForensirisError):
    error_code = "length_mismatch"


# --- geometry / pipeline ---------------------------------------------------

class NoBoundaryFound(ForensirisError):
    error_code = "no_boundary_found"


class DegenerateGeometry(ForensirisError):
    error_code = "degenerate_geometry"


class DimensionMismatch(ForensirisError):
    error_code = "dimension_mismatch"


class OutOfFrame(ForensirisError):
    error_code = "out_of_frame"


# --- encoding ----------------------------------------------------------------

class FilterLargerThanGrid(ForensirisError):
    error_code = "filter_larger_than_grid"


class GridTooNarrow(ForensirisError):
    error_code = "grid_too_narrow"


class KernelLargerThanGrid(ForensirisError):
    error_code = "kernel_larger_than_grid"


class BadKernelFile(ForensirisError):
    error_code = "bad_kernel_file"


class NonZeroMeanKernel(ForensirisError):
    error_code = "non_zero_mean_kernel"


# --- matching ---------------------------------------------------------------

class IncompatibleTemplates(ForensirisError):
    error_code = "incompatible_templates"


class InsufficientOverlap(ForensirisError):
    error_code = "insufficient_overlap"


# --- quality ----------------------------------------------------------------

class EmptyUsableArea(ForensirisError):
    error_code = "empty_usable_area"


class MetricAbsent(ForensirisError):
    error_code = "metric_absent"


class EmptyInput(ForensirisError):
    error_code = "empty_input"


# --- evaluation / statistics -------------------------------------------------

class DegenerateVariance(ForensirisError):
    error_code = "degenerate_variance"


class DegenerateInput(ForensirisError):
    error_code = "degenerate_input"


class CannotBalance(ForensirisError):
    error_code = "cannot_balance"


class SampleTooSmall(ForensirisError):
    error_code = "sample_too_small"


# --- gallery ------------------------------------------------------------------

class DuplicateSampleId(ForensirisError):
    error_code = "duplicate_sample_id"


class StorageFailure(ForensirisError):
    error_code = "storage_failure"
