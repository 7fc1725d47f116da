"""Exception hierarchy shared by all npprompt modules.

Three top-level families map onto the CLI exit codes: ConfigError (1),
DataError (2), BackendError (3). The tensor-format errors are split into
distinct classes so callers (and tests) can tell apart a bad magic number
from a truncated file or a header/payload disagreement.
"""


class NPPromptError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(NPPromptError):
    """Invalid run configuration (missing files, bad combinations, bad flags)."""

    exit_code = 1


class DataError(NPPromptError):
    """Malformed or inconsistent input data (tensors, vocab, datasets, labels)."""

    exit_code = 2


class BackendError(NPPromptError):
    """Scoring backend failure (transport, bad status, wrong vector length)."""

    exit_code = 3


# --- tensor file format ------------------------------------------------------

class TensorIOError(DataError):
    """Base for tensor file format violations."""


class BadMagicError(TensorIOError):
    """File does not start with the NPPT magic bytes."""


class VersionMismatchError(TensorIOError):
    """Tensor file declares an unsupported format version."""


class TruncatedFileError(TensorIOError):
    """File ends before the fixed prelude or the declared header is complete."""


class HeaderError(TensorIOError):
    """Header JSON is malformed, or dtype/shape are invalid."""


class LengthMismatchError(TensorIOError):
    """Payload byte count disagrees with the declared shape."""


# --- vocabulary / dataset / logits batch -------------------------------------

class VocabError(DataError):
    """Vocabulary file violates the id/token contract."""


class DatasetError(DataError):
    """Dataset record file is malformed or inconsistent."""


class LogitsBatchError(DataError):
    """Logits tensor and manifest disagree, or widths do not match the vocab."""


class MissingExampleError(DataError):
    """An example id is not present in the loaded logits batch."""


# --- templates ----------------------------------------------------------------

class TemplateError(DataError):
    """Template source cannot be parsed (mask count, slot mixing, unknown slot)."""


class RenderError(DataError):
    """Record payload shape does not match the template's slots."""


# --- verbalizer construction ---------------------------------------------------

class UnresolvableLabelError(DataError):
    """A keyword cannot be resolved to any vocabulary token."""


class InvalidKError(DataError):
    """Requested neighborhood size is outside 1..#eligible tokens."""


class DegenerateVectorError(DataError):
    """Zero-norm vector where cosine similarity is required."""


class DegenerateWeightsError(DataError):
    """Similarities unusable under the requested weighting scheme."""


class WhiteningError(DataError):
    """Whitening fit/apply failure (insufficient sample, dimension mismatch)."""


class CorruptVerbalizerError(DataError):
    """Verbalizer refers to token ids outside the vocabulary, or has no entries."""


# --- evaluation -----------------------------------------------------------------

class MetricError(DataError):
    """Metric inputs invalid (length mismatch, empty, non-binary labels)."""
