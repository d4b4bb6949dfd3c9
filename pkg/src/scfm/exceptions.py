"""Exception and warning types shared across the package.

Every error derives from :class:`ScfmError` and may carry a ``stage``
attribute when raised (or re-raised) inside the end-to-end pipeline, so
callers can attribute a failure to clustering, recovery, inference or
estimation.
"""


class ScfmError(Exception):
    """Base class for all package errors.

    Attributes
    ----------
    stage : str or None
        Name of the pipeline stage that raised the error, filled in by
        the pipeline runner; ``None`` for direct library calls.
    """

    def __init__(self, *args):
        super().__init__(*args)
        self.stage = None


class CombinatorialOverflow(ScfmError):
    """The number of state combinations M**K exceeds the memory guard."""


class NumericalFailure(ScfmError):
    """A numerical decomposition (SVD) failed to converge."""


class NoWitness(ScfmError):
    """No nontrivial left-nullspace witness exists (single-chain model)."""


class ShapeMismatch(ScfmError):
    """Matrix dimensions are inconsistent with the declared model shape."""


class InsufficientData(ScfmError):
    """Fewer observations than the operation requires."""


class DegenerateClusters(ScfmError):
    """Clustering produced empty centers: some combinations are missing."""


class IncoherenceUnsatisfiable(ScfmError):
    """Dictionary resampling hit the retry cap without a coherent draw."""


class UnsupportedM2(ScfmError):
    """Correlation-sorting recovery is undefined for two states per chain."""


class IndexCollision(ScfmError):
    """The sorted correlation blocks for the component index sets collide."""


class GroupingInconsistent(ScfmError):
    """Component co-occurrences do not determine a unique chain grouping."""


class KTooLarge(ScfmError):
    """Exact permutation matching is guarded for small chain counts only."""


class InvalidConfig(ScfmError):
    """A configuration object or file failed validation."""


class AmbiguousSharedWarning(UserWarning):
    """Shared-component location was decided by a (near-)tie."""


class SortTieWarning(UserWarning):
    """A sorted-correlation block boundary was decided by a (near-)tie."""


class MixingWeightWarning(UserWarning):
    """An empirical combination weight fell below the expected floor."""


class ZeroCountWarning(UserWarning):
    """A transition column had no observed counts and was set to uniform."""
