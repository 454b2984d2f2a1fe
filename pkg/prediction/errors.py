"""Exception types shared by the prediction, training and harness packages."""


class DimensionError(ValueError):
    """Array shape does not match the block geometry it is used with."""


class ModeIndexError(IndexError):
    """Mode index outside 0..K-1 (or outside the conventional mode set)."""


class RegionError(ValueError):
    """Block or reference region falls outside the image."""


class TrainingDivergedError(RuntimeError):
    """Training produced a non-finite loss."""

    def __init__(self, step: int, last_finite_loss: float):
        self.step = step
        self.last_finite_loss = last_finite_loss
        super().__init__(
            f"Loss became non-finite at step {step} "
            f"(last finite loss {last_finite_loss:.6g}); lower the learning rate"
        )


class ModelFileError(ValueError):
    """Model file is corrupt, inconsistent, or of the wrong kind."""


class SpecMismatchError(ValueError):
    """Model block size differs from the requested block size."""
