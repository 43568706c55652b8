"""Exception types raised across the pipeline."""


class ImageFormatError(ValueError):
    """Bytes on disk could not be decoded as a supported image."""

    def __init__(self, path, reason=""):
        self.path = str(path)
        msg = f"cannot decode image {self.path}"
        if reason:
            msg += f": {reason}"
        super().__init__(msg)


class DegenerateInputError(ValueError):
    """Input has too little variation for the requested operation."""


class SegmentationError(RuntimeError):
    """No lesion candidate survived segmentation."""

    def __init__(self, image_id="<unknown>", reason="empty lesion mask"):
        self.image_id = str(image_id)
        super().__init__(f"segmentation failed for {self.image_id}: {reason}")


class TrainingDivergedError(RuntimeError):
    pass


class UndefinedMetricError(ValueError):
    """Metric denominator is zero (e.g. sensitivity without positives)."""
