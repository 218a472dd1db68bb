"""Exception hierarchy shared by every pipeline stage."""


class ImuGestError(ValueError):
    """Base class for data/model errors (CLI exit status 2)."""


class SchemaError(ImuGestError):
    pass


class ParseError(ImuGestError):
    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class SegmentationError(ImuGestError):
    def __init__(self, message, window_index=None):
        super().__init__(message)
        self.window_index = window_index


class FeatureError(ImuGestError):
    """A feature could not be computed (degenerate or too-short signal)."""


class PcaError(ImuGestError):
    pass


class TrainingDiverged(ImuGestError):
    def __init__(self, iteration, value):
        super().__init__(f"non-finite cost {value!r} at iteration {iteration}; "
                         "reduce the learning rate")
        self.iteration = iteration


class DimensionError(ImuGestError):
    pass
