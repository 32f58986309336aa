"""Exception types shared across the package."""


class XmodalError(Exception):
    pass


class ShapeError(XmodalError, ValueError):
    pass


class ContractError(XmodalError, ValueError):
    """A precondition of an operation was violated by the caller."""


class ValidationError(XmodalError, ValueError):
    """A declarative object (spec, config) failed validation.

    ``field`` names the offending field when it can be attributed to one.
    """

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class InfeasibleBudgetError(XmodalError):
    pass


class TrainingError(XmodalError, RuntimeError):
    def __init__(self, message, epoch=None, fold=None):
        super().__init__(message)
        self.epoch = epoch
        self.fold = fold


class EmptyDatasetError(XmodalError, ValueError):
    pass
