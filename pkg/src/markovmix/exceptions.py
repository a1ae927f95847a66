"""Exception types shared across the package."""


class DataError(ValueError):
    """Raised when input data violate a structural precondition.

    Covers ragged columns, constant columns, misaligned covariates,
    missing CSV cells, degenerate quantiles, and similar input defects.
    """


class EstimationError(RuntimeError):
    """Raised when an estimator cannot produce a usable fit.

    Covers degenerate likelihoods (all candidate starts at -inf),
    rank-deficient designs, and unrecoverable optimizer failures.
    """
