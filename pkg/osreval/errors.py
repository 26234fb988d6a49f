class OsrError(Exception):
    """Base class for every error the toolkit raises on bad data or undefined results."""


class DataValidationError(OsrError, ValueError):
    """
    An input artifact violates a format rule or a type invariant.

    Location attributes are optional and are folded into the message so that
    a user can find the offending cell, row or tree node.
    """

    def __init__(
        self,
        message: str,
        *,
        row: int | None = None,
        column: int | None = None,
        node: str | None = None,
    ) -> None:
        self.row = row
        self.column = column
        self.node = node
        location = []
        if row is not None:
            location.append(f"row {row}")
        if column is not None:
            location.append(f"column {column}")
        if node is not None:
            location.append(f'node "{node}"')
        if location:
            message = f"{message} at {', '.join(location)}"
        super().__init__(message)


class UndefinedMetricError(OsrError, ValueError):
    pass


class FeatureRequiredError(OsrError):
    def __init__(self) -> None:
        super().__init__("feature-norm rule requires feature vectors")


class InvalidSplitError(OsrError, ValueError):
    """Split construction parameters do not fit the supplied classes."""
