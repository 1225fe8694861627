"""Exception hierarchy shared by all c3kit modules."""


class C3Error(Exception):
    """Base class for every domain error raised by this package."""


# ---------------------------------------------------------------- model files

class MissingFile(C3Error):
    pass


class TruncatedFile(C3Error):
    """Binary model file ended early or carries trailing garbage."""


class MalformedText(C3Error):
    """Text model file could not be parsed. Carries line/column context."""

    def __init__(self, message, path=None, line=None, column=None):
        self.path = path
        self.line = line
        self.column = column
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}:"
            if column is not None:
                where += f"{column}:"
        super().__init__(f"{where} {message}" if where else message)


class IntegrityError(C3Error):
    """Referential integrity violated (dangling or inconsistent references)."""


class UnsupportedModelInText(C3Error):
    """Model contains data the text form cannot represent."""


# ------------------------------------------------------------------- geometry

class NonUnitQuaternion(C3Error):
    pass


class BehindCamera(C3Error):
    pass


class UnsupportedCameraModel(C3Error):
    pass


class DegenerateUp(C3Error):
    """Camera-down directions cancel; no usable up axis."""


class DegenerateConfiguration(C3Error):
    """Point set does not determine a similarity transform."""


class VerticalCamera(C3Error):
    """Camera looks along the up axis; plan heading undefined."""


# ------------------------------------------------------------- correspondence

class NoVisiblePoints(C3Error):
    """Every candidate correspondence for the pair was filtered out."""


class UnknownImage(C3Error):
    pass


# -------------------------------------------------------------------- dataset

class EmptyInput(C3Error):
    pass


class EmptyAfterCrop(C3Error):
    """Crop dropped every correspondence record; resample parameters."""


class VersionMismatch(C3Error):
    """File magic or format version not recognized."""


class ChecksumFailure(C3Error):
    """Payload truncated or CRC mismatch."""


# -------------------------------------------------------------------- metrics

class DimensionMismatch(C3Error):
    pass


class EmptySparseSet(C3Error):
    pass


class MissingPredictions(C3Error):
    """Ground-truth queries lack predictions. ``missing`` lists them."""

    def __init__(self, message, missing=None):
        super().__init__(message)
        self.missing = list(missing) if missing is not None else []


class EmptyGroundTruth(C3Error):
    pass


class EmptyErrors(C3Error):
    pass


class ConfidenceRequired(C3Error):
    pass


class AllZeroDifferences(C3Error):
    pass


class LengthMismatch(C3Error):
    pass


# ----------------------------------------------------------- alignment service

class EmptyModel(C3Error):
    pass


class VersionConflict(C3Error):
    """Optimistic write lost; ``current_version`` holds the stored version."""

    def __init__(self, message, current_version):
        super().__init__(message)
        self.current_version = current_version


class ValidationError(C3Error):
    pass
