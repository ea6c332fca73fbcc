"""Exception types shared across the toolkit.

Every tool-facing failure derives from :class:`IfcError` so the service
layer can map it to an in-band error payload with a stable ``type`` name.
"""

from __future__ import annotations


class IfcError(Exception):
    """Base class for all domain errors surfaced through the tool API."""

    @property
    def type_name(self) -> str:
        return type(self).__name__


# --- STEP serialization ---

class StepSyntaxError(IfcError):
    def __init__(self, line: int, col: int, message: str):
        super().__init__(f"line {line}, col {col}: {message}")
        self.line = line
        self.col = col


class DuplicateId(IfcError):
    def __init__(self, entity_id: int):
        super().__init__(f"duplicate entity id #{entity_id}")
        self.entity_id = entity_id


class DanglingRef(IfcError):
    def __init__(self, ids: list[int]):
        ids = sorted(ids)
        super().__init__(f"unresolved entity reference(s): {', '.join('#%d' % i for i in ids)}")
        self.ids = ids


class GuidError(IfcError):
    pass


# --- model layer ---

class UnknownGuid(IfcError):
    def __init__(self, guid: str):
        super().__init__(f"no entity with GlobalId {guid!r}")
        self.guid = guid


class UnknownAttribute(IfcError):
    def __init__(self, name: str, class_name: str = ""):
        detail = f" on {class_name}" if class_name else ""
        super().__init__(f"unknown or non-editable attribute {name!r}{detail}")
        self.name = name


class UnknownStorey(IfcError):
    pass


class CannotDeleteSpatial(IfcError):
    pass


class EmptySpec(IfcError):
    pass


# --- geometry ---

class DegeneratePolygon(IfcError):
    pass


class NonPositiveDepth(IfcError):
    pass


class ZeroLengthAxis(IfcError):
    pass


class EmptyMesh(IfcError):
    pass


class DegenerateFace(IfcError):
    def __init__(self, index: int, message: str = ""):
        super().__init__(message or f"degenerate or invalid face at index {index}")
        self.index = index


class SlopeOutOfRange(IfcError):
    pass


class SkeletonFailure(IfcError):
    pass


# --- element builders ---

class InvalidParams(IfcError):
    pass


class OpeningOutOfBounds(IfcError):
    pass


class WallsNotClosed(IfcError):
    pass


class ClassNotAllowed(IfcError):
    pass


class NotADoor(IfcError):
    pass


# --- queries / DSL ---

class ParseError(IfcError):
    def __init__(self, pos: int, expected: str):
        super().__init__(f"parse error at position {pos}: expected {expected}")
        self.pos = pos
        self.expected = expected


class BudgetExceeded(IfcError):
    pass


class TypeMismatch(IfcError):
    pass


class UnknownField(IfcError):
    def __init__(self, name: str):
        super().__init__(f"unknown field {name!r}")
        self.name = name


# --- knowledge store ---

class IoError(IfcError):
    def __init__(self, path: str, message: str = ""):
        super().__init__(f"{path}: {message}" if message else str(path))
        self.path = path


class EmptyIndex(IfcError):
    pass


# --- service / snapshot ---

class EmptyModel(IfcError):
    pass


class DuplicateName(IfcError):
    pass


class StepFailed(IfcError):
    def __init__(self, index: int, reason: str):
        super().__init__(f"step {index} failed: {reason}")
        self.index = index
        self.reason = reason
