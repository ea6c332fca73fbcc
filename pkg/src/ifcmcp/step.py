"""ISO 10303-21 (STEP physical file) reader and writer.

Entity attributes are held as plain Python values where the mapping is
unambiguous (int, float, str, bool, None for ``$``) plus small wrapper
types for the STEP-specific variants (entity references, enumeration
tokens, typed values, ``*``). Lists are stored as tuples so nesting is
preserved exactly on round-trip.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import DanglingRef, DuplicateId, StepSyntaxError

ISO_OPEN = "ISO-10303-21;"
ISO_CLOSE = "END-ISO-10303-21;"

_KEYWORD_RE = re.compile(r"[A-Z][A-Z0-9_]*")
_CREATED_CLASS_RE = re.compile(r"[A-Z][A-Z0-9]*")


class EntityRef:
    """Reference to another entity instance (``#123``)."""

    __slots__ = ("id",)

    def __init__(self, entity_id: int):
        if entity_id <= 0:
            raise ValueError("entity ids are positive")
        self.id = entity_id

    def __eq__(self, other: object) -> bool:
        return isinstance(other, EntityRef) and other.id == self.id

    def __hash__(self) -> int:
        return hash(("EntityRef", self.id))

    def __repr__(self) -> str:
        return f"EntityRef({self.id})"


class EnumToken:
    """Enumeration literal (``.ELEMENT.``); ``.T.``/``.F.`` map to bool instead."""

    __slots__ = ("name",)

    def __init__(self, name: str):
        self.name = name

    def __eq__(self, other: object) -> bool:
        return isinstance(other, EnumToken) and other.name == self.name

    def __hash__(self) -> int:
        return hash(("EnumToken", self.name))

    def __repr__(self) -> str:
        return f"EnumToken({self.name!r})"


class TypedValue:
    """Select-type wrapper such as ``IFCLABEL('x')`` or ``IFCREAL(0.25)``."""

    __slots__ = ("type_name", "value")

    def __init__(self, type_name: str, value):
        self.type_name = type_name
        self.value = value

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, TypedValue)
            and other.type_name == self.type_name
            and other.value == self.value
        )

    def __hash__(self) -> int:
        return hash(("TypedValue", self.type_name, self.value))

    def __repr__(self) -> str:
        return f"TypedValue({self.type_name!r}, {self.value!r})"


class _Derived:
    """Singleton for the ``*`` (derived attribute) token."""

    __slots__ = ()
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "DERIVED"


DERIVED = _Derived()

UNSET = None  # `$` maps to None


@dataclass
class EntityInstance:
    """One STEP record: ``#id=CLASS(attr, attr, ...);``"""

    id: int
    class_name: str
    attributes: list

    def __post_init__(self):
        if self.id <= 0:
            raise ValueError("entity id must be positive")
        if not self.class_name:
            raise ValueError("class name must be non-empty")


@dataclass
class StepHeader:
    file_description: list[str] = field(default_factory=lambda: [""])
    implementation_level: str = "2;1"
    name: str = ""
    timestamp: str = ""
    author: list[str] = field(default_factory=lambda: [""])
    organization: list[str] = field(default_factory=lambda: [""])
    preprocessor_version: str = "ifcmcp 0.1.0"
    originating_system: str = "ifcmcp"
    authorization: str = ""
    file_schema: list[str] = field(default_factory=lambda: ["IFC4"])


# --- string escape handling ---

def decode_step_string(raw: str) -> str:
    """Decode a STEP string body (quotes already stripped, ``''`` collapsed)."""
    out: list[str] = []
    i = 0
    n = len(raw)
    while i < n:
        c = raw[i]
        if c != "\\":
            out.append(c)
            i += 1
            continue
        if raw.startswith("\\\\", i):
            out.append("\\")
            i += 2
        elif raw.startswith("\\X2\\", i):
            end = raw.find("\\X0\\", i + 4)
            if end < 0:
                out.append(c)
                i += 1
                continue
            hexrun = raw[i + 4:end]
            out.extend(chr(int(hexrun[j:j + 4], 16)) for j in range(0, len(hexrun), 4))
            i = end + 4
        elif raw.startswith("\\X4\\", i):
            end = raw.find("\\X0\\", i + 4)
            if end < 0:
                out.append(c)
                i += 1
                continue
            hexrun = raw[i + 4:end]
            out.extend(chr(int(hexrun[j:j + 8], 16)) for j in range(0, len(hexrun), 8))
            i = end + 4
        elif raw.startswith("\\X\\", i) and i + 5 <= n:
            out.append(chr(int(raw[i + 3:i + 5], 16)))
            i += 5
        elif raw.startswith("\\S\\", i) and i + 4 <= n:
            # ISO 8859 shifted character: add 0x80 to the following char
            out.append(chr(ord(raw[i + 3]) + 0x80))
            i += 4
        else:
            out.append(c)
            i += 1
    return "".join(out)


def encode_step_string(text: str) -> str:
    """Escape a Python string for embedding inside STEP quotes (ASCII-safe)."""
    out: list[str] = []
    run: list[str] = []  # pending non-ASCII chars for one \X2\ / \X4\ block

    def flush_run():
        if not run:
            return
        if all(ord(c) <= 0xFFFF for c in run):
            out.append("\\X2\\" + "".join(f"{ord(c):04X}" for c in run) + "\\X0\\")
        else:
            out.append("\\X4\\" + "".join(f"{ord(c):08X}" for c in run) + "\\X0\\")
        run.clear()

    for c in text:
        if c == "'":
            flush_run()
            out.append("''")
        elif c == "\\":
            flush_run()
            out.append("\\\\")
        elif 0x20 <= ord(c) <= 0x7E:
            flush_run()
            out.append(c)
        else:
            # group BMP and astral chars separately so each block is uniform
            if run and (ord(run[0]) <= 0xFFFF) != (ord(c) <= 0xFFFF):
                flush_run()
            run.append(c)
    flush_run()
    return "".join(out)


def format_real(x: float) -> str:
    """Shortest decimal form (<= 15 significant digits) with a STEP dot."""
    if x != x or x in (float("inf"), float("-inf")):
        raise ValueError(f"cannot serialize non-finite real {x!r}")
    s = None
    for prec in range(1, 16):
        cand = f"{x:.{prec}g}"
        if float(cand) == x:
            s = cand
            break
    if s is None:
        # needs more than 15 digits: drop the tail, then canonicalize the
        # truncated value so that parse -> write is a fixpoint immediately
        return format_real(float(f"{x:.15g}"))
    if "e" in s or "E" in s:
        mantissa, exp = re.split("[eE]", s)
        if "." not in mantissa:
            mantissa += "."
        return f"{mantissa}E{int(exp)}"
    if "." not in s:
        s += "."
    return s


# --- tokenizer ---

_T_KEYWORD = "keyword"
_T_INT = "int"
_T_REAL = "real"
_T_STRING = "string"
_T_ENUM = "enum"
_T_REF = "ref"
_T_PUNCT = "punct"
_T_EOF = "eof"


class _Tokenizer:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.line = 1
        self.col = 1

    def error(self, message: str) -> StepSyntaxError:
        return StepSyntaxError(self.line, self.col, message)

    def _advance(self, count: int):
        chunk = self.text[self.pos:self.pos + count]
        newlines = chunk.count("\n")
        if newlines:
            self.line += newlines
            self.col = count - chunk.rfind("\n")
        else:
            self.col += count
        self.pos += count

    def _skip_ws(self):
        text = self.text
        while self.pos < len(text):
            c = text[self.pos]
            if c in " \t\r\n":
                self._advance(1)
            elif text.startswith("/*", self.pos):
                end = text.find("*/", self.pos + 2)
                if end < 0:
                    raise self.error("unterminated comment")
                self._advance(end + 2 - self.pos)
            else:
                return

    def next(self) -> tuple[str, object]:
        self._skip_ws()
        text = self.text
        if self.pos >= len(text):
            return (_T_EOF, None)
        c = text[self.pos]
        for marker in (ISO_CLOSE[:-1], ISO_OPEN[:-1]):
            if text.startswith(marker, self.pos):
                self._advance(len(marker))
                return (_T_KEYWORD, marker)
        if c in "();,=*$":
            self._advance(1)
            return (_T_PUNCT, c)
        if c == "#":
            m = re.match(r"#(\d+)", text[self.pos:])
            if not m:
                raise self.error("malformed entity reference")
            ref = int(m.group(1))
            if ref <= 0:
                raise self.error("entity ids must be positive")
            self._advance(m.end())
            return (_T_REF, ref)
        if c == "'":
            return self._string()
        if c == ".":
            m = re.match(r"\.([A-Z_][A-Z0-9_]*)\.", text[self.pos:])
            if not m:
                raise self.error("malformed enumeration token")
            self._advance(m.end())
            return (_T_ENUM, m.group(1))
        if c.isdigit() or c in "+-":
            return self._number()
        m = _KEYWORD_RE.match(text, self.pos)
        if m:
            self._advance(m.end() - self.pos)
            return (_T_KEYWORD, m.group(0))
        raise self.error(f"unexpected character {c!r}")

    def _string(self) -> tuple[str, str]:
        text = self.text
        i = self.pos + 1
        parts: list[str] = []
        while True:
            j = text.find("'", i)
            if j < 0:
                raise self.error("unterminated string literal")
            parts.append(text[i:j])
            if text.startswith("''", j):
                parts.append("'")
                i = j + 2
                continue
            self._advance(j + 1 - self.pos)
            return (_T_STRING, decode_step_string("".join(parts)))

    def _number(self) -> tuple[str, object]:
        m = re.match(r"[+-]?\d+(\.\d*)?([Ee][+-]?\d+)?", self.text[self.pos:])
        if not m or not re.match(r"[+-]?\d", m.group(0)):
            raise self.error("malformed number")
        token = m.group(0)
        self._advance(len(token))
        if m.group(1) is not None or m.group(2) is not None:
            return (_T_REAL, float(token))
        return (_T_INT, int(token))


# --- parser ---

class _Parser:
    def __init__(self, text: str):
        self.tok = _Tokenizer(text)
        self.current = self.tok.next()

    def error(self, message: str) -> StepSyntaxError:
        return self.tok.error(message)

    def advance(self):
        self.current = self.tok.next()

    def expect_punct(self, punct: str):
        kind, value = self.current
        if kind != _T_PUNCT or value != punct:
            raise self.error(f"expected {punct!r}, got {value!r}")
        self.advance()

    def expect_keyword(self, word: str):
        kind, value = self.current
        if kind != _T_KEYWORD or value != word:
            raise self.error(f"expected {word}, got {value!r}")
        self.advance()

    def parse_value(self):
        kind, value = self.current
        if kind == _T_PUNCT and value == "$":
            self.advance()
            return None
        if kind == _T_PUNCT and value == "*":
            self.advance()
            return DERIVED
        if kind == _T_PUNCT and value == "(":
            return tuple(self.parse_list())
        if kind == _T_INT:
            self.advance()
            return value
        if kind == _T_REAL:
            self.advance()
            return value
        if kind == _T_STRING:
            self.advance()
            return value
        if kind == _T_REF:
            self.advance()
            return EntityRef(value)
        if kind == _T_ENUM:
            self.advance()
            if value == "T":
                return True
            if value == "F":
                return False
            return EnumToken(value)
        if kind == _T_KEYWORD:
            name = value
            self.advance()
            inner = self.parse_list()
            if len(inner) == 1:
                return TypedValue(name, inner[0])
            return TypedValue(name, tuple(inner))
        raise self.error(f"expected a value, got {value!r}")

    def parse_list(self) -> list:
        self.expect_punct("(")
        items: list = []
        kind, value = self.current
        if kind == _T_PUNCT and value == ")":
            self.advance()
            return items
        while True:
            items.append(self.parse_value())
            kind, value = self.current
            if kind == _T_PUNCT and value == ",":
                self.advance()
                continue
            self.expect_punct(")")
            return items

    def parse_record(self) -> tuple[str, list]:
        kind, value = self.current
        if kind != _T_KEYWORD:
            raise self.error(f"expected record keyword, got {value!r}")
        name = value
        self.advance()
        args = self.parse_list()
        self.expect_punct(";")
        return name, args


def _header_string(value, default: str = "") -> str:
    return value if isinstance(value, str) else default

def _header_strings(value) -> list[str]:
    if isinstance(value, tuple):
        return [v for v in value if isinstance(v, str)]
    return []


def parse_step(data: bytes | str) -> tuple[StepHeader, dict[int, EntityInstance]]:
    """Parse a STEP exchange file into a header and entity map.

    Forward references are permitted; every reference is checked after
    the full pass and :class:`DanglingRef` raised if any fail to resolve.
    """
    text = data.decode("iso-8859-1") if isinstance(data, (bytes, bytearray)) else data
    parser = _Parser(text)

    parser.expect_keyword(ISO_OPEN[:-1])
    parser.expect_punct(";")

    parser.expect_keyword("HEADER")
    parser.expect_punct(";")
    header = StepHeader()
    while True:
        kind, value = parser.current
        if kind == _T_KEYWORD and value == "ENDSEC":
            parser.advance()
            parser.expect_punct(";")
            break
        name, args = parser.parse_record()
        if name == "FILE_DESCRIPTION":
            if len(args) >= 1:
                header.file_description = _header_strings(args[0])
            if len(args) >= 2:
                header.implementation_level = _header_string(args[1], "2;1")
        elif name == "FILE_NAME":
            fields = list(args) + [None] * (7 - len(args))
            header.name = _header_string(fields[0])
            header.timestamp = _header_string(fields[1])
            header.author = _header_strings(fields[2])
            header.organization = _header_strings(fields[3])
            header.preprocessor_version = _header_string(fields[4])
            header.originating_system = _header_string(fields[5])
            header.authorization = _header_string(fields[6])
        elif name == "FILE_SCHEMA":
            if args and isinstance(args[0], tuple):
                header.file_schema = _header_strings(args[0])
        # other header records (FILE_POPULATION etc.) are tolerated and dropped

    parser.expect_keyword("DATA")
    parser.expect_punct(";")
    entities: dict[int, EntityInstance] = {}
    while True:
        kind, value = parser.current
        if kind == _T_KEYWORD and value == "ENDSEC":
            parser.advance()
            parser.expect_punct(";")
            break
        if kind != _T_REF:
            raise parser.error(f"expected #id=... record, got {value!r}")
        entity_id = value
        parser.advance()
        parser.expect_punct("=")
        name, args = parser.parse_record()
        if entity_id in entities:
            raise DuplicateId(entity_id)
        entities[entity_id] = EntityInstance(entity_id, name, args)

    parser.expect_keyword(ISO_CLOSE[:-1])
    parser.expect_punct(";")

    dangling = sorted(
        {ref.id for inst in entities.values() for ref in iter_refs(inst.attributes)
         if ref.id not in entities}
    )
    if dangling:
        raise DanglingRef(dangling)
    return header, entities


def iter_refs(value):
    """Yield every EntityRef reachable inside an attribute value."""
    stack = [value]
    while stack:
        v = stack.pop()
        if isinstance(v, EntityRef):
            yield v
        elif isinstance(v, (tuple, list)):
            stack.extend(v)
        elif isinstance(v, TypedValue):
            stack.append(v.value)


# --- writer ---

def format_value(value) -> str:
    if value is None:
        return "$"
    if value is DERIVED:
        return "*"
    if isinstance(value, bool):
        return ".T." if value else ".F."
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format_real(value)
    if isinstance(value, str):
        return f"'{encode_step_string(value)}'"
    if isinstance(value, EntityRef):
        return f"#{value.id}"
    if isinstance(value, EnumToken):
        return f".{value.name}."
    if isinstance(value, TypedValue):
        return f"{value.type_name}({format_value(value.value)})"
    if isinstance(value, (tuple, list)):
        return "(" + ",".join(format_value(v) for v in value) + ")"
    raise TypeError(f"cannot serialize attribute value {value!r}")


def write_step(header: StepHeader, entities: dict[int, EntityInstance]) -> bytes:
    """Serialize header + entities deterministically (ascending id order)."""
    dangling = sorted(
        {ref.id for inst in entities.values() for ref in iter_refs(inst.attributes)
         if ref.id not in entities}
    )
    if dangling:
        raise DanglingRef(dangling)

    lines = [ISO_OPEN, "HEADER;"]
    descs = tuple(header.file_description) or ("",)
    lines.append(
        "FILE_DESCRIPTION(%s,%s);"
        % (format_value(descs), format_value(header.implementation_level))
    )
    lines.append(
        "FILE_NAME(%s,%s,%s,%s,%s,%s,%s);"
        % (
            format_value(header.name),
            format_value(header.timestamp),
            format_value(tuple(header.author) or ("",)),
            format_value(tuple(header.organization) or ("",)),
            format_value(header.preprocessor_version),
            format_value(header.originating_system),
            format_value(header.authorization),
        )
    )
    lines.append("FILE_SCHEMA(%s);" % format_value(tuple(header.file_schema)))
    lines.append("ENDSEC;")
    lines.append("DATA;")
    for entity_id in sorted(entities):
        inst = entities[entity_id]
        args = ",".join(format_value(v) for v in inst.attributes)
        lines.append(f"#{inst.id}={inst.class_name}({args});")
    lines.append("ENDSEC;")
    lines.append(ISO_CLOSE)
    lines.append("")
    return "\n".join(lines).encode("iso-8859-1")
