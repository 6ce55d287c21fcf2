"""ASIP message model and text codec.

One message per line. Commands flow client -> device ("M,m,-115,115"), events flow
device -> client and start with '@' (reports such as "@I,a,3,{0:320,1:340,2:329}") or
'!' (free text). Lines are decimal ASCII with no whitespace; the terminator is never part
of an encoded line.
"""
import re
from dataclasses import dataclass, field
from typing import ClassVar, Iterable, Mapping, Union

from mirto.errors import EncodeError, ParseError, UsageError

SERVICES = {
    "I": "io",
    "M": "motor",
    "E": "encoder",
    "R": "ir-array",
    "B": "bump",
}

PIN_RANGE = (0, 15)
INTERVAL_RANGE = (0, 65535)
POWER_RANGE = (-255, 255)
INT32_RANGE = (-(2**31), 2**31 - 1)

INPUT = 1
INPUT_PULLUP = 2
OUTPUT = 3

_INTEGER = re.compile(r"-?[0-9]+")
MAX_DIGITS = 20


# ---------------------------------------------------------------------------
# Commands (client -> device)
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class _Command:
    SERVICE: ClassVar[str]
    TAG: ClassVar[str]
    FIELDS: ClassVar[tuple[tuple[str, tuple[int, int]], ...]]


@dataclass(frozen=True)
class SetPinMode(_Command):
    SERVICE = "I"
    TAG = "p"
    FIELDS = (("pin", PIN_RANGE), ("mode", (INPUT, OUTPUT)))

    pin: int
    mode: int


@dataclass(frozen=True)
class DigitalWrite(_Command):
    SERVICE = "I"
    TAG = "d"
    FIELDS = (("pin", PIN_RANGE), ("value", (0, 1)))

    pin: int
    value: int


@dataclass(frozen=True)
class AnalogAutoreport(_Command):
    SERVICE = "I"
    TAG = "A"
    FIELDS = (("interval_ms", INTERVAL_RANGE),)

    interval_ms: int


@dataclass(frozen=True)
class IRAutoreport(_Command):
    SERVICE = "R"
    TAG = "A"
    FIELDS = (("interval_ms", INTERVAL_RANGE),)

    interval_ms: int


@dataclass(frozen=True)
class BumpAutoreport(_Command):
    SERVICE = "B"
    TAG = "A"
    FIELDS = (("interval_ms", INTERVAL_RANGE),)

    interval_ms: int


@dataclass(frozen=True)
class EncoderAutoreport(_Command):
    SERVICE = "E"
    TAG = "A"
    FIELDS = (("interval_ms", INTERVAL_RANGE),)

    interval_ms: int


@dataclass(frozen=True)
class SetMotors(_Command):
    SERVICE = "M"
    TAG = "m"
    FIELDS = (("left", POWER_RANGE), ("right", POWER_RANGE))

    left: int
    right: int


@dataclass(frozen=True)
class ResetEncoder(_Command):
    SERVICE = "E"
    TAG = "r"
    FIELDS = (("wheel", (0, 1)),)

    wheel: int


# ---------------------------------------------------------------------------
# Events (device -> client)
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class _Report:
    """Ordered (index, value) pairs, normalised to ascending index order."""

    SERVICE: ClassVar[str]
    TAG: ClassVar[str]
    INDEX_RANGE: ClassVar[tuple[int, int]]
    VALUE_RANGE: ClassVar[tuple[int, int]]

    values: tuple[tuple[int, int], ...] = field(default=())

    def __post_init__(self):
        pairs = tuple(sorted((int(i), int(v)) for i, v in self.values))
        indices = [i for i, _ in pairs]
        if len(set(indices)) != len(indices):
            raise UsageError(f"duplicate index in {type(self).__name__}: {indices}")
        object.__setattr__(self, "values", pairs)

    @classmethod
    def of(cls, mapping: Mapping[int, int] | Iterable[tuple[int, int]]):
        items = mapping.items() if isinstance(mapping, Mapping) else mapping
        return cls(tuple(items))

    def as_dict(self) -> dict[int, int]:
        return dict(self.values)


@dataclass(frozen=True)
class AnalogReport(_Report):
    SERVICE = "I"
    TAG = "a"
    INDEX_RANGE = PIN_RANGE
    VALUE_RANGE = (0, 1023)


@dataclass(frozen=True)
class DigitalReport(_Report):
    SERVICE = "I"
    TAG = "d"
    INDEX_RANGE = PIN_RANGE
    VALUE_RANGE = (0, 1)


@dataclass(frozen=True)
class IRReport(_Report):
    SERVICE = "R"
    TAG = "i"
    INDEX_RANGE = (0, 2)
    VALUE_RANGE = (0, 100)


@dataclass(frozen=True)
class BumpReport(_Report):
    SERVICE = "B"
    TAG = "b"
    INDEX_RANGE = (0, 1)
    VALUE_RANGE = (0, 1)


@dataclass(frozen=True)
class EncoderReport(_Report):
    SERVICE = "E"
    TAG = "e"
    INDEX_RANGE = (0, 1)
    VALUE_RANGE = INT32_RANGE


@dataclass(frozen=True)
class DebugEvent:
    text: str


@dataclass(frozen=True)
class RawMessage:
    """A well-formed line whose service or tag this codec does not know."""

    line: str


AsipMessage = Union[
    SetPinMode,
    DigitalWrite,
    AnalogAutoreport,
    IRAutoreport,
    BumpAutoreport,
    EncoderAutoreport,
    SetMotors,
    ResetEncoder,
    AnalogReport,
    DigitalReport,
    IRReport,
    BumpReport,
    EncoderReport,
    DebugEvent,
    RawMessage,
]

COMMAND_TYPES = (
    SetPinMode,
    DigitalWrite,
    AnalogAutoreport,
    IRAutoreport,
    BumpAutoreport,
    EncoderAutoreport,
    SetMotors,
    ResetEncoder,
)
REPORT_TYPES = (AnalogReport, DigitalReport, IRReport, BumpReport, EncoderReport)

_COMMANDS = {(cls.SERVICE, cls.TAG): cls for cls in COMMAND_TYPES}
_REPORTS = {(cls.SERVICE, cls.TAG): cls for cls in REPORT_TYPES}


# ---------------------------------------------------------------------------
# String helpers
# ---------------------------------------------------------------------------
def index_of_first(haystack: str, needle: str) -> int | None:
    """Index of the first occurrence of needle's first character, or None."""
    if not needle:
        raise UsageError("needle must be non-empty")
    index = haystack.find(needle[0])
    return None if index < 0 else index


def substring_between_braces(text: str) -> str:
    """Characters strictly between the first '{' and the first '}'."""
    start = index_of_first(text, "{")
    if start is None:
        raise ParseError(len(text), "missing '{'")
    end = index_of_first(text, "}")
    if end is None:
        raise ParseError(len(text), "missing '}'")
    if end < start:
        raise ParseError(end, "'}' before '{'")
    return text[start + 1 : end]


# ---------------------------------------------------------------------------
# Encoding
# ---------------------------------------------------------------------------
def encode(msg: AsipMessage) -> str:
    """Render one message as a single line without terminator."""
    match msg:
        case RawMessage(line=line):
            _check_text("line", line)
            return line
        case DebugEvent(text=text):
            _check_text("text", text)
            return "!" + text
        case _Report():
            for index, value in msg.values:
                _check_range("index", index, msg.INDEX_RANGE)
                _check_range("value", value, msg.VALUE_RANGE)
            body = ",".join(f"{i}:{v}" for i, v in msg.values)
            return f"@{msg.SERVICE},{msg.TAG},{len(msg.values)},{{{body}}}"
        case _Command():
            parts = [msg.SERVICE, msg.TAG]
            for name, bounds in msg.FIELDS:
                value = getattr(msg, name)
                _check_range(name, value, bounds)
                parts.append(str(value))
            return ",".join(parts)
    raise EncodeError("message", msg, "not an ASIP message")


def _check_range(name: str, value: object, bounds: tuple[int, int]) -> None:
    if not isinstance(value, int) or isinstance(value, bool):
        raise EncodeError(name, value, "not an integer")
    low, high = bounds
    if not low <= value <= high:
        raise EncodeError(name, value, f"outside [{low}, {high}]")


def _check_text(name: str, text: str) -> None:
    if "\n" in text or "\r" in text:
        raise EncodeError(name, text, "contains a line terminator")
    if not text.isascii():
        raise EncodeError(name, text, "not ASCII")


# ---------------------------------------------------------------------------
# Decoding
# ---------------------------------------------------------------------------
def decode(line: str) -> AsipMessage:
    """Parse one line (terminator already removed, a trailing CR is tolerated)."""
    if line.endswith("\r"):
        line = line[:-1]
    for offset, char in enumerate(line):
        if not char.isascii():
            raise ParseError(offset, "non-ASCII character")
        if char in "\r\n":
            raise ParseError(offset, "embedded line terminator")

    if line.startswith("!"):
        return DebugEvent(line[1:])
    if line.startswith("@"):
        return _decode_report(line)
    return _decode_command(line)


def _fields(text: str, start: int) -> list[tuple[int, str]]:
    """Split text on commas, remembering where each field starts in the line."""
    out = []
    offset = start
    for part in text.split(","):
        out.append((offset, part))
        offset += len(part) + 1
    return out


def _integer(offset: int, text: str) -> int:
    if not _INTEGER.fullmatch(text):
        raise ParseError(offset, f"expected a decimal integer, got {text!r}")
    if len(text.lstrip("-")) > MAX_DIGITS:
        raise ParseError(offset, f"integer field longer than {MAX_DIGITS} digits")
    return int(text)


def _decode_command(line: str) -> AsipMessage:
    fields = _fields(line, 0)
    if len(fields) < 2 or len(fields[0][1]) != 1 or len(fields[1][1]) != 1:
        return RawMessage(line)
    cls = _COMMANDS.get((fields[0][1], fields[1][1]))
    if cls is None:
        return RawMessage(line)

    args = fields[2:]
    values = [_integer(offset, text) for offset, text in args]
    expected = len(cls.FIELDS)
    if len(values) < expected:
        raise ParseError(len(line), f"expected {expected} field(s) after {cls.SERVICE},{cls.TAG}")
    if len(values) > expected:
        raise ParseError(args[expected][0] - 1, "unexpected extra field")
    return cls(*values)


def _decode_report(line: str) -> AsipMessage:
    brace = index_of_first(line, "{")
    header = line[1:] if brace is None else line[1:brace]
    fields = _fields(header, 1)
    if len(fields) < 2 or len(fields[0][1]) != 1 or len(fields[1][1]) != 1:
        return RawMessage(line)
    cls = _REPORTS.get((fields[0][1], fields[1][1]))
    if cls is None:
        return RawMessage(line)

    if brace is None:
        raise ParseError(len(line), "missing '{'")
    # header is "<S>,<t>,<count>," so splitting leaves an empty last field
    if len(fields) != 4 or fields[3][1] != "":
        raise ParseError(brace, "expected '<service>,<tag>,<count>,{'")
    count_offset, count_text = fields[2]
    count = _integer(count_offset, count_text)

    body = substring_between_braces(line)
    close = brace + 1 + len(body)
    if close != len(line) - 1:
        raise ParseError(close + 1, "characters after '}'")

    pairs: list[tuple[int, int]] = []
    seen: set[int] = set()
    if body:
        for offset, entry in _fields(body, brace + 1):
            colon = index_of_first(entry, ":") if entry else None
            if colon is None:
                raise ParseError(offset, "expected '<index>:<value>'")
            index = _integer(offset, entry[:colon])
            value = _integer(offset + colon + 1, entry[colon + 1 :])
            if index < 0:
                raise ParseError(offset, "negative index")
            if index in seen:
                raise ParseError(offset, f"duplicate index {index}")
            seen.add(index)
            pairs.append((index, value))

    if count != len(pairs):
        raise ParseError(count_offset, f"count {count} does not match {len(pairs)} entries")
    return cls(tuple(pairs))
