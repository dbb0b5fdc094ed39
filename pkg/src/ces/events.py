"""Events, timestamps, the overwrite relation, and the deterministic text codec.

An event is a flat command record: a type tag, an id naming the increment it
edits, a millisecond timestamp, and string-only parameters.  Two events with
the same id overwrite each other; the codec below is byte-deterministic so
that serialized events can double as the tie-breaker for equal timestamps.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from enum import Enum
from typing import Callable, Iterable, Mapping


class CesError(Exception):
    """Base class for all errors raised by this package."""


class EncodeError(CesError):
    pass


class DecodeError(CesError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


# Keys with fixed meaning in the text format; they never appear in params.
RESERVED_KEYS = ("command", "id", "time")

_KEY_RE = re.compile(r"[A-Za-z0-9_.~-]+")
_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\r": "\\r", "\t": "\\t"}
_UNESCAPES = {"\\": "\\", '"': '"', "n": "\n", "r": "\r", "t": "\t"}


@dataclass(frozen=True)
class Event:
    """A serializable command record; the unit of exchange and storage.

    ``id`` and ``time`` may be empty on a freshly built event; the editor
    fills them in on first execution.  Instances are immutable after
    construction and safe to move between threads.
    """

    type_tag: str
    id: str = ""
    time: str = ""
    params: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.type_tag or not _KEY_RE.fullmatch(self.type_tag):
            raise ValueError(f"invalid event type tag {self.type_tag!r}")
        params = dict(self.params)
        for key, value in params.items():
            if key in RESERVED_KEYS:
                raise ValueError(f"param key {key!r} is reserved")
            if not _KEY_RE.fullmatch(key):
                raise ValueError(f"invalid param key {key!r}")
            if not isinstance(value, str):
                raise ValueError(f"param {key!r} must be a string, got {value!r}")
        object.__setattr__(self, "params", params)

    def __hash__(self):
        return hash((self.type_tag, self.id, self.time, frozenset(self.params.items())))


def equals_but_time(a: Event, b: Event) -> bool:
    """True when two events agree in every field except the timestamp."""
    return a.type_tag == b.type_tag and a.id == b.id and a.params == b.params


# ---------------------------------------------------------------------------
# Timestamps
# ---------------------------------------------------------------------------

# ISO-8601 UTC with millisecond precision; lexicographic order on the string
# equals chronological order, which lets overwrite decisions compare strings.
_TIME_PARSE = "%Y-%m-%dT%H:%M:%S.%fZ"


def format_timestamp(moment: datetime) -> str:
    if moment.tzinfo is not None:
        moment = moment.astimezone(timezone.utc)
    return moment.strftime("%Y-%m-%dT%H:%M:%S.") + f"{moment.microsecond // 1000:03d}Z"


def parse_timestamp(value: str) -> datetime:
    return datetime.strptime(value, _TIME_PARSE).replace(tzinfo=timezone.utc)


class Clock:
    """Monotone timestamp source owned by a single editor.

    Caches the last value it returned; if the wall clock has not advanced
    past it, the next read is bumped by one millisecond so that no two
    events from one editor ever carry the same stamp.
    """

    def __init__(self, source: Callable[[], datetime] | None = None):
        self._source = source or (lambda: datetime.now(timezone.utc))
        self._last: str | None = None

    def now(self) -> str:
        stamp = format_timestamp(self._source())
        if self._last is not None and stamp <= self._last:
            stamp = format_timestamp(parse_timestamp(self._last) + timedelta(milliseconds=1))
        self._last = stamp
        return stamp


def stepping_clock(start: str, step_ms: int = 1000) -> Clock:
    """Deterministic clock for tests and simulations: start, start+step, ..."""
    base = parse_timestamp(start)
    calls = [-1]

    def source() -> datetime:
        calls[0] += 1
        return base + timedelta(milliseconds=step_ms * calls[0])

    return Clock(source)


# ---------------------------------------------------------------------------
# Overwrite strategies
# ---------------------------------------------------------------------------


class OverwriteStrategy(str, Enum):
    """Conflict resolution between two events sharing an id.

    Every strategy is a strict total order once tie-broken: for two distinct
    events exactly one overwrites the other, and a byte-identical duplicate
    never overwrites (re-delivery is a no-op).
    """

    LAST_EDIT_WINS = "last-edit-wins"
    FIRST_EDIT_WINS = "first-edit-wins"
    HIGHEST_VERSION_WINS = "highest-version-wins"


def compare_versions(a: str, b: str) -> int:
    """Order version strings component-wise: "1.2" < "1.10" < "2.0"."""
    parts_a, parts_b = a.split("."), b.split(".")
    for x, y in zip(parts_a, parts_b):
        if x == y:
            continue
        if x.isdigit() and y.isdigit():
            xi, yi = int(x), int(y)
            if xi != yi:
                return -1 if xi < yi else 1
            continue  # numerically equal ("07" vs "7")
        return -1 if x < y else 1
    return (len(parts_a) > len(parts_b)) - (len(parts_a) < len(parts_b))


def overwrites(
    new_event: Event,
    old_event: Event,
    strategy: OverwriteStrategy = OverwriteStrategy.LAST_EDIT_WINS,
) -> bool:
    """Decide whether ``new_event`` replaces ``old_event`` in the store.

    Both events must share an id.  Equal timestamps fall back to comparing
    the serialized events, so a duplicate delivery (identical bytes) returns
    False in both directions.
    """
    if new_event.id != old_event.id:
        raise ValueError(
            f"overwrites needs matching ids, got {new_event.id!r} vs {old_event.id!r}"
        )
    if strategy == OverwriteStrategy.HIGHEST_VERSION_WINS:
        cmp = compare_versions(
            new_event.params.get("vTag", ""), old_event.params.get("vTag", "")
        )
        if cmp != 0:
            return cmp > 0
        return _last_edit_wins(new_event, old_event)
    if strategy == OverwriteStrategy.FIRST_EDIT_WINS:
        if old_event.time < new_event.time:
            return False
        if old_event.time == new_event.time:
            return encode([old_event]) < encode([new_event])
        return True
    return _last_edit_wins(new_event, old_event)


def _last_edit_wins(new_event: Event, old_event: Event) -> bool:
    if old_event.time > new_event.time:
        return False
    if old_event.time == new_event.time:
        return encode([old_event]) < encode([new_event])
    return True


# ---------------------------------------------------------------------------
# Text codec
# ---------------------------------------------------------------------------
#
# One block per event, two-space indentation:
#
#     - command: HaveLeaf
#       id: Editor
#       time: 2020-01-01T13:36:00.000Z
#       parent: serv
#       vTag: 1.0
#
# Keys appear in fixed order (command, id, time, then params sorted by key)
# so identical events always produce byte-identical text.


def _plain(value: str) -> bool:
    if not value:
        return False
    return not any(c.isspace() or c in '"\\' or ord(c) < 0x20 for c in value)


def _scalar(value: str) -> str:
    if _plain(value):
        return value
    out = []
    for c in value:
        if c in _ESCAPES:
            out.append(_ESCAPES[c])
        elif ord(c) < 0x20:
            raise EncodeError(f"unsupported control character {c!r} in value")
        else:
            out.append(c)
    return '"' + "".join(out) + '"'


def encode(events: Iterable[Event]) -> str:
    """Serialize events to the deterministic text format."""
    blocks = []
    for event in events:
        lines = [f"- command: {_scalar(event.type_tag)}"]
        if event.id:
            lines.append(f"  id: {_scalar(event.id)}")
        if event.time:
            lines.append(f"  time: {_scalar(event.time)}")
        for key in sorted(event.params):
            lines.append(f"  {key}: {_scalar(event.params[key])}")
        blocks.append("\n".join(lines) + "\n")
    return "".join(blocks)


def _parse_value(raw: str, line: int) -> str:
    if not raw.startswith('"'):
        return raw
    out = []
    i = 1
    while i < len(raw):
        c = raw[i]
        if c == "\\":
            if i + 1 >= len(raw) or raw[i + 1] not in _UNESCAPES:
                raise DecodeError(line, "bad escape sequence in quoted value")
            out.append(_UNESCAPES[raw[i + 1]])
            i += 2
        elif c == '"':
            if raw[i + 1 :].strip():
                raise DecodeError(line, "trailing content after closing quote")
            return "".join(out)
        else:
            out.append(c)
            i += 1
    raise DecodeError(line, "unterminated quoted value")


def _parse_entry(text: str, line: int) -> tuple[str, str]:
    key, sep, rest = text.partition(":")
    if not sep or not _KEY_RE.fullmatch(key):
        raise DecodeError(line, f"expected 'key: value', got {text!r}")
    if rest.startswith(" "):
        rest = rest[1:]
    return key, _parse_value(rest, line)


def decode(text: str) -> list[Event]:
    """Parse text produced by :func:`encode` (or hand-written in its format).

    Unknown keys become params; unknown type tags are preserved, dispatch
    happens in the editor.  Malformed lines and duplicate keys raise
    :class:`DecodeError` naming the offending line.
    """
    events: list[Event] = []
    fields: dict[str, str] | None = None

    def finish():
        if fields is None:
            return
        params = dict(fields)
        tag = params.pop("command")
        events.append(
            Event(tag, id=params.pop("id", ""), time=params.pop("time", ""), params=params)
        )

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.rstrip("\r")
        if not line.strip():
            continue
        if line.startswith("- "):
            key, value = _parse_entry(line[2:], lineno)
            if key != "command":
                raise DecodeError(lineno, "block must start with 'command'")
            finish()
            fields = {"command": value}
        elif line.startswith("  ") and not line.startswith("   "):
            if fields is None:
                raise DecodeError(lineno, "entry outside of an event block")
            key, value = _parse_entry(line[2:], lineno)
            if key in fields:
                raise DecodeError(lineno, f"duplicate key {key!r} in event block")
            fields[key] = value
        else:
            raise DecodeError(lineno, f"unrecognized line {line!r}")
    finish()
    return events
