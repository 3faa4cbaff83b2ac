"""Lifetime registry, logical clock and the trace log format.

Every object under observation owns one LifetimeRecord holding its
creation tick, most recent use tick (never-used objects keep the sentinel)
and, once finalized, its collection tick.  The logical clock advances by
one for every creation and every use; collections do not advance it.  A
run's termination counts as one final clock step, so end_tick is always
strictly greater than the tick of the last recorded event.

The collector drives the flag protocol in a fixed order: reset_flags,
then mark_survivor for every copied object, then flush_unflagged, which
finalizes everything whose flag stayed false.  finalize() closes the run,
emitting the still-registered records as censored.

Serialized log format (line oriented, UTF-8, bit exact):

    DRAGLOG 1 gc_interval=<K> heap_slots=<C> source=<name>
    OBJ <id> <P|V> <size_slots> <create> <last_use|-1> <collect> <C|F>
    END <end_tick>

``C`` marks a censored record (object still reachable at termination),
``F`` one that was collected by the garbage collector.
"""

import os
from dataclasses import dataclass, field

from .errors import (
    DraglogFormatError,
    DuplicateId,
    ProtocolViolation,
    UnknownId,
)
from .heap import PAIR, VECTOR

NEVER_USED = -1  # wire-format sentinel; in-memory records use None

_MUTATING = 0
_MARKING = 1


@dataclass
class LifetimeRecord:
    obj_id: int
    kind: str
    size_slots: int
    create_tick: int
    last_use_tick: int | None = None
    survived_flag: bool = False
    collect_tick: int | None = None
    censored: bool = False


@dataclass
class TraceLog:
    gc_interval: int
    heap_slots: int
    source: str
    records: list[LifetimeRecord] = field(default_factory=list)
    end_tick: int = 0


class Profiler:
    """Owns the clock and the records of all uncollected objects."""

    def __init__(self, gc_interval: int, heap_slots: int,
                 source: str = "<memory>", on_event=None):
        self.gc_interval = gc_interval
        self.heap_slots = heap_slots
        self.source = source
        self.on_event = on_event
        self.clock = 0
        self._live: dict[int, LifetimeRecord] = {}
        self._finalized: list[LifetimeRecord] = []
        self._phase = _MUTATING
        self._finished = False

    @property
    def live_count(self) -> int:
        return len(self._live)

    @property
    def finalized_records(self) -> list[LifetimeRecord]:
        return self._finalized

    def record(self, obj_id: int) -> LifetimeRecord:
        rec = self._live.get(obj_id)
        if rec is None:
            raise UnknownId(f"no live record for object #{obj_id}")
        return rec

    def is_flagged(self, obj_id: int) -> bool:
        return self._live[obj_id].survived_flag

    def record_creation(self, obj_id: int, kind: str, size_slots: int) -> int:
        if self._finished:
            raise ProtocolViolation("event recorded after finalize")
        if obj_id in self._live:
            raise DuplicateId(f"object #{obj_id} already registered")
        self.clock += 1
        self._live[obj_id] = LifetimeRecord(obj_id, kind, size_slots,
                                            create_tick=self.clock)
        if self.on_event is not None:
            self.on_event("create", obj_id, self.clock)
        return self.clock

    def record_use(self, obj_id: int) -> int:
        if self._finished:
            raise ProtocolViolation("event recorded after finalize")
        rec = self._live.get(obj_id)
        if rec is None:
            raise UnknownId(f"use of unregistered object #{obj_id}")
        self.clock += 1
        rec.last_use_tick = self.clock
        if self.on_event is not None:
            self.on_event("use", obj_id, self.clock)
        return self.clock

    # Flag protocol, called only by the collector in this order.

    def reset_flags(self):
        if self._phase != _MUTATING:
            raise ProtocolViolation("reset_flags during an open collection")
        for rec in self._live.values():
            rec.survived_flag = False
        self._phase = _MARKING

    def mark_survivor(self, obj_id: int, new_address: int):
        # new_address is the protocol's key rewrite; the heap's object
        # table is the authority for addresses, so it is not stored here.
        if self._phase != _MARKING:
            raise ProtocolViolation("mark_survivor outside a collection")
        rec = self._live.get(obj_id)
        if rec is None:
            raise UnknownId(f"survivor #{obj_id} has no record")
        rec.survived_flag = True

    def flush_unflagged(self, clock: int) -> list[LifetimeRecord]:
        if self._phase != _MARKING:
            raise ProtocolViolation("flush_unflagged before reset/marks")
        flushed = []
        for rec in self._live.values():
            if not rec.survived_flag:
                rec.collect_tick = clock
                rec.censored = False
                flushed.append(rec)
        for rec in flushed:
            del self._live[rec.obj_id]
        self._finalized.extend(flushed)
        self._phase = _MUTATING
        return flushed

    def termination_tick(self) -> int:
        """Count the run's termination as one final clock step."""
        if self._finished:
            raise ProtocolViolation("termination after finalize")
        self.clock += 1
        return self.clock

    def finalize(self, end_tick: int) -> TraceLog:
        if self._finished:
            raise ProtocolViolation("finalize called twice")
        if self._phase != _MUTATING:
            raise ProtocolViolation("finalize during an open collection")
        self._finished = True
        for rec in self._live.values():
            rec.collect_tick = end_tick
            rec.censored = True
            self._finalized.append(rec)
        self._live.clear()
        self._finalized.sort(key=lambda r: (r.collect_tick, r.obj_id))
        return TraceLog(self.gc_interval, self.heap_slots, self.source,
                        self._finalized, end_tick)


def format_draglog(log: TraceLog) -> str:
    lines = [f"DRAGLOG 1 gc_interval={log.gc_interval} "
             f"heap_slots={log.heap_slots} source={log.source}"]
    for r in log.records:
        last_use = NEVER_USED if r.last_use_tick is None else r.last_use_tick
        flag = "C" if r.censored else "F"
        lines.append(f"OBJ {r.obj_id} {r.kind} {r.size_slots} "
                     f"{r.create_tick} {last_use} {r.collect_tick} {flag}")
    lines.append(f"END {log.end_tick}")
    return "\n".join(lines) + "\n"


def write_draglog(log: TraceLog, path):
    """Write atomically: a temp file in the same directory, then rename."""
    path = os.fspath(path)
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_draglog(log))
    os.replace(tmp, path)


def _parse_int(text: str, what: str, line_no: int) -> int:
    try:
        return int(text)
    except ValueError:
        raise DraglogFormatError(f"bad {what} {text!r}", line_no) from None


def parse_draglog(text: str) -> TraceLog:
    lines = text.splitlines()
    if not lines:
        raise DraglogFormatError("empty file", 1)
    head = lines[0].split(" ", 4)
    if (len(head) != 5 or head[0] != "DRAGLOG" or head[1] != "1"
            or not head[2].startswith("gc_interval=")
            or not head[3].startswith("heap_slots=")
            or not head[4].startswith("source=")):
        raise DraglogFormatError("bad header", 1)
    gc_interval = _parse_int(head[2][len("gc_interval="):], "gc_interval", 1)
    heap_slots = _parse_int(head[3][len("heap_slots="):], "heap_slots", 1)
    source = head[4][len("source="):]

    records = []
    end_tick = None
    for i, line in enumerate(lines[1:], start=2):
        if line.startswith("OBJ "):
            if end_tick is not None:
                raise DraglogFormatError("record after END line", i)
            parts = line.split(" ")
            if len(parts) != 8:
                raise DraglogFormatError(
                    f"expected 8 fields, got {len(parts)}", i)
            _, obj_id, kind, size, create, last_use, collect, flag = parts
            if kind not in (PAIR, VECTOR):
                raise DraglogFormatError(f"bad kind {kind!r}", i)
            if flag not in ("C", "F"):
                raise DraglogFormatError(f"bad censored flag {flag!r}", i)
            last_use_tick = _parse_int(last_use, "last_use", i)
            records.append(LifetimeRecord(
                obj_id=_parse_int(obj_id, "obj_id", i),
                kind=kind,
                size_slots=_parse_int(size, "size_slots", i),
                create_tick=_parse_int(create, "create_tick", i),
                last_use_tick=(None if last_use_tick == NEVER_USED
                               else last_use_tick),
                collect_tick=_parse_int(collect, "collect_tick", i),
                censored=(flag == "C"),
            ))
        elif line.startswith("END "):
            if end_tick is not None:
                raise DraglogFormatError("duplicate END line", i)
            end_tick = _parse_int(line[4:], "end_tick", i)
        else:
            raise DraglogFormatError(f"unrecognized line {line!r}", i)
    if end_tick is None:
        raise DraglogFormatError("missing END line", len(lines) + 1)
    return TraceLog(gc_interval, heap_slots, source, records, end_tick)


def read_draglog(path) -> TraceLog:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_draglog(fh.read())
