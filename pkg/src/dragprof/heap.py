"""Object model and semispace storage for the profiled heap.

Profiled objects are pairs (exactly two slots) and vectors (one slot per
element, payload only; there is no header slot).  Slot values are
immediates or references:

* exact integers and booleans are plain Python ``int``/``bool``;
* the empty list is the ``NIL`` singleton and never touches the heap;
* symbols are interned Python strings kept in a side table outside the
  profiled heap;
* ``Ref`` carries the stable object id plus the address the object had
  when the Ref was minted.  Objects move during collections, so the
  address field is only a hint: every access resolves the current address
  through the object table, which is keyed by the id and never reuses one.
"""

from .errors import (
    DanglingRef,
    IndexOutOfBounds,
    NegativeLength,
    ToSpaceOverflow,
    UnstorableValue,
)

DEFAULT_CAPACITY_SLOTS = 2 ** 16

PAIR = "P"
VECTOR = "V"


class Nil:
    """The empty list: an immediate value, not a heap object."""

    __slots__ = ()

    def __repr__(self):
        return "()"


NIL = Nil()


class Ref:
    """Reference to a heap object: stable id plus an address hint."""

    __slots__ = ("obj_id", "address")

    def __init__(self, obj_id: int, address: int):
        self.obj_id = obj_id
        self.address = address

    def __eq__(self, other):
        return type(other) is Ref and other.obj_id == self.obj_id

    def __hash__(self):
        return hash(self.obj_id)

    def __repr__(self):
        return f"<ref #{self.obj_id} @{self.address}>"


def is_storable(value) -> bool:
    """True if the value may live in a heap slot (immediate or Ref)."""
    return isinstance(value, (int, str, Nil, Ref))


class Forward:
    """Marker written over slot 0 of an evacuated object in from-space."""

    __slots__ = ("address",)

    def __init__(self, address: int):
        self.address = address

    def __repr__(self):
        return f"<forward @{self.address}>"


class ObjectMeta:
    """Object-table entry: kind, payload size and the current address."""

    __slots__ = ("kind", "size_slots", "address")

    def __init__(self, kind: str, size_slots: int, address: int):
        self.kind = kind
        self.size_slots = size_slots
        self.address = address


class Semispace:
    """One half of the heap: a bump-allocated slot array."""

    __slots__ = ("capacity_slots", "used_slots", "slots")

    def __init__(self, capacity_slots: int):
        self.capacity_slots = capacity_slots
        self.used_slots = 0
        self.slots = [None] * capacity_slots

    @property
    def free_slots(self) -> int:
        return self.capacity_slots - self.used_slots

    def alloc(self, n: int):
        """Bump-allocate n slots; None when they do not fit."""
        if self.used_slots + n > self.capacity_slots:
            return None
        addr = self.used_slots
        self.used_slots += n
        return addr

    def reset(self):
        # The stale slot contents are discarded wholesale; they are never
        # read again because the object table points into the other space.
        self.used_slots = 0


class Heap:
    """Two equal semispaces plus the object table.

    This layer is pure storage: it never triggers a collection and never
    talks to the profiler.  Allocation policy lives in runtime.Runtime,
    the copying itself in gc.Collector.
    """

    def __init__(self, capacity_slots: int = DEFAULT_CAPACITY_SLOTS, *,
                 _standby_capacity: int | None = None):
        if capacity_slots < 1:
            raise ValueError("heap capacity must be positive")
        self._spaces = [
            Semispace(capacity_slots),
            Semispace(_standby_capacity
                      if _standby_capacity is not None else capacity_slots),
        ]
        self._active = 0
        self.objects: dict[int, ObjectMeta] = {}
        self._next_id = 0

    @property
    def active(self) -> Semispace:
        return self._spaces[self._active]

    @property
    def standby(self) -> Semispace:
        return self._spaces[1 - self._active]

    @property
    def capacity_slots(self) -> int:
        return self.active.capacity_slots

    @property
    def used_slots(self) -> int:
        return self.active.used_slots

    @property
    def free_slots(self) -> int:
        return self.active.free_slots

    @property
    def object_count(self) -> int:
        return len(self.objects)

    def can_alloc(self, n: int) -> bool:
        return self.active.free_slots >= n

    def alloc_raw(self, kind: str, size_slots: int, values) -> tuple[int, int]:
        """Allocate and initialize an object; the caller guarantees room.

        Returns (obj_id, address).  Ids are never reused.
        """
        if size_slots < 0:
            raise NegativeLength(f"negative object size {size_slots}")
        addr = self.active.alloc(size_slots)
        if addr is None:
            raise AssertionError("alloc_raw called without free space")
        slots = self.active.slots
        for i, v in enumerate(values):
            slots[addr + i] = v
        obj_id = self._next_id
        self._next_id += 1
        self.objects[obj_id] = ObjectMeta(kind, size_slots, addr)
        return obj_id, addr

    def _meta(self, ref: Ref) -> ObjectMeta:
        meta = self.objects.get(ref.obj_id)
        if meta is None:
            raise DanglingRef(f"object #{ref.obj_id} was collected")
        return meta

    def kind_of(self, ref: Ref) -> str:
        return self._meta(ref).kind

    def size_of(self, ref: Ref) -> int:
        return self._meta(ref).size_slots

    def address_of(self, obj_id: int) -> int:
        meta = self.objects.get(obj_id)
        if meta is None:
            raise DanglingRef(f"object #{obj_id} was collected")
        return meta.address

    def read_slot(self, ref: Ref, index: int):
        meta = self._meta(ref)
        if not 0 <= index < meta.size_slots:
            raise IndexOutOfBounds(
                f"slot {index} of object #{ref.obj_id} "
                f"(size {meta.size_slots})")
        return self.active.slots[meta.address + index]

    def write_slot(self, ref: Ref, index: int, value):
        if not is_storable(value):
            raise UnstorableValue(f"{value!r} cannot live in a heap slot")
        meta = self._meta(ref)
        if not 0 <= index < meta.size_slots:
            raise IndexOutOfBounds(
                f"slot {index} of object #{ref.obj_id} "
                f"(size {meta.size_slots})")
        self.active.slots[meta.address + index] = value

    def slot_value(self, obj_id: int, index: int):
        """Raw slot read by id; used by traversals that already hold ids."""
        meta = self.objects[obj_id]
        return self.active.slots[meta.address + index]

    # Collection support.  Only gc.Collector calls these three.

    def copy_to_standby(self, obj_id: int) -> int:
        meta = self.objects[obj_id]
        new_addr = self.standby.alloc(meta.size_slots)
        if new_addr is None:
            raise ToSpaceOverflow(
                f"standby space full while copying object #{obj_id}")
        src = self.active.slots
        dst = self.standby.slots
        base = meta.address
        for i in range(meta.size_slots):
            dst[new_addr + i] = src[base + i]
        if meta.size_slots:
            src[base] = Forward(new_addr)
        meta.address = new_addr
        return new_addr

    def standby_slot(self, index: int):
        v = self.standby.slots[index]
        if type(v) is Forward:
            raise AssertionError("forwarding marker leaked into to-space")
        return v

    def set_standby_slot(self, index: int, value):
        self.standby.slots[index] = value

    def swap_spaces(self):
        self.active.reset()
        self._active = 1 - self._active

    def drop_object(self, obj_id: int):
        del self.objects[obj_id]
