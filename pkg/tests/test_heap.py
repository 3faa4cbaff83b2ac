import random

import pytest

from dragprof.errors import (
    DanglingRef,
    IndexOutOfBounds,
    NegativeLength,
    OutOfMemory,
    ToSpaceOverflow,
    UnstorableValue,
)
from dragprof.gc import canonical_serialization
from dragprof.heap import NIL, PAIR, Heap, Ref
from dragprof.runtime import Runtime

from support import HeapDriver


class Roots:
    """Explicit root list registered with a runtime."""

    def __init__(self, rt):
        self.refs = []
        rt.add_root_provider(lambda: list(self.refs))


def make_runtime(heap_slots=64, gc_interval=10 ** 9):
    return Runtime(heap_slots=heap_slots, gc_interval=gc_interval)


def test_first_allocation_on_empty_heap():
    rt = make_runtime()
    ref = rt.alloc_pair(NIL, NIL)
    assert ref.obj_id == 0
    assert rt.heap.used_slots == 2


def test_eleventh_alloc_triggers_collection_and_succeeds():
    # 20 slots hold exactly 10 pairs; nothing is rooted, so the 11th
    # allocation exhausts the space, collects all 10, then succeeds.
    rt = make_runtime(heap_slots=20)
    for i in range(10):
        rt.alloc_pair(i, i)
    assert rt.heap.used_slots == 20
    ref = rt.alloc_pair(10, 10)
    assert [s.trigger for s in rt.collections] == ["exhaustion"]
    stats = rt.collections[0]
    assert stats.collected == 10
    assert stats.survivors == 0
    # the collection runs before the 11th creation advances the clock
    assert stats.tick == 10
    assert rt.profiler.record(ref.obj_id).create_tick == 11
    assert rt.heap.used_slots == 2


def test_pair_with_reference_slot():
    # a fresh pair whose car refers to another heap object
    rt = make_runtime()
    roots = Roots(rt)
    o2 = rt.alloc_pair(2, NIL)
    o1 = rt.alloc_pair(o2, NIL)
    roots.refs.append(o1)
    car = rt.read_slot(o1, 0)
    assert type(car) is Ref
    assert car.obj_id == o2.obj_id


def test_alloc_vector_zero_length():
    rt = make_runtime()
    v = rt.alloc_vector(0, NIL)
    assert rt.heap.size_of(v) == 0
    assert rt.heap.used_slots == 0


def test_alloc_vector_fill():
    rt = make_runtime()
    v = rt.alloc_vector(3, 7)
    assert [rt.read_slot(v, i) for i in range(3)] == [7, 7, 7]


def test_sixth_vector_forces_collection():
    # five length-4 vectors fill a 20-slot space; the sixth collects
    rt = make_runtime(heap_slots=20)
    for _ in range(5):
        rt.alloc_vector(4, 0)
    assert rt.heap.used_slots == 20
    rt.alloc_vector(4, 0)
    assert [s.trigger for s in rt.collections] == ["exhaustion"]
    assert rt.collections[0].collected == 5


def test_negative_length_rejected_before_allocation():
    rt = make_runtime()
    with pytest.raises(NegativeLength):
        rt.alloc_vector(-1, NIL)
    assert rt.heap.used_slots == 0
    assert rt.profiler.live_count == 0
    ref = rt.alloc_pair(NIL, NIL)
    assert ref.obj_id == 0  # no id was burned


def test_out_of_memory_when_rooted():
    rt = make_runtime(heap_slots=16)
    roots = Roots(rt)
    for _ in range(8):
        roots.refs.append(rt.alloc_pair(1, 2))
    with pytest.raises(OutOfMemory):
        rt.alloc_pair(3, 4)


def test_write_then_read_roundtrip():
    rt = make_runtime()
    p = rt.alloc_pair(NIL, NIL)
    rt.write_slot(p, 0, 1)
    assert rt.read_slot(p, 0) == 1


def test_read_slot_bounds():
    rt = make_runtime()
    p = rt.alloc_pair(1, 2)
    with pytest.raises(IndexOutOfBounds):
        rt.read_slot(p, 2)
    with pytest.raises(IndexOutOfBounds):
        rt.read_slot(p, -1)
    with pytest.raises(IndexOutOfBounds):
        rt.write_slot(p, 5, 0)


def test_unstorable_value_rejected():
    rt = make_runtime()
    p = rt.alloc_pair(1, 2)
    with pytest.raises(UnstorableValue):
        rt.write_slot(p, 0, object())


def test_dangling_ref_after_collection():
    rt = make_runtime()
    p = rt.alloc_pair(1, 2)
    rt.collect_now()  # nothing rooted
    with pytest.raises(DanglingRef):
        rt.read_slot(p, 0)
    with pytest.raises(DanglingRef):
        rt.write_slot(p, 0, 3)


def test_read_after_move_preserves_values():
    rt = make_runtime()
    roots = Roots(rt)
    inner = rt.alloc_pair(1, 2)
    outer = rt.alloc_pair(inner, NIL)
    roots.refs.append(outer)
    before = canonical_serialization(rt.heap, roots.refs)
    old_addr = rt.heap.address_of(outer.obj_id)
    # garbage in front of the live objects forces them to move
    for _ in range(5):
        rt.alloc_pair(0, 0)
    rt.collect_now()
    assert rt.heap.address_of(outer.obj_id) != old_addr
    assert canonical_serialization(rt.heap, roots.refs) == before
    assert rt.read_slot(rt.read_slot(outer, 0), 0) == 1


def test_identity_stable_across_collections():
    rt = make_runtime()
    roots = Roots(rt)
    p = rt.alloc_pair(1, 2)
    roots.refs.append(p)
    addresses = set()
    for _ in range(4):
        # rooted in front of p, so p's copy target shifts every cycle
        roots.refs.insert(0, rt.alloc_pair(0, 0))
        rt.collect_now()
        assert p.obj_id in rt.heap.objects
        addresses.add(rt.heap.address_of(p.obj_id))
    assert len(addresses) > 1  # it moved, identity stayed


def test_slot_accounting_invariant_random():
    # used_slots always equals the summed size of uncollected objects
    rng = random.Random(20260810)
    rt = make_runtime(heap_slots=4096)
    driver = HeapDriver(rt, rng)
    for step in range(600):
        driver.step()
        if step % 97 == 0:
            rt.collect_now()
        expected = sum(m.size_slots for m in rt.heap.objects.values())
        assert rt.heap.used_slots == expected


def test_to_space_overflow_aborts():
    rt = Runtime(heap_slots=20, gc_interval=10 ** 9, _standby_capacity=4)
    roots = Roots(rt)
    for _ in range(3):
        roots.refs.append(rt.alloc_pair(1, 2))
    with pytest.raises(ToSpaceOverflow):
        rt.collect_now()


def test_heap_standalone_semispace_roles():
    heap = Heap(32)
    assert heap.active.capacity_slots == heap.standby.capacity_slots == 32
    obj_id, addr = heap.alloc_raw(PAIR, 2, (1, 2))
    assert heap.used_slots == 2
    assert heap.slot_value(obj_id, 0) == 1
    heap.copy_to_standby(obj_id)
    heap.swap_spaces()
    assert heap.used_slots == 2
    assert heap.slot_value(obj_id, 1) == 2
