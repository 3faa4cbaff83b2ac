"""Stop-and-copy collection plus independent verification traversals.

collect() follows the flag/scan/flush protocol: reset every live record's
flag, copy the graph reachable from the roots breadth-first into the
standby space (setting the flag, rewriting the object-table address and
leaving a forwarding marker in the evacuated cell as each object lands),
swap the spaces, then flush every record whose flag stayed false, which
finalizes it with the current clock as its collection tick.

reachability_oracle() and canonical_serialization() are verification
helpers for the test suites.  They share the heap's slot accessors but no
traversal logic with collect(), so they can be used to cross-check it.
"""

from dataclasses import dataclass

from .errors import DanglingRef
from .heap import PAIR, Heap, Nil, Ref


@dataclass(frozen=True)
class CollectionStats:
    trigger: str  # "interval" | "exhaustion" | "manual"
    tick: int
    survivors: int
    collected: int
    slots_copied: int


class Collector:
    """Cheney-style copier over one Heap, wired to one Profiler."""

    def __init__(self, heap: Heap, profiler):
        self.heap = heap
        self.profiler = profiler

    def collect(self, roots, clock: int, trigger: str = "manual"
                ) -> CollectionStats:
        heap = self.heap
        prof = self.profiler
        if heap.standby.used_slots:
            raise AssertionError("standby space not empty before collection")

        prof.reset_flags()
        order: list[int] = []  # copy order; the implicit Cheney queue
        slots_copied = 0

        def evacuate(ref: Ref):
            nonlocal slots_copied
            obj_id = ref.obj_id
            if obj_id not in heap.objects:
                raise DanglingRef(f"root/slot points at collected "
                                  f"object #{obj_id}")
            if prof.is_flagged(obj_id):
                return
            heap.copy_to_standby(obj_id)
            prof.mark_survivor(obj_id, heap.objects[obj_id].address)
            order.append(obj_id)
            slots_copied += heap.objects[obj_id].size_slots

        for ref in roots:
            evacuate(ref)

        scan = 0
        while scan < len(order):
            obj_id = order[scan]
            scan += 1
            meta = heap.objects[obj_id]
            base = meta.address
            for i in range(meta.size_slots):
                v = heap.standby_slot(base + i)
                if type(v) is Ref:
                    evacuate(v)
                    current = heap.objects[v.obj_id].address
                    if v.address != current:
                        heap.set_standby_slot(base + i,
                                              Ref(v.obj_id, current))

        heap.swap_spaces()
        flushed = prof.flush_unflagged(clock)
        for rec in flushed:
            heap.drop_object(rec.obj_id)
        return CollectionStats(trigger, clock, len(order), len(flushed),
                               slots_copied)


def reachability_oracle(heap: Heap, roots) -> set[int]:
    """Exact transitive closure over Ref slots, by brute-force worklist.

    Shares no traversal code with Collector.collect; tests compare the two.
    """
    reached: set[int] = set()
    stack = []
    for ref in roots:
        if ref.obj_id not in heap.objects:
            raise DanglingRef(f"oracle root #{ref.obj_id} was collected")
        if ref.obj_id not in reached:
            reached.add(ref.obj_id)
            stack.append(ref.obj_id)
    while stack:
        obj_id = stack.pop()
        for i in range(heap.objects[obj_id].size_slots):
            v = heap.slot_value(obj_id, i)
            if type(v) is Ref and v.obj_id not in reached:
                if v.obj_id not in heap.objects:
                    raise DanglingRef(f"slot points at collected "
                                      f"object #{v.obj_id}")
                reached.add(v.obj_id)
                stack.append(v.obj_id)
    return reached


def canonical_serialization(heap: Heap, roots) -> str:
    """Deterministic textual form of the graph reachable from the roots.

    Objects are numbered in first-visit order and later visits emit a
    back-reference token, so shared and cyclic structure serializes
    finitely and equality means graph isomorphism (given equal root
    order).  Tokens are type-prefixed to keep the encoding injective.
    """
    out: list[str] = []
    seen: dict[int, int] = {}
    # Frames: ("val", value) emits one value, ("lit", token) emits a token.
    stack = []
    for ref in reversed(list(roots)):
        stack.append(("val", ref))
    while stack:
        op, payload = stack.pop()
        if op == "lit":
            out.append(payload)
            continue
        v = payload
        if type(v) is Ref:
            obj_id = v.obj_id
            if obj_id in seen:
                out.append(f"@{seen[obj_id]}")
                continue
            if obj_id not in heap.objects:
                raise DanglingRef(f"serializing collected object #{obj_id}")
            seen[obj_id] = len(seen)
            meta = heap.objects[obj_id]
            out.append("p(" if meta.kind == PAIR
                       else f"v{meta.size_slots}(")
            stack.append(("lit", ")"))
            for i in range(meta.size_slots - 1, -1, -1):
                stack.append(("val", heap.slot_value(obj_id, i)))
        elif v is True:
            out.append("b:t")
        elif v is False:
            out.append("b:f")
        elif isinstance(v, int):
            out.append(f"i:{v}")
        elif isinstance(v, Nil):
            out.append("nil")
        elif isinstance(v, str):
            out.append(f"s:{v}")
        else:
            raise AssertionError(f"unserializable slot value {v!r}")
    return " ".join(out)
