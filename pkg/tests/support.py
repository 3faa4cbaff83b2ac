"""Shared drivers and program templates for the test suite."""

import random

import dragprof
from dragprof.gc import canonical_serialization, reachability_oracle
from dragprof.heap import NIL
from dragprof.runtime import Runtime


def _substitute(text, old, new):
    assert old in text, f"template drifted: {old!r} not found"
    return text.replace(old, new)


def motiv_source(n, spin_steps):
    """The bundled motiv program with its two size knobs substituted."""
    text = dragprof.bundled_program("motiv.scm")
    text = _substitute(text, "(define n 1000)", f"(define n {n})")
    return _substitute(text, "(define spin-steps 5000)",
                       f"(define spin-steps {spin_steps})")


def nullified_source(n):
    text = dragprof.bundled_program("motiv-nullified.scm")
    return _substitute(text, "(define n 1000)", f"(define n {n})")


class HeapDriver:
    """Random mutator over a Runtime, no interpreter involved.

    Keeps an explicit root list registered as a root provider and mixes
    allocations (pairs and short vectors, some dropped immediately),
    root drops, slot writes and use events.  Live-set size stays bounded
    by max_roots plus whatever the rooted objects reach.
    """

    def __init__(self, runtime: Runtime, rng: random.Random, max_roots=40):
        self.rt = runtime
        self.rng = rng
        self.max_roots = max_roots
        self.roots = []
        runtime.add_root_provider(lambda: list(self.roots))

    def _random_value(self):
        r = self.rng.random()
        if self.roots and r < 0.5:
            return self.rng.choice(self.roots)
        if r < 0.75:
            return self.rng.randrange(-100, 100)
        return NIL

    def step(self) -> str:
        rng = self.rng
        rt = self.rt
        op = rng.random()
        if op < 0.45 or not self.roots:
            if rng.random() < 0.7:
                ref = rt.alloc_pair(self._random_value(),
                                    self._random_value())
            else:
                ref = rt.alloc_vector(rng.randrange(0, 4),
                                      self._random_value())
            if rng.random() < 0.8 and len(self.roots) < self.max_roots:
                self.roots.append(ref)
            return "alloc"
        if op < 0.60:
            self.roots.pop(rng.randrange(len(self.roots)))
            return "drop"
        if op < 0.80:
            ref = rng.choice(self.roots)
            size = rt.heap.size_of(ref)
            if size:
                rt.write_slot(ref, rng.randrange(size), self._random_value())
            return "write"
        rt.record_use(rng.choice(self.roots))
        return "use"


def checked_collect(rt: Runtime):
    """Collect once, asserting the survivor set matches the independent
    reachability oracle and the reachable graph is unchanged."""
    live_before = set(rt.heap.objects)
    roots = rt.gather_roots()
    expected = reachability_oracle(rt.heap, roots)
    serialized_before = canonical_serialization(rt.heap, roots)
    stats = rt.collect_now("manual")
    survivors = set(rt.heap.objects)
    assert survivors == expected, "survivor set diverges from the oracle"
    serialized_after = canonical_serialization(rt.heap, rt.gather_roots())
    assert serialized_before == serialized_after, \
        "reachable graph changed across a collection"
    assert stats.survivors + stats.collected == len(live_before)
    assert stats.survivors == len(survivors)
    # every survivor sits inside the (new) active semispace
    for meta in rt.heap.objects.values():
        assert 0 <= meta.address
        assert meta.address + meta.size_slots <= rt.heap.used_slots
    return stats


def run_gc_correctness_session(seed: int, objects_budget=120,
                               heap_slots=8192):
    """One randomized mutation program with oracle-checked collections."""
    rng = random.Random(seed)
    rt = Runtime(heap_slots=heap_slots, gc_interval=10 ** 9)
    driver = HeapDriver(rt, rng)
    allocated = 0
    while allocated < objects_budget:
        if driver.step() == "alloc":
            allocated += 1
        if rng.random() < 0.04:
            checked_collect(rt)
    checked_collect(rt)
    log = rt.terminate()
    ids = [r.obj_id for r in log.records]
    assert len(ids) == allocated, "records lost or duplicated"
    assert len(set(ids)) == allocated, "an object was finalized twice"
    for rec in log.records:
        if rec.last_use_tick is not None:
            assert rec.create_tick <= rec.last_use_tick <= rec.collect_tick
        assert rec.create_tick <= rec.collect_tick
    return log


def run_delta_gc_session(seed: int, gc_interval: int, ops=1200,
                         heap_slots=4096):
    """Randomized run asserting the collection-lag bound: each object is
    collected at most gc_interval allocations after the oracle first
    reports it unreachable.  The oracle runs after every mutator step.

    Returns (objects allocated, objects checked against the bound).
    """
    rng = random.Random(seed)
    first_unreachable = {}  # obj_id -> allocation count at that moment
    violations = []
    checked = 0

    rt = Runtime(heap_slots=heap_slots, gc_interval=gc_interval)

    def on_collection(stats, flushed):
        nonlocal checked
        for rec in flushed:
            # Objects not yet seen unreachable died inside the very step
            # that triggered this collection: lag zero.
            u = first_unreachable.get(rec.obj_id, rt.total_allocations)
            gap = rt.total_allocations - u
            checked += 1
            if gap > gc_interval:
                violations.append((rec.obj_id, gap))

    rt.on_collection = on_collection
    driver = HeapDriver(rt, rng, max_roots=25)
    for _ in range(ops):
        driver.step()
        reachable = reachability_oracle(rt.heap, rt.gather_roots())
        for oid in rt.heap.objects:
            if oid not in reachable and oid not in first_unreachable:
                first_unreachable[oid] = rt.total_allocations
    rt.terminate()
    assert not violations, f"collection lag exceeded K: {violations[:5]}"
    return rt.total_allocations, checked
