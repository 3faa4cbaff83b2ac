"""Post-processing of trace logs into drag statistics and plot series.

Everything here is a pure function over an immutable TraceLog: per-object
drag, reachable/live curves, space-time integrals with the potential
savings percentage, dead-object counts against a threshold, the drag
summary and the drag distribution histogram.

Conventions: runtime is the log's end_tick; percentages are computed at
full precision and rendered with two decimals in the reports.  An object
is counted as dead when its drag exceeds the threshold, which defaults
to the run's collection interval so that objects reclaimed by the very
next collection after their last use are not flagged.
"""

import csv
from dataclasses import dataclass

from .profiler import TraceLog

HISTOGRAM_BINS = 20
BIN_WIDTH_PCT = 100 / HISTOGRAM_BINS


@dataclass(frozen=True)
class DragRecord:
    obj_id: int
    drag_ticks: int
    drag_pct: float
    censored: bool


@dataclass(frozen=True)
class CurveSeries:
    sample_interval: int
    points: list  # (tick, reachable_count, live_count) triples


@dataclass(frozen=True)
class DragReport:
    source: str
    end_tick: int
    allocated: int
    dead_count: int
    dead_pct: float
    max_drag: int
    max_drag_pct: float
    avg_drag: float
    avg_drag_pct: float
    reachable_integral: int
    live_integral: int
    savings_pct: float
    histogram: list  # dead objects per drag-percentage bin


def drag(record, end_tick: int) -> DragRecord:
    """Drag of one finalized record: collection minus last use, or minus
    creation when the object was never used."""
    last = record.last_use_tick
    if last is None:
        last = record.create_tick
    ticks = record.collect_tick - last
    pct = (ticks / end_tick * 100) if end_tick > 0 else 0.0
    return DragRecord(record.obj_id, ticks, pct, record.censored)


def drags_of(log: TraceLog) -> list:
    return [drag(r, log.end_tick) for r in log.records]


def curves(log: TraceLog, sample_interval: int | None = None) -> CurveSeries:
    """Sample reachable and live object counts across the run.

    At sample tick t an object is reachable when create <= t < collect
    (censored records stay reachable through end_tick) and live when
    create <= t <= last_use; never-used objects are never live.
    """
    end = log.end_tick
    if sample_interval is None:
        sample_interval = max(1, end // 500)
    if sample_interval < 1:
        raise ValueError("sample_interval must be at least 1")
    reach_events = []
    live_events = []
    for r in log.records:
        reach_events.append((r.create_tick, 1))
        bound = r.collect_tick + 1 if r.censored else r.collect_tick
        reach_events.append((bound, -1))
        if r.last_use_tick is not None:
            live_events.append((r.create_tick, 1))
            live_events.append((r.last_use_tick + 1, -1))
    reach_events.sort()
    live_events.sort()
    points = []
    ri = li = 0
    reach = live = 0
    for t in range(0, end + 1, sample_interval):
        while ri < len(reach_events) and reach_events[ri][0] <= t:
            reach += reach_events[ri][1]
            ri += 1
        while li < len(live_events) and live_events[li][0] <= t:
            live += live_events[li][1]
            li += 1
        points.append((t, reach, live))
    return CurveSeries(sample_interval, points)


def savings_pct(reachable_integral, live_integral) -> float:
    """Potential savings: the dead share of the reachable space-time
    product, as a percentage.  Zero when nothing was reachable."""
    if reachable_integral <= 0:
        return 0.0
    return (reachable_integral - live_integral) / reachable_integral * 100


def space_time(series: CurveSeries):
    """Left-sum space-time integrals of the two curves, in object-ticks,
    plus the savings percentage."""
    s = series.sample_interval
    reachable = sum(p[1] for p in series.points) * s
    live = sum(p[2] for p in series.points) * s
    return reachable, live, savings_pct(reachable, live)


def drag_summary(drags, end_tick: int):
    """(max, max %, average, average %) of drag over all records,
    censored included; zeros for an empty input."""
    if not drags:
        return 0, 0.0, 0.0, 0.0
    max_drag = max(d.drag_ticks for d in drags)
    avg_drag = sum(d.drag_ticks for d in drags) / len(drags)
    if end_tick > 0:
        return (max_drag, max_drag / end_tick * 100,
                avg_drag, avg_drag / end_tick * 100)
    return max_drag, 0.0, avg_drag, 0.0


def dead_objects(drags, end_tick: int, threshold_ticks: int):
    """(allocated, dead count, dead %) where dead means drag strictly
    above the threshold."""
    if threshold_ticks < 0:
        raise ValueError("threshold_ticks must be non-negative")
    allocated = len(drags)
    dead = sum(1 for d in drags if d.drag_ticks > threshold_ticks)
    pct = (dead / allocated * 100) if allocated else 0.0
    return allocated, dead, pct


def histogram(drags, end_tick: int) -> list:
    """Counts per drag-percentage bin: bin b covers [5b, 5(b+1)) with
    100 percent landing in the last bin.  Sums to len(drags)."""
    bins = [0] * HISTOGRAM_BINS
    for d in drags:
        pct = (d.drag_ticks / end_tick * 100) if end_tick > 0 else 0.0
        b = min(int(pct // BIN_WIDTH_PCT), HISTOGRAM_BINS - 1)
        bins[b] += 1
    return bins


def build_report(log: TraceLog, sample_interval: int | None = None,
                 dead_threshold: int | None = None):
    """Aggregate one log into (DragReport, CurveSeries).

    The report's histogram covers dead objects only, so its bin counts
    sum to dead_count; the histogram() function itself is total and can
    be applied to any drag list.
    """
    if dead_threshold is None:
        dead_threshold = log.gc_interval
    all_drags = drags_of(log)
    series = curves(log, sample_interval)
    reachable, live, savings = space_time(series)
    max_drag, max_pct, avg_drag, avg_pct = drag_summary(all_drags,
                                                        log.end_tick)
    allocated, dead_count, dead_pct = dead_objects(all_drags, log.end_tick,
                                                   dead_threshold)
    dead_drags = [d for d in all_drags if d.drag_ticks > dead_threshold]
    report = DragReport(
        source=log.source,
        end_tick=log.end_tick,
        allocated=allocated,
        dead_count=dead_count,
        dead_pct=dead_pct,
        max_drag=max_drag,
        max_drag_pct=max_pct,
        avg_drag=avg_drag,
        avg_drag_pct=avg_pct,
        reachable_integral=reachable,
        live_integral=live,
        savings_pct=savings,
        histogram=histogram(dead_drags, log.end_tick),
    )
    return report, series


# ---------------------------------------------------------------------------
# Output files

REPORT_FIELDS = [
    "source", "end_tick", "allocated", "dead_count", "dead_pct",
    "max_drag", "max_drag_pct", "avg_drag", "avg_drag_pct",
    "reachable_integral", "live_integral", "savings_pct",
]


def write_curves_csv(series: CurveSeries, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["tick", "reachable", "live"])
    for t, reach, live in series.points:
        w.writerow([t, reach, live])


def write_histogram_csv(bins, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["bin_lo", "bin_hi", "count"])
    for b, count in enumerate(bins):
        w.writerow([b * 5, (b + 1) * 5, count])


def write_report_csv(report: DragReport, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(REPORT_FIELDS)
    w.writerow([
        report.source,
        report.end_tick,
        report.allocated,
        report.dead_count,
        f"{report.dead_pct:.2f}",
        report.max_drag,
        f"{report.max_drag_pct:.2f}",
        f"{report.avg_drag:.2f}",
        f"{report.avg_drag_pct:.2f}",
        report.reachable_integral,
        report.live_integral,
        f"{report.savings_pct:.2f}",
    ])


def format_text_report(report: DragReport, dead_threshold: int) -> str:
    lines = [
        f"drag report: source={report.source}  "
        f"runtime={report.end_tick} ticks",
        "",
        "space-time product",
        "  reachable-integral  live-integral  potential-savings-%",
        f"  {report.reachable_integral:<18}  {report.live_integral:<13}  "
        f"{report.savings_pct:.2f}",
        "",
        f"dead objects (drag > {dead_threshold} ticks)",
        "  allocated  dead  dead-%",
        f"  {report.allocated:<9}  {report.dead_count:<4}  "
        f"{report.dead_pct:.2f}",
        "",
        "drag vs runtime",
        "  max-drag  max-drag-%  avg-drag  avg-drag-%",
        f"  {report.max_drag:<8}  {report.max_drag_pct:<10.2f}  "
        f"{report.avg_drag:<8.2f}  {report.avg_drag_pct:.2f}",
        "",
        "drag distribution (dead objects, drag as % of runtime)",
    ]
    for b, count in enumerate(report.histogram):
        lo, hi = b * 5, (b + 1) * 5
        closer = "]" if hi == 100 else ")"
        lines.append(f"  [{lo:3d},{hi:4d}{closer}  {count}")
    return "\n".join(lines) + "\n"
