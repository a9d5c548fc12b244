"""Result emission: per-slot event tables, key files, metric summaries and
plot-ready per-detector traces.

Formats are versioned through a header line (events, traces) or a ``format``
key (metrics, records) and chosen so that every emitted file parses back into
the in-memory values exactly: floats are written with ``repr``, which
round-trips IEEE doubles.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .scenario import RunRecord

__all__ = [
    "MetricsSummary",
    "summarize",
    "emit_outputs",
    "save_record",
    "load_record",
    "read_events",
    "read_key",
    "load_metrics",
]

EVENTS_HEADER = "# dprsim-events/1"
TRACE_HEADER = "# dprsim-trace/1"
METRICS_FORMAT = "dprsim-metrics/1"


@dataclass(eq=False)
class MetricsSummary:
    """Everything derived from one run record; recomputation is idempotent."""

    protocol: str
    qber: float | None
    sifted_length: int
    visibility_overall: float | None
    visibility_per_class: dict[str, float | None]
    capture_fraction: float | None
    induced_qber: float | None
    induced_visibility_drop: float | None
    bob_record_equals_eve_readings: bool | None = None
    alarms: dict[str, bool] = field(default_factory=dict)
    feasibility: dict[str, bool] | None = None
    detector_counts: dict[str, int] = field(default_factory=dict)
    detected_intensity: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "format": METRICS_FORMAT,
            "protocol": self.protocol,
            "qber": self.qber,
            "sifted_length": self.sifted_length,
            "visibility_overall": self.visibility_overall,
            "visibility_per_class": dict(self.visibility_per_class),
            "capture_fraction": self.capture_fraction,
            "induced_qber": self.induced_qber,
            "induced_visibility_drop": self.induced_visibility_drop,
            "bob_record_equals_eve_readings": self.bob_record_equals_eve_readings,
            "alarms": dict(self.alarms),
            "feasibility": None if self.feasibility is None else dict(self.feasibility),
            "detector_counts": dict(self.detector_counts),
            "detected_intensity": dict(self.detected_intensity),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "MetricsSummary":
        if d.get("format") != METRICS_FORMAT:
            raise ValueError(f"unsupported metrics format {d.get('format')!r}")
        return cls(
            protocol=d["protocol"],
            qber=d["qber"],
            sifted_length=d["sifted_length"],
            visibility_overall=d["visibility_overall"],
            visibility_per_class=dict(d["visibility_per_class"]),
            capture_fraction=d["capture_fraction"],
            induced_qber=d["induced_qber"],
            induced_visibility_drop=d["induced_visibility_drop"],
            bob_record_equals_eve_readings=d["bob_record_equals_eve_readings"],
            alarms=dict(d["alarms"]),
            feasibility=None if d["feasibility"] is None else dict(d["feasibility"]),
            detector_counts=dict(d["detector_counts"]),
            detected_intensity=dict(d["detected_intensity"]),
        )


def summarize(record: RunRecord) -> MetricsSummary:
    """Recompute the metric summary from a run record alone."""
    run = record.protocol_run
    vis = run.visibility_report
    per_class: dict[str, float | None] = {}
    overall = None
    if vis is not None:
        per_class = {s: c.visibility for s, c in vis.per_class.items()}
        overall = vis.overall_visibility
    outcome = record.attack
    counts = {name: run.record[name].click_count for name in run.record.names}
    detected = {name: run.record[name].detected_intensity for name in run.record.names}
    readings_match = None
    if outcome is not None and outcome.bob_readings is not None:
        readings_match = outcome.bob_readings == outcome.eve_readings
    return MetricsSummary(
        protocol=run.protocol,
        qber=run.qber,
        sifted_length=run.sifted_length,
        visibility_overall=overall,
        visibility_per_class=per_class,
        capture_fraction=None if outcome is None else outcome.capture_fraction,
        induced_qber=None if outcome is None else outcome.induced_qber,
        induced_visibility_drop=None if outcome is None else outcome.induced_visibility_drop,
        bob_record_equals_eve_readings=readings_match,
        alarms={} if outcome is None else dict(outcome.alarms),
        feasibility=None if outcome is None else outcome.feasibility,
        detector_counts=counts,
        detected_intensity=detected,
    )


# ---------------------------------------------------------------------------
# File emission
# ---------------------------------------------------------------------------


def _bits_str(bits) -> str:
    return "".join(str(int(b)) for b in bits)


def emit_outputs(record: RunRecord, directory: str | Path) -> list[Path]:
    """Write the full output set for one run into ``directory``.

    * ``events.tsv``: slot, detector, intensity, click, mode per detector slot.
    * ``alice.key`` / ``bob.key`` (and ``eve.key`` under attack): the sifted
      keys as ASCII bit strings, one line each.
    * ``metrics.json``: the recomputed :class:`MetricsSummary`.
    * ``trace_<detector>.tsv``: plot-ready (slot, intensity) columns.
    * ``record.json``: the full serialized run record.
    """
    outdir = Path(directory)
    outdir.mkdir(parents=True, exist_ok=True)
    run = record.protocol_run
    written: list[Path] = []

    events = outdir / "events.tsv"
    with events.open("w", encoding="utf-8") as fh:
        fh.write(EVENTS_HEADER + "\n")
        fh.write("slot\tdetector\tintensity\tclick\tmode\n")
        for name in run.record.names:
            trace = run.record[name]
            modes = trace.mode_labels()
            for k in range(len(trace)):
                fh.write(f"{k}\t{name}\t{float(trace.intensity[k])!r}\t{int(trace.clicks[k])}\t{modes[k]}\n")
    written.append(events)

    alice_key = outdir / "alice.key"
    alice_key.write_text(_bits_str(run.sifted_alice) + "\n", encoding="utf-8")
    written.append(alice_key)
    bob_key = outdir / "bob.key"
    bob_key.write_text(_bits_str(run.sifted_bob) + "\n", encoding="utf-8")
    written.append(bob_key)
    if record.attack is not None:
        eve_key = outdir / "eve.key"
        eve_key.write_text(_bits_str(record.attack.eve_key) + "\n", encoding="utf-8")
        written.append(eve_key)

    metrics = outdir / "metrics.json"
    metrics.write_text(json.dumps(summarize(record).to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    written.append(metrics)

    for name in run.record.names:
        trace = run.record[name]
        path = outdir / f"trace_{name}.tsv"
        with path.open("w", encoding="utf-8") as fh:
            fh.write(f"{TRACE_HEADER} detector={name}\n")
            fh.write("slot\tintensity\n")
            for k in range(len(trace)):
                fh.write(f"{k}\t{float(trace.intensity[k])!r}\n")
        written.append(path)

    record_path = outdir / "record.json"
    save_record(record, record_path)
    written.append(record_path)
    return written


def save_record(record: RunRecord, path: str | Path) -> None:
    Path(path).write_text(json.dumps(record.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_record(path: str | Path) -> RunRecord:
    return RunRecord.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def load_metrics(path: str | Path) -> MetricsSummary:
    return MetricsSummary.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def read_key(path: str | Path) -> np.ndarray:
    text = Path(path).read_text(encoding="utf-8").strip()
    return np.array([int(c) for c in text], dtype=np.int64)


def read_events(path: str | Path) -> dict[str, dict[str, np.ndarray]]:
    """Parse an events table back into per-detector arrays (round-trip exact)."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != EVENTS_HEADER:
        raise ValueError(f"{path}: not an events table (missing {EVENTS_HEADER!r})")
    out: dict[str, dict[str, list]] = {}
    for line in lines[2:]:
        slot, name, intensity, click, mode = line.split("\t")
        d = out.setdefault(name, {"slot": [], "intensity": [], "click": [], "mode": []})
        d["slot"].append(int(slot))
        d["intensity"].append(float(intensity))
        d["click"].append(bool(int(click)))
        d["mode"].append(mode)
    return {
        name: {
            "slot": np.array(d["slot"], dtype=np.int64),
            "intensity": np.array(d["intensity"], dtype=np.float64),
            "click": np.array(d["click"], dtype=bool),
            "mode": np.array(d["mode"]),
        }
        for name, d in out.items()
    }
