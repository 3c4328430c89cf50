"""Canonical report serialization.

Reports are reproducibility artifacts: the same campaign configuration
and seed must produce byte-identical JSON and CSV on any host.  Key
order is fixed by construction, records are emitted in ascending fault
space index, and nothing derived from wall clock, paths, or process
state is included.  The configuration digest ties a report back to the
exact campaign that produced it.
"""

import csv
import hashlib
import io
import json

from .faultlab import CampaignResult, DETECTED, OUTCOMES, RunResult, FaultSpec

SCHEMA_VERSION = 1


def config_digest(workload, stagger, sphere, space, count, seed) -> str:
    """Digest of everything that determines a campaign's outcome."""
    h = hashlib.sha256()
    parts = [
        f"schema={SCHEMA_VERSION}",
        f"workload={workload.name}",
        "words=" + ",".join(f"{w:08x}" for w in workload.words),
        "data=" + ",".join(f"{a:x}:{v:x}" for a, v in workload.data),
        f"base={workload.base:x}",
        f"reset_pc={workload.reset_pc:x}",
        "irq=" + ",".join(f"{c}:{m:x}"
                          for c, m in sorted(workload.irq_schedule.items())),
        f"stagger={stagger}",
        f"sphere={sphere}",
        f"kind={space.kind}",
        "targets=" + ",".join(space.targets),
        "regs=" + ",".join(map(str, space.regs)),
        "bits=" + ",".join(map(str, space.bits)),
        "cycles=" + ",".join(map(str, space.cycles)),
        "copies=" + ",".join(space.copies),
        f"width={space.width}",
        f"count={count}",
        f"seed={seed}",
    ]
    h.update("\n".join(parts).encode("utf-8"))
    return h.hexdigest()


def _record_row(rec):
    s, r = rec.spec, rec.result
    return {
        "index": rec.index,
        "kind": s.kind,
        "target": s.target,
        "cycle": s.cycle,
        "bit": s.bit,
        "reg": s.index,
        "copy": s.copy,
        "width": s.width,
        "outcome": r.outcome,
        "latency": r.latency,
    }


def campaign_report(camp: CampaignResult, digest: str) -> dict:
    counts = camp.counts
    return {
        "schema_version": SCHEMA_VERSION,
        "config_digest": digest,
        "workload": camp.workload_name,
        "stagger": camp.stagger,
        "sphere": camp.sphere,
        "seed": camp.seed,
        "requested": camp.requested,
        "space_size": camp.space_size,
        "injections": len(camp.records),
        "golden_halt_cycle": camp.golden.halt_cycle,
        "counts": {o: counts[o] for o in OUTCOMES},
        "latency_histogram": [[lat, n]
                              for lat, n in camp.latency_histogram.items()],
        "records": [_record_row(rec) for rec in camp.records],
    }


def run_report(workload_name: str, stagger: int, sphere: str,
               spec: FaultSpec | None, result) -> dict:
    rep = {
        "schema_version": SCHEMA_VERSION,
        "workload": workload_name,
        "stagger": stagger,
        "sphere": sphere,
    }
    if spec is None:
        rep["fault"] = None
    else:
        rep["fault"] = {
            "kind": spec.kind, "target": spec.target, "cycle": spec.cycle,
            "bit": spec.bit, "reg": spec.index, "copy": spec.copy,
            "width": spec.width,
        }
    if isinstance(result, RunResult):
        rep["outcome"] = result.outcome
        rep["error_cycle"] = result.error_cycle
        rep["latency"] = result.latency
        rep["cycles_run"] = result.cycles_run
    else:
        rep.update(result)
    return rep


def feasibility_report(spec) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "exec_cycles": spec.exec_cycles,
        "deadline_cycles": spec.deadline_cycles,
        "max_retries": spec.max_retries,
        "detection_latency": spec.detection_latency,
        "worst_case_completion": spec.worst_case_completion(),
        "feasible": spec.feasible(),
    }


def to_json_bytes(report: dict) -> bytes:
    return (json.dumps(report, indent=2, separators=(",", ": "))
            + "\n").encode("utf-8")


def write_json(path, report: dict):
    with open(path, "wb") as fh:
        fh.write(to_json_bytes(report))


CSV_FIELDS = ["index", "kind", "target", "cycle", "bit", "reg", "copy",
              "width", "outcome", "latency"]


def to_csv_bytes(camp: CampaignResult) -> bytes:
    buf = io.StringIO(newline="")
    writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for rec in camp.records:
        row = _record_row(rec)
        row["latency"] = "" if row["latency"] is None else row["latency"]
        writer.writerow(row)
    return buf.getvalue().encode("utf-8")


def write_csv(path, camp: CampaignResult):
    with open(path, "wb") as fh:
        fh.write(to_csv_bytes(camp))


def summary_lines(camp: CampaignResult) -> list:
    counts = camp.counts
    total = len(camp.records) or 1
    lines = [f"workload {camp.workload_name}  stagger {camp.stagger}  "
             f"sphere {camp.sphere}  seed {camp.seed}",
             f"injections {len(camp.records)} of space {camp.space_size}"]
    for o in OUTCOMES:
        lines.append(f"  {o:<9} {counts[o]:>8}  "
                     f"({100.0 * counts[o] / total:.2f}%)")
    if counts[DETECTED]:
        lats = camp.latency_histogram
        lines.append(f"  detection latency min {min(lats)} "
                     f"max {max(lats)} cycles")
    return lines
