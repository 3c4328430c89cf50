"""Report canonicality: fixed key order, byte-stable JSON/CSV/figures,
a digest that moves when anything consequential moves."""

import json

from locksim import faultlab as fl
from locksim import figures
from locksim import programs
from locksim import report as rep
from locksim.soc_harness import TimingSpec


def _small_campaign(stagger=2, seed=4, count=25):
    wl = programs.ccf_shiftstore()
    golden = fl.run_golden(wl)
    space = fl.FaultSpace(cycles=tuple(range(golden.halt_cycle)), kind="ccf",
                          targets=("reg",), regs=(5,),
                          bits=tuple(range(0, 32, 2)))
    camp = fl.run_campaign(wl, space, stagger, count, seed=seed,
                           golden=golden)
    digest = rep.config_digest(wl, stagger, "bare", space, count, seed)
    return wl, space, camp, digest


def test_digest_is_stable_and_sensitive():
    wl, space, _, digest = _small_campaign()
    assert digest == rep.config_digest(wl, 2, "bare", space, 25, 4)
    assert digest != rep.config_digest(wl, 3, "bare", space, 25, 4)
    assert digest != rep.config_digest(wl, 2, "bare", space, 25, 5)
    assert digest != rep.config_digest(wl, 2, "core_only", space, 25, 4)
    other = programs.checksum()
    assert digest != rep.config_digest(other, 2, "bare", space, 25, 4)


def test_campaign_report_key_order_is_pinned():
    _, _, camp, digest = _small_campaign()
    report = rep.campaign_report(camp, digest)
    assert list(report) == [
        "schema_version", "config_digest", "workload", "stagger", "sphere",
        "seed", "requested", "space_size", "injections",
        "golden_halt_cycle", "counts", "latency_histogram", "records",
    ]
    assert list(report["counts"]) == ["masked", "detected", "sdc", "hang"]
    assert report["injections"] == 25
    assert [r["index"] for r in report["records"]] == \
        sorted(r["index"] for r in report["records"])


def test_json_bytes_deterministic_and_parseable():
    _, _, camp, digest = _small_campaign()
    a = rep.to_json_bytes(rep.campaign_report(camp, digest))
    b = rep.to_json_bytes(rep.campaign_report(camp, digest))
    assert a == b
    assert a.endswith(b"\n")
    parsed = json.loads(a)
    assert parsed["config_digest"] == digest
    hist_total = sum(n for _, n in parsed["latency_histogram"])
    assert hist_total == parsed["counts"]["detected"]


def test_csv_shape_and_determinism():
    _, _, camp, _ = _small_campaign()
    a = rep.to_csv_bytes(camp)
    assert a == rep.to_csv_bytes(camp)
    lines = a.decode().splitlines()
    assert lines[0] == "index,kind,target,cycle,bit,reg,copy,width,outcome," \
        "latency"
    assert len(lines) == len(camp.records) + 1
    for line, record in zip(lines[1:], camp.records):
        cells = line.split(",")
        assert cells[1] == "ccf" and cells[6] == "both"
        if record.result.outcome != fl.DETECTED:
            assert cells[-1] == ""          # latency only for detections


def test_summary_lines_mention_every_outcome():
    _, _, camp, _ = _small_campaign()
    text = "\n".join(rep.summary_lines(camp))
    for outcome in fl.OUTCOMES:
        assert outcome in text


def test_run_and_feasibility_reports():
    spec = fl.FaultSpec(kind="ccf", target="pc", cycle=5, bit=2, copy="both")
    result = fl.run_with_fault(programs.ccf_straightline(), spec, 2)
    r = rep.run_report("ccf_straightline", 2, "bare", spec, result)
    assert r["outcome"] == "detected" and r["fault"]["bit"] == 2

    clean = rep.run_report("checksum", 2, "bare", None,
                           fl.run_with_fault(programs.checksum(), None, 2))
    assert clean["fault"] is None and clean["outcome"] == "masked"

    f = rep.feasibility_report(TimingSpec(50, 200, 1))
    assert f["feasible"] is True and f["worst_case_completion"] == 100


def test_figures_render_and_are_byte_stable(tmp_path):
    _, _, camp, _ = _small_campaign()
    base = str(tmp_path / "camp")
    paths = figures.render_campaign_figures(camp, base)
    assert paths == [f"{base}.outcomes.png", f"{base}.latency.png"]
    blobs = [open(p, "rb").read() for p in paths]
    assert all(len(b) > 1000 for b in blobs)
    base2 = str(tmp_path / "again")
    paths2 = figures.render_campaign_figures(camp, base2)
    blobs2 = [open(p, "rb").read() for p in paths2]
    assert blobs == blobs2


def test_figures_tolerate_zero_detections(tmp_path):
    wl = programs.ccf_shiftstore()
    golden = fl.run_golden(wl)
    space = fl.FaultSpace(cycles=(0,), kind="ccf", targets=("reg",),
                          regs=(20,), bits=(0,))
    camp = fl.run_campaign(wl, space, 2, 1, golden=golden)
    assert camp.counts[fl.DETECTED] == 0
    paths = figures.render_campaign_figures(camp, str(tmp_path / "none"))
    assert all(open(p, "rb").read() for p in paths)
