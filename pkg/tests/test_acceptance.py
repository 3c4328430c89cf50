"""Acceptance gate: one test (one pass/fail line under -v) per criterion.

Each test prints its measured numbers so the verdicts are auditable from
the captured output, and pins explicit tolerances and runtime budgets.
"""

import random
import subprocess
import sys
import time

import pytest

from locksim import core_isa as ci
from locksim import faultlab as fl
from locksim import lockstep as lk
from locksim import memshield as ms
from locksim import programs
from locksim import report as rep
from locksim import soc_harness as soc


def _drive_pair(workload, stagger, budget=5000):
    mem = ci.Memory(workload.memory_size)
    mem.load_words(workload.base, workload.words)
    for addr, word in workload.data:
        mem.store(addr, word, ci.WIDTH_WORD)
    ls = lk.ls_reset(ci.CoreConfig(reset_pc=workload.reset_pc),
                     lk.StaggerConfig(stagger))
    inp = ci.InputVector(irq_lines=workload.irq_schedule.get(0, 0))
    outcomes = []
    for cycle in range(budget):
        outcome = lk.ls_step(ls, inp)
        outcomes.append(outcome)
        if outcome.output is not None and outcome.output.halted:
            return outcomes
        out = ls.head_out
        instr = data = None
        if out.fetch_req is not None:
            instr = mem.read_word(out.fetch_req)
        if out.mem_req is not None:
            if out.mem_req.is_write:
                mem.store(out.mem_req.addr, out.mem_req.wdata,
                          out.mem_req.width)
            else:
                data = mem.load(out.mem_req.addr, out.mem_req.width)
        inp = ci.InputVector(instr_response=instr, data_response=data,
                             irq_lines=workload.irq_schedule.get(cycle + 1, 0))
    raise AssertionError("pair did not halt")


def test_criterion_1_staggered_pair_is_output_equivalent():
    """Fault-free: delivered stream equals the solo stream shifted by the
    stagger, for every corpus program and stagger 0..3, under 1 s per
    program."""
    for name, builder in programs.CORPUS.items():
        wl = builder()
        t0 = time.monotonic()
        golden, _, _ = lk.run_solo(wl)
        for stagger in range(4):
            outcomes = _drive_pair(wl, stagger)
            assert not any(o.error_irq for o in outcomes), (name, stagger)
            assert len(outcomes) == len(golden) + stagger, (name, stagger)
            for t in range(stagger):
                assert outcomes[t].output is None
            for t in range(stagger, len(outcomes)):
                assert ci.encode_output(outcomes[t].output) == \
                    ci.encode_output(golden[t - stagger]), (name, stagger, t)
        elapsed = time.monotonic() - t0
        assert elapsed < 1.0, (name, elapsed)
        print(f"criterion 1: {name}: staggers 0..3 equivalent "
              f"({elapsed * 1000:.0f} ms)")


def test_criterion_2_exhaustive_single_copy_upsets_never_silent():
    """Every single-bit upset in either copy's register file or pc, in
    every cycle of the checksum golden window, at stagger 2: zero sdc,
    zero hang, and every masked run leaves memory bit-identical.  Budget
    300 s."""
    wl = programs.checksum()
    golden = fl.run_golden(wl)
    space = fl.FaultSpace(cycles=tuple(range(golden.halt_cycle)), kind="sbu",
                          copies=("head", "shadow"))
    t0 = time.monotonic()
    camp = fl.run_campaign(wl, space, stagger=2, count=space.size(),
                           golden=golden)
    elapsed = time.monotonic() - t0
    counts = camp.counts
    assert len(camp.records) == space.size()
    assert counts[fl.SDC] == 0, counts
    assert counts[fl.HANG] == 0, counts
    assert counts[fl.MASKED] + counts[fl.DETECTED] == space.size()
    for r in camp.records:
        if r.result.outcome == fl.MASKED:
            assert r.result.memory_matches, r.spec
    assert elapsed < 300.0, elapsed
    print(f"criterion 2: {space.size()} exhaustive injections: "
          f"{counts[fl.MASKED]} masked, {counts[fl.DETECTED]} detected, "
          f"0 sdc, 0 hang ({elapsed:.1f} s)")


def _adversarial_suite():
    suite = []
    wl = programs.ccf_shiftstore()
    g = fl.run_golden(wl)
    suite.append((wl, g, fl.FaultSpace(cycles=tuple(range(g.halt_cycle)),
                                       kind="ccf", targets=("reg", "pc"),
                                       regs=(5,))))
    wl = programs.ccf_straightline()
    g = fl.run_golden(wl)
    suite.append((wl, g, fl.FaultSpace(cycles=tuple(range(g.halt_cycle)),
                                       kind="ccf", targets=("pc",))))
    wl = programs.ccf_loadstore()
    g = fl.run_golden(wl)
    suite.append((wl, g, fl.FaultSpace(cycles=tuple(range(g.halt_cycle)),
                                       kind="ccf", targets=("reg", "pc"),
                                       regs=(5,))))
    return suite


def test_criterion_3_common_cause_contrast():
    """Exhaustive common-cause flips on the adversarial programs: with no
    stagger nothing is ever detected and every program silently corrupts
    at least once; at stagger 2 silent corruption count is exactly zero.
    Budget 120 s."""
    t0 = time.monotonic()
    total_sdc_flat = total_det_flat = 0
    total_sdc_stag = total_det_stag = 0
    for wl, golden, space in _adversarial_suite():
        flat = fl.run_campaign(wl, space, 0, space.size(), golden=golden)
        stag = fl.run_campaign(wl, space, 2, space.size(), golden=golden)
        assert flat.counts[fl.DETECTED] == 0, wl.name
        assert flat.counts[fl.SDC] >= 1, wl.name
        assert stag.counts[fl.SDC] == 0, (wl.name, stag.counts)
        assert stag.counts[fl.HANG] == 0, (wl.name, stag.counts)
        total_sdc_flat += flat.counts[fl.SDC]
        total_det_flat += flat.counts[fl.DETECTED]
        total_sdc_stag += stag.counts[fl.SDC]
        total_det_stag += stag.counts[fl.DETECTED]
    elapsed = time.monotonic() - t0
    assert total_det_stag >= 1
    assert elapsed < 120.0, elapsed
    print(f"criterion 3: stagger 0: {total_sdc_flat} sdc / "
          f"{total_det_flat} detected; stagger 2: {total_sdc_stag} sdc / "
          f"{total_det_stag} detected ({elapsed:.1f} s)")


def test_criterion_4_cache_parity_recovers_every_single_bit_flip():
    """All 4096 data-bit positions of a 16-line, 8-word cache: flip is
    detected on the next read, the line refetches, the returned word is
    correct, and the recovery counter advances every time.  Budget 10 s."""
    t0 = time.monotonic()
    cfg = ms.CacheConfig(line_words=8, lines=16)
    mem = ci.Memory(4096)
    for a in range(0, 4096, 4):
        mem.store(a, (a * 2246822519 + 101) & ci.MASK32, ci.WIDTH_WORD)
    cache = ms.ParityCache(cfg)
    for addr in range(0, 16 * 8 * 4, 4):
        cache.read(mem, addr)
    recoveries = 0
    for line in range(16):
        for word in range(8):
            addr = (line * 8 + word) * 4
            for bit in range(32):
                cache.flip_data_bit(addr=addr, bit=bit)
                got, hit, recovered = cache.read(mem, addr)
                assert recovered and not hit, (line, word, bit)
                assert got == mem.read_word(addr), (line, word, bit)
                recoveries += 1
    assert recoveries == 4096
    assert cache.recovery_count == 4096
    elapsed = time.monotonic() - t0
    assert elapsed < 10.0, elapsed
    print(f"criterion 4: 4096/4096 flips recovered ({elapsed:.2f} s)")


def test_criterion_5_secded_corrects_singles_detects_doubles():
    """Over 16 distinct stored words: every one of the 39 single-bit
    flips decodes to the original word as corrected, and every one of
    the 741 double flips reports uncorrectable (never silently wrong,
    never miscorrected).  Budget 5 s."""
    t0 = time.monotonic()
    rng = random.Random(161)
    words = [0, 0xFFFFFFFF, 0xA5A5A5A5, 0xDEADBEEF] + \
        [rng.getrandbits(32) for _ in range(12)]
    assert len(words) == 16
    singles = 0
    for w in words:
        cw = ms.secded_encode(w)
        for bit in range(39):
            data, status = ms.secded_decode(cw ^ (1 << bit))
            assert status == ms.CORRECTED and data == w, (hex(w), bit)
            singles += 1
    doubles = 0
    for w in (words[1], words[4]):
        cw = ms.secded_encode(w)
        for i in range(39):
            for j in range(i + 1, 39):
                data, status = ms.secded_decode(cw ^ (1 << i) ^ (1 << j))
                assert status == ms.DETECTED_UNCORRECTABLE, (hex(w), i, j)
                assert data is None
                doubles += 1
    assert singles == 16 * 39 and doubles == 2 * 741
    elapsed = time.monotonic() - t0
    assert elapsed < 5.0, elapsed
    print(f"criterion 5: {singles} singles corrected, "
          f"{doubles} doubles flagged ({elapsed:.2f} s)")


def test_criterion_6_reexecution_feasibility():
    """Pinned boundary cases plus monotonicity over 1000 seeded pairs:
    easing any parameter never turns a feasible budget infeasible."""
    assert soc.feasible_reexec(50, 200, 1) is True
    assert soc.feasible_reexec(150, 200, 1) is False
    assert soc.feasible_reexec(100, 200, 1) is True
    assert soc.feasible_reexec(101, 200, 1) is False
    rng = random.Random(4242)
    for _ in range(1000):
        e = rng.randint(1, 800)
        d = rng.randint(1, 4000)
        r = rng.randint(0, 6)
        lat = rng.randint(0, 80)
        if soc.feasible_reexec(e, d, r, lat):
            assert soc.feasible_reexec(rng.randint(1, e),
                                       d + rng.randint(0, 1000),
                                       rng.randint(0, r),
                                       rng.randint(0, lat))
    print("criterion 6: boundaries pinned, 1000 monotonicity pairs hold")


def test_criterion_7_reports_are_byte_deterministic(tmp_path):
    """The same campaign invocation in two fresh processes produces
    byte-identical JSON, CSV, and figure files."""
    blobs = []
    for sub in ("a", "b"):
        d = tmp_path / sub
        d.mkdir()
        out = d / "rep.json"
        proc = subprocess.run(
            [sys.executable, "-m", "locksim.cli", "campaign",
             "--program", "ccf_shiftstore", "--stagger", "2",
             "--kind", "ccf", "--count", "200", "--seed", "11",
             "--out", str(out)],
            capture_output=True, text=True)
        assert proc.returncode == 3, proc.stderr
        blobs.append({
            "json": out.read_bytes(),
            "csv": (d / "rep.records.csv").read_bytes(),
            "outcomes": (d / "rep.outcomes.png").read_bytes(),
            "latency": (d / "rep.latency.png").read_bytes(),
        })
    for key in blobs[0]:
        assert blobs[0][key] == blobs[1][key], key
    assert len(blobs[0]["json"]) > 100
    print(f"criterion 7: {len(blobs[0]['json'])} byte report identical "
          "across processes (json+csv+png)")


def test_criterion_8_sphere_layout_does_not_change_verdicts():
    """(a) register and pc fault classification is identical whether
    caches sit inside the sphere (duplicated, parity off) or outside it
    (shared, parity on); (b) a flipped bit in a shared instruction cache
    is absorbed by parity refetch with exactly one recovery and no
    comparator error."""
    rng = random.Random(88)
    checked = 0
    for name in ("ccf_shiftstore", "checksum"):
        wl = programs.BUILTINS[name]()
        golden = fl.run_golden(wl)
        for _ in range(10):
            target = rng.choice(["reg", "pc"])
            kind = rng.choice(["ccf", "sbu"]) if target == "reg" else "ccf"
            spec = fl.FaultSpec(
                kind=kind, target=target,
                cycle=rng.randrange(golden.halt_cycle),
                bit=rng.randrange(32),
                index=rng.choice([5, rng.randrange(32)])
                if target == "reg" else 0,
                copy="both" if kind == "ccf" else "head")
            by_sphere = soc.sphere_mode_compare(wl, spec, 2, golden=golden)
            outcomes = {r.outcome for r in by_sphere.values()}
            assert len(outcomes) == 1, (name, spec, by_sphere)
            checked += 1

    wl = programs.arith_loop()
    demo = soc.shared_cache_upset_demo(wl, stagger=2, flip_cycle=12,
                                       flip_addr=wl.base + 8)
    assert demo == {"recovery_count": 1, "error_irq": False,
                    "matches_golden": True}
    print(f"criterion 8: {checked} fault verdicts sphere-invariant; "
          "shared cache upset absorbed (1 recovery, no error)")
