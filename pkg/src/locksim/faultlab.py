"""Fault injection, outcome classification, and sampling campaigns.

A run is classified against the fault-free (golden) trace of the same
workload:

  detected  the wrapper's comparator latched an error
  masked    the delivered output stream and final memory match golden
  sdc       the pair delivered a halting stream that differs from golden
            (silent data corruption, the outcome redundancy exists to
            prevent)
  hang      neither error nor delivered halt within the cycle budget

Fault kinds: "sbu" flips one bit in one copy, "mbu" flips a short
contiguous burst in one copy, "ccf" flips the same bit in both copies in
the same cycle (common cause).  Targets are architectural: a register
file entry or the pc.

Campaign sampling is stateless: the i-th drawn point depends only on
(seed, i) through SHA-256, so campaigns are reproducible across hosts
and shardable by index range.  When the requested sample count covers
the whole space the campaign is exhaustive instead.
"""

import hashlib
from dataclasses import dataclass, field

from .core_isa import (
    AccessFault,
    ConfigError,
    CoreConfig,
    InputVector,
    Memory,
    OutputVector,
    WIDTH_WORD,
    encode_output,
)
from .lockstep import StaggerConfig, ls_reset, ls_step, run_solo
from .memshield import CacheConfig, CacheFront, RawFront

KIND_SBU = "sbu"
KIND_MBU = "mbu"
KIND_CCF = "ccf"
TARGET_REG = "reg"
TARGET_PC = "pc"

MASKED = "masked"
DETECTED = "detected"
SDC = "sdc"
HANG = "hang"
OUTCOMES = (MASKED, DETECTED, SDC, HANG)

SPHERE_BARE = "bare"
SPHERE_CORE_ONLY = "core_only"
SPHERE_CORE_L1 = "core_plus_l1"
SPHERES = (SPHERE_BARE, SPHERE_CORE_ONLY, SPHERE_CORE_L1)

MIN_HANG_BUDGET = 10_000
BUDGET_FACTOR = 10
MAX_MBU_WIDTH = 4


@dataclass(frozen=True)
class FaultSpec:
    kind: str
    target: str
    cycle: int
    bit: int
    index: int = 0        # register number; 0 for pc targets
    copy: str = "head"    # "head" | "shadow" | "both"
    width: int = 1        # contiguous bits flipped (mbu only)

    def __post_init__(self):
        if self.kind not in (KIND_SBU, KIND_MBU, KIND_CCF):
            raise ConfigError(f"unknown fault kind: {self.kind!r}")
        if self.target not in (TARGET_REG, TARGET_PC):
            raise ConfigError(f"unknown fault target: {self.target!r}")
        if self.cycle < 0:
            raise ConfigError(f"negative injection cycle: {self.cycle}")
        if self.target == TARGET_REG and not 0 <= self.index < 32:
            raise ConfigError(f"register index out of range: {self.index}")
        if self.target == TARGET_PC and self.index != 0:
            raise ConfigError("pc target takes no register index")
        if self.kind == KIND_CCF:
            if self.copy != "both":
                raise ConfigError("ccf faults hit both copies; copy='both'")
        elif self.copy not in ("head", "shadow"):
            raise ConfigError(f"bad copy: {self.copy!r}")
        if self.kind == KIND_MBU:
            if not 2 <= self.width <= MAX_MBU_WIDTH:
                raise ConfigError(f"mbu width must be 2..{MAX_MBU_WIDTH}")
        elif self.width != 1:
            raise ConfigError(f"{self.kind} faults are single-bit")
        if not (0 <= self.bit and self.bit + self.width <= 32):
            raise ConfigError(f"bits {self.bit}..{self.bit + self.width - 1} "
                              "out of a 32-bit word")

    def mask(self):
        return ((1 << self.width) - 1) << self.bit


def apply_fault(ls, spec: FaultSpec):
    states = {"head": [ls.head], "shadow": [ls.shadow],
              "both": [ls.head, ls.shadow]}[spec.copy]
    # the shadow is held in reset during warm-up, so an upset landing
    # there is wiped before the copy ever runs
    if ls.cycle < ls.stagger:
        states = [st for st in states if st is not ls.shadow]
    m = spec.mask()
    for st in states:
        if spec.target == TARGET_REG:
            st.regs[spec.index] ^= m
        else:
            st.pc ^= m


# --- golden reference ---------------------------------------------------------

@dataclass
class GoldenTrace:
    outputs: list          # encoded OutputVectors, one per cycle, halt last
    halt_cycle: int
    memory: bytes

    @property
    def length(self):
        return len(self.outputs)


def run_golden(workload, budget=20_000) -> GoldenTrace:
    outs, _, mem = run_solo(workload, budget)
    return GoldenTrace(outputs=[encode_output(o) for o in outs],
                       halt_cycle=len(outs) - 1,
                       memory=bytes(mem.snapshot()))


# --- one injected run -----------------------------------------------------------

@dataclass
class RunResult:
    outcome: str
    error_cycle: int | None = None
    latency: int | None = None
    delivered_halt_cycle: int | None = None
    memory_matches: bool | None = None
    cycles_run: int = 0


def _loaded_memory(workload):
    mem = Memory(workload.memory_size)
    mem.load_words(workload.base, workload.words)
    for addr, word in workload.data:
        mem.store(addr, word, WIDTH_WORD)
    return mem


def _parity_off(policy):
    return CacheConfig(line_words=8, lines=16, policy=policy, parity=False)


def _serve(front, out, write_to_backing=True):
    """Service one raw output, absorbing wild addresses from faulted
    runs: out-of-range reads return zero, out-of-range writes are
    dropped.  Alignment is the core's problem and never reaches here."""
    instr = data = None
    if out.fetch_req is not None:
        try:
            instr, _ = _front_call(front, OutputVector(fetch_req=out.fetch_req),
                                   write_to_backing)
        except AccessFault:
            instr = 0
    if out.mem_req is not None:
        try:
            _, data = _front_call(front, OutputVector(mem_req=out.mem_req),
                                  write_to_backing)
        except AccessFault:
            data = None if out.mem_req.is_write else 0
    return instr, data


def _front_call(front, out, write_to_backing):
    if isinstance(front, CacheFront):
        return front.service(out, write_to_backing=write_to_backing)
    return front.service(out)


def run_with_fault(workload, spec: FaultSpec | None, stagger: int,
                   golden: GoldenTrace = None, sphere: str = SPHERE_BARE,
                   budget: int = None) -> RunResult:
    """spec=None runs the pair fault-free (classifies masked when all is
    well, which is the health check the CLI's plain run mode uses)."""
    if sphere not in SPHERES:
        raise ConfigError(f"unknown sphere: {sphere!r}")
    if golden is None:
        golden = run_golden(workload)
    if budget is None:
        budget = max(BUDGET_FACTOR * golden.length, MIN_HANG_BUDGET)

    mem = _loaded_memory(workload)
    if sphere == SPHERE_BARE:
        front = RawFront(mem)
        shadow_front = None
    elif sphere == SPHERE_CORE_ONLY:
        front = CacheFront(mem)
        shadow_front = None
    else:
        front = CacheFront(mem, _parity_off("read_only"),
                           _parity_off("write_through"))
        shadow_front = CacheFront(mem, _parity_off("read_only"),
                                  _parity_off("write_through"))

    ls = ls_reset(CoreConfig(reset_pc=workload.reset_pc),
                  StaggerConfig(stagger))
    inp = InputVector(irq_lines=workload.irq_schedule.get(0, 0))
    shadow_inp = None
    delivered = []
    quiesce_countdown = None

    for cycle in range(budget):
        if spec is not None and cycle == spec.cycle:
            apply_fault(ls, spec)
        outcome = ls_step(ls, inp, shadow_input=shadow_inp)

        if ls.error_latched:
            return RunResult(outcome=DETECTED, error_cycle=ls.error_cycle,
                             latency=(ls.error_cycle - spec.cycle
                                      if spec is not None else None),
                             cycles_run=cycle + 1)

        if outcome.output is not None:
            delivered.append(encode_output(outcome.output))
            if outcome.output.halted:
                matches = (delivered == golden.outputs
                           and bytes(mem.snapshot()) == golden.memory)
                return RunResult(outcome=MASKED if matches else SDC,
                                 delivered_halt_cycle=cycle,
                                 memory_matches=matches,
                                 cycles_run=cycle + 1)

        instr, data = _serve(front, ls.head_out)
        if shadow_front is not None:
            shadow_inp = None
            if ls.shadow_out is not None:
                s_i, s_d = _serve(shadow_front, ls.shadow_out,
                                  write_to_backing=False)
                shadow_inp = InputVector(instr_response=s_i, data_response=s_d)
        inp = InputVector(instr_response=instr, data_response=data,
                          irq_lines=workload.irq_schedule.get(cycle + 1, 0))

        # both copies wedged in a post-trap freeze can never emit another
        # non-idle output; drain the delay line, then call it
        if (ls.head.trap_pending is not None
                and ls.shadow.trap_pending is not None):
            if quiesce_countdown is None:
                quiesce_countdown = stagger + 2
            elif quiesce_countdown == 0:
                return RunResult(outcome=HANG, cycles_run=cycle + 1)
            else:
                quiesce_countdown -= 1

    return RunResult(outcome=HANG, cycles_run=budget)


# --- fault spaces and campaigns ---------------------------------------------------

@dataclass(frozen=True)
class FaultSpace:
    """Cross product of injection points, indexable without materializing.

    Enumeration order (documented so record indices are stable): cycle
    outermost, then the target groups in the given order, registers, bit
    positions, copies innermost.
    """
    cycles: tuple
    kind: str = KIND_CCF
    targets: tuple = (TARGET_REG, TARGET_PC)
    regs: tuple = tuple(range(32))
    bits: tuple = tuple(range(32))
    copies: tuple = None
    width: int = 1

    def __post_init__(self):
        if self.kind not in (KIND_SBU, KIND_MBU, KIND_CCF):
            raise ConfigError(f"unknown fault kind: {self.kind!r}")
        if self.copies is None:
            object.__setattr__(
                self, "copies",
                ("both",) if self.kind == KIND_CCF else ("head",))
        if not self.cycles:
            raise ConfigError("empty cycle list")
        for t in self.targets:
            if t not in (TARGET_REG, TARGET_PC):
                raise ConfigError(f"unknown target: {t!r}")
        if not self.targets:
            raise ConfigError("empty target list")
        if TARGET_REG in self.targets and not self.regs:
            raise ConfigError("empty register list")
        if not self.bits:
            raise ConfigError("empty bit list")

    def _target_block(self, target):
        if target == TARGET_REG:
            return len(self.regs) * len(self.bits) * len(self.copies)
        return len(self.bits) * len(self.copies)

    def size(self):
        return len(self.cycles) * sum(self._target_block(t)
                                      for t in self.targets)

    def spec_at(self, i) -> FaultSpec:
        if not 0 <= i < self.size():
            raise ConfigError(f"index {i} outside space of {self.size()}")
        per_cycle = sum(self._target_block(t) for t in self.targets)
        cycle = self.cycles[i // per_cycle]
        rem = i % per_cycle
        for target in self.targets:
            block = self._target_block(target)
            if rem >= block:
                rem -= block
                continue
            if target == TARGET_REG:
                reg = self.regs[rem // (len(self.bits) * len(self.copies))]
                rem %= len(self.bits) * len(self.copies)
            else:
                reg = 0
            bit = self.bits[rem // len(self.copies)]
            copy = self.copies[rem % len(self.copies)]
            return FaultSpec(kind=self.kind, target=target, cycle=cycle,
                             bit=bit, index=reg, copy=copy, width=self.width)
        raise AssertionError("index decomposition fell through")


def sample_indices(size: int, count: int, seed: int):
    """Deterministic index draw.  count >= size degenerates to the full
    ascending range (exhaustive); otherwise distinct indices are drawn by
    hashing (seed, j) and kept in ascending order for stable reports.
    Modulo bias over 64-bit digests is negligible at these sizes."""
    if size <= 0:
        raise ConfigError("empty fault space")
    if count >= size:
        return list(range(size))
    chosen = set()
    j = 0
    while len(chosen) < count:
        digest = hashlib.sha256(b"%d:%d" % (seed, j)).digest()
        chosen.add(int.from_bytes(digest[:8], "big") % size)
        j += 1
    return sorted(chosen)


@dataclass
class InjectionRecord:
    index: int
    spec: FaultSpec
    result: RunResult


@dataclass
class CampaignResult:
    workload_name: str
    stagger: int
    sphere: str
    seed: int
    requested: int
    space_size: int
    golden: GoldenTrace
    records: list = field(default_factory=list)

    @property
    def counts(self):
        c = {o: 0 for o in OUTCOMES}
        for r in self.records:
            c[r.result.outcome] += 1
        return c

    @property
    def latency_histogram(self):
        hist = {}
        for r in self.records:
            if r.result.outcome == DETECTED:
                hist[r.result.latency] = hist.get(r.result.latency, 0) + 1
        return dict(sorted(hist.items()))


def run_campaign(workload, space: FaultSpace, stagger: int, count: int,
                 seed: int = 0, sphere: str = SPHERE_BARE,
                 golden: GoldenTrace = None) -> CampaignResult:
    if golden is None:
        golden = run_golden(workload)
    result = CampaignResult(workload_name=workload.name, stagger=stagger,
                            sphere=sphere, seed=seed, requested=count,
                            space_size=space.size(), golden=golden)
    for idx in sample_indices(space.size(), count, seed):
        spec = space.spec_at(idx)
        rr = run_with_fault(workload, spec, stagger, golden=golden,
                            sphere=sphere)
        result.records.append(InjectionRecord(index=idx, spec=spec,
                                              result=rr))
    return result


def default_space_for(golden: GoldenTrace, kind: str = KIND_CCF,
                      copies: tuple = None) -> FaultSpace:
    """Every architectural bit, every cycle of the golden window."""
    return FaultSpace(cycles=tuple(range(golden.halt_cycle)), kind=kind,
                      copies=copies)
