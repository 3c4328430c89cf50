"""System harness: several cores or core pairs sharing one memory port.

Each slot owns a private address space; what is shared is bandwidth.  A
round-robin arbiter grants one request per cycle, and cores stall on
their own (absent response keeps the FSM in place), so a pair slot
exercises the wrapper's stall replay: the shadow re-lives the head's
stalls a fixed number of cycles later.

Arbitration shifts cycles around but must not change what a program
does, so slots are compared against their solo golden run by retired
operation sequence (stores, traps, acks, halt), not by cycle timing.

Also here: the replication-sphere comparison entry point, and the
re-execution feasibility arithmetic for deadline-bound recovery.
"""

from dataclasses import dataclass, field

from .core_isa import (
    ConfigError,
    CoreConfig,
    InputVector,
    Memory,
    OutputVector,
    WIDTH_WORD,
    encode_output,
    reset,
    step,
)
from .lockstep import StaggerConfig, ls_reset, ls_step, run_solo
from .memshield import CacheFront
from .faultlab import FaultSpec, GoldenTrace, SPHERES, run_golden, \
    run_with_fault

MAX_SLOTS = 8


# --- retired operations -------------------------------------------------------

def retire_events(out: OutputVector):
    """Architecturally meaningful events in one output vector."""
    evs = []
    if out.mem_req is not None and out.mem_req.is_write:
        m = out.mem_req
        evs.append(("store", m.addr, m.wdata, m.width))
    if out.trap_out is not None:
        evs.append(("trap", out.trap_out))
    if out.irq_ack:
        evs.append(("irq_ack", out.irq_ack))
    if out.halted:
        evs.append(("halt",))
    return evs


def retired_ops(outputs):
    return [e for out in outputs for e in retire_events(out)]


def solo_retired(workload, budget=20_000):
    outs, _, _ = run_solo(workload, budget)
    return retired_ops(outs)


# --- configuration --------------------------------------------------------------

@dataclass(frozen=True)
class SlotConfig:
    workload: object
    mode: str = "pair"        # "pair" | "solo"
    stagger: int = 2

    def __post_init__(self):
        if self.mode not in ("pair", "solo"):
            raise ConfigError(f"unknown slot mode: {self.mode!r}")
        StaggerConfig(self.stagger)


@dataclass(frozen=True)
class SocConfig:
    slots: tuple
    budget: int = 200_000

    def __post_init__(self):
        if not 1 <= len(self.slots) <= MAX_SLOTS:
            raise ConfigError(f"1..{MAX_SLOTS} slots, got {len(self.slots)}")
        if self.budget <= 0:
            raise ConfigError("budget must be positive")


@dataclass
class SlotReport:
    name: str
    mode: str
    stagger: int
    retired: list
    halted: bool = False
    error_irq: bool = False
    done_cycle: int | None = None
    grants: int = 0
    max_queue: int = 0


@dataclass
class SocResult:
    slots: list
    cycles: int
    grant_log: list = field(default_factory=list)   # (cycle, slot index)


class _Slot:
    def __init__(self, cfg: SlotConfig):
        self.cfg = cfg
        wl = cfg.workload
        self.mem = Memory(wl.memory_size)
        self.mem.load_words(wl.base, wl.words)
        for addr, word in wl.data:
            self.mem.store(addr, word, WIDTH_WORD)
        if cfg.mode == "pair":
            self.ls = ls_reset(CoreConfig(reset_pc=wl.reset_pc),
                               StaggerConfig(cfg.stagger))
            self.core = None
        else:
            self.ls = None
            self.core = reset(CoreConfig(reset_pc=wl.reset_pc))
        self.instr_resp = None
        self.data_resp = None
        self.fifo = []            # pending (is_fetch, request) in order
        self.report = SlotReport(name=wl.name, mode=cfg.mode,
                                 stagger=cfg.stagger if cfg.mode == "pair"
                                 else 0, retired=[])
        self.done = False

    def step(self, cycle):
        wl = self.cfg.workload
        inp = InputVector(instr_response=self.instr_resp,
                          data_response=self.data_resp,
                          irq_lines=wl.irq_schedule.get(cycle, 0))
        self.instr_resp = self.data_resp = None
        if self.cfg.mode == "pair":
            outcome = ls_step(self.ls, inp)
            raw = self.ls.head_out
            if outcome.error_irq:
                self.report.error_irq = True
                self.report.done_cycle = cycle
                self.done = True
                return
            if outcome.output is not None:
                self.report.retired.extend(retire_events(outcome.output))
                if outcome.output.halted:
                    self.report.halted = True
                    self.report.done_cycle = cycle
                    self.done = True
                    return
        else:
            self.core, raw = step(self.core, inp)
            self.report.retired.extend(retire_events(raw))
            if raw.halted:
                self.report.halted = True
                self.report.done_cycle = cycle
                self.done = True
                return
        if raw.fetch_req is not None:
            self.fifo.append((True, raw.fetch_req))
        if raw.mem_req is not None:
            self.fifo.append((False, raw.mem_req))
        self.report.max_queue = max(self.report.max_queue, len(self.fifo))

    def grant(self):
        is_fetch, req = self.fifo.pop(0)
        self.report.grants += 1
        if is_fetch:
            self.instr_resp = self.mem.read_word(req)
        elif req.is_write:
            self.mem.store(req.addr, req.wdata, req.width)
        else:
            self.data_resp = self.mem.load(req.addr, req.width)


def soc_run(cfg: SocConfig) -> SocResult:
    slots = [_Slot(sc) for sc in cfg.slots]
    grant_log = []
    rr = 0
    for cycle in range(cfg.budget):
        live = [s for s in slots if not s.done]
        if not live:
            return SocResult(slots=[s.report for s in slots], cycles=cycle,
                             grant_log=grant_log)
        for s in live:
            s.step(cycle)
        # one grant per cycle, next non-empty queue in rotation; a pair
        # that latched an error is fail-silent and its queue is abandoned
        for k in range(len(slots)):
            idx = (rr + k) % len(slots)
            s = slots[idx]
            if s.fifo and not s.done:
                s.grant()
                grant_log.append((cycle, idx))
                rr = (idx + 1) % len(slots)
                break
    raise ConfigError(f"soc did not finish within {cfg.budget} cycles")


# --- replication sphere comparison ------------------------------------------------

def sphere_mode_compare(workload, spec: FaultSpec, stagger: int,
                        golden: GoldenTrace = None):
    """Classify one architectural fault under every sphere layout.

    Register and pc faults live inside the replicated cores, so the
    classification must not depend on whether caches sit inside the
    sphere (duplicated, parity off) or outside it (shared, parity on).
    """
    if golden is None:
        golden = run_golden(workload)
    return {sphere: run_with_fault(workload, spec, stagger, golden=golden,
                                   sphere=sphere)
            for sphere in SPHERES}


def shared_cache_upset_demo(workload, stagger: int, flip_cycle: int,
                            flip_addr: int, bit: int = 5, budget=20_000):
    """Flip one cached instruction bit in a shared (outside-sphere) front
    mid-run and report how the pair fared.  Parity plus refetch should
    absorb it: one recovery, no comparator error, golden-equal delivery."""
    golden = run_golden(workload)
    mem = Memory(workload.memory_size)
    mem.load_words(workload.base, workload.words)
    for addr, word in workload.data:
        mem.store(addr, word, WIDTH_WORD)
    front = CacheFront(mem)
    ls = ls_reset(CoreConfig(reset_pc=workload.reset_pc),
                  StaggerConfig(stagger))
    inp = InputVector(irq_lines=workload.irq_schedule.get(0, 0))
    delivered = []
    error = False
    for cycle in range(budget):
        if cycle == flip_cycle:
            front.icache.flip_data_bit(addr=flip_addr, bit=bit)
        outcome = ls_step(ls, inp)
        if outcome.error_irq:
            error = True
            break
        if outcome.output is not None:
            delivered.append(encode_output(outcome.output))
            if outcome.output.halted:
                break
        instr, data = front.service(ls.head_out)
        inp = InputVector(instr_response=instr, data_response=data,
                          irq_lines=workload.irq_schedule.get(cycle + 1, 0))
    return {
        "recovery_count": front.recovery_count,
        "error_irq": error,
        "matches_golden": delivered == golden.outputs,
    }


# --- re-execution timing ------------------------------------------------------------

@dataclass(frozen=True)
class TimingSpec:
    """Deadline arithmetic for detect-and-re-execute recovery.

    A task normally takes exec_cycles.  Every detected error costs the
    detection latency plus a full re-run.  The task stays schedulable
    when the worst permitted retry count still lands inside the deadline.
    """
    exec_cycles: int
    deadline_cycles: int
    max_retries: int
    detection_latency: int = 0

    def __post_init__(self):
        if self.exec_cycles <= 0:
            raise ConfigError("exec_cycles must be positive")
        if self.deadline_cycles <= 0:
            raise ConfigError("deadline_cycles must be positive")
        if self.max_retries < 0:
            raise ConfigError("max_retries must be non-negative")
        if self.detection_latency < 0:
            raise ConfigError("detection_latency must be non-negative")

    def worst_case_completion(self):
        return ((self.max_retries + 1) * self.exec_cycles
                + self.max_retries * self.detection_latency)

    def feasible(self):
        return self.worst_case_completion() <= self.deadline_cycles


def feasible_reexec(exec_cycles, deadline_cycles, max_retries,
                    detection_latency=0) -> bool:
    return TimingSpec(exec_cycles, deadline_cycles, max_retries,
                      detection_latency).feasible()
