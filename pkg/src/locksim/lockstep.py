"""Dual-core wrapper with a configurable time offset between the copies.

One core (the head) runs against live inputs.  The second copy (the shadow)
receives the same input stream delayed by `stagger` cycles and is held in
reset until the first delayed input is available, so at every cycle t the
shadow is architecturally identical to the head at t - stagger.  Head
outputs pass through a matching delay line and are compared bit-for-bit
against the shadow's outputs before anything is released externally.

A mismatch latches a sticky error: the error line is raised, external
output ceases, and both copies are frozen.  The wrapper never re-emits
output after an error (fail-silent).

A transient that corrupts both copies identically in the same cycle lands
at different points of the instruction stream when stagger >= 1, so the
copies disagree once the corrupted state is consumed.  With stagger = 0 the
same corruption is mutual and invisible.  faultlab quantifies this.
"""

from dataclasses import dataclass, field

from .core_isa import (
    ArchState,
    ConfigError,
    CoreConfig,
    InputVector,
    Memory,
    OutputVector,
    WIDTH_WORD,
    decode_input,
    decode_output,
    encode_arch_state,
    encode_input,
    encode_output,
    reset,
    step,
)

MAX_STAGGER = 16


@dataclass(frozen=True)
class StaggerConfig:
    stagger: int = 2

    def __post_init__(self):
        if not isinstance(self.stagger, int) or isinstance(self.stagger, bool):
            raise ConfigError(f"stagger must be an integer, got {self.stagger!r}")
        if not 0 <= self.stagger <= MAX_STAGGER:
            raise ConfigError(
                f"stagger must be in [0, {MAX_STAGGER}], got {self.stagger}")


class DelayQueue:
    """Fixed-latency shift register over encoded vectors (ints).

    push(x) at cycle t returns the value pushed at cycle t - delay, or
    None while the line is still filling.  delay = 0 is a wire.
    """

    __slots__ = ("delay", "items")

    def __init__(self, delay):
        self.delay = delay
        self.items = []

    def push(self, item):
        if self.delay == 0:
            return item
        self.items.append(item)
        if len(self.items) > self.delay:
            return self.items.pop(0)
        return None

    def occupancy_bits(self):
        # idle vectors encode to 0, so set bits count real in-flight content
        return sum(item.bit_count() for item in self.items)

    def snapshot(self):
        return list(self.items)


@dataclass
class ExternalOutcome:
    """What the rest of the system sees from the wrapper this cycle."""
    output: OutputVector | None = None
    error_irq: bool = False


@dataclass
class LockstepState:
    head: ArchState
    shadow: ArchState
    in_q: DelayQueue
    out_q: DelayQueue
    stagger: int
    cycle: int = 0
    error_latched: bool = False
    error_cycle: int | None = None
    # raw outputs of the cycle just stepped, before the delay line and
    # comparator; drivers that model memory around the wrapper service
    # head_out, and split-cache drivers also watch shadow_out
    head_out: OutputVector = field(default_factory=OutputVector)
    shadow_out: OutputVector | None = None


def ls_reset(core_cfg: CoreConfig, stag_cfg: StaggerConfig) -> LockstepState:
    s = stag_cfg.stagger
    return LockstepState(
        head=reset(core_cfg),
        shadow=reset(core_cfg),
        in_q=DelayQueue(s),
        out_q=DelayQueue(s),
        stagger=s,
    )


def ls_step(ls: LockstepState, inp: InputVector,
            shadow_input: InputVector | None = None) -> ExternalOutcome:
    """Advance the pair one cycle.  Mutates ls; returns the external view.

    shadow_input, when given, replaces the response fields of the delayed
    head input for the shadow this cycle (used when each copy owns private
    front-side state, e.g. split cache stacks); irq and reset lines still
    come from the delay queue.  It is ignored while the shadow is held in
    warm-up.
    """
    if ls.error_latched:
        ls.cycle += 1
        ls.head_out = OutputVector()
        ls.shadow_out = None
        return ExternalOutcome(output=None, error_irq=True)

    ls.head, head_out = step(ls.head, inp)
    ls.head_out = head_out

    delayed_in = ls.in_q.push(encode_input(inp))
    shadow_out = None
    ls.shadow_out = None
    if delayed_in is not None:
        sh_inp = decode_input(delayed_in)
        if shadow_input is not None:
            sh_inp = InputVector(instr_response=shadow_input.instr_response,
                                 data_response=shadow_input.data_response,
                                 irq_lines=sh_inp.irq_lines,
                                 reset=sh_inp.reset)
        ls.shadow, shadow_out = step(ls.shadow, sh_inp)
        ls.shadow_out = shadow_out

    delayed_out = ls.out_q.push(encode_output(head_out))

    outcome = ExternalOutcome()
    if delayed_out is not None:
        # shadow_out is always populated once the delay line is full:
        # both queues fill at the same rate
        if delayed_out == encode_output(shadow_out):
            outcome.output = decode_output(delayed_out)
        else:
            ls.error_latched = True
            ls.error_cycle = ls.cycle
            outcome.error_irq = True
    ls.cycle += 1
    return outcome


def observable_state_distance(ls: LockstepState) -> int:
    """Hamming distance between the copies plus in-flight queue content.

    Zero exactly when both copies hold identical architectural state and
    nothing non-idle is buffered, i.e. the wrapper is externally
    indistinguishable from a single core at rest.
    """
    d = (encode_arch_state(ls.head) ^ encode_arch_state(ls.shadow)).bit_count()
    return d + ls.in_q.occupancy_bits() + ls.out_q.occupancy_bits()


def run_solo(workload, budget=20000):
    """Single-core closed-loop run at 1-cycle memory latency.

    Returns the per-cycle output list; the reference timeline against
    which delivered wrapper output is checked (and which faultlab uses
    as the golden trace).
    """
    mem = Memory(workload.memory_size)
    mem.load_words(workload.base, workload.words)
    for addr, word in workload.data:
        mem.store(addr, word, WIDTH_WORD)
    state = reset(CoreConfig(reset_pc=workload.reset_pc))
    inp = InputVector(irq_lines=workload.irq_schedule.get(0, 0))
    outs = []
    for cycle in range(budget):
        state, out = step(state, inp)
        outs.append(out)
        if out.halted:
            return outs, state, mem
        instr = data = None
        if out.fetch_req is not None:
            instr = mem.read_word(out.fetch_req)
        if out.mem_req is not None:
            m = out.mem_req
            if m.is_write:
                mem.store(m.addr, m.wdata, m.width)
            else:
                data = mem.load(m.addr, m.width)
        inp = InputVector(instr_response=instr, data_response=data,
                          irq_lines=workload.irq_schedule.get(cycle + 1, 0))
    raise ConfigError(f"workload {workload.name!r} did not halt "
                      f"within {budget} cycles")
