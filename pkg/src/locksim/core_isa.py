"""Minimal deterministic RV32I core, stepped one clock cycle at a time.

The core talks to the outside world only through InputVector/OutputVector
pairs: a request emitted in the output at cycle t is answered in the input
at cycle t+1 (or later, if the upstream stalls; the core waits).  One
instruction dispatches per fetch response, so straight-line ALU code
retires one instruction per cycle; loads and stores take an extra cycle.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

MASK32 = 0xFFFFFFFF

# mem_req width codes (2-bit field in the canonical encoding)
WIDTH_BYTE = 0
WIDTH_HALF = 1
WIDTH_WORD = 2
WIDTH_BYTES = {WIDTH_BYTE: 1, WIDTH_HALF: 2, WIDTH_WORD: 4}

# trap codes (4-bit)
TRAP_FETCH_MISALIGNED = 0
TRAP_ILLEGAL = 2
TRAP_LOAD_MISALIGNED = 4
TRAP_STORE_MISALIGNED = 6

IRQ_VECTOR_OFFSET = 0x40

# core phases: BOOT emits the first fetch, RUN dispatches fetched
# instructions, MEMWAIT waits for load data, REFETCH re-issues the fetch
# that a store displaced.
PHASE_BOOT = 0
PHASE_RUN = 1
PHASE_MEMWAIT = 2
PHASE_REFETCH = 3


class ConfigError(ValueError):
    """Invalid configuration value."""


class AccessFault(Exception):
    """Memory access outside the backing store."""


def sext(value: int, bits: int) -> int:
    """Sign-extend the low `bits` of value to a Python int."""
    sign = 1 << (bits - 1)
    return (value & (sign - 1)) - (value & sign)


def to_signed(word: int) -> int:
    return word - 0x100000000 if word & 0x80000000 else word


@dataclass(frozen=True)
class Instruction:
    op: str
    rd: int = 0
    rs1: int = 0
    rs2: int = 0
    imm: int = 0


_OPIMM_F3 = {0: "addi", 2: "slti", 3: "sltiu", 4: "xori", 6: "ori", 7: "andi"}
_OP_F3 = {0: "add", 1: "sll", 2: "slt", 3: "sltu", 4: "xor",
          5: "srl", 6: "or", 7: "and"}
_BRANCH_F3 = {0: "beq", 1: "bne", 4: "blt", 5: "bge", 6: "bltu", 7: "bgeu"}
_LOAD_F3 = {0: "lb", 1: "lh", 2: "lw", 4: "lbu", 5: "lhu"}
_STORE_F3 = {0: "sb", 1: "sh", 2: "sw"}

ILLEGAL = Instruction("illegal")


@functools.lru_cache(maxsize=8192)
def decode(word: int) -> Instruction:
    """Decode one 32-bit word; anything outside the subset is ILLEGAL."""
    word &= MASK32
    opcode = word & 0x7F
    rd = (word >> 7) & 0x1F
    f3 = (word >> 12) & 0x7
    rs1 = (word >> 15) & 0x1F
    rs2 = (word >> 20) & 0x1F
    f7 = word >> 25

    if opcode == 0x37:
        return Instruction("lui", rd=rd, imm=word & 0xFFFFF000)
    if opcode == 0x17:
        return Instruction("auipc", rd=rd, imm=word & 0xFFFFF000)
    if opcode == 0x6F:
        imm = ((word >> 31) << 20 | ((word >> 12) & 0xFF) << 12
               | ((word >> 20) & 1) << 11 | ((word >> 21) & 0x3FF) << 1)
        return Instruction("jal", rd=rd, imm=sext(imm, 21))
    if opcode == 0x67 and f3 == 0:
        return Instruction("jalr", rd=rd, rs1=rs1, imm=sext(word >> 20, 12))
    if opcode == 0x63 and f3 in _BRANCH_F3:
        imm = ((word >> 31) << 12 | ((word >> 7) & 1) << 11
               | ((word >> 25) & 0x3F) << 5 | ((word >> 8) & 0xF) << 1)
        return Instruction(_BRANCH_F3[f3], rs1=rs1, rs2=rs2,
                           imm=sext(imm, 13))
    if opcode == 0x03 and f3 in _LOAD_F3:
        return Instruction(_LOAD_F3[f3], rd=rd, rs1=rs1,
                           imm=sext(word >> 20, 12))
    if opcode == 0x23 and f3 in _STORE_F3:
        imm = (word >> 25) << 5 | rd
        return Instruction(_STORE_F3[f3], rs1=rs1, rs2=rs2,
                           imm=sext(imm, 12))
    if opcode == 0x13:
        if f3 == 1:
            return Instruction("slli", rd=rd, rs1=rs1, imm=rs2) \
                if f7 == 0 else ILLEGAL
        if f3 == 5:
            if f7 == 0x00:
                return Instruction("srli", rd=rd, rs1=rs1, imm=rs2)
            if f7 == 0x20:
                return Instruction("srai", rd=rd, rs1=rs1, imm=rs2)
            return ILLEGAL
        if f3 in _OPIMM_F3:
            return Instruction(_OPIMM_F3[f3], rd=rd, rs1=rs1,
                               imm=sext(word >> 20, 12))
        return ILLEGAL
    if opcode == 0x33:
        if f7 == 0x00 and f3 in _OP_F3:
            return Instruction(_OP_F3[f3], rd=rd, rs1=rs1, rs2=rs2)
        if f7 == 0x20 and f3 == 0:
            return Instruction("sub", rd=rd, rs1=rs1, rs2=rs2)
        if f7 == 0x20 and f3 == 5:
            return Instruction("sra", rd=rd, rs1=rs1, rs2=rs2)
        return ILLEGAL
    if word == 0x00000073:
        return Instruction("ecall")
    return ILLEGAL


@dataclass(slots=True)
class MemRequest:
    addr: int
    wdata: int = 0
    width: int = WIDTH_WORD
    is_write: bool = False


@dataclass(slots=True)
class OutputVector:
    fetch_req: int | None = None
    mem_req: MemRequest | None = None
    trap_out: int | None = None
    irq_ack: int = 0
    halted: bool = False


@dataclass(slots=True)
class InputVector:
    instr_response: int | None = None
    data_response: int | None = None
    irq_lines: int = 0
    reset: bool = False


IDLE_OUTPUT = OutputVector()
HALTED_OUTPUT = OutputVector(halted=True)
IDLE_INPUT = InputVector()

OUTPUT_BITS = 115
INPUT_BITS = 75


def encode_output(v: OutputVector) -> int:
    """Canonical 115-bit encoding, MSB first: fetch present(1)+addr(32),
    mem present(1)+addr(32)+wdata(32)+width(2)+is_write(1),
    trap present(1)+code(4), irq_ack(8), halted(1).  Absent fields are
    zero-padded."""
    f = v.fetch_req
    x = (1 << 32 | f) if f is not None else 0
    m = v.mem_req
    if m is not None:
        x = (((x << 1 | 1) << 32 | m.addr) << 32 | m.wdata) << 3 \
            | m.width << 1 | m.is_write
    else:
        x <<= 68
    t = v.trap_out
    x = (x << 1 | 1) << 4 | t if t is not None else x << 5
    return (x << 8 | v.irq_ack) << 1 | (1 if v.halted else 0)


def decode_output(x: int) -> OutputVector:
    halted = bool(x & 1)
    x >>= 1
    irq_ack = x & 0xFF
    x >>= 8
    code = x & 0xF
    x >>= 4
    trap = code if x & 1 else None
    x >>= 1
    is_write = bool(x & 1)
    width = (x >> 1) & 0x3
    wdata = (x >> 3) & MASK32
    addr = (x >> 35) & MASK32
    mem = MemRequest(addr, wdata, width, is_write) if (x >> 67) & 1 else None
    x >>= 68
    fetch = x & MASK32 if (x >> 32) & 1 else None
    return OutputVector(fetch_req=fetch, mem_req=mem, trap_out=trap,
                        irq_ack=irq_ack, halted=halted)


def encode_input(v: InputVector) -> int:
    """Canonical 75-bit encoding: instr present(1)+word(32),
    data present(1)+word(32), irq_lines(8), reset(1)."""
    i = v.instr_response
    x = (1 << 32 | i) if i is not None else 0
    d = v.data_response
    x = (x << 1 | 1) << 32 | d if d is not None else x << 33
    return (x << 8 | v.irq_lines) << 1 | (1 if v.reset else 0)


def decode_input(x: int) -> InputVector:
    rst = bool(x & 1)
    x >>= 1
    irq = x & 0xFF
    x >>= 8
    data = x & MASK32 if (x >> 32) & 1 else None
    x >>= 33
    instr = x & MASK32 if (x >> 32) & 1 else None
    return InputVector(instr_response=instr, data_response=data,
                       irq_lines=irq, reset=rst)


@dataclass(frozen=True)
class CoreConfig:
    reset_pc: int = 0


@dataclass(slots=True)
class ArchState:
    pc: int
    regs: list[int]
    halted: bool = False
    trap_pending: int | None = None
    phase: int = PHASE_BOOT
    pending_load: tuple[int, int, bool] | None = None  # (rd, width, signed)
    reset_pc: int = 0

    def copy(self) -> "ArchState":
        return ArchState(self.pc, list(self.regs), self.halted,
                         self.trap_pending, self.phase, self.pending_load,
                         self.reset_pc)


ARCH_STATE_BITS = 32 + 32 * 32 + 1 + 5 + 2 + 9


def encode_arch_state(s: ArchState) -> int:
    """Bit encoding of the architectural state, used for Hamming-distance
    bookkeeping.  reset_pc is configuration, not state, and is excluded."""
    x = s.pc
    for r in s.regs:
        x = x << 32 | r
    x = x << 1 | s.halted
    t = s.trap_pending
    x = (x << 1 | 1) << 4 | t if t is not None else x << 5
    x = x << 2 | s.phase
    p = s.pending_load
    if p is not None:
        rd, width, signed = p
        x = (((x << 1 | 1) << 5 | rd) << 2 | width) << 1 | signed
    else:
        x <<= 9
    return x


def reset(config: CoreConfig) -> ArchState:
    pc = config.reset_pc & MASK32
    if pc & 3:
        raise ConfigError(f"reset_pc 0x{config.reset_pc:x} is not 4-byte aligned")
    return ArchState(pc=pc, regs=[0] * 32, reset_pc=pc)


def _trap(state: ArchState, code: int) -> tuple[ArchState, OutputVector]:
    ns = state.copy()
    ns.trap_pending = code
    return ns, OutputVector(trap_out=code)


def _fetch_out(state: ArchState, ns: ArchState) -> tuple[ArchState, OutputVector]:
    # every fetch emission checks alignment; a corrupted pc traps here
    if ns.pc & 3:
        ns.trap_pending = TRAP_FETCH_MISALIGNED
        return ns, OutputVector(trap_out=TRAP_FETCH_MISALIGNED)
    return ns, OutputVector(fetch_req=ns.pc)


def step(state: ArchState, inp: InputVector) -> tuple[ArchState, OutputVector]:
    """Advance one cycle.  Pure: arguments are never mutated and identical
    (state, input) pairs yield bit-identical results."""
    if inp.reset:
        return reset(CoreConfig(reset_pc=state.reset_pc)), OutputVector()
    if state.halted:
        return state, OutputVector(halted=True)
    if state.trap_pending is not None:
        # trapped core is quiet and absorbing; trap_out fired once already
        return state, OutputVector()

    phase = state.phase
    if phase == PHASE_RUN:
        word = inp.instr_response
        if word is None:
            return state, OutputVector()  # upstream stall
        if inp.irq_lines:
            # IRQ sampled at dispatch: the fetched instruction is dropped,
            # the lowest pending line is acknowledged, control vectors.
            line = inp.irq_lines & -inp.irq_lines
            ns = state.copy()
            ns.pc = (state.reset_pc + IRQ_VECTOR_OFFSET) & MASK32
            ns, out = _fetch_out(state, ns)
            out.irq_ack = line
            return ns, out
        return _dispatch(state, word)
    if phase == PHASE_MEMWAIT:
        data = inp.data_response
        if data is None:
            return state, OutputVector()
        rd, width, signed = state.pending_load
        if width == WIDTH_BYTE:
            value = sext(data, 8) & MASK32 if signed else data & 0xFF
        elif width == WIDTH_HALF:
            value = sext(data, 16) & MASK32 if signed else data & 0xFFFF
        else:
            value = data & MASK32
        ns = state.copy()
        ns.pending_load = None
        ns.phase = PHASE_RUN
        if rd:
            ns.regs[rd] = value
        return _fetch_out(state, ns)
    # PHASE_REFETCH re-issues the fetch a store displaced; PHASE_BOOT is
    # the very first fetch.  Both are input-independent.
    ns = state.copy()
    ns.phase = PHASE_RUN
    return _fetch_out(state, ns)


def _dispatch(state: ArchState, word: int) -> tuple[ArchState, OutputVector]:
    ins = decode(word)
    op = ins.op
    regs = state.regs
    pc = state.pc
    a = regs[ins.rs1] if ins.rs1 else 0
    b = regs[ins.rs2] if ins.rs2 else 0
    imm = ins.imm

    if op == "illegal":
        return _trap(state, TRAP_ILLEGAL)
    if op == "ecall":
        ns = state.copy()
        ns.halted = True
        return ns, OutputVector(halted=True)

    ns = state.copy()

    if op in _LOAD_F3.values():
        addr = (a + imm) & MASK32
        width = {"lb": WIDTH_BYTE, "lbu": WIDTH_BYTE, "lh": WIDTH_HALF,
                 "lhu": WIDTH_HALF, "lw": WIDTH_WORD}[op]
        if addr & (WIDTH_BYTES[width] - 1):
            return _trap(state, TRAP_LOAD_MISALIGNED)
        ns.pc = (pc + 4) & MASK32
        ns.phase = PHASE_MEMWAIT
        ns.pending_load = (ins.rd, width, op in ("lb", "lh", "lw"))
        return ns, OutputVector(mem_req=MemRequest(addr, 0, width, False))
    if op in _STORE_F3.values():
        addr = (a + imm) & MASK32
        width = {"sb": WIDTH_BYTE, "sh": WIDTH_HALF, "sw": WIDTH_WORD}[op]
        if addr & (WIDTH_BYTES[width] - 1):
            return _trap(state, TRAP_STORE_MISALIGNED)
        mask = (1 << (8 * WIDTH_BYTES[width])) - 1
        ns.pc = (pc + 4) & MASK32
        ns.phase = PHASE_REFETCH
        return ns, OutputVector(mem_req=MemRequest(addr, b & mask, width, True))

    if op in _BRANCH_F3.values():
        sa, sb = to_signed(a), to_signed(b)
        taken = {"beq": a == b, "bne": a != b, "blt": sa < sb,
                 "bge": sa >= sb, "bltu": a < b, "bgeu": a >= b}[op]
        ns.pc = (pc + imm) & MASK32 if taken else (pc + 4) & MASK32
        return _fetch_out(state, ns)
    if op == "jal":
        target = (pc + imm) & MASK32
        if ins.rd:
            ns.regs[ins.rd] = (pc + 4) & MASK32
        ns.pc = target
        return _fetch_out(state, ns)
    if op == "jalr":
        target = (a + imm) & MASK32 & ~1
        if ins.rd:
            ns.regs[ins.rd] = (pc + 4) & MASK32
        ns.pc = target
        return _fetch_out(state, ns)

    # plain register-writing ALU ops
    if op == "lui":
        val = imm & MASK32
    elif op == "auipc":
        val = (pc + imm) & MASK32
    elif op == "addi":
        val = (a + imm) & MASK32
    elif op == "slti":
        val = 1 if to_signed(a) < imm else 0
    elif op == "sltiu":
        val = 1 if a < (imm & MASK32) else 0
    elif op == "xori":
        val = (a ^ imm) & MASK32
    elif op == "ori":
        val = (a | imm) & MASK32
    elif op == "andi":
        val = (a & imm) & MASK32
    elif op == "slli":
        val = (a << (imm & 0x1F)) & MASK32
    elif op == "srli":
        val = a >> (imm & 0x1F)
    elif op == "srai":
        val = (to_signed(a) >> (imm & 0x1F)) & MASK32
    elif op == "add":
        val = (a + b) & MASK32
    elif op == "sub":
        val = (a - b) & MASK32
    elif op == "sll":
        val = (a << (b & 0x1F)) & MASK32
    elif op == "slt":
        val = 1 if to_signed(a) < to_signed(b) else 0
    elif op == "sltu":
        val = 1 if a < b else 0
    elif op == "xor":
        val = a ^ b
    elif op == "srl":
        val = a >> (b & 0x1F)
    elif op == "sra":
        val = (to_signed(a) >> (b & 0x1F)) & MASK32
    elif op == "or":
        val = a | b
    elif op == "and":
        val = a & b
    else:  # pragma: no cover - decode is total over the subset
        return _trap(state, TRAP_ILLEGAL)
    if ins.rd:
        ns.regs[ins.rd] = val
    ns.pc = (pc + 4) & MASK32
    return _fetch_out(state, ns)


class Memory:
    """Flat little-endian RAM with bounds checking."""

    def __init__(self, size: int):
        if size <= 0 or size % 4:
            raise ConfigError(f"memory size {size} must be a positive multiple of 4")
        self.size = size
        self.data = bytearray(size)

    def load_words(self, base: int, words: list[int]) -> None:
        for i, w in enumerate(words):
            self.store(base + 4 * i, w, WIDTH_WORD)

    def load_bytes(self, base: int, blob: bytes) -> None:
        if base < 0 or base + len(blob) > self.size:
            raise AccessFault(f"image [{base:#x}, {base + len(blob):#x}) exceeds memory")
        self.data[base:base + len(blob)] = blob

    def load(self, addr: int, width: int) -> int:
        n = WIDTH_BYTES[width]
        if addr < 0 or addr + n > self.size:
            raise AccessFault(f"load of {n} bytes at {addr:#x}")
        return int.from_bytes(self.data[addr:addr + n], "little")

    def store(self, addr: int, value: int, width: int) -> None:
        n = WIDTH_BYTES[width]
        if addr < 0 or addr + n > self.size:
            raise AccessFault(f"store of {n} bytes at {addr:#x}")
        self.data[addr:addr + n] = (value & ((1 << (8 * n)) - 1)).to_bytes(n, "little")

    def read_word(self, addr: int) -> int:
        return self.load(addr, WIDTH_WORD)

    def snapshot(self) -> bytes:
        return bytes(self.data)

    def clone(self) -> "Memory":
        m = Memory.__new__(Memory)
        m.size = self.size
        m.data = bytearray(self.data)
        return m


def parse_hex(text: str) -> list[int]:
    """Parse the line-oriented hex program format: one 8-digit hex word per
    line, '#' starts a comment, blank lines ignored."""
    words = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if len(line) != 8:
            raise ConfigError(f"line {lineno}: expected 8 hex digits, got {line!r}")
        try:
            words.append(int(line, 16))
        except ValueError:
            raise ConfigError(f"line {lineno}: bad hex word {line!r}") from None
    return words


def format_hex(words: list[int]) -> str:
    return "".join(f"{w & MASK32:08x}\n" for w in words)


def load_hex_file(path) -> list[int]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_hex(fh.read())


def load_bin_file(path) -> bytes:
    with open(path, "rb") as fh:
        return fh.read()
