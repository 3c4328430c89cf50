"""Built-in workload corpus and a tiny assembler for it.

Programs are written as symbolic tuples so tests can execute the same
listing through an independent instruction-level interpreter and compare
against the cycle-stepped core.  Conventions:

    ("addi", rd, rs1, imm)        ALU immediate (also slti/sltiu/xori/...)
    ("slli", rd, rs1, shamt)      shifts by immediate
    ("add", rd, rs1, rs2)         ALU register (also sub/sll/slt/...)
    ("lw", rd, rs1, imm)          loads
    ("sw", rs2, rs1, imm)         stores (value register first)
    ("beq", rs1, rs2, target)     branches; target is a label or byte offset
    ("jal", rd, target)
    ("jalr", rd, rs1, imm)
    ("lui", rd, imm32)            imm32 must have zero low 12 bits
    ("ecall",)
    ("word", value)               raw data word
    ("label", name)               pseudo-op, defines a location
    ("org", addr)                 pseudo-op, zero-pad to byte address
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .core_isa import ConfigError, MASK32

_ALU_IMM_F3 = {"addi": 0, "slti": 2, "sltiu": 3, "xori": 4, "ori": 6,
               "andi": 7}
_SHIFT_IMM = {"slli": (1, 0x00), "srli": (5, 0x00), "srai": (5, 0x20)}
_ALU_REG = {"add": (0, 0x00), "sub": (0, 0x20), "sll": (1, 0x00),
            "slt": (2, 0x00), "sltu": (3, 0x00), "xor": (4, 0x00),
            "srl": (5, 0x00), "sra": (5, 0x20), "or": (6, 0x00),
            "and": (7, 0x00)}
_BRANCH_F3 = {"beq": 0, "bne": 1, "blt": 4, "bge": 5, "bltu": 6, "bgeu": 7}
_LOAD_F3 = {"lb": 0, "lh": 1, "lw": 2, "lbu": 4, "lhu": 5}
_STORE_F3 = {"sb": 0, "sh": 1, "sw": 2}


def _imm12(value: int) -> int:
    if not -2048 <= value < 2048:
        raise ConfigError(f"immediate {value} out of 12-bit range")
    return value & 0xFFF


def _layout(asm, base):
    """First pass: assign a byte address to every real instruction and
    resolve labels."""
    addr = base
    labels = {}
    placed = []
    for ins in asm:
        if ins[0] == "label":
            labels[ins[1]] = addr
            continue
        if ins[0] == "org":
            target = ins[1]
            if target < addr or target & 3:
                raise ConfigError(f"bad org {target:#x} at {addr:#x}")
            while addr < target:
                placed.append((addr, ("word", 0)))
                addr += 4
            continue
        placed.append((addr, ins))
        addr += 4
    return placed, labels


def _target_offset(target, labels, addr):
    if isinstance(target, str):
        if target not in labels:
            raise ConfigError(f"undefined label {target!r}")
        return labels[target] - addr
    return target


def assemble(asm, base: int = 0) -> list[int]:
    """Two-pass assembly of a symbolic listing into 32-bit words."""
    placed, labels = _layout(asm, base)
    words = []
    for addr, ins in placed:
        op = ins[0]
        if op == "word":
            words.append(ins[1] & MASK32)
        elif op in _ALU_IMM_F3:
            _, rd, rs1, imm = ins
            words.append(_imm12(imm) << 20 | rs1 << 15
                         | _ALU_IMM_F3[op] << 12 | rd << 7 | 0x13)
        elif op in _SHIFT_IMM:
            _, rd, rs1, shamt = ins
            f3, f7 = _SHIFT_IMM[op]
            words.append(f7 << 25 | (shamt & 0x1F) << 20 | rs1 << 15
                         | f3 << 12 | rd << 7 | 0x13)
        elif op in _ALU_REG:
            _, rd, rs1, rs2 = ins
            f3, f7 = _ALU_REG[op]
            words.append(f7 << 25 | rs2 << 20 | rs1 << 15 | f3 << 12
                         | rd << 7 | 0x33)
        elif op in _LOAD_F3:
            _, rd, rs1, imm = ins
            words.append(_imm12(imm) << 20 | rs1 << 15 | _LOAD_F3[op] << 12
                         | rd << 7 | 0x03)
        elif op in _STORE_F3:
            _, rs2, rs1, imm = ins
            enc = _imm12(imm)
            words.append((enc >> 5) << 25 | rs2 << 20 | rs1 << 15
                         | _STORE_F3[op] << 12 | (enc & 0x1F) << 7 | 0x23)
        elif op in _BRANCH_F3:
            _, rs1, rs2, target = ins
            off = _target_offset(target, labels, addr)
            if off & 1 or not -4096 <= off < 4096:
                raise ConfigError(f"branch offset {off} invalid")
            enc = off & 0x1FFF
            words.append((enc >> 12) << 31 | ((enc >> 5) & 0x3F) << 25
                         | rs2 << 20 | rs1 << 15 | _BRANCH_F3[op] << 12
                         | ((enc >> 1) & 0xF) << 8 | ((enc >> 11) & 1) << 7
                         | 0x63)
        elif op == "jal":
            _, rd, target = ins
            off = _target_offset(target, labels, addr)
            if off & 1 or not -(1 << 20) <= off < (1 << 20):
                raise ConfigError(f"jal offset {off} invalid")
            enc = off & 0x1FFFFF
            words.append((enc >> 20) << 31 | ((enc >> 1) & 0x3FF) << 21
                         | ((enc >> 11) & 1) << 20 | ((enc >> 12) & 0xFF) << 12
                         | rd << 7 | 0x6F)
        elif op == "jalr":
            _, rd, rs1, imm = ins
            words.append(_imm12(imm) << 20 | rs1 << 15 | rd << 7 | 0x67)
        elif op in ("lui", "auipc"):
            _, rd, imm = ins
            if imm & 0xFFF:
                raise ConfigError(f"{op} immediate {imm:#x} has low bits set")
            words.append((imm & MASK32) | rd << 7 | (0x37 if op == "lui" else 0x17))
        elif op == "ecall":
            words.append(0x00000073)
        else:
            raise ConfigError(f"unknown mnemonic {op!r}")
    return words


@dataclass
class Workload:
    """A runnable program plus its load/reset context and stimulus."""
    name: str
    asm: list[tuple]
    base: int = 0
    reset_pc: int = 0
    memory_size: int = 65536
    irq_schedule: dict[int, int] = field(default_factory=dict)
    data: list[tuple[int, int]] = field(default_factory=list)  # (addr, word)
    raw_words: list[int] | None = None   # preassembled image, bypasses asm

    @property
    def words(self) -> list[int]:
        if self.raw_words is not None:
            return self.raw_words
        return assemble(self.asm, self.base)


def straightline_mix() -> Workload:
    """ALU mix with a taken and a not-taken branch, one load, one store."""
    return Workload("straightline_mix", [
        ("addi", 1, 0, 5),
        ("addi", 2, 0, 10),
        ("add", 3, 1, 2),
        ("sub", 4, 3, 1),
        ("slli", 5, 3, 4),
        ("slt", 6, 3, 4),
        ("beq", 1, 2, "skip1"),       # not taken
        ("sw", 3, 0, 20),
        ("lw", 7, 0, 20),
        ("bne", 6, 7, "after"),       # taken
        ("label", "skip1"),
        ("addi", 8, 0, 99),           # skipped
        ("label", "after"),
        ("addi", 9, 0, 1),
        ("ecall",),
    ])


def arith_loop() -> Workload:
    """Accumulate a memory constant in a 4-iteration loop; the loop body
    re-fetches the same cache line, which the cache tests rely on."""
    return Workload("arith_loop", [
        ("addi", 5, 0, 7),
        ("addi", 6, 0, 4),
        ("label", "loop"),
        ("lw", 7, 0, 0x100),
        ("add", 5, 5, 7),
        ("sw", 5, 0, 0x104),
        ("addi", 6, 6, -1),
        ("bne", 6, 0, "loop"),
        ("sw", 5, 0, 0x108),
        ("ecall",),
    ], data=[(0x100, 3)])


def checksum() -> Workload:
    """Sum a 4-word table through a cursor/limit loop, store the result."""
    return Workload("checksum", [
        ("addi", 6, 0, 0x200),
        ("addi", 8, 0, 0x210),
        ("addi", 5, 0, 0),
        ("label", "loop"),
        ("lw", 7, 6, 0),
        ("add", 5, 5, 7),
        ("addi", 6, 6, 4),
        ("bne", 6, 8, "loop"),
        ("sw", 5, 0, 0x214),
        ("ecall",),
    ], data=[(0x200, 0x11111111), (0x204, 0x22222222),
             (0x208, 0x30303030), (0x20C, 0x0F0F0F0F)])


def branchy() -> Workload:
    """Branch-heavy compare ladder: max of two values, range checks."""
    return Workload("branchy", [
        ("addi", 1, 0, 23),
        ("addi", 2, 0, 57),
        ("addi", 3, 0, 19),
        ("blt", 1, 2, "pick2"),       # taken
        ("addi", 5, 1, 0),
        ("jal", 0, "picked"),
        ("label", "pick2"),
        ("addi", 5, 2, 0),            # x5 = 57
        ("label", "picked"),
        ("blt", 5, 3, "small"),       # not taken
        ("sw", 5, 0, 0x220),
        ("label", "small"),
        ("sltu", 6, 3, 5),            # 19 < 57 -> 1
        ("beq", 6, 0, "done"),        # not taken
        ("addi", 7, 0, 1),
        ("bge", 2, 1, "store7"),      # taken
        ("addi", 7, 0, 2),
        ("label", "store7"),
        ("sw", 7, 0, 0x224),
        ("label", "done"),
        ("ecall",),
    ])


def irq_demo() -> Workload:
    """Increment-and-store loop interrupted by line 0 at cycle 9; the
    handler at reset_pc+0x40 stores the counter and halts."""
    return Workload("irq_demo", [
        ("label", "main"),
        ("addi", 5, 5, 1),
        ("sw", 5, 0, 0x230),
        ("jal", 0, "main"),
        ("org", 0x40),
        ("sw", 5, 0, 0x234),
        ("ecall",),
    ], irq_schedule={9: 0x1})


def storeheavy() -> Workload:
    """Straight-line byte/half/word store mix, all x0-based addressing."""
    return Workload("storeheavy", [
        ("addi", 1, 0, 0x7A),
        ("addi", 2, 0, 0x51F),
        ("lui", 3, 0xABCDE000),
        ("ori", 3, 3, 0x05A),
        ("sb", 1, 0, 0x240),
        ("sh", 2, 0, 0x242),
        ("sw", 3, 0, 0x244),
        ("sb", 2, 0, 0x248),
        ("sh", 3, 0, 0x24A),
        ("sw", 1, 0, 0x24C),
        ("sw", 2, 0, 0x250),
        ("ecall",),
    ])


def ccf_shiftstore() -> Workload:
    """Adversarial pair-fault target: one live register, rewritten by a
    shift and observed by a store on alternating instructions."""
    body = [("addi", 5, 0, 0x291)]
    for i in range(5):
        body.append(("slli", 5, 5, 1))
        body.append(("sw", 5, 0, 0x260 + 4 * i))
    body.append(("ecall",))
    return Workload("ccf_shiftstore", body)


def ccf_straightline() -> Workload:
    """Adversarial pair-fault target for pc corruption: a chain of distinct
    adds whose sum is stored once at the end."""
    steps = [5, 9, 11, 2, 7, 21, 13, 6, 10]
    body = [("addi", 5, 0, 3)]
    body += [("addi", 5, 5, k) for k in steps]
    body += [("sw", 5, 0, 0x280), ("ecall",)]
    return Workload("ccf_straightline", body)


def ccf_loadstore() -> Workload:
    """Adversarial pair-fault target mixing loads, shifts and stores on a
    single live register."""
    return Workload("ccf_loadstore", [
        ("addi", 5, 0, 0x155),
        ("sw", 5, 0, 0x290),
        ("lw", 5, 0, 0x300),
        ("sw", 5, 0, 0x294),
        ("slli", 5, 5, 1),
        ("sw", 5, 0, 0x298),
        ("lw", 5, 0, 0x304),
        ("sw", 5, 0, 0x29C),
        ("slli", 5, 5, 1),
        ("sw", 5, 0, 0x2A0),
        ("ecall",),
    ], data=[(0x300, 0x0000BEEF), (0x304, 0x12345678)])


def pure_alu_line(n: int = 24) -> Workload:
    """Straight ALU chain with one instruction per cycle and no memory
    traffic; every consecutive pc differs, which the stagger-separation
    tests require."""
    body = [("addi", 5, 0, 1)]
    body += [("addi", 5, 5, (i * 7 + 3) % 1024) for i in range(n - 1)]
    body += [("ecall",)]
    return Workload("pure_alu_line", body)


CORPUS = {
    "straightline_mix": straightline_mix,
    "arith_loop": arith_loop,
    "checksum": checksum,
    "branchy": branchy,
    "irq_demo": irq_demo,
    "storeheavy": storeheavy,
}

ADVERSARIAL = {
    "ccf_shiftstore": ccf_shiftstore,
    "ccf_straightline": ccf_straightline,
    "ccf_loadstore": ccf_loadstore,
}

BUILTINS = {**CORPUS, **ADVERSARIAL, "pure_alu_line": pure_alu_line}


def builtin(name: str) -> Workload:
    if name not in BUILTINS:
        raise ConfigError(f"unknown builtin program {name!r}")
    return BUILTINS[name]()
