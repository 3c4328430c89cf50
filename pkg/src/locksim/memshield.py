"""Memory-side protection models: parity caches and a SECDED word code.

The register file and pc live inside the replicated cores, so the wrapper
comparator covers them.  Everything on the memory side is singular and
needs its own protection: cached copies carry per-word parity and recover
by invalidate-and-refetch (the backing store is the clean source), and
backing words can carry a (39,32) single-error-correcting,
double-error-detecting code.

Both models are timing-neutral here: a recovery happens within the same
service call, so core-visible timing never depends on whether a flip
occurred.  That keeps fault classification independent of cache state.
"""

from dataclasses import dataclass

from .core_isa import (
    AccessFault,
    ConfigError,
    MASK32,
    Memory,
    OutputVector,
    WIDTH_BYTES,
    WIDTH_WORD,
)

# --- (39,32) SECDED ----------------------------------------------------------
#
# Hamming positions 1..38 with check bits at the six powers of two, plus an
# overall parity bit at position 39.  Data bit i occupies the i-th
# non-power-of-two position.  Bit k of the codeword integer is position k+1.

SECDED_BITS = 39

CLEAN = "clean"
CORRECTED = "corrected"
DETECTED_UNCORRECTABLE = "uncorrectable"

_CHECK_POSITIONS = (1, 2, 4, 8, 16, 32)
_DATA_POSITIONS = tuple(p for p in range(1, 39) if p & (p - 1))

# group masks over full codewords, built once
_GROUP_MASKS = tuple(
    sum(1 << (p - 1) for p in range(1, 39) if p & c)
    for c in _CHECK_POSITIONS
)
_OVERALL_MASK = (1 << 39) - 1


class UncorrectableError(Exception):
    """A protected word failed decode beyond correction capability."""


def secded_encode(word: int) -> int:
    if not 0 <= word <= MASK32:
        raise ConfigError(f"word out of range: {word!r}")
    cw = 0
    for i, p in enumerate(_DATA_POSITIONS):
        if word >> i & 1:
            cw |= 1 << (p - 1)
    for c, mask in zip(_CHECK_POSITIONS, _GROUP_MASKS):
        if (cw & mask).bit_count() & 1:
            cw |= 1 << (c - 1)
    if cw.bit_count() & 1:
        cw |= 1 << 38
    return cw


def secded_decode(cw: int):
    """Returns (word, status).  word is None when uncorrectable."""
    syndrome = 0
    for c, mask in zip(_CHECK_POSITIONS, _GROUP_MASKS):
        if (cw & mask).bit_count() & 1:
            syndrome |= c
    odd_overall = bool((cw & _OVERALL_MASK).bit_count() & 1)

    if syndrome == 0 and not odd_overall:
        return _extract(cw), CLEAN
    if odd_overall:
        # single flip: at the syndrome position, or at the overall
        # parity bit itself when the syndrome is silent
        flip = syndrome if syndrome else 39
        return _extract(cw ^ (1 << (flip - 1))), CORRECTED
    return None, DETECTED_UNCORRECTABLE


def _extract(cw: int) -> int:
    word = 0
    for i, p in enumerate(_DATA_POSITIONS):
        if cw >> (p - 1) & 1:
            word |= 1 << i
    return word


class SecdedMemory:
    """Word-addressed store holding encoded words; corrects on read and
    scrubs the corrected value back."""

    def __init__(self, nwords):
        if nwords <= 0:
            raise ConfigError(f"bad size: {nwords}")
        self.cells = [0] * nwords
        self.corrected_count = 0
        self.uncorrectable_count = 0

    def _index(self, addr):
        if addr % 4:
            raise AccessFault(f"unaligned: {addr:#x}")
        idx = addr >> 2
        if not 0 <= idx < len(self.cells):
            raise AccessFault(f"out of range: {addr:#x}")
        return idx

    def write_word(self, addr, word):
        self.cells[self._index(addr)] = secded_encode(word)

    def read_word(self, addr):
        idx = self._index(addr)
        word, status = secded_decode(self.cells[idx])
        if status == DETECTED_UNCORRECTABLE:
            self.uncorrectable_count += 1
            raise UncorrectableError(f"word at {addr:#x}")
        if status == CORRECTED:
            self.corrected_count += 1
            self.cells[idx] = secded_encode(word)
        return word

    def flip_bit(self, addr, bit):
        if not 0 <= bit < SECDED_BITS:
            raise ConfigError(f"bad bit: {bit}")
        self.cells[self._index(addr)] ^= 1 << bit


# --- parity caches ------------------------------------------------------------

class PolicyViolation(Exception):
    """A write reached a cache whose policy forbids writes."""


@dataclass(frozen=True)
class CacheConfig:
    line_words: int = 8
    lines: int = 16
    policy: str = "read_only"
    parity: bool = True

    def __post_init__(self):
        for name in ("line_words", "lines"):
            v = getattr(self, name)
            if not isinstance(v, int) or v <= 0 or v & (v - 1):
                raise ConfigError(f"{name} must be a positive power of two, "
                                  f"got {v!r}")
        if self.policy not in ("read_only", "write_through"):
            raise ConfigError(f"unknown policy: {self.policy!r}")


class ParityCache:
    """Direct-mapped cache with one even-parity bit per cached word.

    Parity is computed at fill time and kept in step on writes; a flip of
    a cached data (or parity) bit is detected on the next read of that
    word, the line is dropped, and the word is re-read from backing.
    Write-through, no write-allocate: backing memory is always current,
    so refetch is always a full recovery.
    """

    def __init__(self, cfg: CacheConfig = None):
        self.cfg = cfg if cfg is not None else CacheConfig()
        n = self.cfg.lines
        self.valid = [False] * n
        self.tag = [0] * n
        self.data = [[0] * self.cfg.line_words for _ in range(n)]
        self.parity = [[0] * self.cfg.line_words for _ in range(n)]
        self.hits = 0
        self.misses = 0
        self.recovery_count = 0

    def _locate(self, addr):
        windex = addr >> 2
        off = windex % self.cfg.line_words
        li = (windex // self.cfg.line_words) % self.cfg.lines
        tag = windex // (self.cfg.line_words * self.cfg.lines)
        return li, off, tag

    def _resident(self, addr):
        li, off, tag = self._locate(addr)
        return self.valid[li] and self.tag[li] == tag

    def _fill(self, mem, addr):
        li, off, tag = self._locate(addr)
        base = (addr >> 2) // self.cfg.line_words * self.cfg.line_words * 4
        words = [mem.read_word(base + 4 * i)
                 for i in range(self.cfg.line_words)]
        self.valid[li] = True
        self.tag[li] = tag
        self.data[li] = words
        self.parity[li] = [w.bit_count() & 1 for w in words]
        return words[off]

    def read(self, mem: Memory, addr: int):
        """Word read at addr (aligned down).  Returns (word, hit, recovered)."""
        addr &= ~3
        li, off, tag = self._locate(addr)
        if self.valid[li] and self.tag[li] == tag:
            word = self.data[li][off]
            if (not self.cfg.parity
                    or word.bit_count() & 1 == self.parity[li][off]):
                self.hits += 1
                return word, True, False
            # parity mismatch: drop the line and refetch
            self.valid[li] = False
            self.recovery_count += 1
            self.misses += 1
            return self._fill(mem, addr), False, True
        self.misses += 1
        return self._fill(mem, addr), False, False

    def write(self, mem: Memory, addr: int, wdata: int, width: int):
        if self.cfg.policy != "write_through":
            raise PolicyViolation(f"write to {self.cfg.policy} cache")
        mem.store(addr, wdata, width)
        self.merge_resident(addr, wdata, width)

    def merge_resident(self, addr, wdata, width):
        """Fold a store into the cached copy (no-allocate), backing aside."""
        if self.cfg.policy != "write_through":
            raise PolicyViolation(f"write to {self.cfg.policy} cache")
        if self._resident(addr & ~3):
            li, off, _ = self._locate(addr & ~3)
            nbytes = WIDTH_BYTES[width]
            shift = (addr & 3) * 8
            mask = ((1 << (8 * nbytes)) - 1) << shift
            merged = (self.data[li][off] & ~mask) | ((wdata << shift) & mask)
            self.data[li][off] = merged & MASK32
            self.parity[li][off] = (merged & MASK32).bit_count() & 1

    # fault hooks: flips hit the stored copy only, never the backing store

    def _require_resident(self, addr):
        if not self._resident(addr & ~3):
            raise ConfigError(f"no cached copy of {addr:#x} to corrupt")
        return self._locate(addr & ~3)

    def flip_data_bit(self, addr, bit):
        if not 0 <= bit < 32:
            raise ConfigError(f"bad bit: {bit}")
        li, off, _ = self._require_resident(addr)
        self.data[li][off] ^= 1 << bit

    def flip_parity_bit(self, addr):
        li, off, _ = self._require_resident(addr)
        self.parity[li][off] ^= 1


# --- request servicing ---------------------------------------------------------

class RawFront:
    """Cacheless request servicing straight against a Memory."""

    def __init__(self, memory: Memory):
        self.memory = memory
        self.recovery_count = 0

    def service(self, out: OutputVector):
        instr = data = None
        if out.fetch_req is not None:
            instr = self.memory.read_word(out.fetch_req)
        if out.mem_req is not None:
            m = out.mem_req
            if m.is_write:
                self.memory.store(m.addr, m.wdata, m.width)
            else:
                data = self.memory.load(m.addr, m.width)
        return instr, data


class CacheFront:
    """Instruction and data caches in front of a backing Memory.

    Same-cycle semantics as RawFront: recoveries complete inside the
    call, so a core driven through either front sees identical timing.
    """

    def __init__(self, memory: Memory, icache_cfg: CacheConfig = None,
                 dcache_cfg: CacheConfig = None):
        self.memory = memory
        self.icache = ParityCache(icache_cfg if icache_cfg is not None
                                  else CacheConfig(policy="read_only"))
        self.dcache = ParityCache(dcache_cfg if dcache_cfg is not None
                                  else CacheConfig(policy="write_through"))
        if self.dcache.cfg.policy != "write_through":
            raise ConfigError("data cache must be write_through")

    @property
    def recovery_count(self):
        return self.icache.recovery_count + self.dcache.recovery_count

    def service(self, out: OutputVector, write_to_backing=True):
        """write_to_backing=False serves a checker copy whose stores are
        compared, not committed: the cached word is updated so later hits
        read coherently, but backing memory is left to the live copy."""
        instr = data = None
        if out.fetch_req is not None:
            instr, _, _ = self.icache.read(self.memory, out.fetch_req)
        if out.mem_req is not None:
            m = out.mem_req
            if m.is_write:
                if write_to_backing:
                    self.dcache.write(self.memory, m.addr, m.wdata, m.width)
                else:
                    self.dcache.merge_resident(m.addr, m.wdata, m.width)
            else:
                word, _, _ = self.dcache.read(self.memory, m.addr)
                shift = (m.addr & 3) * 8
                nbytes = WIDTH_BYTES[m.width]
                data = (word >> shift) & ((1 << (8 * nbytes)) - 1)
        return instr, data
