"""Memory protection tests.

The codeword layout is pinned by hand-worked examples (data bit 0 sits at
position 3, so encode(1) must set positions 1, 2, 3 and the overall parity
bit; worked independently of the implementation).  The correction
behaviour is pinned exhaustively: every single-bit flip over the 39-bit
word corrects, every double flip reports uncorrectable, and the code has
minimum distance 4 over sampled pairs.
"""

import random

import pytest

from locksim import core_isa as ci
from locksim import memshield as ms
from locksim import programs
from locksim.lockstep import run_solo


# hand-worked: data bit i maps to the i-th non-power-of-two position
HAND_CODEWORDS = {
    0x00000000: 0x0000000000,
    0x00000001: 0x4000000007,
    0x00000002: 0x4000000019,
    0xFFFFFFFF: 0x3F7FFFFFF4,
}


# --- SECDED ----------------------------------------------------------------

def test_codeword_width():
    assert ms.SECDED_BITS == 39
    for w in (0, 1, 0xFFFFFFFF, 0xDEADBEEF):
        assert 0 <= ms.secded_encode(w) < (1 << 39)


def test_hand_worked_codewords():
    for word, cw in HAND_CODEWORDS.items():
        assert ms.secded_encode(word) == cw, hex(word)


def test_roundtrip_clean():
    rng = random.Random(41)
    for _ in range(500):
        w = rng.getrandbits(32)
        data, status = ms.secded_decode(ms.secded_encode(w))
        assert data == w and status == ms.CLEAN


def test_every_single_flip_is_corrected():
    rng = random.Random(42)
    for w in [0, 0xFFFFFFFF, 0xA5A5A5A5] + [rng.getrandbits(32)
                                            for _ in range(5)]:
        cw = ms.secded_encode(w)
        for bit in range(39):
            data, status = ms.secded_decode(cw ^ (1 << bit))
            assert status == ms.CORRECTED, (hex(w), bit)
            assert data == w, (hex(w), bit)


def test_every_double_flip_is_detected_not_miscorrected():
    w = 0xC0FFEE42
    cw = ms.secded_encode(w)
    ndoubles = 0
    for i in range(39):
        for j in range(i + 1, 39):
            data, status = ms.secded_decode(cw ^ (1 << i) ^ (1 << j))
            assert status == ms.DETECTED_UNCORRECTABLE, (i, j)
            assert data is None, (i, j)
            ndoubles += 1
    assert ndoubles == 741


def test_minimum_distance_is_four():
    rng = random.Random(43)
    words = [rng.getrandbits(32) for _ in range(80)]
    for a in words:
        for delta in (1, 3, 1 << 17, 0x80000001):
            b = (a ^ delta) & 0xFFFFFFFF
            d = (ms.secded_encode(a) ^ ms.secded_encode(b)).bit_count()
            assert d >= 4, (hex(a), hex(b))
    for _ in range(200):
        a, b = rng.getrandbits(32), rng.getrandbits(32)
        if a == b:
            continue
        assert (ms.secded_encode(a) ^ ms.secded_encode(b)).bit_count() >= 4


def test_encode_rejects_out_of_range():
    with pytest.raises(ci.ConfigError):
        ms.secded_encode(1 << 32)
    with pytest.raises(ci.ConfigError):
        ms.secded_encode(-1)


def test_secded_memory_corrects_and_counts():
    m = ms.SecdedMemory(16)
    m.write_word(0, 0xDEADBEEF)
    m.write_word(4, 0x12345678)
    m.flip_bit(0, 7)
    m.flip_bit(4, 38)
    assert m.read_word(0) == 0xDEADBEEF
    assert m.read_word(4) == 0x12345678
    assert m.corrected_count == 2
    m.flip_bit(8, 0)
    m.flip_bit(8, 1)
    with pytest.raises(ms.UncorrectableError):
        m.read_word(8)
    assert m.uncorrectable_count == 1


# --- parity caches ----------------------------------------------------------

def _mem_with_pattern(size=4096):
    mem = ci.Memory(size)
    for a in range(0, size, 4):
        mem.store(a, (a * 2654435761) & ci.MASK32, ci.WIDTH_WORD)
    return mem


def test_cache_config_validation():
    ms.CacheConfig(line_words=8, lines=16)
    for bad in (dict(line_words=0), dict(lines=3), dict(line_words=6),
                dict(lines=-2)):
        with pytest.raises(ci.ConfigError):
            ms.CacheConfig(**bad)


def test_read_miss_then_hit():
    mem = _mem_with_pattern()
    c = ms.ParityCache(ms.CacheConfig())
    w0, hit0, rec0 = c.read(mem, 0x40)
    assert w0 == mem.read_word(0x40) and not hit0 and not rec0
    w1, hit1, rec1 = c.read(mem, 0x40)
    assert w1 == w0 and hit1 and not rec1


def test_line_fill_geometry():
    mem = _mem_with_pattern()
    c = ms.ParityCache(ms.CacheConfig(line_words=8, lines=16))
    c.read(mem, 0x100)
    # same 32-byte line: hit; next line: miss
    _, hit, _ = c.read(mem, 0x11C)
    assert hit
    _, hit, _ = c.read(mem, 0x120)
    assert not hit


def test_direct_mapped_conflict_eviction():
    mem = _mem_with_pattern()
    c = ms.ParityCache(ms.CacheConfig(line_words=8, lines=16))
    c.read(mem, 0x0)
    _, hit, _ = c.read(mem, 0x0 + 16 * 32)   # same index, different tag
    assert not hit
    _, hit, _ = c.read(mem, 0x0)
    assert not hit                            # first line was evicted


def test_data_flip_detected_recovered_and_counted():
    mem = _mem_with_pattern()
    c = ms.ParityCache(ms.CacheConfig())
    c.read(mem, 0x80)
    c.flip_data_bit(addr=0x80, bit=13)
    word, hit, recovered = c.read(mem, 0x80)
    assert word == mem.read_word(0x80)
    assert recovered and not hit
    assert c.recovery_count == 1
    _, hit, _ = c.read(mem, 0x80)
    assert hit                                # refilled line is clean


def test_parity_bit_flip_also_recovers():
    mem = _mem_with_pattern()
    c = ms.ParityCache(ms.CacheConfig())
    c.read(mem, 0x200)
    c.flip_parity_bit(addr=0x200)
    word, _, recovered = c.read(mem, 0x200)
    assert word == mem.read_word(0x200) and recovered
    assert c.recovery_count == 1


def test_flip_every_bit_of_a_line_all_recover():
    mem = _mem_with_pattern()
    cfg = ms.CacheConfig(line_words=8, lines=16)
    for bit in range(32):
        for word_idx in range(8):
            c = ms.ParityCache(cfg)
            addr = 0x300 + 4 * word_idx
            c.read(mem, addr)
            c.flip_data_bit(addr=addr, bit=bit)
            got, _, recovered = c.read(mem, addr)
            assert recovered and got == mem.read_word(addr)
            assert c.recovery_count == 1


def test_parity_disabled_lets_corruption_through():
    mem = _mem_with_pattern()
    c = ms.ParityCache(ms.CacheConfig(parity=False))
    clean = mem.read_word(0x80)
    c.read(mem, 0x80)
    c.flip_data_bit(addr=0x80, bit=3)
    word, hit, recovered = c.read(mem, 0x80)
    assert hit and not recovered
    assert word == clean ^ 8
    assert c.recovery_count == 0


def test_write_through_updates_backing_and_cached_copy():
    mem = _mem_with_pattern()
    c = ms.ParityCache(ms.CacheConfig(policy="write_through"))
    c.read(mem, 0x40)
    c.write(mem, 0x40, 0xCAFEBABE, ci.WIDTH_WORD)
    assert mem.read_word(0x40) == 0xCAFEBABE
    word, hit, recovered = c.read(mem, 0x40)
    assert word == 0xCAFEBABE and hit and not recovered   # parity kept valid


def test_write_subword_merges_into_cached_word():
    mem = _mem_with_pattern()
    c = ms.ParityCache(ms.CacheConfig(policy="write_through"))
    c.read(mem, 0x40)
    c.write(mem, 0x41, 0xAB, ci.WIDTH_BYTE)
    expect = mem.read_word(0x40)
    word, hit, _ = c.read(mem, 0x40)
    assert hit and word == expect


def test_write_does_not_allocate_on_miss():
    mem = _mem_with_pattern()
    c = ms.ParityCache(ms.CacheConfig(policy="write_through"))
    c.write(mem, 0x500, 77, ci.WIDTH_WORD)
    assert mem.read_word(0x500) == 77
    _, hit, _ = c.read(mem, 0x500)
    assert not hit


def test_read_only_cache_rejects_writes():
    mem = _mem_with_pattern()
    c = ms.ParityCache(ms.CacheConfig(policy="read_only"))
    with pytest.raises(ms.PolicyViolation):
        c.write(mem, 0x40, 1, ci.WIDTH_WORD)


# --- the cache front serving a core ------------------------------------------

def _run_with_front(workload, front, budget=5000):
    state = ci.reset(ci.CoreConfig(reset_pc=workload.reset_pc))
    inp = ci.InputVector(irq_lines=workload.irq_schedule.get(0, 0))
    outs = []
    for cycle in range(budget):
        state, out = ci.step(state, inp)
        outs.append(out)
        if out.halted:
            return outs, state
        instr, data = front.service(out)
        inp = ci.InputVector(instr_response=instr, data_response=data,
                             irq_lines=workload.irq_schedule.get(cycle + 1, 0))
    raise AssertionError("budget exhausted")


@pytest.mark.parametrize("name", ["arith_loop", "checksum", "branchy",
                                  "storeheavy"])
def test_front_is_timing_neutral_and_transparent(name):
    wl = programs.BUILTINS[name]()
    mem_a = ci.Memory(wl.memory_size)
    mem_a.load_words(wl.base, wl.words)
    for addr, word in wl.data:
        mem_a.store(addr, word, ci.WIDTH_WORD)
    bare = ms.RawFront(mem_a)
    outs_a, st_a = _run_with_front(wl, bare)

    mem_b = ci.Memory(wl.memory_size)
    mem_b.load_words(wl.base, wl.words)
    for addr, word in wl.data:
        mem_b.store(addr, word, ci.WIDTH_WORD)
    cached = ms.CacheFront(mem_b)
    outs_b, st_b = _run_with_front(wl, cached)

    assert [ci.encode_output(o) for o in outs_a] == \
        [ci.encode_output(o) for o in outs_b]
    assert ci.encode_arch_state(st_a) == ci.encode_arch_state(st_b)
    assert mem_a.snapshot() == mem_b.snapshot()
    assert cached.recovery_count == 0
    assert cached.icache.hits > 0


def test_front_recovers_mid_run_instruction_flip():
    """Flip an instruction bit in the loop body after the line is cached;
    the next fetch of that word must detect, refetch, and return the
    clean encoding, leaving the run's outcome untouched."""
    wl = programs.arith_loop()
    mem = ci.Memory(wl.memory_size)
    mem.load_words(wl.base, wl.words)
    for addr, word in wl.data:
        mem.store(addr, word, ci.WIDTH_WORD)
    front = ms.CacheFront(mem)
    state = ci.reset(ci.CoreConfig(reset_pc=wl.reset_pc))
    inp = ci.InputVector()
    flipped = False
    for cycle in range(5000):
        state, out = ci.step(state, inp)
        if out.halted:
            break
        if cycle == 12 and not flipped:
            # the loop-head lw sits at base+8 and is refetched every pass
            front.icache.flip_data_bit(addr=wl.base + 8, bit=5)
            flipped = True
        instr, data = front.service(out)
        inp = ci.InputVector(instr_response=instr, data_response=data)
    assert flipped and out.halted
    assert front.recovery_count == 1
    # identical architectural result to an undisturbed run
    _, golden_state, golden_after = run_solo(wl)
    assert ci.encode_arch_state(state) == ci.encode_arch_state(golden_state)
    assert mem.snapshot() == golden_after.snapshot()
