"""locksim: cycle-stepped simulator of a time-staggered dual-core lockstep
RV32I system, with fault injection, parity/SECDED storage models, a small
SoC harness, and a deterministic reporting CLI."""

__version__ = "0.1.0"
