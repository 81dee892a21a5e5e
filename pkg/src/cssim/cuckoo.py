"""Two-table cuckoo hash holding the server's blinded database.

Each key sits in exactly one slot: table 0 at ``h0(key)`` or table 1 at
``h1(key)``. Clients only ever need :func:`positions` and the published slot
contents; the key column never leaves the server.

Serialized layout (little-endian)::

    magic     4s   b"FTCT"
    version   u16  1
    m         u32  slots per table
    seed0     u64
    seed1     u64
    max_kicks u32
    elem_len  u16  bytes per slot value
    then 2*m slots, table 0 first: flag u8 (0 empty, 1 full) + elem_len bytes
"""

from __future__ import annotations

import math
import random
import struct
from dataclasses import dataclass, field
from typing import Optional, Sequence

MASK64 = (1 << 64) - 1
# splitmix64 constants
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MIX_MUL_1 = 0xBF58476D1CE4E5B9
MIX_MUL_2 = 0x94D049BB133111EB

MAGIC = b"FTCT"
VERSION = 1
DEFAULT_MAX_KICKS = 500
RESEED_ATTEMPTS = 16

_HEADER = struct.Struct("<4sHIQQIH")


class ReseedNeeded(RuntimeError):
    """Insertion hit ``max_kicks`` evictions; rebuild with fresh seeds."""


class TableFormatError(ValueError):
    pass


def mix64(x: int, seed: int) -> int:
    """Keyed 64-bit mixer: seed XOR, gamma add, splitmix64 finalizer."""
    z = ((x ^ seed) + GOLDEN_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * MIX_MUL_1) & MASK64
    z = ((z ^ (z >> 27)) * MIX_MUL_2) & MASK64
    return z ^ (z >> 31)


def _key_int(key) -> int:
    return key if isinstance(key, int) else key.value


@dataclass
class CuckooTable:
    m: int
    seeds: tuple
    max_kicks: int = DEFAULT_MAX_KICKS
    keys: list = field(default=None, repr=False)
    values: list = field(default=None, repr=False)

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("table size must be at least 1")
        self.seeds = tuple(self.seeds)
        if len(self.seeds) != 2:
            raise ValueError("exactly two hash seeds are required")
        if self.keys is None:
            self.keys = [[None] * self.m, [None] * self.m]
        if self.values is None:
            self.values = [[None] * self.m, [None] * self.m]

    def positions(self, key) -> tuple:
        k = _key_int(key)
        return mix64(k, self.seeds[0]) % self.m, mix64(k, self.seeds[1]) % self.m

    def slot(self, table: int, index: int):
        return self.values[table][index]

    def lookup(self, key):
        """Entry stored for ``key``, or ``None`` on a miss."""
        k = _key_int(key)
        for tab, pos in enumerate(self.positions(k)):
            if self.keys[tab][pos] == k:
                return self.values[tab][pos]
        return None

    def locate(self, key) -> Optional[tuple]:
        k = _key_int(key)
        for tab, pos in enumerate(self.positions(k)):
            if self.keys[tab][pos] == k:
                return tab, pos
        return None

    def __len__(self):
        return sum(k is not None for tab in self.keys for k in tab)

    @property
    def load_factor(self) -> float:
        return len(self) / (2 * self.m)

    def _insert(self, key: int, value) -> None:
        pos = self.positions(key)
        for tab in (0, 1):
            if self.keys[tab][pos[tab]] is None:
                self.keys[tab][pos[tab]] = key
                self.values[tab][pos[tab]] = value
                return
        tab = 0
        for _ in range(self.max_kicks):
            idx = self.positions(key)[tab]
            key, self.keys[tab][idx] = self.keys[tab][idx], key
            value, self.values[tab][idx] = self.values[tab][idx], value
            if key is None:
                return
            tab ^= 1
        raise ReseedNeeded(f"eviction chain exceeded {self.max_kicks} kicks")

    def published(self, filler=None) -> CuckooTable:
        """Copy without the key column; empty slots take ``filler(table, index)``."""
        values = [list(v) for v in self.values]
        if filler is not None:
            for tab in (0, 1):
                for i in range(self.m):
                    if values[tab][i] is None:
                        values[tab][i] = filler(tab, i)
        return CuckooTable(self.m, self.seeds, self.max_kicks,
                           keys=[[None] * self.m, [None] * self.m], values=values)

    def check_invariant(self) -> None:
        """Assert the one-slot rule for every stored key."""
        seen = {}
        for tab in (0, 1):
            for i, k in enumerate(self.keys[tab]):
                if k is None:
                    continue
                if k in seen:
                    raise AssertionError(f"key {k:#x} stored twice")
                if self.positions(k)[tab] != i:
                    raise AssertionError(f"key {k:#x} in table {tab} slot {i} is off its hash position")
                seen[k] = (tab, i)

    def to_bytes(self, elem_len: int) -> bytes:
        out = [_HEADER.pack(MAGIC, VERSION, self.m, self.seeds[0], self.seeds[1], self.max_kicks, elem_len)]
        empty = b"\x00" * (elem_len + 1)
        for tab in (0, 1):
            for v in self.values[tab]:
                out.append(empty if v is None else b"\x01" + int(v).to_bytes(elem_len, "little"))
        return b"".join(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> CuckooTable:
        if len(data) < _HEADER.size:
            raise TableFormatError("truncated header")
        magic, version, m, s0, s1, max_kicks, elem_len = _HEADER.unpack_from(data)
        if magic != MAGIC:
            raise TableFormatError(f"bad magic {magic!r}")
        if version != VERSION:
            raise TableFormatError(f"unsupported version {version}")
        stride = elem_len + 1
        if len(data) != _HEADER.size + 2 * m * stride:
            raise TableFormatError("slot array length does not match header")
        values = [[None] * m, [None] * m]
        off = _HEADER.size
        for tab in (0, 1):
            for i in range(m):
                flag = data[off]
                if flag == 1:
                    values[tab][i] = int.from_bytes(data[off + 1 : off + stride], "little")
                elif flag != 0:
                    raise TableFormatError(f"bad slot flag {flag}")
                off += stride
        return cls(m, (s0, s1), max_kicks, values=values)


def build(entries: Sequence[tuple], m: int, seeds: tuple, max_kicks: int = DEFAULT_MAX_KICKS) -> CuckooTable:
    """Place ``(key, value)`` pairs; raises :class:`ReseedNeeded` on a cycle."""
    table = CuckooTable(m, seeds, max_kicks)
    seen = set()
    for key, _ in entries:
        k = _key_int(key)
        if k in seen:
            raise ValueError(f"duplicate key {k:#x}")
        seen.add(k)
    for key, value in entries:
        table._insert(_key_int(key), value)
    return table


def build_with_reseed(entries: Sequence[tuple], m: int, rng: random.Random,
                      max_kicks: int = DEFAULT_MAX_KICKS, attempts: int = RESEED_ATTEMPTS) -> CuckooTable:
    for _ in range(attempts):
        seeds = (rng.getrandbits(64), rng.getrandbits(64))
        try:
            return build(entries, m, seeds, max_kicks)
        except ReseedNeeded:
            continue
    raise ReseedNeeded(f"no successful build in {attempts} seed attempts")


def size_for(n: int, load: float = 0.45) -> int:
    """Per-table size keeping ``n / (2 m)`` at or below ``load``."""
    return max(1, math.ceil(n / (2 * load)))
