"""Bit-exact pointer-authentication arithmetic.

A 64-bit pointer is split into an address field (the low ``va_bits``), a PAC
field directly above it, and tag bits at the top (bit 63, plus bits 62..56
when address tagging is on).  PACs are truncated outputs of a tweakable MAC
over the canonical address and a 64-bit modifier.
"""

from __future__ import annotations

import enum
import hashlib
import secrets
from dataclasses import dataclass
from typing import Callable, Optional

from . import _backend

M64 = (1 << 64) - 1
M128 = (1 << 128) - 1


class ContractError(ValueError):
    """An operation was called outside its precondition."""


@dataclass(frozen=True)
class VaConfig:
    va_bits: int = 39
    tagging: bool = False

    def __post_init__(self):
        if not 36 <= self.va_bits <= 52:
            raise ContractError(f"va_bits must be in 36..52, got {self.va_bits}")
        if not 3 <= self.pac_bits <= 31:
            raise ContractError(
                f"PAC width {self.pac_bits} outside 3..31 for va_bits={self.va_bits}, "
                f"tagging={self.tagging}")

    @property
    def pac_bits(self) -> int:
        return 64 - self.va_bits - (9 if self.tagging else 1)

    @property
    def addr_mask(self) -> int:
        return (1 << self.va_bits) - 1

    @property
    def pac_mask(self) -> int:
        return (1 << self.pac_bits) - 1

    @property
    def pac_shift(self) -> int:
        return self.va_bits

    def address(self, raw: int) -> int:
        return raw & self.addr_mask

    def pac_field(self, raw: int) -> int:
        return (raw >> self.va_bits) & self.pac_mask

    def tag_bits(self, raw: int) -> int:
        return raw & ~((1 << (self.va_bits + self.pac_bits)) - 1) & M64

    def is_canonical(self, raw: int) -> bool:
        return 0 <= raw <= self.addr_mask


DEFAULT_CONFIG = VaConfig()


class Key(enum.Enum):
    IA = "ia"
    IB = "ib"
    DA = "da"
    DB = "db"
    GA = "ga"

    @property
    def is_instruction(self) -> bool:
        return self in (Key.IA, Key.IB)


@dataclass(frozen=True, repr=False)
class KeySet:
    """The five 128-bit keys of one simulated process."""

    ia: int
    ib: int
    da: int
    db: int
    ga: int

    def __post_init__(self):
        for name in ("ia", "ib", "da", "db", "ga"):
            if not 0 <= getattr(self, name) <= M128:
                raise ContractError(f"key {name} is not a 128-bit value")

    def __repr__(self):
        return "KeySet(<redacted>)"

    def __getitem__(self, key: Key) -> int:
        return getattr(self, key.value)

    @classmethod
    def generate(cls, seed: Optional[int] = None) -> "KeySet":
        """Fresh keys; with ``seed`` the keys are a SHAKE-256 expansion of it."""
        if seed is None:
            material = secrets.token_bytes(80)
        else:
            material = hashlib.shake_256(b"partsforge-keys:" + str(int(seed)).encode()).digest(80)
        parts = [int.from_bytes(material[16 * i:16 * i + 16], "little") for i in range(5)]
        return cls(*parts)


# A MAC maps (canonical pointer, modifier, 128-bit key) to a 64-bit word.
MacFunction = Callable[[int, int, int], int]


def toy_mac(ptr: int, mod: int, key: int) -> int:
    """F(F(ptr ^ K_lo) ^ mod ^ K_hi) with F the 64-bit murmur3 finalizer."""
    return _backend.toymac(ptr & M64, mod & M64, key & M64, (key >> 64) & M64)


def failure_code(key: Key, cfg: VaConfig) -> int:
    """PAC-field pattern written by a failed authentication."""
    return (0b01 if key.is_instruction else 0b10) << (cfg.pac_bits - 2)


def failure_kind(raw: int, cfg: VaConfig) -> Optional[str]:
    """'instruction' or 'data' if ``raw`` carries an auth-failure code."""
    pac = cfg.pac_field(raw)
    if pac == 0b01 << (cfg.pac_bits - 2):
        return "instruction"
    if pac == 0b10 << (cfg.pac_bits - 2):
        return "data"
    return None


def pac_compute(ptr: int, mod: int, key: int, cfg: VaConfig = DEFAULT_CONFIG,
                mac: MacFunction = toy_mac) -> int:
    if not cfg.is_canonical(ptr):
        raise ContractError(f"pointer {ptr:#x} is not canonical for {cfg}")
    return mac(ptr, mod & M64, key) & cfg.pac_mask


def sign(ptr: int, mod: int, key: int, cfg: VaConfig = DEFAULT_CONFIG,
         mac: MacFunction = toy_mac) -> int:
    pac = pac_compute(ptr, mod, key, cfg, mac)
    return ptr | (pac << cfg.pac_shift)


def authenticate(p: int, mod: int, key: int, key_kind: Key = Key.IA,
                 cfg: VaConfig = DEFAULT_CONFIG, mac: MacFunction = toy_mac) -> int:
    """Canonical pointer on success; otherwise ``p`` with its PAC field
    replaced by the failure code of ``key_kind``'s class.  Never raises."""
    p &= M64
    address = cfg.address(p)
    if cfg.tag_bits(p) == 0 and cfg.pac_field(p) == pac_compute(address, mod, key, cfg, mac):
        return address
    return cfg.tag_bits(p) | (failure_code(key_kind, cfg) << cfg.pac_shift) | address


def strip(p: int, cfg: VaConfig = DEFAULT_CONFIG) -> int:
    return p & cfg.addr_mask


def generic_mac(a: int, b: int, key_ga: int, mac: MacFunction = toy_mac) -> int:
    """Keyed 32-bit digest of two words, returned in the upper half."""
    return mac(a & M64, b & M64, key_ga) & 0xFFFFFFFF00000000


def macvec_lines(count: int, seed: int, cfg: VaConfig = DEFAULT_CONFIG):
    """Test-vector lines ``ptr mod key_hi key_lo pac`` in lowercase hex."""
    import random

    rng = random.Random(seed)
    for _ in range(count):
        ptr = rng.getrandbits(cfg.va_bits)
        mod = rng.getrandbits(64)
        key = rng.getrandbits(128)
        pac = pac_compute(ptr, mod, key, cfg)
        yield f"{ptr:x} {mod:x} {key >> 64:x} {key & M64:x} {pac:x}"
