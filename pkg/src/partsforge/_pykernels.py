"""Pure-Python twin of the compiled kernels (same streams, same results)."""

import numpy as np

M64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def fmix64(x):
    x ^= x >> 33
    x = (x * 0xFF51AFD7ED558CCD) & M64
    x ^= x >> 29
    x = (x * 0xC4CEB9FE1A85EC53) & M64
    x ^= x >> 32
    return x


def toymac(ptr, mod, k_lo, k_hi):
    return fmix64(fmix64(ptr ^ k_lo) ^ mod ^ k_hi)


class _SplitMix:
    __slots__ = ("s",)

    def __init__(self, seed, trial):
        self.s = fmix64(seed ^ (((trial + 1) * GOLDEN) & M64))

    def next(self):
        self.s = (self.s + GOLDEN) & M64
        z = self.s
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & M64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & M64
        return z ^ (z >> 31)


def bruteforce_restart(pac_bits, trials, seed, max_attempts, ptr, mod):
    out = np.zeros(trials, dtype=np.int64)
    mask = (1 << pac_bits) - 1
    for t in range(trials):
        rng = _SplitMix(seed, t)
        guess = rng.next() & mask
        n = 0
        while n < max_attempts:
            n += 1
            k_lo = rng.next()
            k_hi = rng.next()
            if toymac(ptr, mod, k_lo, k_hi) & mask == guess:
                out[t] = n
                break
    return out


def bruteforce_sibling(pac_bits, trials, seed, ptr, mod):
    out = np.zeros(trials, dtype=np.int64)
    mask = (1 << pac_bits) - 1
    for t in range(trials):
        rng = _SplitMix(seed, t)
        k_lo = rng.next()
        k_hi = rng.next()
        target = toymac(ptr, mod, k_lo, k_hi) & mask
        start = rng.next() & mask
        # first i >= 0 with (start + i) & mask == target, found by enumeration
        for i in range(mask + 1):
            if (start + i) & mask == target:
                out[t] = i + 1
                break
    return out
