"""Guessing-effort formulas for b-bit PACs and Monte-Carlo checks of them."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import _backend
from ..pa_core import ContractError

POLICIES = ("restart", "sibling")


def _check_bits(b: int):
    if not 3 <= b <= 31:
        raise ContractError(f"pac_bits must be in 3..31, got {b}")


def guess_attempts(p: float, b: int) -> int:
    """Guesses needed to hit a b-bit PAC with probability p when every
    failure restarts the victim with fresh keys (floor of the real root)."""
    if not 0 < p < 1:
        raise ContractError(f"probability must be in (0, 1), got {p}")
    _check_bits(b)
    return math.floor(math.log1p(-p) / math.log1p(-(2.0 ** -b)))


def sibling_average_guesses(b: int) -> int:
    """Mean guesses against a victim whose key survives failures."""
    _check_bits(b)
    return 2 ** (b - 1)


@dataclass
class BruteforceStats:
    pac_bits: int
    policy: str
    trials: int
    seed: int
    attempts: np.ndarray  # per trial; 0 marks a censored trial
    max_attempts: int | None = None

    @property
    def censored(self) -> int:
        return int(np.count_nonzero(self.attempts == 0))

    @property
    def mean(self) -> float:
        """Mean attempts over the uncensored trials."""
        done = self.attempts[self.attempts > 0]
        return float(done.mean()) if done.size else math.nan

    def success_within(self, n: int) -> float:
        a = self.attempts
        return float(np.count_nonzero((a > 0) & (a <= n)) / a.size)

    def curve(self, points) -> list:
        return [(int(n), self.success_within(n)) for n in points]

    def as_dict(self) -> dict:
        out = {"pac_bits": self.pac_bits, "policy": self.policy, "trials": self.trials,
               "seed": self.seed, "censored": self.censored, "mean_attempts": self.mean,
               "max_attempts": self.max_attempts, "backend": _backend.NAME}
        if self.policy == "restart":
            n = guess_attempts(0.5, self.pac_bits)
            out["success_within_half_point"] = {"attempts": n, "rate": self.success_within(n)}
        return out


def simulate_bruteforce(b: int, policy: str = "restart", trials: int = 100_000, seed: int = 0,
                        max_attempts: int | None = None, ptr: int = 0x400000,
                        mod: int = 0x5EED) -> BruteforceStats:
    """Monte-Carlo guessing against the PAC oracle.

    ``restart``: every failed guess kills the victim, which comes back with
    fresh keys, so each attempt succeeds independently with chance 2^-b.
    ``sibling``: the key persists and the attacker enumerates PAC values
    without repetition.  Restart trials still unresolved after
    ``max_attempts`` are censored (default cap: 64 * 2^b).
    """
    _check_bits(b)
    if trials < 1:
        raise ContractError("trials must be >= 1")
    if policy not in POLICIES:
        raise ContractError(f"policy must be one of {POLICIES}")
    k = _backend.kernels
    if policy == "restart":
        cap = max_attempts if max_attempts is not None else 64 << b
        attempts = k.bruteforce_restart(b, trials, seed, cap, ptr, mod)
    else:
        cap = None
        attempts = k.bruteforce_sibling(b, trials, seed, ptr, mod)
    return BruteforceStats(b, policy, trials, seed, np.asarray(attempts), cap)
