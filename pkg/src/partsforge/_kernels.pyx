# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: the ToyMAC finalizer and the brute-force samplers.

Mirrors ``_pykernels`` bit for bit; the two are cross-checked in the tests.
"""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL


cdef inline uint64_t _fmix(uint64_t x) nogil:
    x ^= x >> 33
    x *= 0xFF51AFD7ED558CCDULL
    x ^= x >> 29
    x *= 0xC4CEB9FE1A85EC53ULL
    x ^= x >> 32
    return x


cdef inline uint64_t _toymac(uint64_t ptr, uint64_t mod, uint64_t k_lo, uint64_t k_hi) nogil:
    return _fmix(_fmix(ptr ^ k_lo) ^ mod ^ k_hi)


cdef inline uint64_t _next(uint64_t* s) nogil:
    # splitmix64
    s[0] += GOLDEN
    cdef uint64_t z = s[0]
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t _trial_state(uint64_t seed, uint64_t trial) nogil:
    return _fmix(seed ^ ((trial + 1) * GOLDEN))


cpdef uint64_t fmix64(uint64_t x):
    return _fmix(x)


cpdef uint64_t toymac(uint64_t ptr, uint64_t mod, uint64_t k_lo, uint64_t k_hi):
    return _toymac(ptr, mod, k_lo, k_hi)


def bruteforce_restart(int pac_bits, Py_ssize_t trials, uint64_t seed,
                       int64_t max_attempts, uint64_t ptr, uint64_t mod):
    """Attempts-to-success per trial when every failure re-keys the victim.

    0 marks a trial censored at ``max_attempts``.
    """
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out = np.zeros(trials, dtype=np.int64)
    cdef uint64_t mask = (1ULL << pac_bits) - 1
    cdef uint64_t s, guess, k_lo, k_hi
    cdef int64_t n
    cdef Py_ssize_t t
    with nogil:
        for t in range(trials):
            s = _trial_state(seed, <uint64_t>t)
            guess = _next(&s) & mask
            n = 0
            while n < max_attempts:
                n += 1
                k_lo = _next(&s)
                k_hi = _next(&s)
                if (_toymac(ptr, mod, k_lo, k_hi) & mask) == guess:
                    out[t] = n
                    break
    return out


def bruteforce_sibling(int pac_bits, Py_ssize_t trials, uint64_t seed,
                       uint64_t ptr, uint64_t mod):
    """Attempts-to-success per trial against a fixed key, guessing without
    replacement from a random starting PAC."""
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out = np.zeros(trials, dtype=np.int64)
    cdef uint64_t mask = (1ULL << pac_bits) - 1
    cdef uint64_t s, start, target, k_lo, k_hi, i
    cdef Py_ssize_t t
    with nogil:
        for t in range(trials):
            s = _trial_state(seed, <uint64_t>t)
            k_lo = _next(&s)
            k_hi = _next(&s)
            target = _toymac(ptr, mod, k_lo, k_hi) & mask
            start = _next(&s) & mask
            i = 0
            while i <= mask:
                if ((start + i) & mask) == target:
                    out[t] = <int64_t>(i + 1)
                    break
                i += 1
    return out
