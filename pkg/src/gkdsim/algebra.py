"""Arbitrary-precision modular arithmetic for the group-key testbed.

Everything the protocol computes reduces to four things implemented here:
residue arithmetic in Z_m, safe-prime parameter generation, power vectors
(1, x, x^2, ..., x^w), and inner products of residue vectors. The module
deliberately exposes no inversion or division: the protocol only ever adds,
subtracts and multiplies, so it runs unchanged in the composite-modulus ring
and in a prime field.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .errors import (
    CompositeWhenPrimeRequired,
    EqualFactors,
    LengthMismatch,
    ModulusTooSmall,
    WidthTooSmall,
)


class Variant(Enum):
    """The two published flavours of the scheme.

    RING: modulus m = p*q for distinct safe primes, arithmetic in Z_m.
    FIELD: modulus is a single prime, shares hardened with a per-member hash.
    """

    RING = "ring"
    FIELD = "field"


# ---------------------------------------------------------------------------
# deterministic randomness
# ---------------------------------------------------------------------------

class SeededRng:
    """Deterministic byte stream: SHA-256 in counter mode over the seed.

    Chosen over random.Random so the byte stream is stable across Python
    versions; every draw in a scenario flows from one of these.
    """

    def __init__(self, seed: int):
        if seed < 0:
            raise ValueError("seed must be non-negative")
        self.seed = seed
        seed_bytes = seed.to_bytes((seed.bit_length() + 7) // 8 or 1, "big")
        self._key = hashlib.sha256(b"gkdsim/rng:" + seed_bytes).digest()
        self._counter = 0
        self._buffer = b""

    def take_bytes(self, n: int) -> bytes:
        while len(self._buffer) < n:
            block = self._key + self._counter.to_bytes(8, "big")
            self._buffer += hashlib.sha256(block).digest()
            self._counter += 1
        out, self._buffer = self._buffer[:n], self._buffer[n:]
        return out


# ---------------------------------------------------------------------------
# primality
# ---------------------------------------------------------------------------

def _sieve(limit: int) -> tuple[int, ...]:
    flags = bytearray([1]) * (limit + 1)
    flags[0] = flags[1] = 0
    for i in range(2, int(limit ** 0.5) + 1):
        if flags[i]:
            flags[i * i :: i] = bytearray(len(flags[i * i :: i]))
    return tuple(i for i, f in enumerate(flags) if f)


_SMALL_PRIMES = _sieve(1000)

# Miller-Rabin with these twelve bases is exact for n < 3_317_044_064_679_887_385_961_981.
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)
_MR_EXACT_BOUND = 3_317_044_064_679_887_385_961_981
_MR_EXTRA_ROUNDS = 40


def _mr_witness(n: int, a: int, d: int, r: int) -> bool:
    """True if a witnesses n composite."""
    x = pow(a, d, n)
    if x == 1 or x == n - 1:
        return False
    for _ in range(r - 1):
        x = x * x % n
        if x == n - 1:
            return False
    return True


def is_prime(n: int) -> bool:
    """Primality test: exact below ~3.3e24, Miller-Rabin beyond.

    Above the exact bound, 40 extra bases are derived from n itself by
    hashing, so the verdict is deterministic without being attacker-choosable
    in any way that matters for a testbed.
    """
    if n < 2:
        return False
    for p in _SMALL_PRIMES:
        if n == p:
            return True
        if n % p == 0:
            return False
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in _MR_BASES:
        if _mr_witness(n, a, d, r):
            return False
    if n < _MR_EXACT_BOUND:
        return True
    stream = hashlib.sha256(b"gkdsim/mr:" + n.to_bytes((n.bit_length() + 7) // 8, "big"))
    for i in range(_MR_EXTRA_ROUNDS):
        block = hashlib.sha256(stream.digest() + i.to_bytes(4, "big")).digest()
        a = 2 + int.from_bytes(block, "big") % (n - 3)
        if _mr_witness(n, a, d, r):
            return False
    return True


def is_safe_prime(n: int) -> bool:
    """True when n and (n-1)/2 are both prime."""
    return n > 4 and is_prime(n) and is_prime((n - 1) // 2)


def gen_safe_prime(bit_length: int, rng: SeededRng) -> int:
    """Draw candidates from rng until one is a safe prime of exactly bit_length bits.

    Deterministic for a fixed rng state. Safe primes above 5 are 3 mod 4,
    so for bit_length >= 4 the two low bits are forced, halving the search.
    """
    if bit_length < 3:
        raise ModulusTooSmall(f"no safe prime has {bit_length} bits")
    nbytes = (bit_length + 7) // 8
    mask = (1 << bit_length) - 1
    while True:
        v = int.from_bytes(rng.take_bytes(nbytes), "big") & mask
        v |= (1 << (bit_length - 1)) | 1
        if bit_length >= 4:
            v |= 2
        # v odd, so (v-1)/2 == v >> 1; test the half first, it fails more often
        if is_prime(v >> 1) and is_prime(v):
            return v


def gen_distinct_safe_primes(bit_length: int, rng: SeededRng, attempts: int = 256) -> tuple[int, int]:
    """Two distinct safe primes for a ring modulus.

    Some bit lengths admit only one safe prime (4 bits: just 11; 5 bits:
    just 23), so the retry loop is bounded rather than spinning forever.
    """
    p = gen_safe_prime(bit_length, rng)
    for _ in range(attempts):
        q = gen_safe_prime(bit_length, rng)
        if q != p:
            return p, q
    raise ModulusTooSmall(
        f"could not find two distinct safe primes of {bit_length} bits; "
        "the ring variant needs a bit length with at least two of them"
    )


# ---------------------------------------------------------------------------
# domain context
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DomainContext:
    """Public arithmetic parameters every party agrees on.

    modulus: m (p*q for RING, a prime for FIELD)
    byte_width: bytes needed to encode a residue, ceil(bitlen(m)/8)
    """

    modulus: int
    variant: Variant
    byte_width: int

    def reduce(self, v: int) -> int:
        return v % self.modulus

    def contains(self, v: int) -> bool:
        return 0 <= v < self.modulus

    def add(self, a: int, b: int) -> int:
        return (a + b) % self.modulus

    def sub(self, a: int, b: int) -> int:
        return (a - b) % self.modulus

    def mul(self, a: int, b: int) -> int:
        return (a * b) % self.modulus


def domain_new(p: int, q: int | None = None, *, variant: Variant) -> DomainContext:
    """Validate parameters and build the context.

    RING needs two distinct safe primes; FIELD needs one prime (q must be
    omitted). Validation is deterministic up to the Miller-Rabin exact bound
    (far beyond 2^64) and probabilistic-but-seedless above it.
    """
    if variant is Variant.RING:
        if q is None:
            raise ValueError("ring variant needs two primes p and q")
        if p < 5 or q < 5:
            raise ModulusTooSmall("factors must be at least 5")
        if p == q:
            raise EqualFactors("ring factors must be distinct")
        for f in (p, q):
            if not is_prime(f):
                raise CompositeWhenPrimeRequired(f"{f} is not prime")
            if not is_prime((f - 1) // 2):
                raise CompositeWhenPrimeRequired(f"{f} is not a safe prime: ({f}-1)/2 is composite")
        modulus = p * q
    elif variant is Variant.FIELD:
        if q is not None:
            raise ValueError("field variant takes a single prime")
        if p < 5:
            raise ModulusTooSmall("prime must be at least 5")
        if not is_prime(p):
            raise CompositeWhenPrimeRequired(f"{p} is not prime")
        modulus = p
    else:  # pragma: no cover - enum is closed
        raise ValueError(f"unknown variant {variant!r}")
    byte_width = (modulus.bit_length() + 7) // 8
    return DomainContext(modulus=modulus, variant=variant, byte_width=byte_width)


# ---------------------------------------------------------------------------
# vector operations
# ---------------------------------------------------------------------------

def power_vector(x: int, w: int, ctx: DomainContext) -> tuple[int, ...]:
    """(1, x, x^2, ..., x^w) with every coordinate reduced mod m. Requires w >= 2."""
    if w < 2:
        raise WidthTooSmall(f"power vector width must be >= 2, got {w}")
    x = ctx.reduce(x)
    coords = [1]
    for _ in range(w):
        coords.append(ctx.mul(coords[-1], x))
    return tuple(coords)


def inner_product(a: Sequence[int], b: Sequence[int], ctx: DomainContext) -> int:
    """Sum of pairwise products mod m, reducing term by term."""
    if len(a) != len(b) or len(a) == 0:
        raise LengthMismatch(f"operand lengths {len(a)} and {len(b)}")
    acc = 0
    for x, y in zip(a, b):
        acc = ctx.add(acc, ctx.mul(x, y))
    return acc


def sample_element(rng: SeededRng, ctx: DomainContext) -> int:
    """Uniform residue in [0, m) by rejection sampling byte_width-sized draws."""
    while True:
        v = int.from_bytes(rng.take_bytes(ctx.byte_width), "big")
        if v < ctx.modulus:
            return v
