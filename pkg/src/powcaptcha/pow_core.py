"""Hash-based proof-of-work puzzles with difficulty in leading zero bits.

A challenge is a random 16-byte salt plus a difficulty d; a solution is a
nonce whose SHA-256 digest over the canonical preimage starts with at least
d zero bits. The canonical preimage is the lowercase-hex salt string
followed immediately by the decimal ASCII nonce, UTF-8 encoded, with no
separator. Expected solve cost is 2**d hash evaluations.

Everything here is a pure function apart from challenge minting, which draws
randomness; all operations are safe to call concurrently.
"""
from __future__ import annotations

import hashlib
import secrets
import threading
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

SALT_BYTES = 16
MAX_DIFFICULTY_BITS = 256
# Nonces stay below 2**53 so browser clients can use native numbers.
MAX_NONCE = 2**53


class HashMeter:
    """Thread-safe counter of hash-primitive invocations.

    Verification-cost and solve-cost tests read deltas off this counter; the
    module-level `hash_meter` instance is ticked by every `pow_digest` call.
    """

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._count = 0

    def tick(self) -> None:
        with self._lock:
            self._count += 1

    @property
    def count(self) -> int:
        return self._count

    def reset(self) -> None:
        with self._lock:
            self._count = 0


hash_meter = HashMeter()


@dataclass(frozen=True)
class PowChallenge:
    challenge_id: str
    salt: bytes
    difficulty_bits: int
    issued_at: int  # ms since epoch
    ttl_ms: int

    def __post_init__(self) -> None:
        if len(self.salt) != SALT_BYTES:
            raise ValueError(f"salt must be {SALT_BYTES} bytes, got {len(self.salt)}")
        if not 0 <= self.difficulty_bits <= MAX_DIFFICULTY_BITS:
            raise ValueError(f"difficulty_bits out of range: {self.difficulty_bits}")
        if self.ttl_ms <= 0:
            raise ValueError(f"ttl_ms must be positive: {self.ttl_ms}")

    @property
    def expires_at(self) -> int:
        return self.issued_at + self.ttl_ms


class RejectReason(Enum):
    EXPIRED = "expired"
    INSUFFICIENT_ZERO_BITS = "insufficient_zero_bits"
    MALFORMED_NONCE = "malformed_nonce"


@dataclass(frozen=True)
class PowVerdict:
    accepted: bool
    reason: Optional[RejectReason] = None

    @classmethod
    def accept(cls) -> "PowVerdict":
        return cls(True)

    @classmethod
    def reject(cls, reason: RejectReason) -> "PowVerdict":
        return cls(False, reason)


def new_challenge(
    difficulty_bits: int,
    ttl_ms: int,
    now: int,
    rng=None,
) -> PowChallenge:
    """Mint a fresh challenge. `rng` (a random.Random) is for tests only;
    production minting uses the secrets module."""
    if not 0 <= difficulty_bits <= MAX_DIFFICULTY_BITS:
        raise ValueError(f"difficulty_bits out of range: {difficulty_bits}")
    if ttl_ms <= 0:
        raise ValueError(f"ttl_ms must be positive: {ttl_ms}")
    if rng is None:
        challenge_id = secrets.token_hex(16)
        salt = secrets.token_bytes(SALT_BYTES)
    else:
        challenge_id = f"{rng.getrandbits(128):032x}"
        salt = rng.getrandbits(8 * SALT_BYTES).to_bytes(SALT_BYTES, "big")
    return PowChallenge(challenge_id, salt, difficulty_bits, now, ttl_ms)


def pow_preimage(salt: bytes, nonce: int) -> bytes:
    """Canonical hash input: hex(salt) ++ decimal(nonce), no separator."""
    if nonce < 0:
        raise ValueError(f"nonce must be non-negative: {nonce}")
    return (salt.hex() + str(nonce)).encode("ascii")


def pow_digest(salt: bytes, nonce: int) -> bytes:
    hash_meter.tick()
    return hashlib.sha256(pow_preimage(salt, nonce)).digest()


def leading_zero_bits(digest: bytes) -> int:
    """Consecutive zero bits from the most significant bit of byte 0."""
    if len(digest) != 32:
        raise ValueError(f"digest must be 32 bytes, got {len(digest)}")
    n = 0
    for b in digest:
        if b == 0:
            n += 8
        else:
            n += 8 - b.bit_length()
            break
    return n


def _parse_nonce(nonce: Union[int, str]) -> Optional[int]:
    """Canonical nonce or None. Strings must be plain decimal with no
    leading zeros (anything else would hash a different preimage than the
    integer it denotes)."""
    if isinstance(nonce, bool):
        return None
    if isinstance(nonce, int):
        value = nonce
    elif isinstance(nonce, str):
        if not nonce.isdigit() or (len(nonce) > 1 and nonce[0] == "0"):
            return None
        value = int(nonce)
    else:
        return None
    if not 0 <= value < MAX_NONCE:
        return None
    return value


def check_solution(
    challenge: PowChallenge, nonce: Union[int, str], now: int
) -> PowVerdict:
    """Verify a submitted nonce. Costs at most one hash; expiry and nonce
    parsing are checked first so hostile floods of stale or garbage input
    cost zero hashes."""
    if now >= challenge.expires_at:
        return PowVerdict.reject(RejectReason.EXPIRED)
    value = _parse_nonce(nonce)
    if value is None:
        return PowVerdict.reject(RejectReason.MALFORMED_NONCE)
    if leading_zero_bits(pow_digest(challenge.salt, value)) >= challenge.difficulty_bits:
        return PowVerdict.accept()
    return PowVerdict.reject(RejectReason.INSUFFICIENT_ZERO_BITS)


def solve(
    challenge: PowChallenge, start_nonce: int = 0, max_iterations: int = 2**24
) -> Optional[int]:
    """Scan nonces upward from start_nonce; return the smallest accepting
    nonce within the budget, or None when the budget is exhausted."""
    if max_iterations < 1:
        raise ValueError(f"max_iterations must be >= 1: {max_iterations}")
    if start_nonce < 0:
        raise ValueError(f"start_nonce must be non-negative: {start_nonce}")
    bits = challenge.difficulty_bits
    salt = challenge.salt
    for nonce in range(start_nonce, start_nonce + max_iterations):
        if leading_zero_bits(pow_digest(salt, nonce)) >= bits:
            return nonce
    return None


def expected_trials(difficulty_bits: int) -> int:
    """Mean of the geometric trial count: 2**difficulty_bits."""
    if not 0 <= difficulty_bits <= MAX_DIFFICULTY_BITS:
        raise ValueError(f"difficulty_bits out of range: {difficulty_bits}")
    return 2**difficulty_bits
