#!/usr/bin/env python3
"""Generate the shared hash test-vector fixture.

Standalone on purpose: uses hashlib directly so the fixture is an independent
oracle for both the server package and the browser widget. Run once; the
output is committed at fixtures/pow_vectors.json.

Preimage convention: lowercase-hex salt (32 chars) immediately followed by
the decimal ASCII nonce, UTF-8 bytes, no separator.
"""

import hashlib
import json
import random
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "fixtures" / "pow_vectors.json"


def preimage(salt: bytes, nonce: int) -> bytes:
    return (salt.hex() + str(nonce)).encode("ascii")


def leading_zero_bits(digest: bytes) -> int:
    n = 0
    for b in digest:
        if b == 0:
            n += 8
        else:
            n += 8 - b.bit_length()
            break
    return n


def vector(salt: bytes, nonce: int) -> dict:
    d = hashlib.sha256(preimage(salt, nonce)).digest()
    return {
        "salt_hex": salt.hex(),
        "nonce": nonce,
        "digest_hex": d.hex(),
        "leading_zero_bits": leading_zero_bits(d),
    }


def smallest_solution(salt: bytes, bits: int) -> int:
    nonce = 0
    while True:
        d = hashlib.sha256(preimage(salt, nonce)).digest()
        if leading_zero_bits(d) >= bits:
            return nonce
        nonce += 1


def main() -> None:
    rng = random.Random(0x5EED)
    vectors = [
        vector(bytes(16), 0),
        vector(b"\xff" * 16, 1),
        vector(bytes.fromhex("0123456789abcdef0123456789abcdef"), 65536),
    ]
    for _ in range(17):
        salt = rng.getrandbits(128).to_bytes(16, "big")
        vectors.append(vector(salt, rng.randrange(0, 10**9)))

    # Salts with known minimal solutions, for solver tests on both sides.
    solutions = []
    for i in range(3):
        salt = rng.getrandbits(128).to_bytes(16, "big")
        nonce = smallest_solution(salt, 8)
        solutions.append(
            {"salt_hex": salt.hex(), "difficulty_bits": 8, "nonce": nonce}
        )

    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(
        json.dumps({"version": 1, "vectors": vectors, "solutions": solutions}, indent=2)
        + "\n"
    )
    print(f"wrote {OUT} ({len(vectors)} vectors, {len(solutions)} solutions)")


if __name__ == "__main__":
    main()
