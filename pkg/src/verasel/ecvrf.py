"""ECVRF-EDWARDS25519-SHA512-TAI (RFC 9381, suite 0x03).

Secret keys are 32-byte RFC 8032 seeds, public keys are 32-byte point
encodings; the same keypair therefore also signs with Ed25519.
"""

from __future__ import annotations

import hashlib

from . import _ed25519 as ed

SUITE = b"\x03"
C_LEN = 16
PROOF_LEN = 80
OUTPUT_LEN = 64


def _h(data: bytes) -> bytes:
    return hashlib.sha512(data).digest()


def secret_scalar(sk: bytes) -> tuple[int, bytes]:
    """Expand an RFC 8032 seed into (clamped scalar, hash prefix)."""
    if len(sk) != 32:
        raise ValueError("ECVRF secret key must be 32 bytes")
    digest = bytearray(_h(sk))
    digest[0] &= 248
    digest[31] &= 127
    digest[31] |= 64
    return int.from_bytes(digest[:32], "little"), bytes(digest[32:])


def public_key(sk: bytes) -> bytes:
    x, _ = secret_scalar(sk)
    return ed.scalarmult_base(x)


def encode_to_curve(pk: bytes, alpha: bytes) -> bytes:
    """Try-and-increment hash onto the prime-order subgroup."""
    for ctr in range(256):
        digest = _h(SUITE + b"\x01" + pk + alpha + bytes([ctr]) + b"\x00")
        try:
            h = ed.mul_cofactor(digest[:32])
        except ed.DecodeError:
            continue
        if not ed.is_identity(h):
            return h
    raise ValueError("encode_to_curve exhausted its counter")


def challenge(*points: bytes) -> int:
    digest = _h(SUITE + b"\x02" + b"".join(points) + b"\x00")
    return int.from_bytes(digest[:C_LEN], "little")


def proof_to_hash(gamma: bytes) -> bytes:
    return _hash_cofactored(ed.mul_cofactor(gamma))


def _hash_cofactored(gamma8: bytes) -> bytes:
    return _h(SUITE + b"\x03" + gamma8 + b"\x00")


def prove(sk: bytes, alpha: bytes) -> tuple[bytes, bytes]:
    """Return ``(beta, pi)`` for ``alpha`` under ``sk``."""
    x, prefix = secret_scalar(sk)
    y = ed.scalarmult_base(x)
    h = encode_to_curve(y, alpha)
    gamma = ed.scalarmult(x, h)
    k = int.from_bytes(_h(prefix + h), "little") % ed.L
    c = challenge(y, h, gamma, ed.scalarmult_base(k), ed.scalarmult(k, h))
    s = (k + c * x) % ed.L
    pi = gamma + c.to_bytes(C_LEN, "little") + s.to_bytes(32, "little")
    return proof_to_hash(gamma), pi


def verify(pk: bytes, alpha: bytes, pi: bytes) -> bytes | None:
    """Return beta if ``pi`` is a valid proof for ``alpha`` under ``pk``, else None."""
    if len(pk) != 32 or len(pi) != PROOF_LEN:
        return None
    try:
        if ed.has_small_order(pk):
            return None
        gamma = pi[:32]
        gamma8 = ed.mul_cofactor(gamma)  # also rejects an invalid gamma
    except ed.DecodeError:
        return None
    c = int.from_bytes(pi[32:48], "little")
    s = int.from_bytes(pi[48:], "little")
    if s >= ed.L:
        return None
    h = encode_to_curve(pk, alpha)
    u = ed.sub(ed.scalarmult_base(s), ed.scalarmult(c, pk))
    v = ed.sub(ed.scalarmult(s, h), ed.scalarmult(c, gamma))
    if challenge(pk, h, gamma, u, v) != c:
        return None
    return _hash_cofactored(gamma8)
