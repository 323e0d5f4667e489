"""Edwards25519 group arithmetic.

Points travel as 32-byte RFC 8032 encodings. Scalar multiplication and
addition go through libsodium (via PyNaCl) when it accepts the operands;
anything libsodium refuses (small-order inputs, identity results) is
recomputed with the pure-Python extended-coordinate code below, which is
also the reference the tests compare the fast path against.
"""

from __future__ import annotations

from nacl import bindings as _sodium
from nacl.exceptions import RuntimeError as _SodiumError

P = 2**255 - 19
L = 2**252 + 27742317777372353535851937790883648493
D = (-121665 * pow(121666, P - 2, P)) % P
SQRT_M1 = pow(2, (P - 1) // 4, P)

_BASE_Y = 4 * pow(5, P - 2, P) % P

IDENTITY_BYTES = (1).to_bytes(32, "little")

Point = tuple  # (X, Y, Z, T) extended coordinates


class DecodeError(ValueError):
    pass


def _recover_x(y: int, sign: int) -> int:
    if y >= P:
        raise DecodeError("non-canonical y coordinate")
    x2 = (y * y - 1) * pow(D * y * y + 1, P - 2, P) % P
    if x2 == 0:
        if sign:
            raise DecodeError("x = 0 with sign bit set")
        return 0
    x = pow(x2, (P + 3) // 8, P)
    if (x * x - x2) % P != 0:
        x = x * SQRT_M1 % P
    if (x * x - x2) % P != 0:
        raise DecodeError("not on curve")
    if x & 1 != sign:
        x = P - x
    return x


def decode(s: bytes) -> Point:
    if len(s) != 32:
        raise DecodeError("point encoding must be 32 bytes")
    n = int.from_bytes(s, "little")
    y = n & ((1 << 255) - 1)
    x = _recover_x(y, n >> 255)
    return (x, y, 1, x * y % P)


def encode(pt: Point) -> bytes:
    x, y, z, _ = pt
    zi = pow(z, P - 2, P)
    x, y = x * zi % P, y * zi % P
    return (y | ((x & 1) << 255)).to_bytes(32, "little")


def _add(p1: Point, p2: Point) -> Point:
    x1, y1, z1, t1 = p1
    x2, y2, z2, t2 = p2
    a = (y1 - x1) * (y2 - x2) % P
    b = (y1 + x1) * (y2 + x2) % P
    c = 2 * t1 * t2 * D % P
    d = 2 * z1 * z2 % P
    e, f, g, h = b - a, d - c, d + c, b + a
    return (e * f % P, g * h % P, f * g % P, e * h % P)


def _neg(pt: Point) -> Point:
    x, y, z, t = pt
    return (-x % P, y, z, -t % P)


def _mul(k: int, pt: Point) -> Point:
    q = (0, 1, 1, 0)
    while k > 0:
        if k & 1:
            q = _add(q, pt)
        pt = _add(pt, pt)
        k >>= 1
    return q


BASE = (_recover_x(_BASE_Y, 0), _BASE_Y, 1, _recover_x(_BASE_Y, 0) * _BASE_Y % P)
BASE_BYTES = encode(BASE)


def py_scalarmult(k: int, s: bytes) -> bytes:
    return encode(_mul(k, decode(s)))


def py_add(a: bytes, b: bytes) -> bytes:
    return encode(_add(decode(a), decode(b)))


def py_sub(a: bytes, b: bytes) -> bytes:
    return encode(_add(decode(a), _neg(decode(b))))


def is_identity(s: bytes) -> bool:
    return s == IDENTITY_BYTES


def scalarmult(k: int, s: bytes) -> bytes:
    """Return the encoding of ``k * point(s)``; ``s`` must decode."""
    if 0 < k < 2**255:
        try:
            return _sodium.crypto_scalarmult_ed25519_noclamp(k.to_bytes(32, "little"), s)
        except (_SodiumError, ValueError, TypeError):
            pass
    return py_scalarmult(k, s)


def scalarmult_base(k: int) -> bytes:
    k %= L
    if k:
        try:
            return _sodium.crypto_scalarmult_ed25519_base_noclamp(k.to_bytes(32, "little"))
        except (_SodiumError, ValueError, TypeError):
            pass
    return encode(_mul(k, BASE))


def add(a: bytes, b: bytes) -> bytes:
    try:
        return _sodium.crypto_core_ed25519_add(a, b)
    except (_SodiumError, ValueError, TypeError):
        return py_add(a, b)


def sub(a: bytes, b: bytes) -> bytes:
    try:
        return _sodium.crypto_core_ed25519_sub(a, b)
    except (_SodiumError, ValueError, TypeError):
        return py_sub(a, b)


def _check_canonical(s: bytes) -> None:
    if len(s) != 32:
        raise DecodeError("point encoding must be 32 bytes")
    n = int.from_bytes(s, "little")
    y = n & ((1 << 255) - 1)
    if y >= P:
        raise DecodeError("non-canonical y coordinate")
    if n >> 255 and y in (1, P - 1):
        raise DecodeError("x = 0 with sign bit set")


def check_point(s: bytes) -> bytes:
    """Return ``s`` if it canonically encodes a curve point, else raise DecodeError.

    Accepts exactly what :func:`decode` accepts. Canonicality is checked here
    because libsodium tolerates y >= p and a set sign bit on x = 0.
    """
    _check_canonical(s)
    try:
        _sodium.crypto_core_ed25519_add(s, IDENTITY_BYTES)
    except (_SodiumError, ValueError, TypeError):
        raise DecodeError("not on curve") from None
    return s


def py_mul_cofactor(s: bytes) -> bytes:
    pt = decode(s)
    for _ in range(3):
        pt = _add(pt, pt)
    return encode(pt)


def mul_cofactor(s: bytes) -> bytes:
    """8 * point(s) by three doublings (libsodium rejects small-order scalar bases)."""
    _check_canonical(s)
    try:
        for _ in range(3):
            s = _sodium.crypto_core_ed25519_add(s, s)
    except (_SodiumError, ValueError, TypeError):
        # canonical input that libsodium cannot add is off the curve
        raise DecodeError("not on curve") from None
    return s


def _small_order_points() -> frozenset[bytes]:
    # L * (any point with a full torsion component) generates the 8-torsion.
    y = 2
    while True:
        try:
            t = _mul(L, decode(y.to_bytes(32, "little")))
        except DecodeError:
            y += 1
            continue
        if encode(_mul(4, t)) != IDENTITY_BYTES:
            break
        y += 1
    return frozenset(encode(_mul(k, t)) for k in range(8))


SMALL_ORDER = _small_order_points()


def has_small_order(s: bytes) -> bool:
    """True if point(s) has order dividing 8. Raises DecodeError if ``s`` is invalid."""
    return check_point(s) in SMALL_ORDER
