"""Canonical byte encoding shared by every signer and verifier."""

from __future__ import annotations


class EncodingError(ValueError):
    pass


def encode_int(n: int) -> bytes:
    """8-byte big-endian unsigned integer (epochs, weights, counters)."""
    if not 0 <= n < 2**64:
        raise EncodingError(f"integer {n} does not fit in 8 bytes")
    return n.to_bytes(8, "big")


def decode_int(b: bytes) -> int:
    if len(b) != 8:
        raise EncodingError("integer field must be 8 bytes")
    return int.from_bytes(b, "big")


def pack(*fields: bytes | int) -> bytes:
    """Length-prefix each field (8-byte big-endian length) and concatenate."""
    out = bytearray()
    for field in fields:
        raw = encode_int(field) if isinstance(field, int) else bytes(field)
        out += encode_int(len(raw))
        out += raw
    return bytes(out)


def unpack(data: bytes, count: int | None = None) -> list[bytes]:
    fields = []
    pos = 0
    while pos < len(data):
        if pos + 8 > len(data):
            raise EncodingError("truncated length prefix")
        n = int.from_bytes(data[pos : pos + 8], "big")
        pos += 8
        if pos + n > len(data):
            raise EncodingError("truncated field")
        fields.append(bytes(data[pos : pos + n]))
        pos += n
    if count is not None and len(fields) != count:
        raise EncodingError(f"expected {count} fields, found {len(fields)}")
    return fields
