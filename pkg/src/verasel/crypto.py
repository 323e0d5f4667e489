"""VRF, signature and hash-to-integer primitives.

Two VRF backends share one interface:

* ``ecvrf`` -- ECVRF-EDWARDS25519-SHA512-TAI, the production backend.
* ``mock`` -- keyed BLAKE2b commitment with a digest "proof" binding
  (pk, input, y). Cheap enough for Monte Carlo runs; it detects tampering
  but is forgeable by anyone, so it is only ever selected explicitly.

Keys are Ed25519 seeds under both backends, so a node's public key is its
identity and signs its board messages regardless of the VRF in use.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass
from pathlib import Path

from nacl.exceptions import BadSignatureError, CryptoError
from nacl.signing import SigningKey, VerifyKey

from . import ecvrf

HASH_BITS = 256
KEY_FILE_TAG = "verasel-key/1"


class MalformedKeyError(ValueError):
    """A secret key that the active backend cannot use."""


@dataclass(frozen=True)
class KeyPair:
    secret_key: bytes
    public_key: bytes

    @property
    def node_id(self) -> bytes:
        return self.public_key

    def __repr__(self) -> str:
        return f"KeyPair(node_id={self.public_key.hex()[:16]}...)"


@dataclass(frozen=True)
class VrfOutput:
    commitment_y: bytes
    proof_pi: bytes


def keygen(rng_seed: bytes | None = None) -> KeyPair:
    """Create a keypair; deterministic when ``rng_seed`` is given."""
    if rng_seed is None:
        sk = os.urandom(32)
    else:
        sk = hashlib.sha256(b"verasel-keygen" + rng_seed).digest()
    return KeyPair(sk, _public_from_secret(sk))


def _public_from_secret(sk: bytes) -> bytes:
    if not isinstance(sk, (bytes, bytearray)) or len(sk) != 32:
        raise MalformedKeyError("secret key must be 32 bytes")
    return bytes(SigningKey(bytes(sk)).verify_key)


def sign(sk: bytes, msg: bytes) -> bytes:
    if not isinstance(sk, (bytes, bytearray)) or len(sk) != 32:
        raise MalformedKeyError("secret key must be 32 bytes")
    return SigningKey(bytes(sk)).sign(msg).signature


def verify_sig(pk: bytes, msg: bytes, sig: bytes) -> bool:
    try:
        VerifyKey(bytes(pk)).verify(bytes(msg), bytes(sig))
    except (BadSignatureError, CryptoError, ValueError, TypeError):
        return False
    return True


def hash_bytes(data: bytes) -> bytes:
    """The protocol hash H: SHA-256."""
    return hashlib.sha256(data).digest()


def hash_to_int(y: bytes) -> int:
    """H(y) read as a big-endian integer in [0, 2**256)."""
    return int.from_bytes(hashlib.sha256(y).digest(), "big")


class EcvrfBackend:
    name = "ecvrf"

    def prove(self, sk: bytes, data: bytes) -> VrfOutput:
        if not isinstance(sk, (bytes, bytearray)) or len(sk) != 32:
            raise MalformedKeyError("ECVRF secret key must be 32 bytes")
        beta, pi = ecvrf.prove(bytes(sk), data)
        return VrfOutput(beta, pi)

    def verify(self, pk: bytes, data: bytes, output: VrfOutput) -> bool:
        try:
            beta = ecvrf.verify(bytes(pk), bytes(data), bytes(output.proof_pi))
        except (ValueError, TypeError):
            return False
        return beta is not None and beta == output.commitment_y


class MockBackend:
    name = "mock"

    def prove(self, sk: bytes, data: bytes) -> VrfOutput:
        if not isinstance(sk, (bytes, bytearray)) or len(sk) != 32:
            raise MalformedKeyError("mock secret key must be 32 bytes")
        y = hashlib.blake2b(data, key=bytes(sk), digest_size=32).digest()
        return VrfOutput(y, self._tuple_digest(_public_from_secret(sk), data, y))

    def prove_with_pk(self, sk: bytes, pk: bytes, data: bytes) -> VrfOutput:
        """``prove`` for callers that already hold pk (skips key derivation)."""
        y = hashlib.blake2b(data, key=sk, digest_size=32).digest()
        return VrfOutput(y, self._tuple_digest(pk, data, y))

    def verify(self, pk: bytes, data: bytes, output: VrfOutput) -> bool:
        try:
            expected = self._tuple_digest(bytes(pk), bytes(data), bytes(output.commitment_y))
        except TypeError:
            return False
        return len(output.commitment_y) == 32 and output.proof_pi == expected

    @staticmethod
    def _tuple_digest(pk: bytes, data: bytes, y: bytes) -> bytes:
        h = hashlib.sha256(b"verasel-mock-vrf")
        for part in (pk, data, y):
            h.update(len(part).to_bytes(8, "big"))
            h.update(part)
        return h.digest()


BACKENDS = {"ecvrf": EcvrfBackend(), "mock": MockBackend()}
DEFAULT_BACKEND = BACKENDS["ecvrf"]

Backend = EcvrfBackend | MockBackend


def get_backend(name: str | Backend | None = None) -> Backend:
    if name is None:
        return DEFAULT_BACKEND
    if not isinstance(name, str):
        return name
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown VRF backend {name!r}; expected one of {sorted(BACKENDS)}") from None


def vrf_prove(sk: bytes, data: bytes, backend: str | Backend | None = None) -> VrfOutput:
    return get_backend(backend).prove(sk, data)


def vrf_verify(pk: bytes, data: bytes, output: VrfOutput, backend: str | Backend | None = None) -> bool:
    return get_backend(backend).verify(pk, data, output)


def save_key(keypair: KeyPair, path: str | Path, backend: str = "ecvrf", force: bool = False) -> None:
    path = Path(path)
    if path.exists() and not force:
        raise FileExistsError(f"{path} exists (use force to overwrite)")
    get_backend(backend)
    path.write_text(
        f"{KEY_FILE_TAG} backend={backend}\n"
        f"secret={keypair.secret_key.hex()}\n"
        f"public={keypair.public_key.hex()}\n"
    )


def load_key(path: str | Path) -> tuple[KeyPair, str]:
    """Read a key file; returns the keypair and the backend it was made for."""
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith(KEY_FILE_TAG + " backend="):
        raise ValueError(f"{path}: not a {KEY_FILE_TAG} key file")
    backend = lines[0].split("backend=", 1)[1].strip()
    get_backend(backend)
    fields = dict(line.split("=", 1) for line in lines[1:] if "=" in line)
    try:
        sk = bytes.fromhex(fields["secret"])
        pk = bytes.fromhex(fields["public"])
    except (KeyError, ValueError) as exc:
        raise ValueError(f"{path}: bad key fields") from exc
    if _public_from_secret(sk) != pk:
        raise ValueError(f"{path}: public key does not match secret key")
    return KeyPair(sk, pk), backend
