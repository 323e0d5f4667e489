"""Per-epoch public seeds.

seed_0 comes from a commit-and-reveal round among the initial parties.
For e >= 1, the member with the smallest commitment in epoch e-1 proposes
``VRF(sk_g, seed_{e-1} || e)``; if no valid proposal appears, everyone
falls back to ``H(seed_{e-1} || e)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .board import Board, Kind, Phase, make_entry
from .crypto import Backend, KeyPair, VrfOutput, get_backend, hash_bytes, vrf_prove
from .encoding import EncodingError, encode_int, pack, unpack
from .roster import ValidatedRoster

SEED_LEN = 32


class SeedChainError(Exception):
    pass


class GenesisError(SeedChainError):
    pass


class MissingSeed(SeedChainError):
    pass


class Provenance(str, enum.Enum):
    GENESIS = "GENESIS"
    VRF_PROPOSED = "VRF_PROPOSED"
    FALLBACK = "FALLBACK"


@dataclass(frozen=True)
class SeedRecord:
    epoch: int
    seed: bytes
    provenance: Provenance
    proposer: bytes | None = None
    output: VrfOutput | None = None


class SeedChain:
    def __init__(self, records: list[SeedRecord] | None = None):
        self._records: list[SeedRecord] = []
        for r in records or ():
            self.append(r)

    def append(self, record: SeedRecord) -> None:
        if record.epoch != len(self._records):
            raise SeedChainError(f"expected a record for epoch {len(self._records)}, got {record.epoch}")
        if len(record.seed) != SEED_LEN:
            raise SeedChainError("seeds are 32 bytes")
        self._records.append(record)

    def __len__(self) -> int:
        return len(self._records)

    def __getitem__(self, epoch: int) -> SeedRecord:
        return self._records[epoch]

    def __iter__(self):
        return iter(self._records)

    def has(self, epoch: int) -> bool:
        return 0 <= epoch < len(self._records)

    def seed(self, epoch: int) -> bytes:
        if not self.has(epoch):
            raise MissingSeed(f"no seed recorded for epoch {epoch}")
        return self._records[epoch].seed


def proposal_input(seed_prev: bytes, epoch: int) -> bytes:
    return seed_prev + encode_int(epoch)


def fallback_seed(seed_prev: bytes, epoch: int) -> bytes:
    return hash_bytes(proposal_input(seed_prev, epoch))


def _fix_width(y: bytes) -> bytes:
    return y if len(y) == SEED_LEN else hash_bytes(y)


# -- genesis --------------------------------------------------------------


def genesis_commit(keypair: KeyPair, nonce: bytes, board: Board) -> int:
    if len(nonce) != SEED_LEN:
        raise GenesisError("genesis nonces are 32 bytes")
    return board.post_entry(make_entry(keypair, 0, Kind.GENESIS_COMMIT, hash_bytes(nonce)))


def genesis_reveal(keypair: KeyPair, nonce: bytes, board: Board) -> int:
    committed = {e.author: e.payload for e in board.read_epoch(0, Kind.GENESIS_COMMIT)}
    if keypair.public_key not in committed:
        raise GenesisError("reveal without a prior commitment")
    if hash_bytes(nonce) != committed[keypair.public_key]:
        raise GenesisError("revealed nonce does not match the commitment")
    return board.post_entry(make_entry(keypair, 0, Kind.GENESIS_REVEAL, nonce))


def genesis_seed(board: Board) -> SeedRecord:
    """XOR of every reveal that opens its author's commitment."""
    if board.clock.phase in (Phase.GENESIS_COMMIT, Phase.GENESIS_REVEAL):
        raise GenesisError("reveal window is still open")
    committed = {e.author: e.payload for e in board.read_epoch(0, Kind.GENESIS_COMMIT)}
    acc = bytes(SEED_LEN)
    valid = 0
    for e in board.read_epoch(0, Kind.GENESIS_REVEAL):
        if len(e.payload) == SEED_LEN and committed.get(e.author) == hash_bytes(e.payload):
            acc = bytes(a ^ b for a, b in zip(acc, e.payload))
            valid += 1
    if not valid:
        raise GenesisError("no valid genesis reveals")
    return SeedRecord(0, acc, Provenance.GENESIS)


# -- proposals ------------------------------------------------------------


def elect_proposer(prev_roster: ValidatedRoster | None) -> bytes | None:
    """Member with the smallest commitment last epoch, or None (take the fallback)."""
    if prev_roster is None or not prev_roster.members:
        return None
    return prev_roster.members[0].node_id


def propose_seed(
    keypair: KeyPair, seed_prev: bytes, epoch: int, board: Board, backend: str | Backend | None = None
) -> int:
    out = vrf_prove(keypair.secret_key, proposal_input(seed_prev, epoch), backend)
    payload = pack(out.commitment_y, out.proof_pi)
    return board.post_entry(make_entry(keypair, epoch, Kind.SEED_PROPOSAL, payload))


def _proposal_cutoff(board: Board, epoch: int) -> int | None:
    commits = board.read_epoch(epoch, Kind.COMMIT)
    return commits[0].sequence if commits else None


def derive_seed(
    chain: SeedChain,
    board: Board,
    epoch: int,
    prev_roster: ValidatedRoster | None,
    backend: str | Backend | None = None,
) -> SeedRecord:
    """Seed for ``epoch`` >= 1, from the board and the previous epoch's roster.

    Only a proposal by the elected node that precedes the epoch's first
    COMMIT counts; anything else leaves the hash fallback in place.
    """
    if epoch < 1:
        raise SeedChainError("epoch 0 takes its seed from genesis")
    seed_prev = chain.seed(epoch - 1)
    backend = get_backend(backend)
    proposer = elect_proposer(prev_roster)
    if proposer is not None:
        cutoff = _proposal_cutoff(board, epoch)
        data = proposal_input(seed_prev, epoch)
        for entry in board.read_epoch(epoch, Kind.SEED_PROPOSAL):
            if entry.author != proposer or (cutoff is not None and entry.sequence > cutoff):
                continue
            try:
                y, pi = unpack(entry.payload, 2)
            except EncodingError:
                break
            out = VrfOutput(y, pi)
            if backend.verify(proposer, data, out):
                return SeedRecord(epoch, _fix_width(y), Provenance.VRF_PROPOSED, proposer, out)
            break
    return SeedRecord(epoch, fallback_seed(seed_prev, epoch), Provenance.FALLBACK)


def record_is_consistent(record: SeedRecord, seed_prev: bytes, backend: str | Backend | None = None) -> bool:
    """Re-check a non-genesis record against its predecessor seed."""
    if record.provenance is Provenance.FALLBACK:
        return record.seed == fallback_seed(seed_prev, record.epoch)
    if record.provenance is Provenance.VRF_PROPOSED:
        return (
            record.output is not None
            and record.proposer is not None
            and get_backend(backend).verify(record.proposer, proposal_input(seed_prev, record.epoch), record.output)
            and record.seed == _fix_width(record.output.commitment_y)
        )
    return False
