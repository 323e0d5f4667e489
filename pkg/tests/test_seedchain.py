from __future__ import annotations

import hashlib

import pytest

from verasel.board import Board, Kind, Phase, make_entry
from verasel.crypto import get_backend, keygen
from verasel.encoding import pack
from verasel.seedchain import (
    GenesisError,
    MissingSeed,
    Provenance,
    SeedChain,
    SeedChainError,
    SeedRecord,
    derive_seed,
    elect_proposer,
    fallback_seed,
    genesis_commit,
    genesis_reveal,
    genesis_seed,
    proposal_input,
    propose_seed,
    record_is_consistent,
)

from conftest import keyed_roster

KEYS = [keygen(b"g%d" % i) for i in range(3)]
NONCES = [hashlib.sha256(b"nonce%d" % i).digest() for i in range(3)]


def _genesis(reveal=(0, 1, 2)):
    board = Board.with_genesis()
    for kp, n in zip(KEYS, NONCES):
        genesis_commit(kp, n, board)
    board.advance_phase()
    for i in reveal:
        genesis_reveal(KEYS[i], NONCES[i], board)
    board.advance_phase()
    return board


def _xor(*chunks):
    return (int.from_bytes(chunks[0], "big") ^ (int.from_bytes(_xor(*chunks[1:]), "big") if chunks[1:] else 0)).to_bytes(32, "big")


def test_genesis_is_xor_of_reveals():
    assert genesis_seed(_genesis()).seed == _xor(*NONCES)
    assert genesis_seed(_genesis(reveal=(0, 2))).seed == _xor(NONCES[0], NONCES[2])


def test_genesis_errors():
    board = Board.with_genesis()
    genesis_commit(KEYS[0], NONCES[0], board)
    with pytest.raises(GenesisError):
        genesis_seed(board)
    board.advance_phase()
    with pytest.raises(GenesisError):
        genesis_reveal(KEYS[0], NONCES[1], board)
    with pytest.raises(GenesisError):
        genesis_reveal(KEYS[1], NONCES[1], board)
    board.advance_phase()
    with pytest.raises(GenesisError):
        genesis_seed(board)
    with pytest.raises(GenesisError):
        genesis_commit(KEYS[0], b"short", Board.with_genesis())


def test_fallback_formula():
    prev = b"\x11" * 32
    expected = hashlib.sha256(prev + (5).to_bytes(8, "big")).digest()
    assert fallback_seed(prev, 5) == expected
    assert proposal_input(prev, 5) == prev + (5).to_bytes(8, "big")


def test_chain_bookkeeping():
    chain = SeedChain([SeedRecord(0, b"\x00" * 32, Provenance.GENESIS)])
    with pytest.raises(SeedChainError):
        chain.append(SeedRecord(2, b"\x00" * 32, Provenance.FALLBACK))
    with pytest.raises(SeedChainError):
        chain.append(SeedRecord(1, b"\x00", Provenance.FALLBACK))
    with pytest.raises(MissingSeed):
        chain.seed(1)
    assert chain.has(0) and not chain.has(1) and len(chain) == 1


def _epoch1_setup(backend="ecvrf"):
    seed0 = b"\x42" * 32
    prev, keys = keyed_roster([3, 4, 5], seed0, backend)
    chain = SeedChain([SeedRecord(0, seed0, Provenance.GENESIS)])
    board = Board()
    board.advance_to(1, Phase.SETUP)
    by_id = {kp.public_key: kp for kp in keys}
    return chain, board, prev, by_id, seed0


@pytest.mark.parametrize("backend", ["ecvrf", "mock"])
def test_honest_proposal_accepted(backend):
    chain, board, prev, by_id, seed0 = _epoch1_setup(backend)
    proposer = elect_proposer(prev)
    assert proposer == min(prev.members, key=lambda m: (m.hash_int, m.node_id)).node_id
    propose_seed(by_id[proposer], seed0, 1, board, backend)
    rec = derive_seed(chain, board, 1, prev, backend)
    assert rec.provenance is Provenance.VRF_PROPOSED and rec.proposer == proposer
    assert len(rec.seed) == 32
    if backend == "ecvrf":
        assert rec.seed == hashlib.sha256(rec.output.commitment_y).digest()
    assert record_is_consistent(rec, seed0, backend)
    assert not record_is_consistent(rec, b"\x00" * 32, backend)


def test_non_proposer_and_late_proposals_ignored():
    chain, board, prev, by_id, seed0 = _epoch1_setup()
    proposer = elect_proposer(prev)
    other = next(nid for nid in by_id if nid != proposer)
    propose_seed(by_id[other], seed0, 1, board)
    board.post_entry(make_entry(by_id[other], 1, Kind.COMMIT, b"c"))
    propose_seed(by_id[proposer], seed0, 1, board)  # after the first COMMIT
    rec = derive_seed(chain, board, 1, prev)
    assert rec.provenance is Provenance.FALLBACK
    assert rec.seed == fallback_seed(seed0, 1)
    assert record_is_consistent(rec, seed0)


def test_corrupt_proposal_falls_back():
    chain, board, prev, by_id, seed0 = _epoch1_setup()
    proposer = elect_proposer(prev)
    wrong = get_backend("ecvrf").prove(by_id[proposer].secret_key, b"not the input")
    board.post_entry(make_entry(by_id[proposer], 1, Kind.SEED_PROPOSAL, pack(wrong.commitment_y, wrong.proof_pi)))
    assert derive_seed(chain, board, 1, prev).seed == fallback_seed(seed0, 1)


def test_malformed_proposal_payload_falls_back():
    chain, board, prev, by_id, seed0 = _epoch1_setup()
    proposer = elect_proposer(prev)
    board.post_entry(make_entry(by_id[proposer], 1, Kind.SEED_PROPOSAL, b"\x00\x01"))
    assert derive_seed(chain, board, 1, prev).provenance is Provenance.FALLBACK


def test_no_previous_roster_uses_fallback():
    chain, board, _, _, seed0 = _epoch1_setup()
    assert elect_proposer(None) is None
    assert derive_seed(chain, board, 1, None).seed == fallback_seed(seed0, 1)
    with pytest.raises(SeedChainError):
        derive_seed(chain, board, 0, None)
