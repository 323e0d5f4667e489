from __future__ import annotations

import pytest

from verasel.board import Board, Kind, Phase, make_entry
from verasel.crypto import VrfOutput, get_backend, keygen
from verasel.encoding import pack
from verasel.protocol import (
    CommitmentRecord,
    NodeAgent,
    NodePost,
    ProtocolError,
    client_collect,
    client_select,
    node_post,
    node_setup,
    replay,
    run_epoch,
    run_genesis,
)
from verasel.roster import Rejection
from verasel.seedchain import Provenance, SeedChain

SEED = b"\x07" * 32
HONEST = keygen(b"honest")
FAULTY = keygen(b"faulty")


def _flip(b: bytes, i: int = 0) -> bytes:
    a = bytearray(b)
    a[i] ^= 1
    return bytes(a)


def _board_with(fault: str | None, backend="mock") -> Board:
    """Two nodes register in epoch 0 and commit in epoch 1; FAULTY misbehaves once."""
    be = get_backend(backend)
    board = Board()
    node_post(HONEST, 10, board, 0)
    if fault == "no_post":
        pass
    elif fault == "bad_post_sig":
        p = NodePost.create(FAULTY, 5)
        board.post_entry(make_entry(FAULTY, 0, Kind.POST, NodePost(p.public_key, 5, _flip(p.signature)).to_payload()))
    elif fault == "post_weight_edit":
        p = NodePost.create(FAULTY, 5)
        board.post_entry(make_entry(FAULTY, 0, Kind.POST, NodePost(p.public_key, 6, p.signature).to_payload()))
    elif fault == "post_other_pk":
        board.post_entry(make_entry(FAULTY, 0, Kind.POST, NodePost.create(HONEST, 5).to_payload()))
    elif fault == "post_garbage":
        board.post_entry(make_entry(FAULTY, 0, Kind.POST, b"\x01\x02"))
    else:
        node_post(FAULTY, 5, board, 0)
    board.advance_to(1, Phase.SETUP)
    node_setup(HONEST, board, 1, SEED, be)
    out = be.prove(FAULTY.secret_key, SEED)
    if fault == "no_commit":
        return board
    if fault == "bad_commit_sig":
        rec = CommitmentRecord.create(FAULTY, out)
        rec = CommitmentRecord(rec.commitment_y, rec.proof_pi, _flip(rec.signature))
    elif fault == "bad_proof":
        rec = CommitmentRecord.create(FAULTY, VrfOutput(out.commitment_y, _flip(out.proof_pi, 9)))
    elif fault == "wrong_seed":
        rec = CommitmentRecord.create(FAULTY, be.prove(FAULTY.secret_key, b"\x08" * 32))
    elif fault == "commit_garbage":
        board.post_entry(make_entry(FAULTY, 1, Kind.COMMIT, pack(b"only one field")))
        return board
    else:
        rec = CommitmentRecord.create(FAULTY, out)
    board.post_entry(make_entry(FAULTY, 1, Kind.COMMIT, rec.to_payload()))
    return board


FAULTS = {
    "no_post": Rejection.MISSING_POST,
    "bad_post_sig": Rejection.BAD_POST_SIGNATURE,
    "post_weight_edit": Rejection.BAD_POST_SIGNATURE,
    "post_other_pk": Rejection.MALFORMED,
    "post_garbage": Rejection.MALFORMED,
    "no_commit": Rejection.MISSING_COMMITMENT,
    "bad_commit_sig": Rejection.BAD_COMMIT_SIGNATURE,
    "bad_proof": Rejection.INVALID_VRF,
    "wrong_seed": Rejection.INVALID_VRF,
    "commit_garbage": Rejection.MALFORMED,
}


@pytest.mark.parametrize("backend", ["mock", "ecvrf"])
def test_all_honest_admitted(backend):
    roster = client_collect(_board_with(None, backend), 1, SEED, backend)
    assert set(roster.node_ids) == {HONEST.public_key, FAULTY.public_key}
    assert roster.rejected == ()
    assert roster.member(FAULTY.public_key).weight == 5


@pytest.mark.parametrize("fault", sorted(FAULTS))
@pytest.mark.parametrize("backend", ["mock", "ecvrf"])
def test_single_fault_rejected_with_reason(fault, backend):
    roster = client_collect(_board_with(fault, backend), 1, SEED, backend)
    assert roster.node_ids == [HONEST.public_key]
    assert roster.rejection_of(FAULTY.public_key) is FAULTS[fault]


def test_registration_takes_effect_next_epoch_and_latest_post_wins():
    board = Board()
    node_post(HONEST, 3, board, 0)
    board.advance_to(0, Phase.SETUP)
    node_setup(HONEST, board, 0, SEED, "mock")
    assert client_collect(board, 0, SEED, "mock").rejection_of(HONEST.public_key) is Rejection.MISSING_POST
    board.advance_to(1, Phase.POST)
    node_post(HONEST, 9, board, 1)
    board.advance_phase()
    node_setup(HONEST, board, 1, SEED, "mock")
    assert client_collect(board, 1, SEED, "mock").member(HONEST.public_key).weight == 3
    board.advance_to(2, Phase.SETUP)
    node_setup(HONEST, board, 2, SEED, "mock")
    assert client_collect(board, 2, SEED, "mock").member(HONEST.public_key).weight == 9


def test_node_post_rejects_zero_weight():
    with pytest.raises(ProtocolError):
        NodePost.create(HONEST, 0)


def test_client_select_degenerate_epoch():
    roster, active = client_select(Board(), 1, SEED, "1/2", 2, "mock")
    assert active.degenerate and active.selected == () and len(roster) == 0


def _run(n=6, epochs=3, backend="mock"):
    agents = [NodeAgent(keygen(b"a%d" % i), i + 1, backend) for i in range(n)]
    board = Board.with_genesis()
    chain = SeedChain([run_genesis(agents, board, [bytes([i]) * 32 for i in range(n)])])
    results = [run_epoch(agents, board, chain, e, "1/2", 2, 3, backend) for e in range(epochs + 1)]
    return board, chain, results


@pytest.mark.parametrize("backend", ["mock", "ecvrf"])
def test_run_epochs_and_replay(backend):
    board, chain, results = _run(backend=backend)
    assert results[0].degenerate  # registration only
    for r in results[1:]:
        assert r.agreed and not r.degenerate
        assert len(r.roster) == 6
        assert r.timings["setup_max_s"] >= 0
    assert chain[1].provenance is Provenance.FALLBACK
    assert all(chain[e].provenance is Provenance.VRF_PROPOSED for e in (2, 3))
    replayed = replay(Board.loads(board.dumps()), "1/2", 2, backend)
    assert [r.epoch for r in replayed] == [0, 1, 2, 3]
    for rep, res in zip(replayed, results):
        assert rep.seed.seed == res.seed.seed
        assert rep.active.to_bytes() == res.active.to_bytes()


def test_run_epoch_requires_post_phase():
    board, chain, _ = _run(epochs=0)
    board.advance_phase()
    with pytest.raises(ProtocolError):
        run_epoch([], board, chain, 1, "1/2")


def test_runs_are_reproducible():
    a = _run()[0].dumps()
    b = _run()[0].dumps()
    assert a == b
