"""Epoch state machine: node agents, client-side validation, orchestration.

A node registers with a POST during epoch e; the registration counts from
epoch e + 1 onwards and the latest POST wins. In each later epoch the node
commits ``VRF(sk, seed_e)``. Clients turn the board into a
:class:`ValidatedRoster` and run the selection on it.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

from .board import Board, BoardEntry, Kind, Phase, make_entry
from .crypto import Backend, KeyPair, VrfOutput, get_backend, sign, verify_sig
from .encoding import EncodingError, decode_int, encode_int, pack, unpack
from .roster import Member, Rejection, ValidatedRoster
from .seedchain import (
    SeedChain,
    SeedRecord,
    derive_seed,
    elect_proposer,
    genesis_commit,
    genesis_reveal,
    genesis_seed,
    propose_seed,
)
from .selection import ActiveSet, DegenerateEpoch, assign_layers, empty_active_set, select_active_set

log = logging.getLogger(__name__)


class ProtocolError(ValueError):
    pass


@dataclass(frozen=True)
class NodePost:
    public_key: bytes
    weight: int
    signature: bytes

    @classmethod
    def create(cls, keypair: KeyPair, weight: int) -> "NodePost":
        if weight < 1:
            raise ProtocolError(f"weight must be a positive integer, got {weight}")
        return cls(keypair.public_key, weight, sign(keypair.secret_key, encode_int(weight)))

    def to_payload(self) -> bytes:
        return pack(self.public_key, self.weight, self.signature)

    @classmethod
    def from_payload(cls, payload: bytes) -> "NodePost":
        pk, w, sig = unpack(payload, 3)
        return cls(pk, decode_int(w), sig)

    def signature_ok(self) -> bool:
        return verify_sig(self.public_key, encode_int(self.weight), self.signature)


@dataclass(frozen=True)
class CommitmentRecord:
    commitment_y: bytes
    proof_pi: bytes
    signature: bytes

    @classmethod
    def create(cls, keypair: KeyPair, output: VrfOutput) -> "CommitmentRecord":
        sig = sign(keypair.secret_key, pack(output.commitment_y, output.proof_pi))
        return cls(output.commitment_y, output.proof_pi, sig)

    def to_payload(self) -> bytes:
        return pack(self.commitment_y, self.proof_pi, self.signature)

    @classmethod
    def from_payload(cls, payload: bytes) -> "CommitmentRecord":
        return cls(*unpack(payload, 3))

    def signature_ok(self, pk: bytes) -> bool:
        return verify_sig(pk, pack(self.commitment_y, self.proof_pi), self.signature)

    @property
    def output(self) -> VrfOutput:
        return VrfOutput(self.commitment_y, self.proof_pi)


# -- node side ------------------------------------------------------------


def node_post(keypair: KeyPair, weight: int, board: Board, epoch: int) -> int:
    post = NodePost.create(keypair, weight)
    return board.post_entry(make_entry(keypair, epoch, Kind.POST, post.to_payload()))


def node_setup(
    keypair: KeyPair, board: Board, epoch: int, seed: bytes, backend: str | Backend | None = None
) -> int:
    output = get_backend(backend).prove(keypair.secret_key, seed)
    record = CommitmentRecord.create(keypair, output)
    return board.post_entry(make_entry(keypair, epoch, Kind.COMMIT, record.to_payload()))


class NodeAgent:
    """An honest mixnode. Subclasses override the hooks to misbehave."""

    def __init__(self, keypair: KeyPair, weight: int, backend: str | Backend | None = None):
        self.keypair = keypair
        self.weight = weight
        self.backend = get_backend(backend)
        self.posted_epoch: int | None = None

    @property
    def node_id(self) -> bytes:
        return self.keypair.public_key

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.node_id.hex()[:12]}, w={self.weight})"

    def genesis_nonce(self, rng_bytes: bytes) -> bytes | None:
        return rng_bytes

    def reveals_genesis(self) -> bool:
        return True

    def post(self, board: Board, epoch: int) -> None:
        if self.posted_epoch is None:
            node_post(self.keypair, self.weight, board, epoch)
            self.posted_epoch = epoch

    def registered_for(self, epoch: int) -> bool:
        return self.posted_epoch is not None and self.posted_epoch < epoch

    def setup(self, board: Board, epoch: int, seed: bytes) -> None:
        if self.registered_for(epoch):
            node_setup(self.keypair, board, epoch, seed, self.backend)

    def propose(self, board: Board, seed_prev: bytes, epoch: int) -> None:
        propose_seed(self.keypair, seed_prev, epoch, board, self.backend)


# -- client side ----------------------------------------------------------


def _latest_posts(board: Board, epoch: int) -> dict[bytes, BoardEntry]:
    latest: dict[bytes, BoardEntry] = {}
    for entry in board.read_kind(Kind.POST, max_epoch=epoch - 1):
        latest[entry.author] = entry
    return latest


def client_collect(
    board: Board, epoch: int, seed: bytes, backend: str | Backend | None = None
) -> ValidatedRoster:
    """Validate every registration and commitment for ``epoch``.

    Nodes need a POST from an earlier epoch and a COMMIT in this one, both
    correctly signed, and a VRF output that verifies over ``seed``.
    """
    backend = get_backend(backend)
    posts = _latest_posts(board, epoch)
    commits = {e.author: e for e in board.read_epoch(epoch, Kind.COMMIT)}
    members: list[Member] = []
    rejected: list[tuple[bytes, Rejection]] = []
    for author in sorted(posts.keys() | commits.keys()):
        reason, member = _check_node(author, posts.get(author), commits.get(author), seed, backend)
        if reason is None:
            members.append(member)
        else:
            rejected.append((author, reason))
    return ValidatedRoster.from_members(epoch, seed, members, rejected)


def _check_node(author, post_entry, commit_entry, seed, backend):
    if post_entry is None:
        return Rejection.MISSING_POST, None
    try:
        post = NodePost.from_payload(post_entry.payload)
    except EncodingError:
        return Rejection.MALFORMED, None
    if post.public_key != author or post.weight < 1:
        return Rejection.MALFORMED, None
    if not post.signature_ok():
        return Rejection.BAD_POST_SIGNATURE, None
    if commit_entry is None:
        return Rejection.MISSING_COMMITMENT, None
    try:
        record = CommitmentRecord.from_payload(commit_entry.payload)
    except EncodingError:
        return Rejection.MALFORMED, None
    if not record.signature_ok(author):
        return Rejection.BAD_COMMIT_SIGNATURE, None
    if not backend.verify(author, seed, record.output):
        return Rejection.INVALID_VRF, None
    return None, Member(author, post.weight, record.commitment_y, record.proof_pi)


def client_select(
    board: Board,
    epoch: int,
    seed: bytes,
    tau,
    layers: int = 1,
    backend: str | Backend | None = None,
) -> tuple[ValidatedRoster, ActiveSet]:
    """One client's full view of an epoch: validated roster plus active set."""
    roster = client_collect(board, epoch, seed, backend)
    try:
        active = select_active_set(roster, tau)
    except DegenerateEpoch:
        return roster, empty_active_set(epoch, tau)
    return roster, assign_layers(active, roster, layers)


# -- orchestration --------------------------------------------------------


@dataclass
class EpochResult:
    epoch: int
    seed: SeedRecord
    roster: ValidatedRoster
    active_sets: list[ActiveSet]
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def active(self) -> ActiveSet:
        return self.active_sets[0]

    @property
    def agreed(self) -> bool:
        first = self.active_sets[0].to_bytes()
        return all(a.to_bytes() == first for a in self.active_sets[1:])

    @property
    def degenerate(self) -> bool:
        return self.active.degenerate


def run_genesis(agents: list[NodeAgent], board: Board, nonces: list[bytes]) -> SeedRecord:
    """Drive the commit and reveal windows and return seed_0."""
    if board.clock.phase is not Phase.GENESIS_COMMIT:
        raise ProtocolError("board is not in the genesis commit window")
    opened = []
    for agent, nonce in zip(agents, nonces):
        nonce = agent.genesis_nonce(nonce)
        if nonce is not None:
            genesis_commit(agent.keypair, nonce, board)
            opened.append((agent, nonce))
    board.advance_phase()
    for agent, nonce in opened:
        if agent.reveals_genesis():
            genesis_reveal(agent.keypair, nonce, board)
    board.advance_phase()
    return genesis_seed(board)


def run_epoch(
    agents: list[NodeAgent],
    board: Board,
    chain: SeedChain,
    epoch: int,
    tau,
    layers: int = 1,
    clients: int = 3,
    backend: str | Backend | None = None,
) -> EpochResult:
    """Run post, setup and select for ``epoch`` and collect every client's view.

    The board must be at (epoch, POST). For epoch >= 1 the elected proposer
    gets the first move of the setup phase, then the seed is fixed and the
    registered nodes commit.
    """
    backend = get_backend(backend)
    if board.clock != (epoch, Phase.POST):
        raise ProtocolError(f"board clock {board.clock} is not at ({epoch}, POST)")
    timings: dict[str, float] = {}

    for agent in agents:
        agent.post(board, epoch)
    board.advance_phase()

    if epoch >= 1 and not chain.has(epoch):
        prev_roster = client_collect(board, epoch - 1, chain.seed(epoch - 1), backend)
        proposer = elect_proposer(prev_roster)
        for agent in agents:
            if agent.node_id == proposer:
                agent.propose(board, chain.seed(epoch - 1), epoch)
        chain.append(derive_seed(chain, board, epoch, prev_roster, backend))
    seed = chain.seed(epoch)

    setup_times = []
    for agent in agents:
        start = time.perf_counter()
        agent.setup(board, epoch, seed)
        setup_times.append(time.perf_counter() - start)
    board.advance_phase()
    timings["setup_max_s"] = max(setup_times, default=0.0)
    timings["setup_mean_s"] = sum(setup_times) / len(setup_times) if setup_times else 0.0

    views = []
    select_times = []
    for _ in range(max(clients, 1)):
        start = time.perf_counter()
        views.append(client_select(board, epoch, seed, tau, layers, backend))
        select_times.append(time.perf_counter() - start)
    timings["client_select_max_s"] = max(select_times)
    board.advance_phase()

    roster = views[0][0]
    result = EpochResult(epoch, chain[epoch], roster, [a for _, a in views], timings)
    if result.degenerate and epoch > 0:  # epoch 0 only registers nodes
        log.warning("epoch %d is degenerate: no valid members", epoch)
    return result


@dataclass
class ReplayedEpoch:
    epoch: int
    seed: SeedRecord
    roster: ValidatedRoster
    active: ActiveSet


def replay(
    board: Board, tau, layers: int = 1, backend: str | Backend | None = None, epochs: int | None = None
) -> list[ReplayedEpoch]:
    """Recompute seeds, rosters and active sets from a transcript alone."""
    backend = get_backend(backend)
    chain = SeedChain([genesis_seed(board)])
    last = board.clock.epoch if epochs is None else epochs - 1
    if board.clock.phase in (Phase.POST, Phase.SETUP) and epochs is None:
        last -= 1
    out: list[ReplayedEpoch] = []
    prev_roster = None
    for epoch in range(last + 1):
        if epoch >= 1:
            chain.append(derive_seed(chain, board, epoch, prev_roster, backend))
        roster, active = client_select(board, epoch, chain.seed(epoch), tau, layers, backend)
        out.append(ReplayedEpoch(epoch, chain[epoch], roster, active))
        prev_roster = roster
    return out
