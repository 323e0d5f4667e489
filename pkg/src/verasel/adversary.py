"""Misbehaving node agents and desk-scale attack experiments."""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field

from .board import Board, Kind, make_entry
from .crypto import Backend, KeyPair, VrfOutput, get_backend, hash_to_int, keygen
from .encoding import pack
from .protocol import CommitmentRecord, EpochResult, NodeAgent, NodePost, run_epoch, run_genesis
from .roster import Member, ValidatedRoster
from .seedchain import SeedChain, proposal_input
from .selection import build_weight_table, draw_stream, parse_tau
from .stats import two_proportion_test


class Behavior(str, enum.Enum):
    HONEST = "honest"
    SILENT_POST = "silent_post"
    SILENT_SETUP = "silent_setup"
    BAD_PROOF = "bad_proof"
    BAD_SIGNATURE = "bad_signature"
    GRINDER = "grinder"


class ProposerMode(str, enum.Enum):
    HONEST = "honest"
    SILENT = "silent"
    CORRUPT = "corrupt"


@dataclass(frozen=True)
class BehaviorProfile:
    kind: Behavior = Behavior.HONEST
    attempts: int = 1  # GRINDER only

    @classmethod
    def parse(cls, text: str) -> "BehaviorProfile":
        """``honest``, ``bad_proof``, ``grinder:50`` ..."""
        name, _, arg = text.strip().lower().partition(":")
        kind = Behavior(name)
        if kind is Behavior.GRINDER:
            return cls(kind, int(arg or 1))
        if arg:
            raise ValueError(f"behavior {name!r} takes no argument")
        return cls(kind)

    @property
    def excluded(self) -> bool:
        """Whether this behavior must keep the node out of every active set."""
        return self.kind not in (Behavior.HONEST, Behavior.GRINDER)


HONEST = BehaviorProfile()


def _flip_bit(b: bytes, bit: int = 0) -> bytes:
    arr = bytearray(b)
    arr[bit // 8 % len(arr)] ^= 1 << (bit % 8)
    return bytes(arr)


class ScriptedAgent(NodeAgent):
    """A node following ``profile``; the proposer mode applies if it gets elected."""

    def __init__(self, keypair, weight, profile=HONEST, proposer_mode=ProposerMode.HONEST, backend=None):
        super().__init__(keypair, weight, backend)
        self.profile = profile
        self.proposer_mode = ProposerMode(proposer_mode)

    def post(self, board: Board, epoch: int) -> None:
        kind = self.profile.kind
        if kind is Behavior.SILENT_POST or self.posted_epoch is not None:
            return
        post = NodePost.create(self.keypair, self.weight)
        if kind is Behavior.BAD_SIGNATURE:
            post = NodePost(post.public_key, post.weight, _flip_bit(post.signature))
        board.post_entry(make_entry(self.keypair, epoch, Kind.POST, post.to_payload()))
        self.posted_epoch = epoch

    def setup(self, board: Board, epoch: int, seed: bytes) -> None:
        kind = self.profile.kind
        if kind is Behavior.SILENT_SETUP or not self.registered_for(epoch):
            return
        output = self.backend.prove(self.keypair.secret_key, seed)
        if kind is Behavior.BAD_PROOF:
            output = VrfOutput(output.commitment_y, _flip_bit(output.proof_pi, 77))
        record = CommitmentRecord.create(self.keypair, output)
        board.post_entry(make_entry(self.keypair, epoch, Kind.COMMIT, record.to_payload()))

    def propose(self, board: Board, seed_prev: bytes, epoch: int) -> None:
        if self.proposer_mode is ProposerMode.SILENT:
            return
        output = self.backend.prove(self.keypair.secret_key, proposal_input(seed_prev, epoch))
        if self.proposer_mode is ProposerMode.CORRUPT:
            output = VrfOutput(output.commitment_y, _flip_bit(output.proof_pi, 77))
        payload = pack(output.commitment_y, output.proof_pi)
        board.post_entry(make_entry(self.keypair, epoch, Kind.SEED_PROPOSAL, payload))


def _grinder_key(rng: random.Random, attempts: int) -> KeyPair:
    # Without the seed every candidate key is equally good; keep the smallest H(pk).
    candidates = [keygen(rng.randbytes(32)) for _ in range(max(attempts, 1))]
    return min(candidates, key=lambda kp: hash_to_int(kp.public_key))


@dataclass
class ScenarioTranscript:
    board: Board
    chain: SeedChain
    agents: list[ScriptedAgent]
    epochs: list[EpochResult]
    tau: object
    layers: int
    backend: str

    @property
    def all_agreed(self) -> bool:
        return all(r.agreed for r in self.epochs)

    @property
    def degenerate_epochs(self) -> list[int]:
        return [r.epoch for r in self.epochs if r.degenerate]

    def profile_of(self, node_id: bytes) -> BehaviorProfile:
        for a in self.agents:
            if a.node_id == node_id:
                return a.profile
        raise KeyError(node_id.hex())


def run_scenario(
    nodes: list[tuple[int, BehaviorProfile]],
    epochs: int,
    tau,
    layers: int = 1,
    rng_seed: int = 0,
    backend: str | Backend = "ecvrf",
    clients: int = 2,
    proposer_mode: ProposerMode | str = ProposerMode.HONEST,
) -> ScenarioTranscript:
    """Genesis, one registration epoch (0), then ``epochs`` selection epochs.

    Every party takes part honestly in genesis; misbehavior starts with
    registration. The proposer mode applies to whichever node is elected.
    """
    tau = parse_tau(tau)
    backend_obj = get_backend(backend)
    rng = random.Random(rng_seed)
    agents = []
    for weight, profile in nodes:
        if profile.kind is Behavior.GRINDER:
            kp = _grinder_key(rng, profile.attempts)
        else:
            kp = keygen(rng.randbytes(32))
        agents.append(ScriptedAgent(kp, weight, profile, proposer_mode, backend_obj))
    board = Board.with_genesis()
    chain = SeedChain([run_genesis(agents, board, [rng.randbytes(32) for _ in agents])])
    results = []
    for epoch in range(epochs + 1):
        result = run_epoch(agents, board, chain, epoch, tau, layers, clients, backend_obj)
        if epoch >= 1:
            results.append(result)
    return ScenarioTranscript(board, chain, agents, results, tau, layers, backend_obj.name)


# -- key grinding ---------------------------------------------------------


def round_one_winner(roster: ValidatedRoster) -> bytes:
    table = build_weight_table(roster)
    return table.lookup(draw_stream(roster, 1) % table.total_weight)


def _commit(backend, kp: KeyPair, seed: bytes) -> bytes:
    if hasattr(backend, "prove_with_pk"):
        return backend.prove_with_pk(kp.secret_key, kp.public_key, seed).commitment_y
    return backend.prove(kp.secret_key, seed).commitment_y


@dataclass(frozen=True)
class GrindResult:
    keypair: KeyPair | None
    selected: bool
    advantage: float


def grind_keys(
    target: ValidatedRoster,
    adversary_weight: int,
    seed: bytes,
    attempts: int,
    rng: random.Random | None = None,
    backend: str | Backend = "mock",
) -> GrindResult:
    """Seed-known grinding: try ``attempts`` fresh keys against a fixed seed.

    This inverts the protocol's ordering on purpose (keys are supposed to be
    fixed before the seed exists). ``advantage`` is the round-1 outcome minus
    the fair share w_adv / W.
    """
    backend = get_backend(backend)
    rng = rng or random.Random()
    share = adversary_weight / (target.total_weight + adversary_weight)
    best = None
    for _ in range(attempts):
        kp = keygen(rng.randbytes(32))
        member = Member(kp.public_key, adversary_weight, _commit(backend, kp, seed))
        roster = ValidatedRoster.from_members(target.epoch, seed, [*target.members, member])
        if round_one_winner(roster) == kp.public_key:
            return GrindResult(kp, True, 1.0 - share)
        best = best or kp
    return GrindResult(best, False, 0.0 - share if attempts else 0.0)


@dataclass
class GrindingReport:
    trials: int
    successes: int
    fair_share: float
    attempts: int
    seed_known: bool
    extra: dict = field(default_factory=dict)

    @property
    def frequency(self) -> float:
        return self.successes / self.trials

    @property
    def advantage(self) -> float:
        return self.frequency - self.fair_share


def grinding_experiment(
    honest_weights: list[int],
    adversary_weight: int,
    attempts: int,
    trials: int,
    seed_known: bool,
    rng_seed: int = 0,
    backend: str | Backend = "mock",
) -> GrindingReport:
    """Monte Carlo round-1 selection rate of one adversarial node.

    ``seed_known=False`` is the protocol's order: the adversary commits to a
    key (the best of ``attempts`` by any seed-independent rule), then a fresh
    random seed is drawn per trial. ``seed_known=True`` grinds with the seed
    in hand.
    """
    backend = get_backend(backend)
    rng = random.Random(rng_seed)
    honest = [keygen(rng.randbytes(32)) for _ in honest_weights]
    fixed_key = _grinder_key(rng, attempts) if not seed_known else None
    wins = 0
    for _ in range(trials):
        seed = rng.randbytes(32)
        members = [Member(kp.public_key, w, _commit(backend, kp, seed)) for kp, w in zip(honest, honest_weights)]
        target = ValidatedRoster.from_members(1, seed, members)
        if seed_known:
            wins += grind_keys(target, adversary_weight, seed, attempts, rng, backend).selected
        else:
            adv = Member(fixed_key.public_key, adversary_weight, _commit(backend, fixed_key, seed))
            roster = ValidatedRoster.from_members(1, seed, [*members, adv])
            wins += round_one_winner(roster) == fixed_key.public_key
    share = adversary_weight / (sum(honest_weights) + adversary_weight)
    return GrindingReport(trials, wins, share, attempts, seed_known)


def honest_order_has_no_advantage(
    grinding: GrindingReport, baseline: GrindingReport, alpha: float = 0.01
) -> tuple[bool, float]:
    """Two-proportion test of honest-order grinding against the k=1 baseline."""
    _, p = two_proportion_test(grinding.successes, grinding.trials, baseline.successes, baseline.trials)
    return p >= alpha, p

