from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .crypto import hash_to_int


class Rejection(str, enum.Enum):
    MISSING_POST = "MissingPost"
    MISSING_COMMITMENT = "MissingCommitment"
    BAD_POST_SIGNATURE = "BadPostSignature"
    BAD_COMMIT_SIGNATURE = "BadCommitSignature"
    INVALID_VRF = "InvalidVrf"
    MALFORMED = "Malformed"


@dataclass(frozen=True)
class Member:
    node_id: bytes
    weight: int
    commitment_y: bytes
    proof_pi: bytes = b""
    hash_int: int = field(default=-1)

    def __post_init__(self):
        if self.hash_int < 0:
            object.__setattr__(self, "hash_int", hash_to_int(self.commitment_y))

    @property
    def sort_key(self) -> tuple[int, bytes]:
        return (self.hash_int, self.node_id)


@dataclass(frozen=True)
class ValidatedRoster:
    """Members that passed every check, ordered by (H(y), node_id)."""

    epoch: int
    seed: bytes
    members: tuple[Member, ...]
    rejected: tuple[tuple[bytes, Rejection], ...] = ()

    @classmethod
    def from_members(cls, epoch: int, seed: bytes, members, rejected=()) -> "ValidatedRoster":
        ordered = tuple(sorted(members, key=lambda m: m.sort_key))
        ids = [m.node_id for m in ordered]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate node in roster")
        if any(m.weight < 1 for m in ordered):
            raise ValueError("roster weights must be positive")
        return cls(epoch, seed, ordered, tuple(sorted(rejected)))

    def __len__(self) -> int:
        return len(self.members)

    @property
    def node_ids(self) -> list[bytes]:
        return [m.node_id for m in self.members]

    @property
    def total_weight(self) -> int:
        return sum(m.weight for m in self.members)

    def member(self, node_id: bytes) -> Member:
        for m in self.members:
            if m.node_id == node_id:
                return m
        raise KeyError(node_id.hex())

    def rejection_of(self, node_id: bytes) -> Rejection | None:
        for nid, reason in self.rejected:
            if nid == node_id:
                return reason
        return None
