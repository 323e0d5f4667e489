"""Weight-table selection of the active set and layer placement.

Every member owns a half-open interval of the weight table, laid out in
roster order (ascending H(y)). Round ``t`` draws an index from the stream
described in :func:`draw_stream`, maps it into the current table, removes
the owner and compacts the table, until the selected weight reaches the
threshold fraction of the original total.
"""

from __future__ import annotations

import bisect
import hashlib
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import cached_property
from typing import Mapping

from .crypto import hash_to_int
from .encoding import encode_int, pack
from .roster import ValidatedRoster


class DegenerateEpoch(ValueError):
    """No valid members to select from."""


class SelectionParameterError(ValueError):
    pass


def parse_tau(tau) -> Fraction:
    """Coerce ``tau`` to an exact fraction in (0, 1]."""
    try:
        if isinstance(tau, float):
            value = Fraction(repr(tau))
        else:
            value = Fraction(tau)
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        raise SelectionParameterError(f"bad threshold {tau!r}") from exc
    if not 0 < value <= 1:
        raise SelectionParameterError(f"threshold must lie in (0, 1], got {tau!r}")
    return value


@dataclass(frozen=True)
class WeightTable:
    segments: tuple[tuple[bytes, int], ...] = ()

    @cached_property
    def _ends(self) -> list[int]:
        ends, acc = [], 0
        for _, w in self.segments:
            acc += w
            ends.append(acc)
        return ends

    @property
    def total_weight(self) -> int:
        return self._ends[-1] if self.segments else 0

    def __len__(self) -> int:
        return len(self.segments)

    def interval(self, node_id: bytes) -> tuple[int, int]:
        for i, (nid, w) in enumerate(self.segments):
            if nid == node_id:
                end = self._ends[i]
                return end - w, end
        raise KeyError(node_id.hex())

    def lookup(self, idx: int) -> bytes:
        """Owner of ``idx``: the node whose [begin, begin + w) contains it."""
        if not 0 <= idx < self.total_weight:
            raise IndexError(f"index {idx} outside [0, {self.total_weight})")
        return self.segments[bisect.bisect_right(self._ends, idx)][0]

    def remove(self, node_id: bytes) -> "WeightTable":
        """Drop ``node_id``; later intervals shift down to keep [0, W) exhaustive."""
        kept = tuple(s for s in self.segments if s[0] != node_id)
        if len(kept) == len(self.segments):
            raise KeyError(f"node {node_id.hex()} not in weight table")
        return WeightTable(kept)


def build_weight_table(roster: ValidatedRoster) -> WeightTable:
    return WeightTable(tuple((m.node_id, m.weight) for m in roster.members))


def draw_stream(roster: ValidatedRoster, t: int) -> int:
    """Pre-modulus draw for round ``t`` (1-based).

    Rounds 1..m use H(y) of the t-th roster member directly; later rounds
    hash that commitment with an 8-byte round counter appended.
    """
    m = len(roster.members)
    if m == 0:
        raise DegenerateEpoch("empty roster")
    if t < 1:
        raise SelectionParameterError("rounds are numbered from 1")
    counter, pos = divmod(t - 1, m)
    member = roster.members[pos]
    if counter == 0:
        return member.hash_int
    return hash_to_int(member.commitment_y + encode_int(counter))


@dataclass(frozen=True)
class Selected:
    node_id: bytes
    weight: int
    round: int


@dataclass(frozen=True)
class ActiveSet:
    epoch: int
    selected: tuple[Selected, ...]
    cumulative_weight: int
    total_weight: int
    tau: Fraction
    layers: int = 0
    layer_assignment: tuple[tuple[bytes, int], ...] = ()
    degenerate: bool = False

    @property
    def node_ids(self) -> list[bytes]:
        return [s.node_id for s in self.selected]

    @property
    def layer_of(self) -> Mapping[bytes, int]:
        return dict(self.layer_assignment)

    def to_bytes(self) -> bytes:
        """Canonical encoding; equal ActiveSets encode identically."""
        parts: list[bytes | int] = [
            self.epoch,
            str(self.tau).encode(),
            self.total_weight,
            self.cumulative_weight,
            self.layers,
            int(self.degenerate),
        ]
        layer_of = self.layer_of
        for s in self.selected:
            parts += [s.node_id, s.weight, s.round, layer_of.get(s.node_id, 0)]
        return pack(*parts)

    def digest(self) -> str:
        return hashlib.sha256(self.to_bytes()).hexdigest()


def empty_active_set(epoch: int, tau) -> ActiveSet:
    return ActiveSet(epoch, (), 0, 0, parse_tau(tau), degenerate=True)


class _Fenwick:
    """Prefix sums over member weights with point updates."""

    def __init__(self, weights: list[int]):
        n = len(weights)
        tree = [0] * (n + 1)
        for i, w in enumerate(weights, 1):
            tree[i] += w
            j = i + (i & -i)
            if j <= n:
                tree[j] += tree[i]
        self.tree = tree
        self.n = n
        self.top = 1 << (n.bit_length() - 1) if n else 0

    def add(self, pos: int, delta: int) -> None:
        i = pos + 1
        while i <= self.n:
            self.tree[i] += delta
            i += i & -i

    def find(self, idx: int) -> int:
        """Smallest position whose inclusive prefix sum exceeds ``idx``."""
        pos, step, tree = 0, self.top, self.tree
        while step:
            nxt = pos + step
            if nxt <= self.n and tree[nxt] <= idx:
                pos = nxt
                idx -= tree[nxt]
            step >>= 1
        return pos


def select_active_set(roster: ValidatedRoster, tau) -> ActiveSet:
    """Run the dynamic-hash selection loop over ``roster``.

    Pure function of (roster, tau). The threshold test is exact:
    ``selected_weight * den >= num * total_weight``.
    """
    tau = parse_tau(tau)
    members = roster.members
    if not members:
        raise DegenerateEpoch(f"epoch {roster.epoch}: no valid members")
    weights = [m.weight for m in members]
    total = sum(weights)
    remaining = total
    tree = _Fenwick(weights)
    num, den = tau.numerator, tau.denominator
    picked: list[Selected] = []
    cumulative = 0
    t = 0
    while cumulative * den < num * total:
        t += 1
        pos = tree.find(draw_stream(roster, t) % remaining)
        w = weights[pos]
        tree.add(pos, -w)
        remaining -= w
        cumulative += w
        picked.append(Selected(members[pos].node_id, w, t))
    return ActiveSet(roster.epoch, tuple(picked), cumulative, total, tau)


def assign_layers(active: ActiveSet, roster: ValidatedRoster, layers: int) -> ActiveSet:
    """Place each selected node in layer H(y) mod ``layers``."""
    if layers < 1:
        raise SelectionParameterError("layer count must be at least 1")
    by_id = {m.node_id: m for m in roster.members}
    try:
        assignment = tuple((nid, by_id[nid].hash_int % layers) for nid in active.node_ids)
    except KeyError as exc:
        raise SelectionParameterError(f"selected node {exc} has no commitment in roster") from None
    return replace(active, layers=layers, layer_assignment=assignment)
