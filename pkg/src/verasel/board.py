"""Append-only bulletin board with an explicit phase clock.

The board is a single trusted, process-local store. Every entry carries the
author's signature over ``pack(epoch, kind, payload)`` and receives a
strictly increasing sequence number on insertion. Phases advance only when
``advance_phase`` is called, which keeps simulations deterministic.
"""

from __future__ import annotations

import enum
import hashlib
from collections import defaultdict
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterator, NamedTuple

from .crypto import KeyPair, sign, verify_sig
from .encoding import pack

FORMAT_TAG = "verasel-board/1"


class Kind(str, enum.Enum):
    POST = "POST"
    COMMIT = "COMMIT"
    SEED_PROPOSAL = "SEED_PROPOSAL"
    GENESIS_COMMIT = "GENESIS_COMMIT"
    GENESIS_REVEAL = "GENESIS_REVEAL"


class Phase(str, enum.Enum):
    GENESIS_COMMIT = "GENESIS_COMMIT"
    GENESIS_REVEAL = "GENESIS_REVEAL"
    POST = "POST"
    SETUP = "SETUP"
    SELECT = "SELECT"


ADMISSIBLE: dict[Phase, frozenset[Kind]] = {
    Phase.GENESIS_COMMIT: frozenset({Kind.GENESIS_COMMIT}),
    Phase.GENESIS_REVEAL: frozenset({Kind.GENESIS_REVEAL}),
    Phase.POST: frozenset({Kind.POST}),
    Phase.SETUP: frozenset({Kind.COMMIT, Kind.SEED_PROPOSAL}),
    Phase.SELECT: frozenset(),
}

_NEXT_PHASE = {
    Phase.GENESIS_COMMIT: Phase.GENESIS_REVEAL,
    Phase.GENESIS_REVEAL: Phase.POST,
    Phase.POST: Phase.SETUP,
    Phase.SETUP: Phase.SELECT,
}


class Clock(NamedTuple):
    epoch: int
    phase: Phase


class BoardError(Exception):
    pass


class BadSignature(BoardError):
    pass


class DuplicateEntry(BoardError):
    pass


class PhaseViolation(BoardError):
    pass


class BoardFormatError(BoardError):
    pass


class BoardCorruptionError(BoardError):
    def __init__(self, message: str, sequence: int | None = None, author: bytes | None = None):
        super().__init__(message)
        self.sequence = sequence
        self.author = author


@dataclass(frozen=True)
class BoardEntry:
    epoch: int
    kind: Kind
    author: bytes
    payload: bytes
    signature: bytes
    sequence: int | None = None

    def signed_bytes(self) -> bytes:
        return signing_bytes(self.epoch, self.kind, self.payload)

    def signature_ok(self) -> bool:
        return verify_sig(self.author, self.signed_bytes(), self.signature)


def signing_bytes(epoch: int, kind: Kind, payload: bytes) -> bytes:
    return pack(epoch, Kind(kind).value.encode(), payload)


def make_entry(keypair: KeyPair, epoch: int, kind: Kind, payload: bytes) -> BoardEntry:
    sig = sign(keypair.secret_key, signing_bytes(epoch, kind, payload))
    return BoardEntry(epoch, Kind(kind), keypair.public_key, payload, sig)


class Board:
    def __init__(self, clock: Clock | None = None):
        self._entries: list[BoardEntry] = []
        self._index: dict[tuple[int, Kind], list[BoardEntry]] = defaultdict(list)
        self._seen: set[tuple[int, Kind, bytes]] = set()
        self.clock = clock or Clock(0, Phase.POST)

    @classmethod
    def with_genesis(cls) -> "Board":
        """A board that opens with the genesis commit/reveal windows."""
        return cls(Clock(0, Phase.GENESIS_COMMIT))

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[BoardEntry]:
        return iter(self._entries)

    @property
    def entries(self) -> tuple[BoardEntry, ...]:
        return tuple(self._entries)

    def admissible(self, kind: Kind) -> bool:
        return Kind(kind) in ADMISSIBLE[self.clock.phase]

    def post_entry(self, entry: BoardEntry) -> int:
        """Append ``entry``; returns its sequence number.

        Rejections raise and leave the board untouched.
        """
        if entry.epoch != self.clock.epoch or not self.admissible(entry.kind):
            raise PhaseViolation(
                f"{entry.kind.value} for epoch {entry.epoch} not admissible at "
                f"epoch {self.clock.epoch} phase {self.clock.phase.value}"
            )
        if not entry.signature_ok():
            raise BadSignature(f"bad board signature from {entry.author.hex()}")
        key = (entry.epoch, entry.kind, entry.author)
        if key in self._seen:
            raise DuplicateEntry(f"duplicate {entry.kind.value} from {entry.author.hex()} in epoch {entry.epoch}")
        return self._append(replace(entry, sequence=len(self._entries)))

    def _append(self, entry: BoardEntry) -> int:
        self._entries.append(entry)
        self._index[(entry.epoch, entry.kind)].append(entry)
        self._seen.add((entry.epoch, entry.kind, entry.author))
        return entry.sequence

    def read_epoch(self, epoch: int, kind: Kind) -> list[BoardEntry]:
        return list(self._index.get((epoch, Kind(kind)), ()))

    def read_kind(self, kind: Kind, max_epoch: int | None = None) -> list[BoardEntry]:
        """All entries of ``kind`` (optionally up to ``max_epoch``), in sequence order."""
        kind = Kind(kind)
        return [
            e for e in self._entries if e.kind is kind and (max_epoch is None or e.epoch <= max_epoch)
        ]

    def advance_phase(self) -> Clock:
        epoch, phase = self.clock
        if phase is Phase.SELECT:
            self.clock = Clock(epoch + 1, Phase.POST)
        else:
            self.clock = Clock(epoch, _NEXT_PHASE[phase])
        return self.clock

    def advance_to(self, epoch: int, phase: Phase) -> Clock:
        target = Clock(epoch, Phase(phase))
        while self.clock != target:
            if self.clock.epoch > epoch:
                raise ValueError(f"board is already past {target}")
            self.advance_phase()
        return self.clock

    # -- persistence -------------------------------------------------------

    def dumps(self) -> str:
        lines = [FORMAT_TAG, f"clock {self.clock.epoch} {self.clock.phase.value}"]
        for e in self._entries:
            lines.append(
                f"entry {e.sequence} {e.epoch} {e.kind.value} "
                f"{e.author.hex()} {e.payload.hex() or '-'} {e.signature.hex()}"
            )
        body = "\n".join(lines) + "\n"
        return body + f"sha256 {hashlib.sha256(body.encode()).hexdigest()}\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def loads(cls, text: str) -> "Board":
        if text == "":
            return cls()
        lines = text.split("\n")
        if lines[0] != FORMAT_TAG:
            raise BoardFormatError(f"unsupported board format {lines[0][:40]!r}, expected {FORMAT_TAG}")
        if len(lines) < 4 or lines[-1] != "" or not lines[-2].startswith("sha256 "):
            raise BoardFormatError("missing or malformed checksum trailer")
        try:
            _, epoch, phase = lines[1].split(" ")
            board = cls(Clock(_nonneg(epoch), Phase(phase)))
        except ValueError as exc:
            raise BoardFormatError(f"line 2: bad clock record {lines[1]!r}") from exc
        for lineno, line in enumerate(lines[2:-2], start=3):
            entry = _parse_entry(line, lineno)
            if entry.sequence != len(board):
                raise BoardCorruptionError(
                    f"line {lineno}: sequence {entry.sequence} out of order", entry.sequence, entry.author
                )
            if not entry.signature_ok():
                raise BoardCorruptionError(
                    f"line {lineno}: signature check failed for entry {entry.sequence} "
                    f"by node {entry.author.hex()}",
                    entry.sequence,
                    entry.author,
                )
            if (entry.epoch, entry.kind, entry.author) in board._seen:
                raise BoardCorruptionError(f"line {lineno}: duplicate entry", entry.sequence, entry.author)
            if entry.epoch > board.clock.epoch:
                raise BoardCorruptionError(f"line {lineno}: entry from the future", entry.sequence, entry.author)
            board._append(entry)
        body = "\n".join(lines[:-2]) + "\n"
        if lines[-2] != f"sha256 {hashlib.sha256(body.encode()).hexdigest()}":
            raise BoardCorruptionError("transcript checksum mismatch")
        return board

    @classmethod
    def load(cls, path: str | Path) -> "Board":
        try:
            text = Path(path).read_bytes().decode("ascii")
        except UnicodeDecodeError as exc:
            raise BoardCorruptionError(f"{path}: non-ASCII bytes in transcript") from exc
        return cls.loads(text)


def _nonneg(s: str) -> int:
    if not s.isdigit():
        raise ValueError(f"not a non-negative integer: {s!r}")
    return int(s)


def _parse_entry(line: str, lineno: int) -> BoardEntry:
    parts = line.split(" ")
    if len(parts) != 7 or parts[0] != "entry":
        raise BoardFormatError(f"line {lineno}: malformed entry record")
    try:
        seq, epoch = _nonneg(parts[1]), _nonneg(parts[2])
        kind = Kind(parts[3])
        author = _unhex(parts[4])
        payload = b"" if parts[5] == "-" else _unhex(parts[5])
        sig = _unhex(parts[6])
    except ValueError as exc:
        raise BoardFormatError(f"line {lineno}: {exc}") from exc
    return BoardEntry(epoch, kind, author, payload, sig, seq)


def _unhex(s: str) -> bytes:
    if s != s.lower():
        raise ValueError("hex fields must be lowercase")
    return bytes.fromhex(s)
