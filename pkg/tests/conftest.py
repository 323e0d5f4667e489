from __future__ import annotations

import hashlib

import pytest

from verasel.crypto import get_backend, keygen
from verasel.roster import Member, ValidatedRoster


def fake_roster(weights, tag=b"r", epoch=1):
    """Roster with synthetic ids and commitments, no keys involved."""
    members = [
        Member(hashlib.sha256(tag + b"id%d" % i).digest(), w, hashlib.sha256(tag + b"y%d" % i).digest())
        for i, w in enumerate(weights)
    ]
    return ValidatedRoster.from_members(epoch, b"\x00" * 32, members)


def keyed_roster(weights, seed, backend="mock", tag=b"k"):
    backend = get_backend(backend)
    keys = [keygen(tag + b"%d" % i) for i in range(len(weights))]
    members = [Member(kp.public_key, w, backend.prove(kp.secret_key, seed).commitment_y) for kp, w in zip(keys, weights)]
    return ValidatedRoster.from_members(1, seed, members), keys


@pytest.fixture
def mock():
    return get_backend("mock")


# criterion number -> "PASS ..."/"FAIL ..." line, filled in by test_acceptance
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
