"""Statistical validation: VeraSel selection frequencies against the oracle.

Both arms run over the same weighted node set. The VeraSel arm draws a fresh
epoch seed per trial, derives every node's commitment with the chosen VRF
backend and runs the selection; the oracle arm is weighted sampling without
replacement by a trusted party. Per-node inclusion frequencies of the two
arms are compared with the two-sample KS test.
"""

from __future__ import annotations

import hashlib
import logging
import random
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .crypto import Backend, get_backend, keygen
from .encoding import encode_int
from .roster import Member, ValidatedRoster
from .selection import parse_tau, select_active_set
from .stats import (
    FrequencyProfile,
    KSResult,
    ks_critical_value,
    ks_two_sample,
    selection_frequencies,
    simple_weighted_select,
    uniform_select,
)

log = logging.getLogger(__name__)


def trial_seed(rng_seed: int, trial: int) -> bytes:
    return hashlib.sha256(b"verasel-trial" + encode_int(rng_seed) + encode_int(trial)).digest()


class VeraSelArm:
    """Runs the selection for one fixed key set under per-trial seeds."""

    def __init__(self, weights: list[int], tau, rng_seed: int = 0, backend: str | Backend = "mock"):
        self.weights = list(weights)
        self.tau = parse_tau(tau)
        self.rng_seed = rng_seed
        self.backend = get_backend(backend)
        rng = random.Random(rng_seed)
        self.keys = [keygen(rng.randbytes(32)) for _ in self.weights]
        self.node_ids = [kp.public_key for kp in self.keys]

    def roster(self, seed: bytes) -> ValidatedRoster:
        prove = getattr(self.backend, "prove_with_pk", None)
        members = []
        for kp, w in zip(self.keys, self.weights):
            if prove is not None:
                y = prove(kp.secret_key, kp.public_key, seed).commitment_y
            else:
                y = self.backend.prove(kp.secret_key, seed).commitment_y
            members.append(Member(kp.public_key, w, y))
        return ValidatedRoster.from_members(0, seed, members)

    def __call__(self, trial: int) -> list[bytes]:
        seed = trial_seed(self.rng_seed, trial)
        return select_active_set(self.roster(seed), self.tau).node_ids


class OracleArm:
    def __init__(self, weights, node_ids, tau, rng_seed: int = 0, select: Callable = simple_weighted_select):
        self.weights = list(weights)
        self.node_ids = list(node_ids)
        self.tau = parse_tau(tau)
        self.rng = np.random.default_rng(rng_seed)
        self.select = select

    def __call__(self, trial: int) -> list:
        return [self.node_ids[i] for i in self.select(self.weights, self.tau, self.rng)]


@dataclass
class ValidationReport:
    verasel: FrequencyProfile
    oracle: FrequencyProfile
    per_node: KSResult
    per_run: KSResult
    reference_critical_value: float
    control: str

    @property
    def accept(self) -> bool:
        return self.per_node.accept

    def summary_lines(self) -> list[str]:
        pn, pr = self.per_node, self.per_run
        return [
            f"arm_a=verasel{'' if self.control == 'none' else ' (control=' + self.control + ')'} trials={self.verasel.trials}",
            f"arm_b=oracle trials={self.oracle.trials}",
            f"nodes={len(self.verasel.node_ids)}",
            f"per_node_ks_statistic={pn.statistic:.6f}",
            f"per_node_ks_critical={pn.critical_value:.6f} (n={pn.n}, m={pn.m}, alpha={pn.alpha})",
            f"per_node_accept={pn.accept}",
            f"per_run_size_ks_statistic={pr.statistic:.6f}",
            f"per_run_size_ks_critical={pr.critical_value:.6f} (n={pr.n}, m={pr.m})",
            f"per_run_size_accept={pr.accept}",
            f"critical_value_n3000_m3000={self.reference_critical_value:.6f}",
            f"verdict={'ACCEPT' if self.accept else 'REJECT'}",
        ]


def run_validation(
    weights: list[int],
    tau,
    trials_a: int,
    trials_b: int,
    alpha: float = 0.05,
    rng_seed: int = 0,
    backend: str | Backend = "mock",
    control: str = "none",
) -> ValidationReport:
    """Compare VeraSel (arm A) with the trusted-party oracle (arm B).

    ``control="uniform"`` swaps arm A for weight-blind selection, which the
    KS test should reject.
    """
    arm_a = VeraSelArm(weights, tau, rng_seed, backend)
    if control == "uniform":
        run_a = OracleArm(weights, arm_a.node_ids, tau, rng_seed + 1, select=uniform_select)
    elif control == "none":
        run_a = arm_a
    else:
        raise ValueError(f"unknown control arm {control!r}")
    run_b = OracleArm(weights, arm_a.node_ids, tau, rng_seed + 2)
    log.info("running arm A (%d trials) and arm B (%d trials) over %d nodes", trials_a, trials_b, len(weights))
    prof_a = selection_frequencies(run_a, trials_a, arm_a.node_ids)
    prof_b = selection_frequencies(run_b, trials_b, arm_a.node_ids)
    per_node = ks_two_sample(prof_a.frequencies, prof_b.frequencies, alpha)
    per_run = ks_two_sample(prof_a.subset_sizes, prof_b.subset_sizes, alpha)
    return ValidationReport(prof_a, prof_b, per_node, per_run, ks_critical_value(3000, 3000, alpha), control)
