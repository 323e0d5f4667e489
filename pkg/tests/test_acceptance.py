"""Acceptance gate: one test per criterion, each recording a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the per-criterion verdicts
are printed in the "acceptance criteria" section at the end of the run.
"""

from __future__ import annotations

import hashlib
import math
import random
import shutil
from fractions import Fraction

import mpmath

from conftest import ACCEPTANCE, fake_roster, keyed_roster
from test_ecvrf import VECTORS
from verasel import ecvrf
from verasel.adversary import BehaviorProfile, ProposerMode, round_one_winner, run_scenario
from verasel.cli import EXIT_DEGENERATE, EXIT_MISMATCH, EXIT_OK, main
from verasel.seedchain import Provenance, fallback_seed, record_is_consistent
from verasel.selection import assign_layers, select_active_set
from verasel.stats import chi_square_uniform, collision_probability, ks_critical_value, sample_bandwidths
from verasel.validation import run_validation


def record(n: int, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n:2d}: {detail}"
    ACCEPTANCE[n] = line
    print(line)
    assert ok, line


def test_criterion_01_ks_validation():
    weights = sample_bandwidths(1000, rng_seed=1)
    total = sum(weights)
    report = run_validation(weights, "1/2", 3000, 3000, alpha=0.05, rng_seed=1, backend="mock")
    crit3000 = ks_critical_value(3000, 3000, 0.05)
    d = report.per_node.statistic
    ok = (
        abs(total - 9970) <= 0.01 * 9970
        and abs(crit3000 - 0.0351) <= 1e-4
        and report.per_node.accept
        and d <= crit3000
    )
    record(
        1,
        ok,
        f"W={total}, D={d:.4f}, D_alpha(n=m=1000)={report.per_node.critical_value:.4f}, "
        f"D_alpha(n=m=3000)={crit3000:.6f}, per-run D={report.per_run.statistic:.4f}",
    )


def test_criterion_02_threshold_property():
    rng = random.Random(2)
    failures = 0
    for i in range(1000):
        weights = [rng.randint(1, 100) for _ in range(rng.randint(1, 20))]
        den = rng.randint(1, 100)
        tau = Fraction(rng.randint(1, den), den)
        active = select_active_set(fake_roster(weights, tag=b"c2-%d" % i), tau)
        W = sum(weights)
        cum = active.cumulative_weight
        last = active.selected[-1].weight
        if not (cum * tau.denominator >= tau.numerator * W > (cum - last) * tau.denominator):
            failures += 1
    record(2, failures == 0, f"1000 instances, {failures} violate cum >= tau*W > cum - last")


def test_criterion_03_round_one_law():
    weights = [5, 3, 8, 1, 4]
    W = sum(weights)
    n = 10000
    _, keys = keyed_roster(weights, b"", "mock", tag=b"c3")
    counts = {kp.public_key: 0 for kp in keys}
    for i in range(n):
        seed = hashlib.sha256(b"c3-seed" + i.to_bytes(8, "big")).digest()
        roster, _ = keyed_roster(weights, seed, "mock", tag=b"c3")
        counts[round_one_winner(roster)] += 1
    worst = 0.0
    for kp, w in zip(keys, weights):
        p = w / W
        z = abs(counts[kp.public_key] / n - p) / math.sqrt(p * (1 - p) / n)
        worst = max(worst, z)
    freqs = ", ".join(f"{counts[kp.public_key] / n:.4f}~{w / W:.4f}" for kp, w in zip(keys, weights))
    record(3, worst <= 3.0, f"{n} seeds, max |z| = {worst:.2f} (limit 3); {freqs}")


def test_criterion_04_agreement_and_verifiability(tmp_path):
    rng = random.Random(4)
    bad_kinds = ["silent_post", "silent_setup", "bad_proof", "bad_signature"]
    disagreements = verify_failures = undetected = corruptions = 0
    first_board = None
    for i in range(100):
        n = rng.randint(2, 8)
        n_bad = rng.randint(0, n - 1)
        behaviors = ", ".join(rng.choice(bad_kinds) for _ in range(n_bad))
        backend = "ecvrf" if i % 10 == 0 else "mock"
        cfg = tmp_path / f"s{i}.cfg"
        cfg.write_text(
            f"nodes = {n}\nepochs = 2\ntau = {rng.choice(['1/2', '1/3', '3/4', '1'])}\nlayers = {rng.randint(1, 3)}\n"
            f"clients = 3\nbackend = {backend}\nrng_seed = {i}\nbehaviors = {behaviors}\n"
        )
        out = tmp_path / f"run{i}"
        rc = main(["simulate", "--config", str(cfg), "--out", str(out)])
        disagreements += rc not in (EXIT_OK, EXIT_DEGENERATE)
        board = out / "board.txt"
        verify_failures += main(["verify", "--board-file", str(board)]) != EXIT_OK
        first_board = first_board or board
        text = board.read_bytes()
        bad_copy = tmp_path / "bad" / "board.txt"
        bad_copy.parent.mkdir(exist_ok=True)
        shutil.copy(out / "epochs.csv", bad_copy.parent / "epochs.csv")
        shutil.copy(out / "active_sets.csv", bad_copy.parent / "active_sets.csv")
        shutil.copy(out / "summary.txt", bad_copy.parent / "summary.txt")
        for _ in range(10):
            pos = rng.randrange(len(text))
            val = rng.choice([b for b in range(256) if b != text[pos]])
            bad_copy.write_bytes(text[:pos] + bytes([val]) + text[pos + 1 :])
            corruptions += 1
            undetected += main(["verify", "--board-file", str(bad_copy)]) != EXIT_MISMATCH
    # exhaustive over every byte position of one transcript
    text = first_board.read_bytes()
    res = first_board.parent
    for pos in range(len(text)):
        bad_copy.write_bytes(text[:pos] + bytes([text[pos] ^ 0x20]) + text[pos + 1 :])
        corruptions += 1
        undetected += main(["verify", "--board-file", str(bad_copy), "--results", str(res)]) != EXIT_MISMATCH
    ok = disagreements == 0 and verify_failures == 0 and undetected == 0
    record(
        4,
        ok,
        f"100 scenarios: {disagreements} client disagreements, {verify_failures} replays not matching, "
        f"{undetected}/{corruptions} single-byte corruptions undetected",
    )


def test_criterion_05_self_dos_equivalence():
    rng = random.Random(5)
    differing = 0
    for i in range(20):
        n = rng.randint(2, 8)
        flags = [rng.random() < 0.4 for _ in range(n)]
        flags[0] = False
        weights = [rng.randint(1, 30) for _ in range(n)]

        def rosters(kind):
            nodes = [(w, BehaviorProfile.parse(kind if f else "honest")) for w, f in zip(weights, flags)]
            tr = run_scenario(nodes, 2, "1/2", rng_seed=100 + i, backend="mock")
            return [[(m.node_id, m.weight) for m in r.roster.members] for r in tr.epochs]

        differing += rosters("silent_setup") != rosters("bad_proof")
    record(5, differing == 0, f"20 scenario pairs, {differing} with differing rosters")


def test_criterion_06_seed_chain():
    nodes = [(w, BehaviorProfile()) for w in (4, 7, 2, 9, 5)]
    problems = []
    for mode in ProposerMode:
        runs = [run_scenario(nodes, 10, "1/2", rng_seed=6, backend="mock", proposer_mode=mode) for _ in range(2)]
        chain = runs[0].chain
        if len(chain) != 11 or [r.epoch for r in chain] != list(range(11)):
            problems.append(f"{mode.value}: incomplete chain")
        if [r.seed for r in chain] != [r.seed for r in runs[1].chain]:
            problems.append(f"{mode.value}: not deterministic")
        for e in range(1, 11):
            rec, prev = chain[e], chain.seed(e - 1)
            if not record_is_consistent(rec, prev, "mock"):
                problems.append(f"{mode.value}: epoch {e} inconsistent")
            if mode is not ProposerMode.HONEST and rec.seed != fallback_seed(prev, e):
                problems.append(f"{mode.value}: epoch {e} is not H(seed||e)")
            if mode is ProposerMode.HONEST and e >= 2 and rec.provenance is not Provenance.VRF_PROPOSED:
                problems.append(f"honest: epoch {e} not proposed")
    record(6, not problems, "honest/silent/corrupt proposers over 10 epochs: " + ("; ".join(problems) or "ok"))


def test_criterion_07_ecvrf_vectors():
    bad = 0
    for sk, pk, alpha, h, pi, beta in VECTORS:
        bad += ecvrf.public_key(sk) != pk
        bad += ecvrf.encode_to_curve(pk, alpha) != h
        bad += ecvrf.prove(sk, alpha) != (beta, pi)
        bad += ecvrf.verify(pk, alpha, pi) != beta
    record(7, bad == 0, f"{len(VECTORS)} ECVRF-EDWARDS25519-SHA512-TAI vectors, {bad} mismatches (prove+verify)")


def test_criterion_08_layer_uniformity():
    weights = [1 + (i * 7919) % 23 for i in range(400)]
    failing = []
    worst_p = 1.0
    for i in range(100):
        seed = hashlib.sha256(b"c8-seed" + i.to_bytes(8, "big")).digest()
        roster, _ = keyed_roster(weights, seed, "mock", tag=b"c8")
        active = assign_layers(select_active_set(roster, 1), roster, 4)
        assert len(active.selected) == 400
        layer_of = active.layer_of
        counts = [sum(1 for v in layer_of.values() if v == k) for k in range(4)]
        res = chi_square_uniform(counts, alpha=0.001)
        worst_p = min(worst_p, res.p_value)
        if not res.passes:
            failing.append(i)
    record(8, not failing, f"100 seeds x 400 nodes into 4 layers: {len(failing)} fail at alpha=0.001 (min p={worst_p:.4f})")


def test_criterion_09_performance():
    weights = sample_bandwidths(1000, rng_seed=9)
    nodes = [(w, BehaviorProfile()) for w in weights]
    tr = run_scenario(nodes, 1, "1/2", layers=3, rng_seed=9, backend="ecvrf", clients=3)
    t = tr.epochs[0].timings
    ok = t["setup_max_s"] < 1.0 and t["client_select_max_s"] < 1.0 and tr.all_agreed
    record(
        9,
        ok,
        f"1000 nodes, ECVRF: max node setup {t['setup_max_s'] * 1000:.1f} ms, "
        f"slowest of 3 cold client selects {t['client_select_max_s']:.3f} s",
    )


def test_criterion_10_collision_helper():
    mpmath.mp.dps = 60
    exact = mpmath.mpf(1000) * 999 / mpmath.power(2, 257)
    ours = collision_probability(1000, 256)
    same = f"{ours:.5e}" == mpmath.nstr(exact, 6, min_fixed=1, max_fixed=0).replace("e-", "e-") or (
        abs(ours - float(exact)) <= 5e-7 * float(exact)
    )
    rel = abs(mpmath.mpf(ours) - exact) / exact
    record(10, same and rel < 5e-7, f"collision_probability(1000, 256) = {ours:.6e}, exact {mpmath.nstr(exact, 10)}, rel err {float(rel):.1e}")
