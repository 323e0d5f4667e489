"""Statistics for validating the selection against a trusted-party oracle."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable, Hashable, Iterable, Sequence

import numpy as np
from scipy import stats as _sp

from .selection import parse_tau

# Log-normal shape; samples are rescaled to DEFAULT_MEAN per node so that
# 1000 nodes total ~9970 bandwidth units.
DEFAULT_MU = 1.798
DEFAULT_SIGMA = 1.0
DEFAULT_MEAN = 9.97

# Asymptotic two-sample KS coefficients c(alpha).
KS_COEFFICIENTS = {0.10: 1.224, 0.05: 1.358, 0.025: 1.480, 0.01: 1.628, 0.005: 1.731, 0.001: 1.949}


def sample_bandwidths(
    n: int,
    source: str | Path = "parametric",
    rng_seed: int | None = None,
    mu: float = DEFAULT_MU,
    sigma: float = DEFAULT_SIGMA,
    target_mean: float | None = DEFAULT_MEAN,
) -> list[int]:
    """Positive integer weights, either log-normal or read from a CSV column.

    Parametric samples are scaled to ``target_mean`` before rounding (pass
    None to keep the raw log-normal draw). CSV input takes the first column of each row (a non-numeric header row is
    skipped) and must supply at least ``n`` values.
    """
    if n < 1:
        raise ValueError("need at least one node")
    if str(source) == "parametric":
        rng = np.random.default_rng(rng_seed)
        raw = rng.lognormal(mu, sigma, n)
        if target_mean is not None:
            raw *= target_mean / raw.mean()
        return [max(1, int(v)) for v in np.rint(raw)]
    weights = read_weights_csv(source)
    if len(weights) < n:
        raise ValueError(f"{source}: wanted {n} weights, found {len(weights)}")
    return weights[:n]


def read_weights_csv(path: str | Path) -> list[int]:
    weights = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), 1):
            if not row or not row[0].strip():
                continue
            cell = row[0].strip()
            try:
                value = Fraction(cell)
            except ValueError:
                if lineno == 1:
                    continue
                raise ValueError(f"{path}:{lineno}: not a number: {cell!r}") from None
            if value.denominator != 1 or value < 1:
                raise ValueError(f"{path}:{lineno}: weights must be positive integers, got {cell}")
            weights.append(int(value))
    if not weights:
        raise ValueError(f"{path}: no weights found")
    return weights


def simple_weighted_select(weights: Sequence[int], tau, rng: np.random.Generator) -> list[int]:
    """Trusted-party baseline: weighted sampling without replacement up to tau.

    Draw order comes from exponential races (key_i = E_i / w_i, ascending),
    which has the same law as repeatedly drawing one remaining node with
    probability proportional to its weight.
    """
    if len(weights) == 0:
        raise ValueError("no weights")
    tau = parse_tau(tau)
    w = np.asarray(weights, dtype=np.int64)
    order = np.argsort(rng.exponential(size=len(w)) / w, kind="stable")
    cum = np.cumsum(w[order])
    need = tau.numerator * int(cum[-1])
    k = int(np.searchsorted(cum * tau.denominator, need, side="left"))
    return order[: k + 1].tolist()


def uniform_select(weights: Sequence[int], tau, rng: np.random.Generator) -> list[int]:
    """Weight-blind selection up to tau (negative control only)."""
    tau = parse_tau(tau)
    w = np.asarray(weights, dtype=np.int64)
    order = rng.permutation(len(w))
    cum = np.cumsum(w[order])
    k = int(np.searchsorted(cum * tau.denominator, tau.numerator * int(cum[-1]), side="left"))
    return order[: k + 1].tolist()


@dataclass
class FrequencyProfile:
    node_ids: list
    trials: int
    counts: list[int]
    subset_sizes: list[int]

    @property
    def frequencies(self) -> list[float]:
        return [c / self.trials for c in self.counts]

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["node", "selected_count", "trials", "frequency"])
            for nid, c in zip(self.node_ids, self.counts):
                label = nid.hex() if isinstance(nid, bytes) else nid
                out.writerow([label, c, self.trials, f"{c / self.trials:.6f}"])


def selection_frequencies(
    run: Callable[[int], Iterable[Hashable]], trials: int, node_ids: Sequence[Hashable]
) -> FrequencyProfile:
    """Count how often each node lands in ``run(trial)`` over ``trials`` trials."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    position = {nid: i for i, nid in enumerate(node_ids)}
    counts = [0] * len(node_ids)
    sizes = []
    for trial in range(trials):
        subset = list(run(trial))
        sizes.append(len(subset))
        for nid in subset:
            counts[position[nid]] += 1
    return FrequencyProfile(list(node_ids), trials, counts, sizes)


def merge_profiles(a: FrequencyProfile, b: FrequencyProfile) -> FrequencyProfile:
    """Combine two profiles over the same nodes (order-independent)."""
    if a.node_ids != b.node_ids:
        raise ValueError("profiles cover different nodes")
    return FrequencyProfile(
        a.node_ids, a.trials + b.trials, [x + y for x, y in zip(a.counts, b.counts)], a.subset_sizes + b.subset_sizes
    )


@dataclass(frozen=True)
class KSResult:
    statistic: float
    critical_value: float
    accept: bool
    n: int
    m: int
    alpha: float


def ks_coefficient(alpha: float) -> float:
    for a, c in KS_COEFFICIENTS.items():
        if math.isclose(alpha, a):
            return c
    return math.sqrt(-math.log(alpha / 2) / 2)


def ks_critical_value(n: int, m: int, alpha: float = 0.05) -> float:
    return ks_coefficient(alpha) * math.sqrt((n + m) / (n * m))


def ks_two_sample(a: Sequence[float], b: Sequence[float], alpha: float = 0.05) -> KSResult:
    """Two-sample KS: D = sup |F_a - F_b|, accepted when D <= c(alpha) sqrt((n+m)/nm)."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    n, m = len(a), len(b)
    if n == 0 or m == 0:
        raise ValueError("KS test needs two non-empty samples")
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / n
    fb = np.searchsorted(b, grid, side="right") / m
    d = float(np.max(np.abs(fa - fb)))
    crit = ks_critical_value(n, m, alpha)
    return KSResult(d, crit, d <= crit, n, m, alpha)


def collision_probability(m: int, n_bits: int) -> float:
    """Birthday bound m(m-1) / 2^(n+1) for m commitments of n bits."""
    if m < 2:
        return 0.0
    return math.exp(math.log(m) + math.log(m - 1) - (n_bits + 1) * math.log(2))


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    dof: int
    critical_value: float
    p_value: float
    passes: bool


def chi_square_uniform(counts: Sequence[int], alpha: float = 0.001) -> ChiSquareResult:
    """Pearson chi-square against equal bucket probabilities."""
    k = len(counts)
    total = sum(counts)
    if k < 2 or total < 1:
        raise ValueError("need at least two buckets and one observation")
    expected = total / k
    stat = sum((c - expected) ** 2 for c in counts) / expected
    crit = float(_sp.chi2.ppf(1 - alpha, k - 1))
    p = float(_sp.chi2.sf(stat, k - 1))
    return ChiSquareResult(stat, k - 1, crit, p, stat <= crit)


def two_proportion_test(x1: int, n1: int, x2: int, n2: int) -> tuple[float, float]:
    """Pooled two-proportion z test; returns (z, two-sided p)."""
    p1, p2 = x1 / n1, x2 / n2
    pooled = (x1 + x2) / (n1 + n2)
    se = math.sqrt(pooled * (1 - pooled) * (1 / n1 + 1 / n2))
    if se == 0:
        return 0.0, 1.0
    z = (p1 - p2) / se
    return z, math.erfc(abs(z) / math.sqrt(2))


def write_cdf(values: Sequence[float], path: str | Path) -> None:
    """Two-column (x, F(x)) empirical CDF for external plotting."""
    xs = np.sort(np.asarray(values, dtype=float))
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["x", "cdf"])
        for i, x in enumerate(xs, 1):
            out.writerow([f"{x:.6f}", f"{i / len(xs):.6f}"])
