"""Stab classifiers: is a query's ball boundary inside, outside, or across a subset.

A stab index buckets a subset by its Hamming code.  Queries look for two
kinds of witnesses, always re-verified with exact distances before use:

* a near witness, true distance at most ``(1+eps) * radius``, searched in
  buckets ordered by increasing code distance from the query's code;
* a far witness, true distance at least ``radius``, searched in decreasing
  code distance order.

The code ordering is a heuristic accelerator: verified witnesses tend to
surface within the first buckets touched.  Each phase gives up after
``scan_cap`` failed inspections, so adversarial orderings cost a bounded
scan rather than correctness (a missing witness can only widen the verdict
toward "stabbed", never falsify one).

A classifier keeps several independent indexes over the same subset and
combines their witnesses into one of three verdicts.  Soundness is exact:
``COVERED`` is only returned when no far witness was verified anywhere and
``DISJOINT`` only when no near witness was, so a verdict can never
contradict a witness in hand.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import ContractViolation, EpsParams, Seed, WeightedPointSet, as_point, sq_dists_to
from .hamming import BitCode, HammingEmbedding, code_distance, embed, embed_many, make_embedding


class Verdict(enum.Enum):
    STABBED = "stabbed"
    COVERED = "covered"
    DISJOINT = "disjoint"


@dataclass
class StabIndex:
    """One embedding draw over a subset plus its code buckets."""

    embedding: HammingEmbedding
    buckets: dict[BitCode, np.ndarray]  # code -> sorted local indices
    points: np.ndarray  # (n_subset, d), the indexed coordinates
    params: EpsParams
    scan_cap: int


@dataclass
class WitnessSet:
    """Verified witnesses from one index probe; indices are subset-local."""

    near: int | None
    far: int | None
    near_dist: float | None = None
    far_dist: float | None = None


@dataclass
class StabClassifier:
    """Independent stab indexes over one subset, combined per query."""

    copies: list[StabIndex]
    params: EpsParams


def stabbing_exponent(n: int, eps: float, beta_scale: float = 1.0) -> float:
    """Exponent ``beta`` controlling the sublinear scan cap."""
    return beta_scale * eps * eps / (19200.0 * (1.0 + eps * eps))


def scan_cap_for(n: int, eps: float, beta_scale: float = 1.0) -> int:
    """Failed-inspection budget per phase: min(n, ceil(100 * n^(1-beta)))."""
    beta = stabbing_exponent(n, eps, beta_scale)
    return min(n, math.ceil(100.0 * n ** (1.0 - beta)))


def build_stab_index(
    subset: WeightedPointSet,
    params: EpsParams,
    seed: Seed,
    beta_scale: float = 1.0,
) -> StabIndex:
    """Embed ``subset`` and group point indices by code."""
    n = len(subset)
    embedding = make_embedding(subset.dim, max(2, n), params.eps, seed, radius=params.radius)
    codes = embed_many(embedding, subset.points)
    buckets: dict[BitCode, list[int]] = {}
    for i, code in enumerate(codes):
        buckets.setdefault(code, []).append(i)
    packed = {code: np.asarray(idx, dtype=np.int64) for code, idx in buckets.items()}
    return StabIndex(
        embedding=embedding,
        buckets=packed,
        points=subset.points,
        params=params,
        scan_cap=scan_cap_for(n, params.eps, beta_scale),
    )


def _ordered_buckets(idx: StabIndex, q_code: BitCode, descending: bool) -> list[tuple[int, BitCode]]:
    pairs = [(code_distance(code, q_code), code) for code in idx.buckets]
    # equidistant buckets break ties in ascending code order in both phases
    if descending:
        pairs.sort(key=lambda t: (-t[0], t[1]))
    else:
        pairs.sort(key=lambda t: (t[0], t[1]))
    return pairs


def _scan_phase(
    idx: StabIndex,
    q_code: BitCode,
    dists_sq: np.ndarray,
    threshold_sq: float,
    want_within: bool,
    descending: bool,
) -> tuple[int | None, float | None]:
    """Walk buckets in code order until a point passes the exact test.

    ``want_within`` selects the predicate: distance^2 <= threshold_sq for the
    near phase, >= for the far phase.  Returns (index, distance) or
    (None, None) once ``scan_cap`` inspections have failed.
    """
    failures = 0
    for _dist, code in _ordered_buckets(idx, q_code, descending):
        for i in idx.buckets[code]:
            d2 = dists_sq[i]
            ok = d2 <= threshold_sq if want_within else d2 >= threshold_sq
            if ok:
                return int(i), math.sqrt(d2)
            failures += 1
            if failures >= idx.scan_cap:
                return None, None
    return None, None


def stab_witnesses(idx: StabIndex, q: np.ndarray) -> WitnessSet:
    """Probe one index for a near and a far witness, re-verified exactly.

    The two phases keep independent failure counters; a long fruitless near
    scan does not eat into the far budget.
    """
    q = as_point(q)
    if q.shape[0] != idx.points.shape[1]:
        raise ContractViolation(
            f"query dimension {q.shape[0]} does not match index dimension {idx.points.shape[1]}"
        )
    q_code = embed(idx.embedding, q)
    dists_sq = sq_dists_to(idx.points, q)
    outer = idx.params.outer_radius
    near_i, near_d = _scan_phase(idx, q_code, dists_sq, outer * outer, True, descending=False)
    r = idx.params.radius
    far_i, far_d = _scan_phase(idx, q_code, dists_sq, r * r, False, descending=True)
    if near_i is not None:
        assert near_d is not None and near_d <= outer * (1.0 + 1e-12)
    if far_i is not None:
        assert far_d is not None and far_d >= r * (1.0 - 1e-12)
    return WitnessSet(near=near_i, far=far_i, near_dist=near_d, far_dist=far_d)


def default_repetitions(n_subset: int) -> int:
    """Default number of independent copies: ceil(3 * log2(n_subset))."""
    if n_subset < 2:
        raise ContractViolation(f"classifiers need at least 2 points, got {n_subset}")
    return max(1, math.ceil(3.0 * math.log2(n_subset)))


def build_classifier(
    subset: WeightedPointSet,
    params: EpsParams,
    repetitions: int | None = None,
    seed: Seed = Seed(0),
    beta_scale: float = 1.0,
) -> StabClassifier:
    """Build ``repetitions`` independent stab indexes over ``subset``."""
    if len(subset) < 2:
        raise ContractViolation("classifiers require subsets of at least 2 points")
    if repetitions is None:
        repetitions = default_repetitions(len(subset))
    if repetitions < 1:
        raise ContractViolation(f"repetitions must be positive, got {repetitions}")
    copies = [
        build_stab_index(subset, params, seed.derive(k), beta_scale=beta_scale)
        for k in range(repetitions)
    ]
    return StabClassifier(copies=copies, params=params)


def classify(c: StabClassifier, q: np.ndarray) -> Verdict:
    """Combine witnesses across copies into a verdict.

    Both witness kinds verified somewhere: STABBED.  Near only: COVERED.
    Far only: DISJOINT.  If every copy came back empty handed (possible only
    when scan caps bite), the classifier admits ignorance and reports
    STABBED so that callers recurse instead of trusting a guess.
    """
    q = as_point(q)
    dists_sq = sq_dists_to(c.copies[0].points, q)
    outer = c.params.outer_radius
    r = c.params.radius
    found_near = False
    found_far = False
    for idx in c.copies:
        q_code = embed(idx.embedding, q)
        if not found_near:
            i, _d = _scan_phase(idx, q_code, dists_sq, outer * outer, True, descending=False)
            found_near = i is not None
        if not found_far:
            i, _d = _scan_phase(idx, q_code, dists_sq, r * r, False, descending=True)
            found_far = i is not None
        if found_near and found_far:
            return Verdict.STABBED
    if found_near:
        return Verdict.COVERED
    if found_far:
        return Verdict.DISJOINT
    return Verdict.STABBED
