"""End-to-end approximate range counting index.

Build pipeline: optionally project the points with a shared Gaussian map,
optionally rescale to absorb query snapping error, build a spanning tree
(worst-case grid machinery or learned from a query sample), linearize it,
erect the balanced partition tree, and attach a stab classifier to every
internal node.  All internal structures run at the halved error ``eps/2``
so that projection and snapping slack still land answers inside the full
``eps`` sandwich.

Queries walk the tree: a COVERED node contributes its cumulative weight and
stops, a DISJOINT node stops empty, a STABBED node recurses, and leaves are
decided by one exact distance test.  The answer weight is therefore always
the exact total weight of a concrete point set sandwiched between the inner
and outer balls.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .core import (
    ContractViolation,
    EpsParams,
    GridSpec,
    Seed,
    WeightedPointSet,
    as_point,
    gaussian_projection_matrix,
    snap_to_grid,
)
from .learned import QuerySample, learned_spanning_tree, pair_stab_counts
from .ptree import PartitionTree, SpanningPath, path_to_partition_tree, tree_to_path
from .spantree import LightEdgeParams, SpanningTree, generate_grid_queries, build_low_stab_tree
from .stabber import Verdict, build_classifier, classify

_SEED_PROJECTION = 1
_SEED_TREE = 2
_SEED_CLASSIFIER = 3


@dataclass(frozen=True)
class WorstCaseSource:
    """Distribution-free tree source: grid query universe plus light edges.

    ``grid_side`` defaults to ``(eps/2) * radius / sqrt(d)`` in the working
    space; ``light`` defaults to the standard knobs for the working error.
    """

    light: LightEdgeParams | None = None
    grid_side: float | None = None


@dataclass(frozen=True)
class LearnedSource:
    """Tree source that fits edge costs to a training query sample."""

    sample: QuerySample


TreeSource = Union[WorstCaseSource, LearnedSource]


@dataclass(frozen=True)
class BuildConfig:
    eps: float
    seed: Seed
    tree_source: TreeSource
    radius: float = 1.0
    jl_enabled: bool | None = None  # None: project only when dim > 64
    jl_target_dim: int | None = None
    snap_queries: bool = False
    grid_side: float | None = None  # query snap grid, working space
    classifier_repetitions: int | None = None  # None: per-node default
    beta_scale: float = 1.0

    def __post_init__(self) -> None:
        EpsParams(self.eps, self.radius)  # validate
        if self.classifier_repetitions is not None and self.classifier_repetitions < 1:
            raise ContractViolation("classifier_repetitions must be positive")
        if self.jl_target_dim is not None and self.jl_target_dim < 1:
            raise ContractViolation("jl_target_dim must be positive")
        if self.beta_scale <= 0.0:
            raise ContractViolation("beta_scale must be positive")


@dataclass
class CountAnswer:
    weight: float
    visited_nodes: int
    verdict_counts: dict[str, int]
    member_ranges: list[tuple[int, int]] | None = None


@dataclass
class CountingIndex:
    config: BuildConfig
    params: EpsParams  # full target error
    working: EpsParams  # halved error used by classifiers and leaves
    tree: PartitionTree
    working_points: np.ndarray
    source_points: WeightedPointSet
    rescale_factor: float
    projection: np.ndarray | None
    snap_grid: GridSpec | None
    spanning_tree: SpanningTree | None = None

    def transform_query(self, q: np.ndarray) -> np.ndarray:
        """Apply the stored projection, optional snap, and rescale to a query."""
        qw = as_point(q)
        if qw.shape[0] != self.source_points.dim:
            raise ContractViolation(
                f"query dimension {qw.shape[0]} does not match data dimension {self.source_points.dim}"
            )
        if self.projection is not None:
            qw = qw @ self.projection
        if self.snap_grid is not None:
            qw = snap_to_grid(qw, self.snap_grid)
        return qw * self.rescale_factor

    def bucket_entry_count(self) -> int:
        """Total bucket entries across every classifier copy (memory audit)."""
        total = 0
        for i in self.tree.internal_indices():
            clf = self.tree.node(i).classifier
            assert clf is not None
            for copy in clf.copies:
                total += sum(len(v) for v in copy.buckets.values())
        return total


def _default_jl_dim(n: int, d: int, eps: float) -> int:
    # distortion eps/10 needs about 8 ln(n) / (eps/10)^2 dimensions
    return min(d, max(8, math.ceil(8.0 * math.log(max(2, n)) / (eps / 10.0) ** 2)))


def build_counting_index(
    pts: WeightedPointSet,
    cfg: BuildConfig,
    order_override: np.ndarray | None = None,
) -> CountingIndex:
    """Build the full index.

    ``order_override`` skips tree construction and adopts the given leaf
    order; model loading uses it to reassemble an index bit-identically
    (classifier seeds depend only on the config seed and node position).
    """
    n = len(pts)
    d = pts.dim
    params = EpsParams(cfg.eps, cfg.radius)
    working = EpsParams(cfg.eps / 2.0, cfg.radius)

    jl_on = cfg.jl_enabled if cfg.jl_enabled is not None else d > 64
    projection = None
    work = pts.points
    if jl_on:
        target = cfg.jl_target_dim or _default_jl_dim(n, d, cfg.eps)
        if target < d:
            projection = gaussian_projection_matrix(d, target, cfg.seed.derive(_SEED_PROJECTION))
            work = work @ projection
    d_work = work.shape[1]

    rescale = 1.0 / (1.0 + cfg.eps / 5.0) if cfg.snap_queries else 1.0
    work = work * rescale
    working_set = WeightedPointSet(work, pts.weights.copy())

    snap_grid = None
    if cfg.snap_queries:
        side = cfg.grid_side or cfg.eps * cfg.radius / (10.0 * math.sqrt(d_work))
        snap_grid = GridSpec(side)

    spanning: SpanningTree | None = None
    if order_override is not None:
        path = SpanningPath(np.asarray(order_override, dtype=np.int64))
        if len(path) != n:
            raise ContractViolation("stored leaf order does not match the point count")
    elif n == 1:
        path = SpanningPath(np.zeros(1, dtype=np.int64))
    else:
        spanning = _build_spanning_tree(working_set, working, cfg, projection, rescale)
        path = tree_to_path(spanning, working_set)

    tree = path_to_partition_tree(path, working_set)

    for i in tree.internal_indices():
        node = tree.node(i)
        subset = working_set.subset(tree.member_indices(i))
        node.classifier = build_classifier(
            subset,
            working,
            repetitions=cfg.classifier_repetitions,
            seed=cfg.seed.derive(_SEED_CLASSIFIER, i),
            beta_scale=cfg.beta_scale,
        )

    return CountingIndex(
        config=cfg,
        params=params,
        working=working,
        tree=tree,
        working_points=work,
        source_points=pts,
        rescale_factor=rescale,
        projection=projection,
        snap_grid=snap_grid,
        spanning_tree=spanning,
    )


def _build_spanning_tree(
    working_set: WeightedPointSet,
    working: EpsParams,
    cfg: BuildConfig,
    projection: np.ndarray | None,
    rescale: float,
) -> SpanningTree:
    source = cfg.tree_source
    if isinstance(source, WorstCaseSource):
        side = source.grid_side or working.eps * working.radius / math.sqrt(working_set.dim)
        queries = generate_grid_queries(working_set, working, GridSpec(side))
        lp = source.light or LightEdgeParams.for_eps(working.eps)
        return build_low_stab_tree(working_set, queries, working, lp, cfg.seed.derive(_SEED_TREE))
    if isinstance(source, LearnedSource):
        # training queries go through the same projection and rescale as the
        # data so the learned costs reflect the working geometry
        q = source.sample.queries
        if projection is not None:
            if q.shape[1] != projection.shape[0]:
                raise ContractViolation("training sample dimension does not match the data")
            q = q @ projection
        elif q.shape[1] != working_set.dim:
            raise ContractViolation("training sample dimension does not match the data")
        transformed = QuerySample(q * rescale, source=source.sample.source)
        counts = pair_stab_counts(working_set, transformed, working)
        return learned_spanning_tree(counts, len(working_set))
    raise ContractViolation(f"unknown tree source {type(source).__name__}")


def count(idx: CountingIndex, q: np.ndarray, verify: bool = False) -> CountAnswer:
    """Approximate weight of the ball around ``q``, by one tree walk.

    The returned weight is the exact cumulative weight of a point set S with
    (ball of radius r) <= S <= (ball of radius (1+eps) r), point containment
    up to the classifier error budget.  In verification mode the answer also
    carries the path-order ranges whose union is S.
    """
    qw = idx.transform_query(q)
    tree = idx.tree
    weight = 0.0
    visited = 0
    verdicts = {"stabbed": 0, "covered": 0, "disjoint": 0}
    ranges: list[tuple[int, int]] = []
    leaf_limit = (1.0 + idx.working.eps) * idx.working.radius

    stack = [0]
    while stack:
        i = stack.pop()
        node = tree.node(i)
        visited += 1
        if node.is_leaf:
            p = idx.working_points[tree.order[node.start]]
            if math.dist(p, qw) <= leaf_limit:
                weight += node.cum_weight
                ranges.append((node.start, node.stop))
            continue
        assert node.classifier is not None
        verdict = classify(node.classifier, qw)
        verdicts[verdict.value] += 1
        if verdict is Verdict.COVERED:
            weight += node.cum_weight
            ranges.append((node.start, node.stop))
        elif verdict is Verdict.STABBED:
            left, right = tree.children(i)
            stack.append(right)
            stack.append(left)
        # DISJOINT contributes nothing and stops the walk

    answer = CountAnswer(
        weight=weight,
        visited_nodes=visited,
        verdict_counts=verdicts,
        member_ranges=sorted(ranges) if verify else None,
    )
    if verify:
        total = sum(
            float(np.sum(idx.source_points.weights[tree.order[lo:hi]])) for lo, hi in answer.member_ranges
        )
        scale = max(1.0, float(np.sum(np.abs(idx.source_points.weights))))
        if abs(total - weight) > 1e-12 * scale:
            raise AssertionError(
                f"weight {weight} does not match the member ranges total {total}"
            )
    return answer
