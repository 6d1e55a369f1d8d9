"""Colexification graph-signal statistics.

Concept graphs carry per-edge language sets; psycholinguistic ratings become
z-scored graph signals. Smoothness is the Rayleigh quotient of the symmetric
normalized Laplacian (I - D^(-1/2) A D^(-1/2), eigenvalues in [0, 2]), with
significance from permutation nulls, and own- vs other-language edge
comparisons use a one-sided Mann-Whitney U plus Cohen's d.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

import numpy as np

from .errors import (
    DegenerateDataError,
    EmptyGraphError,
    EmptyPartitionError,
    UndefinedStatisticError,
)

#: Permutation count used throughout unless a caller overrides it.
DEFAULT_PERMUTATIONS = 2000

#: (threshold, marker) pairs for significance stars.
STAR_THRESHOLDS = ((0.001, "***"), (0.01, "**"), (0.05, "*"))


def significance_stars(p_value: float) -> str:
    for threshold, marker in STAR_THRESHOLDS:
        if p_value < threshold:
            return marker
    return ""


# ---------------------------------------------------------------------------
# Rating normalization
# ---------------------------------------------------------------------------


@dataclass
class ZScoreTable:
    """Per-dataset z-scores and the bookkeeping to pool them per language.

    ``entries`` holds (dataset_id, language_tag, concept, raw, z); dataset
    means use the population standard deviation, so within each dataset the
    z-scores have mean 0 and population sd 1.
    """

    dimension: str
    dataset_means: dict[str, float] = field(default_factory=dict)
    dataset_sds: dict[str, float] = field(default_factory=dict)
    entries: list[tuple[str, str, str, float, float]] = field(default_factory=list)

    def mean_z_by_language(
        self, keyer: Optional[Callable[[str], tuple[str, str]]] = None
    ) -> tuple[dict[str, dict[str, float]], dict[str, str]]:
        """Mean z per (language, concept), each contributing dataset weighted
        equally. ``keyer`` maps raw language tags to a canonical key and a
        display name; by default tags are taken verbatim."""
        display: dict[str, str] = {}
        per_dataset: dict[tuple[str, str], dict[str, list[float]]] = {}
        for dataset_id, tag, concept, _raw, z in self.entries:
            if keyer is None:
                key, name = tag, tag
            else:
                key, name = keyer(tag)
            display[key] = name
            per_dataset.setdefault((key, concept), {}).setdefault(dataset_id, []).append(z)
        means: dict[str, dict[str, float]] = {}
        for (key, concept), by_dataset in per_dataset.items():
            dataset_means = [sum(values) / len(values) for _, values in sorted(by_dataset.items())]
            means.setdefault(key, {})[concept] = sum(dataset_means) / len(dataset_means)
        return means, display


def zscore_normalize(rows: Iterable[tuple[str, str, str, float]], dimension: str = "") -> ZScoreTable:
    """Z-score raw ratings within each dataset to put them on a common scale.

    ``rows`` are (dataset_id, language_tag, concept, raw_rating). Duplicate
    ratings of one concept within one dataset/language are averaged first.
    A dataset with zero variance cannot be placed on the common scale.
    """
    grouped: dict[str, dict[tuple[str, str], list[float]]] = {}
    for dataset_id, tag, concept, value in rows:
        value = float(value)
        if not math.isfinite(value):
            raise DegenerateDataError(f"dataset {dataset_id!r}: non-finite rating for {concept!r}")
        grouped.setdefault(dataset_id, {}).setdefault((tag, concept), []).append(value)

    table = ZScoreTable(dimension=dimension)
    for dataset_id in sorted(grouped):
        deduped = {key: sum(vals) / len(vals) for key, vals in grouped[dataset_id].items()}
        values = np.array(list(deduped.values()), dtype=float)
        mean = float(values.mean())
        sd = float(values.std())  # population sd
        if sd == 0.0:
            raise DegenerateDataError(f"dataset {dataset_id!r} has zero variance; cannot z-score")
        table.dataset_means[dataset_id] = mean
        table.dataset_sds[dataset_id] = sd
        for (tag, concept), raw in sorted(deduped.items()):
            table.entries.append((dataset_id, tag, concept, raw, (raw - mean) / sd))
    return table


# ---------------------------------------------------------------------------
# Concept graph
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EdgeAttributes:
    languages: frozenset[str]
    lemmas: frozenset[str]
    #: |z_u - z_v| per language for which both endpoints are rated
    deltas: dict[str, float]


@dataclass(frozen=True)
class RatingSignal:
    dimension: str
    language: str
    display_name: str
    values: dict[str, float]  # concept -> mean z-score


class ConceptGraph:
    """Undirected, unweighted colexification topology over rated concepts."""

    def __init__(self, edges: dict[tuple[str, str], EdgeAttributes]):
        self.edge_data = edges
        self.edge_list: list[tuple[str, str]] = sorted(edges)
        vertex_set = {v for edge in self.edge_list for v in edge}
        self.vertices: tuple[str, ...] = tuple(sorted(vertex_set))
        self.vertex_index = {v: i for i, v in enumerate(self.vertices)}

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edge_list)

    def degrees(self) -> dict[str, int]:
        out = {v: 0 for v in self.vertices}
        for u, v in self.edge_list:
            out[u] += 1
            out[v] += 1
        return out


@dataclass(frozen=True)
class GraphBuildProblem:
    row: int
    message: str


def build_concept_graph(
    edge_rows: Iterable[tuple[str, str, str, str]],
    table: ZScoreTable,
    dimension: str,
    keyer: Optional[Callable[[str], tuple[str, str]]] = None,
    problems: Optional[list[GraphBuildProblem]] = None,
) -> tuple[ConceptGraph, dict[str, RatingSignal]]:
    """Build the colexification graph restricted to rated concept pairs.

    ``edge_rows`` are (concept_a, concept_b, language_tag, lemma); language
    tags are normalized through ``keyer`` so that mixed tag conventions land
    on one keyspace. Rows whose tag does not resolve are skipped and
    reported. Edges keep the set of witnessing languages and lemmas plus the
    per-language |z| difference of their endpoints.
    """
    means, display = table.mean_z_by_language(keyer)
    rated_concepts = {c for by_concept in means.values() for c in by_concept}

    tag_cache: dict[str, Optional[tuple[str, str]]] = {}

    def resolve_tag(tag: str) -> Optional[tuple[str, str]]:
        if tag not in tag_cache:
            if keyer is None:
                tag_cache[tag] = (tag, tag)
            else:
                try:
                    tag_cache[tag] = keyer(tag)
                except Exception as exc:  # resolver lookups raise NotFound etc.
                    tag_cache[tag] = None
                    if problems is not None:
                        problems.append(GraphBuildProblem(row=-1, message=f"language tag {tag!r}: {exc}"))
        return tag_cache[tag]

    accumulator: dict[tuple[str, str], tuple[set[str], set[str]]] = {}
    for row_no, (concept_a, concept_b, tag, lemma) in enumerate(edge_rows, start=1):
        if concept_a == concept_b:
            if problems is not None:
                problems.append(GraphBuildProblem(row=row_no, message=f"self-loop on {concept_a!r} skipped"))
            continue
        resolved = resolve_tag(tag)
        if resolved is None:
            continue
        key, _name = resolved
        if concept_a not in rated_concepts or concept_b not in rated_concepts:
            continue
        edge = (concept_a, concept_b) if concept_a < concept_b else (concept_b, concept_a)
        languages, lemmas = accumulator.setdefault(edge, (set(), set()))
        languages.add(key)
        if lemma:
            lemmas.add(lemma)

    if not accumulator:
        raise EmptyGraphError(f"no colexification edges remain for dimension {dimension!r}")

    edges: dict[tuple[str, str], EdgeAttributes] = {}
    for (u, v), (languages, lemmas) in accumulator.items():
        deltas = {}
        for key in sorted(languages):
            by_concept = means.get(key, {})
            if u in by_concept and v in by_concept:
                deltas[key] = abs(by_concept[u] - by_concept[v])
        edges[(u, v)] = EdgeAttributes(languages=frozenset(languages), lemmas=frozenset(lemmas), deltas=deltas)
    graph = ConceptGraph(edges)

    signals: dict[str, RatingSignal] = {}
    vertex_set = set(graph.vertices)
    for key in sorted(means):
        values = {c: z for c, z in means[key].items() if c in vertex_set}
        if values:
            signals[key] = RatingSignal(dimension=dimension, language=key, display_name=display[key], values=values)
    return graph, signals


# ---------------------------------------------------------------------------
# Smoothness
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StatResult:
    statistic: float
    p_value: Optional[float] = None
    n_permutations: Optional[int] = None
    sample_sizes: Optional[tuple[int, int]] = None
    mean_own: Optional[float] = None
    mean_other: Optional[float] = None
    sd_own: Optional[float] = None
    sd_other: Optional[float] = None
    seed: Optional[int] = None

    def __post_init__(self):
        if self.p_value is not None and not (0.0 <= self.p_value <= 1.0):
            raise ValueError(f"p-value {self.p_value} outside [0, 1]")


def _induced_arrays(graph: ConceptGraph, signal: RatingSignal):
    """Vertices of the induced subgraph on rated concepts, the signal vector,
    edge endpoint indexes, and per-edge 1/sqrt(d_u d_v) weights."""
    verts = [v for v in graph.vertices if v in signal.values]
    if not verts:
        raise UndefinedStatisticError("signal rates no vertex of the graph")
    index = {v: i for i, v in enumerate(verts)}
    x = np.array([signal.values[v] for v in verts], dtype=float)
    edge_u, edge_v = [], []
    degrees = np.zeros(len(verts), dtype=float)
    for u, v in graph.edge_list:
        iu, iv = index.get(u), index.get(v)
        if iu is None or iv is None:
            continue
        edge_u.append(iu)
        edge_v.append(iv)
        degrees[iu] += 1
        degrees[iv] += 1
    inv_sqrt = np.zeros(len(verts), dtype=float)
    positive = degrees > 0
    inv_sqrt[positive] = 1.0 / np.sqrt(degrees[positive])
    edge_u = np.array(edge_u, dtype=int)
    edge_v = np.array(edge_v, dtype=int)
    weights = inv_sqrt[edge_u] * inv_sqrt[edge_v] if len(edge_u) else np.zeros(0)
    return x, edge_u, edge_v, weights


def _quotient(x: np.ndarray, edge_u, edge_v, weights) -> float:
    # x'Lx = sum_i x_i^2 - 2 sum_(u,v) x_u x_v / sqrt(d_u d_v); degree-zero
    # vertices fall out as identity rows.
    total = float(x @ x)
    cross = float((x[edge_u] * x[edge_v]) @ weights) if len(edge_u) else 0.0
    return (total - 2.0 * cross) / total


def rayleigh_quotient(graph: ConceptGraph, signal: RatingSignal) -> float:
    """Smoothness of ``signal`` over the induced subgraph of rated concepts.

    Always within [0, 2]; 0 means perfectly smooth, values below 1 are
    smoother than random, 2 is maximally oscillating.
    """
    x, edge_u, edge_v, weights = _induced_arrays(graph, signal)
    if not np.any(x):
        raise UndefinedStatisticError("Rayleigh quotient of the zero signal is undefined")
    return _quotient(x, edge_u, edge_v, weights)


def permutation_pvalue(
    graph: ConceptGraph,
    signal: RatingSignal,
    n_permutations: int = DEFAULT_PERMUTATIONS,
    seed: int = 0,
) -> StatResult:
    """One-sided permutation test for smoothness.

    The null shuffles the rating values uniformly across the rated (induced)
    vertex set; p = (1 + #{R_perm <= R_obs}) / (n + 1), so a finite test never
    reports zero. The seed pins the shuffle sequence bit-for-bit.
    """
    if n_permutations < 1:
        raise ValueError("n_permutations must be >= 1")
    x, edge_u, edge_v, weights = _induced_arrays(graph, signal)
    if not np.any(x):
        raise UndefinedStatisticError("Rayleigh quotient of the zero signal is undefined")
    r_obs = _quotient(x, edge_u, edge_v, weights)

    rng = np.random.default_rng(seed)
    total = float(x @ x)
    count = 0
    batch = 512
    remaining = n_permutations
    while remaining > 0:
        size = min(batch, remaining)
        order = np.argsort(rng.random((size, len(x))), axis=1)
        perms = x[order]
        cross = (perms[:, edge_u] * perms[:, edge_v]) @ weights if len(edge_u) else np.zeros(size)
        r_perm = (total - 2.0 * cross) / total
        count += int(np.sum(r_perm <= r_obs + 1e-12))
        remaining -= size
    p = (1 + count) / (n_permutations + 1)
    return StatResult(statistic=r_obs, p_value=p, n_permutations=n_permutations, seed=seed)


# ---------------------------------------------------------------------------
# Own- vs other-language comparison
# ---------------------------------------------------------------------------


def edge_partition(graph: ConceptGraph, language: str) -> tuple[list[tuple[str, str]], list[tuple[str, str]]]:
    """Split edges into those colexified in ``language`` and the rest."""
    own, other = [], []
    for edge in graph.edge_list:
        if language in graph.edge_data[edge].languages:
            own.append(edge)
        else:
            other.append(edge)
    if not own:
        raise EmptyPartitionError(f"language {language!r} appears in no edge")
    return own, other


def _midranks(pooled: np.ndarray) -> np.ndarray:
    order = np.argsort(pooled, kind="stable")
    ranks = np.empty(len(pooled), dtype=float)
    i = 0
    while i < len(pooled):
        j = i
        while j + 1 < len(pooled) and pooled[order[j + 1]] == pooled[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _exact_u_pvalue(doubled_ranks: list[int], n_a: int, doubled_rank_sum_obs: int) -> float:
    """P(rank-sum of a size-n_a subset <= observed) over all subsets.

    Exact permutation distribution with ties, via a counting DP over doubled
    midranks (doubling keeps everything integral).
    """
    total = sum(doubled_ranks)
    # counts[k][s] = number of k-subsets with doubled rank sum s.
    # Counts stay below 2^53 for the sizes this path handles, so float64 is exact.
    counts = np.zeros((n_a + 1, total + 1), dtype=float)
    counts[0][0] = 1.0
    for rank in doubled_ranks:
        for k in range(n_a, 0, -1):
            counts[k, rank:] += counts[k - 1, : total + 1 - rank]
    favourable = float(counts[n_a][: min(doubled_rank_sum_obs, total) + 1].sum())
    return favourable / math.comb(len(doubled_ranks), n_a)


def _normal_u_pvalue(u_obs: float, n_a: int, n_b: int, ranks: np.ndarray) -> float:
    n = len(ranks)
    mean_u = n_a * n_b / 2.0
    _, tie_counts = np.unique(ranks, return_counts=True)
    tie_term = float(np.sum(tie_counts**3 - tie_counts))
    variance = n_a * n_b / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
    if variance <= 0:
        return 1.0 if u_obs >= mean_u else 0.0
    z = (u_obs + 0.5 - mean_u) / math.sqrt(variance)
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def mann_whitney_u(sample_a, sample_b, alternative: str = "less") -> StatResult:
    """One-sided Mann-Whitney U test of "a stochastically less than b".

    Midranks handle ties. Small problems (n*m <= 400) use the exact
    permutation distribution of U; larger ones the tie-corrected normal
    approximation with continuity correction.
    """
    if alternative != "less":
        raise ValueError("only the 'less' alternative is supported")
    a = np.asarray(list(sample_a), dtype=float)
    b = np.asarray(list(sample_b), dtype=float)
    if len(a) == 0 or len(b) == 0:
        raise UndefinedStatisticError("Mann-Whitney U requires two non-empty samples")
    pooled = np.concatenate([a, b])
    ranks = _midranks(pooled)
    rank_sum_a = float(ranks[: len(a)].sum())
    u_a = rank_sum_a - len(a) * (len(a) + 1) / 2.0

    if len(a) * len(b) <= 400:
        doubled = [int(round(2 * r)) for r in ranks]
        doubled_obs = int(round(2 * rank_sum_a))
        p = _exact_u_pvalue(doubled, len(a), doubled_obs)
    else:
        p = _normal_u_pvalue(u_a, len(a), len(b), ranks)
    return StatResult(statistic=u_a, p_value=min(max(p, 0.0), 1.0), sample_sizes=(len(a), len(b)))


def cohens_d(delta_own, delta_other) -> float:
    """Standardized effect size (mu_other - mu_own) / sqrt((sd_other^2 + sd_own^2)/2).

    Positive when own-language pairs are more similar (smaller deltas);
    population standard deviations.
    """
    own = np.asarray(list(delta_own), dtype=float)
    other = np.asarray(list(delta_other), dtype=float)
    if len(own) < 2 or len(other) < 2:
        raise UndefinedStatisticError("Cohen's d needs at least two values per side")
    pooled = math.sqrt((float(other.std()) ** 2 + float(own.std()) ** 2) / 2.0)
    if pooled == 0.0:
        raise UndefinedStatisticError("Cohen's d undefined: both sides have zero variance")
    return (float(other.mean()) - float(own.mean())) / pooled


@dataclass(frozen=True)
class OwnVsOtherRow:
    language: str
    display_name: str
    n_own: int
    n_other: int
    mean_own: Optional[float]
    mean_other: Optional[float]
    u_statistic: Optional[float]
    p_value: Optional[float]
    cohens_d: Optional[float]
    note: str = ""

    @property
    def stars(self) -> str:
        return significance_stars(self.p_value) if self.p_value is not None else ""


def own_vs_other_analysis(
    graph: ConceptGraph, signals: dict[str, RatingSignal], dimension: str
) -> list[OwnVsOtherRow]:
    """Per language: are own-language colexified pairs closer in rating than
    pairs colexified only elsewhere? One row per language, skipping languages
    with fewer than two usable pairs on either side."""
    rows: list[OwnVsOtherRow] = []
    for key in sorted(signals, key=lambda k: (signals[k].display_name, k)):
        signal = signals[key]
        if signal.dimension != dimension:
            continue
        try:
            own_edges, other_edges = edge_partition(graph, key)
        except EmptyPartitionError:
            rows.append(OwnVsOtherRow(key, signal.display_name, 0, 0, None, None, None, None, None, "no own-language edges"))
            continue

        def deltas(edges) -> list[float]:
            out = []
            for u, v in edges:
                if u in signal.values and v in signal.values:
                    out.append(abs(signal.values[u] - signal.values[v]))
            return out

        own = deltas(own_edges)
        other = deltas(other_edges)
        if len(own) < 2 or len(other) < 2:
            rows.append(
                OwnVsOtherRow(
                    key, signal.display_name, len(own), len(other), None, None, None, None, None,
                    "fewer than 2 usable pairs on one side",
                )
            )
            continue
        u_result = mann_whitney_u(own, other, alternative="less")
        effect = cohens_d(own, other)
        rows.append(
            OwnVsOtherRow(
                language=key,
                display_name=signal.display_name,
                n_own=len(own),
                n_other=len(other),
                mean_own=float(np.mean(own)),
                mean_other=float(np.mean(other)),
                u_statistic=u_result.statistic,
                p_value=u_result.p_value,
                cohens_d=effect,
            )
        )
    return rows
