import itertools
import math
import random
from pathlib import Path

import numpy as np
import pytest

from linguograph.errors import (
    DegenerateDataError,
    EmptyGraphError,
    EmptyPartitionError,
    UndefinedStatisticError,
)
from linguograph.signals import (
    DEFAULT_PERMUTATIONS,
    ConceptGraph,
    EdgeAttributes,
    RatingSignal,
    build_concept_graph,
    cohens_d,
    edge_partition,
    mann_whitney_u,
    own_vs_other_analysis,
    permutation_pvalue,
    rayleigh_quotient,
    significance_stars,
    zscore_normalize,
)
from linguograph.signals import _exact_u_pvalue, _midranks, _normal_u_pvalue

DATA = Path(__file__).parent / "data"


def make_graph(edges, langs=None):
    attrs = {}
    for i, edge in enumerate(edges):
        key = tuple(sorted(edge))
        languages = frozenset(langs[i] if langs else {"x"})
        attrs[key] = EdgeAttributes(languages=languages, lemmas=frozenset(), deltas={})
    return ConceptGraph(attrs)


def make_signal(values, dimension="d", language="l"):
    return RatingSignal(dimension=dimension, language=language, display_name=language, values=dict(values))


# ---------------------------------------------------------------------------
# oracles
# ---------------------------------------------------------------------------


def dense_eig_rayleigh(graph, signal):
    """Independent route: explicit normalized Laplacian + eigendecomposition."""
    verts = [v for v in graph.vertices if v in signal.values]
    n = len(verts)
    idx = {v: i for i, v in enumerate(verts)}
    A = np.zeros((n, n))
    for u, v in graph.edge_list:
        if u in idx and v in idx:
            A[idx[u], idx[v]] = A[idx[v], idx[u]] = 1.0
    d = A.sum(axis=1)
    inv_sqrt = np.where(d > 0, 1.0 / np.sqrt(np.where(d > 0, d, 1.0)), 0.0)
    L = np.eye(n) - inv_sqrt[:, None] * A * inv_sqrt[None, :]
    eigenvalues, eigenvectors = np.linalg.eigh(L)
    x = np.array([signal.values[v] for v in verts])
    coeffs = eigenvectors.T @ x
    return float((eigenvalues * coeffs**2).sum() / (coeffs**2).sum()), eigenvalues


def edge_difference_rayleigh(graph, signal):
    """Second independent route: sum over edges of (x_u/sqrt(d_u) - x_v/sqrt(d_v))^2,
    plus identity-row terms for isolated vertices."""
    verts = [v for v in graph.vertices if v in signal.values]
    vset = set(verts)
    degrees = {v: 0 for v in verts}
    induced = []
    for u, v in graph.edge_list:
        if u in vset and v in vset:
            induced.append((u, v))
            degrees[u] += 1
            degrees[v] += 1
    num = 0.0
    for u, v in induced:
        num += (signal.values[u] / math.sqrt(degrees[u]) - signal.values[v] / math.sqrt(degrees[v])) ** 2
    for v in verts:
        if degrees[v] == 0:
            num += signal.values[v] ** 2
    den = sum(signal.values[v] ** 2 for v in verts)
    return num / den


def exhaustive_permutation_p(graph, signal):
    verts = sorted(v for v in graph.vertices if v in signal.values)
    xs = [signal.values[v] for v in verts]
    r_obs = rayleigh_quotient(graph, signal)
    count = 0
    total = 0
    for perm in itertools.permutations(xs):
        r = rayleigh_quotient(graph, make_signal(zip(verts, perm)))
        if r <= r_obs + 1e-12:
            count += 1
        total += 1
    return count / total


def brute_force_u_p(a, b):
    """Exact P(U <= U_obs) by enumerating every split of the pooled sample."""
    pooled = list(a) + list(b)
    ranks = _midranks(np.array(pooled, dtype=float))
    n = len(a)
    obs = sum(ranks[:n]) - n * (n + 1) / 2.0
    count = 0
    total = 0
    for combo in itertools.combinations(range(len(pooled)), n):
        u = sum(ranks[i] for i in combo) - n * (n + 1) / 2.0
        if u <= obs + 1e-9:
            count += 1
        total += 1
    return count / total


def random_graph(rng, max_vertices=50):
    n = rng.randint(2, max_vertices)
    verts = [f"v{i}" for i in range(n)]
    edges = set()
    for _ in range(rng.randint(1, 3 * n)):
        u, v = rng.sample(verts, 2)
        edges.add(tuple(sorted((u, v))))
    return make_graph(sorted(edges)), verts


# ---------------------------------------------------------------------------
# z-scores
# ---------------------------------------------------------------------------


class TestZScore:
    def test_frozen_example_1_2_3(self):
        table = zscore_normalize([("ds", "en", c, v) for c, v in [("a", 1.0), ("b", 2.0), ("c", 3.0)]])
        zs = sorted(z for *_, z in table.entries)
        expected = 1.2247448713915890  # 1 / sqrt(2/3)
        assert zs[0] == pytest.approx(-expected, abs=1e-12)
        assert zs[1] == pytest.approx(0.0, abs=1e-12)
        assert zs[2] == pytest.approx(expected, abs=1e-12)
        # two-pass oracle
        values = [1.0, 2.0, 3.0]
        mean = sum(values) / 3
        sd = math.sqrt(sum((v - mean) ** 2 for v in values) / 3)
        assert zs[2] == pytest.approx((3.0 - mean) / sd, abs=1e-12)

    def test_within_dataset_mean_zero_sd_one(self):
        rng = random.Random(5)
        rows = []
        for ds in ("d1", "d2", "d3"):
            for i in range(rng.randint(4, 30)):
                rows.append((ds, "en", f"c{i}", rng.uniform(-10, 10)))
        table = zscore_normalize(rows)
        for ds in ("d1", "d2", "d3"):
            zs = np.array([z for d, *_, z in table.entries if d == ds])
            assert abs(zs.mean()) < 1e-9
            assert abs(zs.std() - 1.0) < 1e-9

    def test_constant_dataset_raises(self):
        with pytest.raises(DegenerateDataError, match="flat"):
            zscore_normalize([("flat", "en", "a", 2.0), ("flat", "en", "b", 2.0)])

    def test_non_finite_rating_raises(self):
        with pytest.raises(DegenerateDataError):
            zscore_normalize([("d", "en", "a", float("nan")), ("d", "en", "b", 1.0)])

    def test_contributing_datasets_weighted_equally(self):
        rows = [
            ("dsA", "en", "a", 1.0), ("dsA", "en", "b", 2.0), ("dsA", "en", "m", 3.0),
            ("dsB", "en", "x", 10.0), ("dsB", "en", "y", 30.0), ("dsB", "en", "m", 20.0),
        ]
        table = zscore_normalize(rows)
        z_a = next(z for d, _, c, _, z in table.entries if d == "dsA" and c == "m")
        z_b = next(z for d, _, c, _, z in table.entries if d == "dsB" and c == "m")
        means, _ = table.mean_z_by_language()
        assert means["en"]["m"] == pytest.approx((z_a + z_b) / 2, abs=1e-12)

    def test_opposite_z_scores_average_to_zero(self):
        # same concept, two datasets, z of +x and -x must pool to 0
        rows = [
            ("dsA", "en", "m", 2.0), ("dsA", "en", "u", 1.0), ("dsA", "en", "v", 1.5),
            ("dsB", "en", "m", 1.0), ("dsB", "en", "u", 2.0), ("dsB", "en", "v", 1.5),
        ]
        table = zscore_normalize(rows)
        means, _ = table.mean_z_by_language()
        assert means["en"]["m"] == pytest.approx(0.0, abs=1e-12)


# ---------------------------------------------------------------------------
# graph construction
# ---------------------------------------------------------------------------


class TestBuildConceptGraph:
    def _table(self, concepts, language="en"):
        base = [("ds", language, c, float(i)) for i, c in enumerate(concepts)]
        return zscore_normalize(base)

    def test_mixed_tags_normalize_to_one_key(self, resolver):
        def keyer(tag):
            node = resolver.get(tag)
            return node.internal_id, node.reference_name

        rows = [
            ("ds1", "en", "a", 1.0), ("ds1", "en", "b", 2.0),
            ("ds2", "eng", "a", 3.0), ("ds2", "eng", "c", 4.0),
            ("ds3", "stan1293", "b", 1.0), ("ds3", "stan1293", "c", 2.0),
        ]
        table = zscore_normalize(rows)
        edges = [("a", "b", "en", "w"), ("b", "c", "eng", "w"), ("a", "c", "stan1293", "w")]
        graph, signals = build_concept_graph(edges, table, "valence", keyer=keyer)
        assert len(signals) == 1
        for attrs in graph.edge_data.values():
            assert len(attrs.languages) == 1

    def test_unrated_endpoint_excluded(self):
        table = self._table(["a", "b"])
        graph, _ = build_concept_graph([("a", "b", "en", "w"), ("a", "zz", "en", "w")], table, "d")
        assert graph.edge_list == [("a", "b")]

    def test_duplicate_edge_merges_language_sets(self):
        table = zscore_normalize(
            [("d1", "en", "a", 1.0), ("d1", "en", "b", 2.0), ("d2", "de", "a", 1.0), ("d2", "de", "b", 3.0)]
        )
        graph, _ = build_concept_graph([("a", "b", "en", "w1"), ("b", "a", "de", "w2")], table, "d")
        assert graph.n_edges == 1
        assert graph.edge_data[("a", "b")].languages == {"en", "de"}

    def test_self_loop_skipped_and_reported(self):
        table = self._table(["a", "b"])
        problems = []
        graph, _ = build_concept_graph([("a", "a", "en", "w"), ("a", "b", "en", "w")], table, "d", problems=problems)
        assert graph.edge_list == [("a", "b")]
        assert any("self-loop" in p.message for p in problems)

    def test_unresolvable_tag_skipped_and_reported(self, resolver):
        def keyer(tag):
            node = resolver.get(tag)
            return node.internal_id, node.reference_name

        table = zscore_normalize([("d", "en", "a", 1.0), ("d", "en", "b", 2.0)])
        problems = []
        graph, _ = build_concept_graph(
            [("a", "b", "en", "w"), ("a", "b", "zzz9", "w")], table, "d", keyer=keyer, problems=problems
        )
        assert graph.edge_data[("a", "b")].languages == {resolver.get("en").internal_id}
        assert any("zzz9" in p.message for p in problems)

    def test_empty_graph_raises(self):
        table = self._table(["a", "b"])
        with pytest.raises(EmptyGraphError):
            build_concept_graph([("x", "y", "en", "w")], table, "d")

    def test_edge_deltas_stored_per_language(self):
        rows = [("d1", "en", "a", 1.0), ("d1", "en", "b", 3.0), ("d1", "en", "c", 2.0)]
        table = zscore_normalize(rows)
        graph, signals = build_concept_graph([("a", "b", "en", "w")], table, "d")
        sig = signals["en"]
        expected = abs(sig.values["a"] - sig.values["b"])
        assert graph.edge_data[("a", "b")].deltas["en"] == pytest.approx(expected, abs=1e-12)


# ---------------------------------------------------------------------------
# Rayleigh quotient
# ---------------------------------------------------------------------------


class TestRayleigh:
    def test_path_graph_frozen_value(self):
        graph = make_graph([("a", "b"), ("b", "c")])
        signal = make_signal({"a": 1.0, "b": 0.0, "c": -1.0})
        assert rayleigh_quotient(graph, signal) == pytest.approx(1.0, abs=1e-12)
        assert edge_difference_rayleigh(graph, signal) == pytest.approx(1.0, abs=1e-12)
        dense, _ = dense_eig_rayleigh(graph, signal)
        assert dense == pytest.approx(1.0, abs=1e-9)

    def test_two_vertex_antisymmetric_maximum(self):
        graph = make_graph([("u", "v")])
        signal = make_signal({"u": 1.0, "v": -1.0})
        assert rayleigh_quotient(graph, signal) == pytest.approx(2.0, abs=1e-12)
        assert edge_difference_rayleigh(graph, signal) == pytest.approx(2.0, abs=1e-12)

    def test_sqrt_degree_vector_in_kernel(self):
        rng = random.Random(11)
        for _ in range(20):
            graph, verts = random_graph(rng, max_vertices=20)
            # connect everything so the kernel vector is exact on one component
            chain = [(verts[i], verts[i + 1]) for i in range(len(verts) - 1)]
            graph = make_graph(sorted(set(graph.edge_list) | {tuple(sorted(e)) for e in chain}))
            degrees = graph.degrees()
            signal = make_signal({v: math.sqrt(degrees[v]) for v in graph.vertices})
            assert rayleigh_quotient(graph, signal) < 1e-9

    def test_dense_oracle_agreement_100_random_graphs(self):
        rng = random.Random(23)
        for _ in range(100):
            graph, verts = random_graph(rng, max_vertices=50)
            rated = rng.sample(list(graph.vertices), rng.randint(2, len(graph.vertices)))
            values = {v: rng.uniform(-5, 5) for v in rated}
            if not any(abs(x) > 1e-9 for x in values.values()):
                values[rated[0]] = 1.0
            signal = make_signal(values)
            r = rayleigh_quotient(graph, signal)
            dense, eigenvalues = dense_eig_rayleigh(graph, signal)
            assert r == pytest.approx(dense, abs=1e-9)
            assert eigenvalues.min() > -1e-9 and eigenvalues.max() < 2 + 1e-9
            assert r == pytest.approx(edge_difference_rayleigh(graph, signal), abs=1e-9)

    def test_bounds_fuzz_10000(self):
        rng = random.Random(37)
        for _ in range(10_000):
            graph, _ = random_graph(rng, max_vertices=12)
            rated = rng.sample(list(graph.vertices), rng.randint(1, len(graph.vertices)))
            values = {v: rng.uniform(-3, 3) for v in rated}
            if not any(abs(x) > 1e-12 for x in values.values()):
                values[rated[0]] = 1.0
            r = rayleigh_quotient(graph, make_signal(values))
            assert -1e-9 <= r <= 2 + 1e-9

    def test_scale_invariance(self):
        rng = random.Random(41)
        graph, _ = random_graph(rng, max_vertices=15)
        values = {v: rng.uniform(-2, 2) or 0.5 for v in graph.vertices}
        signal = make_signal(values)
        scaled = make_signal({v: 7.3 * x for v, x in values.items()})
        assert rayleigh_quotient(graph, signal) == pytest.approx(rayleigh_quotient(graph, scaled), abs=1e-12)

    def test_isolated_vertex_contributes_identity_row(self):
        # c is rated but its only edge partner is unrated: degree 0 in the
        # induced subgraph, so it adds x^2 to both numerator and denominator.
        graph = make_graph([("a", "b"), ("c", "d")])
        signal = make_signal({"a": 1.0, "b": 1.0, "c": 2.0})
        dense, _ = dense_eig_rayleigh(graph, signal)
        got = rayleigh_quotient(graph, signal)
        assert got == pytest.approx(dense, abs=1e-12)
        assert got == pytest.approx(4.0 / 6.0, abs=1e-12)  # (0 + 2^2) / (1+1+4)

    def test_zero_signal_rejected(self):
        graph = make_graph([("a", "b")])
        with pytest.raises(UndefinedStatisticError):
            rayleigh_quotient(graph, make_signal({"a": 0.0, "b": 0.0}))

    def test_signal_disjoint_from_graph_rejected(self):
        graph = make_graph([("a", "b")])
        with pytest.raises(UndefinedStatisticError):
            rayleigh_quotient(graph, make_signal({"z": 1.0}))


# ---------------------------------------------------------------------------
# permutation test
# ---------------------------------------------------------------------------

BARBELL = [("a", "b"), ("a", "c"), ("b", "c"), ("e", "f"), ("e", "g"), ("f", "g"), ("c", "d"), ("d", "e")]
BARBELL_SMOOTH = {"a": 1.0, "b": 1.0, "c": 1.0, "d": 5.0, "e": 9.0, "f": 9.0, "g": 9.0}

ASYM_TREE = [("a", "b"), ("b", "c"), ("c", "d"), ("c", "e"), ("e", "f"), ("f", "g")]
# unique Rayleigh minimizer over all 5040 assignments of these seven values
TREE_UNIQUE_MIN = {"a": 4.0, "b": 5.0, "c": 6.0, "d": 3.5, "e": 3.0, "f": 2.0, "g": 1.0}


class TestPermutation:
    def test_default_matches_protocol(self):
        assert DEFAULT_PERMUTATIONS == 2000

    def test_seed_reproducibility(self):
        graph = make_graph(BARBELL)
        signal = make_signal(BARBELL_SMOOTH)
        p1 = permutation_pvalue(graph, signal, 500, seed=42).p_value
        p2 = permutation_pvalue(graph, signal, 500, seed=42).p_value
        assert p1 == p2

    def test_smooth_community_signal_significant(self):
        graph = make_graph(BARBELL)
        signal = make_signal(BARBELL_SMOOTH)
        exact = exhaustive_permutation_p(graph, signal)
        assert exact == pytest.approx(72 / 5040, abs=1e-12)
        assert exact < 0.05
        result = permutation_pvalue(graph, signal, 2000, seed=0)
        assert result.p_value < 0.05
        sigma = math.sqrt(exact * (1 - exact) / 2000)
        assert abs(result.p_value - exact) <= 1 / 2001 + 3 * sigma

    def test_exhaustive_agreement_at_upper_extreme(self):
        graph = make_graph([("u", "v")])
        signal = make_signal({"u": 1.0, "v": -1.0})
        exact = exhaustive_permutation_p(graph, signal)
        result = permutation_pvalue(graph, signal, 2000, seed=0)
        assert exact == 1.0
        assert result.p_value == 1.0
        assert abs(result.p_value - exact) <= 1 / 2001

    def test_exhaustive_agreement_at_unique_minimum(self):
        graph = make_graph(ASYM_TREE)
        signal = make_signal(TREE_UNIQUE_MIN)
        exact = exhaustive_permutation_p(graph, signal)
        assert exact == pytest.approx(1 / 5040, abs=1e-12)  # identity is the unique minimizer
        result = permutation_pvalue(graph, signal, 2000, seed=0)
        assert abs(result.p_value - exact) <= 1 / 2001

    def test_shuffled_signal_p_is_uniform(self):
        graph = make_graph(BARBELL)
        base = np.array(sorted(BARBELL_SMOOTH.values()))
        verts = sorted(BARBELL_SMOOTH)
        rng = np.random.default_rng(2024)
        pvalues = []
        for trial in range(500):
            shuffled = rng.permutation(base)
            signal = make_signal(dict(zip(verts, shuffled)))
            pvalues.append(permutation_pvalue(graph, signal, 199, seed=trial).p_value)
        pvalues = np.sort(pvalues)
        ecdf_hi = np.arange(1, 501) / 500
        ecdf_lo = np.arange(0, 500) / 500
        ks = max(np.max(np.abs(ecdf_hi - pvalues)), np.max(np.abs(pvalues - ecdf_lo)))
        assert ks < 0.1

    def test_rejects_bad_permutation_count(self):
        graph = make_graph([("a", "b")])
        with pytest.raises(ValueError):
            permutation_pvalue(graph, make_signal({"a": 1.0, "b": 2.0}), 0)


# ---------------------------------------------------------------------------
# edge partition
# ---------------------------------------------------------------------------


class TestEdgePartition:
    def test_basic_partition(self):
        graph = make_graph([("c1", "c2"), ("c2", "c3")], langs=[{"a"}, {"b"}])
        own, other = edge_partition(graph, "a")
        assert own == [("c1", "c2")]
        assert other == [("c2", "c3")]

    def test_all_edges_own(self):
        graph = make_graph([("c1", "c2"), ("c2", "c3")], langs=[{"a"}, {"a", "b"}])
        own, other = edge_partition(graph, "a")
        assert other == []
        assert len(own) == 2

    def test_partition_property_every_language(self):
        rng = random.Random(9)
        edges, langs = [], []
        for i in range(30):
            edges.append((f"c{i}", f"c{i+1}"))
            langs.append(set(rng.sample(["a", "b", "c", "d"], rng.randint(1, 3))))
        graph = make_graph(edges, langs=langs)
        for lang in ("a", "b", "c", "d"):
            own, other = edge_partition(graph, lang)
            assert len(own) + len(other) == graph.n_edges
            assert set(own) | set(other) == set(graph.edge_list)

    def test_absent_language_raises(self):
        graph = make_graph([("c1", "c2")], langs=[{"a"}])
        with pytest.raises(EmptyPartitionError):
            edge_partition(graph, "zz")


# ---------------------------------------------------------------------------
# Mann-Whitney U and Cohen's d
# ---------------------------------------------------------------------------


class TestMannWhitney:
    def test_frozen_example_p_one_sixth(self):
        result = mann_whitney_u([1, 2], [3, 4], alternative="less")
        assert result.statistic == 0.0
        assert result.p_value == pytest.approx(1 / 6, abs=1e-12)

    def test_identical_multisets_not_less(self):
        result = mann_whitney_u([1, 2, 3], [1, 2, 3], alternative="less")
        assert result.p_value >= 0.5

    def test_exact_matches_brute_force_all_small_sizes(self):
        rng = random.Random(17)
        for n in range(1, 9):
            for m in range(1, 9):
                for _ in range(2):
                    a = [rng.choice([0, 1, 2, 3, 4, 5]) + rng.choice([0, 0.5]) for _ in range(n)]
                    b = [rng.choice([0, 1, 2, 3, 4, 5]) + rng.choice([0, 0.5]) for _ in range(m)]
                    got = mann_whitney_u(a, b, alternative="less").p_value
                    assert got == pytest.approx(brute_force_u_p(a, b), abs=1e-12), (a, b)

    def test_exact_and_normal_paths_agree(self):
        rng = random.Random(19)
        for _ in range(10):
            a = [rng.uniform(0, 10) for _ in range(15)]
            b = [rng.uniform(2, 12) for _ in range(15)]
            pooled = np.array(a + b)
            ranks = _midranks(pooled)
            doubled = [int(round(2 * r)) for r in ranks]
            obs = sum(ranks[:15])
            exact = _exact_u_pvalue(doubled, 15, int(round(2 * obs)))
            u_obs = obs - 15 * 16 / 2.0
            approx = _normal_u_pvalue(u_obs, 15, 15, ranks)
            assert abs(exact - approx) < 0.02

    def test_scipy_cross_check_no_ties(self):
        scipy_stats = pytest.importorskip("scipy.stats")
        rng = random.Random(29)
        a = [rng.uniform(0, 1) for _ in range(8)]
        b = [rng.uniform(0.5, 1.5) for _ in range(7)]
        ours = mann_whitney_u(a, b, alternative="less")
        ref = scipy_stats.mannwhitneyu(a, b, alternative="less", method="exact")
        assert ours.statistic == pytest.approx(float(ref.statistic), abs=1e-12)
        assert ours.p_value == pytest.approx(float(ref.pvalue), abs=1e-12)

    def test_large_samples_use_normal_path(self):
        rng = random.Random(31)
        a = [rng.gauss(0, 1) for _ in range(25)]
        b = [rng.gauss(0.5, 1) for _ in range(25)]
        result = mann_whitney_u(a, b, alternative="less")
        scipy_stats = pytest.importorskip("scipy.stats")
        ref = scipy_stats.mannwhitneyu(a, b, alternative="less", method="asymptotic")
        assert result.p_value == pytest.approx(float(ref.pvalue), abs=1e-9)

    def test_empty_sample_rejected(self):
        with pytest.raises(UndefinedStatisticError):
            mann_whitney_u([], [1.0])
        with pytest.raises(ValueError):
            mann_whitney_u([1.0], [2.0], alternative="greater")


class TestCohensD:
    def test_substitution_case(self):
        # mu_own=1, mu_other=2, population sds exactly 1
        assert cohens_d([0.0, 2.0], [1.0, 3.0]) == pytest.approx(1.0, abs=1e-12)

    def test_identical_distributions(self):
        assert cohens_d([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == pytest.approx(0.0, abs=1e-12)

    def test_sign_convention(self):
        assert cohens_d([0.1, 0.2, 0.15], [0.8, 0.9, 0.85]) > 0

    def test_degenerate_inputs(self):
        with pytest.raises(UndefinedStatisticError):
            cohens_d([1.0, 1.0], [2.0, 2.0])
        with pytest.raises(UndefinedStatisticError):
            cohens_d([1.0], [2.0, 3.0])


# ---------------------------------------------------------------------------
# own- vs other-language analysis
# ---------------------------------------------------------------------------


def _own_vs_other_fixture():
    own_edges = [("o1", "o2"), ("o3", "o4"), ("o5", "o6"), ("o7", "o8")]
    other_edges = [("x1", "x2"), ("x3", "x4"), ("x5", "x6"), ("x7", "x8")]
    langs = [{"L"}] * 4 + [{"M"}] * 4
    graph = make_graph(own_edges + other_edges, langs=langs)
    values = {}
    for i, (u, v) in enumerate(own_edges):
        values[u] = float(i)
        values[v] = float(i) + 0.1
    for i, (u, v) in enumerate(other_edges):
        values[u] = float(i)
        values[v] = float(i) + 0.9
    return graph, {"L": make_signal(values, language="L")}


class TestOwnVsOther:
    def test_constructed_fixture_gives_positive_effect(self):
        graph, signals = _own_vs_other_fixture()
        rows = own_vs_other_analysis(graph, signals, "d")
        row = rows[0]
        assert row.n_own == 4 and row.n_other == 4
        assert row.mean_own == pytest.approx(0.1, abs=1e-9)
        assert row.mean_other == pytest.approx(0.9, abs=1e-9)
        assert row.cohens_d > 0
        assert row.p_value == pytest.approx(1 / 70, abs=1e-12)  # exact enumeration C(8,4)
        assert row.p_value < 0.05
        assert row.stars == "*"

    def test_symmetric_fixture_gives_zero_effect(self):
        own_edges = [("a1", "a2"), ("a3", "a4")]
        other_edges = [("b1", "b2"), ("b3", "b4")]
        graph = make_graph(own_edges + other_edges, langs=[{"L"}] * 2 + [{"M"}] * 2)
        # both partitions see the exact same delta distribution {0.5, 1.5}
        values = {"a1": 0.0, "a2": 0.5, "a3": 1.0, "a4": 2.5, "b1": 0.0, "b2": 0.5, "b3": 1.0, "b4": 2.5}
        rows = own_vs_other_analysis(graph, {"L": make_signal(values, language="L")}, "d")
        assert rows[0].cohens_d == pytest.approx(0.0, abs=1e-12)
        assert rows[0].p_value >= 0.5

    def test_too_few_pairs_skipped_with_note(self):
        graph = make_graph([("a", "b"), ("c", "d")], langs=[{"L"}, {"M"}])
        values = {"a": 0.0, "b": 1.0, "c": 0.0, "d": 1.0}
        rows = own_vs_other_analysis(graph, {"L": make_signal(values, language="L")}, "d")
        assert rows[0].p_value is None
        assert "fewer than 2" in rows[0].note

    def test_pairs_missing_ratings_are_skipped(self):
        graph = make_graph([("a", "b"), ("c", "d"), ("e", "f"), ("g", "h"), ("i", "j"), ("k", "l")],
                           langs=[{"L"}] * 3 + [{"M"}] * 3)
        values = {"a": 0.0, "b": 0.1, "c": 1.0, "d": 1.1, "g": 0.0, "h": 0.9, "i": 1.0, "j": 1.9}
        # e/f (own) and k/l (other) have no ratings at all
        rows = own_vs_other_analysis(graph, {"L": make_signal(values, language="L")}, "d")
        assert rows[0].n_own == 2 and rows[0].n_other == 2


def test_significance_stars():
    assert significance_stars(0.0005) == "***"
    assert significance_stars(0.005) == "**"
    assert significance_stars(0.04) == "*"
    assert significance_stars(0.2) == ""


def test_end_to_end_fixture_files(resolver):
    """The bundled colex TSVs produce a smooth, significant signal for both
    languages once mixed tags are pooled through the resolver."""

    def keyer(tag):
        node = resolver.get(tag)
        return node.internal_id, node.reference_name

    rating_rows = []
    for line in (DATA / "colex_ratings.tsv").read_text().splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        ds, tag, concept, value, _dim = line.split("\t")
        rating_rows.append((ds, tag, concept, float(value)))
    edge_rows = []
    for line in (DATA / "colex_edges.tsv").read_text().splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        a, b, tag, lemma = line.split("\t")
        edge_rows.append((a, b, tag, lemma))

    table = zscore_normalize(rating_rows, "valence")
    graph, signals = build_concept_graph(edge_rows, table, "valence", keyer=keyer)
    assert graph.n_vertices == 8 and graph.n_edges == 10
    assert len(signals) == 2  # German and English keys after pooling
    for signal in signals.values():
        result = permutation_pvalue(graph, signal, 2000, seed=0)
        assert result.statistic < 1.0  # smoother than random
        assert result.p_value < 0.05
