import math

import numpy as np
import pytest
import scipy.stats

from forensiris.errors import CannotBalance, DegenerateInput, SampleTooSmall
from forensiris.evaluation import dprime
from forensiris.model import SampleMetadata
from forensiris.stats import (
    anova_oneway,
    balance_pmi,
    bootstrap_dprime,
    kruskal_wallis,
    regularized_incomplete_beta,
    regularized_upper_gamma,
    split_age_groups,
)

from oracles import anova_oracle, kruskal_oracle


def meta(sample_id, pmi, age=40, gender="male"):
    return SampleMetadata(sample_id=sample_id, subject_id=f"p-{sample_id}",
                          eye="left", session=1, pmi_hours=float(pmi),
                          age_years=age, gender=gender)


class TestSpecialFunctions:
    def test_beta_symmetry_identity(self):
        rng = np.random.default_rng(0)
        for trial in range(200):
            a = float(rng.uniform(0.2, 40.0))
            b = float(rng.uniform(0.2, 40.0))
            x = float(rng.uniform(0.0, 1.0))
            lhs = regularized_incomplete_beta(x, a, b)
            rhs = regularized_incomplete_beta(1.0 - x, b, a)
            assert abs(lhs + rhs - 1.0) <= 1e-10

    def test_beta_median_of_symmetric(self):
        for a in (0.5, 1.0, 3.0, 10.0):
            assert regularized_incomplete_beta(0.5, a, a) == pytest.approx(0.5, abs=1e-12)

    def test_gamma_at_zero(self):
        for s in (0.3, 1.0, 2.5, 10.0):
            assert regularized_upper_gamma(s, 0.0) == 1.0

    def test_gamma_half_is_erfc(self):
        for x in (0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0):
            assert abs(regularized_upper_gamma(0.5, x) - math.erfc(math.sqrt(x))) <= 1e-8

    def test_against_scipy_tails(self):
        rng = np.random.default_rng(1)
        for trial in range(100):
            a = float(rng.uniform(0.5, 30.0))
            b = float(rng.uniform(0.5, 30.0))
            x = float(rng.uniform(0.001, 0.999))
            assert regularized_incomplete_beta(x, a, b) == pytest.approx(
                float(scipy.stats.beta.cdf(x, a, b)), abs=1e-11)
            s = float(rng.uniform(0.5, 30.0))
            v = float(rng.uniform(0.0, 60.0))
            assert regularized_upper_gamma(s, v) == pytest.approx(
                float(scipy.stats.gamma.sf(v, s)), abs=1e-11)


class TestAnova:
    def test_identical_groups_give_f_zero_p_one(self):
        result = anova_oneway([[1.0, 2.0, 3.0], [1.0, 2.0, 3.0]])
        assert result.statistic == 0.0
        assert result.p_value == 1.0

    def test_f_one_with_equal_dfs_gives_half(self):
        # Directly check the distribution identity the ANOVA p relies on.
        from forensiris.stats import f_survival
        for d in (2, 5, 10, 40):
            assert f_survival(1.0, d, d) == pytest.approx(0.5, abs=1e-12)

    def test_textbook_instance_matches_oracle(self):
        groups = [[1.0, 2.0, 3.0, 4.0], [2.0, 3.0, 4.0, 5.0], [3.0, 4.0, 5.0, 6.0]]
        result = anova_oneway(groups)
        f_ref, p_ref = anova_oracle(groups)
        assert result.statistic == pytest.approx(f_ref, abs=1e-9)
        assert result.p_value == pytest.approx(p_ref, abs=1e-9)

    def test_random_instances_match_oracle(self):
        rng = np.random.default_rng(2)
        for trial in range(100):
            k = int(rng.integers(2, 5))
            groups = [rng.normal(rng.uniform(-1, 1), 1.0,
                                 int(rng.integers(3, 12))).tolist()
                      for _ in range(k)]
            result = anova_oneway(groups)
            f_ref, p_ref = anova_oracle(groups)
            assert result.statistic == pytest.approx(f_ref, rel=1e-9, abs=1e-9)
            assert result.p_value == pytest.approx(p_ref, rel=1e-7, abs=1e-9)

    def test_shift_invariance_and_scale_invariance(self):
        rng = np.random.default_rng(3)
        groups = [rng.normal(0, 1, 8).tolist(), rng.normal(0.5, 1, 9).tolist()]
        f0 = anova_oneway(groups).statistic
        shifted = [[x + 100.0 for x in g] for g in groups]
        scaled = [[x * 7.0 for x in g] for g in groups]
        assert anova_oneway(shifted).statistic == pytest.approx(f0, rel=1e-9)
        assert anova_oneway(scaled).statistic == pytest.approx(f0, rel=1e-9)

    def test_zero_within_variance_flagged(self):
        result = anova_oneway([[1.0, 1.0], [2.0, 2.0]])
        assert result.p_value == 0.0
        assert "degenerate_within_variance" in result.flags

    def test_all_identical_rejected(self):
        with pytest.raises(DegenerateInput):
            anova_oneway([[3.0, 3.0], [3.0, 3.0]])


class TestKruskalWallis:
    def test_all_tied(self):
        result = kruskal_wallis([[5.0, 5.0], [5.0, 5.0, 5.0]])
        assert result.statistic == 0.0
        assert result.p_value == 1.0
        assert "all_tied" in result.flags

    def test_no_tie_instance_matches_rank_formula(self):
        groups = [[1.0, 2.0], [3.0, 4.0]]
        result = kruskal_wallis(groups)
        h_ref, p_ref = kruskal_oracle(groups)
        assert result.statistic == pytest.approx(h_ref, abs=1e-12)
        assert result.statistic == pytest.approx(2.4, abs=1e-12)
        assert result.p_value == pytest.approx(p_ref, abs=1e-10)

    def test_random_instances_match_oracle(self):
        rng = np.random.default_rng(4)
        for trial in range(100):
            k = int(rng.integers(2, 5))
            groups = []
            for _ in range(k):
                vals = rng.normal(rng.uniform(-1, 1), 1.0, int(rng.integers(2, 12)))
                if rng.random() < 0.5:  # force ties
                    vals = np.round(vals, 1)
                groups.append(vals.tolist())
            if len(set(v for g in groups for v in g)) == 1:
                continue
            result = kruskal_wallis(groups)
            h_ref, p_ref = kruskal_oracle(groups)
            assert result.statistic == pytest.approx(h_ref, rel=1e-9, abs=1e-12)
            assert result.p_value == pytest.approx(p_ref, rel=1e-7, abs=1e-9)

    def test_matches_scipy(self):
        groups = [[1.2, 3.4, 2.2, 5.0], [2.1, 2.1, 4.4], [0.5, 6.6, 3.3, 3.3, 1.1]]
        result = kruskal_wallis(groups)
        ref = scipy.stats.kruskal(*groups)
        assert result.statistic == pytest.approx(float(ref.statistic), abs=1e-10)
        assert result.p_value == pytest.approx(float(ref.pvalue), abs=1e-10)

    def test_planted_separation_is_significant(self):
        rng = np.random.default_rng(5)
        a = rng.normal(0.0, 0.1, 40).tolist()
        b = rng.normal(10.0, 0.1, 40).tolist()
        assert kruskal_wallis([a, b]).p_value < 1e-6

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(6)
        groups = [rng.uniform(0, 1, 10).tolist(), rng.uniform(0.2, 1.2, 12).tolist()]
        h0 = kruskal_wallis(groups).statistic
        transformed = [[math.exp(4 * x) for x in g] for g in groups]
        assert kruskal_wallis(transformed).statistic == pytest.approx(h0, abs=1e-12)


class TestBootstrapDprime:
    def test_frac_one_reproduces_full_sample(self):
        rng = np.random.default_rng(7)
        g = rng.normal(0, 1, 50).tolist()
        i = rng.normal(2, 1, 60).tolist()
        values = bootstrap_dprime(g, i, reps=5, frac=1.0, seed=3)
        full = dprime(g, i)
        assert all(v == pytest.approx(full, rel=1e-12) for v in values)

    def test_seeded_determinism(self):
        rng = np.random.default_rng(8)
        g = rng.normal(0, 1, 100).tolist()
        i = rng.normal(1, 1, 100).tolist()
        a = bootstrap_dprime(g, i, reps=30, frac=0.5, seed=11)
        b = bootstrap_dprime(g, i, reps=30, frac=0.5, seed=11)
        assert a == b
        c = bootstrap_dprime(g, i, reps=30, frac=0.5, seed=12)
        assert a != c

    def test_population_dprime_recovered(self):
        rng = np.random.default_rng(9)
        g = rng.normal(0.0, 1.0, 10_000)
        i = rng.normal(3.0, 1.0, 10_000)
        values = bootstrap_dprime(g.tolist(), i.tolist(), reps=30, frac=0.5, seed=1)
        assert all(abs(v - 3.0) <= 0.15 for v in values)

    def test_small_sets_rejected(self):
        with pytest.raises(SampleTooSmall):
            bootstrap_dprime([1.0, 2.0], [1.0, 2.0, 3.0, 4.0])


class TestSplitAgeGroups:
    def test_quoted_bounds(self):
        records = [meta("a", 1, age=33), meta("b", 1, age=34),
                   meta("c", 1, age=99), meta("d", 1, age=1)]
        split = split_age_groups(records)
        assert [m.sample_id for m in split.groups["1-33"]] == ["a", "d"]
        assert [m.sample_id for m in split.groups["34-66"]] == ["b"]
        assert [m.sample_id for m in split.groups["67-99"]] == ["c"]

    def test_out_of_range_excluded(self):
        split = split_age_groups([meta("a", 1, age=0), meta("b", 1, age=100)])
        assert len(split.excluded) == 2
        assert all(not g for g in split.groups.values())


class TestBalancePmi:
    def test_identical_groups_unchanged(self):
        groups = {
            "m": [meta(f"m{i}", p) for i, p in enumerate([10, 20, 30, 40, 50, 60])],
            "f": [meta(f"f{i}", p) for i, p in enumerate([10, 20, 30, 40, 50, 60])],
        }
        result = balance_pmi(groups)
        assert result.removed == []
        assert len(result.groups["m"]) == 6

    def test_spec_instance_removes_outlier(self):
        groups = {
            "A": [meta("a1", 10), meta("a2", 20)],
            "B": [meta("b1", 10), meta("b2", 20), meta("b3", 90)],
        }
        result = balance_pmi(groups, min_size=2)
        assert result.removed == [("B", "b3")]
        assert result.means["A"] == pytest.approx(15.0)
        assert result.means["B"] == pytest.approx(15.0)

    def test_floor_rule(self):
        groups = {
            "A": [meta("a1", 5.0)],
            "B": [meta(f"b{i}", 100.0 + i) for i in range(100)],
        }
        with pytest.raises(CannotBalance):
            balance_pmi(groups, min_size=1)

    def test_never_removes_from_smaller_mean_group(self):
        rng = np.random.default_rng(10)
        for trial in range(100):
            n_a = int(rng.integers(6, 30))
            n_b = int(rng.integers(6, 30))
            groups = {
                "A": [meta(f"a{i}", float(rng.uniform(0, 120))) for i in range(n_a)],
                "B": [meta(f"b{i}", float(rng.uniform(40, 200))) for i in range(n_b)],
            }
            mean = lambda g: sum(m.pmi_hours for m in g) / len(g)
            try:
                result = balance_pmi(groups)
            except CannotBalance:
                continue
            assert abs(result.means["A"] - result.means["B"]) <= 0.05
            # replay removals: each must have come from the group holding the
            # larger running mean at that step
            work = {k: list(v) for k, v in groups.items()}
            for label, sid in result.removed:
                means = {k: mean(v) for k, v in work.items()}
                assert means[label] == max(means.values())
                work[label] = [m for m in work[label] if m.sample_id != sid]
