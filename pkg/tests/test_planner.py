import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dcpruner import arch, planner
from dcpruner.planner import (DeltaRecord, FrontSolution, ImpairmentEntry,
                              JointScheme, build_scheme, compute_deltas,
                              compute_gpii, rank, rank_fronts)
from dcpruner.rng import SplitMix64


def sol(subnet, params, error, genes=(1,)):
    return FrontSolution(subnet, tuple(genes), params, error)


def entry(subnet, genes, params, gpii, delta_e=0.0):
    return ImpairmentEntry(
        DeltaRecord(FrontSolution(subnet, tuple(genes), params, 0.5),
                    0.0, delta_e), gpii)


class TestDeltas:
    def test_baseline_maps_to_zero(self):
        deltas = compute_deltas([sol(0, 100.0, 0.2)], (100.0, 0.2))
        assert (deltas[0].delta_p, deltas[0].delta_e) == (0.0, 0.0)

    def test_relative_changes(self):
        deltas = compute_deltas([sol(0, 20.0, 0.3)], (100.0, 0.2))
        assert deltas[0].delta_p == pytest.approx(-0.8)
        assert deltas[0].delta_e == pytest.approx(0.5)

    def test_zero_baseline_error_rejected(self):
        with pytest.raises(ValueError, match="baseline error"):
            compute_deltas([sol(0, 1.0, 0.1)], (100.0, 0.0))

    def test_zero_baseline_params_rejected(self):
        with pytest.raises(ValueError, match="params"):
            compute_deltas([sol(0, 1.0, 0.1)], (0.0, 0.2))


def hand_group():
    mk = lambda g, dp, de: DeltaRecord(FrontSolution(0, (g,), 1.0, 0.5), dp, de)
    return {0: [mk(1, -0.8, 0.10), mk(2, -0.5, 0.04), mk(3, -0.2, 0.01)]}


class TestGpii:
    def test_hand_derived_example(self):
        values = [e.gpii for e in compute_gpii(hand_group())]
        assert values[0] == pytest.approx(0.0, abs=1e-9)
        assert values[1] == pytest.approx(0.3 / 0.031, abs=1e-9)
        assert values[2] == pytest.approx(0.6 / 0.001, abs=1e-9)

    def test_min_delta_p_scores_zero(self):
        entries = compute_gpii(hand_group())
        most_pruned = min(entries, key=lambda e: e.delta.delta_p)
        assert most_pruned.gpii == 0.0

    def test_singleton_group_scores_zero(self):
        group = {0: [DeltaRecord(sol(0, 1.0, 0.5), -0.4, 0.2)]}
        assert compute_gpii(group)[0].gpii == 0.0

    def test_minima_are_per_subnet(self):
        groups = {
            0: [DeltaRecord(sol(0, 1.0, 0.5), -0.8, 0.10)],
            1: [DeltaRecord(sol(1, 1.0, 0.5), -0.2, 0.01)],
        }
        assert all(e.gpii == 0.0 for e in compute_gpii(groups))

    def test_empty_group_rejected(self):
        with pytest.raises(ValueError, match="empty front"):
            compute_gpii({0: []})

    @given(st.lists(st.tuples(st.floats(-1.0, 0.0), st.floats(0.0, 1.0)),
                    min_size=1, max_size=10))
    @settings(max_examples=100)
    def test_nonnegative_always(self, pairs):
        group = {0: [DeltaRecord(sol(0, 1.0, 0.5, (i,)), dp, de)
                     for i, (dp, de) in enumerate(pairs)]}
        assert all(e.gpii >= 0.0 for e in compute_gpii(group))

    def test_strict_trading_front_gives_ascending_gpii(self):
        # more pruned (smaller delta_p) goes with larger delta_e
        group = {0: [DeltaRecord(sol(0, 1.0, 0.5, (i,)), dp, de)
                     for i, (dp, de) in enumerate(
                         [(-0.9, 0.50), (-0.7, 0.30), (-0.4, 0.10), (-0.1, 0.02)])]}
        values = [e.gpii for e in compute_gpii(group)]
        assert values == sorted(values)
        assert values[0] == 0.0 and values[1] < values[2] < values[3]


class TestRank:
    def test_ascending_by_gpii(self):
        entries = compute_gpii(hand_group())
        shuffled = [entries[2], entries[0], entries[1]]
        assert [e.gpii for e in rank(shuffled)] == sorted(e.gpii for e in entries)

    def test_tie_break_by_delta_e(self):
        a = entry(0, (1,), 1.0, 0.0, delta_e=0.10)
        b = entry(1, (2,), 1.0, 0.0, delta_e=0.04)
        assert rank([a, b])[0] is b

    def test_descending_direction(self):
        entries = compute_gpii(hand_group())
        values = [e.gpii for e in rank(entries, "descending")]
        assert values == sorted(values, reverse=True)

    def test_unknown_direction(self):
        with pytest.raises(ValueError):
            rank([], "sideways")

    def test_empty_input(self):
        assert rank([]) == []


class TestBuildScheme:
    def toy_ranking(self):
        a1 = entry(0, (1,), 40_000.0, 0.0, delta_e=0.01)
        b1 = entry(1, (2,), 50_000.0, 0.0, delta_e=0.02)
        a2 = entry(0, (3,), 70_000.0, 5.0)
        return [a1, b1, a2]

    def test_two_subnet_walkthrough(self):
        scheme = build_scheme(self.toy_ranking(), [100_000.0, 100_000.0], 0.5)
        assert scheme.reached
        assert scheme.selections == {0: (1,), 1: (2,)}
        assert scheme.pr_params == pytest.approx(0.55)
        assert len(scheme.trace) == 2

    def test_zero_target_immediately_satisfied(self):
        scheme = build_scheme(self.toy_ranking(), [100_000.0, 100_000.0], 0.0)
        assert scheme.reached
        assert scheme.selections == {0: None, 1: None}
        assert scheme.pr_params == 0.0 and scheme.trace == ()

    def test_unreachable_target_returns_best_rate(self):
        scheme = build_scheme(self.toy_ranking(), [100_000.0, 100_000.0], 0.99)
        assert not scheme.reached
        assert scheme.pr_params == pytest.approx(0.55)
        assert scheme.selections == {0: (1,), 1: (2,)}

    def test_invalid_target(self):
        with pytest.raises(ValueError):
            build_scheme([], [100.0], 1.0)

    def test_fixed_params_dilute_rate(self):
        ranked = [entry(0, (1,), 0.0 + 40.0, 0.0)]
        no_fixed = build_scheme(ranked, [100.0], 0.0)
        with_fixed = build_scheme(ranked, [100.0], 0.9, fixed_params=100.0)
        assert no_fixed.pr_params == 0.0
        assert not with_fixed.reached
        assert with_fixed.pr_params == pytest.approx(60.0 / 200.0)

    @given(seed=st.integers(0, 10_000))
    @settings(max_examples=50, deadline=None)
    def test_random_rankings_terminate_and_are_deterministic(self, seed):
        rng = SplitMix64(seed)
        n_subnets = rng.randint(1, 4)
        baselines = [float(rng.randint(50, 200)) for _ in range(n_subnets)]
        ranked = []
        for i in range(rng.randint(1, 12)):
            subnet = rng.randint(0, n_subnets - 1)
            params = baselines[subnet] * rng.random()
            ranked.append(entry(subnet, (i,), params, rng.random() * 10,
                                delta_e=rng.random()))
        target = rng.random()
        a = build_scheme(ranked, baselines, target)
        b = build_scheme(ranked, baselines, target)
        assert a == b
        assert len(a.trace) <= len(ranked)
        assert 0.0 <= a.pr_params < 1.0
        for subnet, genes in a.selections.items():
            assert genes is None or any(
                e.solution.subnet_index == subnet and e.solution.genes == genes
                for e in ranked)


@pytest.fixture(scope="module")
def fitted():
    spec = arch.build_preset("resnet56", 10, 32)
    part = arch.partition_by_resolution(spec)
    fronts, baselines = {}, {}
    for i in range(part.num_subnets):
        bounds = arch.gene_bounds(spec, part, i)
        base_params = arch.subnet_cost(spec, part, arch.PruneCoding(i, bounds))[0]
        half = tuple(max(1, b // 2) for b in bounds)
        half_params = arch.subnet_cost(spec, part, arch.PruneCoding(i, half))[0]
        fronts[i] = [FrontSolution(i, half, float(half_params), 0.40),
                     FrontSolution(i, bounds, float(base_params), 0.30)]
        baselines[i] = (float(base_params), 0.30)
    return spec, part, rank_fronts(fronts, baselines)


class TestArchitecturePlanning:
    def test_rates_cross_check(self, fitted):
        spec, part, ranked = fitted
        scheme = planner.plan_for_architecture(spec, part, ranked, 0.3)
        assert scheme.reached
        pr_f, pr_p = arch.pruning_rates(spec, part, scheme.selections)
        assert scheme.pr_params == pytest.approx(pr_p)
        assert scheme.pr_flops == pytest.approx(pr_f)
        assert scheme.flops is not None

    def test_unreachable_flagged_not_raised(self, fitted):
        spec, part, ranked = fitted
        scheme = planner.plan_for_architecture(spec, part, ranked, 0.95)
        assert not scheme.reached
        assert 0.0 < scheme.pr_params < 0.95

    def test_replanning_is_pure(self, fitted):
        spec, part, ranked = fitted
        a = planner.plan_for_architecture(spec, part, ranked, 0.3)
        b = planner.plan_for_architecture(spec, part, ranked, 0.3)
        assert a == b


class TestSerialization:
    def test_ranking_roundtrip(self):
        fronts = {0: [sol(0, 40.0, 0.5, (2,)), sol(0, 100.0, 0.3, (4,))]}
        ranked = rank_fronts(fronts, {0: (100.0, 0.3)})
        restored = planner.ranking_from_json(planner.ranking_to_json(ranked))
        assert restored == ranked

    def test_scheme_json_shape(self):
        scheme = JointScheme({0: (3, 4), 1: None}, 120.0, 50.0, 0.4, 0.3, True,
                             (entry(0, (3, 4), 120.0, 0.0),))
        obj = planner.scheme_to_json(scheme)
        assert obj["selections"] == {"0": [3, 4], "1": None}
        assert obj["reached"] is True
        assert obj["trace"] == [{"subnet": 0, "genes": [3, 4]}]
