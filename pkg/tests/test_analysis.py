"""Metrics, sweeps and the design-grid optimizers."""

import numpy as np
import pytest

from bikeshare_meanfield import (
    Metrics,
    ProfitPrices,
    SystemParams,
    compute_metrics,
    evaluate_design_grid,
    optimize_profit,
    optimize_weighted,
    sweep,
    sweep_to_csv,
)
from bikeshare_meanfield.analysis import SWEEP_CSV_HEADER, grid_to_csv
from bikeshare_meanfield.errors import ConfigError, EmptyFeasibleSetError

FIG5 = SystemParams(lam=15.0, mu=8.0, gamma=0.25, omega=1, capacity_c=30,
                    capacity_k=50, n_stations=1000, delta=0.1)
SMALL = SystemParams(lam=1.0, mu=4.0, gamma=0.5, omega=1, capacity_c=3,
                     capacity_k=4, n_stations=100, delta=0.2)


class TestComputeMetrics:
    def test_uniform_vector(self):
        m = compute_metrics(np.full(5, 0.2), SMALL, ProfitPrices())
        assert m.mean_bikes == pytest.approx(2.0)
        assert m.p0 == pytest.approx(0.2)
        assert m.pK == pytest.approx(0.2)
        assert m.p_problematic == m.p0 + m.pK

    def test_profit_extremes(self):
        prices = ProfitPrices(cost_c=2.0, benefit_psi=3.0)
        all_parked = np.zeros(SMALL.capacity_k + 1)
        all_parked[SMALL.capacity_c] = 1.0  # E[Q] = C
        m = compute_metrics(all_parked, SMALL, prices)
        assert m.profit == pytest.approx(-2.0 * SMALL.capacity_c)
        all_out = np.zeros(SMALL.capacity_k + 1)
        all_out[0] = 1.0  # E[Q] = 0
        m = compute_metrics(all_out, SMALL, prices)
        assert m.profit == pytest.approx(3.0 * SMALL.capacity_c)

    def test_prices_validated(self):
        with pytest.raises(ConfigError):
            ProfitPrices(cost_c=-1.0)
        with pytest.raises(ConfigError):
            ProfitPrices(benefit_psi=float("inf"))


class TestSweep:
    def test_records_ordered_by_grid(self):
        grid = [12.0, 15.0, 18.0]
        records = sweep(FIG5, "lambda", grid, ProfitPrices())
        assert [r.value for r in records] == grid
        assert all(r.metrics is not None for r in records)
        assert all(r.params.lam == v for r, v in zip(records, grid))

    def test_p0_strictly_increasing_in_lambda(self):
        records = sweep(FIG5, "lambda", np.linspace(10, 30, 11), ProfitPrices())
        p0 = [r.metrics.p0 for r in records]
        assert all(np.diff(p0) > 0)

    def test_errors_attached_not_fatal(self):
        # the middle grid point solves to a fixed point outside the assumed
        # domain (empty fraction above 1 - delta); the sweep carries on
        records = sweep(SMALL, "lambda", [1.0, 100.0, 2.0], ProfitPrices())
        assert records[0].error is None
        assert records[1].error is not None and records[1].metrics is None
        assert records[2].error is None

    def test_unknown_parameter(self):
        with pytest.raises(ConfigError):
            sweep(SMALL, "speed", [1.0], ProfitPrices())

    def test_empty_grid(self):
        with pytest.raises(ConfigError):
            sweep(SMALL, "mu", [], ProfitPrices())

    def test_csv_format(self, tmp_path):
        records = sweep(SMALL, "lambda", [0.8, 1.0], ProfitPrices())
        path = tmp_path / "sweep.csv"
        sweep_to_csv(records, path, base=SMALL)
        lines = path.read_text().splitlines()
        assert lines[0].startswith("# params:")
        assert lines[1] == SWEEP_CSV_HEADER
        assert len(lines) == 4
        first = lines[2].split(",")
        assert first[0] == "lambda"
        assert float(first[1]) == 0.8

    def test_idempotent_output(self, tmp_path):
        records = sweep(SMALL, "lambda", [0.8, 1.0], ProfitPrices())
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        sweep_to_csv(records, p1, base=SMALL)
        sweep_to_csv(records, p2, base=SMALL)
        assert p1.read_bytes() == p2.read_bytes()


class TestOptimizers:
    SEARCH = {"capacity_c": [2, 3], "capacity_k": [4, 6], "mu": [2.0, 4.0]}

    def test_weighted_reduces_to_p0(self):
        records = evaluate_design_grid(self.SEARCH, SMALL, ProfitPrices())
        by_p0 = min((r for r in records if r.metrics), key=lambda r: r.metrics.p0)
        winner = optimize_weighted(self.SEARCH, SMALL, beta=(1.0, 0.0, 0.0))
        assert winner.params == by_p0.params

    def test_weighted_selects_pk_and_sum(self):
        records = evaluate_design_grid(self.SEARCH, SMALL, ProfitPrices())
        solved = [r for r in records if r.metrics]
        for beta, key in (((0.0, 1.0, 0.0), lambda m: m.pK),
                          ((0.0, 0.0, 1.0), lambda m: m.p_problematic)):
            winner = optimize_weighted(self.SEARCH, SMALL, beta=beta)
            assert key(winner.metrics) == min(key(r.metrics) for r in solved)

    def test_single_candidate(self):
        search = {"capacity_c": [3]}
        winner = optimize_weighted(search, SMALL, beta=(1.0, 0.0, 0.0))
        assert winner.params.capacity_c == 3

    def test_dominated_candidate_never_wins(self):
        records = evaluate_design_grid(self.SEARCH, SMALL, ProfitPrices())
        solved = [r for r in records if r.metrics]
        dominated = [
            r for r in solved
            if any(o.metrics.p0 < r.metrics.p0 and o.metrics.pK < r.metrics.pK
                   for o in solved)
        ]
        rng = np.random.default_rng(0)
        for _ in range(25):
            raw = rng.dirichlet(np.ones(3))
            winner = optimize_weighted(self.SEARCH, SMALL, beta=raw)
            assert all(winner.params != d.params for d in dominated)

    def test_zero_prices_tie_breaks_lexicographically(self):
        winner = optimize_profit(self.SEARCH, SMALL, ProfitPrices(0.0, 0.0))
        assert winner.params.capacity_c == 2
        assert winner.params.capacity_k == 4
        assert winner.params.mu == 2.0

    def test_pure_cost_minimizes_mean_bikes(self):
        records = evaluate_design_grid(self.SEARCH, SMALL, ProfitPrices(cost_c=1.0))
        solved = [r for r in records if r.metrics]
        winner = optimize_profit(self.SEARCH, SMALL, ProfitPrices(cost_c=1.0))
        assert winner.metrics.mean_bikes == min(r.metrics.mean_bikes for r in solved)

    def test_pure_benefit_maximizes_circulation(self):
        prices = ProfitPrices(benefit_psi=1.0)
        records = evaluate_design_grid(self.SEARCH, SMALL, prices)
        solved = [r for r in records if r.metrics]
        winner = optimize_profit(self.SEARCH, SMALL, prices)
        best = max(r.metrics.mean_bikes * -1 + r.params.capacity_c for r in solved)
        assert (winner.params.capacity_c - winner.metrics.mean_bikes
                == pytest.approx(best))

    def test_infeasible_candidates_skipped(self):
        # C >= K candidates are not part of the feasible set
        search = {"capacity_c": [3, 9], "capacity_k": [4]}
        records = evaluate_design_grid(search, SMALL, ProfitPrices())
        assert all(r.params.capacity_c < r.params.capacity_k for r in records)

    def test_empty_feasible_set(self):
        # gamma < mu fails for every mu in the grid
        with pytest.raises(EmptyFeasibleSetError):
            optimize_weighted({"mu": [0.1, 0.2]}, SMALL, beta=(1.0, 0.0, 0.0))

    def test_beta_validation(self):
        with pytest.raises(ConfigError):
            optimize_weighted(self.SEARCH, SMALL, beta=(0.5, 0.5, 0.5))
        with pytest.raises(ConfigError):
            optimize_weighted(self.SEARCH, SMALL, beta=(-0.5, 1.5, 0.0))

    def test_grid_csv(self, tmp_path):
        records = evaluate_design_grid(self.SEARCH, SMALL, ProfitPrices())
        path = tmp_path / "grid.csv"
        grid_to_csv(records, path)
        lines = path.read_text().splitlines()
        assert lines[0].startswith("capacity_c,capacity_k,mu,")
        assert len(lines) == len(records) + 1


class TestMetricsType:
    def test_fields(self):
        m = Metrics(p0=0.1, pK=0.2, p_problematic=0.3, mean_bikes=2.0, profit=1.0)
        assert m.p_problematic == pytest.approx(m.p0 + m.pK)
