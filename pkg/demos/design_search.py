"""Choosing station design parameters by exhaustive grid evaluation.

Two design problems over (initial bikes C, docks K, return rate mu): keep
problematic stations rare (weighted probability objective), or maximize
station profit.  Each fixed-point solve is sub-millisecond, so full grids
are evaluated exactly.
"""

import bikeshare_meanfield as bm
from bikeshare_meanfield import ProfitPrices
from bikeshare_meanfield.analysis import evaluate_design_grid, grid_to_csv

base = bm.SystemParams(lam=12.0, mu=6.0, gamma=0.5, omega=1,
                       capacity_c=20, capacity_k=40, n_stations=1000,
                       delta=0.1)
search = {
    "capacity_c": [10, 15, 20, 25, 30],
    "capacity_k": [35, 40, 45, 50],
    "mu": [2.0, 4.0, 6.0, 8.0],
}

records = evaluate_design_grid(search, base, ProfitPrices(cost_c=0.5,
                                                          benefit_psi=2.0))
grid_to_csv(records, "design_grid.csv")
print(f"evaluated {len(records)} feasible candidates -> design_grid.csv")

print("\nminimizing the problematic-station probability (weights on p0+pK):")
winner = bm.optimize_weighted(search, base, beta=(0.0, 0.0, 1.0))
print(f"  best design: C={winner.params.capacity_c}, "
      f"K={winner.params.capacity_k}, mu={winner.params.mu}")
print(f"  p0 = {winner.metrics.p0:.5f}, pK = {winner.metrics.pK:.5f}, "
      f"sum = {winner.metrics.p_problematic:.5f}")

print("\nminimizing the empty probability alone (weights on p0):")
winner = bm.optimize_weighted(search, base, beta=(1.0, 0.0, 0.0))
print(f"  best design: C={winner.params.capacity_c}, "
      f"K={winner.params.capacity_k}, mu={winner.params.mu}, "
      f"p0 = {winner.metrics.p0:.6f}")

print("\nmaximizing profit at parking cost 0.5 and rental benefit 2.0:")
winner = bm.optimize_profit(search, base, ProfitPrices(cost_c=0.5,
                                                       benefit_psi=2.0))
print(f"  best design: C={winner.params.capacity_c}, "
      f"K={winner.params.capacity_k}, mu={winner.params.mu}")
print(f"  E[Q] = {winner.metrics.mean_bikes:.3f}, "
      f"profit = {winner.metrics.profit:.3f}")
