"""
Three ways to the same best response
====================================

A three-hour toy market solved with the big-M model, the block-fill model,
their HiGHS versions, and plain enumeration.
"""

from storage_cournot.best_response import (
    BestResponseProblem,
    brute_force_best_response,
    solve_method1,
    solve_method2,
)
from storage_cournot.model import DemandCurve, StorageParams

curves = [
    DemandCurve([120.0, 40.0, 10.0], [30.0, 60.0, 90.0], hour=1),
    DemandCurve([150.0, 60.0, 0.0], [40.0, 70.0, 100.0], hour=2),
    DemandCurve([200.0, 90.0, 20.0], [50.0, 80.0, 95.0], hour=3),
]
player = StorageParams(1, q_max=20.0, e_max=40.0, eta=0.9, oc=1.0, epsilon=0.05, n_levels=2)
# rivals charge 10 MWh in the first hour
prob = BestResponseProblem(player, curves, res=[75.0, 65.0, 45.0], exo_charge=[10.0, 0.0, 0.0],
                           exo_discharge=[0.0, 0.0, 0.0])

for name, solve in [
    ("method 1 (lattice)", lambda p: solve_method1(p)),
    ("method 1 (HiGHS)", lambda p: solve_method1(p, backend="milp")),
    ("method 2 (lattice)", lambda p: solve_method2(p)),
    ("method 2 (HiGHS)", lambda p: solve_method2(p, backend="milp")),
    ("enumeration", brute_force_best_response),
]:
    sol = solve(prob)
    print(f"{name:<20} profit {sol.profit:9.2f}  levels {sol.schedule.levels.tolist()}  prices {sol.prices.tolist()}")

#%%
# Levels are signed: -i charges i steps, +i discharges i steps.
