"""
One storage owner versus two
============================

Size the winter fleet from residual demand, hand it to a single owner,
then split it 1/3 : 2/3 between two owners and compare the cleared prices.
"""

import numpy as np

from storage_cournot.experiments import RunConfig, build_scenario, load_market
from storage_cournot.equilibrium import find_nash
from storage_cournot.synthetic import DATA_DIR

#%%
# The bundled configuration points at the synthetic winter files.

cfg = RunConfig.load(DATA_DIR / "winter.json")
market = load_market(cfg)
curves, res, info = market
print("representative demand day:", info["demand_day"], "| RES day:", info["cf_day"])
print("blocks per hourly curve:", info["blocks"])

#%%
# Monopoly first.

mono_sc, sizing = build_scenario(cfg.point(players=1), market)
print(f"fleet: E = {sizing['e_max']:.0f} MWh, Q = {sizing['q_max']:.0f} MW")
mono = find_nash(mono_sc)

#%%
# Duopoly with the same total capacity.

duo = find_nash(build_scenario(cfg.point(players=2), market)[0])

print(f"\n{'hour':>4} {'RES':>7} {'price N=1':>10} {'price N=2':>10}")
for t in range(24):
    print(f"{t + 1:>4} {res[t]:7.0f} {mono.outcome.prices[t]:10.2f} {duo.outcome.prices[t]:10.2f}")

for name, rep in (("monopoly", mono), ("duopoly", duo)):
    p = rep.outcome.prices
    print(f"{name:>9}: peak {p.max():6.2f}  mean {p.mean():6.2f}  unmet {rep.outcome.unmet:8.0f} MWh"
          f"  profits {np.round(rep.per_player_profit).tolist()}  sweeps {rep.iterations}")

#%%
# The larger owner earns more, and hours with charging get more numerous.

for rep, name in ((mono, "N=1"), (duo, "N=2")):
    charging = sum(int(np.any([s.charge[t] > 0 for s in rep.final_state.schedules])) for t in range(24))
    print(name, "hours with charging:", charging)
