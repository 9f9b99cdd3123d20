"""
Scaling the fleet
=================

Multiply energy and power of a duopoly by theta and compare the strategic
outcome with the welfare-maximizing dispatch of the same hardware.
"""

from storage_cournot.experiments import RunConfig, build_scenario, load_market
from storage_cournot.equilibrium import find_nash
from storage_cournot.planner import solve_planner
from storage_cournot.synthetic import DATA_DIR

cfg = RunConfig.load(DATA_DIR / "winter.json")
market = load_market(cfg)

print(f"{'theta':>5} {'planner SW':>14} {'Nash SW':>14} {'gap':>9} {'unmet (planner)':>16}")
previous = None
for theta in (0.0, 0.5, 1.0, 1.5, 2.0, 2.5):
    sc, _ = build_scenario(cfg.point(theta=theta), market)
    plan = solve_planner(sc)
    nash = find_nash(sc)
    gap = plan.total_sw - nash.outcome.social_welfare
    step = "" if previous is None else f"  ({plan.total_sw - previous:+,.0f})"
    print(f"{theta:5.1f} {plan.total_sw:14.0f} {nash.outcome.social_welfare:14.0f} {gap:9.0f}"
          f" {plan.outcome.unmet:16.0f}{step}")
    previous = plan.total_sw

#%%
# Most of the welfare arrives with the first unit of capacity.  Past
# theta of about 2 the offer steps get coarser (each step is Q/N), so extra
# hardware stops paying off and can even cost a little welfare.
