"""
How many owners?
================

The same aggregate storage split across 0, 1, 2, 4, 6 and 8 owners.
"""

from storage_cournot.experiments import RunConfig, load_market, run_point
from storage_cournot.synthetic import DATA_DIR

for season in ("winter", "summer"):
    cfg = RunConfig.load(DATA_DIR / f"{season}.json")
    market = load_market(cfg)
    print(f"\n{season}")
    print(f"{'N':>3} {'peak':>8} {'mean':>7} {'unmet':>9} {'curtailed':>10} {'SW':>14} {'conv':>5}")
    for n in cfg.sweep["players"]:
        run = run_point(cfg, "nash", market=market, players=n)
        t = run.outcome.totals()
        print(f"{n:>3} {t['peak_price']:8.2f} {t['mean_price']:7.2f} {t['unmet']:9.0f} {t['curtailment']:10.0f}"
              f" {t['social_welfare']:14.0f} {str(run.meta['converged']):>5}")

#%%
# Unmet demand drops fastest between one and four owners.  In winter it is
# flat after that; in summer the long solar surplus keeps rewarding
# additional small owners a little longer.
