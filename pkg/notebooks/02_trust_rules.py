# %% [markdown]
# # Trust rules on hand-made reports
#
# Four small scenes, each tripping one rule family, then a ledger following
# a false vehicle and a real one side by side.

# %%
import numpy as np

from vanetsig.topology import default_topology
from vanetsig.trust import (DetectionParams, Rule, TrustLedger, Window, expected_velocity, rule_neighbour,
                            rule_signal_reaction, rule_vehicle_order, update_trust)
from vanetsig.vanet import ReportBatch, VehicleReport

topo = default_topology()
P = DetectionParams()
h = topo.stopline_m[0]


def batch(t, rows):
    return ReportBatch.from_reports(t, [VehicleReport(i, t, lane, x, v, tuple(nb)) for i, lane, x, v, nb in rows])


# %% [markdown]
# **Order.** Vehicle 0 jumps from 20 m behind vehicle 1 to 10 m ahead.

# %%
w = Window(np.arange(2), np.array([[100.0, 115.0, 130.0], [120.0, 120.0, 120.0]]),
           np.zeros((2, 3), dtype=np.int64), np.ones(2, dtype=bool))
print(rule_vehicle_order(w, np.array([1.0, 1.0]), P), rule_vehicle_order(w, np.array([1.0, -1.0]), P))

# %% [markdown]
# **Signals.** Running a red versus waiting at it.

# %%
reds = np.zeros((3, topo.n_roads, topo.n_cross), dtype=bool)
reds[:, 0, 0] = True
w = Window(np.arange(2), np.array([[h - 10, h, h + 10], [h - 1, h - 1, h - 1]]),
           np.zeros((2, 3), dtype=np.int64), np.ones(2, dtype=bool))
print(rule_signal_reaction(w, reds, topo.stopline_m, P))

# %% [markdown]
# **Velocity.** The expected speed as a function of headway.

# %%
for hw in (5, 7.5, 15, 27.5, 37.5, 60, 200):
    print(f"h = {hw:6.1f} m  ->  {expected_velocity(hw, P):5.2f} m/s")

# %% [markdown]
# **Neighbours.** Vehicle 3 is confirmed by one witness and denied by two.

# %%
b = batch(0, [(1, 0, 100.0, 5.0, [(140.0, 0)]), (2, 0, 120.0, 5.0, [(98.0, 0)]),
              (3, 0, 140.0, 5.0, []), (4, 0, 160.0, 5.0, [(120.0, 0)])])
print(dict(zip(b.ids.tolist(), rule_neighbour(b, np.ones(4), P, topo))))

# %% [markdown]
# ## Ledger over time
#
# A real vehicle (id 1) approaches a red light and stops; a ghost (id 9)
# claims 12 m/s on the same lane and drives through the red.  Vehicle 2 is a
# trusted follower whose neighbour list sees vehicle 1 only.

# %%
ledger = TrustLedger(P, topo)
red = np.zeros((topo.n_roads, topo.n_cross), dtype=bool)
red[0, 0] = True
x1, x2, xg = h - 60, h - 100, h - 90
for t in range(10):
    v1 = min(15.0, max(0.0, (h - 1 - x1) / 2))
    x1 = min(x1 + v1, h - 1)
    x2 = min(x2 + 10, x1 - 8)
    xg += 12
    rows = [(1, 0, x1, v1, [(x2, 0)]), (2, 0, x2, 10.0, [(x1, 0)]), (9, 0, xg, 12.0, [])]
    update_trust(batch(t, rows), red, ledger)
    print(t, {k: round(ledger[k], 2) for k in (1, 2, 9)})
