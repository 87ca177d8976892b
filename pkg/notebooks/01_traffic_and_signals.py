# %% [markdown]
# # Traffic and signals
#
# The grid, one queue discharging at a stop line, and the pressure controller
# switching between its two approaches.

# %%
import numpy as np

from vanetsig.calibrate import discharge_times, saturation_flow
from vanetsig.signals import Phase, SignalState, decide_phase
from vanetsig.topology import default_topology
from vanetsig.traffic import NetworkState, SimParams, ca_step

topo = default_topology()
print(topo.dump()[:600])

# %% [markdown]
# Each road is five 40-cell links.  Crossing cells and the stop-line cells
# right before them:

# %%
print("crossings", topo.crossing_cells, "stop lines", topo.stopline_cells, "metres", topo.stopline_m)

# %% [markdown]
# ## A queue at red
#
# Six standing vehicles, red for 20 s, then green.  Rows are ticks, `#` a
# vehicle, `|` the stop line.

# %%
def strip(state, lo=20, hi=60):
    row = np.full(hi - lo, ".")
    row[topo.stopline_cells[0] - lo] = "|"
    for c in state.cell[(state.road == 0) & (state.cell >= lo) & (state.cell < hi)]:
        row[c - lo] = "#"
    return "".join(row)


s = topo.stopline_cells[0]
state = NetworkState(topo).add_vehicles(np.arange(6), np.zeros(6), s - 2 * np.arange(6), np.zeros(6))
red = np.zeros((topo.n_roads, topo.n_cross), dtype=bool)
rng = np.random.default_rng(1)
for t in range(30):
    red[0, 0] = t < 20
    if t % 2 == 0 or 18 <= t <= 26:
        print(f"{t:3d} {'R' if red[0, 0] else 'G'} {strip(state)}")
    state = ca_step(state, red, SimParams(), rng)

# %% [markdown]
# Discharge headways of a long queue give the saturation flow.

# %%
print(np.diff(discharge_times(20, 3)))
print(saturation_flow(replications=100))

# %% [markdown]
# ## Controller
#
# A light but steady west stream against a south approach that builds up.
# Once south holds the green, west only gets it back through the max-red cap.

# %%
sig = SignalState(0)
trace = []
for t in range(300):
    south = min(t / 10, 8.0)
    sig = decide_phase(sig, (south, 3.0))
    trace.append({Phase.GREEN_SOUTH: "S", Phase.GREEN_WEST: "W", Phase.INTERGREEN: "-"}[sig.phase])
for k in range(0, 300, 100):
    print("".join(trace[k:k + 100]))
