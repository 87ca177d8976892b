# %% [markdown]
# # Attack, detection and delay
#
# One cell of the experiment grid under every detection algorithm, then a
# small sweep summarized in the same tables the CLI `report` prints.

# %%
import time

import numpy as np

from vanetsig import harness
from vanetsig.simulation import RunTrace, run

# %% [markdown]
# ## One run, recorded
#
# Share of reports from false vehicles and how quickly they get rejected.

# %%
cfg = harness.build_config(9, 0.06, 0.08, 600)
rec = RunTrace()
res = run(cfg, 7, record=rec)
fake = np.array(rec.sybil_ids)
per_tick = np.array([[np.isin(b.ids, fake).sum(), len(b)] for b in rec.batches])
print(f"{per_tick[:, 0].sum()} of {per_tick[:, 1].sum()} reports are false")
print(f"detected {res.pct_malicious_detected:.1f}%, true recognized {res.pct_true_recognized:.2f}%")

# age (in ticks) of a false vehicle when its reports are first rejected
first_seen, first_rejected = {}, {}
for b, acc in zip(rec.batches, rec.accepted):
    for vid, ok in zip(b.ids.tolist(), acc.tolist()):
        first_seen.setdefault(vid, b.t)
        if not ok:
            first_rejected.setdefault(vid, b.t)
ages = [first_rejected[v] - first_seen[v] for v in rec.sybil_ids if v in first_rejected]
print("ticks to first rejection:", np.bincount(ages)[:8], f"never rejected: {len(fake) - len(ages)}")

# %% [markdown]
# ## Every algorithm on one cell

# %%
q, qf = 0.06, 0.08
for a in range(10):
    rs = [harness.run_cell(a, q, qf, harness.cell_seed(2016, q, qf, k)) for k in range(4)]
    print(f"alg {a}: delay {np.mean([r.mean_delay for r in rs]):6.2f} s/veh  "
          f"detected {np.mean([r.pct_malicious_detected for r in rs]):5.1f}%  "
          f"true {np.mean([r.pct_true_recognized for r in rs]):6.2f}%")
base = [harness.run_cell(0, q, 0.0, harness.cell_seed(2016, q, 0.0, k)) for k in range(4)]
print(f"no attack: delay {np.mean([r.mean_delay for r in base]):6.2f} s/veh")

# %% [markdown]
# ## A reduced sweep
#
# Two algorithms, the extreme intensities, three seeds.  The full plan is
# `python -m vanetsig run --out results.csv`.

# %%
plan = harness.ExperimentPlan(algorithms=(0, 9), q_values=(0.02, 0.14), qf_values=(0.02, 0.08), replications=3)
t0 = time.time()
results = harness.run_experiment(plan)
print(f"{len(results)} runs in {time.time() - t0:.0f} s")
rows = [harness.parse_csv_row(r.csv_row()) for r in results]
print(harness.report_tables(rows))
