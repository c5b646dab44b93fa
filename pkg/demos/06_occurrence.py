"""Users who keep showing up in the per-quarter top lists."""
import gmcascade as gm
from gmcascade.analytics import topk_occurrence
from gmcascade.synth import SynthParams, generate

# %% four synthetic quarters over a shared id space
rankings = {}
for quarter in range(1, 5):
    tx = generate(SynthParams(nodes=3000, edges=15000, year=2013, quarter=quarter), seed=quarter)
    g = tx.graph()
    p, _ = gm.rank_pair(g)
    rankings[f"2013Q{quarter}"] = [g.ids[u] for u in p.index]

# %% top 100 each quarter, 10 most frequent users
table = topk_occurrence(rankings, k=100, m=10)
print("user   count  " + "  ".join(table.labels))
for user, count, pos in table.rows():
    cells = "  ".join(f"{'-' if x is None else x:>6}" for x in pos)
    print(f"{user:>6s} {count:5d}  {cells}")
