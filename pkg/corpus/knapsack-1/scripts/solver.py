import json
from itertools import product

with open("data.json") as f:
    data = json.load(f)
values = data["value"]
weights = data["weight"]
capacity = data["capacity"]
n = len(values)
# [constraints]
feasible = [
    picks
    for picks in product((0, 1), repeat=n)
    if sum(w * p for w, p in zip(weights, picks)) <= capacity
]
# [objective]
best = max(feasible, key=lambda picks: sum(v * p for v, p in zip(values, picks)))
total = sum(v * p for v, p in zip(values, best))
with open("output.json", "w") as f:
    json.dump({"take": list(best), "total_value": float(total)}, f)
