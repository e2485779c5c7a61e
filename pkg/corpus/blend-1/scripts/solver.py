import json

with open("data.json") as f:
    data = json.load(f)
cost = data["cost"]
quality = data["quality"]
min_quality = data["min_quality"]
n = len(cost)
# [constraints]
# Candidate optima: pure stocks, plus two-stock mixes that hit the quality
# bound exactly.
candidates = [[1.0 if j == i else 0.0 for j in range(n)] for i in range(n)]
for i in range(n):
    for j in range(i + 1, n):
        denom = quality[i] - quality[j]
        if denom == 0:
            continue
        a = (min_quality - quality[j]) / denom
        if 0.0 <= a <= 1.0:
            point = [0.0] * n
            point[i] = a
            point[j] = 1.0 - a
            candidates.append(point)
feasible = [
    m for m in candidates
    if sum(q * x for q, x in zip(quality, m)) >= min_quality - 1e-9
]
# [objective]
best = min(feasible, key=lambda m: sum(c * x for c, x in zip(cost, m)))
total = sum(c * x for c, x in zip(cost, best))
with open("output.json", "w") as f:
    json.dump({"mix": best, "total_cost": float(total)}, f)
