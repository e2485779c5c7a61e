import json

with open("data.json") as f:
    data = json.load(f)
costs = data["cost"]
nutrients = data["nutrient"]
requirement = data["requirement"]
# [constraints]
# With a single covering constraint, some axis intercept (buy one food only)
# is optimal: buying requirement/nutrient_i units of food i is feasible.
candidates = [
    [requirement / nutrients[i] if j == i else 0.0 for j in range(len(costs))]
    for i in range(len(costs))
    if nutrients[i] > 0
]
# [objective]
best = min(candidates, key=lambda buy: sum(c * b for c, b in zip(costs, buy)))
total = sum(c * b for c, b in zip(costs, best))
with open("output.json", "w") as f:
    json.dump({"buy": best, "total_cost": float(total)}, f)
