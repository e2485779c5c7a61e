import json

with open("data.json") as f:
    data = json.load(f)
costs = data["cost"]
nutrients = data["nutrient"]
requirement = data["requirement"]
# [constraints]
# [objective]
best = cheapest_plan(costs, nutrients, requirement)
total = sum(c * b for c, b in zip(costs, best))
with open("output.json", "w") as f:
    json.dump({"buy": best, "total_cost": float(total)}, f)
