import json

with open("data.json") as f:
    data = json.load(f)
supply = data["supply"]
demand = float(data["demand"])
cost = data["cost"]
# [constraints]
# Single destination: filling demand from the cheapest warehouses first is
# optimal.
order = sorted(range(len(cost)), key=lambda i: cost[i])
ship = [0.0] * len(cost)
remaining = demand
# [objective]
for i in order:
    take = min(float(supply[i]), remaining)
    ship[i] = take
    remaining -= take
total = sum(c * s for c, s in zip(cost, ship))
with open("output.json", "w") as f:
    json.dump({"ship": ship, "total_cost": float(total)}, f)
