import json

with open("data.json") as f:
    data = json.load(f)
supply = data["supply"]
demand = float(data["demand"])
cost = data["cost"]
# [constraints]
# ships only from the cheapest warehouse and never checks the demand
cheapest = min(range(len(cost)), key=lambda i: cost[i])
ship = [0.0] * len(cost)
ship[cheapest] = float(supply[cheapest])
# [objective]
total = sum(c * s for c, s in zip(cost, ship))
with open("output.json", "w") as f:
    json.dump({"ship": ship, "total_cost": float(total)}, f)
