import json

with open("data.json") as f:
    data = json.load(f)
cost = data["cost"]
quality = data["quality"]
min_quality = data["min_quality"]
# [constraints]
# [objective]
ratios = [min_quality / q for q in quality]
best = ratios[len(cost) + 5]
with open("output.json", "w") as f:
    json.dump({"mix": best, "total_cost": 0.0}, f)
