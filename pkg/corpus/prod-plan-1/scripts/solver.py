import json

with open("data.json") as f:
    data = json.load(f)
profit = data["profit"]
capacity = float(data["capacity"])
# [constraints]
# Feasible region {x >= 0, y >= 0, x + y <= capacity}; a linear objective is
# maximized at a vertex.
vertices = [(0.0, 0.0), (capacity, 0.0), (0.0, capacity)]
# [objective]
best = max(vertices, key=lambda v: profit[0] * v[0] + profit[1] * v[1])
objective = profit[0] * best[0] + profit[1] * best[1]
with open("output.json", "w") as f:
    json.dump({"x": best[0], "y": best[1], "objective": float(objective)}, f)
