import json

with open("data.json") as f:
    data = json.load(f)
requirement = data["requirement"]
# [constraints]
# shifts are independent, so covering each requirement exactly is minimal
assign = [int(r) for r in requirement]
# [objective]
total = sum(assign)
with open("output.json", "w") as f:
    json.dump({"assign": assign, "total_workers": total}, f)
