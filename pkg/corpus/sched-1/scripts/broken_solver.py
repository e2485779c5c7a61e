import json

with open("data.json") as f:
    data = json.load(f)
requirement = data["requirement"]
# [constraints]
# [objective]
raise RuntimeError("shift coverage matrix is singular")
