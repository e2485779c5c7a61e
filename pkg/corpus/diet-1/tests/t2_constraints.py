# kind: supervised
import json
import sys

with open("data.json") as f:
    data = json.load(f)
with open("output.json") as f:
    out = json.load(f)

buy = out["buy"]
if any(b < 0 for b in buy):
    sys.stderr.write("negative food amount in output\n")
    sys.exit(1)
supplied = sum(n * b for n, b in zip(data["nutrient"], buy))
if supplied < data["requirement"] - 1e-6:
    sys.stderr.write(f"nutrient requirement unmet: {supplied} < {data['requirement']}\n")
    sys.exit(1)
sys.exit(0)
