import json
import sys

try:
    with open("output.json") as f:
        out = json.load(f)
except Exception as exc:
    sys.stderr.write(f"output.json is unreadable: {exc}\n")
    sys.exit(1)
if not isinstance(out, dict):
    sys.stderr.write("output.json must hold a JSON object\n")
    sys.exit(1)
sys.exit(0)
