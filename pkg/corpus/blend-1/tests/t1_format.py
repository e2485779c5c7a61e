# kind: supervised
import json
import sys

with open("output.json") as f:
    out = json.load(f)

for key in ['mix', 'total_cost']:
    if key not in out:
        sys.stderr.write(f"output is missing key {key!r}\n")
        sys.exit(1)
for key in ['mix']:
    if not isinstance(out[key], list):
        sys.stderr.write(f"output key {key!r} must hold a list\n")
        sys.exit(1)
    if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in out[key]):
        sys.stderr.write(f"output key {key!r} must hold numbers\n")
        sys.exit(1)
for key in ['mix', 'total_cost']:
    if key in ['mix']:
        continue
    if not isinstance(out[key], (int, float)) or isinstance(out[key], bool):
        sys.stderr.write(f"output key {key!r} must be a number\n")
        sys.exit(1)
sys.exit(0)
