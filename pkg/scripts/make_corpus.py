#!/usr/bin/env python3
"""Author the fixture corpus tree under corpus/.

Six desk-scale instances (4 LP, 2 MILP) with optima small enough to verify by
hand. Each instance directory gets snop.txt, data.json, sample_output.json,
supervised tests, corrupted outputs (one per test category), and the scripts
that stand in for LLM-generated code in the replay transcripts.

Rerunning the script rewrites the tree deterministically.
"""

from __future__ import annotations

import json
import shutil
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from optagent.snop import Snop, serialize_snop  # noqa: E402

CORPUS = REPO / "corpus"

# Test scripts all follow the exit-status protocol: 0 passes, nonzero fails
# with the reason on stderr.

AUTOTEST = '''\
import json
import sys

try:
    with open("output.json") as f:
        out = json.load(f)
except Exception as exc:
    sys.stderr.write(f"output.json is unreadable: {exc}\\n")
    sys.exit(1)
if not isinstance(out, dict):
    sys.stderr.write("output.json must hold a JSON object\\n")
    sys.exit(1)
sys.exit(0)
'''


def format_test(keys: list[str], list_keys: list[str]) -> str:
    return f'''\
# kind: supervised
import json
import sys

with open("output.json") as f:
    out = json.load(f)

for key in {keys!r}:
    if key not in out:
        sys.stderr.write(f"output is missing key {{key!r}}\\n")
        sys.exit(1)
for key in {list_keys!r}:
    if not isinstance(out[key], list):
        sys.stderr.write(f"output key {{key!r}} must hold a list\\n")
        sys.exit(1)
    if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in out[key]):
        sys.stderr.write(f"output key {{key!r}} must hold numbers\\n")
        sys.exit(1)
for key in {keys!r}:
    if key in {list_keys!r}:
        continue
    if not isinstance(out[key], (int, float)) or isinstance(out[key], bool):
        sys.stderr.write(f"output key {{key!r}} must be a number\\n")
        sys.exit(1)
sys.exit(0)
'''


PROD_PLAN = {
    "id": "prod-plan-1",
    "problem_class": "LP",
    "optimal_value": "12.0",
    "objective_key": "objective",
    "snop": Snop(
        problem_type="LP",
        problem_info=(
            "A workshop makes two products that share a single pool of \\param{capacity} machine hours.",
            "Making one unit of product i takes one machine hour and earns a profit of \\param{profit_i}.",
            "Production quantities may be fractional.",
        ),
        input_format='{"profit": [profit_i for i in 1..N], "capacity": capacity}',
        output_info=(
            "How many units of the first product (x) and the second product (y) to make.",
            "The total profit achieved.",
        ),
        output_format='{"x": x, "y": y, "objective": objective}',
        objective="Maximize the total profit of the production plan.",
        solver="cvxpy",
    ),
    "data": {"profit": [3, 2], "capacity": 4},
    "sample_output": {"x": 4.0, "y": 0.0, "objective": 12.0},
    "solver": '''\
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
''',
    "tests": {
        "t1_format": format_test(["x", "y", "objective"], []),
        "t2_constraints": '''\
# kind: supervised
import json
import sys

with open("data.json") as f:
    data = json.load(f)
with open("output.json") as f:
    out = json.load(f)

x, y = out["x"], out["y"]
if x < 0 or y < 0:
    sys.stderr.write("negative production quantity in output\\n")
    sys.exit(1)
if x + y > data["capacity"] + 1e-6:
    sys.stderr.write(f"machine hours exceeded: {x + y} > {data['capacity']}\\n")
    sys.exit(1)
sys.exit(0)
''',
        "t3_consistency": '''\
# kind: supervised
import json
import sys

with open("data.json") as f:
    data = json.load(f)
with open("output.json") as f:
    out = json.load(f)

expected = data["profit"][0] * out["x"] + data["profit"][1] * out["y"]
if abs(expected - out["objective"]) > 1e-6:
    sys.stderr.write(f"objective {out['objective']} does not equal recomputed profit {expected}\\n")
    sys.exit(1)
sys.exit(0)
''',
    },
    "corrupted": {
        "format": {"x": 4.0, "y": 0.0},
        "constraints": {"x": -1.0, "y": 5.0, "objective": 7.0},
        "consistency": {"x": 4.0, "y": 0.0, "objective": 99.0},
    },
}

KNAPSACK = {
    "id": "knapsack-1",
    "problem_class": "MILP",
    "optimal_value": "22.0",
    "objective_key": "total_value",
    "snop": Snop(
        problem_type="MILP",
        problem_info=(
            "A hiker chooses among \\param{N} items to pack.",
            "Item i is worth \\param{value_i} and weighs \\param{weight_i}.",
            "The pack carries at most \\param{capacity} weight units.",
            "Each item is packed whole or left behind.",
        ),
        input_format='{"value": [value_i for i in 1..N], "weight": [weight_i for i in 1..N], "capacity": capacity}',
        output_info=(
            "For each item, 1 if it is packed and 0 otherwise.",
            "The total value packed.",
        ),
        output_format='{"take": [take_i for i in 1..N], "total_value": total_value}',
        objective="Maximize the total value of the packed items.",
        solver="gurobi",
    ),
    "data": {"value": [6, 10, 12], "weight": [1, 2, 3], "capacity": 5},
    "sample_output": {"take": [0, 1, 1], "total_value": 22.0},
    "solver": '''\
import json
from itertools import product

with open("data.json") as f:
    data = json.load(f)
values = data["value"]
weights = data["weight"]
capacity = data["capacity"]
n = len(values)
# [constraints]
feasible = [
    picks
    for picks in product((0, 1), repeat=n)
    if sum(w * p for w, p in zip(weights, picks)) <= capacity
]
# [objective]
best = max(feasible, key=lambda picks: sum(v * p for v, p in zip(values, picks)))
total = sum(v * p for v, p in zip(values, best))
with open("output.json", "w") as f:
    json.dump({"take": list(best), "total_value": float(total)}, f)
''',
    "tests": {
        "t1_format": format_test(["take", "total_value"], ["take"]),
        "t2_constraints": '''\
# kind: supervised
import json
import sys

with open("data.json") as f:
    data = json.load(f)
with open("output.json") as f:
    out = json.load(f)

take = out["take"]
if any(t not in (0, 1) for t in take):
    sys.stderr.write("take entries must be 0 or 1\\n")
    sys.exit(1)
load = sum(w * t for w, t in zip(data["weight"], take))
if load > data["capacity"]:
    sys.stderr.write(f"capacity exceeded: packed weight {load} > {data['capacity']}\\n")
    sys.exit(1)
sys.exit(0)
''',
        "t3_consistency": '''\
# kind: supervised
import json
import sys

with open("data.json") as f:
    data = json.load(f)
with open("output.json") as f:
    out = json.load(f)

expected = sum(v * t for v, t in zip(data["value"], out["take"]))
if abs(expected - out["total_value"]) > 1e-6:
    sys.stderr.write(f"total_value {out['total_value']} does not equal recomputed value {expected}\\n")
    sys.exit(1)
sys.exit(0)
''',
    },
    "corrupted": {
        "format": {"take": [0, 1, 1]},
        "constraints": {"take": [1, 1, 1], "total_value": 28.0},
        "consistency": {"take": [0, 1, 1], "total_value": 20.0},
    },
}

DIET = {
    "id": "diet-1",
    "problem_class": "LP",
    "optimal_value": "6.0",
    "objective_key": "total_cost",
    "snop": Snop(
        problem_type="LP",
        problem_info=(
            "A meal plan mixes \\param{N} foods in fractional amounts.",
            "One unit of food i costs \\param{cost_i} and provides \\param{nutrient_i} units of the nutrient.",
            "The plan must supply at least \\param{requirement} units of the nutrient.",
        ),
        input_format='{"cost": [cost_i for i in 1..N], "nutrient": [nutrient_i for i in 1..N], "requirement": requirement}',
        output_info=(
            "The amount of each food to buy.",
            "The total cost of the plan.",
        ),
        output_format='{"buy": [buy_i for i in 1..N], "total_cost": total_cost}',
        objective="Minimize the total cost of meeting the nutrient requirement.",
        solver="cvxpy",
    ),
    "data": {"cost": [2, 3], "nutrient": [1, 2], "requirement": 4},
    "sample_output": {"buy": [0.0, 2.0], "total_cost": 6.0},
    "solver": '''\
import json

with open("data.json") as f:
    data = json.load(f)
costs = data["cost"]
nutrients = data["nutrient"]
requirement = data["requirement"]
# [constraints]
# With a single covering constraint, some axis intercept (buy one food only)
# is optimal: buying requirement/nutrient_i units of food i is feasible.
candidates = [
    [requirement / nutrients[i] if j == i else 0.0 for j in range(len(costs))]
    for i in range(len(costs))
    if nutrients[i] > 0
]
# [objective]
best = min(candidates, key=lambda buy: sum(c * b for c, b in zip(costs, buy)))
total = sum(c * b for c, b in zip(costs, best))
with open("output.json", "w") as f:
    json.dump({"buy": best, "total_cost": float(total)}, f)
''',
    "broken_solver": '''\
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
''',
    "tests": {
        "t1_format": format_test(["buy", "total_cost"], ["buy"]),
        "t2_constraints": '''\
# kind: supervised
import json
import sys

with open("data.json") as f:
    data = json.load(f)
with open("output.json") as f:
    out = json.load(f)

buy = out["buy"]
if any(b < 0 for b in buy):
    sys.stderr.write("negative food amount in output\\n")
    sys.exit(1)
supplied = sum(n * b for n, b in zip(data["nutrient"], buy))
if supplied < data["requirement"] - 1e-6:
    sys.stderr.write(f"nutrient requirement unmet: {supplied} < {data['requirement']}\\n")
    sys.exit(1)
sys.exit(0)
''',
        "t3_consistency": '''\
# kind: supervised
import json
import sys

with open("data.json") as f:
    data = json.load(f)
with open("output.json") as f:
    out = json.load(f)

expected = sum(c * b for c, b in zip(data["cost"], out["buy"]))
if abs(expected - out["total_cost"]) > 1e-6:
    sys.stderr.write(f"total_cost {out['total_cost']} does not equal recomputed cost {expected}\\n")
    sys.exit(1)
sys.exit(0)
''',
    },
    "corrupted": {
        "format": {"total_cost": 6.0},
        "constraints": {"buy": [0.0, 1.0], "total_cost": 3.0},
        "consistency": {"buy": [0.0, 2.0], "total_cost": 1.0},
    },
}

TRANSPORT = {
    "id": "transport-1",
    "problem_class": "LP",
    "optimal_value": "14.0",
    "objective_key": "total_cost",
    "snop": Snop(
        problem_type="LP",
        problem_info=(
            "Two warehouses ship one good to a single store.",
            "Warehouse i holds \\param{supply_i} units, and shipping one unit from it costs \\param{cost_i}.",
            "The store needs at least \\param{demand} units in total.",
        ),
        input_format='{"supply": [supply_i for i in 1..N], "demand": demand, "cost": [cost_i for i in 1..N]}',
        output_info=(
            "How many units each warehouse ships.",
            "The total shipping cost.",
        ),
        output_format='{"ship": [ship_i for i in 1..N], "total_cost": total_cost}',
        objective="Minimize the total cost of meeting the store's demand.",
        solver="cvxpy",
    ),
    "data": {"supply": [3, 5], "demand": 6, "cost": [4, 2]},
    "sample_output": {"ship": [1.0, 5.0], "total_cost": 14.0},
    "solver": '''\
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
''',
    "bad_output_solver": '''\
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
''',
    "tests": {
        "t1_format": format_test(["ship", "total_cost"], ["ship"]),
        "t2_constraints": '''\
# kind: supervised
import json
import sys

with open("data.json") as f:
    data = json.load(f)
with open("output.json") as f:
    out = json.load(f)

ship = out["ship"]
if any(s < 0 for s in ship):
    sys.stderr.write("negative shipment in output\\n")
    sys.exit(1)
for i, (s, cap) in enumerate(zip(ship, data["supply"])):
    if s > cap + 1e-6:
        sys.stderr.write(f"warehouse {i} over supply: {s} > {cap}\\n")
        sys.exit(1)
shipped = sum(ship)
if shipped < data["demand"] - 1e-6:
    sys.stderr.write(f"demand unmet: shipped {shipped} < {data['demand']}\\n")
    sys.exit(1)
sys.exit(0)
''',
        "t3_consistency": '''\
# kind: supervised
import json
import sys

with open("data.json") as f:
    data = json.load(f)
with open("output.json") as f:
    out = json.load(f)

expected = sum(c * s for c, s in zip(data["cost"], out["ship"]))
if abs(expected - out["total_cost"]) > 1e-6:
    sys.stderr.write(f"total_cost {out['total_cost']} does not equal recomputed cost {expected}\\n")
    sys.exit(1)
sys.exit(0)
''',
    },
    "corrupted": {
        "format": {"ship": [1.0, 5.0]},
        "constraints": {"ship": [0.0, 5.0], "total_cost": 10.0},
        "consistency": {"ship": [1.0, 5.0], "total_cost": 99.0},
    },
}

SCHED = {
    "id": "sched-1",
    "problem_class": "MILP",
    "optimal_value": "5",
    "objective_key": "total_workers",
    "snop": Snop(
        problem_type="MILP",
        problem_info=(
            "A clinic staffs \\param{S} shifts with whole workers.",
            "Shift s needs at least \\param{requirement_s} workers on duty.",
        ),
        input_format='{"requirement": [requirement_s for s in 1..S]}',
        output_info=(
            "How many workers to assign to each shift.",
            "The total number of workers used.",
        ),
        output_format='{"assign": [assign_s for s in 1..S], "total_workers": total_workers}',
        objective="Minimize the total number of workers assigned.",
        solver="gurobi",
    ),
    "data": {"requirement": [2, 3]},
    "sample_output": {"assign": [2, 3], "total_workers": 5},
    "solver": '''\
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
''',
    "broken_solver": '''\
import json

with open("data.json") as f:
    data = json.load(f)
requirement = data["requirement"]
# [constraints]
# [objective]
raise RuntimeError("shift coverage matrix is singular")
''',
    "tests": {
        "t1_format": format_test(["assign", "total_workers"], ["assign"]),
        "t2_constraints": '''\
# kind: supervised
import json
import sys

with open("data.json") as f:
    data = json.load(f)
with open("output.json") as f:
    out = json.load(f)

assign = out["assign"]
if any(a != int(a) for a in assign):
    sys.stderr.write("worker counts must be whole numbers\\n")
    sys.exit(1)
for s, (a, need) in enumerate(zip(assign, data["requirement"])):
    if a < need:
        sys.stderr.write(f"shift {s} understaffed: {a} < {need}\\n")
        sys.exit(1)
sys.exit(0)
''',
        "t3_consistency": '''\
# kind: supervised
import json
import sys

with open("output.json") as f:
    out = json.load(f)

expected = sum(out["assign"])
if abs(expected - out["total_workers"]) > 1e-6:
    sys.stderr.write(f"total_workers {out['total_workers']} does not equal sum of assignments {expected}\\n")
    sys.exit(1)
sys.exit(0)
''',
    },
    "corrupted": {
        "format": {"assign": [2, 3]},
        "constraints": {"assign": [1, 3], "total_workers": 4},
        "consistency": {"assign": [2, 3], "total_workers": 9},
    },
}

BLEND = {
    "id": "blend-1",
    "problem_class": "LP",
    "optimal_value": "4.5",
    "objective_key": "total_cost",
    "snop": Snop(
        problem_type="LP",
        problem_info=(
            "A refinery blends \\param{N} stocks into one unit of product; the fractions must sum to one.",
            "Stock i costs \\param{cost_i} per unit and has quality rating \\param{quality_i}.",
            "The blend's average quality must be at least \\param{min_quality}.",
        ),
        input_format='{"cost": [cost_i for i in 1..N], "quality": [quality_i for i in 1..N], "min_quality": min_quality}',
        output_info=(
            "The fraction of each stock in the blend.",
            "The cost of one blended unit.",
        ),
        output_format='{"mix": [mix_i for i in 1..N], "total_cost": total_cost}',
        objective="Minimize the cost of one unit of blended product.",
        solver="cvxpy",
    ),
    "data": {"cost": [5, 4], "quality": [3, 1], "min_quality": 2},
    "sample_output": {"mix": [0.5, 0.5], "total_cost": 4.5},
    "solver": '''\
import json

with open("data.json") as f:
    data = json.load(f)
cost = data["cost"]
quality = data["quality"]
min_quality = data["min_quality"]
n = len(cost)
# [constraints]
# Candidate optima: pure stocks, plus two-stock mixes that hit the quality
# bound exactly.
candidates = [[1.0 if j == i else 0.0 for j in range(n)] for i in range(n)]
for i in range(n):
    for j in range(i + 1, n):
        denom = quality[i] - quality[j]
        if denom == 0:
            continue
        a = (min_quality - quality[j]) / denom
        if 0.0 <= a <= 1.0:
            point = [0.0] * n
            point[i] = a
            point[j] = 1.0 - a
            candidates.append(point)
feasible = [
    m for m in candidates
    if sum(q * x for q, x in zip(quality, m)) >= min_quality - 1e-9
]
# [objective]
best = min(feasible, key=lambda m: sum(c * x for c, x in zip(cost, m)))
total = sum(c * x for c, x in zip(cost, best))
with open("output.json", "w") as f:
    json.dump({"mix": best, "total_cost": float(total)}, f)
''',
    "broken_solver": '''\
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
''',
    "tests": {
        "t1_format": format_test(["mix", "total_cost"], ["mix"]),
        "t2_constraints": '''\
# kind: supervised
import json
import sys

with open("data.json") as f:
    data = json.load(f)
with open("output.json") as f:
    out = json.load(f)

mix = out["mix"]
if any(m < 0 for m in mix):
    sys.stderr.write("negative blend fraction in output\\n")
    sys.exit(1)
if abs(sum(mix) - 1.0) > 1e-6:
    sys.stderr.write(f"blend fractions sum to {sum(mix)}, not 1\\n")
    sys.exit(1)
grade = sum(q * m for q, m in zip(data["quality"], mix))
if grade < data["min_quality"] - 1e-6:
    sys.stderr.write(f"blend quality too low: {grade} < {data['min_quality']}\\n")
    sys.exit(1)
sys.exit(0)
''',
        "t3_consistency": '''\
# kind: supervised
import json
import sys

with open("data.json") as f:
    data = json.load(f)
with open("output.json") as f:
    out = json.load(f)

expected = sum(c * m for c, m in zip(data["cost"], out["mix"]))
if abs(expected - out["total_cost"]) > 1e-6:
    sys.stderr.write(f"total_cost {out['total_cost']} does not equal recomputed cost {expected}\\n")
    sys.exit(1)
sys.exit(0)
''',
    },
    "corrupted": {
        "format": {"mix": [0.5, 0.5]},
        "constraints": {"mix": [0.0, 1.0], "total_cost": 4.0},
        "consistency": {"mix": [0.5, 0.5], "total_cost": 2.0},
    },
}

INSTANCES = [PROD_PLAN, KNAPSACK, DIET, TRANSPORT, SCHED, BLEND]


def write_instance(spec: dict) -> None:
    root = CORPUS / spec["id"]
    if root.exists():
        shutil.rmtree(root)
    root.mkdir(parents=True)
    (root / "snop.txt").write_text(serialize_snop(spec["snop"]), encoding="utf-8")
    (root / "data.json").write_text(json.dumps(spec["data"], indent=2) + "\n", encoding="utf-8")
    (root / "sample_output.json").write_text(
        json.dumps(spec["sample_output"], indent=2) + "\n", encoding="utf-8"
    )

    tests = root / "tests"
    tests.mkdir()
    for name, body in spec["tests"].items():
        (tests / f"{name}.py").write_text(body, encoding="utf-8")

    corrupted = root / "corrupted"
    corrupted.mkdir()
    for category, doc in spec["corrupted"].items():
        (corrupted / f"{category}.json").write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")

    scripts = root / "scripts"
    scripts.mkdir()
    (scripts / "solver.py").write_text(spec["solver"], encoding="utf-8")
    (scripts / "autotest.py").write_text(AUTOTEST, encoding="utf-8")
    for role in ("broken_solver", "bad_output_solver"):
        if role in spec:
            (scripts / f"{role}.py").write_text(spec[role], encoding="utf-8")


def main() -> None:
    CORPUS.mkdir(exist_ok=True)
    manifest = {
        "version": "1",
        "instances": [
            {
                "id": spec["id"],
                "path": spec["id"],
                "problem_class": spec["problem_class"],
                "optimal_value": spec["optimal_value"],
                "objective_key": spec["objective_key"],
            }
            for spec in INSTANCES
        ],
    }
    for spec in INSTANCES:
        write_instance(spec)
    (CORPUS / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {len(INSTANCES)} instances under {CORPUS}")


if __name__ == "__main__":
    main()
