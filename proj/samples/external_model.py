#!/usr/bin/env python3
"""Line-protocol model for the loans sample: reads {"instances": [...]} per line,
answers {"scores": [...]}. Run with --model "proc:python3 samples/external_model.py"."""
import json
import math
import sys

EMPLOYMENT = {"salaried": 0.8, "self-employed": 0.0, "unemployed": -1.8, "retired": 0.2}
HOUSING = {"own": 0.6, "rent": -0.3, "family": 0.0}


def score(x):
    age, income, debt_ratio, employment, housing, _purpose = x
    t = 0.03 * (age - 40) + 0.04 * (income - 35) - 4 * (debt_ratio - 0.4)
    t += EMPLOYMENT.get(employment, 0.0) + HOUSING.get(housing, 0.0)
    return 1.0 / (1.0 + math.exp(-t))


for line in sys.stdin:
    req = json.loads(line)
    print(json.dumps({"scores": [score(x) for x in req["instances"]]}), flush=True)
