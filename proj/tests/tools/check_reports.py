"""Runs the CLI in its main modes and checks every report.json against
docs/report_schema.json and every report.svg for XML validity.

usage: check_reports.py OPROJ_CLI FIXTURE_MODEL SCHEMA WORK_DIR
"""

import json
import random
import shutil
import subprocess
import sys
import xml.etree.ElementTree as ET
from pathlib import Path

import jsonschema

cli, fixture, schema_path, work = sys.argv[1:5]
work = Path(work)
shutil.rmtree(work, ignore_errors=True)
work.mkdir(parents=True)
schema = json.loads(Path(schema_path).read_text())
jsonschema.Draft202012Validator.check_schema(schema)

rng = random.Random(3)
rows = []
for i in range(120):
    a, b, c = (rng.gauss(0, 1) for _ in range(3))
    grp = rng.choice(["red", "green", "blue"])
    rows.append((a, b, c, 5.0, grp, 2 * a - b + 0.1 * c, 1 if a + 0.3 * b > 0 else 0))
data = work / "data.csv"
with data.open("w") as f:
    f.write("a,b,c,flat,colour,score,label\n")
    for r in rows:
        f.write(",".join(str(v) for v in r) + "\n")

runs = {
    "model": ["--model", f"{fixture} linear 1,-2,0.5", "--ignore", "flat,colour,score,label"],
    "model_errored": ["--model", f"{fixture} linear 1,-2,0.5,3", "--ignore", "colour,score,label"],
    "groups": ["--model", f"{fixture} linear 1,-2,0.5,1,2,3", "--categorical", "colour",
               "--ignore", "flat,score,label"],
    "ridge": ["--surrogate", "ridge", "--target", "column:score", "--ignore", "flat,colour,label"],
    "logistic": ["--surrogate", "logistic", "--target", "column:label", "--metric", "accuracy",
                 "--ignore", "flat,colour,score"],
}

failures = 0
for name, extra in runs.items():
    out = work / name
    cmd = [cli, "audit", "--data", str(data), "--out", str(out), "--format", "json,csv,svg", "--seed", "2"] + extra
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode != 0:
        print(f"FAIL {name}: exit {proc.returncode}\n{proc.stderr}")
        failures += 1
        continue
    doc = json.loads((out / "report.json").read_text())
    errors = sorted(jsonschema.Draft202012Validator(schema).iter_errors(doc), key=str)
    for e in errors:
        print(f"FAIL {name}: {e.json_path}: {e.message}")
    failures += bool(errors)

    root = ET.parse(out / "report.svg").getroot()
    bars = [el for el in root.iter("{http://www.w3.org/2000/svg}rect") if el.get("class") == "bar"]
    ok_entries = [e for e in doc["report"]["entries"] if "error" not in e]
    if len(bars) != len(ok_entries):
        print(f"FAIL {name}: {len(bars)} bars for {len(ok_entries)} non-errored entries")
        failures += 1

    if name == "model_errored" and not any("error" in e for e in doc["report"]["entries"]):
        print("FAIL model_errored: expected an errored entry for the constant column")
        failures += 1
    if name == "groups" and not doc["report"]["groups"]:
        print("FAIL groups: expected a one-hot group")
        failures += 1
    if name in ("ridge", "logistic") and "surrogate" not in doc:
        print(f"FAIL {name}: surrogate block missing")
        failures += 1
    print(f"{'ok' if not failures else '..'} {name}")

sys.exit(1 if failures else 0)
