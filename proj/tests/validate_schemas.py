#!/usr/bin/env python3
"""Run the command-line tool end to end and validate its outputs.

usage: validate_schemas.py <wkh binary> <schemas dir>
"""
import csv
import json
import pathlib
import subprocess
import sys
import tempfile

import jsonschema

failures = []


def check(cond, what):
    print(("ok    " if cond else "FAIL  ") + what)
    if not cond:
        failures.append(what)


def main():
    binary, schema_dir = sys.argv[1], pathlib.Path(sys.argv[2])
    schemas = {p.name.split(".")[0]: json.loads(p.read_text()) for p in schema_dir.glob("*.schema.json")}
    for s in schemas.values():
        jsonschema.Draft202012Validator.check_schema(s)
    with tempfile.TemporaryDirectory(prefix="wkh_schemas_") as tmp:
        run_all(binary, schemas, pathlib.Path(tmp))
    print(f"{len(failures)} failure(s)")
    return 1 if failures else 0


def run_all(binary, schemas, work):

    def run(*args):
        return subprocess.run([binary, *map(str, args)], capture_output=True, text=True)

    def validate(path, name):
        try:
            jsonschema.validate(json.loads(pathlib.Path(path).read_text()), schemas[name])
            check(True, f"{path.name} matches {name}")
        except (jsonschema.ValidationError, OSError, ValueError) as e:
            check(False, f"{path.name} matches {name}: {e}")

    def header(path):
        with open(path, newline="") as f:
            return next(csv.reader(f))

    def expect(code, what, *args):
        r = run(*args)
        check(r.returncode == code, f"{what}: exit {r.returncode}, expected {code}")
        return r

    sim = ["simulate", "--gamma", 2 / 7, "--a", "1,1,1", "--initial-state", "0.1,0.2,0.3", "--t-max", 50]
    expect(0, "simulate csv", *sim, "--out", work / "sim.csv")
    check(header(work / "sim.csv") == ["t", "J_1", "J_2", "J_3", "residual"], "simulate csv header")
    validate(work / "sim.csv.events.json", "events")
    expect(0, "simulate json", *sim, "--out", work / "sim.json", "--format", "json")
    validate(work / "sim.json", "simulate")
    validate(work / "sim.json.events.json", "events")

    for tag, args in [
        ("homogeneous", ["--gamma", 2 / 7, "--a", "1,1,1"]),
        ("two_seller", ["--gamma", 0.3, "--a", "1,2"]),
        ("general", ["--gamma", 0.3, "--a", "1,1.5,2", "--solver", "general"]),
        ("two_cluster", ["--gamma", 0.2, "--cluster", "8,7,1,1.5"]),
    ]:
        expect(0, f"equilibria {tag} csv", "equilibria", *args, "--out", work / f"eq_{tag}.csv")
        h = header(work / f"eq_{tag}.csv")
        check(h[0] == "J_1" and h[-7:] == ["residual", "max_real_eigenvalue", "min_real_eigenvalue", "stability",
                                           "reduced_stability", "source", "label"], f"equilibria {tag} csv header")
        expect(0, f"equilibria {tag} json", "equilibria", *args, "--out", work / f"eq_{tag}.json", "--format", "json")
        validate(work / f"eq_{tag}.json", "equilibria")

    for tag, args in [
        ("homogeneous", ["--regime", "homogeneous", "--a", "1,1,1"]),
        ("two_seller", ["--regime", "two_seller", "--a", "1,2"]),
        ("two_cluster", ["--regime", "two_cluster", "--cluster", "8,7,1,1.5"]),
    ]:
        grid = ["--gamma-lo", 0.02, "--gamma-hi", 0.8, "--gamma-count", 40]
        expect(0, f"sweep {tag} csv", "sweep", *args, *grid, "--out", work / f"sw_{tag}.csv")
        check(header(work / f"sw_{tag}.csv") == ["gamma", "branch", "delta", "stability"], f"sweep {tag} csv header")
        validate(work / f"sw_{tag}.csv.thresholds.json", "thresholds")
        expect(0, f"sweep {tag} json", "sweep", *args, *grid, "--out", work / f"sw_{tag}.json", "--format", "json")
        validate(work / f"sw_{tag}.json", "sweep")

    sf = ["streamfield", "--gamma", 2 / 7, "--a", "1,1,1", "--grid-count", 21]
    expect(0, "streamfield csv", *sf, "--out", work / "sf.csv")
    check(header(work / "sf.csv") == ["delta_1", "delta_2", "G_1", "G_2"], "streamfield csv header")
    expect(0, "streamfield json", *sf, "--out", work / "sf.json", "--format", "json")
    validate(work / "sf.json", "streamfield")

    vf = ["verify", "--gamma", 2 / 7, "--a", "1,1,1", "--trials", 10]
    r = expect(0, "verify", *vf, "--out", work / "v.json")
    check("PASS" in r.stdout and "FAIL" not in r.stdout, "verify prints PASS lines")
    validate(work / "v.json", "verify")
    r = expect(1, "verify negative control", *vf, "--field-bias", 1e-3, "--checks", "simplex_decay",
               "--out", work / "vbad.json")
    check("FAIL" in r.stdout, "negative control prints FAIL")
    validate(work / "vbad.json", "verify")

    expect(2, "negative gamma", "equilibria", "--gamma", -1, "--a", "1,1,1", "--out", work / "x.csv")
    expect(2, "unknown check", *vf, "--checks", "no_such_check", "--out", work / "x.json")
    cfg = work / "bad.json"
    cfg.write_text(json.dumps({"gamma": 0.3, "a": [1, 1, 1], "colour": "red"}))
    expect(2, "unknown config key", "equilibria", "--config", cfg, "--out", work / "x.csv")
    expect(2, "missing subcommand")
    expect(1, "unwritable output", "equilibria", "--gamma", 0.3, "--a", "1,1,1",
           "--out", work / "missing" / "dir" / "x.csv")


if __name__ == "__main__":
    sys.exit(main())
