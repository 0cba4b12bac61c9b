"""Runs every nisio subcommand on small configs and validates the emitted
JSON (stdout, report.json and error objects) against the published schema.

usage: schema_check.py <nisio binary> <schema file> <scratch dir>
"""

import json
import pathlib
import subprocess
import sys

import jsonschema

PROBLEM = """\
problem.topology = torus
problem.n = 32
problem.controls = "-1; 1"
problem.sigma = "1"
problem.drift = "v1"
problem.cost = "cos(2*pi*x1) + 0.25*v1*sin(2*pi*x1) + 1"
"""

SINGLE = """\
problem.topology = interval
problem.n = 32
problem.sigma = "0.8"
problem.drift = "0.5*sin(pi*x1)"
problem.cost = "1 + x1^2"
dv.samples = 5
"""

CASES = {
    "solve": (PROBLEM, []),
    "bounds": (PROBLEM + "bounds.iters = 10\n", ["--f", "phi"]),
    "dv": (SINGLE, []),
    "hji-check": (PROBLEM, []),
    "simulate": (PROBLEM + "mc.T = 1\nmc.N = 200\nmc.sweep = true\n"
                 "output.path_histogram = true\n", ["--seed", "4"]),
    "orbit": (PROBLEM + "orbit.record_every = 20\n", []),
    "evolve": (PROBLEM + "evolve.t_final = 0.05\nevolve.t_list = \"0.002; 0.001\"\n", []),
    "matrix-cw": ("matrix.rows = \"0,1; 2,0\"\nmatrix.shift = 1\nmatrix.x = \"1; 1\"\n", []),
}

FAILURES = {
    "bad-expression": ("solve", PROBLEM.replace("+ 1\"", "+ *\""), 1),
    "small-grid": ("solve", PROBLEM.replace("n = 32", "n = 4"), 1),
    "no-convergence": ("solve", PROBLEM + "solver.max_iters = 3\n", 2),
}


def main() -> int:
    binary, schema_path, scratch = sys.argv[1:4]
    schema = json.loads(pathlib.Path(schema_path).read_text())
    jsonschema.Draft202012Validator.check_schema(schema)
    validator = jsonschema.Draft202012Validator(schema)
    root = pathlib.Path(scratch)
    root.mkdir(parents=True, exist_ok=True)
    bad = 0

    def check(label, doc):
        nonlocal bad
        errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.path))
        if errors:
            bad += 1
            print(f"FAIL {label}: {errors[0].message} at {list(errors[0].path)}")
        else:
            print(f"ok   {label}")

    for command, (text, flags) in CASES.items():
        cfg = root / f"{command}.cfg"
        out = root / command
        cfg.write_text(text)
        proc = subprocess.run([binary, command, str(cfg), "--out", str(out), *flags],
                              capture_output=True, text=True, check=False)
        if proc.returncode != 0:
            bad += 1
            print(f"FAIL {command}: exit {proc.returncode}: {proc.stderr.strip()}")
            continue
        check(f"{command} stdout", json.loads(proc.stdout))
        check(f"{command} report.json", json.loads((out / "report.json").read_text()))

    for label, (command, text, code) in FAILURES.items():
        cfg = root / f"{label}.cfg"
        cfg.write_text(text)
        proc = subprocess.run([binary, command, str(cfg), "--out", str(root / label)],
                              capture_output=True, text=True, check=False)
        if proc.returncode != code:
            bad += 1
            print(f"FAIL {label}: exit {proc.returncode}, expected {code}")
            continue
        check(f"{label} stderr", json.loads(proc.stderr))

    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
