"""Small helper shared by the demo scripts: run one CLI command and echo its report."""

import json
import os
import sys

from vrepfcm.cli import main

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.environ.get("VREPFCM_DEMO_OUT", os.path.join(HERE, "out"))


def config(name: str) -> str:
    return os.path.join(HERE, "configs", name)


def cli(*args: str, out: str) -> dict:
    """Run ``vrepfcm <args> --out OUT/<out>`` in-process; returns the run report."""
    d = os.path.join(OUT, out)
    print(f"\n$ vrepfcm {' '.join(args)} --out {os.path.relpath(d)}", flush=True)
    code = main([*args, "--out", d])
    with open(os.path.join(d, "report.json")) as fh:
        report = json.load(fh)
    if code:
        print(f"  exit {code}: {report['error']['message']}")
        sys.exit(code)
    return report


def show(path: str, limit: int = 12):
    with open(os.path.join(OUT, path)) as fh:
        lines = fh.read().splitlines()
    for ln in lines[:limit]:
        print("  " + ln)
    if len(lines) > limit:
        print(f"  ... ({len(lines) - limit} more lines)")
