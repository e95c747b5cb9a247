#!/usr/bin/env python3
"""Run every experiment family with its shipped config and summarize verdicts.

Usage: python scripts/run_all.py [--fast]

--fast trims the two long sweeps (fewer trials / smaller N list) so the whole
battery finishes in about a minute; the full battery takes several minutes.
"""
import argparse
import sys
import tempfile
import time
from pathlib import Path

from nlslab.cli import main as cli_main

HERE = Path(__file__).resolve().parent
CONFIGS = HERE / "configs"

PLAN = [
    ("selftest", None),
    ("evolve", "evolve.cfg"),
    ("locality", "locality-torus.cfg"),
    ("locality", "locality-sphere.cfg"),
    ("an-identity", "an-identity.cfg"),
    ("tensorize", "tensorize.cfg"),
    ("strichartz", "strichartz.cfg"),
    ("strichartz", "strichartz-rescaled.cfg"),
    ("almost-conservation", "almost-conservation.cfg"),
]

FAST_OVERRIDES = {
    "strichartz.cfg": {"N1_list": "8, 16", "trials": "5"},
    "strichartz-rescaled.cfg": {"N1_list": "8", "trials": "3"},
    "almost-conservation.cfg": {"N_list": "4, 8", "base_bandwidth": "16"},
}


def patched_config(name: str, overrides: dict) -> str:
    lines = []
    for line in (CONFIGS / name).read_text().splitlines():
        key = line.split("=", 1)[0].strip()
        if key in overrides:
            line = f"{key} = {overrides[key]}"
        lines.append(line)
    tmp = tempfile.NamedTemporaryFile("w", suffix=".cfg", delete=False)
    tmp.write("\n".join(lines) + "\n")
    tmp.close()
    return tmp.name


def run(fast: bool) -> int:
    failures = 0
    for experiment, cfg_name in PLAN:
        argv = [experiment]
        if cfg_name is not None:
            if fast and cfg_name in FAST_OVERRIDES:
                argv.append(patched_config(cfg_name, FAST_OVERRIDES[cfg_name]))
            else:
                argv.append(str(CONFIGS / cfg_name))
        label = f"{experiment}" + (f" ({cfg_name})" if cfg_name else "")
        print(f"=== {label} ===", flush=True)
        t0 = time.time()
        code = cli_main(argv)
        print(f"--- exit {code} after {time.time() - t0:.1f}s\n", flush=True)
        failures += code != 0
    return failures


if __name__ == "__main__":
    parser = argparse.ArgumentParser()
    parser.add_argument("--fast", action="store_true")
    args = parser.parse_args()
    sys.exit(1 if run(args.fast) else 0)
