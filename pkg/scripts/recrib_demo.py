"""Run the bundled scenarios end to end and print their summaries.

The strict broken-detuning scenario is expected to refuse its reading
stage; the other three should complete with the efficiencies noted in
each file's header comment.

Usage: python3 scripts/recrib_demo.py [--out-root runs]
"""

import argparse
import os

from ramanecho.errors import ConditionsUnmet
from ramanecho.runs import run_scenario, write_outputs
from ramanecho.scenario import load_scenario

SCENARIO_DIR = os.path.join(os.path.dirname(__file__), "..", "scenarios")
NAMES = ("recrib_ideal", "recrib_strong", "reafc_weak", "recrib_broken_iv")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-root", default="runs")
    args = parser.parse_args()

    for name in NAMES:
        path = os.path.join(SCENARIO_DIR, f"{name}.ini")
        scenario = load_scenario(path)
        print(f"=== {name} ===")
        try:
            result = run_scenario(scenario)
        except ConditionsUnmet as exc:
            print(f"refused: {exc}")
            continue
        for line in result.summary_lines():
            print(line)
        out_dir = os.path.join(args.out_root, name)
        for written in write_outputs(result, out_dir).values():
            print(f"wrote {written}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
