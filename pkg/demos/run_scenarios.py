"""Run every shipped scenario and print its checks and convergence orders.

    python3 demos/run_scenarios.py [scenario.json ...]
"""

import sys
from pathlib import Path

from spinsurf.pipelines import Scenario, run_scenario

ROOT = Path(__file__).resolve().parent.parent


def main(paths):
    paths = paths or sorted((ROOT / "scenarios").glob("*.json"))
    failed = 0
    for path in paths:
        sc = Scenario.load(path)
        report, results = run_scenario(sc)
        failed += not report["passed"]
        print(f"{'PASS' if report['passed'] else 'FAIL'} {sc.name}")
        for stage, res in results.items():
            for name, st in sorted(res.studies.items()):
                vals = " ".join(f"{v:.2e}" for v in st.values)
                orders = " ".join(f"{o:.2f}" for o in st.orders)
                print(f"    {stage}:{name:<22} {vals}  orders {orders}")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
