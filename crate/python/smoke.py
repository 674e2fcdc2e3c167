#!/usr/bin/env python3
"""Build the extension, import it and run a short backtest.

    python3 python/smoke.py            # builds with cargo, then imports
    python3 python/smoke.py --no-build # reuse python/olps.so
"""

import pathlib
import shutil
import subprocess
import sys

HERE = pathlib.Path(__file__).resolve().parent
ROOT = HERE.parent


def build():
    subprocess.run(
        ["cargo", "build", "--release", "-p", "olps-python", "--features", "extension-module"],
        cwd=ROOT,
        check=True,
    )
    shutil.copyfile(ROOT / "target" / "release" / "libolps.so", HERE / "olps.so")


def main():
    if "--no-build" not in sys.argv:
        build()
    sys.path.insert(0, str(HERE))
    import olps

    prices = olps.synth_market("mean-reverting", 250, 5, seed=1, speed=0.2, volatility=0.03)
    rel = olps.to_relatives(prices)
    print(olps.describe(rel, "synthetic"))
    for gamma in (0.0, 0.0025):
        cells = []
        for strategy in olps.Strategy.all():
            result = strategy.run(rel, gamma=gamma)
            cells.append(f"{strategy.name}={olps.format_wealth(result.final_wealth)}")
        print(f"gamma={gamma}: " + " ".join(cells))

    alternating = olps.to_relatives(olps.synth_market("alternating", 201, 2))
    wealth = olps.Strategy("crp").run(alternating).final_wealth
    assert abs(wealth / 1.125 ** 100 - 1) < 1e-9, wealth
    assert olps.project_simplex([2.0, 0.0]) == [1.0, 0.0]
    print("smoke ok")


if __name__ == "__main__":
    main()
