"""Compare the numba-compiled kernels with the pure-numpy fallback.

Each backend runs in its own interpreter because the choice is made once,
at import time, from ``GYROFREE_DISABLE_NUMBA``. For each backend the script
reports the first call (which includes compilation or cache loading for
numba) and the best of several repeated closed-loop runs.

    python benchmarks/bench_kernels.py [--duration 5] [--repeat 3]
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = """
import json, sys, time
import gyrofree
from gyrofree.sim import SimConfig, run

duration, repeat = float(sys.argv[1]), int(sys.argv[2])
cfg = SimConfig(duration=duration, seed=0, noise_on=True)
start = time.perf_counter()
run(SimConfig(duration=0.01, seed=0))
first = time.perf_counter() - start
times = []
for _ in range(repeat):
    start = time.perf_counter()
    run(cfg)
    times.append(time.perf_counter() - start)
json.dump({"backend": gyrofree.backend_name(), "first_call": first, "best": min(times),
           "steps": cfg.n_steps}, sys.stdout)
"""


def measure(disable_numba: bool, duration: float, repeat: int) -> dict:
    env = dict(os.environ, GYROFREE_DISABLE_NUMBA="1" if disable_numba else "0")
    out = subprocess.run([sys.executable, "-c", WORKER, str(duration), str(repeat)],
                         env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--duration", type=float, default=5.0, help="simulated seconds per run")
    parser.add_argument("--repeat", type=int, default=3, help="timed runs per backend")
    args = parser.parse_args(argv)

    results = [measure(False, args.duration, args.repeat), measure(True, args.duration, args.repeat)]
    print(f"{'backend':<8} {'first call [s]':>15} {'best run [s]':>13} {'steps/s':>12}")
    for r in results:
        print(f"{r['backend']:<8} {r['first_call']:>15.3f} {r['best']:>13.3f} "
              f"{r['steps'] / r['best']:>12.0f}")
    print(f"speed-up of numba over numpy: {results[1]['best'] / results[0]['best']:.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
