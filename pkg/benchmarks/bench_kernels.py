"""Time the integrator kernels compiled with numba against the plain-Python path.

    python3 benchmarks/bench_kernels.py [--shots 40] [--repeat 3]

Each backend runs in its own interpreter because SDOSC_NO_NUMBA is read at
import time.  Reported times exclude the first (compiling) call.
"""
import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from sdosc import _kernels as K
from sdosc.model import make_params
from sdosc.poincare import displacement_values
from sdosc.integrator import flow, positive_x_axis
from sdosc.model import PhasePoint

shots, repeat = int(sys.argv[1]), int(sys.argv[2])
p = make_params(1.2, -5.93, 0.1)
cs = np.linspace(-2.0, -0.01, shots)
displacement_values(cs[:2], p)  # warm up (compiles under numba)
flow(PhasePoint(-1.0, 0.0), p, [positive_x_axis()])
best_shoot, best_flow = float("inf"), float("inf")
for _ in range(repeat):
    t = time.perf_counter()
    d = displacement_values(cs, p)
    best_shoot = min(best_shoot, time.perf_counter() - t)
    t = time.perf_counter()
    for _ in range(10):
        flow(PhasePoint(-1.0, 0.0), p, [positive_x_axis()], store="steps")
    best_flow = min(best_flow, (time.perf_counter() - t) / 10)
print(json.dumps({"numba": K.USE_NUMBA, "shoot_batch_s": best_shoot, "flow_s": best_flow,
                  "checksum": float(np.nansum(d[np.isfinite(d)]))}))
"""


def run(no_numba, shots, repeat):
    env = dict(os.environ)
    env["SDOSC_NO_NUMBA"] = "1" if no_numba else "0"
    r = subprocess.run([sys.executable, "-c", WORKER, str(shots), str(repeat)], env=env,
                       capture_output=True, text=True, check=True)
    return json.loads(r.stdout.strip().splitlines()[-1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--shots", type=int, default=40)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    jit = run(False, args.shots, args.repeat)
    py = run(True, args.shots, args.repeat)
    print(f"{'backend':<8} {'shoot x' + str(args.shots):>12} {'one flow':>10}")
    for name, r in (("numba", jit), ("python", py)):
        print(f"{name:<8} {r['shoot_batch_s']:>11.4f}s {r['flow_s']:>9.4f}s")
    print(f"speedup  {py['shoot_batch_s'] / jit['shoot_batch_s']:>11.1f}x {py['flow_s'] / jit['flow_s']:>9.1f}x")
    same = abs(jit["checksum"] - py["checksum"]) <= 1e-9 * max(1.0, abs(jit["checksum"]))
    print(f"results agree: {same}")
    return 0 if same else 1


if __name__ == "__main__":
    sys.exit(main())
