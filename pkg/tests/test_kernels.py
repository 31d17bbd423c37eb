"""The compiled kernel and the plain-Python fallback must agree."""
import json
import os
import subprocess
import sys

import numpy as np

from sdosc import _kernels as K
from sdosc.model import make_params
from sdosc.poincare import displacement_values

SCRIPT = """
import json
from sdosc import _kernels as K
from sdosc.model import make_params
from sdosc.poincare import displacement_values
p = make_params(1.2, -5.93, 0.1)
print(json.dumps({"numba": K.USE_NUMBA, "d": displacement_values([-0.2, -0.8, -1.5], p).tolist()}))
"""


def test_fallback_matches_compiled():
    env = dict(os.environ, SDOSC_NO_NUMBA="1")
    r = subprocess.run([sys.executable, "-c", SCRIPT], env=env, capture_output=True, text=True, check=True)
    pure = json.loads(r.stdout)
    assert pure["numba"] is False
    d = displacement_values([-0.2, -0.8, -1.5], make_params(1.2, -5.93, 0.1))
    assert np.allclose(pure["d"], d, rtol=1e-12, atol=1e-13)


def test_compiled_by_default():
    if os.environ.get("SDOSC_NO_NUMBA", "") in ("", "0"):
        assert K.USE_NUMBA


def test_benchmark_runs():
    root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    r = subprocess.run([sys.executable, os.path.join(root, "benchmarks", "bench_kernels.py"),
                        "--shots", "4", "--repeat", "1"], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert "results agree: True" in r.stdout
