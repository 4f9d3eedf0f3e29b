"""Builds the extension module, imports it and checks a few known values.

Usage: python3 python/smoke_test.py
"""

import json
import math
import pathlib
import shutil
import subprocess
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def build():
    subprocess.run(["cargo", "build", "-p", "barylab-py"], cwd=ROOT, check=True)
    lib = ROOT / "target" / "debug" / "libpybarylab.so"
    dest = pathlib.Path(tempfile.mkdtemp()) / "pybarylab.so"
    shutil.copy(lib, dest)
    sys.path.insert(0, str(dest.parent))


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a} != {b}"


def main():
    build()
    import pybarylab as bl

    e = [bl.Point.sphere(v) for v in ([1, 0, 0], [0, 1, 0], [0, 0, 1])]
    close(bl.distance(e[0], e[1]), math.pi / 2, 1e-12)
    close(bl.log_norm(e[0], e[1]), math.pi / 2, 1e-12)

    r = bl.barycenter(e)
    assert r["converged"] and r["grad_norm"] <= 1e-10
    for c in r["point"].coords:
        close(c, 1 / math.sqrt(3), 1e-9)
    close(r["objective"], math.acos(1 / math.sqrt(3)) ** 2, 1e-12)

    mid = bl.geodesic_point(bl.Point.euclidean([0, 0]), bl.Point.euclidean([2, 0]), 0.25)
    assert mid.coords == [0.5, 0.0]

    p = bl.Point.from_json('{"space": "gaussian", "mean": [0.0], "cov": [[1.0]]}')
    q = bl.Point.gaussian([0.0], [[9.0]])
    close(bl.distance(p, q), 2.0, 1e-12)
    assert json.loads(q.to_json())["space"] == "gaussian"

    o, x, y = (bl.Point.euclidean(v) for v in ([0, 0], [1, 0], [0, 1]))
    close(bl.hugging_value(o, x, y), 1.0, 1e-12)
    close(bl.comparison_angle(0.0, 1.0, 1.0, math.sqrt(2)), math.pi / 2, 1e-12)
    close(bl.extendibility_kmin(1.0, math.inf), 0.0, 1e-12)
    close(bl.wasserstein_kmin(0.8, 1.6), 0.2, 1e-12)

    try:
        bl.Point.sphere([1, 1])
    except ValueError:
        pass
    else:
        raise AssertionError("non-unit sphere point accepted")

    config = {
        "family": {"type": "euclidean_gaussian", "dim": 3, "scale": 1.0},
        "n_grid": [10, 100],
        "trials": 200,
        "theorem": "negcurv",
        "sigma2_draws": 20000,
        "verify_draws": 20000,
    }
    curve = bl.run_rate_experiment(json.dumps(config))
    assert [rec["n"] for rec in curve["records"]] == [10, 100]
    assert curve["csv"].startswith("space,n,trials,mean_sq_dist")
    print(f"pybarylab {bl.__version__}: smoke test passed")


if __name__ == "__main__":
    main()
