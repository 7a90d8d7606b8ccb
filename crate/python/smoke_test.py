"""Smoke test for the latlip Python extension.

Build the extension, then run this script:

    cargo build --release -p latlip-py --features extension-module
    python3 python/smoke_test.py

The script looks for the compiled library under target/release unless
LATLIP_LIB points at it.
"""

import importlib.machinery
import importlib.util
import json
import math
import os
import pathlib
import sys

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load():
    path = os.environ.get("LATLIP_LIB")
    if path is None:
        for name in ("liblatlip.so", "liblatlip.dylib", "latlip.dll"):
            candidate = ROOT / "target" / "release" / name
            if candidate.exists():
                path = str(candidate)
                break
    if path is None:
        sys.exit("compiled extension not found; build with --features extension-module")
    loader = importlib.machinery.ExtensionFileLoader("latlip", path)
    spec = importlib.util.spec_from_file_location("latlip", path, loader=loader)
    module = importlib.util.module_from_spec(spec)
    loader.exec_module(module)
    return module


def main():
    latlip = load()

    s = latlip.Operator.catalog("S")
    assert s([1.0, 2.0]) == [5.0, 4.0]
    assert abs(latlip.diagonal_value(s, [1.0, 2.0]) - 2.6) < 1e-12
    assert abs(latlip.diagonal_error(s, [1.0, 2.0]) - 1.2) < 1e-12
    assert latlip.diagonal_error(s, [0.5, 0.5]) < 1e-12

    r0 = latlip.Operator.catalog("R", r=0.0)
    seeded, cloud = latlip.eigensearch(r0, n_initial=500, n_select=100, steps=10, seed=3)
    assert len(seeded) == 500 and len(cloud) == 100
    history = cloud.history
    assert all(b <= a for a, b in zip(history, history[1:]))
    again = latlip.eigensearch(r0, n_initial=500, n_select=100, steps=10, seed=3)[1]
    assert again.points == cloud.points

    frame = latlip.Frame([[1.0, 1.0], [1.0, -1.0]])
    pts = [[t / 50, t / 50] for t in range(-50, 51)] + [[t / 50, -t / 50] for t in range(-50, 51)]
    model = latlip.Model.fit(frame, s, pts, alpha=0.0)
    assert model.is_certified()
    assert all(abs(k - 3.96) < 1e-9 for k in model.k)
    ev = model.evaluate([0.3, 0.0])
    assert ev["mcshane"][0] <= ev["interpolant"][0] <= ev["whitney"][0]
    fhat = model([0.3, 0.3])
    assert max(abs(a - b) for a, b in zip(fhat, s([0.3, 0.3]))) < 1e-12
    restored = latlip.Model.from_json(model.to_json())
    assert restored.k == model.k

    audit = latlip.bound_audit(s, model, per_axis=21)
    assert audit["violations"] == 0

    pca, variances = latlip.Frame.pca(pts)
    assert variances[0] >= variances[1]

    # A Python callable drives the same search and fit.
    def swap(x):
        return [x[1], x[0]]

    op = latlip.Operator.from_callable("swap", 2, swap, lower=[-1.0, -1.0], upper=[1.0, 1.0])
    _, swapped = latlip.eigensearch(op, n_initial=100, n_select=20, steps=3)
    assert swapped.mean_error < 0.5

    report = latlip.benchmark(
        "[search]\nn_initial = 200\nn_select = 40\n[benchmark]\nmc_points = 1000\naudit_grid = 21\n"
    )
    assert math.isfinite(report["error"]["l2_normalized"])
    assert len(report["K"]) == 2

    try:
        latlip.benchmark("[fit]\nalpha = 3.0\n")
    except ValueError:
        pass
    else:
        raise AssertionError("bad config accepted")

    try:
        latlip.Frame([[1.0, 1.0], [2.0, 2.0]])
    except ArithmeticError:
        pass
    else:
        raise AssertionError("dependent basis accepted")

    print(json.dumps({"smoke": "ok", "l2": report["error"]["l2_normalized"], "K": report["K"]}))


if __name__ == "__main__":
    main()
