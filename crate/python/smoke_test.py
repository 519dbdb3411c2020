#!/usr/bin/env python3
"""Smoke test for the weightlab_py extension module.

Builds nothing itself: it locates the compiled cdylib under target/ (release
preferred), exposes it as an importable module, and checks a handful of
closed-form values end to end.

Usage:
    cargo build --release -p weightlab-py
    python3 python/smoke_test.py
"""

import math
import os
import shutil
import sys
import tempfile


def locate_extension():
    root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    candidates = [
        os.path.join(root, "target", "release", "libweightlab_py.so"),
        os.path.join(root, "target", "debug", "libweightlab_py.so"),
        os.path.join(root, "target", "release", "libweightlab_py.dylib"),
        os.path.join(root, "target", "debug", "libweightlab_py.dylib"),
    ]
    for c in candidates:
        if os.path.exists(c):
            return c
    sys.exit("build the extension first: cargo build --release -p weightlab-py")


def import_module():
    lib = locate_extension()
    stage = tempfile.mkdtemp(prefix="weightlab_py_")
    shutil.copy(lib, os.path.join(stage, "weightlab_py.so"))
    sys.path.insert(0, stage)
    import weightlab_py

    return weightlab_py


def approx(a, b, rel=1e-9):
    return abs(a - b) <= rel * max(1.0, abs(a), abs(b))


def main():
    wl = import_module()
    print(f"weightlab_py {wl.__version__}")

    # averages: the power weight |x| on [0,1] averages to 1/2
    w = wl.Weight.power(1, 1.0)
    assert approx(w.avg([0.5], 0.5), 0.5)
    assert approx(w.integral([1.5], 0.5), 1.5)  # ∫_1^2 x dx

    # discrete tail of the constant weight: Σ 2^{-k} = 2 at p = 2
    one = wl.Weight.constant(1)
    t = one.discrete_tail([0.5], 0.5, 2.0)
    assert approx(t["value"], 2.0, rel=1e-8), t

    # continuous tail of the constant weight on [0,1] at p = 2 is 3
    t = one.continuous_tail([0.5], 0.5, 2.0)
    assert abs(t["value"] - 3.0) <= t["truncation_bound"] + 1e-9, t

    # C_p constant of w ≡ 1: (p-1)/(p+1)
    est = one.cp_constant(2.0, depth=4, resolution=256)
    assert approx(est["value"], 1.0 / 3.0, rel=1e-3), est
    est = one.cp_constant(3.0, depth=4, resolution=256)
    assert approx(est["value"], 0.5, rel=1e-3), est

    # A-infinity constant of the constant weight is exactly 1
    est = one.ainfty_constant(depth=4, resolution=256)
    assert approx(est["value"], 1.0), est

    # theorem constants at n=1, p=2: B = 163840, beta = 4/3 < 2
    tc = wl.theorem_constants(1, 2.0)
    assert approx(tc["b_const"], 163840.0), tc
    assert approx(tc["beta"], 4.0 / 3.0) and tc["beta"] < 2.0

    # Mχ_[0,1](2) = 1/2 exactly
    assert approx(wl.m_chi_cube([0.5], 0.5, [2.0]), 0.5)

    # grid maximal dominates the data and is exact for constants
    m = wl.hl_maximal([1.0] * 64, -1.0, 1.0)
    assert all(approx(v, 1.0) for v in m)

    # truncated Hilbert transform of χ_[0,1] near x=2 is ln 2
    n = 2048
    lo, hi = -4.0, 4.0
    d = (hi - lo) / n
    values = [1.0 if 0.0 <= lo + (i + 0.5) * d < 1.0 else 0.0 for i in range(n)]
    tstar = wl.truncated_hilbert_maximal(values, lo, hi)
    idx = int((2.0 - lo) / d)
    assert abs(tstar[idx] - math.log(2.0)) < 0.02 * math.log(2.0)

    # Whitney decomposition of the full box covers it exactly
    cover = wl.whitney_decompose([True] * 256, 0.0, 1.0)
    total = sum(0.5 ** level for (level, _, _, _) in cover)
    assert approx(total, 1.0, rel=1e-12)
    assert all(5.0 <= ratio <= 15.0 for (_, _, _, ratio) in cover)

    # CZ decomposition of a left spike at lambda = 3 selects the left half
    spike = wl.Weight.from_grid(1, 0.0, 1.0, 2, [4.0, 0.0])
    sel = spike.cz_decompose([0.5], 0.5, 3.0, 8)
    assert len(sel) == 1 and sel[0][0] == 1 and sel[0][1] == 0, sel
    assert 3.0 < sel[0][3] <= 6.0

    # Φ(1) = log(e + 1)
    assert approx(wl.phi(1.0), math.log(math.e + 1.0))

    print("smoke test: all checks passed")


if __name__ == "__main__":
    main()
