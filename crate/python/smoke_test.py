"""Smoke test for the pygainloss extension module.

Build and install first:  pip install --no-build-isolation -e crates/python
"""

import math
import sys

import pygainloss as gl


def main():
    r = gl.synth("gaussian", n=20000, seed=1, sigma=0.01)
    assert len(r) == 20000
    assert abs(r.sigma - 0.01) < 5e-4, r.sigma

    same = gl.synth("gaussian", n=20000, seed=1, sigma=0.01)
    assert r.values() == same.values()

    d = gl.fpt_distribution(r, k=5.0, tau_max=1000)
    assert sum(d.counts()) + d.censored == d.total_starts
    mode = d.mode()
    assert 4 <= mode <= 20, mode

    diff = 0.01 ** 2 / 2
    assert gl.brownian_fpt_pdf(0.05, diff, 8.0) == gl.brownian_fpt_pdf(-0.05, diff, 8.0)
    assert math.isclose(gl.brownian_mode(0.05, diff), 25 / 3)

    assert gl.partition(100, 40, 17) == [(0, 17), (17, 57), (57, 97), (97, 100)]
    s = gl.shuffle_blocks(r, 7, 3, seed=9)
    assert sorted(s.values()) == sorted(r.values())
    assert s.sigma == r.sigma

    t = gl.synth("drop_rebound", n=5000, seed=2)
    sw = gl.sweep(t, windows=[1, 5, 25, 1000], ks=[3.0], n_p=10, seed=3)
    assert len(sw.cells()) == 4
    w = sw.asymmetry(0, 1000)
    assert w[-1][1] == 1.0
    assert sw.to_csv().startswith("# sigma=")

    lev = gl.leverage(t, -5, 5)
    assert [row[0] for row in lev] == list(range(-5, 6))

    g, _ = gl.gamma_scaling([(k * 0.01, 3 * (k * 0.01) ** 2) for k in range(1, 9)], 0.0)
    assert abs(g - 2.0) < 1e-9

    try:
        gl.ReturnSeries.from_csv("/nonexistent.csv")
    except OSError:
        pass
    else:
        raise AssertionError("expected OSError")

    print(f"pygainloss {gl.__version__}: smoke test ok (mode at 5 sigma = {mode})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
