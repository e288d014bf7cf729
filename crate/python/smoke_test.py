"""Smoke test for the `disentangle` extension module.

Build and install first:  pip install --no-build-isolation ./crates/py
"""

import json
import math

import disentangle as d


def close(a, b, tol):
    assert abs(a - b) <= tol, (a, b, tol)


def main():
    p = 0.4
    amp = [math.sqrt(p), 0.0, 0.0, math.sqrt(1 - p)]
    rho = d.DensityMatrix.from_pure(amp, [2, 2])
    close(rho.purity(), 1.0, 1e-12)
    close(rho.entropy(), 0.0, 1e-9)
    mi = rho.mutual_information()
    close(mi, -2 * (p * math.log(p) + (1 - p) * math.log(1 - p)), 1e-9)

    b = rho.bloch()
    close(sum(x * x for row in b for x in row) / 2, rho.purity(), 1e-12)

    zero = [[0j] * 4 for _ in range(4)]
    traj = d.evolve(rho, zero, gamma=1.0, dt=1e-3, t_max=8.0, constrained=False, record_every=1000)
    t, last = traj[-1]
    close(t, 8.0, 1e-9)
    close(last.purity(), 0.25, 1e-2)

    traj = d.evolve(rho, zero, constrained=True, t_max=2.0, record_every=500)
    a0 = traj[0][1].partial_trace(0).matrix()
    a1 = traj[-1][1].partial_trace(0).matrix()
    close(abs(a1[0][0] - a0[0][0]), 0.0, 1e-8)
    assert traj[-1][1].mutual_information() < mi

    h = [[1, 0], [0, -1]]
    g = d.gibbs_state(h, 1.0)
    close(g.matrix()[0][0].real, math.exp(-1) / (2 * math.cosh(1)), 1e-12)

    me, iters = d.maxent(rho)
    close(me.mutual_information(), 0.0, 1e-8)
    assert iters >= 1

    s = 1 / math.sqrt(2)
    bell = d.DensityMatrix.from_pure([s, 0, 0, s], [2, 2])
    r = s
    settings = [[0, 0, 1], [1, 0, 0], [r, 0, r], [-r, 0, r]]
    close(d.chsh(bell, settings), 2 * math.sqrt(2), 1e-9)

    text, checks = d.run_scenario("witness", {"t_max": "0.5", "constrained": "true"})
    report = json.loads(text)
    assert report["gap"][0] == 0.0
    assert all(passed for _, _, passed in checks), checks

    try:
        d.DensityMatrix([[2, 0], [0, 0]])
    except ValueError:
        pass
    else:
        raise AssertionError("trace-2 matrix accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
