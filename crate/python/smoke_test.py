"""Smoke test for the pyqtheta extension module.

Build and install first, e.g. ``maturin develop -m crates/python/Cargo.toml``,
then run ``python python/smoke_test.py``.
"""

import cmath
import json
import math

import pyqtheta as qt


def close(a, b, tol):
    assert abs(a - b) < tol, f"{a} vs {b}"


def main():
    k = qt.Kaehler.standard(1)
    z2 = qt.Lattice.standard(1)
    assert k.half_dim == 1 and z2.rank == 2

    th = qt.QuantumTheta(k, z2, 6.0)
    close(th.prefactor, 1 / math.sqrt(2), 1e-15)
    for h in ([0, 0], [1, 0], [1, 1], [2, -1]):
        expected = math.exp(-math.pi / 2 * (h[0] ** 2 + h[1] ** 2))
        close(th.element.coefficient(h), expected, 1e-12)
    assert th.tail_bound < 1e-10
    assert th.invariance_residual([1, 0]) < 1e-10

    value, tail = qt.classical_theta([[1j]], [0j])
    oracle = sum(math.exp(-math.pi * n * n) for n in range(-40, 41))
    close(value, oracle, 1e-12)
    assert tail < 1e-12

    rot = [[0.0, 0.3], [-0.3, 0.0]]
    a = qt.TorusElement(rot, {(1, 0): 1.0, (0, 2): 0.5j})
    b = qt.TorusElement(rot, {(0, 1): 2.0 - 1j})
    assert ((a * b).star()).max_abs_diff(b.star() * a.star()) < 1e-12
    u = qt.TorusElement(rot, {(1, 0): 1.0})
    v = qt.TorusElement(rot, {(0, 1): 1.0})
    close((u * v).coefficient([1, 1]), cmath.exp(1j * math.pi * 0.3), 1e-14)

    two = qt.Lattice.from_json(json.dumps({"N": 1, "generators": [[2, 0], [0, 1]]}))
    close(two.covolume(), 2.0, 1e-12)
    rep = qt.poisson_check(k, two, [[0.0, 0.0], [0.3, -0.7]])
    close(rep["ratio"], 2.0, 1e-9)
    assert rep["normalized_residual"] < 1e-8
    assert rep["literal_residual"] > 0.1

    cochain = qt.z2_cochain()
    assert len(cochain) == 4
    rank, gamma_dim, _ = qt.z2_basis_report()
    assert (rank, gamma_dim) == (4, 4)

    for name in qt.bundled_scenarios():
        report = json.loads(qt.run_scenario(name, 3))
        assert report["pass"], name

    try:
        qt.Kaehler([[-1j]])
    except qt.QthetaError:
        pass
    else:
        raise AssertionError("expected QthetaError for Im T < 0")

    print("pyqtheta smoke test: ok")


if __name__ == "__main__":
    main()
