"""Regenerate the command-line fixtures under tests/data.

Writes a 4-state system (``toy4``), a diagonal system with known Hankel
singular values (``diag3``), a small sweep config, and the golden
``certify`` reports that tests/test_cli.py compares against.

    python3 scripts/make_toy_fixture.py [--out tests/data]
"""

import argparse
import contextlib
import io
import os

import numpy as np
import scipy.io

from balred.bench import gen_data
from balred.cli import main
from balred.lti import LtiSystem, ObservationGrid

TOY_A = np.array([
    [-1.0, 0.3, 0.0, 0.0],
    [-0.2, -1.5, 0.4, 0.0],
    [0.0, 0.0, -2.0, 0.5],
    [0.0, 0.1, -0.3, -0.8],
])
TOY_C = np.array([[1.0, 0.0, 0.5, 0.0], [0.0, 1.0, 0.0, -0.4]])
TOY_GEPS = np.diag([1e-2, 2e-2])
TOY_GRID = dict(dt=0.25, n=8, horizon=2.5)

# A = -diag(a), C = diag(c), L = diag(l), Gamma_eps = I: sigma_i = |c_i l_i| / (2 a_i)
DIAG_A = np.array([1.0, 2.0, 4.0])
DIAG_C = np.array([2.0, 2.0, 1.0])
DIAG_L = np.array([3.0, 2.0, 2.0])

TOY_CFG = """\
# small sweep used by the command-line tests
d = 12
d_out = 2
n_obs = 20
dt = 0.1
t_end = 2.0
T_horizon = 2.5
prior_samples = 8
lambda_grid = 0.01, 1, 100
ranks = 1..11
seed = 3
"""

CERTIFY_RUNS = {
    "golden_certify_pdbt.txt": ["--variant", "pdbt", "--rank", "2"],
    "golden_certify_pdtlbt.txt": ["--variant", "pdtlbt", "--horizon", "2.5", "--rank", "2"],
}


def diag_hsv():
    return np.sort(np.abs(DIAG_C * DIAG_L) / (2 * DIAG_A))[::-1]


def write_toy(out):
    d = os.path.join(out, "toy4")
    os.makedirs(d, exist_ok=True)
    rng = np.random.default_rng(20240611)
    L = rng.standard_normal((4, 3))
    system = LtiSystem(TOY_A, TOY_C, TOY_GEPS)
    grid = ObservationGrid.equidistant(TOY_GRID["dt"], TOY_GRID["n"], TOY_GRID["horizon"])
    truth = L @ rng.standard_normal(3)
    m = gen_data(system, grid, truth, seed=7)
    for name, M in (("A", TOY_A), ("C", TOY_C), ("Geps", TOY_GEPS), ("Lpr", L)):
        scipy.io.mmwrite(os.path.join(d, f"{name}.mtx"), M)
    np.savetxt(os.path.join(d, "m.txt"), m, fmt="%.17e")
    return d


def write_diag(out):
    d = os.path.join(out, "diag3")
    os.makedirs(d, exist_ok=True)
    for name, M in (("A", -np.diag(DIAG_A)), ("C", np.diag(DIAG_C)), ("Geps", np.eye(3)),
                    ("Lpr", np.diag(DIAG_L))):
        scipy.io.mmwrite(os.path.join(d, f"{name}.mtx"), M)
    np.savetxt(os.path.join(d, "hsv.txt"), diag_hsv(), fmt="%.17e")
    return d


def toy_args(d):
    files = [os.path.join(d, f"{n}.mtx") for n in ("A", "C", "Geps", "Lpr")]
    return files + ["--dt", str(TOY_GRID["dt"]), "--n", str(TOY_GRID["n"]),
                    "--data", os.path.join(d, "m.txt")]


def write_golden(d):
    for name, extra in CERTIFY_RUNS.items():
        buf = io.StringIO()
        with contextlib.redirect_stdout(buf):
            code = main(["certify"] + toy_args(d) + extra)
        if code != 0:
            raise SystemExit(f"certify failed with exit code {code}")
        with open(os.path.join(d, name), "w") as fh:
            fh.write(buf.getvalue())


def main_(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "tests", "data"))
    args = parser.parse_args(argv)
    toy = write_toy(args.out)
    write_diag(args.out)
    with open(os.path.join(args.out, "toy.cfg"), "w") as fh:
        fh.write(TOY_CFG)
    write_golden(toy)
    print(f"fixtures written to {os.path.normpath(args.out)}")


if __name__ == "__main__":
    main_()
