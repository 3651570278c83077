"""Exit criteria. Each test records one pass/fail line in the terminal summary."""
import csv
import itertools
import math
import time

import numpy as np
import pytest

from tdesign_coherence.bounds import chebyshev_coefficients, coherence_bounds, evaluate_batch, upsilon_root
from tdesign_coherence.cli import lower_bound_crossover, main, random_states, sweep_rows
from tdesign_coherence.design import (
    assign_povms,
    builtin_design,
    default_orientations,
    frame_potential,
)
from tdesign_coherence.qstate import DensityMatrix, symmetric_moment

from oracles import max_real_root, random_density, shifted_chebyshev, symmetrizer, symmetrizer_trace

TOL = 1e-9
NAMES = ("octahedron", "icosahedron", "icosidodecahedron")
OCTA_PAIRS = [[0, 1], [2, 3], [4, 5]]


@pytest.fixture(scope="module")
def ensemble():
    return random_states(builtin_design("octahedron"), 10_000, np.random.default_rng(20240501))


def test_1_saturation(criterion):
    start = time.perf_counter()
    worst = 0.0
    mixed = DensityMatrix.maximally_mixed(2)
    for name, value in zip(NAMES, (math.log(3), math.log(6), math.log(15))):
        design = builtin_design(name)
        assert abs(value - math.log(design.size / 2)) < 1e-15
        rep = coherence_bounds(assign_povms(design), (design.size, design.strength), mixed)
        for v in [*rep.estimates.values(), rep.exact_coherence]:
            worst = max(worst, abs(v - value))
    elapsed = time.perf_counter() - start
    criterion("1 saturation at I/2", worst < TOL and elapsed < 1.0,
              f"max deviation {worst:.2e}, {elapsed:.3f} s")


def _slacks(out):
    ex = out["exact"]
    return np.stack([ex - out["lower_taylor"], out["upper_taylor"] - ex,
                     ex - out["lower_cheb"], out["upper_cheb"] - ex])


def test_2_sandwich(criterion, ensemble):
    start = time.perf_counter()
    worst = np.inf
    for name in NAMES:
        design = builtin_design(name)
        out = evaluate_batch(assign_povms(design), (design.size, design.strength), ensemble)
        worst = min(worst, _slacks(out).min())
    parts = assign_povms(builtin_design("octahedron").with_partition(OCTA_PAIRS))
    worst_part = _slacks(evaluate_batch(parts, (6, 3), ensemble)).min()
    elapsed = time.perf_counter() - start
    criterion("2 sandwich, 10k states x 3 designs + octahedron 3-basis partition",
              worst >= -TOL and worst_part >= -TOL and elapsed < 10.0,
              f"worst slack {worst:.2e}, partition {worst_part:.2e}, {elapsed:.2f} s")


def test_3_probability_cap(criterion, ensemble):
    worst = np.inf
    for name in NAMES:
        design = builtin_design(name)
        povm = assign_povms(design)[0]
        out = evaluate_batch([povm], (design.size, design.strength), ensemble)
        v = povm.vectors
        p = povm.weight * np.einsum("ki,nij,kj->nk", v.conj(), ensemble, v).real
        worst = min(worst, (out["upsilon"] - p.max(axis=1)).min())
    ups = upsilon_root(6, 3, 1 / 18)
    oracle = max_real_root(6, 3, 1 / 18)
    rep = coherence_bounds(assign_povms(builtin_design("octahedron")), (6, 3), DensityMatrix(np.diag([1.0, 0.0])))
    ok = worst >= -TOL and abs(ups - 0.35526) < 1e-4 and abs(ups - oracle) < 1e-4
    ok = ok and abs(rep.upsilon - ups) < 1e-12 and 1 / 3 <= rep.upsilon
    criterion("3 probability cap", ok, f"worst cap slack {worst:.2e}, pure octahedron Upsilon {ups:.6f} vs max p 1/3")


def test_4_moment_identities(criterion):
    rng = np.random.default_rng(99)
    worst = 0.0
    for name in NAMES:
        design = builtin_design(name)
        K, t, d = design.size, design.strength, 2
        v = design.vectors
        for _ in range(1000):
            lam = rng.uniform(0, 0.5)
            u = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))[0]
            rho = u @ np.diag([1 - lam, lam]) @ u.conj().T
            p = (d / K) * np.einsum("ki,ij,kj->k", v.conj(), rho, v).real
            for s in range(2, t + 1):
                h = sum(lam**k * (1 - lam) ** (s - k) for k in range(s + 1))
                target = K ** (1 - s) * d**s / math.comb(d + s - 1, s) * h
                worst = max(worst, abs(np.sum(p**s) - target))
    criterion("4 moment identities, 1000 states x 3 designs", worst < TOL, f"max residual {worst:.2e}")


def test_5_design_certification(criterion):
    worst = 0.0
    for name in NAMES:
        design = builtin_design(name)
        for s in range(1, design.strength + 1):
            worst = max(worst, abs(frame_potential(design, s) - 1 / math.comb(s + 1, s)))
    octa = builtin_design("octahedron").vectors
    direct = [
        sum(abs(np.vdot(a, b)) ** (2 * s) for a, b in itertools.product(octa, octa)) / 36 for s in (1, 2, 3)
    ]
    octa_dev = max(abs(x - y) for x, y in zip(direct, (1 / 2, 1 / 3, 1 / 4)))
    criterion("5 design certification", worst < TOL and octa_dev < 1e-12,
              f"max frame-potential deviation {worst:.2e}, octahedron {octa_dev:.2e}")


def test_6_oracle_equivalence(criterion):
    rng = np.random.default_rng(6)
    worst = 0.0
    for d in (2, 3):
        for s in range(1, 5):
            proj = symmetrizer(d, s)
            for _ in range(100):
                m = random_density(rng, d)
                worst = max(worst, abs(symmetric_moment(DensityMatrix(m), s) - symmetrizer_trace(m, s, proj)))
    cheb_ok = all(chebyshev_coefficients(n) == tuple(shifted_chebyshev(n)[1:]) for n in range(1, 16))
    criterion("6 oracle equivalence", worst < TOL and cheb_ok,
              f"symmetrizer max deviation {worst:.2e}, Chebyshev exact: {cheb_ok}")


def _read(path):
    with open(path, newline="") as fh:
        return [{k: float(v) for k, v in r.items()} for r in csv.DictReader(fh)]


def test_7_figure_shape(criterion, tmp_path):
    octa_csv, ido_csv = tmp_path / "octa.csv", tmp_path / "ido.csv"
    assert main(["sweep", "--builtin", "octahedron", "--out", str(octa_csv)]) == 0
    assert main(["sweep", "--builtin", "icosidodecahedron", "--out", str(ido_csv)]) == 0
    octa, ido = _read(octa_csv), _read(ido_csv)

    last = octa[-1]
    cols = ("lower_taylor", "upper_taylor", "lower_cheb", "upper_cheb", "coherence_axis", "coherence_alt")
    spread = max(last[c] for c in cols) - min(last[c] for c in cols)
    converge = last["lambda"] == 0.5 and spread < 1e-6

    rows = sweep_rows(builtin_design("octahedron"), *default_orientations("octahedron"))
    cross = lower_bound_crossover(rows)
    crossover_ok = cross is not None and 0 < cross[0] < 0.5 and cross[1:] == ("chebyshev", "taylor")
    # the switch is measured from the CSV values too
    diff = np.array([r["lower_taylor"] - r["lower_cheb"] for r in octa[:-1]])
    crossover_ok = crossover_ok and diff[0] < 0 and diff[-1] > 0

    larger = all(
        b["lambda"] == a["lambda"] and b[c] > a[c]
        for a, b in zip(octa, ido) for c in ("coherence_axis", "coherence_alt")
    )
    lam_star = cross[0] if cross else float("nan")
    criterion("7 figure shape", converge and crossover_ok and larger,
              f"spread at 1/2 {spread:.1e}, crossover lambda*={lam_star:.4f}, icosidodecahedron larger: {larger}")
