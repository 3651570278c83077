"""Command-line entry point: validate, sweep, check, coeffs, evaluate."""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import bounds
from .coherence import povm_probabilities
from .design import (
    BUILTIN_STRENGTH,
    DesignError,
    DesignNormError,
    DesignSchemaError,
    PartitionError,
    QuantumDesign,
    assign_povms,
    builtin_design,
    default_orientations,
    load_design,
    validate_design,
)
from .qstate import PAULI, InvalidStateError, complete_homogeneous, load_state

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2

VERIFY_TOL = 1e-9

CSV_HEADER = "lambda,lower_taylor,upper_taylor,lower_cheb,upper_cheb,coherence_axis,coherence_alt,upsilon"
ESTIMATES = ("lower_taylor", "upper_taylor", "lower_cheb", "upper_cheb")


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class SweepRow:
    lam: float
    lower_taylor: float
    upper_taylor: float
    lower_cheb: float
    upper_cheb: float
    coherence_axis: float
    coherence_alt: float
    upsilon: float

    def csv(self) -> str:
        return ",".join(f"{x:.15g}" for x in (
            self.lam, self.lower_taylor, self.upper_taylor, self.lower_cheb,
            self.upper_cheb, self.coherence_axis, self.coherence_alt, self.upsilon,
        ))

    def min_slack(self) -> float:
        out = np.inf
        for c in (self.coherence_axis, self.coherence_alt):
            out = min(out, c - self.lower_taylor, self.upper_taylor - c,
                      c - self.lower_cheb, self.upper_cheb - c)
        return out


def bloch_states(lam, direction) -> np.ndarray:
    """Stack of qubit density matrices with minimal eigenvalues ``lam``."""
    lam = np.asarray(lam, dtype=np.float64)
    n = np.asarray(direction, dtype=np.float64)
    r = (1 - 2 * lam)[..., None] * n
    return 0.5 * (np.eye(2) + np.einsum("...i,ijk->...jk", r, PAULI))


def sweep_rows(design: QuantumDesign, axis, alt, grid: int = 201) -> list[SweepRow]:
    if design.dim != 2:
        raise UsageError("sweeps are defined for qubit designs only")
    if design.strength < 2:
        raise UsageError("estimates need a design of strength t >= 2")
    if grid < 2:
        raise UsageError("grid needs at least 2 points")
    for n in (axis, alt):
        if abs(np.linalg.norm(n) - 1) > 1e-12:
            raise UsageError(f"direction {tuple(n)} is not unit length")
    povms = assign_povms(design)
    lam = np.linspace(0.0, 0.5, grid)
    meta = (design.size, design.strength)
    a = bounds.evaluate_batch(povms, meta, bloch_states(lam, axis))
    b = bounds.evaluate_batch(povms, meta, bloch_states(lam, alt))
    return [
        SweepRow(lam[i], a["lower_taylor"][i], a["upper_taylor"][i], a["lower_cheb"][i],
                 a["upper_cheb"][i], a["exact"][i], b["exact"][i], a["upsilon"][i])
        for i in range(grid)
    ]


def lower_bound_crossover(rows, tol: float = 1e-9):
    """Lambda where the better lower bound switches between the two families.

    Returns (lambda*, family below, family above) or None. Points where the
    two lower bounds agree within ``tol`` are ignored.
    """
    pts = [(r.lam, r.lower_taylor - r.lower_cheb) for r in rows if abs(r.lower_taylor - r.lower_cheb) > tol]
    for (l0, d0), (l1, d1) in zip(pts, pts[1:]):
        if np.sign(d0) != np.sign(d1):
            lam_star = l0 + (l1 - l0) * d0 / (d0 - d1)
            below = "taylor" if d0 > 0 else "chebyshev"
            above = "chebyshev" if below == "taylor" else "taylor"
            return lam_star, below, above
    return None


def random_states(design: QuantumDesign, samples: int, rng: np.random.Generator) -> np.ndarray:
    """Qubits: lambda uniform on [0, 1/2], direction uniform on the sphere.
    Otherwise: flat-Dirichlet spectrum conjugated by a Haar unitary."""
    d = design.dim
    if d == 2:
        lam = rng.uniform(0.0, 0.5, samples)
        n = rng.normal(size=(samples, 3))
        n /= np.linalg.norm(n, axis=1, keepdims=True)
        return bloch_states(lam, n)
    spec = rng.dirichlet(np.ones(d), samples)
    z = (rng.normal(size=(samples, d, d)) + 1j * rng.normal(size=(samples, d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r, axis1=1, axis2=2)
    u = q * (diag / np.abs(diag))[:, None, :]
    m = np.einsum("nij,nj,nkj->nik", u, spec, u.conj())
    return 0.5 * (m + np.conj(np.swapaxes(m, 1, 2)))


def verify_ensemble(design: QuantumDesign, matrices) -> dict:
    """Worst-case slacks of both estimates, the probability cap and the moment identities."""
    d, K, t = design.dim, design.size, design.strength
    povms = assign_povms(design)
    ell = povms[0].size
    out = bounds.evaluate_batch(povms, (K, t), matrices)
    exact = out["exact"]
    slack = np.stack([
        exact - out["lower_taylor"], out["upper_taylor"] - exact,
        exact - out["lower_cheb"], out["upper_cheb"] - exact,
    ])

    single = assign_povms(design.with_partition(None))[0]
    p_single = povm_probabilities(single, matrices)
    h = complete_homogeneous(np.linalg.eigvalsh(matrices), t)
    beta_single = bounds.moment_prefactors(d, K, t) * h[:, 1:]
    cap = np.atleast_1d(bounds.upsilon_root(K, t, beta_single[:, -1], d=d))
    cap_slack = cap - p_single.max(axis=1)

    p_groups = np.concatenate([povm_probabilities(p, matrices) for p in povms], axis=1)
    # sum over every group and outcome of p^s = K ell^-s d^s D_d^(s) h_s
    moment_res = 0.0
    for s in range(2, t + 1):
        target = K * float(ell) ** -s * bounds.moment_prefactors(d, 1, s)[-1] * h[:, s]
        moment_res = max(moment_res, np.abs((p_groups**s).sum(axis=1) - target).max())
        moment_res = max(moment_res, np.abs((p_single**s).sum(axis=1) - beta_single[:, s - 1]).max())

    best_gap = np.minimum(out["upper_taylor"], out["upper_cheb"]) - np.maximum(out["lower_taylor"], out["lower_cheb"])
    return {
        "slack": dict(zip(ESTIMATES, slack.min(axis=1))),
        "slack_per_state": slack.min(axis=0),
        "cap_slack": float(cap_slack.min()),
        "cap_slack_per_state": cap_slack,
        "moment_residual": float(moment_res),
        "gap_min": float(best_gap.min()),
        "gap_mean": float(best_gap.mean()),
        "gap_max": float(best_gap.max()),
    }


def _parse_direction(text: str) -> np.ndarray:
    try:
        v = np.array([float(x) for x in text.split(",")])
    except ValueError as exc:
        raise UsageError(f"bad direction {text!r}") from exc
    if v.shape != (3,):
        raise UsageError(f"direction {text!r} needs three components")
    return v


def _load_partition(path: str):
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read partition {path}: {exc}") from exc
    if isinstance(data, dict):
        data = data.get("partition")
    if not isinstance(data, list):
        raise UsageError("partition file must hold a list of index groups")
    return data


def _resolve_design(args, validate: bool = True) -> QuantumDesign:
    if args.builtin:
        design = builtin_design(args.builtin)
    else:
        try:
            design = load_design(args.file, validate=validate)
        except OSError as exc:
            raise UsageError(f"cannot read {args.file}: {exc}") from exc
    part = getattr(args, "partition", None)
    if part is not None:
        design = design.with_partition(None if part == "none" else _load_partition(part))
    return design


def _open_out(path):
    if path is None or path == "-":
        return sys.stdout, False
    try:
        return open(path, "w", newline=""), True
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc}") from exc


def cmd_validate(args) -> int:
    design = _resolve_design(args, validate=False)
    report = validate_design(design)
    for s, (f, g) in enumerate(zip(report.frame_potentials, report.targets), 1):
        print(f"s={s} frame_potential={f:.15g} target={g:.15g} deviation={abs(f - g):.3e}")
    print(f"completeness_residual={report.completeness_residual:.3e}")
    if report.passed:
        print(f"result=pass strength={design.strength} K={design.size} d={design.dim}")
        return EXIT_OK
    reasons = [f"frame_potential:s={s}" for s in report.failed_orders]
    if not report.completeness_ok:
        reasons.append("completeness")
    print("result=fail reason=" + ";".join(reasons))
    return EXIT_FAIL


def cmd_sweep(args) -> int:
    design = _resolve_design(args)
    if args.axis or args.alt:
        if not (args.axis and args.alt):
            raise UsageError("--axis and --alt must be given together")
        axis, alt = _parse_direction(args.axis), _parse_direction(args.alt)
    elif args.builtin:
        axis, alt = default_orientations(args.builtin)
    else:
        raise UsageError("designs loaded from file need --axis and --alt directions")
    rows = sweep_rows(design, axis, alt, args.grid)
    worst = min(r.min_slack() for r in rows)
    if worst < -VERIFY_TOL:
        bad = next(r for r in rows if r.min_slack() < -VERIFY_TOL)
        print(f"refusing to write: estimate violated at lambda={bad.lam:.15g} (slack {worst:.3e})", file=sys.stderr)
        return EXIT_FAIL
    fh, close = _open_out(args.out)
    try:
        fh.write(CSV_HEADER + "\n")
        for r in rows:
            fh.write(r.csv() + "\n")
    finally:
        if close:
            fh.close()
    cross = lower_bound_crossover(rows)
    if cross is None:
        print("crossover: none", file=sys.stderr)
    else:
        lam_star, below, above = cross
        print(f"crossover: lambda*={lam_star:.6f} better lower bound {below} below, {above} above", file=sys.stderr)
    return EXIT_OK


def cmd_check(args) -> int:
    if args.samples < 1:
        raise UsageError("--samples must be >= 1")
    design = _resolve_design(args)
    if design.strength < 2:
        raise UsageError("estimates need a design of strength t >= 2")
    rng = np.random.default_rng(args.seed)
    mats = random_states(design, args.samples, rng)
    res = verify_ensemble(design, mats)
    for name, val in res["slack"].items():
        print(f"worst_slack_{name}={val:.3e}")
    print(f"worst_probability_cap_slack={res['cap_slack']:.3e}")
    print(f"moment_identity_residual={res['moment_residual']:.3e}")
    print(f"best_gap_min={res['gap_min']:.6g} best_gap_mean={res['gap_mean']:.6g} best_gap_max={res['gap_max']:.6g}")
    bad = np.flatnonzero(
        (res["slack_per_state"] < -VERIFY_TOL) | (res["cap_slack_per_state"] < -VERIFY_TOL)
    )
    if bad.size or res["moment_residual"] > VERIFY_TOL:
        for i in bad[:10]:
            print(f"violation sample={i} state={mats[i].tolist()}")
        if res["moment_residual"] > VERIFY_TOL:
            print("violation moment_identity")
        print("result=fail")
        return EXIT_FAIL
    print(f"result=pass samples={args.samples} seed={args.seed}")
    return EXIT_OK


def cmd_coeffs(args) -> int:
    t = args.t
    if not 2 <= t <= bounds.MAX_TAYLOR_ORDER:
        raise UsageError(f"order must lie in [2, {bounds.MAX_TAYLOR_ORDER}]")
    table = bounds.coefficient_table(t)

    def fmt(xs):
        return " ".join(f"{float(x):.12g}" for x in xs)

    print(f"t={t} n={table.flex_order}")
    print(f"a: {fmt(table.taylor_a)}")
    print(f"b: {fmt(table.taylor_b)}")
    print(f"c: {fmt(table.cheb_c)}")
    print(f"flex_a: {fmt(table.flex_a)}")
    print(f"flex_b: {fmt(table.flex_b)}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    design = _resolve_design(args)
    try:
        rho = load_state(args.state)
    except OSError as exc:
        raise UsageError(f"cannot read {args.state}: {exc}") from exc
    if rho.dim != design.dim:
        raise UsageError(f"state dimension {rho.dim} does not match design dimension {design.dim}")
    report = bounds.coherence_bounds(assign_povms(design), (design.size, design.strength), rho)
    out = dict(report.estimates, exact_coherence=report.exact_coherence,
               upsilon=report.upsilon, n_used=report.n_used, beta=report.beta.values.tolist())
    print(json.dumps(out, indent=2))
    return EXIT_OK if report.min_slack() >= -VERIFY_TOL else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tdesign-coherence",
        description="Two-sided estimates on coherence with respect to design-structured POVMs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def design_args(p, partition=True):
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--builtin", choices=sorted(BUILTIN_STRENGTH))
        src.add_argument("--file", help="design JSON file")
        if partition:
            p.add_argument("--partition", help="JSON list of index groups, or 'none' for the full set")

    p = sub.add_parser("validate", help="certify a design via frame potentials")
    design_args(p, partition=False)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("sweep", help="estimates versus lambda as CSV")
    design_args(p)
    p.add_argument("--grid", type=int, default=201)
    p.add_argument("--out", help="output CSV path (default stdout)")
    p.add_argument("--axis", help="first Bloch direction, e.g. 0,0,1")
    p.add_argument("--alt", help="second Bloch direction")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("check", help="randomized verification of the estimates")
    design_args(p)
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("coeffs", help="print the coefficient families")
    p.add_argument("t", type=int)
    p.set_defaults(func=cmd_coeffs)

    p = sub.add_parser("evaluate", help="estimates for one density-matrix file")
    design_args(p)
    p.add_argument("--state", required=True, help="density-matrix JSON file")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, DesignSchemaError, InvalidStateError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DesignNormError, PartitionError, DesignError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
