"""Two-sided estimates on design-POVM coherence.

The estimates combine three ingredients:

* polynomial coefficient families approximating -ln x on [0, 1], either from
  truncated Taylor expansions or from shifted Chebyshev polynomials;
* the design moments beta_ell^(s), which the t-design property fixes in terms
  of the state's spectrum alone;
* a cap Upsilon on every outcome probability, the largest root of
  (1 - u)^t + (K-1)^(t-1) u^t = (K-1)^(t-1) beta.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .coherence import povm_probabilities
from .qstate import DensityMatrix, _clamp_eigenvalues, complete_homogeneous, entropy_of_spectrum

MAX_FLEX_ORDER = 15
MAX_TAYLOR_ORDER = 30
ROOT_TOL = 1e-13
FEASIBILITY_CLAMP = 1e-9
ENDPOINT_ULPS = 16


@lru_cache(maxsize=None)
def _taylor_exact(t: int):
    a = [sum(Fraction(1, r) for r in range(1, t))]
    b = [sum(Fraction(1, r) for r in range(2, t))]
    for s in range(2, t + 1):
        val = (-1) ** (s - 1) * sum(Fraction(math.comb(r, s - 1), r) for r in range(s - 1, t))
        a.append(val)
        b.append(val / s)
    return tuple(a), tuple(b)


def taylor_coefficients(t: int) -> tuple[np.ndarray, np.ndarray]:
    """Return (a, b) with a[s-1] = a_t^(s), b[s-1] = b_t^(s) for s = 1..t."""
    if not 2 <= t <= MAX_TAYLOR_ORDER:
        raise ValueError(f"Taylor order must lie in [2, {MAX_TAYLOR_ORDER}], got {t}")
    a, b = _taylor_exact(t)
    return np.array([float(x) for x in a]), np.array([float(x) for x in b])


@lru_cache(maxsize=None)
def _chebyshev_exact(n: int) -> tuple[int, ...]:
    return tuple(
        (-1) ** (n + s) * 2 ** (2 * s - 1) * (2 * math.comb(n + s, n - s) - math.comb(n + s - 1, n - s))
        for s in range(1, n + 1)
    )


def chebyshev_coefficients(n: int) -> tuple[int, ...]:
    """Coefficients of x^1..x^n in the shifted Chebyshev polynomial T*_n(x) = T_n(2x - 1)."""
    if not 1 <= n <= MAX_FLEX_ORDER:
        raise ValueError(f"Chebyshev order must lie in [1, {MAX_FLEX_ORDER}], got {n}")
    return _chebyshev_exact(n)


@lru_cache(maxsize=None)
def _flexible_exact(n: int):
    c = _chebyshev_exact(n)
    scale = Fraction(1, 2 * n * n)
    fa = [(-1) ** n * scale * sum(Fraction(c[s - 1], s - 1) for s in range(2, n + 1))]
    fa += [(-1) ** (n + 1) * scale * Fraction(c[s - 1], s - 1) for s in range(2, n + 1)]
    fb = [1 - sum(x / s for s, x in enumerate(fa, 1)), fa[0] - 1]
    fb += [fa[s - 1] / s for s in range(2, n + 1)]
    return tuple(fa), tuple(fb)


def flexible_coefficients(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Return (a~, b~): a~[s-1] for s = 1..n and b~[s] for s = 0..n."""
    if not 2 <= n <= MAX_FLEX_ORDER:
        raise ValueError(f"flexible order must lie in [2, {MAX_FLEX_ORDER}], got {n}")
    fa, fb = _flexible_exact(n)
    return np.array([float(x) for x in fa]), np.array([float(x) for x in fb])


@dataclass(frozen=True)
class CoefficientTable:
    order: int
    taylor_a: np.ndarray
    taylor_b: np.ndarray
    cheb_c: tuple[int, ...]
    flex_a: np.ndarray
    flex_b: np.ndarray

    @property
    def flex_order(self) -> int:
        return len(self.cheb_c)


def coefficient_table(t: int) -> CoefficientTable:
    n = min(t, MAX_FLEX_ORDER)
    a, b = taylor_coefficients(t)
    fa, fb = flexible_coefficients(n)
    return CoefficientTable(t, a, b, chebyshev_coefficients(n), fa, fb)


@dataclass(frozen=True)
class BetaMoments:
    ell: int
    values: np.ndarray  # values[s-1] = beta_ell^(s)


def moment_prefactors(d: int, ell: int, t: int) -> np.ndarray:
    """ell^(1-s) d^s D_d^(s) for s = 1..t."""
    return np.array(
        [float(Fraction(d**s, math.comb(d + s - 1, s) * ell ** (s - 1))) for s in range(1, t + 1)]
    )


def beta_moments(rho: DensityMatrix, K: int, ell: int, t: int) -> BetaMoments:
    if t < 2:
        raise ValueError(f"t must be >= 2, got {t}")
    if ell < 1 or K % ell:
        raise ValueError(f"ell={ell} must divide K={K}")
    h = complete_homogeneous(rho.eigenvalues, t)[1:]
    return BetaMoments(ell, moment_prefactors(rho.dim, ell, t) * h)


def _feasible_range(K: int, t: int, d: int | None):
    lo = float(K) ** (1 - t)
    hi = 1.0 if d is None else moment_prefactors(d, K, t)[-1]
    return lo, hi


def upsilon_root(K: int, t: int, beta, d: int | None = None):
    """Largest real root of (1-u)^t + (K-1)^(t-1) u^t = (K-1)^(t-1) beta.

    On [1/K, 1] the left side is strictly increasing, so plain bisection
    finds the root there. ``beta`` may be a scalar or an array. Passing the
    dimension ``d`` tightens the feasibility check to the pure-state value.
    """
    if K < 2 or t < 2:
        raise ValueError(f"need K >= 2 and t >= 2, got K={K}, t={t}")
    lo_b, hi_b = _feasible_range(K, t, d)
    beta = np.asarray(beta, dtype=np.float64)
    if np.any(beta < lo_b - FEASIBILITY_CLAMP) or np.any(beta > hi_b + FEASIBILITY_CLAMP):
        raise ValueError(f"beta outside the feasible range [{lo_b:.6g}, {hi_b:.6g}]")
    rhs = np.clip(beta, lo_b, hi_b) - lo_b
    # the root depends on sqrt(rhs) here, so a few ulp of rounding in beta
    # would otherwise move it by ~1e-9
    rhs = np.where(rhs <= ENDPOINT_ULPS * np.finfo(float).eps * lo_b, 0.0, rhs)

    # Work in delta = u - 1/K. The left side minus its value at 1/K is a
    # polynomial in delta with no constant and no linear term; dropping them
    # explicitly keeps the root accurate near the maximally mixed end, where
    # the curve is flat.
    inv = float(K - 1) ** (1 - t)
    q = (K - 1) / K
    coeffs = [
        math.comb(t, j) * ((-1) ** j * q ** (t - j) * inv + float(K) ** (j - t))
        for j in range(2, t + 1)
    ]

    def excess(delta):
        acc = np.zeros_like(delta)
        for c in reversed(coeffs):
            acc = (acc + c) * delta
        return acc * delta - rhs

    lo = np.zeros(rhs.shape)
    hi = np.full(rhs.shape, 1.0 - 1.0 / K)
    while np.max(hi - lo) > ROOT_TOL:
        mid = 0.5 * (lo + hi)
        if np.all((mid == lo) | (mid == hi)):
            break
        up = excess(mid) > 0
        hi = np.where(up, mid, hi)
        lo = np.where(up, lo, mid)
    root = 1.0 / K + 0.5 * (lo + hi)
    return float(root) if root.ndim == 0 else root


@dataclass(frozen=True)
class BoundsReport:
    upsilon: float
    beta: BetaMoments
    n_used: int
    lower_taylor: float
    upper_taylor: float
    lower_cheb: float
    upper_cheb: float
    exact_coherence: float

    @property
    def estimates(self) -> dict[str, float]:
        return {
            "lower_taylor": self.lower_taylor,
            "upper_taylor": self.upper_taylor,
            "lower_cheb": self.lower_cheb,
            "upper_cheb": self.upper_cheb,
        }

    def slacks(self) -> dict[str, float]:
        """Nonnegative when the corresponding estimate holds."""
        c = self.exact_coherence
        return {
            "lower_taylor": c - self.lower_taylor,
            "upper_taylor": self.upper_taylor - c,
            "lower_cheb": c - self.lower_cheb,
            "upper_cheb": self.upper_cheb - c,
        }

    def min_slack(self) -> float:
        return min(self.slacks().values())


def _common_ell(povms) -> tuple[int, int]:
    povms = list(povms)
    if not povms:
        raise ValueError("need at least one POVM")
    sizes = {p.size for p in povms}
    dims = {p.dim for p in povms}
    if len(sizes) != 1 or len(dims) != 1:
        raise ValueError("POVMs must share the number of outcomes and the dimension")
    return sizes.pop(), dims.pop()


def estimates_from_spectra(evals, K: int, t: int, ell: int, M: int) -> dict[str, np.ndarray]:
    """The four estimates for a batch of spectra (last axis = eigenvalues).

    Returns arrays for ``upsilon``, ``entropy``, ``beta`` (batch x t) and the
    four estimates. Everything here depends on the spectrum only.
    """
    evals = np.atleast_2d(np.asarray(evals, dtype=np.float64))
    d = evals.shape[-1]
    table = coefficient_table(t)
    n = table.flex_order
    entropy = entropy_of_spectrum(evals)
    h = complete_homogeneous(evals, t)[..., 1:]
    beta = moment_prefactors(d, ell, t) * h
    beta_single = moment_prefactors(d, K, t)[-1] * h[..., -1]
    ups = np.minimum(M * np.atleast_1d(upsilon_root(K, t, beta_single, d=d)), 1.0)

    powers = ups[:, None] ** (1 - np.arange(1, t + 1))  # Upsilon^(1-s)
    terms = powers * beta
    base = -np.log(ups) - entropy
    return {
        "upsilon": ups,
        "entropy": entropy,
        "beta": beta,
        "lower_taylor": terms @ table.taylor_a + base,
        "upper_taylor": ups * ell / t + terms @ table.taylor_b + base,
        "lower_cheb": terms[:, :n] @ table.flex_a + base,
        "upper_cheb": table.flex_b[0] * ups * ell + terms[:, :n] @ table.flex_b[1:] + base,
    }


def evaluate_batch(povms, design_meta, matrices) -> dict[str, np.ndarray]:
    """Estimates and exact averaged coherence for a stack of density matrices.

    ``matrices`` are trusted to be valid states; use :func:`coherence_bounds`
    for a validated single-state entry point.
    """
    K, t = design_meta
    povms = list(povms)
    ell, d = _common_ell(povms)
    if ell * len(povms) != K:
        raise ValueError(f"{len(povms)} POVMs of {ell} outcomes do not cover K={K} vectors")
    mats = np.asarray(matrices, dtype=np.complex128).reshape(-1, d, d)
    evals = _clamp_eigenvalues(np.linalg.eigvalsh(mats)[:, ::-1])
    out = estimates_from_spectra(evals, K, t, ell, len(povms))
    shannon = np.mean([entropy_of_spectrum(povm_probabilities(p, mats)) for p in povms], axis=0)
    out["exact"] = shannon - out["entropy"]
    return out


def coherence_bounds(povms, design_meta, rho: DensityMatrix) -> BoundsReport:
    """Evaluate both two-sided estimates for one state.

    ``design_meta`` is (K, t) of the design the POVMs were assigned from.
    """
    K, t = design_meta
    if t < 2:
        raise ValueError("estimates need a design of strength t >= 2")
    povms = list(povms)
    ell, _ = _common_ell(povms)
    out = evaluate_batch(povms, design_meta, rho.matrix)
    return BoundsReport(
        upsilon=float(out["upsilon"][0]),
        beta=BetaMoments(ell, out["beta"][0]),
        n_used=min(t, MAX_FLEX_ORDER),
        lower_taylor=float(out["lower_taylor"][0]),
        upper_taylor=float(out["upper_taylor"][0]),
        lower_cheb=float(out["lower_cheb"][0]),
        upper_cheb=float(out["upper_cheb"][0]),
        exact_coherence=float(out["exact"][0]),
    )
