"""Chebyshev-basis approximation of monomials ``x^q`` on [-1, 1].

Polynomials are stored as Chebyshev-T coefficients and evaluated with
:func:`numpy.polynomial.chebyshev.chebval` (Clenshaw recurrence). All uniform
error claims are measured on Chebyshev-Lobatto grids, which contain the
endpoints where monomial errors peak.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy.optimize import linprog

from .linalg import ValidationError

CERT_GRID = 10_000
CHECK_GRID = 100_000
#: Slack on |p| <= 1; floating-point Clenshaw can overshoot 1 by ~1e-15.
BOUND_SLACK = 1e-12
MARKOV_SLACK = 1e-9
MINIMAX_TOL = 1e-8

PARITIES = ("even", "odd", "none")


def chebyshev_grid(size: int) -> np.ndarray:
    """Chebyshev-Lobatto points ``cos(pi k / (size - 1))``, from 1 down to -1."""
    if size < 2:
        raise ValidationError("grid needs at least two points")
    k = np.arange(size)
    # sin form keeps the grid exactly symmetric about 0
    return -np.sin(np.pi * (2 * k - (size - 1)) / (2 * (size - 1)))


def _parity_of(q: int) -> str:
    return "even" if q % 2 == 0 else "odd"


@dataclass(frozen=True)
class ChebyshevPoly:
    """Real polynomial ``sum_j coeffs[j] T_j(x)`` with an optional parity tag."""

    coeffs: np.ndarray
    parity: str = "none"

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float).ravel()
        if c.size == 0:
            c = np.zeros(1)
        if self.parity not in PARITIES:
            raise ValidationError(f"parity must be one of {PARITIES}, got {self.parity!r}")
        if self.parity != "none":
            wrong = 1 if self.parity == "even" else 0
            if np.any(c[wrong::2] != 0):
                raise ValidationError(f"coefficients violate {self.parity} parity")
        nz = np.flatnonzero(c)
        c = c[: nz[-1] + 1] if nz.size else np.zeros(1)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    def __call__(self, x):
        return C.chebval(x, self.coeffs)

    def scaled(self, factor: float) -> "ChebyshevPoly":
        return ChebyshevPoly(self.coeffs * factor, self.parity)

    def derivative(self) -> "ChebyshevPoly":
        flipped = {"even": "odd", "odd": "even"}.get(self.parity, "none")
        if self.degree == 0:
            return ChebyshevPoly(np.zeros(1), "none")
        return ChebyshevPoly(C.chebder(self.coeffs), flipped)


@dataclass(frozen=True)
class ApproxCertificate:
    """Grid-measured evidence that a polynomial approximates ``x^q``."""

    target_q: int
    epsilon: float
    degree: int
    sup_error: float
    max_abs: float
    grid_size: int

    @property
    def ok(self) -> bool:
        return self.sup_error <= self.epsilon and self.max_abs <= 1 + BOUND_SLACK

    def csv_row(self) -> dict:
        return {
            "q": self.target_q,
            "eps": self.epsilon,
            "degree": self.degree,
            "sup_error": self.sup_error,
            "max_abs": self.max_abs,
            "grid_size": self.grid_size,
        }


CERTIFICATE_FIELDS = ("q", "eps", "degree", "sup_error", "max_abs", "grid_size")


def cheb_expand_monomial(q: int) -> ChebyshevPoly:
    """Exact Chebyshev expansion of ``x^q``.

    ``x^q = 2^(1-q) sum' C(q, (q-j)/2) T_j(x)`` over ``j = q, q-2, ...``, with
    the ``j = 0`` term halved.
    """
    if q < 1:
        raise ValidationError(f"monomial degree must be >= 1, got {q}")
    c = np.zeros(q + 1)
    scale = 2 ** (q - 1)
    for j in range(q % 2, q + 1, 2):
        # int / int true division is correctly rounded even for huge binomials
        c[j] = math.comb(q, (q - j) // 2) / scale
    if q % 2 == 0:
        c[0] /= 2
    return ChebyshevPoly(c, _parity_of(q))


def truncation_degree(q: int, eps: float) -> int:
    """Cut-off ``ceil(sqrt(2 q ln(2/eps)))`` from the binomial tail bound."""
    return math.ceil(math.sqrt(2 * q * math.log(2 / eps)))


def eval_poly(poly: ChebyshevPoly, x):
    """Evaluate on [-1, 1]; points outside the interval are rejected."""
    xs = np.asarray(x, dtype=float)
    if np.any(np.abs(xs) > 1):
        raise ValidationError("Chebyshev polynomials are evaluated on [-1, 1] only")
    return poly(xs)


def sup_error_vs_monomial(poly: ChebyshevPoly, q: int, grid_size: int = CERT_GRID) -> float:
    if grid_size < 1001:
        raise ValidationError(f"grid_size must be >= 1001, got {grid_size}")
    x = chebyshev_grid(grid_size)
    return float(np.max(np.abs(poly(x) - x**q)))


def max_abs_on_grid(poly: ChebyshevPoly, grid_size: int = CERT_GRID) -> float:
    return float(np.max(np.abs(poly(chebyshev_grid(grid_size)))))


def certify(poly: ChebyshevPoly, q: int, eps: float,
            grid_size: int = CERT_GRID) -> ApproxCertificate:
    return ApproxCertificate(
        target_q=q,
        epsilon=eps,
        degree=poly.degree,
        sup_error=sup_error_vs_monomial(poly, q, grid_size),
        max_abs=max_abs_on_grid(poly, grid_size),
        grid_size=grid_size,
    )


def truncate_sv14(q: int, eps: float,
                  grid_size: int = CERT_GRID) -> tuple[ChebyshevPoly, ApproxCertificate]:
    """Truncate the exact expansion of ``x^q`` at :func:`truncation_degree`.

    The discarded coefficients are a binomial tail of mass at most
    ``2 exp(-d^2 / 2q) <= eps``; the kept ones are non-negative and sum to at
    most 1, so the result is bounded by 1 on [-1, 1].
    """
    if not 0 < eps < 1:
        raise ValidationError(f"eps must lie in (0, 1), got {eps}")
    exact = cheb_expand_monomial(q)
    d = min(truncation_degree(q, eps), q)
    poly = ChebyshevPoly(exact.coeffs[: d + 1], exact.parity)
    return poly, certify(poly, q, eps, grid_size)


def parity_project(poly: ChebyshevPoly, target: str) -> ChebyshevPoly:
    """Even or odd part ``(p(x) ± p(-x)) / 2``.

    ``T_j`` has the parity of ``j``, so this zeroes the wrong-parity coefficients.
    """
    if target not in ("even", "odd"):
        raise ValidationError(f"target parity must be 'even' or 'odd', got {target!r}")
    c = np.array(poly.coeffs)
    c[(1 if target == "even" else 0)::2] = 0
    return ChebyshevPoly(c, target)


def markov_certificate(poly: ChebyshevPoly, grid_size: int = CERT_GRID) -> tuple[float, float]:
    """Return ``(max |p'| on grid, d^2)`` for a polynomial bounded by 1."""
    x = chebyshev_grid(grid_size)
    if np.max(np.abs(poly(x))) > 1 + BOUND_SLACK:
        raise ValidationError("Markov certificate needs max |p| <= 1; rescale first")
    deriv = poly.derivative()
    return float(np.max(np.abs(deriv(x)))), float(poly.degree**2)


def sv14_lower_bound(q: int, eps: float) -> float:
    """Markov-brothers degree floor ``sqrt(q (1 - 1/e - 2 eps))``."""
    upper = (math.e - 1) / (2 * math.e)
    if not 0 < eps < upper:
        raise ValidationError(f"eps must lie in (0, (e-1)/(2e) = {upper:.6f}), got {eps}")
    return math.sqrt(q * (1 - 1 / math.e - 2 * eps))


def rescale_bounded(poly: ChebyshevPoly, q: int, eps: float,
                    grid_size: int = CERT_GRID) -> ChebyshevPoly:
    """Map an ``eps``-approximation of ``x^q`` to ``(1 - eps) p``.

    The result is ``2 eps``-close to ``x^q`` and bounded by 1; both facts are
    checked on the grid.
    """
    if not 0 <= eps < 1:
        raise ValidationError(f"eps must lie in [0, 1), got {eps}")
    if sup_error_vs_monomial(poly, q, grid_size) > eps + BOUND_SLACK:
        raise ValidationError(f"input is not {eps}-close to x^{q} on the grid")
    r = poly.scaled(1 - eps)
    err = sup_error_vs_monomial(r, q, grid_size)
    top = max_abs_on_grid(r, grid_size)
    if err > 2 * eps + BOUND_SLACK or top > 1 + BOUND_SLACK:
        raise ValidationError(
            f"rescaled certificate failed: error {err:.3g}, max |r| {top:.3g}"
        )
    return r


@dataclass(frozen=True)
class MinimaxResult:
    """Outcome of :func:`minimax_degree`.

    ``degree`` is ``None`` when no degree in the searched range reaches ``eps``;
    ``error`` is then the best certified error seen.
    """

    q: int
    eps: float
    degree: int | None
    error: float
    poly: ChebyshevPoly | None = field(default=None, repr=False)
    errors: dict = field(default_factory=dict, repr=False)

    @property
    def found(self) -> bool:
        return self.degree is not None


def _lp_fit(q: int, basis: list[int], nodes: np.ndarray, bounded: bool):
    """Discrete minimax of ``x^q`` over span{T_j : j in basis} on ``nodes``."""
    k = len(basis)
    vander = C.chebvander(nodes, max(basis))[:, basis]
    target = nodes**q
    # variables (c_1..c_k, t); minimize t subject to |V c - f| <= t
    ones = np.ones((nodes.size, 1))
    a_ub = [np.hstack([vander, -ones]), np.hstack([-vander, -ones])]
    b_ub = [target, -target]
    if bounded:
        zeros = np.zeros((nodes.size, 1))
        a_ub += [np.hstack([vander, zeros]), np.hstack([-vander, zeros])]
        b_ub += [np.ones(nodes.size), np.ones(nodes.size)]
    cost = np.zeros(k + 1)
    cost[-1] = 1
    res = linprog(cost, A_ub=np.vstack(a_ub), b_ub=np.concatenate(b_ub),
                  bounds=[(None, None)] * k + [(0, None)], method="highs")
    if res.status != 0:
        raise RuntimeError(f"minimax LP failed: {res.message}")
    coeffs = np.zeros(max(basis) + 1)
    coeffs[basis] = res.x[:k]
    return coeffs, float(res.x[-1])


def _local_extrema(values: np.ndarray) -> np.ndarray:
    inner = (values[1:-1] >= values[:-2]) & (values[1:-1] >= values[2:])
    return np.concatenate([[True], inner, [True]])


def best_approximation(q: int, degree: int, bounded: bool = False,
                       grid_size: int = CERT_GRID, max_passes: int = 8):
    """Best degree-``degree`` approximation of ``x^q``, certified on a dense grid.

    Starts from a discrete LP on ``4d + 1`` Chebyshev nodes, then performs
    exchange passes: local maxima of the dense-grid error are added to the
    node set and the LP is re-solved. Stops once the discrete and dense-grid
    errors agree. Returns ``(poly, certified_error)``.
    """
    parity = _parity_of(q)
    basis = [j for j in range(q % 2, degree + 1, 2)]
    dense = chebyshev_grid(grid_size)
    if not basis:
        zero = ChebyshevPoly(np.zeros(1), parity)
        return zero, float(np.max(np.abs(dense**q)))
    nodes = chebyshev_grid(max(4 * degree + 1, 5))
    for _ in range(max_passes):
        coeffs, level = _lp_fit(q, basis, nodes, bounded)
        poly = ChebyshevPoly(coeffs, parity)
        err = np.abs(poly(dense) - dense**q)
        certified = float(err.max())
        if certified - level <= 1e-12 + 1e-10 * certified:
            break
        peaks = dense[_local_extrema(err) & (err > level)]
        nodes = np.union1d(nodes, peaks)
    return poly, certified


def minimax_degree(q: int, eps: float, degree_range: tuple[int, int] | None = None,
                   bounded: bool = False, grid_size: int = CERT_GRID) -> MinimaxResult:
    """Smallest degree whose certified best uniform error for ``x^q`` is ``<= eps``.

    ``bounded=True`` additionally constrains ``|p| <= 1`` on the nodes (the
    [-1, 1]-valued variant of the approximate degree).
    """
    if q < 1:
        raise ValidationError(f"monomial degree must be >= 1, got {q}")
    if eps <= 0:
        raise ValidationError(f"eps must be positive, got {eps}")
    lo, hi = degree_range if degree_range is not None else (0, q)
    errors = {}
    best_err, best_poly = math.inf, None
    for d in range(lo, hi + 1):
        if d >= q:
            poly, err = cheb_expand_monomial(q), 0.0
        else:
            poly, err = best_approximation(q, d, bounded=bounded, grid_size=grid_size)
        errors[d] = err
        if err < best_err:
            best_err, best_poly = err, poly
        if err <= eps * (1 + MINIMAX_TOL):
            return MinimaxResult(q, eps, d, err, poly, errors)
    return MinimaxResult(q, eps, None, best_err, best_poly, errors)
