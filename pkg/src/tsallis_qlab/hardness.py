"""Computable witnesses behind the query lower bounds.

Two-outcome hard pairs ``p+`` / ``p-`` whose Tsallis entropies differ by
``Omega(delta)`` while their Hellinger distance is only ``O(sqrt(q) delta)``,
and the approximate-degree sandwich joining the polynomial floor and
ceilings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .estimators import prepare_qsvt, prepare_shift, trial_seeds
from .linalg import (
    DensityMatrix,
    Distribution,
    ValidationError,
    hellinger,
    purify,
    tsallis_exact_dist,
)
from .polyapprox import (
    ChebyshevPoly,
    max_abs_on_grid,
    minimax_degree,
    rescale_bounded,
    sup_error_vs_monomial,
    sv14_lower_bound,
    truncate_sv14,
)

LARGE_Q = "large-q"
CONST_Q = "const-q"

GAP_SERIES_TOL = 1e-12


@dataclass(frozen=True)
class HardInstance:
    p_plus: Distribution
    p_minus: Distribution
    q: int
    delta: float
    family: str

    @property
    def base(self) -> tuple[float, float]:
        """Unperturbed probabilities ``(a, b)`` with ``p± = (a ± delta, b ∓ delta)``."""
        return (1 - 1 / self.q, 1 / self.q) if self.family == LARGE_Q else (2 / 3, 1 / 3)


def _pair(a: float, b: float, delta: float) -> tuple[Distribution, Distribution]:
    lo_plus = max(b - delta, 0.0)
    return (Distribution([1 - lo_plus, lo_plus]),
            Distribution([a - delta, b + delta]))


def make_hard_instance_largeq(q: int, delta: float) -> HardInstance:
    """``p±_0 = 1 - 1/q ± delta``, ``p±_1 = 1/q ∓ delta``.

    ``delta = 0`` is accepted as the degenerate limit ``p+ = p-``.
    """
    if q < 3:
        raise ValidationError(f"large-q family needs q >= 3, got {q}")
    if not 0 <= delta <= 1 / q:
        raise ValidationError(f"delta must lie in (0, 1/q] = (0, {1 / q:.6g}], got {delta}")
    plus, minus = _pair(1 - 1 / q, 1 / q, delta)
    return HardInstance(plus, minus, q, delta, LARGE_Q)


def make_hard_instance_constq(q: int, eps: float) -> HardInstance:
    """``p±_0 = 2/3 ± eps``, ``p±_1 = 1/3 ∓ eps``."""
    if q < 2:
        raise ValidationError(f"Tsallis order must be >= 2, got {q}")
    if not 0 <= eps <= 1 / 3:
        raise ValidationError(f"eps must lie in [0, 1/3], got {eps}")
    plus, minus = _pair(2 / 3, 1 / 3, eps)
    return HardInstance(plus, minus, q, eps, CONST_Q)


def odd_binomial_expansion(a: float, x: float, k: int) -> float:
    """``(a + x)^k - (a - x)^k`` written as ``2 sum_j C(k, 2j+1) a^(k-2j-1) x^(2j+1)``."""
    return 2 * sum(math.comb(k, 2 * j + 1) * a ** (k - 2 * j - 1) * x ** (2 * j + 1)
                   for j in range((k - 1) // 2 + 1))


def entropy_gap_series(inst: HardInstance) -> float:
    """``H_q(p-) - H_q(p+)`` as the odd-power binomial sum in ``delta``."""
    a, b = inst.base
    q, d = inst.q, inst.delta
    total = sum(math.comb(q, 2 * j + 1) * (a ** (q - 2 * j - 1) - b ** (q - 2 * j - 1))
                * d ** (2 * j + 1) for j in range((q - 1) // 2 + 1))
    return 2 * total / (q - 1)


def entropy_gap(inst: HardInstance) -> float:
    """``H_q(p-) - H_q(p+)`` evaluated directly, cross-checked against the series."""
    direct = (tsallis_exact_dist(inst.p_minus, inst.q)
              - tsallis_exact_dist(inst.p_plus, inst.q))
    series = entropy_gap_series(inst)
    if abs(direct - series) > GAP_SERIES_TOL:
        raise ArithmeticError(f"gap formulas disagree: {direct!r} vs {series!r}")
    return direct


def gap_limit_factor(q: int) -> float:
    """``(1 - 1/q)^q - (1 - 1/q)(1/q)^(q-1)``, which tends to ``1/e``."""
    return (1 - 1 / q) ** q - (1 - 1 / q) * (1 / q) ** (q - 1)


def gap_lower_witness(inst: HardInstance) -> float:
    """First-term lower bound ``2 gap_limit_factor(q) delta`` on the entropy gap."""
    if inst.q <= 2:
        raise ValidationError("the first-term bound needs q > 2")
    if inst.family != LARGE_Q:
        raise ValidationError("the first-term bound is stated for the large-q family")
    return 2 * gap_limit_factor(inst.q) * inst.delta


def hellinger_upper_witness(inst: HardInstance) -> tuple[float, float]:
    """``(d_H(p+, p-), q delta / sqrt(q - 1))``."""
    if inst.family != LARGE_Q:
        raise ValidationError("the q delta / sqrt(q-1) bound is for the large-q family")
    return hellinger(inst.p_plus, inst.p_minus), inst.q * inst.delta / math.sqrt(inst.q - 1)


def sqrt_lower_inequality(a: float, x: float) -> bool:
    """``sqrt(a - x) >= sqrt(a) - x / sqrt(a)`` for ``0 <= x <= a``."""
    if not 0 <= x <= a or a <= 0:
        raise ValidationError("need 0 <= x <= a and a > 0")
    return math.sqrt(a - x) >= math.sqrt(a) - x / math.sqrt(a) - 1e-15


def query_lower_value(inst: HardInstance) -> float:
    """``1 / d_H(p+, p-)``, the distinguishing-query witness."""
    dh = hellinger(inst.p_plus, inst.p_minus)
    if dh == 0:
        raise ValidationError("p+ and p- coincide; nothing to distinguish")
    return 1 / dh


def smallest_q_with_gap(t: float = 0.3, q_max: int = 200,
                        delta_factors=(1.0, 0.5, 0.25, 0.01)) -> int | None:
    """Smallest q from which ``gap > 2 t delta`` holds for every q up to ``q_max``.

    ``delta`` runs over ``factor / q`` for each factor.
    """
    if not 0 < t < 1 / math.e:
        raise ValidationError(f"t must lie in (0, 1/e), got {t}")
    answer = None
    for q in range(q_max, 2, -1):
        ok = all(entropy_gap(make_hard_instance_largeq(q, f / q)) > 2 * t * f / q
                 for f in delta_factors)
        if not ok:
            break
        answer = q
    return answer


def empirical_distinguisher(inst: HardInstance, eps: float, trials: int, seed: int,
                            method: str = "qsvt") -> float:
    """Fraction of trials in which thresholding an entropy estimate names the hidden member.

    Each trial draws ``p+`` or ``p-`` uniformly, runs the estimator at
    precision ``eps`` and answers ``p+`` when the estimate is below
    ``H_q(p+) + eps``.
    """
    if inst.q < 2:
        raise ValidationError("estimators need q >= 2")
    pipes = {}
    for label, dist in (("plus", inst.p_plus), ("minus", inst.p_minus)):
        oracle = purify(DensityMatrix.diagonal(dist.probabilities))
        pipes[label] = (prepare_shift(oracle, inst.q, eps) if method == "shift"
                        else prepare_qsvt(oracle, inst.q, eps, method=method))
    threshold = tsallis_exact_dist(inst.p_plus, inst.q) + eps
    seeds = trial_seeds(seed, trials)
    labels = np.random.default_rng(seed).integers(0, 2, size=trials)
    correct = 0
    for lab, s in zip(labels, seeds):
        truth = "plus" if lab == 0 else "minus"
        guess = "plus" if pipes[truth].run(s).estimate < threshold else "minus"
        correct += guess == truth
    return correct / trials


SANDWICH_FIELDS = ("q", "eps", "floor", "floor_int", "minimax", "minimax_error",
                   "truncation", "rescaled_max_abs", "rescaled_error")


def degree_sandwich_row(q: int, eps: float) -> dict:
    """Floor, best degree and truncation degree for ``x^q`` at precision ``eps``.

    The floor is the Markov-brothers bound at ``2 eps``: rescaling an
    ``eps``-approximation ``p`` to ``(1 - eps) p`` yields a bounded
    ``2 eps``-approximation of the same degree.
    """
    if not 0 < eps < 1 / (2 * math.e):
        raise ValidationError(f"eps must lie in (0, 1/(2e)), got {eps}")
    floor = sv14_lower_bound(q, 2 * eps)
    best = minimax_degree(q, eps)
    if not best.found:
        raise ArithmeticError(f"no degree <= {q} reaches eps={eps} for x^{q}")
    trunc, _ = truncate_sv14(q, eps)
    rescaled: ChebyshevPoly = rescale_bounded(best.poly, q, max(eps, best.error))
    return {
        "q": q,
        "eps": eps,
        "floor": floor,
        "floor_int": math.ceil(floor),
        "minimax": best.degree,
        "minimax_error": best.error,
        "truncation": trunc.degree,
        "rescaled_max_abs": max_abs_on_grid(rescaled),
        "rescaled_error": sup_error_vs_monomial(rescaled, q),
    }


def degree_sandwich_experiment(q_list, eps: float) -> list[dict]:
    return [degree_sandwich_row(q, eps) for q in q_list]
