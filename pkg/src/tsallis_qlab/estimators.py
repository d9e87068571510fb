"""End-to-end Tsallis entropy estimators and their query ledgers.

Two methods share one amplitude-estimation back end:

* ``qsvt`` – block-encode rho, apply a polynomial approximating ``x^(q-1)``,
  run a Hadamard test against a fresh copy of rho and estimate its
  acceptance probability ``gamma``; return ``2 (1 - gamma~) / (q - 1)``.
* ``shift`` – run the Shift test on ``q`` copies and estimate ``Pr[x = 0]``.

``nonuniform-minimax`` is the ``qsvt`` pipeline fed with a numerically best
polynomial instead of the truncated Chebyshev expansion.

Construction of the circuits is deterministic and separated from sampling
(:class:`Pipeline`), so batches of seeded trials reuse one construction.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import os

import numpy as np

from .blockenc import density_block_encoding, extract_block, qsvt_apply
from .circuits import (
    SHIFT_TEST_QUBITS,
    MarkedUnitary,
    amplitude_estimate,
    build_hadamard_test_unitary,
    qae_grid_size,
    shift_test_probability,
    shift_test_unitary,
)
from .linalg import (
    QueryLedger,
    StatePrepOracle,
    ValidationError,
    check_qubit_budget,
    tsallis_exact,
)
from .polyapprox import (
    BOUND_SLACK,
    ChebyshevPoly,
    certify,
    max_abs_on_grid,
    minimax_degree,
    truncate_sv14,
    truncation_degree,
)

METHODS = ("qsvt", "shift", "nonuniform-minimax")

TRIAL_FIELDS = ("method", "q", "eps", "trial", "estimate", "exact", "abs_err",
                "queries", "success", "seed")


@dataclass(frozen=True)
class BudgetSplit:
    """Error budget across polynomial approximation, QSVT and amplitude estimation."""

    eps_poly: float
    eps_qsvt: float
    eps_qae: float

    def __post_init__(self):
        if min(self.eps_poly, self.eps_qsvt, self.eps_qae) < 0:
            raise ValidationError("budget components must be non-negative")

    def fits(self, q: int, eps: float) -> bool:
        total = self.eps_qsvt + self.eps_poly + 2 * self.eps_qae
        return total <= (q - 1) * eps * (1 + 1e-12)


@dataclass(frozen=True)
class EstimateResult:
    estimate: float
    target_eps: float
    q: int
    split: BudgetSplit | None
    ledger: QueryLedger
    seed: int
    method: str
    gamma_estimate: float = math.nan


def _check_order_and_eps(q: int, eps: float) -> None:
    if q < 2:
        raise ValidationError(f"Tsallis order must be an integer >= 2, got {q}")
    if not 0 < eps <= 1 / q:
        raise ValidationError(
            f"eps must lie in (0, 1/q] = (0, {1 / q:.6g}]; entropies lie in "
            f"[0, 1/(q-1)] so larger eps is uninformative, got {eps}"
        )


def default_split(q: int, eps: float) -> BudgetSplit:
    """Equal three-way split ``(q - 1) eps / 4`` for every component."""
    _check_order_and_eps(q, eps)
    share = (q - 1) * eps / 4
    return BudgetSplit(eps_poly=share, eps_qsvt=share, eps_qae=share)


def nonuniform_split(q: int, eps: float, t: float = 0.5) -> BudgetSplit:
    """``eps_poly = t (q-1) eps``, ``eps_qae = (1-t) (q-1) eps / 2``, no QSVT error."""
    _check_order_and_eps(q, eps)
    if not 0 < t < 1:
        raise ValidationError(f"t must lie in (0, 1), got {t}")
    return BudgetSplit(eps_poly=t * (q - 1) * eps, eps_qsvt=0.0,
                       eps_qae=(1 - t) * (q - 1) * eps / 2)


def predicted_error_bound(split: BudgetSplit, q: int) -> float:
    return (split.eps_qsvt + split.eps_poly + 2 * split.eps_qae) / (q - 1)


def gamma_to_entropy(gamma: float, q: int) -> float:
    return 2 * (1 - gamma) / (q - 1)


def _nonuniform_poly(q: int, eps_poly: float) -> ChebyshevPoly:
    """Bounded minimax approximation of ``x^q``, renormalized so ``|p| <= 1``."""
    start = 0
    while True:
        res = minimax_degree(q, eps_poly, degree_range=(start, q), bounded=True)
        if not res.found:
            raise ValidationError(f"no polynomial reaches eps_poly={eps_poly} for x^{q}")
        poly = res.poly
        top = max_abs_on_grid(poly)
        if top > 1:
            poly = poly.scaled(1 / top)
        cert = certify(poly, q, eps_poly)
        if cert.sup_error <= eps_poly * (1 + 1e-8) and cert.max_abs <= 1 + BOUND_SLACK:
            return poly
        start = res.degree + 1


@dataclass
class Pipeline:
    """Deterministic part of one estimator configuration.

    ``target`` is the marked unitary whose acceptance probability is
    estimated; ``poly`` is ``None`` for the Shift-test method.
    """

    method: str
    q: int
    eps: float
    eps_qae: float
    target: MarkedUnitary
    split: BudgetSplit | None = None
    poly: ChebyshevPoly | None = field(default=None, repr=False)
    block: np.ndarray | None = field(default=None, repr=False)

    @property
    def grid_size_M(self) -> int:
        return qae_grid_size(self.eps_qae)

    @property
    def queries_per_run(self) -> int:
        return self.grid_size_M * self.target.queries_per_use

    def exact_gamma_estimate(self) -> float:
        """Entropy estimate with amplitude estimation replaced by the exact ``gamma``."""
        return gamma_to_entropy(self.target.gamma, self.q)

    def run(self, seed: int, mode: str = "analytic-sampler") -> EstimateResult:
        ledger = QueryLedger()
        qae = amplitude_estimate(self.target, self.eps_qae, seed, mode=mode, ledger=ledger)
        return EstimateResult(
            estimate=gamma_to_entropy(qae.estimate, self.q),
            target_eps=self.eps,
            q=self.q,
            split=self.split,
            ledger=ledger,
            seed=seed,
            method=self.method,
            gamma_estimate=qae.estimate,
        )


def prepare_qsvt(oracle: StatePrepOracle, q: int, eps: float,
                 split: BudgetSplit | None = None, method: str = "qsvt",
                 t: float = 0.5) -> Pipeline:
    """Steps 1-4: block-encode, approximate ``x^(q-1)``, transform, wrap in a Hadamard test."""
    _check_order_and_eps(q, eps)
    if method == "qsvt":
        split = split or default_split(q, eps)
        poly, cert = truncate_sv14(q - 1, split.eps_poly)
        if not cert.ok:
            raise ValidationError(f"polynomial certificate failed: {cert}")
    elif method == "nonuniform-minimax":
        split = split or nonuniform_split(q, eps, t)
        poly = _nonuniform_poly(q - 1, split.eps_poly)
    else:
        raise ValidationError(f"unknown QSVT method {method!r}")
    if not split.fits(q, eps):
        raise ValidationError(f"budget split {split} exceeds (q-1) eps for eps={eps}")
    check_qubit_budget(2 * oracle.n_qubits + 2, "Hadamard-test unitary")
    u_rho = density_block_encoding(oracle)
    u_p = qsvt_apply(u_rho, poly)
    target = build_hadamard_test_unitary(oracle, u_p)
    return Pipeline(method, q, eps, split.eps_qae, target, split, poly, extract_block(u_p))


def prepare_shift(oracle: StatePrepOracle, q: int, eps: float,
                  mode: str = "analytic-sampler") -> Pipeline:
    """Shift test on ``q`` oracle outputs; ``Pr[x=0]`` is needed to ``(q-1) eps / 2``.

    The analytic sampler only needs the acceptance probability, which is
    obtained by simulating the Shift test on ``rho^⊗q``; the full-circuit
    mode materializes ``U = W · O^⊗q``.
    """
    _check_order_and_eps(q, eps)
    check_qubit_budget(q * oracle.n_system + 1, "Shift test", SHIFT_TEST_QUBITS)
    eps_qae = (q - 1) * eps / 2
    if mode == "full-circuit":
        target = shift_test_unitary(oracle, q)
    else:
        gamma = shift_test_probability(oracle.rho(), q)
        target = MarkedUnitary(1 + q * oracle.n_qubits, gamma, None, charge=(q, 0, 0))
    return Pipeline("shift", q, eps, eps_qae, target)


def estimate_tsallis_qsvt(oracle: StatePrepOracle, q: int, eps: float,
                          split: BudgetSplit | None = None, seed: int = 0,
                          mode: str = "analytic-sampler", method: str = "qsvt",
                          t: float = 0.5) -> EstimateResult:
    return prepare_qsvt(oracle, q, eps, split, method, t).run(seed, mode)


def estimate_tsallis_shift(oracle: StatePrepOracle, q: int, eps: float, seed: int = 0,
                           mode: str = "analytic-sampler") -> EstimateResult:
    return prepare_shift(oracle, q, eps, mode).run(seed, mode)


def qsvt_query_plan(q: int, eps: float, split: BudgetSplit | None = None) -> dict:
    """Ledger total for one QSVT run without building any circuit.

    ``M * (2 deg(p) + 1)``: each Hadamard-test use spends ``deg(p)`` uses of
    the two-query density encoding plus one query to prepare rho.
    """
    split = split or default_split(q, eps)
    degree = min(truncation_degree(q - 1, split.eps_poly), q - 1)
    if (degree - (q - 1)) % 2:
        degree -= 1  # keep the parity of x^(q-1)
    m = qae_grid_size(split.eps_qae)
    return {"method": "qsvt", "q": q, "eps": eps, "degree": degree, "M": m,
            "queries": m * (2 * degree + 1)}


def shift_query_plan(q: int, eps: float) -> dict:
    """Ledger total for one Shift-test run: ``M * q``."""
    _check_order_and_eps(q, eps)
    m = qae_grid_size((q - 1) * eps / 2)
    return {"method": "shift", "q": q, "eps": eps, "degree": 0, "M": m, "queries": m * q}


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("TSALLIS_QLAB_THREADS", "1")))
    except ValueError:
        return 1


def trial_seeds(seed: int, trials: int) -> list[int]:
    """Per-trial seeds derived deterministically from ``(seed, trial)``."""
    ss = np.random.SeedSequence(seed)
    return [int(s.generate_state(1)[0]) for s in ss.spawn(trials)]


def run_trials(pipeline: Pipeline, exact: float, trials: int, seed: int,
               mode: str = "analytic-sampler") -> list[dict]:
    """Run ``trials`` seeded estimates; rows follow :data:`TRIAL_FIELDS`.

    Trials may run in parallel (``TSALLIS_QLAB_THREADS``); rows are always
    returned in trial order.
    """
    seeds = trial_seeds(seed, trials)

    def one(i: int) -> dict:
        res = pipeline.run(seeds[i], mode)
        err = abs(res.estimate - exact)
        return {"method": pipeline.method, "q": pipeline.q, "eps": pipeline.eps,
                "trial": i, "estimate": res.estimate, "exact": exact, "abs_err": err,
                "queries": res.ledger.total, "success": int(err <= pipeline.eps),
                "seed": seeds[i]}

    workers = min(thread_count(), trials) or 1
    if workers == 1:
        return [one(i) for i in range(trials)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, range(trials)))


SWEEP_FIELDS = ("method", "q", "eps", "trials", "mean_queries", "success_rate",
                "normalized_queries", "wall_time")


def normalized_queries(method: str, q: int, eps: float, queries: float) -> float:
    """Queries rescaled by the predicted scaling; flat across q when the law holds.

    ``qsvt``: ``L sqrt(q) eps / sqrt(log(1/(q eps)))``; ``shift``: ``L eps``.
    """
    if method == "shift":
        return queries * eps
    return queries * math.sqrt(q) * eps / math.sqrt(math.log(1 / (q * eps)))


def sweep_query_scaling(oracle: StatePrepOracle, q_list, eps_list, trials: int,
                        seed: int, methods=("qsvt", "shift")) -> list[dict]:
    """Ledger and success-rate table over a (method, q, eps) grid.

    Configurations whose Shift test exceeds the qubit budget still report
    their planned ledger; their success rate is NaN.
    """
    rho = oracle.rho()
    rows = []
    for method in methods:
        for q in q_list:
            for eps in eps_list:
                start = time.perf_counter()
                exact = tsallis_exact(rho, q)
                try:
                    pipe = (prepare_shift(oracle, q, eps) if method == "shift"
                            else prepare_qsvt(oracle, q, eps, method=method))
                except ValidationError:
                    if method != "shift":
                        raise
                    plan = shift_query_plan(q, eps)
                    mean_q, rate = float(plan["queries"]), math.nan
                else:
                    runs = run_trials(pipe, exact, trials, seed)
                    mean_q = float(np.mean([r["queries"] for r in runs]))
                    rate = float(np.mean([r["success"] for r in runs]))
                rows.append({
                    "method": method, "q": q, "eps": eps, "trials": trials,
                    "mean_queries": mean_q, "success_rate": rate,
                    "normalized_queries": normalized_queries(method, q, eps, mean_q),
                    "wall_time": time.perf_counter() - start,
                })
    return rows


__all__ = [
    "BudgetSplit",
    "EstimateResult",
    "Pipeline",
    "default_split",
    "estimate_tsallis_qsvt",
    "estimate_tsallis_shift",
    "nonuniform_split",
    "predicted_error_bound",
    "prepare_qsvt",
    "prepare_shift",
    "qsvt_query_plan",
    "run_trials",
    "shift_query_plan",
    "sweep_query_scaling",
]
