"""Monte Carlo power study on a quadratic-logistic data generating process.

Covariates are uniform on (-3, 3) and the true conditional probability is

    pi(x) = expit(beta0 + beta1 x + beta2 x^2)

with the betas solved from three anchor conditions: pi(-3) = j + 0.00733745,
pi(-1.5) = 0.05, and pi(3) = 0.95. The parameter j >= 0 controls how far the
process sits from any linear-logistic model; at j = 0 the curvature
coefficient vanishes (up to rounding of the anchor constant) and a linear
logit is correctly specified.

Each replication draws 2n points, fits a linear-logistic model on the first
n by maximum likelihood (at j = 0 the true intercept and slope are used
instead), predicts on the remaining n, and applies the configured
calibration tests to those predictions. The oracle e-value variant keeps the
split structure of the feasible test but evaluates likelihood ratios against
the true pi(x) instead of an estimated curve, which bounds what any
estimation scheme could achieve.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._version import __version__
from .data import LabeledSampleSet, split_indices
from .errors import FitError, InputError
from .evalue import _log_eq_terms, split_evalue
from .hl import hl_test
from .numeric import exp_clamped, expit_array, logit, logsumexp, solve_linear_3x3

ANCHOR_OFFSET = 0.00733745
ANCHOR_X = (-3.0, -1.5, 3.0)
VARIANTS = ("ehl", "hl", "oracle")


@dataclass(frozen=True)
class QuadraticModel:
    """Quadratic-logistic conditional probability curve."""

    j: float
    beta0: float
    beta1: float
    beta2: float

    def pi_bar(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return expit_array(self.beta0 + self.beta1 * x + self.beta2 * x * x)


def solve_quadratic_betas(j: float) -> QuadraticModel:
    """Solve the three anchor conditions for (beta0, beta1, beta2).

    At j = 0 the solution is linear up to the rounding of the anchor
    constant (|beta2| around 1e-7).
    """
    targets = (j + ANCHOR_OFFSET, 0.05, 0.95)
    for t in targets:
        if not 0.0 < t < 1.0:
            raise InputError(f"anchor probability {t} outside (0, 1); j={j} is infeasible")
    a = np.array([[1.0, x, x * x] for x in ANCHOR_X])
    rhs = np.array([logit(t) for t in targets])
    b = solve_linear_3x3(a, rhs)
    return QuadraticModel(float(j), float(b[0]), float(b[1]), float(b[2]))


def generate_data(n: int, model: QuadraticModel, rng: np.random.Generator) -> LabeledSampleSet:
    """Draw n observations from the model.

    The forecast column is initialized to pi_bar so the sample is valid on
    its own; study code replaces it with model predictions before testing.
    """
    if n < 1:
        raise InputError(f"n must be positive, got {n}")
    x = rng.uniform(-3.0, 3.0, size=n)
    pi = model.pi_bar(x)
    y = (rng.random(n) < pi).astype(np.int64)
    return LabeledSampleSet(pi, y, x, pi)


def fit_logistic_linear(samples: LabeledSampleSet, max_iter: int = 100, tol: float = 1e-8) -> tuple[float, float]:
    """Maximum-likelihood intercept and slope of a linear-logistic model.

    Newton iteration from (0, 0) until the gradient's max-norm drops below
    tol. Raises FitError on separation (non-convergence), a singular
    information matrix, or a single-class outcome vector.
    """
    if samples.x is None:
        raise InputError("logistic fit requires covariates x")
    x = samples.x
    y = samples.y.astype(float)
    if np.all(y == y[0]):
        raise FitError("logistic fit requires both outcome classes")
    # a constant covariate leaves the slope unidentified, and a balanced
    # outcome would let the start point pass as a stationary fit
    if np.all(x == x[0]):
        raise FitError("covariate x is constant; the slope is not identified")
    b0 = 0.0
    b1 = 0.0
    for _ in range(max_iter):
        mu = expit_array(b0 + b1 * x)
        resid = y - mu
        g0 = float(np.sum(resid))
        g1 = float(np.sum(resid * x))
        if max(abs(g0), abs(g1)) < tol:
            return b0, b1
        w = mu * (1.0 - mu)
        h00 = float(np.sum(w))
        h01 = float(np.sum(w * x))
        h11 = float(np.sum(w * x * x))
        det = h00 * h11 - h01 * h01
        if not math.isfinite(det) or abs(det) < 1e-12 * max(h00 * h11, 1e-12):
            raise FitError("singular information matrix in logistic fit")
        b0 += (h11 * g0 - h01 * g1) / det
        b1 += (h00 * g1 - h01 * g0) / det
    raise FitError(f"logistic fit did not converge in {max_iter} iterations")


@dataclass(frozen=True)
class SimulationConfig:
    """Grid and test settings for one power study."""

    j_values: tuple[float, ...]
    n_values: tuple[int, ...]
    s_values: tuple[float, ...] = (1.0 / 3.0, 0.5, 2.0 / 3.0)
    variants: tuple[str, ...] = ("ehl", "hl")
    reps: int = 1000
    B: int = 10
    seed: int = 0
    threshold: float = 20.0
    alpha: float = 0.05
    hl_bins: int = 10
    hl_method: str = "QR"
    estimated_in_sample: bool = False
    threads: int = 1

    def __post_init__(self) -> None:
        if not self.j_values or not self.n_values or not self.s_values:
            raise InputError("j_values, n_values, and s_values must be nonempty")
        for v in self.variants:
            if v not in VARIANTS:
                raise InputError(f"unknown variant {v!r}; expected subset of {VARIANTS}")
        if not self.variants:
            raise InputError("at least one variant is required")
        if self.reps < 1 or self.B < 1 or self.threads < 1:
            raise InputError("reps, B, and threads must be positive")
        for s in self.s_values:
            if not 0.0 < s < 1.0:
                raise InputError(f"split fraction {s} outside (0, 1)")

    def to_json_dict(self) -> dict:
        return {
            "j_values": list(self.j_values),
            "n_values": list(self.n_values),
            "s_values": list(self.s_values),
            "variants": list(self.variants),
            "reps": self.reps,
            "B": self.B,
            "seed": self.seed,
            "threshold": self.threshold,
            "alpha": self.alpha,
            "hl_bins": self.hl_bins,
            "hl_method": self.hl_method,
            "estimated_in_sample": self.estimated_in_sample,
        }


@dataclass(frozen=True)
class PowerCell:
    """Aggregated results for one (j, n, variant[, s]) combination."""

    j: float
    n: int
    variant: str
    s: float | None
    rep_count: int
    failures: int
    rejections: int
    reject_rate: float
    mean_log_e: float | None
    se_log_e: float | None

    def to_json_dict(self) -> dict:
        return {
            "j": self.j,
            "n": self.n,
            "variant": self.variant,
            "s": self.s,
            "rep_count": self.rep_count,
            "failures": self.failures,
            "rejections": self.rejections,
            "reject_rate": self.reject_rate,
            "mean_log_e": self.mean_log_e,
            "se_log_e": self.se_log_e,
        }


@dataclass(frozen=True)
class PowerStudyReport:
    """All cells of a study plus the configuration that produced them."""

    config: SimulationConfig
    cells: tuple[PowerCell, ...] = field(default_factory=tuple)

    def cell(self, j: float, n: int, variant: str, s: float | None = None) -> PowerCell:
        for c in self.cells:
            if c.j == j and c.n == n and c.variant == variant and (s is None or c.s == s):
                return c
        raise KeyError(f"no cell for j={j}, n={n}, variant={variant}, s={s}")

    def to_csv(self) -> str:
        meta = json.dumps(self.config.to_json_dict(), sort_keys=True)
        lines = [
            f"# ehl simulate version={__version__} seed={self.config.seed} config={meta}",
            "j,n,s,variant,rep_count,reject_rate,mean_log_e",
        ]
        for c in self.cells:
            s_txt = "" if c.s is None else repr(c.s)
            mle_txt = "" if c.mean_log_e is None else repr(c.mean_log_e)
            lines.append(
                f"{c.j!r},{c.n},{s_txt},{c.variant},{c.rep_count},{c.reject_rate!r},{mle_txt}"
            )
        return "\n".join(lines) + "\n"

    def to_json_dict(self) -> dict:
        return {
            "config": self.config.to_json_dict(),
            "cells": [c.to_json_dict() for c in self.cells],
        }


def _oracle_split_log_e(
    terms: np.ndarray, n: int, s: float, B: int, key: tuple[int, ...]
) -> float:
    per = np.empty(B)
    for b in range(B):
        rng = np.random.default_rng([*key, b])
        _, hold = split_indices(n, s, rng)
        per[b] = float(np.sum(terms[hold]))
    return logsumexp(per) - math.log(B)


def run_power_study(config: SimulationConfig) -> PowerStudyReport:
    """Run the full replication grid.

    Replication r of cell (j index ji, n index ni) derives its data stream
    from (seed, 0, ji, ni, r); split-based tests derive stream (seed, 1, ji,
    ni, r, si, b) for split b, shared between the feasible and oracle
    variants so their comparison is paired. Results are invariant to the
    thread count. Replications whose logistic fit fails are counted and
    excluded from the cell's rates.
    """
    cells: list[PowerCell] = []
    for ji, j in enumerate(config.j_values):
        model = solve_quadratic_betas(j)
        for ni, n in enumerate(config.n_values):
            rep_results: list[dict | None] = [None] * config.reps

            def run(lo: int, hi: int, ji=ji, ni=ni, model=model, n=n) -> None:
                for r in range(lo, hi):
                    rep_results[r] = _one_rep(config, model, n, ji, ni, r)

            if config.threads == 1:
                run(0, config.reps)
            else:
                step = -(-config.reps // config.threads)
                spans = [
                    (lo, min(lo + step, config.reps))
                    for lo in range(0, config.reps, step)
                ]
                with ThreadPoolExecutor(max_workers=config.threads) as pool:
                    for _ in pool.map(lambda span: run(*span), spans):
                        pass

            failures = sum(1 for res in rep_results if res is None)
            for variant in config.variants:
                if variant == "hl":
                    cells.append(_aggregate(rep_results, j, n, variant, None, failures))
                else:
                    for s in config.s_values:
                        cells.append(_aggregate(rep_results, j, n, variant, s, failures))
    return PowerStudyReport(config, tuple(cells))


def _one_rep(
    config: SimulationConfig, model: QuadraticModel, n: int, ji: int, ni: int, r: int
) -> dict | None:
    rng = np.random.default_rng([config.seed, 0, ji, ni, r])
    data = generate_data(2 * n, model, rng)
    estimation = data.take(np.arange(n))
    validation = data.take(np.arange(n, 2 * n))
    if model.j == 0.0:
        b0, b1 = model.beta0, model.beta1
    else:
        try:
            b0, b1 = fit_logistic_linear(estimation)
        except FitError:
            return None
    predicted = validation.with_p(expit_array(b0 + b1 * validation.x))

    out: dict = {}
    for variant in config.variants:
        if variant == "hl":
            rep = hl_test(
                predicted, config.hl_method, config.hl_bins, config.estimated_in_sample
            )
            out[(variant, None)] = (rep.p_value <= config.alpha, None)
        elif variant == "ehl":
            for si, s in enumerate(config.s_values):
                rep = split_evalue(
                    predicted,
                    s,
                    config.B,
                    seed=(config.seed, 1, ji, ni, r, si),
                    threshold=config.threshold,
                )
                out[(variant, s)] = (rep.reject_at_20, rep.log_e)
        else:  # oracle
            terms = _log_eq_terms(predicted.p, predicted.y, predicted.pi_bar)
            for si, s in enumerate(config.s_values):
                log_e = _oracle_split_log_e(
                    terms, n, s, config.B, (config.seed, 1, ji, ni, r, si)
                )
                out[(variant, s)] = (exp_clamped(log_e) > config.threshold, log_e)
    return out


def _aggregate(
    rep_results: list, j: float, n: int, variant: str, s: float | None, failures: int
) -> PowerCell:
    rejections = 0
    logs: list[float] = []
    count = 0
    for res in rep_results:
        if res is None:
            continue
        reject, log_e = res[(variant, s)]
        count += 1
        rejections += int(reject)
        if log_e is not None:
            logs.append(log_e)
    rate = rejections / count if count else float("nan")
    mean_log_e = None
    se_log_e = None
    if logs:
        arr = np.array(logs)
        mean_log_e = float(np.mean(arr))
        if arr.size > 1:
            se_log_e = float(np.std(arr, ddof=1) / math.sqrt(arr.size))
    return PowerCell(
        j=float(j),
        n=int(n),
        variant=variant,
        s=s,
        rep_count=count,
        failures=failures,
        rejections=rejections,
        reject_rate=rate,
        mean_log_e=mean_log_e,
        se_log_e=se_log_e,
    )
