"""Step-size control benchmark: CMA-ES with an externally set sigma.

One environment step runs one CMA-ES generation. The agent's continuous
action is the sampling step size sigma in [0, 10]; the usual cumulative
step-size adaptation is removed since sigma is no longer the strategy's
to adapt. Mean recombination and the rank-one plus rank-mu covariance
update follow the standard (mu/mu_w, lambda) scheme with positive
recombination weights.

The reward is the negative best (minimum) function value observed so far
in the episode, so the reward sequence within an episode is monotonically
non-decreasing. Episodes end when the evaluation budget cannot fit another
generation, when the optimum is hit to 1e-8, or when the sampling
distribution collapses; episode lengths therefore vary across instances.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ..core import ActionSpace, CmaesInstance, CmdpEnv, InstanceSet, UsageError
from .bbob import bbob_eval_batch, optimum

logger = logging.getLogger(__name__)

SIGMA_MIN = 1e-10
SIGMA_MAX = 10.0
TARGET_PRECISION = 1e-8
VARIANCE_COLLAPSE = 1e-24
EIGENVALUE_FLOOR = 1e-14
DEFAULT_BUDGET = 2_000


def population_size(n: int) -> int:
    """lambda = 4 + floor(3 ln n)."""
    return 4 + int(math.floor(3.0 * math.log(n)))


@dataclass(frozen=True)
class CmaParams:
    n: int
    lam: int
    mu: int
    weights: np.ndarray  # positive, sums to one over the mu parents
    mueff: float
    cc: float
    c1: float
    cmu: float


def cma_params(n: int) -> CmaParams:
    lam = population_size(n)
    mu = lam // 2
    raw = np.log(lam / 2 + 0.5) - np.log(np.arange(1, mu + 1))
    weights = raw / raw.sum()
    mueff = 1.0 / float(np.sum(weights**2))
    cc = (4.0 + mueff / n) / (n + 4.0 + 2.0 * mueff / n)
    c1 = 2.0 / ((n + 1.3) ** 2 + mueff)
    cmu = min(1.0 - c1, 2.0 * (mueff - 2.0 + 1.0 / mueff) / ((n + 2.0) ** 2 + mueff))
    return CmaParams(n, lam, mu, weights, mueff, cc, c1, cmu)


@dataclass
class CmaesState:
    mean: np.ndarray
    cov: np.ndarray
    sigma: float
    p_c: np.ndarray
    best_f_so_far: float
    evaluations_used: int
    repaired: bool = field(default=False, compare=False)


def _sqrt_and_repair(cov: np.ndarray) -> tuple[np.ndarray, np.ndarray, bool]:
    """Eigen-decompose, flooring eigenvalues so the matrix stays PD.

    Returns (C^{1/2}, eigenvalues, repaired flag). ``cov`` is modified in
    place when flooring was needed.
    """
    evals, evecs = np.linalg.eigh(cov)
    repaired = bool(np.any(evals < EIGENVALUE_FLOOR))
    if repaired:
        evals = np.maximum(evals, EIGENVALUE_FLOOR)
        cov[:] = (evecs * evals) @ evecs.T
        logger.warning("covariance repaired: eigenvalues floored at %g", EIGENVALUE_FLOOR)
    sqrt_c = (evecs * np.sqrt(evals)) @ evecs.T
    return sqrt_c, evals, repaired


def cma_generation(
    state: CmaesState,
    sigma: float,
    instance: CmaesInstance,
    rng: np.random.Generator,
    params: CmaParams | None = None,
) -> tuple[CmaesState, float]:
    """Advance the strategy by one generation at the given step size."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    n = instance.dimension
    par = params if params is not None else cma_params(n)

    cov = state.cov.copy()
    sqrt_c, _, repaired = _sqrt_and_repair(cov)

    z = rng.standard_normal((par.lam, n))
    offspring = state.mean + sigma * (z @ sqrt_c.T)
    fvals = bbob_eval_batch(instance, offspring)
    order = np.argsort(fvals, kind="stable")
    parents = offspring[order[: par.mu]]

    mean_new = par.weights @ parents
    y = (mean_new - state.mean) / sigma
    p_c = (1.0 - par.cc) * state.p_c + math.sqrt(par.cc * (2.0 - par.cc) * par.mueff) * y

    steps = (parents - state.mean) / sigma
    rank_mu = (par.weights[:, None] * steps).T @ steps
    cov_new = (1.0 - par.c1 - par.cmu) * cov + par.c1 * np.outer(p_c, p_c) + par.cmu * rank_mu
    cov_new = 0.5 * (cov_new + cov_new.T)

    best_of_gen = float(fvals[order[0]])
    return (
        CmaesState(
            mean=mean_new,
            cov=cov_new,
            sigma=sigma,
            p_c=p_c,
            best_f_so_far=min(state.best_f_so_far, best_of_gen),
            evaluations_used=state.evaluations_used + par.lam,
            repaired=repaired,
        ),
        best_of_gen,
    )


class CmaesEnv(CmdpEnv):
    """Observation is [lambda, sigma, remaining evaluations, function_id, instance_id]."""

    action_space = ActionSpace(kind="continuous", low=0.0, high=SIGMA_MAX)
    state_dim = 5
    reward_range = (-np.inf, np.inf)

    def __init__(self, budget: int = DEFAULT_BUDGET, dimension: int = 10):
        self.budget = budget
        self.dimension = dimension
        self._params = cma_params(dimension)
        self.max_horizon = budget // self._params.lam
        self._instance: CmaesInstance | None = None
        self._state: CmaesState | None = None
        self._rng: np.random.Generator | None = None
        self._done = True

    @property
    def lam(self) -> int:
        return self._params.lam

    def reset(self, instance: CmaesInstance, seed: int = 0) -> np.ndarray:
        if instance.dimension != self.dimension:
            raise ValueError(
                f"env configured for dimension {self.dimension}, instance has {instance.dimension}"
            )
        self._instance = instance
        self._rng = np.random.default_rng(seed)
        n = instance.dimension
        self._state = CmaesState(
            mean=self._rng.uniform(-4.0, 4.0, size=n),
            cov=np.eye(n),
            sigma=0.5,
            p_c=np.zeros(n),
            best_f_so_far=np.inf,
            evaluations_used=0,
        )
        self._done = False
        return self._observe()

    def _observe(self) -> np.ndarray:
        return np.array(
            [
                self._params.lam,
                self._state.sigma,
                self.budget - self._state.evaluations_used,
                self._instance.function_id,
                self._instance.bbob_instance_id,
            ],
            dtype=np.float64,
        )

    def step(self, action: np.ndarray) -> tuple[np.ndarray, float, bool]:
        if self._done:
            raise UsageError("step() called after episode end; call reset() first")
        sigma = float(np.clip(np.asarray(action, dtype=np.float64).reshape(-1)[0], SIGMA_MIN, SIGMA_MAX))
        self._state, _ = cma_generation(self._state, sigma, self._instance, self._rng, self._params)
        reward = -self._state.best_f_so_far

        _, f_opt = optimum(self._instance)
        eigs = np.linalg.eigvalsh(self._state.cov)
        self._done = (
            self._state.evaluations_used + self._params.lam > self.budget
            or self._state.best_f_so_far - f_opt <= TARGET_PRECISION
            or sigma**2 * float(eigs[-1]) < VARIANCE_COLLAPSE
        )
        return self._observe(), reward, self._done


def cmaes_train_instances(dimension: int = 10) -> InstanceSet:
    """Functions 1..10, instance ids 1..4 each (40 instances)."""
    instances = tuple(
        CmaesInstance(id=(fid - 1) * 4 + (iid - 1), function_id=fid, bbob_instance_id=iid, dimension=dimension)
        for fid in range(1, 11)
        for iid in range(1, 5)
    )
    return InstanceSet("train", instances)


def cmaes_test_instances(dimension: int = 10) -> InstanceSet:
    """Functions 1..10, instance id 5 (10 instances)."""
    instances = tuple(
        CmaesInstance(id=fid - 1, function_id=fid, bbob_instance_id=5, dimension=dimension)
        for fid in range(1, 11)
    )
    return InstanceSet("test", instances)
