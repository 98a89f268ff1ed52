"""Simplified ten-function black-box optimization suite.

Each function keeps its canonical algebraic structure but replaces the
official instance transformations with a seeded shift of the optimum
(x_opt ~ U[-4, 4]^n), a seeded optimum value (f_opt ~ U[-100, 100]) and,
where the function calls for one, a seeded orthogonal rotation. The
contract is f(x) >= f_opt everywhere with f(x_opt) == f_opt exactly, and
everything is a pure function of (function_id, instance_id, dimension).

Function ids:
  1 Sphere                 6 Attractive Sector (rotated)
  2 Ellipsoidal            7 Step Ellipsoidal (rotated)
  3 Rastrigin              8 Rosenbrock
  4 Bueche-Rastrigin       9 Rosenbrock rotated
  5 Linear Slope          10 Ellipsoidal high-conditioning (rotated)
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..core import CmaesInstance

FUNCTION_NAMES = {
    1: "sphere",
    2: "ellipsoidal",
    3: "rastrigin",
    4: "bueche_rastrigin",
    5: "linear_slope",
    6: "attractive_sector",
    7: "step_ellipsoidal",
    8: "rosenbrock",
    9: "rosenbrock_rotated",
    10: "ellipsoidal_hc",
}

_ROTATED = {6, 7, 9, 10}


@dataclass(frozen=True)
class BbobProblem:
    function_id: int
    x_opt: np.ndarray
    f_opt: float
    rotation: np.ndarray | None


def _instance_rng(function_id: int, instance_id: int, dimension: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence([0xB0B, function_id, instance_id, dimension])
    )


def _random_rotation(g: np.random.Generator, n: int) -> np.ndarray:
    # QR of a Gaussian matrix with the sign fix that makes R properly Haar
    q, r = np.linalg.qr(g.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


@lru_cache(maxsize=256)
def get_problem(function_id: int, instance_id: int, dimension: int) -> BbobProblem:
    """Materialize the seeded optimum/rotation for one (function, instance)."""
    if function_id not in FUNCTION_NAMES:
        raise ValueError(f"function_id must be in 1..10, got {function_id}")
    g = _instance_rng(function_id, instance_id, dimension)
    x_opt = g.uniform(-4.0, 4.0, size=dimension)
    f_opt = float(g.uniform(-100.0, 100.0))
    rotation = _random_rotation(g, dimension) if function_id in _ROTATED else None
    return BbobProblem(function_id, x_opt, f_opt, rotation)


def _conditioned_weights(n: int, exponent: float) -> np.ndarray:
    if n == 1:
        return np.ones(1)
    return 10.0 ** (exponent * np.arange(n) / (n - 1))


def _raw_value(problem: BbobProblem, x: np.ndarray) -> float:
    n = x.shape[0]
    fid = problem.function_id
    z = x - problem.x_opt
    if problem.rotation is not None:
        z = problem.rotation @ z

    if fid == 1:  # sphere
        return float(z @ z)

    if fid in (2, 10):  # ellipsoid, axis-aligned and rotated
        return float(_conditioned_weights(n, 6.0) @ z**2)

    if fid == 3:  # rastrigin
        return float(10.0 * (n - np.sum(np.cos(2 * np.pi * z))) + z @ z)

    if fid == 4:  # bueche-rastrigin: per-coordinate scaling, boosted on odd-index positives
        s = _conditioned_weights(n, 0.5)
        odd = np.arange(n) % 2 == 0  # 1-indexed odd coordinates
        s = np.where(odd & (z > 0), 10.0 * s, s)
        zz = s * z
        return float(10.0 * (n - np.sum(np.cos(2 * np.pi * zz))) + zz @ zz)

    if fid == 5:  # linear slope, flat beyond the optimum's quadrant
        sign = np.where(problem.x_opt >= 0, 1.0, -1.0)
        s = sign * _conditioned_weights(n, 1.0)
        clip = sign * x >= sign * problem.x_opt
        zi = np.where(clip, problem.x_opt, x)
        return float(np.sum(np.abs(s) * np.abs(problem.x_opt) - s * zi))

    if fid == 6:  # attractive sector: one orthant is 10^4 times steeper
        s = np.where(z * (problem.rotation @ problem.x_opt) > 0, 100.0, 1.0)
        return float(np.sum((s * z) ** 2))

    if fid == 7:  # step ellipsoid: plateaus from coordinate rounding
        stepped = np.where(np.abs(z) > 0.5, np.floor(0.5 + z), np.floor(0.5 + 10.0 * z) / 10.0)
        quad = float(_conditioned_weights(n, 2.0) @ stepped**2)
        return 0.1 * max(abs(z[0]) / 1e4, quad)

    if fid in (8, 9):  # rosenbrock (9 applies the rotation folded into z above)
        w = z + 1.0
        return float(np.sum(100.0 * (w[:-1] ** 2 - w[1:]) ** 2 + (w[:-1] - 1.0) ** 2))

    raise ValueError(f"unhandled function_id {fid}")


def bbob_eval(instance: CmaesInstance, x: np.ndarray) -> float:
    """Evaluate one point; raises on dimension mismatch."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (instance.dimension,):
        raise ValueError(f"expected point of shape ({instance.dimension},), got {x.shape}")
    problem = get_problem(instance.function_id, instance.bbob_instance_id, instance.dimension)
    return _raw_value(problem, x) + problem.f_opt


def bbob_eval_batch(instance: CmaesInstance, xs: np.ndarray) -> np.ndarray:
    """Evaluate a (k, n) batch of points."""
    xs = np.asarray(xs, dtype=np.float64)
    if xs.ndim != 2 or xs.shape[1] != instance.dimension:
        raise ValueError(f"expected batch of shape (k, {instance.dimension}), got {xs.shape}")
    problem = get_problem(instance.function_id, instance.bbob_instance_id, instance.dimension)
    return np.array([_raw_value(problem, x) + problem.f_opt for x in xs])


def optimum(instance: CmaesInstance) -> tuple[np.ndarray, float]:
    """The instance's seeded optimum location and value."""
    problem = get_problem(instance.function_id, instance.bbob_instance_id, instance.dimension)
    return problem.x_opt.copy(), problem.f_opt
