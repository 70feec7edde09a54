"""Comparison schemes sharing the operator infrastructure.

All variants solve 0 in M(z) + C(z) through resolvent and forward
evaluations; they differ in relaxation, momentum, and correction terms.
One state record with optional slots serves every variant so the benchmark
harness can drive them uniformly.
"""

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError, DivergenceError
from .linalg import as_vector
from .operators import InclusionProblem, ZeroMap

__all__ = [
    "VARIANTS",
    "BaselineMethod",
    "BaselineState",
    "default_schedules",
    "baseline_init",
    "baseline_step",
]

VARIANTS = (
    "fbs",
    "inertial_ppm",
    "moudafi_oliny",
    "lorenz_pock",
    "relaxed_inertial",
    "crifba",
    "fast_km",
    "appm",
)

# pure proximal-point schemes, defined only for C = 0
_PROX_ONLY = ("inertial_ppm", "appm")

# cap keeping inertial coefficients strictly below 1/3 where convergence needs it
_THIRD_CAP = 1.0 / 3.0 - 1e-3


@dataclass(frozen=True)
class BaselineMethod:
    """Variant name plus its parameter record.

    ``schedule`` may be a callable k -> dict overriding the coefficients of
    :func:`default_schedules` for that k (missing keys fall back to the
    defaults).
    """

    variant: str
    gamma: Optional[float] = None
    alpha: float = 5.0   # fast_km acceleration parameter
    s: float = 1.0       # fast_km averaging weight
    rho: float = 0.9     # crifba relaxation factor
    schedule: Optional[Callable[[int], dict]] = None

    def resolve(self, problem: InclusionProblem):
        """Validate against the problem and fill in a concrete step size."""
        if self.variant not in VARIANTS:
            raise ConfigurationError(f"unknown baseline variant {self.variant!r}")
        beta = problem.beta
        if self.variant in _PROX_ONLY and not isinstance(problem.C, ZeroMap):
            raise ConfigurationError(
                f"{self.variant} is a pure proximal-point scheme and requires C = 0"
            )
        gamma = self.gamma
        if gamma is None:
            if self.variant in _PROX_ONLY:
                gamma = 1.0
            elif math.isfinite(beta):
                gamma = beta
            else:
                raise ConfigurationError(
                    "gamma must be given explicitly when the forward map has "
                    "unbounded cocoercivity modulus"
                )
        if not gamma > 0:
            raise ConfigurationError(f"gamma must be positive, got {gamma}")
        if self.variant not in _PROX_ONLY and math.isfinite(beta) and not gamma < 2.0 * beta:
            raise ConfigurationError(
                f"gamma={gamma} outside (0, 2*beta) = (0, {2.0 * beta})"
            )
        if self.variant == "fast_km":
            if not self.alpha > 2:
                raise ConfigurationError(f"fast_km needs alpha > 2, got {self.alpha}")
            s_max = 2.0 - (gamma / (2.0 * beta) if math.isfinite(beta) else 0.0)
            if not 0 < self.s < s_max:
                raise ConfigurationError(
                    f"fast_km needs 0 < s < {s_max}, got {self.s}"
                )
        if not 0 < self.rho <= 1:
            raise ConfigurationError(f"rho must lie in (0, 1], got {self.rho}")
        return replace(self, gamma=gamma)


@dataclass
class BaselineState:
    """Shared iterate record; unused slots stay None for simpler variants."""

    k: int
    z_prev: np.ndarray
    z: np.ndarray
    y_prev: Optional[np.ndarray] = None    # crifba / appm extrapolation history
    y_prev2: Optional[np.ndarray] = None   # appm second-order history
    fb_prev: Optional[np.ndarray] = None   # fast_km cached J(z_{k-1} - g C(z_{k-1}))


def default_schedules(variant, k, gamma=None, alpha=None, s=None):
    """Documented default coefficients of ``variant`` at iteration ``k``."""
    if k < 1:
        raise ConfigurationError(f"k must be >= 1, got {k}")
    nesterov = k / (k + 3.0)
    if variant == "fbs":
        return {}
    if variant in ("inertial_ppm", "moudafi_oliny", "lorenz_pock"):
        return {"alpha_k": min(_THIRD_CAP, nesterov)}
    if variant == "relaxed_inertial":
        return {"alpha_k": nesterov, "rho_k": 0.9, "mu_k": gamma}
    if variant == "crifba":
        return {"alpha_k": nesterov, "delta_k": nesterov}
    if variant == "appm":
        return {"alpha_k": 1.0 - 2.0 / (k + 1.0)}
    if variant == "fast_km":
        return {
            "fix_weight": 1.0 - s * alpha / (2.0 * (k + alpha)),
            "momentum": (1.0 - s) * k / (k + alpha),
            "fb_new": s * (alpha + 2.0 * k) / (2.0 * (k + alpha)),
            "fb_old": -s * k / (k + alpha),
        }
    raise ConfigurationError(f"unknown baseline variant {variant!r}")


def _coefficients(method: BaselineMethod, k):
    coeffs = default_schedules(
        method.variant, k, gamma=method.gamma, alpha=method.alpha, s=method.s
    )
    if method.schedule is not None:
        coeffs.update(method.schedule(k))
    return coeffs


def baseline_init(method: BaselineMethod, problem: InclusionProblem, z0=None, y0=None):
    """State at k=1.  FBS takes one real step; inertial variants start with
    cleared momentum history (z_1 = z_0)."""
    method = method.resolve(problem)
    dim = problem.dim
    if z0 is None:
        if dim is None:
            raise ConfigurationError("z0 required: problem does not fix a dimension")
        z0 = np.zeros(dim)
    z0 = as_vector(z0, dim=dim, name="z0")
    gamma = method.gamma
    if method.variant == "fbs":
        z1 = problem.M.resolvent(gamma, z0 - gamma * problem.C.apply(z0))
        return BaselineState(k=1, z_prev=z0, z=z1)
    state = BaselineState(k=1, z_prev=z0, z=z0.copy())
    if method.variant == "crifba":
        state.y_prev = z0.copy() if y0 is None else as_vector(y0, dim=z0.shape[0], name="y0")
    elif method.variant == "appm":
        state.y_prev = z0.copy()
        state.y_prev2 = z0.copy()
    elif method.variant == "fast_km":
        state.fb_prev = problem.M.resolvent(gamma, z0 - gamma * problem.C.apply(z0))
    return state


def baseline_step(method: BaselineMethod, state: BaselineState,
                  problem: InclusionProblem, k=None):
    """Advance ``state`` one iteration of the method's update rule."""
    k = state.k if k is None else k
    gamma = method.gamma
    if gamma is None:
        raise ConfigurationError("method not resolved: gamma is None")
    co = _coefficients(method, k)
    J = problem.M.resolvent
    C = problem.C.apply
    z, z_prev = state.z, state.z_prev
    variant = method.variant

    y_prev_new = state.y_prev
    y_prev2_new = state.y_prev2
    fb_prev_new = state.fb_prev

    if variant == "fbs":
        z_next = J(gamma, z - gamma * C(z))
    elif variant == "inertial_ppm":
        z_next = J(gamma, z + co["alpha_k"] * (z - z_prev))
    elif variant == "moudafi_oliny":
        z_next = J(gamma, z + co["alpha_k"] * (z - z_prev) - gamma * C(z))
    elif variant == "lorenz_pock":
        y = z + co["alpha_k"] * (z - z_prev)
        z_next = J(gamma, y - gamma * C(y))
    elif variant == "relaxed_inertial":
        y = z + co["alpha_k"] * (z - z_prev)
        mu = co["mu_k"]
        z_next = (1.0 - co["rho_k"]) * y + co["rho_k"] * J(mu, y - mu * C(y))
    elif variant == "crifba":
        y = z + co["alpha_k"] * (z - z_prev) + co["delta_k"] * (state.y_prev - z)
        z_next = (1.0 - method.rho) * y + method.rho * J(gamma, y - gamma * C(y))
        y_prev_new = y
    elif variant == "appm":
        y = z + co["alpha_k"] * (z - z_prev) + co["alpha_k"] * (state.y_prev2 - z_prev)
        z_next = J(gamma, y)
        y_prev2_new = state.y_prev
        y_prev_new = y
    elif variant == "fast_km":
        fb_curr = J(gamma, z - gamma * C(z))
        z_next = (
            co["fix_weight"] * z
            + co["momentum"] * (z - z_prev)
            + co["fb_new"] * fb_curr
            + co["fb_old"] * state.fb_prev
        )
        fb_prev_new = fb_curr
    else:
        raise ConfigurationError(f"unknown baseline variant {variant!r}")

    if not np.all(np.isfinite(z_next)):
        raise DivergenceError(f"non-finite iterate at k={k}", state=state)
    return BaselineState(
        k=k + 1, z_prev=z, z=z_next,
        y_prev=y_prev_new, y_prev2=y_prev2_new, fb_prev=fb_prev_new,
    )
