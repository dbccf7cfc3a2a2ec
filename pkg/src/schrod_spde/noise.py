"""Spectral noise covariances and seeded Wiener increment sampling.

The covariance of each noise component is diagonal in the sine basis with
eigenvalues q_j = scale * lambda_j^(-rho). Increments are drawn per path from
a splittable seeded generator so the same draws can drive the exact and every
mesh resolution (common random numbers).
"""

from dataclasses import dataclass, field

import numpy as np

from .spectral import eigenvalues

__all__ = ["CovarianceSpec", "WienerSample", "DivergenceError",
           "hs_check", "sample_increments"]


class DivergenceError(ValueError):
    """A spectral sum that must be finite diverges."""


@dataclass(frozen=True, eq=False)
class CovarianceSpec:
    """Noise covariance eigenvalues q_{m,j} = scale_m * lambda_j^(-rho).

    theta is the regularity parameter the experiment targets; the constructor
    keeps the decay margin rho >= theta + 0.3. Zero scales give the noiseless
    degenerate case used by deterministic experiments.
    """
    J: int
    theta: float
    rho: float
    scale1: float = 1.0
    scale2: float = 1.0
    q1: np.ndarray = field(init=False, repr=False)
    q2: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.J < 1:
            raise ValueError("J must be >= 1")
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError(f"theta={self.theta} outside [0, 1]")
        if self.rho < self.theta + 0.3:
            raise ValueError(
                f"rho={self.rho} violates the decay margin rho >= theta + 0.3")
        if self.scale1 < 0 or self.scale2 < 0:
            raise ValueError("scales must be nonnegative")
        decay = eigenvalues(self.J) ** (-self.rho)
        object.__setattr__(self, "q1", self.scale1 * decay)
        object.__setattr__(self, "q2", self.scale2 * decay)


def hs_check(spec: CovarianceSpec, theta: float):
    """Weighted trace sum_j lambda_j^theta (q_{1,j} + q_{2,j}) and its tail.

    Returns (retained, tail_bound): the retained sum over j <= J, and an
    integral-comparison bound on the discarded tail. The full series
    converges iff 2(rho - theta) > 1; a divergent request raises.
    """
    scale = spec.scale1 + spec.scale2
    if scale == 0.0:
        return 0.0, 0.0
    expo = 2.0 * (theta - spec.rho)        # summand decays like j^expo
    if expo >= -1.0:
        raise DivergenceError(
            "sum_j lambda_j^theta q_j diverges: needs rho > theta + 1/2 "
            f"(got rho - theta = {spec.rho - theta:.3f})")
    lam = eigenvalues(spec.J)
    retained = float(scale * np.sum(lam ** (theta - spec.rho)))
    tail = float(scale * np.pi ** expo * spec.J ** (expo + 1.0) / (-expo - 1.0))
    return retained, tail


@dataclass(frozen=True, eq=False)
class WienerSample:
    """Standard normal draws xi[k, m, j] for one driving path.

    The increment of component m over step k is
    sum_j sqrt(q_{m,j} * dt) * xi[k, m, j] * phi_j; the same object drives
    both the exact dynamics and every mesh resolution.
    """
    seed: tuple
    steps: int
    dt: float
    draws: np.ndarray


def sample_increments(seed, steps: int, spec: CovarianceSpec,
                      T: float = 1.0) -> WienerSample:
    """Draw the steps x 2 x J standard normals of one path, reproducibly.

    seed may be an int or a tuple of ints; identical seeds give bitwise
    identical draws, and distinct tuples give independent streams.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    key = _seed_key(seed)
    rng = np.random.default_rng(np.random.SeedSequence(key))
    draws = rng.standard_normal((steps, 2, spec.J))
    return WienerSample(key, steps, T / steps, draws)


def _seed_key(seed) -> tuple:
    parts = seed if isinstance(seed, (tuple, list)) else (seed,)
    key = tuple(int(p) for p in parts)
    if any(p < 0 for p in key):
        raise ValueError("seed entries must be nonnegative integers")
    return key
