"""Exact solution machinery on the unit interval.

Dirichlet Laplacian eigenpairs lambda_j = (j*pi)^2, phi_j = sqrt(2) sin(j*pi*x),
fractional-power norms, the unitary time-rotation group of the two-component
system, and the exact Gaussian law of the solution at a given time.

Flat vectors associated with two-component states are ordered
[component-1 coefficients, component-2 coefficients].
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "EigenSystem1D", "SpectralCoeffs", "GaussianLaw", "QuadratureError",
    "eigenvalues", "hdot_norm", "pair_norm", "apply_group",
    "project_function", "register_closed_form", "parabola",
    "stochastic_convolution_law", "gaussian_functional",
]


class QuadratureError(RuntimeError):
    """Quadrature failed to reach the requested tolerance."""


def eigenvalues(n_modes: int) -> np.ndarray:
    """Dirichlet Laplacian eigenvalues (j*pi)^2 on (0,1), j = 1..n_modes."""
    j = np.arange(1, n_modes + 1)
    return (j * np.pi) ** 2


def _gauss_nodes(panels: int, order: int = 10):
    """Composite Gauss-Legendre nodes/weights on [0,1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    width = 1.0 / panels
    left = np.arange(panels) * width
    nodes = (left[:, None] + 0.5 * width * (x[None, :] + 1.0)).ravel()
    weights = np.tile(0.5 * width * w, panels)
    return nodes, weights


@dataclass(frozen=True, eq=False)
class EigenSystem1D:
    """Truncated Dirichlet eigenbasis on (0,1).

    Orthonormality of the retained basis functions is spot-checked by
    quadrature at construction (modes up to min(J, 20)).
    """
    J: int
    lambdas: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.J < 1:
            raise ValueError("J must be >= 1")
        object.__setattr__(self, "lambdas", eigenvalues(self.J))
        m = min(self.J, 20)
        x, w = _gauss_nodes(panels=4 * m, order=10)
        p = self.basis(np.arange(1, m + 1)[:, None], x[None, :])  # m x nodes
        gram = (p * w[None, :]) @ p.T
        if np.abs(gram - np.eye(m)).max() > 1e-10:
            raise AssertionError("eigenbasis failed the orthonormality check")

    @staticmethod
    def basis(j, x):
        """Evaluate phi_j(x) = sqrt(2) sin(j*pi*x)."""
        return np.sqrt(2.0) * np.sin(np.asarray(j) * np.pi * np.asarray(x))


@dataclass(frozen=True, eq=False)
class SpectralCoeffs:
    """Eigenbasis coefficients of a two-component state (a = real part, b = imaginary part)."""
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        if a.shape != b.shape or a.ndim != 1:
            raise ValueError("a and b must be 1-d arrays of equal length")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def n_modes(self) -> int:
        return self.a.size

    def flat(self) -> np.ndarray:
        return np.concatenate([self.a, self.b])


@dataclass(frozen=True, eq=False)
class GaussianLaw:
    """Mean vector and covariance matrix of a state in a stated basis.

    basis is 'continuous-spectral' (length 2J, sine-coefficient ordering) or
    'discrete-eigen' (length 2N, mass-orthonormal discrete eigenbasis).
    """
    basis: str
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        if self.basis not in ("continuous-spectral", "discrete-eigen"):
            raise ValueError(f"unknown basis tag {self.basis!r}")
        if cov.shape != (mean.size, mean.size):
            raise ValueError("covariance shape does not match mean length")
        scale = max(1.0, np.abs(cov).max()) if cov.size else 1.0
        if np.abs(cov - cov.T).max() > 1e-12 * scale:
            raise ValueError("covariance must be symmetric to 1e-12")
        tr = float(np.trace(cov))
        w = np.linalg.eigvalsh(cov)
        if w.size and w[0] < -1e-12 * max(tr, 1e-300):
            raise ValueError(
                f"covariance not positive semidefinite: min eigenvalue {w[0]:.3e}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return self.mean.size


def hdot_norm(coeffs, gamma: float) -> float:
    """Fractional-power norm (sum_j lambda_j^gamma c_j^2)^(1/2) of one component.

    gamma = 0 reduces to the Euclidean norm of the coefficient vector.
    """
    c = np.asarray(coeffs, dtype=float)
    if gamma == 0.0:
        return float(np.linalg.norm(c))
    lam = eigenvalues(c.size)
    return float(np.sqrt(np.sum(lam ** gamma * c * c)))


def pair_norm(state: SpectralCoeffs, gamma: float = 0.0) -> float:
    """Two-component norm: sqrt of the sum of squared component norms."""
    return float(np.hypot(hdot_norm(state.a, gamma), hdot_norm(state.b, gamma)))


def apply_group(t: float, state: SpectralCoeffs) -> SpectralCoeffs:
    """Advance a state by time t under the unitary rotation group.

    Mode j rotates by angle t*lambda_j:
    (a_j, b_j) -> (cos(t L) a - sin(t L) b, sin(t L) a + cos(t L) b).
    Defined for all real t (a group, not just a semigroup).
    """
    lam = eigenvalues(state.n_modes)
    c, s = np.cos(t * lam), np.sin(t * lam)
    return SpectralCoeffs(c * state.a - s * state.b, s * state.a + c * state.b)


# Registry of closed-form sine-coefficient generators, keyed by the function
# object itself. Quadrature is the fallback for everything unregistered.
_CLOSED_FORMS: dict = {}


def register_closed_form(f, coeff_fn):
    """Register coeff_fn(J) -> array as the exact sine coefficients of f."""
    _CLOSED_FORMS[f] = coeff_fn


def parabola(x):
    """Default initial datum x*(1-x); lies in every fractional space below 5/2."""
    return x * (1.0 - x)


def _parabola_coeffs(n_modes: int) -> np.ndarray:
    # odd modes only: 4*sqrt(2)/(j*pi)^3
    j = np.arange(1, n_modes + 1)
    c = np.where(j % 2 == 1, 4.0 * np.sqrt(2.0) / (j * np.pi) ** 3, 0.0)
    return c


register_closed_form(parabola, _parabola_coeffs)


def project_function(f, n_modes: int, tol: float = 1e-10) -> np.ndarray:
    """Sine coefficients c_j = integral of f * sqrt(2) sin(j pi x) over (0,1).

    Uses a registered closed form when available, otherwise composite
    Gauss-Legendre quadrature with one refinement step as the convergence
    check. Raises QuadratureError with the achieved tolerance on failure.
    """
    if f in _CLOSED_FORMS:
        return _CLOSED_FORMS[f](n_modes)

    def integrate(panels):
        x, w = _gauss_nodes(panels, order=10)
        fx = np.asarray(f(x), dtype=float) * w
        j = np.arange(1, n_modes + 1)
        return np.sqrt(2.0) * np.sin(np.outer(j, x) * np.pi) @ fx

    panels = max(64, 2 * n_modes)
    coarse = integrate(panels)
    fine = integrate(2 * panels)
    achieved = float(np.abs(fine - coarse).max())
    if achieved > tol:
        raise QuadratureError(
            f"sine-coefficient quadrature reached {achieved:.3e} > tol {tol:.3e}")
    return fine


def stochastic_convolution_law(T: float, spec, X0: SpectralCoeffs) -> GaussianLaw:
    """Exact Gaussian law of the solution at time T in the truncated sine basis.

    Mean is the rotated initial state. The covariance is block-diagonal over
    modes; each 2x2 block is the time integral of the rotated per-mode noise
    covariance, evaluated in closed form:

        int_0^T cos^2(L s) ds = T/2 + sin(2 L T)/(4 L)
        int_0^T sin^2(L s) ds = T/2 - sin(2 L T)/(4 L)
        int_0^T sin(L s) cos(L s) ds = (1 - cos(2 L T))/(4 L)
    """
    if T < 0:
        raise ValueError("T must be nonnegative")
    J = X0.n_modes
    if spec.J != J:
        raise ValueError(
            f"noise truncation J={spec.J} does not match state truncation J={J}")
    lam = eigenvalues(J)
    q1, q2 = spec.q1, spec.q2

    s2 = np.sin(2.0 * lam * T) / (4.0 * lam)
    c2 = (1.0 - np.cos(2.0 * lam * T)) / (4.0 * lam)
    icc = T / 2.0 + s2   # int cos^2
    iss = T / 2.0 - s2   # int sin^2
    c11 = q1 * icc + q2 * iss
    c22 = q1 * iss + q2 * icc
    c12 = (q1 - q2) * c2

    cov = np.zeros((2 * J, 2 * J))
    idx = np.arange(J)
    cov[idx, idx] = c11
    cov[J + idx, J + idx] = c22
    cov[idx, J + idx] = c12
    cov[J + idx, idx] = c12

    mean = apply_group(T, X0).flat()
    return GaussianLaw("continuous-spectral", mean, cov)


def gaussian_functional(law: GaussianLaw, v=None, kind: str = "cos-pairing") -> float:
    """Exact expectation of a test functional under a Gaussian law.

    cos-pairing:   E cos(<X, v>) = cos(<m, v>) exp(-v' C v / 2)
    linear-pairing: E <X, v> = <m, v>
    squared-norm:  E ||X||^2 = ||m||^2 + trace(C)   (v ignored)
    """
    if kind == "squared-norm":
        return float(law.mean @ law.mean + np.trace(law.cov))
    v = np.asarray(v, dtype=float)
    if v.shape != law.mean.shape:
        raise ValueError(
            f"direction length {v.size} does not match law dimension {law.dim}")
    if kind == "linear-pairing":
        return float(law.mean @ v)
    if kind == "cos-pairing":
        return float(np.cos(law.mean @ v) * np.exp(-0.5 * (v @ law.cov @ v)))
    raise ValueError(f"unknown functional kind {kind!r}")
