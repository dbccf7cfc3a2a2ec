"""P1 finite elements on a uniform mesh of (0,1).

Mass/stiffness assembly in closed form, L2 projection, the discrete Laplacian
through the generalized eigenproblem of the stiffness-mass pencil, the
discrete rotation group, and the exact Gaussian law of the semidiscrete
solution driven by truncated spectral noise.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .spectral import GaussianLaw, QuadratureError, SpectralCoeffs, eigenvalues

__all__ = [
    "Mesh1D", "FemMatrices", "DiscreteEigenSystem", "FemField",
    "assemble", "l2_project", "sine_hat_overlap", "sine_hat_matrix",
    "discrete_eigensystem", "closed_form_discrete_eigenvalues",
    "apply_discrete_group", "discrete_convolution_law", "intcos", "intsin",
]

# |freq * length| below this switches the time integrals to series form
_RESONANCE_THRESHOLD = 1e-4


@dataclass(frozen=True, eq=False)
class Mesh1D:
    """Uniform mesh of (0,1) with N interior nodes, width h = 1/(N+1)."""
    n_interior: int
    h: float = field(init=False)
    nodes: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.n_interior < 1:
            raise ValueError("mesh needs at least one interior node")
        h = 1.0 / (self.n_interior + 1)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "nodes", h * np.arange(1, self.n_interior + 1))


@dataclass(frozen=True, eq=False)
class FemMatrices:
    """Mass and stiffness matrices of the interior hat basis (dense symmetric tridiagonal)."""
    mesh: Mesh1D
    mass: np.ndarray
    stiffness: np.ndarray


def assemble(n_interior: int) -> FemMatrices:
    """Closed-form uniform-mesh matrices.

    Mass: 2h/3 on the diagonal, h/6 off. Stiffness: 2/h diagonal, -1/h off.
    """
    mesh = Mesh1D(n_interior)
    n, h = mesh.n_interior, mesh.h
    mass = np.diag(np.full(n, 2.0 * h / 3.0))
    stiffness = np.diag(np.full(n, 2.0 / h))
    if n > 1:
        off = np.full(n - 1, h / 6.0)
        mass += np.diag(off, 1) + np.diag(off, -1)
        offs = np.full(n - 1, -1.0 / h)
        stiffness += np.diag(offs, 1) + np.diag(offs, -1)
    return FemMatrices(mesh, mass, stiffness)


def _hat_loads(f, mesh: Mesh1D, order: int) -> np.ndarray:
    """Load vector b_k = int f * hat_k dx by per-element Gauss quadrature."""
    n, h = mesh.n_interior, mesh.h
    x, w = np.polynomial.legendre.leggauss(order)
    # element e spans [e*h, (e+1)*h], e = 0..n
    left = h * np.arange(n + 1)
    pts = left[:, None] + 0.5 * h * (x[None, :] + 1.0)
    vals = np.asarray(f(pts), dtype=float) * (0.5 * h * w)[None, :]
    ramp_up = 0.5 * (x + 1.0)          # hat rising over the element
    ramp_down = 1.0 - ramp_up
    b = np.zeros(n)
    # hat_k rises on element k-1 and falls on element k (1-based interior index)
    b += vals[:-1] @ ramp_up
    b += vals[1:] @ ramp_down
    return b


def l2_project(f, mesh: Mesh1D, tol: float = 1e-10) -> np.ndarray:
    """Nodal values of the L2 projection of f onto the hat-function space.

    Solves (mass) c = b with b the hat load vector; the quadrature order is
    doubled once as a convergence check.
    """
    n, h = mesh.n_interior, mesh.h
    # banded SPD solve of the tridiagonal mass matrix
    ab = np.zeros((2, n))
    ab[0, 1:] = h / 6.0
    ab[1, :] = 2.0 * h / 3.0

    def solve(order):
        return scipy.linalg.solveh_banded(ab, _hat_loads(f, mesh, order))

    coarse = solve(8)
    fine = solve(16)
    achieved = float(np.abs(fine - coarse).max())
    if achieved > tol:
        raise QuadratureError(
            f"hat-load quadrature reached {achieved:.3e} > tol {tol:.3e}")
    return fine


def sine_hat_overlap(j: int, k: int, mesh: Mesh1D) -> float:
    """Exact integral of sqrt(2) sin(j pi x) against the k-th interior hat.

    Closed form: sqrt(2) (2 sin(j pi x_k) - sin(j pi x_{k-1}) - sin(j pi x_{k+1}))
    / (h (j pi)^2).
    """
    n, h = mesh.n_interior, mesh.h
    if not 1 <= k <= n:
        raise IndexError(f"hat index k={k} outside 1..{n}")
    w = j * np.pi
    return float(np.sqrt(2.0) * (2.0 * np.sin(w * k * h)
                                 - np.sin(w * (k - 1) * h)
                                 - np.sin(w * (k + 1) * h)) / (h * w * w))


def sine_hat_matrix(mesh: Mesh1D, n_modes: int) -> np.ndarray:
    """All overlaps at once; entry (k-1, j-1) equals sine_hat_overlap(j, k)."""
    n, h = mesh.n_interior, mesh.h
    j = np.arange(1, n_modes + 1)
    k = np.arange(0, n + 2)
    s = np.sin(np.outer(k, j) * np.pi * h)      # (n+2) x J
    w2 = (j * np.pi) ** 2
    return np.sqrt(2.0) * (2.0 * s[1:-1] - s[:-2] - s[2:]) / (h * w2)[None, :]


def closed_form_discrete_eigenvalues(mesh: Mesh1D) -> np.ndarray:
    """Uniform-mesh pencil eigenvalues 6 (1 - cos(j pi h)) / (h^2 (2 + cos(j pi h)))."""
    th = np.arange(1, mesh.n_interior + 1) * np.pi * mesh.h
    return 6.0 * (1.0 - np.cos(th)) / (mesh.h ** 2 * (2.0 + np.cos(th)))


@dataclass(eq=False)
class DiscreteEigenSystem:
    """Eigenpairs of the stiffness-mass pencil; columns of vectors are mass-orthonormal."""
    mesh: Mesh1D
    lambdas: np.ndarray
    vectors: np.ndarray
    mass: np.ndarray
    _gram_cache: dict = field(default_factory=dict, repr=False)

    @property
    def n_modes(self) -> int:
        return self.lambdas.size

    def analyze(self, nodal: np.ndarray) -> np.ndarray:
        """Discrete-eigenbasis coefficients of a nodal vector: V' M u."""
        return self.vectors.T @ (self.mass @ nodal)

    def synthesize(self, coeffs: np.ndarray) -> np.ndarray:
        """Nodal values from discrete-eigenbasis coefficients."""
        return self.vectors @ coeffs

    def cross_gram(self, n_modes: int) -> np.ndarray:
        """Inner products of discrete eigenvectors with the sine basis.

        g[i, j] = <discrete mode i, sqrt(2) sin((j+1) pi x)>; cached per
        truncation level. This matrix carries every mixed continuous/discrete
        quantity in the error formulas.
        """
        if n_modes not in self._gram_cache:
            self._gram_cache[n_modes] = self.vectors.T @ sine_hat_matrix(
                self.mesh, n_modes)
        return self._gram_cache[n_modes]


def discrete_eigensystem(fem: FemMatrices) -> DiscreteEigenSystem:
    """Generalized symmetric eigen-solve of the stiffness-mass pencil.

    Eigenvectors are mass-orthonormalized by the solver and sign-fixed so the
    first nodal entry is positive (deterministic output).
    """
    try:
        w, v = scipy.linalg.eigh(fem.stiffness, fem.mass)
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover
        raise RuntimeError(f"generalized eigen-solve failed: {exc}") from exc
    flip = np.where(v[0] < 0.0, -1.0, 1.0)
    v = v * flip[None, :]
    eig = DiscreteEigenSystem(fem.mesh, w, v, fem.mass)
    resid = np.abs(v.T @ fem.mass @ v - np.eye(w.size)).max()
    if resid > 1e-10:
        raise RuntimeError(f"eigenvectors not mass-orthonormal: residual {resid:.3e}")
    return eig


@dataclass(frozen=True, eq=False)
class FemField:
    """Nodal values of the two components of a semidiscrete state."""
    u1: np.ndarray
    u2: np.ndarray

    def __post_init__(self):
        u1 = np.asarray(self.u1, dtype=float)
        u2 = np.asarray(self.u2, dtype=float)
        if u1.shape != u2.shape or u1.ndim != 1:
            raise ValueError("components must be 1-d arrays of equal length")
        if not (np.all(np.isfinite(u1)) and np.all(np.isfinite(u2))):
            raise ValueError("nodal values must be finite")
        object.__setattr__(self, "u1", u1)
        object.__setattr__(self, "u2", u2)


def apply_discrete_group(t: float, state: FemField,
                         eig: DiscreteEigenSystem) -> FemField:
    """Advance a semidiscrete state by time t: rotate each discrete mode pair."""
    c1, c2 = eig.analyze(state.u1), eig.analyze(state.u2)
    c, s = np.cos(t * eig.lambdas), np.sin(t * eig.lambdas)
    return FemField(eig.synthesize(c * c1 - s * c2),
                    eig.synthesize(s * c1 + c * c2))


def intcos(freq, length: float):
    """int_0^length cos(freq s) ds = sin(freq length)/freq, series near freq = 0."""
    freq = np.asarray(freq, dtype=float)
    u = freq * length
    small = np.abs(u) < _RESONANCE_THRESHOLD
    safe = np.where(small, 1.0, freq)
    out = np.sin(u) / safe
    u2 = u * u
    series = length * (1.0 - u2 / 6.0 + u2 * u2 / 120.0)
    return np.where(small, series, out)


def intsin(freq, length: float):
    """int_0^length sin(freq s) ds = (1 - cos(freq length))/freq, series near freq = 0.

    The direct branch uses 2 sin^2(u/2)/freq, which avoids cancellation.
    """
    freq = np.asarray(freq, dtype=float)
    u = freq * length
    small = np.abs(u) < _RESONANCE_THRESHOLD
    safe = np.where(small, 1.0, freq)
    half = np.sin(0.5 * u)
    out = 2.0 * half * half / safe
    u2 = u * u
    series = freq * length * length / 2.0 * (1.0 - u2 / 12.0 + u2 * u2 / 360.0)
    return np.where(small, series, out)


def discrete_convolution_law(T: float, spec, mesh: Mesh1D,
                             eig: DiscreteEigenSystem,
                             X0: SpectralCoeffs) -> GaussianLaw:
    """Exact Gaussian law of the semidiscrete solution at time T.

    Coordinates are discrete-eigenbasis coefficients (component 1 block, then
    component 2). The initial state is projected componentwise; the covariance
    is the closed-form time integral of the rotated, projected noise
    covariance, assembled from products of cosine/sine integrals with the
    resonance-safe primitives intcos/intsin.
    """
    if T < 0:
        raise ValueError("T must be nonnegative")
    if mesh.n_interior != eig.mesh.n_interior:
        raise ValueError("mesh does not match the eigensystem")
    J = X0.n_modes
    if spec.J != J:
        raise ValueError(
            f"noise truncation J={spec.J} does not match state truncation J={J}")
    n = eig.n_modes
    g = eig.cross_gram(J)                      # n x J
    lam_h = eig.lambdas

    # mean: rotate the projected initial coefficients
    c1, c2 = g @ X0.a, g @ X0.b
    c, s = np.cos(T * lam_h), np.sin(T * lam_h)
    mean = np.concatenate([c * c1 - s * c2, s * c1 + c * c2])

    # noise covariance seen in the discrete eigenbasis, per component
    g1 = (g * spec.q1[None, :]) @ g.T
    g2 = (g * spec.q2[None, :]) @ g.T

    a = lam_h[:, None]
    b = lam_h[None, :]
    icc = 0.5 * (intcos(a - b, T) + intcos(a + b, T))   # int cos(a s) cos(b s)
    iss = 0.5 * (intcos(a - b, T) - intcos(a + b, T))   # int sin(a s) sin(b s)
    isc = 0.5 * (intsin(a + b, T) + intsin(a - b, T))   # int sin(a s) cos(b s)
    ics = isc.T                                         # int cos(a s) sin(b s)

    c11 = g1 * icc + g2 * iss
    c22 = g1 * iss + g2 * icc
    c12 = g1 * ics - g2 * isc
    cov = np.block([[c11, c12], [c12.T, c22]])
    # symmetrize away roundoff before the law validates PSD
    cov = 0.5 * (cov + cov.T)
    return GaussianLaw("discrete-eigen", mean, cov)
