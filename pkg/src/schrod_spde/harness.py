"""Strong/weak error computation, coupled Monte Carlo, and rate fitting.

Exact errors come from the Gaussian laws of the two solutions and closed-form
time integrals; the Monte Carlo path drives both resolutions with the same
Wiener draws (common random numbers) and serves as an independent
cross-check of the exact formulas.
"""

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .fem import DiscreteEigenSystem, Mesh1D, discrete_convolution_law, intcos
from .noise import CovarianceSpec, _seed_key
from .spectral import (SpectralCoeffs, apply_group, eigenvalues,
                       gaussian_functional, stochastic_convolution_law)

__all__ = [
    "TestFunctional", "cos_pairing", "linear_pairing", "gauss_bump",
    "default_direction", "UnsupportedFunctionalError", "ErrorRecord",
    "RateFit", "McResult", "deterministic_error", "exact_strong_error",
    "exact_weak_error", "mc_estimate", "fd_check_functional", "fit_rate",
]


class UnsupportedFunctionalError(ValueError):
    """Functional kind has no closed-form Gaussian expectation."""


@dataclass(frozen=True, eq=False)
class TestFunctional:
    """Twice-differentiable test functional with bounded derivatives.

    Pairing kinds act through <x, v> with v = (v1, v2) given in the sine
    basis; the bump acts through the squared norm. grad_bound / hess_bound
    are explicit sup-norm bounds on the first/second derivative.
    """
    kind: str
    v1: Optional[np.ndarray] = None
    v2: Optional[np.ndarray] = None
    width: Optional[float] = None

    def direction(self) -> np.ndarray:
        return np.concatenate([self.v1, self.v2])

    @property
    def grad_bound(self) -> float:
        if self.kind == "gauss-bump":
            return float(np.exp(-0.5) / self.width)
        return float(np.linalg.norm(self.direction()))

    @property
    def hess_bound(self) -> float:
        if self.kind == "gauss-bump":
            return 1.0 / self.width ** 2
        if self.kind == "linear-pairing":
            return 0.0
        return float(np.linalg.norm(self.direction()) ** 2)

    # -- evaluation on flat coefficient vectors ---------------------------

    def value_of_pairing(self, p):
        """Value as a function of the scalar pairing (pairing kinds only)."""
        if self.kind == "cos-pairing":
            return np.cos(p)
        if self.kind == "linear-pairing":
            return p
        raise UnsupportedFunctionalError("bump has no pairing form")

    def value(self, x: np.ndarray) -> float:
        if self.kind == "gauss-bump":
            return float(np.exp(-0.5 * (x @ x) / self.width ** 2))
        return float(self.value_of_pairing(x @ self.direction()))

    def gradient(self, x: np.ndarray) -> np.ndarray:
        if self.kind == "linear-pairing":
            return self.direction()
        if self.kind == "cos-pairing":
            v = self.direction()
            return -np.sin(x @ v) * v
        w2 = self.width ** 2
        return -self.value(x) / w2 * x

    def hessian_action(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        if self.kind == "linear-pairing":
            return np.zeros_like(y)
        if self.kind == "cos-pairing":
            v = self.direction()
            return -np.cos(x @ v) * (v @ y) * v
        w2 = self.width ** 2
        return self.value(x) * ((x @ y) * x / w2 - y) / w2


def cos_pairing(v1, v2) -> TestFunctional:
    return TestFunctional("cos-pairing", np.asarray(v1, float), np.asarray(v2, float))


def linear_pairing(v1, v2) -> TestFunctional:
    return TestFunctional("linear-pairing", np.asarray(v1, float), np.asarray(v2, float))


def gauss_bump(width: float) -> TestFunctional:
    if width <= 0:
        raise ValueError("width must be positive")
    return TestFunctional("gauss-bump", width=width)


def default_direction(n_modes: int):
    """Unit-norm direction on the first 8 sine modes of both components.

    A low-pass direction stays well resolved on every mesh in the sweeps, so
    the observed rates reflect the noise regularity rather than the
    resolution of the direction itself.
    """
    if n_modes < 8:
        raise ValueError("need at least 8 modes for the default direction")
    v1 = np.zeros(n_modes)
    v1[:8] = 0.25
    return v1, v1.copy()


@dataclass(frozen=True)
class ErrorRecord:
    """One sweep row; None marks a quantity the mode did not compute."""
    h: float
    n_interior: int
    n_modes: int
    theta: float
    T: float
    strong_exact: Optional[float] = None
    strong_mc: Optional[float] = None
    strong_stderr: Optional[float] = None
    weak_exact: Optional[float] = None
    weak_mc: Optional[float] = None
    weak_stderr: Optional[float] = None
    det_error: Optional[float] = None
    seconds: Optional[float] = None


@dataclass(frozen=True)
class RateFit:
    """Least-squares slope of log(error) against log(h)."""
    slope: float
    intercept: float
    r_squared: float
    points_used: tuple


@dataclass(frozen=True)
class McResult:
    strong: Optional[float]
    strong_stderr: Optional[float]
    weak: Optional[float]
    weak_stderr: Optional[float]
    samples: int
    steps: int


def _rotated_coefficients(t, a, b, lam):
    c, s = np.cos(t * lam), np.sin(t * lam)
    return c * a - s * b, s * a + c * b


def deterministic_error(t: float, X0: SpectralCoeffs, mesh: Mesh1D,
                        eig: DiscreteEigenSystem) -> float:
    """Norm of the homogeneous-evolution defect on the initial state.

    Advances X0 exactly in the sine basis and, after componentwise
    projection, in the discrete eigenbasis; the squared norm of the
    difference comes from the mixed Gram identity
    ||f_h - f||^2 = ||f||^2 - 2 <f_h, f> + ||f_h||^2.
    """
    J = X0.n_modes
    lam = eigenvalues(J)
    g = eig.cross_gram(J)
    d1, d2 = _rotated_coefficients(t, X0.a, X0.b, lam)
    c1, c2 = _rotated_coefficients(t, g @ X0.a, g @ X0.b, eig.lambdas)
    err2 = (d1 @ d1 + d2 @ d2) + (c1 @ c1 + c2 @ c2) \
        - 2.0 * (c1 @ (g @ d1) + c2 @ (g @ d2))
    return float(np.sqrt(max(err2, 0.0)))


def exact_strong_error(T: float, spec: CovarianceSpec, mesh: Mesh1D,
                       eig: DiscreteEigenSystem, X0: SpectralCoeffs) -> float:
    """Root mean square norm of the coupled solution difference at time T.

    The deterministic defect and the noise part add in quadrature; by the
    Ito isometry the noise part is the time integral, over each retained
    noise mode, of the squared evolution defect applied to that mode:

        int_0^T ||defect(s) e_{m,j}||^2 ds
            = T (1 + ||P phi_j||^2) - 2 sum_i g_ij^2 intcos(mu_i - lam_j, T)

    with mu the discrete and lam the continuous eigenvalues.
    """
    J = X0.n_modes
    if spec.J != J:
        raise ValueError("noise and state truncations differ")
    det = deterministic_error(T, X0, mesh, eig)
    g = eig.cross_gram(J)
    g2 = g * g
    gamma2 = g2.sum(axis=0)                       # squared projection norms
    cross = np.einsum("ij,ij->j", g2, intcos(
        eig.lambdas[:, None] - eigenvalues(J)[None, :], T))
    mode_integrals = T * (1.0 + gamma2) - 2.0 * cross
    noise_part = float(((spec.q1 + spec.q2) * mode_integrals).sum())
    return float(np.sqrt(max(det * det + noise_part, 0.0)))


def exact_weak_error(T: float, spec: CovarianceSpec, mesh: Mesh1D,
                     eig: DiscreteEigenSystem, X0: SpectralCoeffs,
                     phi: TestFunctional) -> float:
    """Difference of exact functional expectations, discrete minus continuous.

    Supported for the pairing kinds, whose Gaussian expectations are in
    closed form; the direction is mapped to the discrete eigenbasis through
    the cross Gram matrix. Exact up to the shared basis truncation.
    """
    if phi.kind not in ("cos-pairing", "linear-pairing"):
        raise UnsupportedFunctionalError(
            f"{phi.kind} has no closed-form expectation; use mc_estimate")
    J = X0.n_modes
    if phi.v1.size != J:
        raise ValueError(
            f"direction has {phi.v1.size} modes, state has {J}")
    g = eig.cross_gram(J)
    law_c = stochastic_convolution_law(T, spec, X0)
    law_d = discrete_convolution_law(T, spec, mesh, eig, X0)
    v_flat = phi.direction()
    vh_flat = np.concatenate([g @ phi.v1, g @ phi.v2])
    return gaussian_functional(law_d, vh_flat, phi.kind) \
        - gaussian_functional(law_c, v_flat, phi.kind)


def _mc_tables(T, spec, eig, X0, steps):
    """Rotation tables and means shared by every Monte Carlo sample."""
    J = X0.n_modes
    lam = eigenvalues(J)
    lam_h = eig.lambdas
    g = eig.cross_gram(J)
    dt = T / steps
    srot = T - dt * np.arange(steps)              # left-point rotation times
    cos_c, sin_c = np.cos(np.outer(srot, lam)), np.sin(np.outer(srot, lam))
    cos_d, sin_d = np.cos(np.outer(srot, lam_h)), np.sin(np.outer(srot, lam_h))
    sq = np.stack([np.sqrt(spec.q1 * dt), np.sqrt(spec.q2 * dt)])
    m1, m2 = _rotated_coefficients(T, X0.a, X0.b, lam)
    mh1, mh2 = _rotated_coefficients(T, g @ X0.a, g @ X0.b, lam_h)
    return J, g, sq, cos_c, sin_c, cos_d, sin_d, m1, m2, mh1, mh2


def mc_estimate(T: float, spec: CovarianceSpec, mesh: Mesh1D,
                eig: DiscreteEigenSystem, X0: SpectralCoeffs,
                phi: TestFunctional, samples: int, steps: int, seed,
                batch: int = 64, compute_strong: bool = True,
                compute_weak: bool = True, return_samples: bool = False):
    """Coupled Monte Carlo estimate of the strong and weak errors.

    The convolution is discretized by the left-point rule on `steps`
    subintervals; both resolutions consume the same per-sample draws, keyed
    by (seed, sample-index) so the continuous trajectory is independent of
    the mesh. Pairing functionals are evaluated through precomputed weight
    tensors, which avoids reconstructing full paths when only the weak error
    is requested.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if samples < 2:
        raise ValueError("samples must be >= 2")
    if spec.J != X0.n_modes:
        raise ValueError("noise and state truncations differ")
    if mesh.n_interior != eig.mesh.n_interior:
        raise ValueError("mesh does not match the eigensystem")
    J, g, sq, cos_c, sin_c, cos_d, sin_d, m1, m2, mh1, mh2 = \
        _mc_tables(T, spec, eig, X0, steps)
    n = eig.n_modes
    need_paths = compute_strong or (compute_weak and phi.kind == "gauss-bump")
    pairing = compute_weak and phi.kind != "gauss-bump"

    if pairing:
        vh1, vh2 = g @ phi.v1, g @ phi.v2
        pair_c0 = m1 @ phi.v1 + m2 @ phi.v2
        pair_d0 = mh1 @ vh1 + mh2 @ vh2
        w_cont = np.empty((steps, 2, J))
        w_cont[:, 0] = (cos_c * phi.v1 + sin_c * phi.v2) * sq[0]
        w_cont[:, 1] = (cos_c * phi.v2 - sin_c * phi.v1) * sq[1]
        w_disc = np.empty((steps, 2, J))
        w_disc[:, 0] = ((cos_d * vh1 + sin_d * vh2) @ g) * sq[0]
        w_disc[:, 1] = ((cos_d * vh2 - sin_d * vh1) @ g) * sq[1]
        weights = np.column_stack([w_cont.reshape(-1), w_disc.reshape(-1)])

    base = _seed_key(seed)
    strong_sq = np.empty(samples) if compute_strong else None
    weak_diff = np.empty(samples) if compute_weak else None
    phi_cont = np.empty(samples) if compute_weak else None
    phi_disc = np.empty(samples) if compute_weak else None

    xi = np.empty((min(batch, samples), steps, 2, J))
    done = 0
    while done < samples:
        nb = min(batch, samples - done)
        for i in range(nb):
            rng = np.random.default_rng(
                np.random.SeedSequence(base + (done + i,)))
            rng.standard_normal(out=xi[i])
        block = xi[:nb]

        if pairing:
            dots = block.reshape(nb, -1) @ weights
            pc = pair_c0 + dots[:, 0]
            pd = pair_d0 + dots[:, 1]
            phi_cont[done:done + nb] = phi.value_of_pairing(pc)
            phi_disc[done:done + nb] = phi.value_of_pairing(pd)

        if need_paths:
            xs = block * sq[None, None]
            u1 = m1 + np.einsum("kj,bkj->bj", cos_c, xs[:, :, 0]) \
                - np.einsum("kj,bkj->bj", sin_c, xs[:, :, 1])
            u2 = m2 + np.einsum("kj,bkj->bj", sin_c, xs[:, :, 0]) \
                + np.einsum("kj,bkj->bj", cos_c, xs[:, :, 1])
            e1 = (xs[:, :, 0].reshape(-1, J) @ g.T).reshape(nb, steps, n)
            e2 = (xs[:, :, 1].reshape(-1, J) @ g.T).reshape(nb, steps, n)
            w1 = mh1 + np.einsum("ki,bki->bi", cos_d, e1) \
                - np.einsum("ki,bki->bi", sin_d, e2)
            w2 = mh2 + np.einsum("ki,bki->bi", sin_d, e1) \
                + np.einsum("ki,bki->bi", cos_d, e2)
            if compute_strong:
                cross = np.einsum("bi,bi->b", w1, u1 @ g.T) \
                    + np.einsum("bi,bi->b", w2, u2 @ g.T)
                y = np.einsum("bj,bj->b", u1, u1) + np.einsum("bj,bj->b", u2, u2) \
                    + np.einsum("bi,bi->b", w1, w1) + np.einsum("bi,bi->b", w2, w2) \
                    - 2.0 * cross
                strong_sq[done:done + nb] = np.maximum(y, 0.0)
            if compute_weak and phi.kind == "gauss-bump":
                w2w = phi.width ** 2
                nc = np.einsum("bj,bj->b", u1, u1) + np.einsum("bj,bj->b", u2, u2)
                nd = np.einsum("bi,bi->b", w1, w1) + np.einsum("bi,bi->b", w2, w2)
                phi_cont[done:done + nb] = np.exp(-0.5 * nc / w2w)
                phi_disc[done:done + nb] = np.exp(-0.5 * nd / w2w)
        done += nb

    strong = strong_stderr = weak = weak_stderr = None
    if compute_strong:
        mean_sq = float(np.sum(strong_sq) / samples)   # pairwise summation
        strong = float(np.sqrt(mean_sq))
        sd = float(np.std(strong_sq, ddof=1))
        # delta method for sqrt of a sample mean
        strong_stderr = sd / np.sqrt(samples) / (2.0 * strong) if strong > 0 else 0.0
    if compute_weak:
        weak_diff[:] = phi_disc - phi_cont
        weak = float(np.sum(weak_diff) / samples)
        weak_stderr = float(np.std(weak_diff, ddof=1) / np.sqrt(samples))

    result = McResult(strong, strong_stderr, weak, weak_stderr, samples, steps)
    if return_samples:
        return result, {"strong_sq": strong_sq, "weak_diff": weak_diff,
                        "phi_cont": phi_cont, "phi_disc": phi_disc}
    return result


def fd_check_functional(phi: TestFunctional, x: np.ndarray, delta: float,
                        n_directions: int = 8, seed: int = 0):
    """Finite-difference validation of the functional derivatives.

    Central first differences against <gradient, y> and second differences
    against <hessian y, y> along seeded random unit directions; returns the
    two maximal relative errors.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    rng = np.random.default_rng(seed)
    grad_err = hess_err = 0.0
    f0 = phi.value(x)
    for _ in range(n_directions):
        y = rng.standard_normal(x.size)
        y /= np.linalg.norm(y)
        fp, fm = phi.value(x + delta * y), phi.value(x - delta * y)
        d1 = (fp - fm) / (2.0 * delta)
        g1 = phi.gradient(x) @ y
        grad_err = max(grad_err, abs(d1 - g1) / (1.0 + abs(g1)))
        d2 = (fp - 2.0 * f0 + fm) / delta ** 2
        g2 = phi.hessian_action(x, y) @ y
        hess_err = max(hess_err, abs(d2 - g2) / (1.0 + abs(g2)))
    return grad_err, hess_err


def fit_rate(hs, errors, floor: float = 0.0) -> RateFit:
    """Least-squares slope of log(error) versus log(h).

    h must be strictly decreasing and errors strictly positive (a
    nonpositive entry raises, naming its index). Points at or below 100x the
    truncation floor are excluded with a warning; at least three points must
    survive.
    """
    hs = np.asarray(hs, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if hs.shape != errors.shape or hs.ndim != 1:
        raise ValueError("h and error lists must be 1-d and equally long")
    if np.any(np.diff(hs) >= 0):
        raise ValueError("h values must be strictly decreasing")
    bad = np.where(~(errors > 0.0))[0]
    if bad.size:
        raise ValueError(f"error at index {bad[0]} is not strictly positive")
    keep = np.arange(hs.size)
    if floor > 0.0:
        keep = keep[errors > 100.0 * floor]
        if keep.size < hs.size:
            warnings.warn(
                f"excluded {hs.size - keep.size} rate points at or below "
                f"100x the truncation floor {floor:.3e}", stacklevel=2)
    if keep.size < 3:
        raise ValueError("need at least three usable points for a rate fit")
    lx, ly = np.log(hs[keep]), np.log(errors[keep])
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    ss_res = float(np.sum(resid ** 2))
    if ss_tot <= 1e-30:
        r2 = 1.0 if ss_res <= 1e-30 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return RateFit(float(slope), float(intercept), float(r2),
                   tuple(int(i) for i in keep))
