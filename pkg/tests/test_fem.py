import numpy as np
import pytest
import scipy.integrate
import scipy.linalg

from schrod_spde.fem import (FemField, Mesh1D, apply_discrete_group, assemble,
                             closed_form_discrete_eigenvalues,
                             discrete_convolution_law, discrete_eigensystem,
                             intcos, intsin, l2_project, sine_hat_matrix,
                             sine_hat_overlap)
from schrod_spde.noise import CovarianceSpec
from schrod_spde.spectral import SpectralCoeffs, eigenvalues


def hat_interpolant(mesh, nodal):
    xs = np.concatenate([[0.0], mesh.nodes, [1.0]])
    ys = np.concatenate([[0.0], nodal, [0.0]])
    return lambda x: np.interp(x, xs, ys)


def test_assemble_single_node():
    mats = assemble(1)
    assert mats.mass == pytest.approx(np.array([[1.0 / 3.0]]), rel=1e-15)
    assert mats.stiffness == pytest.approx(np.array([[4.0]]), rel=1e-15)


def test_assemble_three_nodes():
    mats = assemble(3)  # h = 1/4
    assert np.allclose(np.diag(mats.stiffness), 8.0)
    assert np.allclose(np.diag(mats.stiffness, 1), -4.0)
    assert np.allclose(np.diag(mats.mass), 1.0 / 6.0)
    assert np.allclose(np.diag(mats.mass, 1), 1.0 / 24.0)


def test_mass_row_sums_match_hat_integrals():
    # row sum k = integral of hat_k times the sum of interior hats, which is
    # h in the interior and 5h/6 next to the boundary; the grand total is
    # the quadrature value of the squared interior partition, 1 - 4h/3
    mats = assemble(9)
    h = mats.mesh.h
    row_sums = mats.mass @ np.ones(9)
    assert row_sums[0] == pytest.approx(5.0 * h / 6.0, rel=1e-14)
    assert row_sums[-1] == pytest.approx(5.0 * h / 6.0, rel=1e-14)
    assert np.allclose(row_sums[1:-1], h)
    x = np.linspace(0.0, 1.0, 200001)
    partition = np.clip(np.minimum(x, 1.0 - x) / h, 0.0, 1.0)
    oracle = scipy.integrate.simpson(partition ** 2, x=x)
    assert row_sums.sum() == pytest.approx(oracle, abs=1e-10)
    assert row_sums.sum() == pytest.approx(1.0 - 4.0 * h / 3.0, rel=1e-13)
    # total mass of the interior hats themselves is N h = 1 - h
    assert 9 * h == pytest.approx(1.0 - h, rel=1e-15)


def test_l2_project_is_identity_on_hat_functions():
    mats = assemble(12)
    rng = np.random.default_rng(0)
    nodal = rng.standard_normal(12)
    proj = l2_project(hat_interpolant(mats.mesh, nodal), mats.mesh)
    assert np.abs(proj - nodal).max() <= 1e-12


def test_l2_project_zero():
    mesh = Mesh1D(5)
    assert np.all(l2_project(lambda x: 0.0 * x, mesh) == 0.0)


def test_l2_projection_error_decays_quadratically():
    f = lambda x: np.sqrt(2.0) * np.sin(np.pi * x)
    errs, hs = [], []
    for n in (15, 31, 63, 127):
        mesh = Mesh1D(n)
        nodal = l2_project(f, mesh)
        ph = hat_interpolant(mesh, nodal)
        x = np.linspace(0.0, 1.0, 100001)
        err = np.sqrt(scipy.integrate.simpson((ph(x) - f(x)) ** 2, x=x))
        errs.append(err)
        hs.append(mesh.h)
    slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert 1.9 <= slope <= 2.1


def test_sine_hat_overlap_matches_quadrature():
    mesh = Mesh1D(15)
    k = (15 + 1) // 2
    val, err = scipy.integrate.quad(
        lambda x: np.sqrt(2.0) * np.sin(np.pi * x)
        * max(0.0, 1.0 - abs(x - mesh.nodes[k - 1]) / mesh.h),
        0.0, 1.0, limit=200, epsabs=1e-14)
    assert sine_hat_overlap(1, k, mesh) == pytest.approx(val, abs=1e-12)
    assert sine_hat_overlap(1, k, mesh) > 0.0


def test_sine_hat_overlap_alias_mode_vanishes():
    mesh = Mesh1D(7)
    j = 2 * (7 + 1)  # full period per element
    for k in range(1, 8):
        assert abs(sine_hat_overlap(j, k, mesh)) <= 1e-14


def test_sine_hat_overlap_reflection_identity():
    mesh = Mesh1D(9)
    for j in (1, 2, 5, 8):
        for k in range(1, 10):
            lhs = sine_hat_overlap(j, k, mesh)
            rhs = (-1.0) ** (j + 1) * sine_hat_overlap(j, 10 - k, mesh)
            assert lhs == pytest.approx(rhs, abs=1e-14)


def test_sine_hat_overlap_index_bounds():
    mesh = Mesh1D(4)
    with pytest.raises(IndexError):
        sine_hat_overlap(1, 0, mesh)
    with pytest.raises(IndexError):
        sine_hat_overlap(1, 5, mesh)


def test_sine_hat_matrix_agrees_with_scalar_form():
    mesh = Mesh1D(6)
    mat = sine_hat_matrix(mesh, 10)
    for j in (1, 4, 10):
        for k in (1, 3, 6):
            assert mat[k - 1, j - 1] == pytest.approx(
                sine_hat_overlap(j, k, mesh), rel=1e-14, abs=1e-15)


def test_discrete_eigensystem_single_node():
    eig = discrete_eigensystem(assemble(1))
    assert eig.lambdas[0] == pytest.approx(12.0, rel=1e-13)
    assert eig.lambdas[0] >= np.pi ** 2


def test_discrete_eigenvalues_match_closed_form():
    for n in (1, 7, 33, 128):
        mats = assemble(n)
        eig = discrete_eigensystem(mats)
        ref = closed_form_discrete_eigenvalues(mats.mesh)
        assert np.abs(eig.lambdas - ref).max() <= 1e-10 * ref.max()


def test_discrete_eigenvalues_bound_from_above_and_converge():
    rels = []
    for n in (15, 31, 63, 127):
        eig = discrete_eigensystem(assemble(n))
        lam = eigenvalues(n)
        assert np.all(eig.lambdas >= lam - 1e-9)
        rels.append((eig.lambdas[0] - lam[0]) / lam[0])
    # first-mode relative error shrinks like h^2
    ratios = np.array(rels[:-1]) / np.array(rels[1:])
    assert np.all((3.5 <= ratios) & (ratios <= 4.5))


def test_discrete_eigenvectors_mass_orthonormal():
    mats = assemble(40)
    eig = discrete_eigensystem(mats)
    gram = eig.vectors.T @ mats.mass @ eig.vectors
    assert np.abs(gram - np.eye(40)).max() <= 1e-10


def test_apply_discrete_group_identity_at_time_zero():
    eig = discrete_eigensystem(assemble(10))
    rng = np.random.default_rng(1)
    field = FemField(rng.standard_normal(10), rng.standard_normal(10))
    out = apply_discrete_group(0.0, field, eig)
    assert np.abs(out.u1 - field.u1).max() <= 1e-12
    assert np.abs(out.u2 - field.u2).max() <= 1e-12


def test_apply_discrete_group_preserves_discrete_norm():
    mats = assemble(25)
    eig = discrete_eigensystem(mats)
    rng = np.random.default_rng(2)
    field = FemField(rng.standard_normal(25), rng.standard_normal(25))
    norm0 = field.u1 @ mats.mass @ field.u1 + field.u2 @ mats.mass @ field.u2
    for t in rng.uniform(-3, 3, size=5):
        out = apply_discrete_group(t, field, eig)
        norm = out.u1 @ mats.mass @ out.u1 + out.u2 @ mats.mass @ out.u2
        assert abs(norm - norm0) <= 1e-10 * norm0


def test_apply_discrete_group_composition_law():
    eig = discrete_eigensystem(assemble(12))
    rng = np.random.default_rng(3)
    field = FemField(rng.standard_normal(12), rng.standard_normal(12))
    one = apply_discrete_group(0.4, apply_discrete_group(0.35, field, eig), eig)
    two = apply_discrete_group(0.75, field, eig)
    assert np.abs(one.u1 - two.u1).max() <= 1e-10
    assert np.abs(one.u2 - two.u2).max() <= 1e-10


def test_intcos_intsin_against_quadrature():
    lengths = (0.7, 1.0)
    freqs = (0.0, 1e-6, 9.9e-5, 1.01e-4, 0.5, 13.0, 4096.0)
    one = lambda s: np.ones_like(s)
    for T in lengths:
        for f in freqs:
            if f > 1.0:   # oscillatory weight handles high frequencies
                ref_c, _ = scipy.integrate.quad(one, 0, T, weight="cos",
                                                wvar=f, epsabs=1e-14)
                ref_s, _ = scipy.integrate.quad(one, 0, T, weight="sin",
                                                wvar=f, epsabs=1e-14)
            else:
                ref_c, _ = scipy.integrate.quad(lambda s: np.cos(f * s), 0, T,
                                                epsabs=1e-14)
                ref_s, _ = scipy.integrate.quad(lambda s: np.sin(f * s), 0, T,
                                                epsabs=1e-14)
            assert float(intcos(f, T)) == pytest.approx(ref_c, abs=1e-12)
            assert float(intsin(f, T)) == pytest.approx(ref_s, abs=1e-12)


def test_intcos_intsin_series_agrees_with_direct_branch_at_threshold():
    # both branches must coincide where the implementation switches form
    T, f = 1.0, 1e-4
    u = f * T
    series_c = T * (1.0 - u ** 2 / 6.0 + u ** 4 / 120.0)
    series_s = f * T * T / 2.0 * (1.0 - u ** 2 / 12.0 + u ** 4 / 360.0)
    assert series_c == pytest.approx(np.sin(u) / f, rel=1e-12)
    assert series_s == pytest.approx(2.0 * np.sin(0.5 * u) ** 2 / f, rel=1e-10)


def _projection_norms_banded(mesh, n_modes):
    """||P phi_j||^2 via closed-form overlaps and a banded mass solve."""
    b = sine_hat_matrix(mesh, n_modes)          # N x J
    n, h = mesh.n_interior, mesh.h
    ab = np.zeros((2, n))
    ab[0, 1:] = h / 6.0
    ab[1, :] = 2.0 * h / 3.0
    coeff = scipy.linalg.solveh_banded(ab, b)   # nodal values per mode
    mass = assemble(n).mass
    return np.einsum("kj,kj->j", coeff, mass @ coeff)


def test_discrete_convolution_law_time_zero():
    eig = discrete_eigensystem(assemble(5))
    spec = CovarianceSpec(16, 0.5, 1.0)
    x0 = SpectralCoeffs(np.zeros(16), np.zeros(16))
    law = discrete_convolution_law(0.0, spec, eig.mesh, eig, x0)
    assert np.all(law.cov == 0.0)


def test_discrete_convolution_law_rejects_negative_time():
    eig = discrete_eigensystem(assemble(3))
    spec = CovarianceSpec(8, 0.5, 1.0)
    with pytest.raises(ValueError):
        discrete_convolution_law(-1.0, spec, eig.mesh, eig,
                                 SpectralCoeffs(np.zeros(8), np.zeros(8)))


def test_discrete_convolution_law_matches_dense_time_quadrature():
    # one retained noise mode on the one-node mesh, anisotropic components
    T = 1.0
    mats = assemble(1)
    eig = discrete_eigensystem(mats)
    spec = CovarianceSpec(1, 0.5, 1.0, scale1=1.0, scale2=0.25)
    x0 = SpectralCoeffs(np.zeros(1), np.zeros(1))
    law = discrete_convolution_law(T, spec, mats.mesh, eig, x0)

    g = float(eig.cross_gram(1)[0, 0])
    mu = float(eig.lambdas[0])
    s = np.linspace(0.0, T, 100001)
    c, sn = np.cos(mu * s), np.sin(mu * s)
    q1 = float(spec.q1[0]) * g * g
    q2 = float(spec.q2[0]) * g * g
    ref = np.array([
        [scipy.integrate.simpson(q1 * c * c + q2 * sn * sn, x=s),
         scipy.integrate.simpson((q1 - q2) * c * sn, x=s)],
        [scipy.integrate.simpson((q1 - q2) * c * sn, x=s),
         scipy.integrate.simpson(q1 * sn * sn + q2 * c * c, x=s)]])
    assert np.abs(law.cov - ref).max() <= 1e-8


def test_discrete_convolution_law_trace_identity():
    # trace of the covariance equals T * sum_m sum_j q_mj ||P phi_j||^2,
    # with the projection norms obtained independently of the eigensystem
    T = 0.8
    mats = assemble(15)
    eig = discrete_eigensystem(mats)
    spec = CovarianceSpec(64, 0.5, 0.9, scale1=1.1, scale2=0.6)
    x0 = SpectralCoeffs(np.zeros(64), np.zeros(64))
    law = discrete_convolution_law(T, spec, mats.mesh, eig, x0)
    gamma2 = _projection_norms_banded(mats.mesh, 64)
    expected = T * float(((spec.q1 + spec.q2) * gamma2).sum())
    assert np.trace(law.cov) == pytest.approx(expected, rel=1e-10)


def test_discrete_convolution_law_covariance_is_psd():
    mats = assemble(9)
    eig = discrete_eigensystem(mats)
    spec = CovarianceSpec(32, 1.0, 1.3)
    x0 = SpectralCoeffs(np.zeros(32), np.zeros(32))
    law = discrete_convolution_law(1.0, spec, mats.mesh, eig, x0)
    w = np.linalg.eigvalsh(law.cov)
    assert w.min() >= -1e-12 * np.trace(law.cov)


def test_projection_idempotent_and_self_adjoint_in_discrete_pairing():
    # <P f, psi> = <f, psi> for psi in the hat space, sampled by quadrature
    mesh = Mesh1D(10)
    f = lambda x: np.exp(x) * np.sin(2.1 * x)
    nodal = l2_project(f, mesh)
    ph = hat_interpolant(mesh, nodal)
    rng = np.random.default_rng(4)
    # sample grid aligned with the 11 elements so the kinks sit on nodes
    x = np.linspace(0.0, 1.0, 11 * 10000 + 1)
    for _ in range(3):
        psi_nodal = rng.standard_normal(10)
        psi = hat_interpolant(mesh, psi_nodal)
        lhs = scipy.integrate.simpson(ph(x) * psi(x), x=x)
        rhs = scipy.integrate.simpson(f(x) * psi(x), x=x)
        assert lhs == pytest.approx(rhs, abs=1e-9)
    again = l2_project(ph, mesh)
    assert np.abs(again - nodal).max() <= 1e-11


def test_mesh_validation():
    with pytest.raises(ValueError):
        Mesh1D(0)
    mesh = Mesh1D(3)
    assert mesh.h == pytest.approx(0.25)
    assert np.allclose(mesh.nodes, [0.25, 0.5, 0.75])


def test_discrete_convolution_law_accepts_equivalent_mesh_object():
    # a freshly built mesh of the same size must be accepted
    eig = discrete_eigensystem(assemble(5))
    spec = CovarianceSpec(16, 0.5, 1.0)
    x0 = SpectralCoeffs(np.zeros(16), np.zeros(16))
    law = discrete_convolution_law(1.0, spec, Mesh1D(5), eig, x0)
    assert law.dim == 10
    with pytest.raises(ValueError):
        discrete_convolution_law(1.0, spec, Mesh1D(7), eig, x0)


def test_l2_project_reports_nonconvergence():
    from schrod_spde.spectral import QuadratureError
    mesh = Mesh1D(5)
    wild = lambda x: np.sin(4000.0 * x)
    with pytest.raises(QuadratureError, match="tol"):
        l2_project(wild, mesh)
