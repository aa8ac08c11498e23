import math

import numpy as np
import pytest
from scipy.integrate import quad

from speccov.fisher import (
    ParamModel,
    asymptotic_fisher,
    cov_block,
    fisher_block,
    fisher_eigenvalue_v,
    fisher_window,
    full_truncation_index,
    integrated_bound,
    local_fisher,
    optimal_covariance,
    sigma_xi_sqrt,
)
from speccov.matcore import kron, psd_sqrt, symmetriser, vec
from speccov.spectra import Spectrum


def random_pd(d, seed, scale=1.0):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((d, d))
    s = a @ a.T
    return scale * (d * s / np.trace(s) + 0.3 * np.eye(d))


def unit_noise_model(sigma, n, spectrum=None, eta2=1.0):
    return ParamModel(
        sigma=np.atleast_2d(sigma),
        eta2=eta2,
        n=n,
        spectrum=spectrum or Spectrum.brownian_motion(),
    )


# ---------------------------------------------------------------------------
# covariance blocks and per-frequency information
# ---------------------------------------------------------------------------


def test_cov_block_direct_substitution():
    spec = Spectrum.power_law(0.1, 2.0)  # lam_1 = 0.1
    model = ParamModel(sigma=np.eye(2), eta2=1.0, n=100, spectrum=spec)
    np.testing.assert_allclose(cov_block(model, 1), 0.11 * np.eye(2), atol=1e-15)


def test_cov_block_scalar():
    spec = Spectrum.power_law(0.5, 2.0)
    model = ParamModel(sigma=np.array([[2.0]]), eta2=1.0, n=4, spectrum=spec)
    assert cov_block(model, 1)[0, 0] == pytest.approx(1.25)


def test_cov_block_eigenvalue_floor():
    model = unit_noise_model(random_pd(3, 1), 10**4)
    w = np.linalg.eigvalsh(cov_block(model, 5000))
    assert w[0] >= model.noise_over_n * (1.0 - 1e-12)


def test_param_model_requires_positive_noise():
    with pytest.raises(ValueError):
        ParamModel(sigma=np.eye(2), eta2=0.0, n=100, spectrum=Spectrum.brownian_motion())


def test_param_model_enforces_interior():
    with pytest.raises(ValueError):
        ParamModel(
            sigma=20.0 * np.eye(2), eta2=1.0, n=100,
            spectrum=Spectrum.brownian_motion(), s_bound=10.0,
        )


def test_fisher_block_scalar_value():
    # lam = 1, C = 2  ->  1/4 * 1 * (1/2)^2 = 1/16
    spec = Spectrum.power_law(1.0, 2.0)
    model = ParamModel(sigma=np.array([[1.0]]), eta2=2.0, n=2, spectrum=spec)
    assert cov_block(model, 1)[0, 0] == pytest.approx(2.0)
    assert fisher_block(model, 1).matrix[0, 0] == pytest.approx(1.0 / 16.0)


def test_fisher_block_isotropic_case():
    spec = Spectrum.power_law(0.2, 2.0)
    model = ParamModel(sigma=np.eye(2), eta2=1.0, n=20, spectrum=spec)
    lam = 0.2
    c = lam + 1.0 / 20.0
    np.testing.assert_allclose(
        fisher_block(model, 1).matrix, lam**2 / (4 * c**2) * np.eye(4), atol=1e-14
    )


def _expected_logdensity_hessian(model, p, h1, h2, step=1e-4):
    """Central finite differences of E[log density] along symmetric directions."""
    lam = float(model.spectrum.eigenvalue(p))
    c_true = cov_block(model, p)

    def expected_loglik(sigma):
        c = sigma * lam + model.noise_over_n * np.eye(model.d)
        sign, ld = np.linalg.slogdet(c)
        return -0.5 * ld - 0.5 * float(np.trace(np.linalg.solve(c, c_true)))

    s0 = model.sigma
    f_pp = expected_loglik(s0 + step * h1 + step * h2)
    f_pm = expected_loglik(s0 + step * h1 - step * h2)
    f_mp = expected_loglik(s0 - step * h1 + step * h2)
    f_mm = expected_loglik(s0 - step * h1 - step * h2)
    return -(f_pp - f_pm - f_mp + f_mm) / (4.0 * step**2)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_fisher_block_matches_hessian_oracle(d):
    model = unit_noise_model(random_pd(d, 40 + d), 10**4)
    p = max(1, int(model.balance_index()))
    info_z = fisher_block(model, p).times_z()
    basis = []
    for i in range(d):
        for j in range(i, d):
            h = np.zeros((d, d))
            h[i, j] = h[j, i] = 1.0
            basis.append(h)
    k = len(basis)
    closed = np.empty((k, k))
    fd = np.empty((k, k))
    for a, h1 in enumerate(basis):
        for b, h2 in enumerate(basis):
            closed[a, b] = float(vec(h1) @ info_z @ vec(h2))
            fd[a, b] = _expected_logdensity_hessian(model, p, h1, h2)
    assert np.linalg.norm(fd - closed) / np.linalg.norm(closed) < 1e-5


# ---------------------------------------------------------------------------
# windowed sums
# ---------------------------------------------------------------------------


def test_fisher_window_single_index_equals_block():
    model = unit_noise_model(random_pd(2, 2), 10**4)
    p = 17
    np.testing.assert_allclose(
        fisher_window(model, np.array([p])).matrix, fisher_block(model, p).matrix, atol=1e-15
    )


def test_fisher_window_full_bm_limit():
    # n^(-1/2) I_full -> zeta * int_0^inf (1+x^2)^-2 dx / 4 = 1/16 for BM
    model = unit_noise_model(np.array([[1.0]]), 10**6)
    total = fisher_window(model, "full").matrix[0, 0]
    assert abs(total / math.sqrt(10**6) - 1.0 / 16.0) / (1.0 / 16.0) < 0.02


def test_fisher_window_bulk_fraction_frozen():
    # window [p_n/10, 10 p_n] carries 87.6% of the trace at n = 10^6 (d=1);
    # value frozen from the direct sum
    model = unit_noise_model(np.array([[1.0]]), 10**6)
    p_n = model.balance_index()
    win = fisher_window(model, (p_n / 10.0, 10.0 * p_n)).matrix[0, 0]
    full = fisher_window(model, "full").matrix[0, 0]
    assert win / full == pytest.approx(0.8764, abs=5e-4)


def test_fisher_window_rejects_empty():
    model = unit_noise_model(np.array([[1.0]]), 10**4)
    with pytest.raises(ValueError):
        fisher_window(model, (50.25, 50.75))


def test_full_truncation_tail_is_negligible():
    model = unit_noise_model(random_pd(2, 3), 10**5)
    p_max = full_truncation_index(model)
    base = np.trace(fisher_window(model, "full").matrix)
    extended = np.trace(fisher_window(model, (1, 4 * p_max)).matrix)
    assert abs(extended - base) / base < 1e-7


# ---------------------------------------------------------------------------
# asymptotic information
# ---------------------------------------------------------------------------


def test_asymptotic_scalar_value_bm():
    info = asymptotic_fisher(np.eye(1), 2.0, 1.0 / math.pi, 1.0)
    assert info.matrix[0, 0] == pytest.approx(1.0 / 16.0, rel=1e-12)


def test_eigenvalue_v_partial_fractions_example():
    # delta=2, eta=1, zeta=1/pi, s=(1,4): quadrature gives pi/12, v = 1/48
    direct, _ = quad(lambda x: 1.0 / ((1 + x * x) * (4 + x * x)), 0, np.inf)
    assert direct == pytest.approx(math.pi / 12.0, rel=1e-9)
    v = fisher_eigenvalue_v(1.0, 4.0, 2.0, 1.0 / math.pi, 1.0)
    assert v == pytest.approx(1.0 / 48.0, rel=1e-12)


def test_closed_form_vs_quadrature_grid():
    for delta in (1.5, 2.0, 3.0, 4.0):
        for s_a in (0.1, 1.0, 4.0, 10.0):
            for s_b in (0.1, 1.0, 4.0, 10.0):
                for eta in (0.5, 1.0, 2.0):
                    c = fisher_eigenvalue_v(s_a, s_b, delta, 0.7, eta)
                    q = fisher_eigenvalue_v(s_a, s_b, delta, 0.7, eta, method="quadrature")
                    assert abs(c - q) / abs(c) < 1e-8


def test_equal_eigenvalue_limit_continuity():
    v_mid = fisher_eigenvalue_v(2.0, 2.0, 3.0, 0.4, 1.1)
    v_near = fisher_eigenvalue_v(2.0, 2.0 * (1 + 1e-7), 3.0, 0.4, 1.1)
    assert v_mid == pytest.approx(v_near, rel=1e-6)


def test_unit_domain_variant_differs():
    full = fisher_eigenvalue_v(1.0, 1.0, 2.0, 1.0 / math.pi, 1.0)
    unit = fisher_eigenvalue_v(1.0, 1.0, 2.0, 1.0 / math.pi, 1.0, domain="unit")
    assert unit < full  # the truncated print variant drops the tail mass


def test_bm_covariance_identity_random():
    rng = np.random.default_rng(17)
    z2 = {d: symmetriser(d) for d in (1, 2, 3)}
    for trial in range(50):
        d = int(rng.integers(1, 4))
        a = rng.standard_normal((d, d))
        sigma = a @ a.T + 0.25 * np.eye(d)
        eta = float(rng.uniform(0.5, 2.0))
        left = optimal_covariance(sigma, 2.0, 1.0 / math.pi, eta)
        root = psd_sqrt(sigma)
        right = 2.0 * eta * (kron(sigma, root) + kron(root, sigma)) @ z2[d]
        assert np.linalg.norm(left - right) / np.linalg.norm(right) < 1e-10


def test_rate_convergence_windowed():
    sigma = np.array([[1.0, 0.5], [0.5, 1.0]])
    spec = Spectrum.brownian_motion()
    target = asymptotic_fisher(sigma, 2.0, spec.zeta_limit, 1.0).times_z()
    for n, tol in ((10**6, 0.05), (10**8, 0.02)):
        model = ParamModel(sigma=sigma, eta2=1.0, n=n, spectrum=spec)
        finite = n ** (-0.5) * fisher_window(model, "full").times_z()
        assert np.linalg.norm(finite - target) / np.linalg.norm(target) < tol


def test_info_commutes_with_symmetriser():
    sigma = random_pd(3, 23)
    info = asymptotic_fisher(sigma, 2.5, 0.3, 1.0)
    z = symmetriser(3)
    np.testing.assert_allclose(info.matrix @ z, z @ info.matrix, atol=1e-12)
    w = np.linalg.eigvalsh(info.matrix)
    assert w[0] > 0


def test_optimal_covariance_identity_target_and_projection():
    sigma = random_pd(2, 5)
    base = optimal_covariance(sigma, 2.0, 1.0 / math.pi, 1.0)
    selector = np.zeros((1, 4))
    selector[0, 0] = 1.0
    picked = optimal_covariance(sigma, 2.0, 1.0 / math.pi, 1.0, grad_psi=selector)
    assert picked[0, 0] == pytest.approx(base[0, 0], rel=1e-14)


def test_optimal_covariance_scalar_bm():
    assert optimal_covariance(np.eye(1), 2.0, 1.0 / math.pi, 1.0)[0, 0] == pytest.approx(8.0)


# ---------------------------------------------------------------------------
# local information and the integrated bound
# ---------------------------------------------------------------------------


def test_sigma_xi_sqrt_examples():
    np.testing.assert_allclose(
        sigma_xi_sqrt(4.0 * np.eye(2), 0.5 * np.ones(2)), 1.0 * np.eye(2), atol=1e-12
    )
    got = sigma_xi_sqrt(np.diag([2.0, 8.0]), np.array([1.0, 2.0]))
    np.testing.assert_allclose(got, np.diag([math.sqrt(2.0), 4.0 * math.sqrt(2.0)]), atol=1e-12)
    sigma = random_pd(3, 9)
    np.testing.assert_allclose(sigma_xi_sqrt(sigma, np.ones(3)), psd_sqrt(sigma), atol=1e-12)


def test_sigma_xi_sqrt_defining_property():
    sigma = random_pd(3, 10)
    xi = np.array([0.5, 1.0, 2.0])
    root = sigma_xi_sqrt(sigma, xi)
    back = root @ np.diag(xi**-2.0) @ root
    assert np.linalg.norm(back - sigma) / np.linalg.norm(sigma) < 1e-10


def test_sigma_xi_sqrt_rejects_bad_xi():
    with pytest.raises(ValueError):
        sigma_xi_sqrt(np.eye(2), np.array([[1.0, 0.1], [0.1, 1.0]]))
    with pytest.raises(ValueError):
        sigma_xi_sqrt(np.eye(2), np.array([1.0, -1.0]))


def test_local_fisher_scalar_values():
    lf = local_fisher(np.eye(1), np.ones(1))
    assert lf.info_inv[0, 0] == pytest.approx(16.0)
    assert 0.25 * lf.info_inv[0, 0] * 2.0 == pytest.approx(8.0)
    lf2 = local_fisher(4.0 * np.eye(1), np.array([0.5]))
    assert 0.25 * lf2.info_inv[0, 0] * 2.0 == pytest.approx(32.0)


def test_local_fisher_identity_case():
    lf = local_fisher(np.eye(2), np.ones(2))
    np.testing.assert_allclose(lf.info_inv, 16.0 * np.eye(4), atol=1e-12)
    np.testing.assert_allclose(lf.info @ lf.info_inv, np.eye(4), atol=1e-10)


class _Blocks:
    def __init__(self, sigmas, xi2, s_bound=10.0):
        self.sigmas = np.asarray(sigmas, dtype=float)
        self.xi2 = np.asarray(xi2, dtype=float)
        self.m = self.sigmas.shape[0]
        self.d = self.sigmas.shape[1]
        self.s_bound = s_bound


def test_integrated_bound_constant_blocks_exact():
    sigma = random_pd(2, 30)
    xi2 = np.array([0.7, 1.3])
    blocks = _Blocks(np.repeat(sigma[None], 8, axis=0), np.repeat(xi2[None], 8, axis=0))
    bound = integrated_bound(blocks)
    lf = local_fisher(sigma, np.sqrt(xi2))
    np.testing.assert_allclose(bound, 0.25 * lf.info_inv @ symmetriser(2), atol=1e-12)


def test_integrated_bound_riemann_matches_fine_quadrature():
    # d=1, sigma^2(t) = 1+t, xi=1: integrand of the block bound is 8 (1+t)^(3/2)
    # evaluated at left endpoints; fine quadrature of the same piecewise
    # integrand reproduces the sum
    m = 1000
    tk = np.arange(m) / m
    sig = (1.0 + tk)[:, None, None]
    blocks = _Blocks(sig, np.ones((m, 1)))
    bound = integrated_bound(blocks)[0, 0]
    t_fine = np.linspace(0, 1, 10**6, endpoint=False)
    piecewise = 8.0 * (1.0 + np.floor(t_fine * m) / m) ** 1.5
    assert abs(bound - piecewise.mean()) / piecewise.mean() < 1e-4
    # distance to the smooth integral is the O(1/m) left-endpoint bias
    smooth = 8.0 * (2.0 / 5.0) * (2.0**2.5 - 1.0)
    assert abs(bound - smooth) / smooth < 2.0 / m


def test_integrated_bound_halving_blocks_converges():
    vals = {}
    for m in (500, 1000):
        tk = np.arange(m) / m
        blocks = _Blocks((1.0 + tk)[:, None, None], np.ones((m, 1)))
        vals[m] = integrated_bound(blocks)[0, 0]
    smooth = 8.0 * (2.0 / 5.0) * (2.0**2.5 - 1.0)
    assert abs(vals[1000] - vals[500]) < 1.5 * abs(vals[500] - smooth)
    assert abs(vals[1000] - smooth) < abs(vals[500] - smooth)


def test_integrated_bound_with_target_derivative():
    sigma = random_pd(2, 31)
    blocks = _Blocks(np.repeat(sigma[None], 4, axis=0), np.ones((4, 2)))
    g = np.zeros((1, 4))
    g[0, 3] = 1.0
    scalar = integrated_bound(blocks, grad_w=g)
    full = integrated_bound(blocks)
    assert scalar.shape == (1, 1)
    assert scalar[0, 0] == pytest.approx(full[3, 3], rel=1e-12)
