"""Fisher information for the spectral covariance model.

Per frequency p the observation is Y_p ~ N(0, C_p) with
``C_p = Sigma lam_p + (eta^2/n) I_d``, and the information about vec(Sigma)
carried by Y_p is ``I_p = (1/4) lam_p^2 (C_p^-1 (x) C_p^-1)`` (times the
symmetriser Z when expressed as the score covariance).  Summing over a
frequency window and rescaling by the squared rate ``r_n^2 = n^(-1/delta)``
converges to the asymptotic information ``I(Sigma)``, which diagonalises in
the eigenbasis of Sigma with eigenvalues

    v_ab = zeta / (4 eta^(2/delta)) * J(s_a, s_b),
    J(s_a, s_b) = int_0^inf (s_a + x^delta)^-1 (s_b + x^delta)^-1 dx.

J has a Beta-function closed form; an adaptive-quadrature evaluation is kept
as an independent cross-check.  The infinite integration domain (with the
noise level scaled out) is the one consistent with the closed form and with
the Brownian-motion covariance identity; the unit-domain variant that
sometimes appears in print is available behind ``domain="unit"`` for
comparison only.

All d^2 x d^2 matrices here commute with the symmetriser Z because they are
(Q (x) Q)-conjugated diagonals with symmetric eigenvalue tables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .matcore import check_symmetric, is_positive_definite, kron, psd_sqrt, symmetriser, vec
from .spectra import Spectrum, balance_index, rate_and_zeta

__all__ = [
    "ParamModel",
    "FisherInfo",
    "LocalFisher",
    "cov_block",
    "fisher_block",
    "fisher_window",
    "full_truncation_index",
    "asymptotic_fisher",
    "fisher_eigenvalue_v",
    "optimal_covariance",
    "sigma_xi_sqrt",
    "local_fisher",
    "integrated_bound",
    "pair_sums",
    "info_from_pairs",
]

#: relative tail mass allowed when truncating full-spectrum sums
FULL_SUM_RELTOL = 1e-8

#: relative eigenvalue gap below which the equal-eigenvalue limit is used
EQUAL_EIG_RELTOL = 1e-8


@dataclass(frozen=True)
class ParamModel:
    """The parametric experiment: dimension, covariance target, noise, size.

    Enforces interior membership ``0 < Sigma < s_bound I`` in the PSD order.
    """

    sigma: np.ndarray
    eta2: float
    n: int
    spectrum: Spectrum
    s_bound: float = 10.0

    def __post_init__(self):
        sig = check_symmetric(self.sigma, atol=0.0)
        object.__setattr__(self, "sigma", sig)
        if self.eta2 <= 0.0:
            raise ValueError("noise variance must be positive")
        if self.n < 2:
            raise ValueError("sample size must be >= 2")
        if self.s_bound <= 0.0:
            raise ValueError("parameter bound must be positive")
        w = np.linalg.eigvalsh(sig)
        if w[0] <= 0.0:
            raise ValueError("covariance must be positive definite")
        if w[-1] >= self.s_bound:
            raise ValueError(
                f"covariance eigenvalue {w[-1]:.4g} violates the bound {self.s_bound:.4g}"
            )

    @property
    def d(self) -> int:
        return self.sigma.shape[0]

    @property
    def noise_over_n(self) -> float:
        return self.eta2 / float(self.n)

    def balance_index(self) -> float:
        return balance_index(self.spectrum, self.n)


@dataclass(frozen=True)
class FisherInfo:
    """A d^2 x d^2 information matrix with bookkeeping.

    ``kind`` is one of ``per-frequency``, ``windowed``, ``asymptotic``.
    ``matrix`` never includes the symmetriser factor; use ``times_z`` for the
    score-covariance normalisation I Z.
    """

    matrix: np.ndarray
    kind: str
    meta: dict = field(default_factory=dict)

    @property
    def d(self) -> int:
        return int(round(math.sqrt(self.matrix.shape[0])))

    def times_z(self) -> np.ndarray:
        return self.matrix @ symmetriser(self.d)

    def inverse(self) -> np.ndarray:
        return np.linalg.inv(self.matrix)


def cov_block(model: ParamModel, p: int) -> np.ndarray:
    """Per-frequency covariance ``C_p = Sigma lam_p + (eta^2/n) I``."""
    lam_p = float(model.spectrum.eigenvalue(p))
    return model.sigma * lam_p + model.noise_over_n * np.eye(model.d)


def pair_sums(lam: np.ndarray, s: np.ndarray, noise_over_n: float) -> np.ndarray:
    """Eigen-pair sums ``M_ab = sum_p lam_p^2 / ((s_a lam_p + e)(s_b lam_p + e))``.

    This is the windowed information in the eigenbasis of Sigma (up to the
    factor 1/4); computing it as one Gram product keeps large windows cheap.
    """
    lam = np.asarray(lam, dtype=float)
    denom = lam[:, None] * s[None, :] + noise_over_n  # (P, d)
    b = lam[:, None] / denom
    return b.T @ b


def info_from_pairs(eigvecs: np.ndarray, m_pairs: np.ndarray) -> np.ndarray:
    """Assemble (1/4) (V (x) V) diag(vec(M)) (V (x) V)^T."""
    k = kron(eigvecs, eigvecs)
    return 0.25 * (k * vec(m_pairs)) @ k.T


def fisher_block(model: ParamModel, p: int) -> FisherInfo:
    """Per-frequency information ``(1/4) lam_p^2 (C_p^-1 (x) C_p^-1)``."""
    c_inv = np.linalg.inv(cov_block(model, p))
    lam_p = float(model.spectrum.eigenvalue(p))
    return FisherInfo(matrix=0.25 * lam_p**2 * kron(c_inv, c_inv), kind="per-frequency",
                      meta={"p": int(p)})


def full_truncation_index(model: ParamModel, reltol: float = FULL_SUM_RELTOL) -> int:
    """Truncation index for full-spectrum sums.

    Starts at ``max(64 p_n, 1024)`` and doubles until the analytic tail
    bound (integral comparison of ``lam_p^2 (n/eta^2)^2`` beyond the cut)
    is below ``reltol`` of the accumulated trace.
    """
    s = np.linalg.eigvalsh(model.sigma)
    e = model.noise_over_n
    p_max = int(max(64 * math.ceil(model.balance_index()), 1024))
    for _ in range(60):
        lam = model.spectrum.eigenvalue(np.arange(1, p_max + 1))
        trace_now = float(np.trace(pair_sums(lam, s, e)))
        c_star = model.spectrum.tail_envelope_constant(float(p_max))
        # sum_{p > P} lam_p^2 <= int_P^inf (c* x^-delta)^2 dx
        tail_sq = c_star**2 * float(p_max) ** (1.0 - 2.0 * model.spectrum.delta) / (
            2.0 * model.spectrum.delta - 1.0
        )
        tail_trace = model.d**2 * tail_sq / e**2
        if tail_trace < reltol * trace_now:
            return p_max
        p_max *= 2
    raise RuntimeError("tail bound did not converge; spectrum decays too slowly")


def _window_indices(model: ParamModel, window) -> np.ndarray:
    if isinstance(window, str):
        if window != "full":
            raise ValueError(f"unknown window spec {window!r}")
        return np.arange(1, full_truncation_index(model) + 1)
    if isinstance(window, np.ndarray):
        idx = window.astype(int)
    else:
        lo, hi = window
        idx = np.arange(int(math.ceil(lo)), int(math.floor(hi)) + 1)
    idx = idx[idx >= 1]
    if idx.size == 0:
        raise ValueError("empty frequency window")
    return idx


def fisher_window(model: ParamModel, window="full") -> FisherInfo:
    """Information summed over a frequency window.

    ``window`` is ``"full"`` (truncated by the analytic tail bound), an
    ``(lo, hi)`` interval, or an explicit integer index array.
    """
    idx = _window_indices(model, window)
    lam = model.spectrum.eigenvalue(idx)
    s, v = np.linalg.eigh(model.sigma)
    m_pairs = pair_sums(np.atleast_1d(lam), s, model.noise_over_n)
    return FisherInfo(
        matrix=info_from_pairs(v, m_pairs),
        kind="windowed",
        meta={"p_lo": int(idx[0]), "p_hi": int(idx[-1]), "count": int(idx.size)},
    )


def _integral_j_closed(s_a: float, s_b: float, delta: float) -> float:
    """Closed form of J(s_a, s_b) = int_0^inf (s_a+x^d)^-1 (s_b+x^d)^-1 dx."""
    front = math.pi / (delta * math.sin(math.pi / delta))
    if abs(s_a - s_b) < EQUAL_EIG_RELTOL * max(s_a, s_b):
        s = 0.5 * (s_a + s_b)
        return front * (1.0 - 1.0 / delta) * s ** (1.0 / delta - 2.0)
    num = s_b ** (1.0 / delta - 1.0) - s_a ** (1.0 / delta - 1.0)
    return front * num / (s_a - s_b)


def _integral_j_quad(s_a: float, s_b: float, delta: float) -> float:
    """Adaptive-quadrature evaluation of J on (0, X] with an analytic tail cut.

    The cut X makes the ignored tail (bounded by x^(-2 delta)) smaller than
    1e-13; the interval is integrated in decade segments so the adaptive
    rule never faces a scale mismatch between the knee and the far tail.
    """
    x_cut = ((2.0 * delta - 1.0) * 1e13) ** (1.0 / (2.0 * delta - 1.0))
    f = lambda x: 1.0 / ((s_a + x**delta) * (s_b + x**delta))
    knee = max(s_a, s_b) ** (1.0 / delta)
    edges = [0.0, knee]
    while edges[-1] < x_cut:
        edges.append(min(10.0 * edges[-1], x_cut))
    total = 0.0
    for lo, hi in zip(edges, edges[1:]):
        part, _ = quad(f, lo, hi, limit=200, epsabs=1e-13, epsrel=1e-11)
        total += part
    return total


def _integral_j_unit(s_a: float, s_b: float, delta: float) -> float:
    f = lambda x: 1.0 / ((s_a + x**delta) * (s_b + x**delta))
    val, _ = quad(f, 0.0, 1.0, limit=200, epsabs=1e-12, epsrel=1e-11)
    return val


def fisher_eigenvalue_v(
    s_a: float,
    s_b: float,
    delta: float,
    zeta: float,
    eta: float,
    method: str = "closed_form",
    domain: str = "infinite",
) -> float:
    """One eigenvalue of the asymptotic information.

    ``domain="unit"`` reproduces the literal unit-interval variant for
    comparison; all consistency checks in this package use the infinite
    domain, which matches the closed form.
    """
    if delta <= 1.0:
        raise ValueError("regular-variation index must exceed 1")
    if min(s_a, s_b) <= 0.0 or eta <= 0.0 or zeta <= 0.0:
        raise ValueError("eigenvalues, noise level and rate constant must be positive")
    if domain == "unit":
        j = _integral_j_unit(s_a, s_b, delta)
    elif method == "closed_form":
        j = _integral_j_closed(s_a, s_b, delta)
    elif method == "quadrature":
        j = _integral_j_quad(s_a, s_b, delta)
    else:
        raise ValueError(f"unknown method {method!r}")
    return zeta / (4.0 * eta ** (2.0 / delta)) * j


def asymptotic_fisher(
    sigma: np.ndarray,
    delta: float,
    zeta: float,
    eta: float,
    method: str = "closed_form",
    domain: str = "infinite",
) -> FisherInfo:
    """Asymptotic information I(Sigma) = lim r_n^2 I_n(Sigma).

    Diagonalises as (V (x) V) diag(v_ab) (V (x) V)^T over the eigenbasis of
    Sigma.  The per-pair eigenvalues come from the Beta-function closed form
    by default; ``method="quadrature"`` recomputes them by adaptive
    quadrature as an independent check.
    """
    sigma = check_symmetric(sigma)
    if not is_positive_definite(sigma):
        raise ValueError("covariance must be positive definite")
    s, v = np.linalg.eigh(sigma)
    d = sigma.shape[0]
    vmat = np.empty((d, d))
    for a in range(d):
        for b in range(a, d):
            vmat[a, b] = vmat[b, a] = fisher_eigenvalue_v(
                s[a], s[b], delta, zeta, eta, method=method, domain=domain
            )
    k = kron(v, v)
    return FisherInfo(
        matrix=(k * vec(vmat)) @ k.T,
        kind="asymptotic",
        meta={"delta": delta, "zeta": zeta, "eta": eta, "method": method, "domain": domain},
    )


def optimal_covariance(
    sigma: np.ndarray,
    delta: float,
    zeta: float,
    eta: float,
    grad_psi: np.ndarray | None = None,
) -> np.ndarray:
    """Efficient Gaussian covariance ``(1/4) G I(Sigma)^-1 Z G^T`` for a target
    with derivative ``G`` (k x d^2); identity target when ``G`` is omitted."""
    info = asymptotic_fisher(sigma, delta, zeta, eta)
    base = 0.25 * info.inverse() @ symmetriser(info.d)
    if grad_psi is None:
        return base
    g = np.asarray(grad_psi, dtype=float)
    if g.ndim != 2 or g.shape[1] != base.shape[0]:
        raise ValueError(f"target derivative must be k x {base.shape[0]}")
    return g @ base @ g.T


def _as_diag_vector(xi: np.ndarray, d: int | None = None) -> np.ndarray:
    """Accept a positive diagonal as a vector or as a diagonal matrix."""
    xi = np.asarray(xi, dtype=float)
    if xi.ndim == 2:
        if not np.allclose(xi, np.diag(np.diag(xi))):
            raise ValueError("matrix must be diagonal")
        xi = np.diag(xi)
    if d is not None and xi.size != d:
        raise ValueError("diagonal size mismatch")
    if np.any(xi <= 0.0):
        raise ValueError("diagonal entries must be positive")
    return xi


def sigma_xi_sqrt(sigma: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """Noise-geometry square root ``Xi (Xi^-1 Sigma Xi^-1)^(1/2) Xi``.

    Satisfies ``S Xi^-2 S = Sigma`` for the returned S; reduces to the plain
    PSD square root when Xi = I.
    """
    sigma = check_symmetric(sigma)
    xi_d = _as_diag_vector(xi, sigma.shape[0])
    inner = sigma / np.outer(xi_d, xi_d)
    return np.outer(xi_d, xi_d) * psd_sqrt(inner)


@dataclass(frozen=True)
class LocalFisher:
    """Pointwise information of the block model at one time point."""

    t: float
    sigma_t: np.ndarray
    xi_t: np.ndarray  # diagonal entries
    info: np.ndarray
    info_inv: np.ndarray


def local_fisher(sigma_t: np.ndarray, xi_t: np.ndarray, t: float = 0.0) -> LocalFisher:
    """Local information with ``I^-1 = 8 (S_xi (x) Sigma + Sigma (x) S_xi)``
    where S_xi is :func:`sigma_xi_sqrt` of the local covariance."""
    sigma_t = check_symmetric(sigma_t)
    if not is_positive_definite(sigma_t):
        raise ValueError("local covariance must be positive definite")
    xi_d = _as_diag_vector(xi_t, sigma_t.shape[0])
    root = sigma_xi_sqrt(sigma_t, xi_d)
    info_inv = 8.0 * (kron(root, sigma_t) + kron(sigma_t, root))
    return LocalFisher(
        t=float(t),
        sigma_t=sigma_t,
        xi_t=xi_d,
        info=np.linalg.inv(info_inv),
        info_inv=info_inv,
    )


def integrated_bound(block_model, grad_w: np.ndarray | None = None) -> np.ndarray:
    """Riemann sum of ``(1/4) grad_W I^-1 Z grad_W^T`` over the block grid.

    Uses block left endpoints, matching the piecewise-constant convention of
    the block model.  ``grad_w`` may be a single k x d^2 matrix (shared by
    all blocks) or a per-block (m, k, d^2) array; identity when omitted.
    """
    m = block_model.m
    d = block_model.d
    z = symmetriser(d)
    if grad_w is None:
        gw = np.broadcast_to(np.eye(d * d), (m, d * d, d * d))
    else:
        gw = np.asarray(grad_w, dtype=float)
        if gw.ndim == 2:
            gw = np.broadcast_to(gw, (m,) + gw.shape)
        if gw.shape[0] != m or gw.shape[2] != d * d:
            raise ValueError("per-time weight derivative must be (m, k, d^2)")
    total = np.zeros((gw.shape[1], gw.shape[1]))
    for k in range(m):
        lf = local_fisher(block_model.sigmas[k], block_model.xi2[k] ** 0.5, t=k / m)
        total += gw[k] @ (0.25 * lf.info_inv @ z) @ gw[k].T
    return total / m
