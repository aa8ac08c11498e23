"""Samplers for the sequence-space, discrete and asynchronous block models.

Every sampler is a pure function of its inputs and an explicit
``numpy.random.Generator``; nothing reads ambient randomness.  Replications
are made independent by deriving one substream per replication (see
:mod:`speccov.streams`), never by sharing a generator across threads.

Draw order is part of the determinism contract and is documented on each
sampler: arrays are always filled frequency-major (and block-major for the
block samplers), with the driving path drawn before observation noise in the
asynchronous sampler so that schedules can be varied while holding the
latent path fixed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .matcore import check_symmetric, psd_sqrt
from .spectra import Spectrum

__all__ = [
    "SeqSample",
    "DiscreteSample",
    "ObservationSchedule",
    "BlockModel",
    "BlockSeqSample",
    "TickSeries",
    "sample_sequence",
    "sample_sequence_general_noise",
    "sample_discrete",
    "extract_spectral_coeffs",
    "sample_async",
    "sample_block_sequence",
    "block_coeffs_from_ticks",
    "block_spectrum",
    "kernel_function",
]

#: omitted-variance fraction for the truncated eigenexpansion backend
KL_OMITTED_VARIANCE = 1e-6


# ---------------------------------------------------------------------------
# sample containers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SeqSample:
    """A draw of the sequence model: values[p-1] ~ N(0, Sigma lam_p + eta^2/n I)."""

    values: np.ndarray  # (P_max, d)
    p_max: int
    lineage: str = ""

    @property
    def d(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class DiscreteSample:
    """Uniform-grid observations Y_i = Sigma^(1/2) G_(i/n) + noise, i = 1..n."""

    values: np.ndarray  # (n, d)
    times: np.ndarray  # (n,)
    sigma: np.ndarray
    eta2: float
    kernel: str
    lineage: str = ""

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class TickSeries:
    """Per-component asynchronous observations (times, values)."""

    times: tuple[np.ndarray, ...]
    values: tuple[np.ndarray, ...]
    lineage: str = ""

    @property
    def d(self) -> int:
        return len(self.times)


@dataclass(frozen=True)
class BlockSeqSample:
    """A draw of the block sequence model: values[k, p-1] ~ N(0, C_pk)."""

    values: np.ndarray  # (m, P_max, d)
    p_max: int
    lineage: str = ""

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[2]


# ---------------------------------------------------------------------------
# schedules and block models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ObservationSchedule:
    """Asynchronous observation times t_(i,j) = F_j^-1(i / n_j).

    The built-in CDF family is ``F_j(t) = (1 - w_j) t + w_j t^2`` with
    ``w_j in [0, 1)``: it satisfies F(0)=0, F(1)=1, has strictly positive
    Lipschitz derivative, and inverts in closed form.
    """

    n_per_component: tuple[int, ...]
    eta: tuple[float, ...]
    warp: tuple[float, ...]

    def __post_init__(self):
        if not (len(self.n_per_component) == len(self.eta) == len(self.warp)):
            raise ValueError("per-component fields must have equal length")
        if any(n < 2 for n in self.n_per_component):
            raise ValueError("each component needs at least 2 observations")
        if any(e <= 0 for e in self.eta):
            raise ValueError("noise levels must be positive")
        if any(not 0.0 <= w < 1.0 for w in self.warp):
            raise ValueError("warp parameters must lie in [0, 1)")

    @property
    def d(self) -> int:
        return len(self.n_per_component)

    @property
    def n_min(self) -> int:
        return min(self.n_per_component)

    @property
    def nu(self) -> np.ndarray:
        """Sampling-ratio vector nu_j = n_min / n_j."""
        return self.n_min / np.asarray(self.n_per_component, dtype=float)

    def cdf(self, j: int, t) -> np.ndarray:
        w = self.warp[j]
        t = np.asarray(t, dtype=float)
        return (1.0 - w) * t + w * t**2

    def density(self, j: int, t) -> np.ndarray:
        w = self.warp[j]
        return (1.0 - w) + 2.0 * w * np.asarray(t, dtype=float)

    def inverse_cdf(self, j: int, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        w = self.warp[j]
        if w == 0.0:
            return u
        disc = (1.0 - w) ** 2 + 4.0 * w * u
        return (np.sqrt(disc) - (1.0 - w)) / (2.0 * w)

    def times(self, j: int) -> np.ndarray:
        """Strictly increasing observation times of component j, ending at 1."""
        i = np.arange(1, self.n_per_component[j] + 1, dtype=float)
        return self.inverse_cdf(j, i / self.n_per_component[j])

    def xi2(self, t) -> np.ndarray:
        """Local noise diagonal Xi^2(t) = diag(eta_j^2 nu_j / F_j'(t))."""
        t = np.asarray(t, dtype=float)
        nu = self.nu
        out = np.empty(t.shape + (self.d,))
        for j in range(self.d):
            out[..., j] = self.eta[j] ** 2 * nu[j] / self.density(j, t)
        return out

    @classmethod
    def uniform(cls, d: int, n: int, eta: float = 1.0) -> "ObservationSchedule":
        return cls(n_per_component=(n,) * d, eta=(float(eta),) * d, warp=(0.0,) * d)


def block_spectrum(m: int) -> Spectrum:
    """The within-block eigenvalue rule lam_mp = (pi p m)^-2."""
    return Spectrum.power_law(c=(math.pi * m) ** -2.0, delta=2.0)


@dataclass(frozen=True)
class BlockModel:
    """Piecewise-constant semiparametric grid.

    ``sigmas[k]`` is the local covariance at the block left endpoint k/m and
    ``xi2[k]`` the local noise diagonal there; per block the observation
    model is ``Y_pk ~ N(0, sigmas[k] lam_mp + xi2[k]/n_min)`` with
    ``lam_mp = (pi p m)^-2``.
    """

    sigmas: np.ndarray  # (m, d, d)
    xi2: np.ndarray  # (m, d)
    n_min: int
    s_bound: float

    def __post_init__(self):
        sig = np.asarray(self.sigmas, dtype=float)
        xi2 = np.asarray(self.xi2, dtype=float)
        object.__setattr__(self, "sigmas", sig)
        object.__setattr__(self, "xi2", xi2)
        if sig.ndim != 3 or sig.shape[1] != sig.shape[2]:
            raise ValueError("block covariances must be (m, d, d)")
        if xi2.shape != sig.shape[:2]:
            raise ValueError("noise diagonals must be (m, d)")
        if np.any(xi2 <= 0.0):
            raise ValueError("noise diagonals must be positive")
        if self.m >= math.sqrt(self.n_min):
            raise ValueError("block count must satisfy m < sqrt(n_min)")
        if self.s_bound <= 1.0:
            raise ValueError("parameter bound must exceed 1")
        for k in range(self.m):
            w = np.linalg.eigvalsh(check_symmetric(sig[k]))
            if w[0] <= 1.0 / self.s_bound or w[-1] >= self.s_bound:
                raise ValueError(
                    f"block {k}: covariance eigenvalues {w[0]:.4g}..{w[-1]:.4g} leave "
                    f"({1/self.s_bound:.4g}, {self.s_bound:.4g})"
                )

    @property
    def m(self) -> int:
        return self.sigmas.shape[0]

    @property
    def d(self) -> int:
        return self.sigmas.shape[1]

    @property
    def spectrum(self) -> Spectrum:
        return block_spectrum(self.m)

    @classmethod
    def from_schedule(
        cls, sigma_fn, schedule: ObservationSchedule, m: int, s_bound: float
    ) -> "BlockModel":
        """Evaluate a covariance path t -> Sigma(t) on block left endpoints."""
        tk = np.arange(m) / m
        sigmas = np.stack([np.asarray(sigma_fn(t), dtype=float) for t in tk])
        return cls(sigmas=sigmas, xi2=schedule.xi2(tk), n_min=schedule.n_min, s_bound=s_bound)


# ---------------------------------------------------------------------------
# sequence-space samplers
# ---------------------------------------------------------------------------


def sample_sequence(model, p_max: int, rng: np.random.Generator, lineage: str = "") -> SeqSample:
    """Draw ``Y_p = C_p^(1/2) Z_p`` for p = 1..p_max.

    The standard-normal matrix is drawn in one (p_max, d) block, so the draw
    count and order are fixed by (p_max, d) alone.
    """
    if p_max < 1:
        raise ValueError("p_max must be >= 1")
    lam = np.atleast_1d(model.spectrum.eigenvalue(np.arange(1, p_max + 1)))
    s, v = np.linalg.eigh(model.sigma)
    z = rng.standard_normal((p_max, model.d))
    scale = np.sqrt(lam[:, None] * s[None, :] + model.noise_over_n)
    return SeqSample(values=(scale * (z @ v)) @ v.T, p_max=int(p_max), lineage=lineage)


def sample_sequence_general_noise(
    sigma: np.ndarray,
    noise_cov: np.ndarray,
    n: int,
    spectrum: Spectrum,
    p_max: int,
    rng: np.random.Generator,
    lineage: str = "",
) -> SeqSample:
    """Sequence draw with a full noise covariance: Y_p ~ N(0, Sigma lam_p + H/n).

    Needed for the correlated-noise reduction tests; the isotropic sampler is
    the fast path.
    """
    sigma = check_symmetric(sigma)
    noise_cov = check_symmetric(noise_cov)
    d = sigma.shape[0]
    lam = np.atleast_1d(spectrum.eigenvalue(np.arange(1, p_max + 1)))
    cov = lam[:, None, None] * sigma[None] + noise_cov[None] / float(n)
    chol = np.linalg.cholesky(cov)  # (P, d, d)
    z = rng.standard_normal((p_max, d))
    return SeqSample(
        values=np.einsum("pij,pj->pi", chol, z), p_max=int(p_max), lineage=lineage
    )


# ---------------------------------------------------------------------------
# discrete-grid sampler and spectral coefficient extraction
# ---------------------------------------------------------------------------


def kernel_function(kernel: str, **params):
    """Return k(s, t) for a named covariance kernel (vectorised over grids)."""
    if kernel == "bm":
        return lambda s, t: np.minimum(s, t)
    if kernel == "bb":
        return lambda s, t: np.minimum(s, t) - s * t
    if kernel == "ou":
        beta = params.get("beta", 0.5)
        return lambda s, t: np.exp(-beta * np.abs(s - t)) / (2.0 * beta)
    if kernel == "fbm":
        h = params["hurst"]
        return lambda s, t: 0.5 * (s ** (2 * h) + t ** (2 * h) - np.abs(s - t) ** (2 * h))
    raise ValueError(f"unknown kernel {kernel!r}")


def _kl_basis(kernel: str, times: np.ndarray, total_var: float):
    """Closed-form eigenpairs for the truncated expansion backend."""
    if kernel == "bm":
        n_terms = int(math.ceil(1.0 / (math.pi**2 * KL_OMITTED_VARIANCE * total_var))) + 1
        k = np.arange(1, n_terms + 1, dtype=float)
        lam = (math.pi * (k - 0.5)) ** -2.0
        phi = math.sqrt(2.0) * np.sin(np.outer(times, (k - 0.5) * math.pi))
    elif kernel == "bb":
        n_terms = int(math.ceil(1.0 / (math.pi**2 * KL_OMITTED_VARIANCE * total_var))) + 1
        k = np.arange(1, n_terms + 1, dtype=float)
        lam = (math.pi * k) ** -2.0
        phi = math.sqrt(2.0) * np.sin(np.outer(times, k * math.pi))
    else:
        raise ValueError(f"no closed-form eigenbasis for kernel {kernel!r}")
    return lam, phi


def sample_discrete(
    sigma: np.ndarray,
    kernel: str,
    n: int,
    eta2: float,
    rng: np.random.Generator,
    backend: str = "dense",
    lineage: str = "",
    **kernel_params,
) -> DiscreteSample:
    """Draw the discrete model Y_i = Sigma^(1/2) G_(i/n) + noise on t_i = i/n.

    Backends:

    * ``dense`` - factor the n x n kernel Gram matrix (any kernel, n <= 20000);
    * ``kl`` - truncated closed-form eigenexpansion (``bm``/``bb`` only),
      keeping enough terms that the omitted variance is below 1e-6 of the
      total path variance.

    Draw order: path coefficients first (one block, component-major), then
    the noise block, so both backends consume the stream identically.
    """
    sigma = check_symmetric(sigma)
    d = sigma.shape[0]
    if n < 2:
        raise ValueError("need at least 2 grid points")
    if eta2 < 0.0:
        raise ValueError("noise variance must be >= 0")
    times = np.arange(1, n + 1, dtype=float) / n
    root_sigma = psd_sqrt(sigma)

    if backend == "dense":
        if n > 20000:
            raise ValueError("dense backend is limited to n <= 20000")
        kf = kernel_function(kernel, **kernel_params)
        gram = kf(times[:, None], times[None, :])
        try:
            factor = np.linalg.cholesky(gram)
        except np.linalg.LinAlgError:
            w, q = np.linalg.eigh(gram)
            if w[0] < -1e-10 * max(w[-1], 1.0):
                raise ValueError("kernel Gram matrix is not PSD")
            factor = q * np.sqrt(np.clip(w, 0.0, None))
        g = factor @ rng.standard_normal((n, d))
    elif backend == "kl":
        kf = kernel_function(kernel, **kernel_params)
        total_var = float(np.mean(kf(times, times)))
        lam, phi = _kl_basis(kernel, times, total_var)
        coeff = rng.standard_normal((lam.size, d))
        g = phi @ (np.sqrt(lam)[:, None] * coeff)
    else:
        raise ValueError(f"unknown backend {backend!r}")

    signal = g @ root_sigma
    noise = math.sqrt(eta2) * rng.standard_normal((n, d)) if eta2 > 0.0 else 0.0
    return DiscreteSample(
        values=signal + noise,
        times=times,
        sigma=sigma,
        eta2=float(eta2),
        kernel=kernel,
        lineage=lineage,
    )


def _basis_cell_integrals(basis: str, n: int, p_max: int) -> np.ndarray:
    """Exact integrals of the basis functions over the grid cells ((i-1)/n, i/n]."""
    edges = np.arange(0, n + 1, dtype=float) / n
    p = np.arange(1, p_max + 1, dtype=float)
    if basis == "bm":
        freq = (p - 0.5) * math.pi
    elif basis == "bb":
        freq = p * math.pi
    else:
        raise ValueError(f"no closed-form eigenbasis for {basis!r}")
    # antiderivative of sqrt(2) sin(freq t) is -sqrt(2) cos(freq t) / freq
    anti = -math.sqrt(2.0) * np.cos(np.outer(freq, edges)) / freq[:, None]
    return anti[:, 1:] - anti[:, :-1]  # (P, n)


def extract_spectral_coeffs(
    sample: DiscreteSample, basis: str | None = None, p_max: int = 64
) -> SeqSample:
    """Project a uniform-grid sample onto the closed-form eigenbasis.

    Returns coefficients ``Y_p[j] = sum_i Y_i[j] int_((i-1)/n, i/n] phi_p``,
    computed with the exact antiderivative of phi_p.  As n grows their law
    approaches the sequence model with the matching spectrum.
    """
    basis = basis or sample.kernel
    weights = _basis_cell_integrals(basis, sample.n, p_max)
    return SeqSample(values=weights @ sample.values, p_max=int(p_max), lineage=sample.lineage)


# ---------------------------------------------------------------------------
# asynchronous path sampler and block machinery
# ---------------------------------------------------------------------------


def sample_async(
    block_model: BlockModel,
    schedule: ObservationSchedule,
    rng: np.random.Generator,
    path_grid_size: int | None = None,
    lineage: str = "",
) -> TickSeries:
    """Simulate asynchronous noisy ticks of the block-model diffusion.

    The latent path is an Euler sum of ``Sigma_m^(1/2)(s) dB`` on a fine
    uniform grid (piecewise-constant local covariance), read off at each
    component's schedule times, plus independent N(0, eta_j^2) noise.

    Draw order: the shared path increments first, then noise component by
    component; two schedules driven by the same substream therefore share
    the latent path.
    """
    if schedule.d != block_model.d:
        raise ValueError("schedule and block model dimensions differ")
    n_max = max(schedule.n_per_component)
    grid_n = int(path_grid_size) if path_grid_size is not None else 8 * n_max
    if grid_n < 4 * n_max:
        raise ValueError("path grid must have at least 4 x max_j n_j points")

    m, d = block_model.m, block_model.d
    roots = np.stack([psd_sqrt(block_model.sigmas[k]) for k in range(m)])  # (m, d, d)
    dt = 1.0 / grid_n
    grid_t = np.arange(grid_n, dtype=float) * dt  # left endpoints of the steps
    block_of = np.minimum((grid_t * m).astype(int), m - 1)

    db = math.sqrt(dt) * rng.standard_normal((grid_n, d))
    dx = np.einsum("gij,gj->gi", roots[block_of], db)
    x = np.vstack([np.zeros((1, d)), np.cumsum(dx, axis=0)])  # values at i/grid_n

    times, values = [], []
    for j in range(d):
        tj = schedule.times(j)
        idx = np.clip(np.floor(tj * grid_n + 1e-12).astype(int), 0, grid_n)
        obs = x[idx, j] + schedule.eta[j] * rng.standard_normal(tj.size)
        times.append(tj)
        values.append(obs)
    return TickSeries(times=tuple(times), values=tuple(values), lineage=lineage)


def sample_block_sequence(
    block_model: BlockModel, p_max: int, rng: np.random.Generator, lineage: str = ""
) -> BlockSeqSample:
    """Draw independent Y_pk ~ N(0, Sigma_k lam_mp + Xi_k^2 / n_min).

    Blocks are filled in order k = 0..m-1, each with one (p_max, d) normal
    block, so the stream layout is fixed by (m, p_max, d).
    """
    if p_max < 1:
        raise ValueError("p_max must be >= 1")
    m, d = block_model.m, block_model.d
    lam = np.atleast_1d(block_model.spectrum.eigenvalue(np.arange(1, p_max + 1)))
    out = np.empty((m, p_max, d))
    for k in range(m):
        xi = np.sqrt(block_model.xi2[k])
        white = block_model.sigmas[k] / np.outer(xi, xi)
        s, v = np.linalg.eigh(white)
        s = np.clip(s, 0.0, None)
        z = rng.standard_normal((p_max, d))
        scale = np.sqrt(lam[:, None] * s[None, :] + 1.0 / block_model.n_min)
        out[k] = (scale * (z @ v)) @ v.T * xi[None, :]
    return BlockSeqSample(values=out, p_max=int(p_max), lineage=lineage)


def block_coeffs_from_ticks(
    ticks: TickSeries, block_model: BlockModel, p_max: int
) -> BlockSeqSample:
    """Project tick series onto the per-block cosine basis.

    Each component is interpolated as the step function taking value
    ``Y_(i,j)`` on ``(t_(i-1,j), t_(i,j)]`` (the value observed at the right
    edge of its own sampling cell), and integrated exactly against
    ``phi_pk(t) = sqrt(2m) cos(p pi (t m - k))`` restricted to the block.

    A block that contains fewer than ``2 p_max`` ticks of some component is
    reported as under-resolved.
    """
    m, d = block_model.m, block_model.d
    if ticks.d != d:
        raise ValueError("tick series dimension does not match the block model")
    p = np.arange(1, p_max + 1, dtype=float)
    out = np.zeros((m, p_max, d))

    for j in range(d):
        tj = ticks.times[j]
        yj = ticks.values[j]
        edges = np.concatenate([[0.0], tj])  # step cells (edges[i], edges[i+1]]
        counts, _ = np.histogram(tj, bins=np.arange(m + 1) / m)
        short = np.nonzero(counts < 2 * p_max)[0]
        if short.size:
            raise ValueError(
                f"component {j}: under-resolved blocks {short.tolist()} "
                f"(need >= {2 * p_max} ticks per block)"
            )
        for k in range(m):
            lo, hi = k / m, (k + 1) / m
            a = np.clip(edges[:-1], lo, hi)
            b = np.clip(edges[1:], lo, hi)
            keep = b > a
            if not np.any(keep):
                continue
            a, b, y = a[keep], b[keep], yj[keep]
            # antiderivative of sqrt(2m) cos(p pi (tm - k)) is
            # sqrt(2m) sin(p pi (tm - k)) / (p pi m)
            coef = math.sqrt(2.0 * m) / (p * math.pi * m)
            seg = np.sin(np.outer(p * math.pi, b * m - k)) - np.sin(
                np.outer(p * math.pi, a * m - k)
            )
            out[k, :, j] = coef * (seg @ y)
    return BlockSeqSample(values=out, p_max=int(p_max), lineage=ticks.lineage)
