"""Eigenvalue models for the signal covariance operator.

A :class:`Spectrum` is a strictly positive, non-increasing eigenvalue
sequence ``lam(p)`` that varies regularly at infinity with index ``-delta``
(``delta > 1``), identified with its continuous interpolation so that the
balance equation ``lam(p_n) = 1/n`` has a real solution.  Built-in models
cover standard processes via their leading-term eigenvalues:

========================  ============================  ===========
model                     lam(p)                        delta
========================  ============================  ===========
Brownian motion           (pi (p - 1/2))^-2             2
Brownian bridge           (pi p)^-2                     2
Ornstein-Uhlenbeck(beta)  2 beta / (pi p)^2             2
fractional BM (Hurst h)   c_h p^-(2h+1)                 2h + 1
m-fold integrated BM      (pi p)^-(2m+2)                2m + 2
power law (c, delta)      c p^-delta                    delta
tabulated + tail          table, then c p^-delta        delta
========================  ============================  ===========

with ``c_h = sin(pi h) Gamma(2h + 1) / pi^(2h+1)``.

The rate is normalised as a pure power ``r_n = n^(-1/(2 delta))`` and all
multiplicative constants are folded into the finite-n constant
``zeta(n) = n^(-1/delta) p_n``, whose limit exists for every built-in
(the slowly varying part of each model converges to a constant).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Spectrum",
    "RateInfo",
    "RegVarReport",
    "balance_index",
    "rate_and_zeta",
    "check_regular_variation",
]

_SHIFTED_KINDS = {"bm"}  # lam(p) defined for p > 1/2 rather than p > 0


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalue model with regular-variation metadata.

    Attributes
    ----------
    kind : str
        One of ``bm``, ``bb``, ``ou``, ``fbm``, ``ibm``, ``power``, ``table``.
    delta : float
        Regular-variation index (> 1); ``lam(ap)/lam(p) -> a^-delta``.
    c : float
        Leading constant, ``lam(p) p^delta -> c``.
    """

    kind: str
    delta: float
    c: float
    hurst: float | None = None
    beta: float | None = None
    m_fold: int | None = None
    table: tuple[float, ...] | None = None
    unvalidated_regime: bool = False

    def __post_init__(self):
        if self.delta <= 1.0:
            raise ValueError(f"regular-variation index must exceed 1, got {self.delta}")
        if self.c <= 0.0:
            raise ValueError("leading constant must be positive")

    # -- constructors ------------------------------------------------------

    @classmethod
    def brownian_motion(cls) -> "Spectrum":
        return cls(kind="bm", delta=2.0, c=math.pi**-2)

    @classmethod
    def brownian_bridge(cls) -> "Spectrum":
        return cls(kind="bb", delta=2.0, c=math.pi**-2)

    @classmethod
    def ornstein_uhlenbeck(cls, beta: float = 0.5) -> "Spectrum":
        if beta <= 0.0:
            raise ValueError("mean-reversion speed must be positive")
        return cls(kind="ou", delta=2.0, c=2.0 * beta / math.pi**2, beta=beta)

    @classmethod
    def fractional(cls, hurst: float, allow_unvalidated: bool = False) -> "Spectrum":
        """Fractional Brownian motion with Hurst index in (0, 1).

        Indices at or below 1/4 sit outside the regime in which the spectral
        model is a validated stand-in for discrete observations; they are
        admitted only with ``allow_unvalidated=True`` and carry a flag.
        """
        if not 0.0 < hurst < 1.0:
            raise ValueError("Hurst index must lie in (0, 1)")
        unvalidated = hurst <= 0.25
        if unvalidated and not allow_unvalidated:
            raise ValueError(
                "Hurst index <= 1/4 is outside the validated regime; "
                "pass allow_unvalidated=True to proceed anyway"
            )
        delta = 2.0 * hurst + 1.0
        c = math.sin(math.pi * hurst) * math.gamma(2.0 * hurst + 1.0) / math.pi**delta
        return cls(kind="fbm", delta=delta, c=c, hurst=hurst, unvalidated_regime=unvalidated)

    @classmethod
    def integrated_bm(cls, m_fold: int = 1) -> "Spectrum":
        if m_fold < 1:
            raise ValueError("fold count must be >= 1")
        delta = 2.0 * m_fold + 2.0
        return cls(kind="ibm", delta=delta, c=math.pi**-delta, m_fold=m_fold)

    @classmethod
    def power_law(cls, c: float, delta: float) -> "Spectrum":
        return cls(kind="power", delta=float(delta), c=float(c))

    @classmethod
    def tabulated(cls, values, c: float, delta: float) -> "Spectrum":
        """Explicit head values with a ``c p^-delta`` tail beyond the table."""
        vals = tuple(float(v) for v in values)
        if not vals:
            raise ValueError("table must be non-empty")
        if any(v <= 0.0 for v in vals):
            raise ValueError("eigenvalues must be strictly positive")
        if any(vals[i + 1] > vals[i] for i in range(len(vals) - 1)):
            raise ValueError("eigenvalues must be non-increasing")
        tail_start = float(c) * float(len(vals) + 1) ** -float(delta)
        if tail_start > vals[-1] * (1.0 + 1e-12):
            raise ValueError("tail power law exceeds last table value")
        return cls(kind="table", delta=float(delta), c=float(c), table=vals)

    # -- evaluation --------------------------------------------------------

    @property
    def p_min(self) -> float:
        """Infimum of the continuous interpolation's domain."""
        return 0.5 if self.kind in _SHIFTED_KINDS else 0.0

    @property
    def zeta_limit(self) -> float:
        """Limit of the rate constant zeta(n) = n^(-1/delta) p_n.

        Equals ``c^(1/delta)`` under the pure-power rate normalisation,
        because the slowly varying part of every model here converges to
        the leading constant.
        """
        return self.c ** (1.0 / self.delta)

    def lam(self, p) -> np.ndarray | float:
        """Continuous interpolation of the eigenvalue sequence at real p."""
        p_arr = np.asarray(p, dtype=float)
        if np.any(p_arr <= self.p_min):
            raise ValueError(f"eigenvalue argument must exceed {self.p_min} for kind={self.kind}")
        if self.kind == "bm":
            out = (math.pi * (p_arr - 0.5)) ** -2.0
        elif self.kind == "table":
            out = self._lam_table(p_arr)
        else:
            out = self.c * p_arr**-self.delta
        return out if isinstance(p, np.ndarray) else float(out)

    def _lam_table(self, p_arr: np.ndarray) -> np.ndarray:
        vals = np.asarray(self.table, dtype=float)
        k = len(vals)
        out = self.c * np.maximum(p_arr, 1.0) ** -self.delta
        inside = p_arr <= k
        if np.any(inside):
            # log-linear interpolation through the table nodes (p=1..k)
            grid = np.arange(1, k + 1, dtype=float)
            pi = np.clip(p_arr[inside], 1.0, float(k))
            out_in = np.exp(np.interp(np.log(pi), np.log(grid), np.log(vals)))
            out = np.array(out, copy=True)
            out[inside] = out_in
        return out

    def eigenvalue(self, p) -> np.ndarray | float:
        """Eigenvalue at integer index p >= 1 (scalar or array)."""
        p_arr = np.asarray(p)
        if np.any(p_arr < 1):
            raise ValueError("eigenvalue index must be >= 1")
        return self.lam(p)

    def tail_envelope_constant(self, p_from: float) -> float:
        """Constant c* with lam(p) <= c* p^-delta for all p >= p_from.

        Exact for the built-ins (their slowly varying parts are
        non-increasing beyond p = 1) and for tabulated tails.
        """
        if p_from <= self.p_min:
            raise ValueError("envelope start must lie in the spectrum domain")
        if self.kind == "table":
            vals = np.asarray(self.table, dtype=float)
            k = len(vals)
            cands = [self.c]
            lo = max(1, int(np.ceil(p_from)))
            if lo <= k:
                grid = np.arange(lo, k + 1, dtype=float)
                cands.append(float(np.max(vals[lo - 1 :] * grid**self.delta)))
            return max(cands)
        return float(self.lam(p_from)) * p_from**self.delta


@dataclass(frozen=True)
class RateInfo:
    """Balance index, rate and rate constant at a given sample size.

    ``lam(p_n) = 1/n`` defines the balance index; ``r_n = n^(-1/(2 delta))``
    is the pure-power rate and ``zeta = n^(-1/delta) p_n`` the finite-n rate
    constant whose limit enters the asymptotic information.
    ``zeta_trend`` reports zeta at n, 10n and 100n as a convergence check.
    """

    n: int
    p_n: float
    r_n: float
    zeta: float
    zeta_trend: tuple[tuple[int, float], ...] = field(default=())


def balance_index(spectrum: Spectrum, n: int) -> float:
    """Solve ``lam(p) = 1/n`` on the continuous interpolation.

    Closed form for the built-in models; bisection on [1, n] (relative
    tolerance 1e-12) for tabulated spectra.
    """
    if n < 2:
        raise ValueError("sample size must be >= 2")
    target = 1.0 / float(n)
    if spectrum.kind == "bm":
        return math.sqrt(float(n)) / math.pi + 0.5
    if spectrum.kind != "table":
        return (spectrum.c * float(n)) ** (1.0 / spectrum.delta)

    lo, hi = 1.0, float(n)
    f_lo, f_hi = spectrum.lam(lo) - target, spectrum.lam(hi) - target
    if f_lo < 0.0 or f_hi > 0.0:
        raise ValueError("balance equation has no root in [1, n]; malformed spectrum")
    while hi - lo > 1e-12 * hi:
        mid = 0.5 * (lo + hi)
        if spectrum.lam(mid) - target > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def rate_and_zeta(spectrum: Spectrum, n: int) -> RateInfo:
    """Rate ``r_n`` and rate constant ``zeta(n)``, with a convergence trend."""
    if n < 2:
        raise ValueError("sample size must be >= 2")
    p_n = balance_index(spectrum, n)
    r_n = float(n) ** (-0.5 / spectrum.delta)
    zeta = float(n) ** (-1.0 / spectrum.delta) * p_n

    trend = []
    for mult in (1, 10, 100):
        nk = n * mult
        trend.append((nk, float(nk) ** (-1.0 / spectrum.delta) * balance_index(spectrum, nk)))
    return RateInfo(n=n, p_n=p_n, r_n=r_n, zeta=zeta, zeta_trend=tuple(trend))


@dataclass(frozen=True)
class RegVarReport:
    """Observed regular-variation ratios at a probe index."""

    p_probe: int
    tol: float
    ratios: tuple[tuple[float, float, float], ...]  # (a, observed, target)
    squared_ratios: tuple[tuple[float, float, float], ...]
    inverse_ratios: tuple[tuple[float, float, float], ...]
    passed: bool


def check_regular_variation(
    spectrum: Spectrum,
    a_values=(0.5, 2.0, 5.0),
    p_probe: int = 10**6,
    tol: float = 1e-3,
) -> RegVarReport:
    """Probe ``lam(floor(a p))/lam(p) -> a^-delta`` and its closure properties.

    Also checks that ``lam^2`` and ``1/lam`` vary regularly with indices
    ``-2 delta`` and ``+delta``.
    """
    if p_probe < 10:
        raise ValueError("probe index too small")
    if any(a <= 0 for a in a_values):
        raise ValueError("scale factors must be positive")

    lam_p = float(spectrum.lam(p_probe))
    rows, rows_sq, rows_inv = [], [], []
    ok = True
    for a in a_values:
        lam_ap = float(spectrum.lam(max(1, math.floor(a * p_probe))))
        ratio = lam_ap / lam_p
        target = float(a) ** -spectrum.delta
        rows.append((float(a), ratio, target))
        rows_sq.append((float(a), ratio**2, float(a) ** (-2.0 * spectrum.delta)))
        rows_inv.append((float(a), 1.0 / ratio, float(a) ** spectrum.delta))
        ok &= abs(ratio - target) < tol
        ok &= abs(ratio**2 - target**2) < tol * (1.0 + 2.0 * target)
        ok &= abs(1.0 / ratio - 1.0 / target) < tol * (1.0 + 1.0 / target**2)
    return RegVarReport(
        p_probe=int(p_probe),
        tol=float(tol),
        ratios=tuple(rows),
        squared_ratios=tuple(rows_sq),
        inverse_ratios=tuple(rows_inv),
        passed=bool(ok),
    )
