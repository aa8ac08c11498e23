"""Spectral covariance estimation for noisy, discretely observed Gaussian processes.

Subpackages by concern:

* :mod:`speccov.matcore` - vectorisation, Kronecker products, symmetriser.
* :mod:`speccov.spectra` - eigenvalue models, balance indices, rates.
* :mod:`speccov.fisher` - per-frequency, windowed and asymptotic information.
* :mod:`speccov.simulate` - sequence, discrete-grid and asynchronous samplers.
* :mod:`speccov.estimate` - per-frequency, oracle, adaptive and block estimators.
* :mod:`speccov.lan` - log-likelihood ratios and equivalence diagnostics.
* :mod:`speccov.bench` - seeded Monte Carlo experiments, reports, persistence.
* :mod:`speccov.cli` - the ``speccov`` command-line harness.
"""

__version__ = "0.1.0"

from . import bench, estimate, fisher, lan, matcore, simulate, spectra, streams  # noqa: F401
