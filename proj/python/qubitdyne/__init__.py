"""Qubit-collision homodyne and heterodyne detection simulator."""

from ._core import (
    ConfigError,
    NumericalError,
    TruncationError,
    collection_efficiency,
    default_n_fock,
    fidelity,
    filter_constant,
    ks_homodyne,
    measurement_kraus,
    normalize_config,
    phase_estimation,
    prepare_state,
    preset_config,
    preset_names,
    quadrature_pdf,
    reconstruct,
    simulate_heterodyne,
    simulate_homodyne,
    wigner,
)

__version__ = "0.1.0"
