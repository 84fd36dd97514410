"""Hermite-Sobolev lifting of finite-dimensional SDEs.

Thin bindings over the C++ core. Vectors carry their basis and a
regularity tag; norms are computed on demand at any index.
"""

from ._hslift import (
    Basis,
    ConfigError,
    NumericalError,
    SobolevVector,
    TagMismatch,
    __version__,
    b_bar,
    correspondence,
    derivative_matrix,
    expand,
    hermite_functions,
    ks_two_sample,
    multiplication_matrix,
    named_vector,
    pairing,
    partial_sums,
    quartic_cdf,
    quartic_density,
    reconstruct,
    sample_quartic,
    selftest,
    set_c_check,
    sigma_bar,
    sobolev_norm,
    tau_poly_bound,
    translate,
    translation_matrix,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
