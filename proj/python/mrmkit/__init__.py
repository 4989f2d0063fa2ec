"""Multifractal random measures: exponents, samplers and KPZ checks."""

from ._core import (
    FractalSet,
    LevyTriple,
    NumericalError,
    ValidationError,
    __version__,
    box_count,
    box_dimension,
    check_nondegenerate,
    commands,
    cone_mass,
    cone_overlap,
    cone_overlap_quadrature,
    derive_seed,
    estimate_zeta,
    green_disk,
    kpz_solve,
    kpz_verify_1d,
    kpz_verify_2d,
    lognormal,
    make_cantor,
    make_full_interval,
    make_point_set,
    normalize,
    run,
    sample_field,
    triple,
    triple_from_config,
    zeta2d,
    zeta2d_mass_consistent,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
