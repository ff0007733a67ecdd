"""Numerical laboratory for tailored OAM Bell-CHSH correlations and fair sampling."""
from .hilbert import (
    AnalyzerSpec,
    Convention,
    OAMVector,
    SpectrumModel,
    analyzer_state,
    coincidence_probability,
    inner_product,
    orthogonal_state,
    sector_state,
    two_photon_amplitude,
)

__version__ = "0.1.0"
