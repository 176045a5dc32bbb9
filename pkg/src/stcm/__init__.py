"""Space-time channel modulation: encoders, ML detectors, error-rate analysis
and a reproducible Monte Carlo BER engine."""

from .core import (
    ConfigurationError,
    Constellation,
    EnumerationTooLarge,
    Kind,
    build_constellation,
    q_function,
)
from .codec import Scheme, SchemeConfig, decode, encode, enumerate_codewords

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "Constellation",
    "EnumerationTooLarge",
    "Kind",
    "Scheme",
    "SchemeConfig",
    "build_constellation",
    "decode",
    "encode",
    "enumerate_codewords",
    "q_function",
]
