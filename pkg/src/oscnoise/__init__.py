"""Closed-form phase-noise analysis for oscillator-based random number
generators.

Accumulated oscillator phase is modelled as a mixture of self-similar
power-law Gaussian processes (white frequency noise at Hurst exponent
1/2, flicker at 1).  On top of that model the package provides, in
closed form: covariance and exact simulation (:mod:`oscnoise.fbm`),
time-varying and averaged spectra (:mod:`oscnoise.spectrum`), leftover
uncertainty after full leakage of the phase history
(:mod:`oscnoise.leakage`), worst-case bit bias and min-entropy of
threshold-sampled bits (:mod:`oscnoise.entropy`), and calibration of the
noise coefficients from measured traces via second-difference statistics
(:mod:`oscnoise.allan`).  ``oscnoise.cli`` exposes all of it as a
command-line tool.
"""

from . import allan, cli, entropy, fbm, leakage, specfun, spectrum
from .allan import AllanCurve, FitResult
from .cli import PhaseTrace, read_trace, write_trace
from .entropy import SecurityReport, WrappedGaussian
from .errors import (
    ConvergenceError,
    DecompositionError,
    DomainError,
    InsufficientDataError,
    NoSolutionError,
    OscNoiseError,
    TraceFormatError,
)
from .fbm import HurstExponent, NoiseMixture, OscillatorConfig, TimeGrid
from .specfun import Tolerance

__version__ = "0.1.0"

__all__ = [
    "AllanCurve",
    "ConvergenceError",
    "DecompositionError",
    "DomainError",
    "FitResult",
    "HurstExponent",
    "InsufficientDataError",
    "NoSolutionError",
    "NoiseMixture",
    "OscNoiseError",
    "OscillatorConfig",
    "PhaseTrace",
    "SecurityReport",
    "TimeGrid",
    "Tolerance",
    "TraceFormatError",
    "WrappedGaussian",
    "allan",
    "cli",
    "entropy",
    "fbm",
    "leakage",
    "read_trace",
    "specfun",
    "spectrum",
    "write_trace",
    "__version__",
]
