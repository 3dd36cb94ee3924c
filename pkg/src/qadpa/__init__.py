"""Synthesis and verification tools for a quasi-asymmetric Doherty PA.

Submodules
----------
rfcore
    Impedances, transmission lines, ABCD algebra, S-parameter conversion.
solver
    Nodal AC analysis of netlists producing N-port S-parameters.
matching
    Quarter-wave, two-section matching + phase synthesis, pi-equivalents.
wilkinson
    Equal/unequal Wilkinson divider and combiner design.
doherty
    Behavioral back-off, split, combining and harmonic models.
touchstone, netlist_io, cli
    File formats and the command-line interface.
"""
from qadpa.errors import (
    DegenerateSignalError,
    FrequencyMismatchError,
    ParameterError,
    ParseError,
    QadpaError,
    SingularityError,
)

__version__ = "0.1.0"

__all__ = [
    "DegenerateSignalError",
    "FrequencyMismatchError",
    "ParameterError",
    "ParseError",
    "QadpaError",
    "SingularityError",
    "__version__",
]
