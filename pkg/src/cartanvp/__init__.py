"""Variational Cartan ideals on fibered coordinate charts.

Given a k-form theta (or the one-form factors of its differential) on a
bundle chart, the package builds the variational ideal, its characteristic
distribution, the critical-section PDE system, and reconstructs critical
sections numerically by integrating characteristic vector fields.
"""

from . import (
    symexpr,
    forms,
    linalg,
    ideals,
    decomp,
    varprin,
    flows,
    liouville,
    specio,
    fixtures,
)

__version__ = "0.1.0"

__all__ = [
    "symexpr",
    "forms",
    "linalg",
    "ideals",
    "decomp",
    "varprin",
    "flows",
    "liouville",
    "specio",
    "fixtures",
]
