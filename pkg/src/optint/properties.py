"""Scalar state properties expressed as functions of outcome probabilities.

Each property carries its own value range; everything downstream (content
curves, likelihoods, intervals) works against that range rather than a
fixed [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .statespace import UnphysicalInputError, tat_expectations

__all__ = [
    "PropertyFn",
    "fidelity_qubit",
    "purity_qubit",
    "chsh_fixed",
    "chsh_optimized",
    "bloch_fidelity",
    "property_by_name",
    "PROPERTIES",
]

SQRT8 = math.sqrt(8.0)
_RADICAND_TOL = 1e-12


@dataclass(frozen=True)
class PropertyFn:
    """A named scalar property of the state.

    ``fn`` maps probability vectors (batched over leading axes) to values in
    ``frange``; ``symmetric_prior`` marks properties whose induced prior
    density is symmetric about the middle of the range, which the curve
    fitting exploits.
    """

    name: str
    fn: Callable[[np.ndarray], np.ndarray]
    frange: tuple[float, float]
    n_outcomes: int
    symmetric_prior: bool = False

    def __call__(self, p: np.ndarray) -> np.ndarray:
        return self.fn(p)

    @property
    def width(self) -> float:
        return self.frange[1] - self.frange[0]


def fidelity_qubit(p: np.ndarray) -> np.ndarray:
    """Fidelity with the +z pure state from tetrahedron probabilities.

    Equals sqrt(1 - 2 p_1); tiny negative radicands from rounding are
    clamped, anything beyond -1e-12 signals an unphysical input.
    """
    p = np.asarray(p, dtype=float)
    rad = 1.0 - 2.0 * p[..., 0]
    if np.any(rad < -_RADICAND_TOL):
        raise UnphysicalInputError("first outcome probability exceeds 1/2")
    return np.sqrt(np.clip(rad, 0.0, None))


def purity_qubit(p: np.ndarray) -> np.ndarray:
    """Normalized purity 2 tr(rho^2) - 1 = 12 sum_k p_k^2 - 3 (tetrahedron)."""
    p = np.asarray(p, dtype=float)
    return 12.0 * np.square(p).sum(axis=-1) - 3.0


def chsh_fixed(p: np.ndarray) -> np.ndarray:
    """CHSH combination for the standard x-z analyzer choice.

    Linear in the trine/anti-trine probabilities:
    sqrt(8) * [3 (p_11 + p_22 + p_33) - 1].
    """
    p = np.asarray(p, dtype=float)
    diag = p[..., 0] + p[..., 4] + p[..., 8]
    return SQRT8 * (3.0 * diag - 1.0)


def chsh_optimized(p: np.ndarray) -> np.ndarray:
    """CHSH combination maximized over analyzer directions in the x-z planes.

    Equals twice the root-sum-square of the four probed two-qubit
    correlations; computed from the quadratic form in the probabilities.
    """
    p = np.asarray(p, dtype=float)
    m = p.reshape(p.shape[:-1] + (3, 3))
    rows = m.sum(axis=-1)
    cols = m.sum(axis=-2)
    quad = (1.0 + 9.0 * np.square(p).sum(axis=-1)
            - 3.0 * (np.square(rows).sum(axis=-1) + np.square(cols).sum(axis=-1)))
    if np.any(quad < -_RADICAND_TOL):
        raise UnphysicalInputError("negative radicand in optimized CHSH quantity")
    return 4.0 * np.sqrt(np.clip(quad, 0.0, None))


def chsh_optimized_from_correlations(p: np.ndarray) -> np.ndarray:
    """Same quantity via the Pauli correlations; cross-check for the quadratic form."""
    _, y = tat_expectations(p)
    return 2.0 * np.sqrt(np.square(y).sum(axis=-1))


def bloch_fidelity(r: np.ndarray, t: np.ndarray) -> float:
    """Fidelity of two qubit states given their Bloch vectors.

    Helper for mixed targets; it is bounded below by sqrt((1-|t|)/2).  The
    pipeline property for the tetrahedron uses :func:`fidelity_qubit`.
    """
    r = np.asarray(r, dtype=float)
    t = np.asarray(t, dtype=float)
    rn, tn = np.linalg.norm(r), np.linalg.norm(t)
    if rn > 1.0 + 1e-9 or tn > 1.0 + 1e-9:
        raise UnphysicalInputError("Bloch vectors must have length <= 1")
    inner = 0.5 * (1.0 + r @ t) + 0.5 * math.sqrt(max(1.0 - min(rn, 1.0) ** 2, 0.0)) \
        * math.sqrt(max(1.0 - min(tn, 1.0) ** 2, 0.0))
    return math.sqrt(max(inner, 0.0))


PROPERTIES: dict[str, PropertyFn] = {
    "fidelity": PropertyFn("fidelity", fidelity_qubit, (0.0, 1.0), 4),
    "purity": PropertyFn("purity", purity_qubit, (0.0, 1.0), 4),
    "chsh": PropertyFn("chsh", chsh_fixed, (-SQRT8, SQRT8), 9, symmetric_prior=True),
    "chsh_opt": PropertyFn("chsh_opt", chsh_optimized, (0.0, SQRT8), 9),
}


def property_by_name(name: str) -> PropertyFn:
    try:
        return PROPERTIES[name]
    except KeyError:
        raise ValueError(f"unknown property {name!r}; choose from {sorted(PROPERTIES)}") from None
