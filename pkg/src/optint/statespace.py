"""Quantum states, measurements, and the constrained probability simplex.

The outcome probabilities of a fixed measurement serve as the coordinates of
the quantum state.  This module provides the two measurements used by the
pipelines (the four-outcome qubit tetrahedron and the nine-outcome two-qubit
trine/anti-trine product), the Born rule, physicality tests that decide
whether a probability vector belongs to an actual quantum state, and
multinomial click simulation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "HERMITICITY_TOL",
    "STATE_EIG_TOL",
    "Q_BISECT_TOL",
    "UnphysicalInputError",
    "DensityMatrix",
    "Pom",
    "Counts",
    "PhysicalityResult",
    "Scheme",
    "TETRAHEDRON",
    "TAT",
    "unconstrained_scheme",
    "scheme_by_name",
    "TETRAHEDRON_DIRECTIONS",
    "TRINE_DIRECTIONS",
    "tetrahedron_pom",
    "tat_pom",
    "born_probabilities",
    "bloch_from_probabilities",
    "reconstruct_qubit",
    "tat_expectations",
    "tat_probabilities",
    "tat_completion_matrix",
    "q_interval",
    "physicality",
    "physicality_batch",
    "simulate_clicks",
    "log_point_likelihood",
    "log_point_likelihood_batch",
    "validate_probabilities",
    "pom_to_json",
    "pom_from_json",
]

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-12
STATE_EIG_TOL = 1e-10  # eigenvalues >= -STATE_EIG_TOL count as physical
POM_PSD_TOL = 1e-10
POM_SUM_TOL = 1e-10
PROB_SUM_TOL = 1e-12
Q_BISECT_TOL = 1e-8

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
PAULIS = np.stack([PAULI_X, PAULI_Y, PAULI_Z])


class UnphysicalInputError(ValueError):
    """Raised when an input lies outside the physical state space."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class DensityMatrix:
    """A trace-one positive semidefinite operator.

    Validation tolerances: Hermiticity and trace to 1e-12, smallest
    eigenvalue no lower than -1e-10 (so boundary states such as pure states
    survive rounding).
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {m.shape}")
        if np.abs(m - m.conj().T).max() > HERMITICITY_TOL:
            raise UnphysicalInputError("matrix is not Hermitian within 1e-12")
        if abs(np.trace(m).real - 1.0) > TRACE_TOL or abs(np.trace(m).imag) > TRACE_TOL:
            raise UnphysicalInputError("matrix trace differs from 1 by more than 1e-12")
        if np.linalg.eigvalsh(m).min() < -STATE_EIG_TOL:
            raise UnphysicalInputError("matrix has an eigenvalue below -1e-10")
        object.__setattr__(self, "matrix", _readonly(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix).min())

    @classmethod
    def from_bloch(cls, r: Sequence[float]) -> "DensityMatrix":
        """Qubit state (1 + r.sigma)/2 for a Bloch vector with |r| <= 1."""
        r = np.asarray(r, dtype=float)
        m = 0.5 * (np.eye(2, dtype=complex) + np.tensordot(r, PAULIS, axes=1))
        return cls(m)

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityMatrix":
        return cls(np.eye(dim, dtype=complex) / dim)


@dataclass(frozen=True)
class Pom:
    """A probability-operator measurement: PSD outcomes summing to identity."""

    outcomes: np.ndarray  # (K, d, d) complex
    labels: tuple[str, ...]

    def __post_init__(self):
        ops = np.asarray(self.outcomes, dtype=complex)
        if ops.ndim != 3 or ops.shape[1] != ops.shape[2]:
            raise ValueError(f"outcomes must be a stack of square matrices, got {ops.shape}")
        labels = tuple(str(s) for s in self.labels)
        if len(labels) != ops.shape[0]:
            raise ValueError("number of labels must match number of outcomes")
        if np.abs(ops - ops.conj().transpose(0, 2, 1)).max() > POM_PSD_TOL:
            raise ValueError("outcome operators must be Hermitian")
        for k in range(ops.shape[0]):
            if np.linalg.eigvalsh(ops[k]).min() < -POM_PSD_TOL:
                raise ValueError(f"outcome {k} is not positive semidefinite within 1e-10")
        if np.abs(ops.sum(axis=0) - np.eye(ops.shape[1])).max() > POM_SUM_TOL:
            raise ValueError("outcomes do not sum to the identity within 1e-10")
        object.__setattr__(self, "outcomes", _readonly(ops))
        object.__setattr__(self, "labels", labels)

    @property
    def n_outcomes(self) -> int:
        return self.outcomes.shape[0]

    @property
    def dim(self) -> int:
        return self.outcomes.shape[1]


@dataclass(frozen=True)
class Counts:
    """Click counts for the K outcomes of one measurement run."""

    n: tuple[int, ...]

    def __post_init__(self):
        n = tuple(int(v) for v in self.n)
        if any(v < 0 for v in n):
            raise ValueError("counts must be non-negative")
        object.__setattr__(self, "n", n)

    @property
    def total(self) -> int:
        return sum(self.n)

    def to_json(self) -> str:
        return json.dumps({"counts": list(self.n)})

    @classmethod
    def from_json(cls, text: str) -> "Counts":
        return cls(tuple(json.loads(text)["counts"]))


@dataclass(frozen=True)
class PhysicalityResult:
    """Outcome of a physicality test; ``weight`` is the constraint density
    up to normalization and vanishes exactly when the point is unphysical."""

    physical: bool
    weight: float
    detail: dict | None = None

    def __post_init__(self):
        if (self.weight == 0.0) != (not self.physical):
            raise ValueError("weight must be zero exactly when unphysical")


@dataclass(frozen=True)
class Scheme:
    """Measurement scheme: names the physicality rule for a K-outcome simplex.

    ``kind`` selects the rule: "tetrahedron" (qubit Bloch-ball test), "tat"
    (two-qubit completion test), or "unconstrained" (whole simplex allowed).
    Other measurements are accepted as data only; pass a ``checker`` callback
    mapping a probability vector to a PhysicalityResult, otherwise every
    point is rejected.
    """

    name: str
    n_outcomes: int
    kind: str
    checker: Callable[[np.ndarray], "PhysicalityResult"] | None = None


TETRAHEDRON = Scheme("tetrahedron", 4, "tetrahedron")
TAT = Scheme("tat", 9, "tat")


def unconstrained_scheme(n_outcomes: int) -> Scheme:
    """Scheme whose physical set is the full probability simplex."""
    return Scheme(f"simplex{n_outcomes}", int(n_outcomes), "unconstrained")


def scheme_by_name(name: str) -> Scheme:
    if name == "tetrahedron":
        return TETRAHEDRON
    if name == "tat":
        return TAT
    if name.startswith("simplex"):
        return unconstrained_scheme(int(name[len("simplex"):]))
    raise ValueError(f"unknown scheme {name!r}")


# ---------------------------------------------------------------------------
# Tetrahedron measurement (single qubit)
# ---------------------------------------------------------------------------

# Unit vectors normal to the faces of a symmetric tetrahedron, oriented so
# that outcome 1 points along -z and outcome 2 lies in the y-z plane.
TETRAHEDRON_DIRECTIONS = _readonly(np.array([
    [0.0, 0.0, -1.0],
    [0.0, math.sqrt(8.0) / 3.0, 1.0 / 3.0],
    [math.sqrt(2.0 / 3.0), -math.sqrt(2.0) / 3.0, 1.0 / 3.0],
    [-math.sqrt(2.0 / 3.0), -math.sqrt(2.0) / 3.0, 1.0 / 3.0],
]))


def tetrahedron_pom() -> Pom:
    """Four-outcome symmetric qubit measurement; each outcome has trace 1/2."""
    ops = 0.25 * (np.eye(2, dtype=complex)
                  + np.tensordot(TETRAHEDRON_DIRECTIONS, PAULIS, axes=1))
    return Pom(ops, tuple(str(k + 1) for k in range(4)))


def bloch_from_probabilities(p: np.ndarray) -> np.ndarray:
    """Bloch vector 3*sum_k p_k a_k implied by tetrahedron probabilities."""
    p = np.asarray(p, dtype=float)
    if p.shape[-1] != 4:
        raise ValueError("tetrahedron probabilities must have 4 entries")
    return 3.0 * p @ TETRAHEDRON_DIRECTIONS


def reconstruct_qubit(p: np.ndarray) -> DensityMatrix:
    """Invert the tetrahedron Born rule; round-trips physical probabilities.

    Raises UnphysicalInputError when the implied Bloch vector leaves the
    unit ball (beyond the 1e-10 eigenvalue tolerance).
    """
    r = bloch_from_probabilities(validate_probabilities(p, 4))
    norm = float(np.linalg.norm(r))
    if norm > 1.0 + 2.0 * STATE_EIG_TOL:
        raise UnphysicalInputError(f"Bloch vector has length {norm:.6f} > 1")
    return DensityMatrix.from_bloch(r if norm <= 1.0 else r / norm)


# ---------------------------------------------------------------------------
# Trine/anti-trine product measurement (two qubits)
# ---------------------------------------------------------------------------

# Trine unit vectors in the x-z plane: +z, then rotated by +-120 degrees.
TRINE_DIRECTIONS = _readonly(np.array([
    [0.0, 0.0, 1.0],
    [math.sqrt(3.0) / 2.0, 0.0, -0.5],
    [-math.sqrt(3.0) / 2.0, 0.0, -0.5],
]))


def tat_pom() -> Pom:
    """Nine-outcome product of a trine on qubit 1 and its reflection on qubit 2.

    Outcome [jj'] sits at flat index 3*(j-1) + j' - 1; labels are "11", "12",
    ..., "33".
    """
    eye = np.eye(2, dtype=complex)
    trine = (eye + np.tensordot(TRINE_DIRECTIONS, PAULIS, axes=1)) / 3.0
    antitrine = (eye - np.tensordot(TRINE_DIRECTIONS, PAULIS, axes=1)) / 3.0
    ops = [np.kron(trine[j], antitrine[jp]) for j in range(3) for jp in range(3)]
    labels = tuple(f"{j + 1}{jp + 1}" for j in range(3) for jp in range(3))
    return Pom(np.stack(ops), labels)


_TX = TRINE_DIRECTIONS[:, 0]
_TZ = TRINE_DIRECTIONS[:, 2]


def tat_expectations(p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Map trine/anti-trine probabilities to Pauli expectation values.

    Returns ``(x, y)`` where ``x = (<sx1>, <sz1>, <1sx>, <1sz>)`` holds the
    single-qubit expectations and ``y = (<sxsx>, <sxsz>, <szsx>, <szsz>)``
    the probed two-qubit correlations.  Accepts batches in the leading axes.
    """
    p = np.asarray(p, dtype=float)
    if p.shape[-1] != 9:
        raise ValueError("trine/anti-trine probabilities must have 9 entries")
    m = p.reshape(p.shape[:-1] + (3, 3))
    rows = m.sum(axis=-1)
    cols = m.sum(axis=-2)
    x = np.stack([
        2.0 * rows @ _TX,
        2.0 * rows @ _TZ,
        -2.0 * cols @ _TX,
        -2.0 * cols @ _TZ,
    ], axis=-1)
    y = np.stack([
        -4.0 * np.einsum("...jk,j,k->...", m, _TX, _TX),
        -4.0 * np.einsum("...jk,j,k->...", m, _TX, _TZ),
        -4.0 * np.einsum("...jk,j,k->...", m, _TZ, _TX),
        -4.0 * np.einsum("...jk,j,k->...", m, _TZ, _TZ),
    ], axis=-1)
    return x, y


def tat_probabilities(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Inverse of :func:`tat_expectations` (batch-friendly)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    shape = x.shape[:-1]
    p = np.empty(shape + (3, 3))
    for j in range(3):
        for jp in range(3):
            p[..., j, jp] = (1.0
                             + _TX[j] * x[..., 0] + _TZ[j] * x[..., 1]
                             - _TX[jp] * x[..., 2] - _TZ[jp] * x[..., 3]
                             - _TX[j] * _TX[jp] * y[..., 0]
                             - _TX[j] * _TZ[jp] * y[..., 1]
                             - _TZ[j] * _TX[jp] * y[..., 2]
                             - _TZ[j] * _TZ[jp] * y[..., 3]) / 9.0
    return p.reshape(shape + (9,))


def tat_completion_matrix(x: np.ndarray, y: np.ndarray, q: float | np.ndarray) -> np.ndarray:
    """Four-times-the-state as a function of the unprobed correlation q.

    The trine/anti-trine data fix eight Pauli expectations; the ninth,
    ``q = <(sx x sx)(sz x sz)>``, is free.  The returned real symmetric
    matrix is PSD for exactly those q that complete the data to a physical
    state.  Batched over leading axes of x, y (q broadcast).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    q = np.asarray(q, dtype=float)
    shape = np.broadcast_shapes(x.shape[:-1], y.shape[:-1], q.shape)
    m = np.zeros(shape + (4, 4))
    x1, x2, x3, x4 = (x[..., i] for i in range(4))
    y1, y2, y3, y4 = (y[..., i] for i in range(4))
    m[..., 0, 0] = 1.0 + x1 + x3 + y1
    m[..., 1, 1] = 1.0 - x1 + x3 - y1
    m[..., 2, 2] = 1.0 + x1 - x3 - y1
    m[..., 3, 3] = 1.0 - x1 - x3 + y1
    m[..., 0, 1] = m[..., 1, 0] = x2 + y3
    m[..., 0, 2] = m[..., 2, 0] = x4 + y2
    m[..., 0, 3] = m[..., 3, 0] = y4 - q
    m[..., 1, 2] = m[..., 2, 1] = y4 + q
    m[..., 1, 3] = m[..., 3, 1] = x4 - y2
    m[..., 2, 3] = m[..., 3, 2] = x2 - y3
    return m


# The completion matrix equals 4*rho, so state eigenvalue tolerances scale by 4.
_TAT_EIG_TOL = 4.0 * STATE_EIG_TOL


def _completion_min_eig(x, y, q):
    return np.linalg.eigvalsh(tat_completion_matrix(x, y, q)).min(axis=-1)


def q_interval(p: np.ndarray, tol: float = Q_BISECT_TOL) -> tuple[float, float] | None:
    """Feasible range of the unprobed correlation for trine/anti-trine data.

    The smallest eigenvalue of the completion matrix is concave in q, so the
    feasible set is an interval; its endpoints are located by bisection to
    ``tol``.  Returns None when no q in [-1, 1] works.
    """
    x, y = tat_expectations(validate_probabilities(p, 9))

    def mineig(q):
        return float(_completion_min_eig(x, y, q))

    # Locate a feasible point: coarse scan, then ternary search on the
    # concave eigenvalue curve if the scan misses a narrow window.
    grid = np.linspace(-1.0, 1.0, 17)
    vals = [mineig(q) for q in grid]
    best = int(np.argmax(vals))
    q_best, v_best = float(grid[best]), vals[best]
    if v_best < -_TAT_EIG_TOL:
        lo, hi = -1.0, 1.0
        for _ in range(80):
            m1 = lo + (hi - lo) / 3.0
            m2 = hi - (hi - lo) / 3.0
            if mineig(m1) < mineig(m2):
                lo = m1
            else:
                hi = m2
        q_best = 0.5 * (lo + hi)
        v_best = mineig(q_best)
        if v_best < -_TAT_EIG_TOL:
            return None

    def bisect(a, b):
        # invariant: feasible at b, infeasible (or boundary) at a
        while abs(b - a) > tol:
            mid = 0.5 * (a + b)
            if mineig(mid) >= -_TAT_EIG_TOL:
                b = mid
            else:
                a = mid
        return b

    q_lo = -1.0 if mineig(-1.0) >= -_TAT_EIG_TOL else bisect(-1.0, q_best)
    q_hi = 1.0 if mineig(1.0) >= -_TAT_EIG_TOL else bisect(1.0, q_best)
    return (float(q_lo), float(q_hi))


# --- vectorized feasibility via the determinant quartic ---------------------
#
# det(M(q)) is a quartic in q with unit leading coefficient; its real roots
# in [-1, 1] partition the range into cells on which the eigenvalue signs
# are constant.  One batched eigensolve at the cell midpoints then certifies
# which cells are feasible.  This path serves the sampler; the public
# physicality test keeps the bisection route above.

_CHEB_NODES = np.cos(np.pi * (2.0 * np.arange(5) + 1.0) / 10.0)
_VANDER_INV = np.linalg.inv(np.vander(_CHEB_NODES, 5, increasing=True))


def _q_interval_batch(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Batched feasible q-intervals: returns (lo, hi, feasible)."""
    n = x.shape[0]
    mats = tat_completion_matrix(x[:, None, :], y[:, None, :], _CHEB_NODES[None, :])
    dets = np.linalg.det(mats)  # (n, 5)
    coeff = dets @ _VANDER_INV.T  # c0..c4 with c4 == det of the q-part == 1
    comp = np.zeros((n, 4, 4))
    comp[:, 1, 0] = comp[:, 2, 1] = comp[:, 3, 2] = 1.0
    comp[:, :, 3] = -coeff[:, :4] / coeff[:, 4:5]
    roots = np.linalg.eigvals(comp)
    real = np.abs(roots.imag) <= 1e-7 * (1.0 + np.abs(roots.real))
    pts = np.where(real, roots.real, 2.0)  # park non-real roots outside [-1, 1]
    pts = np.clip(pts, -1.0, 1.0)
    bounds = np.sort(np.concatenate([np.full((n, 1), -1.0), pts, np.full((n, 1), 1.0)], axis=1), axis=1)
    mids = 0.5 * (bounds[:, :-1] + bounds[:, 1:])  # (n, 5) cell midpoints
    eigs = np.linalg.eigvalsh(tat_completion_matrix(x[:, None, :], y[:, None, :], mids))
    ok = (eigs.min(axis=-1) >= -_TAT_EIG_TOL) & (bounds[:, 1:] - bounds[:, :-1] > 0.0)
    feasible = ok.any(axis=1)
    first = np.argmax(ok, axis=1)
    last = ok.shape[1] - 1 - np.argmax(ok[:, ::-1], axis=1)
    lo = np.where(feasible, bounds[np.arange(n), first], 0.0)
    hi = np.where(feasible, bounds[np.arange(n), last + 1], 0.0)
    return lo, hi, feasible


def physicality(p: np.ndarray, scheme: Scheme | str) -> PhysicalityResult:
    """Decide whether a probability vector comes from a physical state.

    Tetrahedron: physical when the implied Bloch vector stays inside the
    unit ball; weight 1.  Trine/anti-trine: physical when some value of the
    unprobed correlation completes the data to a state; the weight is the
    length of the feasible interval, which is the constraint density this
    scheme induces on the probability space.
    """
    scheme = scheme_by_name(scheme) if isinstance(scheme, str) else scheme
    p = validate_probabilities(p, scheme.n_outcomes)
    if scheme.kind == "tetrahedron":
        r = bloch_from_probabilities(p)
        norm = float(np.linalg.norm(r))
        physical = norm <= 1.0 + 2.0 * STATE_EIG_TOL
        detail = {"bloch_norm": norm, "min_eigenvalue": 0.5 * (1.0 - norm)}
        return PhysicalityResult(physical, 1.0 if physical else 0.0, detail)
    if scheme.kind == "tat":
        iv = q_interval(p)
        if iv is None or iv[1] - iv[0] <= 0.0:
            return PhysicalityResult(False, 0.0, {"q_interval": None})
        return PhysicalityResult(True, iv[1] - iv[0], {"q_interval": iv})
    if scheme.kind == "unconstrained":
        return PhysicalityResult(True, 1.0, None)
    if scheme.checker is not None:
        return scheme.checker(p)
    # No physicality rule known for this measurement: reject.
    return PhysicalityResult(False, 0.0, {"reason": f"no physicality rule for {scheme.name}"})


def physicality_batch(points: np.ndarray, scheme: Scheme | str) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized physicality for an (n, K) batch: returns (physical, weight)."""
    scheme = scheme_by_name(scheme) if isinstance(scheme, str) else scheme
    points = np.asarray(points, dtype=float)
    n = points.shape[0]
    if scheme.kind == "tetrahedron":
        norms = np.linalg.norm(bloch_from_probabilities(points), axis=-1)
        phys = norms <= 1.0 + 2.0 * STATE_EIG_TOL
        return phys, phys.astype(float)
    if scheme.kind == "tat":
        x, y = tat_expectations(points)
        lo, hi, feasible = _q_interval_batch(x, y)
        length = np.where(feasible, hi - lo, 0.0)
        feasible = feasible & (length > 0.0)
        return feasible, np.where(feasible, length, 0.0)
    if scheme.kind == "unconstrained":
        return np.ones(n, dtype=bool), np.ones(n)
    results = [physicality(points[i], scheme) for i in range(n)]
    return (np.array([r.physical for r in results]),
            np.array([r.weight for r in results]))


# ---------------------------------------------------------------------------
# Born rule, clicks, likelihood
# ---------------------------------------------------------------------------

def validate_probabilities(p: np.ndarray, n_outcomes: int | None = None) -> np.ndarray:
    """Check simplex membership: entries in [0, 1], unit sum within 1e-12."""
    p = np.asarray(p, dtype=float)
    if n_outcomes is not None and p.shape[-1] != n_outcomes:
        raise ValueError(f"expected {n_outcomes} probabilities, got {p.shape[-1]}")
    if np.any(p < -PROB_SUM_TOL) or np.any(p > 1.0 + PROB_SUM_TOL):
        raise ValueError("probabilities must lie in [0, 1]")
    if np.abs(p.sum(axis=-1) - 1.0).max() > PROB_SUM_TOL:
        raise ValueError("probabilities must sum to 1 within 1e-12")
    return np.clip(p, 0.0, 1.0)


def born_probabilities(rho: DensityMatrix, pom: Pom) -> np.ndarray:
    """Outcome probabilities p_k = Re tr(Pi_k rho)."""
    if rho.dim != pom.dim:
        raise ValueError(f"dimension mismatch: state {rho.dim}, measurement {pom.dim}")
    p = np.einsum("kij,ji->k", pom.outcomes, rho.matrix).real
    return validate_probabilities(p)


def simulate_clicks(p: np.ndarray, n_total: int, seed: int) -> Counts:
    """Multinomial click simulation; deterministic for a fixed seed."""
    p = validate_probabilities(p)
    if n_total < 0:
        raise ValueError("total count must be non-negative")
    rng = np.random.default_rng(seed)
    draw = rng.multinomial(n_total, p / p.sum())
    return Counts(tuple(int(v) for v in draw))


def log_point_likelihood(p: np.ndarray, data: Counts) -> float:
    """log of prod_k p_k^{n_k}; -inf when a clicked outcome has p_k = 0."""
    return float(log_point_likelihood_batch(np.asarray(p, dtype=float)[None, :], data)[0])


def log_point_likelihood_batch(points: np.ndarray, data: Counts) -> np.ndarray:
    """Vectorized log point likelihood over an (n, K) batch."""
    points = np.asarray(points, dtype=float)
    n = np.asarray(data.n, dtype=float)
    if points.shape[-1] != len(data.n):
        raise ValueError("outcome count mismatch between probabilities and data")
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(n > 0.0, n * np.log(points), 0.0)
    out = terms.sum(axis=-1)
    return np.where(np.isnan(out), -np.inf, out)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def pom_to_json(pom: Pom) -> str:
    """Serialize a measurement: {dim, outcomes: [[re, im] ...], labels}."""
    outcomes = [[[[z.real, z.imag] for z in row] for row in op] for op in pom.outcomes]
    return json.dumps({"dim": pom.dim, "outcomes": outcomes, "labels": list(pom.labels)})


def pom_from_json(text: str) -> Pom:
    doc = json.loads(text)
    ops = np.array([[[complex(re, im) for re, im in row] for row in op]
                    for op in doc["outcomes"]])
    return Pom(ops, tuple(doc["labels"]))
