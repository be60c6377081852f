"""
Finite-dimensional C*-algebras B = ⊕_T M_{n_T}(C) with a faithful state ψ = ⊕_T Tr(Q_T ·),
their structure maps, and finite quantum graphs (B, ψ, d).

Matrix units e_ij^T are taken in a basis diagonalizing Q_T, so a block is described by
its size and the diagonal weights Q_{1,T}..Q_{n_T,T}. Weights are exact rationals; every
matrix is double precision in the orthonormal basis b_ij^T = Q_{j,T}^{-1/2} e_ij^T.
"""
import json
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np
import scipy.linalg

from src.algebra.operator import Operator
from src.core.errors import (
    ArityError,
    FaithfulnessError,
    HypothesisViolation,
    NormalityError,
    ParseError,
    StateError,
)
from src.utils.config import DEFAULTS

logger = logging.getLogger(__name__)


def _as_fraction(value) -> Fraction:
    try:
        return Fraction(value)
    except (ValueError, TypeError, ZeroDivisionError) as e:
        raise ParseError(f"cannot read {value!r} as a rational number") from e


@dataclass(frozen=True)
class MatrixBlock:
    size: int
    q: tuple[Fraction, ...]

    @property
    def trace_q(self) -> Fraction:
        return sum(self.q, Fraction(0))

    @property
    def trace_q_inverse(self) -> Fraction:
        return sum((1 / x for x in self.q), Fraction(0))

    @property
    def is_scalar(self) -> bool:
        return len(set(self.q)) <= 1


@dataclass(frozen=True)
class AlgebraSpec:
    """B with its state data; derived flags and numeric bases are computed on construction."""
    blocks: tuple[MatrixBlock, ...]

    dim: int = field(init=False, compare=False)
    inverse_traces: tuple[Fraction, ...] = field(init=False, compare=False, repr=False)
    is_delta_form: bool = field(init=False, compare=False, repr=False)
    delta: Optional[Fraction] = field(init=False, compare=False, repr=False)
    is_tracial: bool = field(init=False, compare=False, repr=False)
    basis_index: tuple[tuple[int, int, int], ...] = field(init=False, compare=False, repr=False)
    # numeric model: B inside M_N(C), N = Σ n_T, block diagonal
    basis_matrices: np.ndarray = field(init=False, compare=False, repr=False)
    weights: np.ndarray = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        if not self.blocks:
            raise ArityError("an algebra needs at least one block")
        for T, b in enumerate(self.blocks):
            if b.size < 1 or len(b.q) != b.size:
                raise ArityError(f"block {T}: size {b.size} with {len(b.q)} weights")
            if any(x <= 0 for x in b.q):
                raise FaithfulnessError(f"block {T}: weights {[str(x) for x in b.q]} are not all positive")

        inverse_traces = tuple(b.trace_q_inverse for b in self.blocks)
        delta_form = len(set(inverse_traces)) == 1
        index = tuple(
            (T, i, j) for T, b in enumerate(self.blocks) for i in range(b.size) for j in range(b.size)
        )

        big = sum(b.size for b in self.blocks)
        basis = np.zeros((len(index), big, big))
        weights = np.zeros(big)
        offsets = np.cumsum([0] + [b.size for b in self.blocks])
        for T, b in enumerate(self.blocks):
            weights[offsets[T]:offsets[T] + b.size] = [float(x) for x in b.q]
        for a, (T, i, j) in enumerate(index):
            basis[a, offsets[T] + i, offsets[T] + j] = float(self.blocks[T].q[j]) ** -0.5

        object.__setattr__(self, "dim", len(index))
        object.__setattr__(self, "inverse_traces", inverse_traces)
        object.__setattr__(self, "is_delta_form", delta_form)
        object.__setattr__(self, "delta", inverse_traces[0] if delta_form else None)
        object.__setattr__(self, "is_tracial", all(b.is_scalar for b in self.blocks))
        object.__setattr__(self, "basis_index", index)
        object.__setattr__(self, "basis_matrices", basis)
        object.__setattr__(self, "weights", weights)
        if self.dim < 4:
            logger.warning("algebra of dimension %d < 4: theorem-based outputs will be flagged", self.dim)

    @property
    def total_weight(self) -> Fraction:
        """ψ(1) = Σ_T Tr(Q_T)."""
        return sum((b.trace_q for b in self.blocks), Fraction(0))

    @property
    def is_state(self) -> bool:
        return self.total_weight == 1

    @property
    def small_dimension(self) -> bool:
        return self.dim < 4

    @property
    def generator_qdim_factor(self) -> Fraction:
        """Σ_T Tr(Q_T) Tr(Q_T^{-1})."""
        return sum((b.trace_q * b.trace_q_inverse for b in self.blocks), Fraction(0))

    def flat_index(self, T: int, i: int, j: int) -> int:
        return self.basis_index.index((T, i, j))

    def unit_vector(self) -> np.ndarray:
        """η(1) = 1_B = Σ Q_{i,T}^{1/2} b_ii^T in orthonormal coordinates."""
        v = np.zeros(self.dim)
        for a, (T, i, j) in enumerate(self.basis_index):
            if i == j:
                v[a] = float(self.blocks[T].q[i]) ** 0.5
        return v

    def scaled(self, factor) -> "AlgebraSpec":
        factor = _as_fraction(factor)
        return AlgebraSpec(tuple(MatrixBlock(b.size, tuple(x * factor for x in b.q)) for b in self.blocks))

    def one_form(self) -> "AlgebraSpec":
        """The non-unital 1-form ψ̃ = δψ of a δ-form."""
        if not self.is_delta_form:
            raise HypothesisViolation("psi is a delta-form", "the 1-form δψ needs a δ-form state")
        return self.scaled(self.delta)

    def require_delta_form(self):
        if not self.is_delta_form:
            raise HypothesisViolation(
                "psi is a delta-form",
                f"Tr(Q_T^-1) takes the values {sorted({str(x) for x in self.inverse_traces})}",
            )


def make_algebra(blocks: Iterable, normalize: bool = False, require_state: bool = True) -> AlgebraSpec:
    """Builds a spec from ``(size, q_entries)`` pairs (or ``{"size":..,"q":[..]}`` dicts).

    Args:
        blocks: one entry per matrix block, weights as rationals or strings ``"p/q"``.
        normalize: rescale the weights so that Σ_T Tr(Q_T) = 1.
        require_state: reject weights that do not sum to one (ignored when normalizing).
    """
    parsed = []
    for entry in blocks:
        if isinstance(entry, dict):
            size, q = entry.get("size"), entry.get("q")
        else:
            size, q = entry
        if not isinstance(size, int) or q is None:
            raise ParseError(f"malformed block {entry!r}")
        parsed.append(MatrixBlock(size, tuple(_as_fraction(x) for x in q)))
    spec = AlgebraSpec(tuple(parsed))
    if normalize:
        return spec.scaled(1 / spec.total_weight)
    if require_state and not spec.is_state:
        raise StateError(f"Σ_T Tr(Q_T) = {spec.total_weight}, not 1; pass normalize to rescale")
    return spec


def uniform_commutative(n: int) -> AlgebraSpec:
    """C^n with the uniform state."""
    return make_algebra([(1, [Fraction(1, n)])] * n)


def matrix_algebra(n: int) -> AlgebraSpec:
    """M_n with the normalized trace."""
    return make_algebra([(n, [Fraction(1, n)] * n)])


@lru_cache(maxsize=64)
def _products(spec: AlgebraSpec, count: int) -> np.ndarray:
    # All ordered products of ``count`` basis elements, shape (dim**count, N, N).
    big = spec.weights.shape[0]
    out = np.eye(big)[None, :, :]
    for _ in range(count):
        out = np.einsum("aij,bjk->abik", out, spec.basis_matrices).reshape(-1, big, big)
    return out


def block_functional(spec: AlgebraSpec, upper: int, lower: int) -> np.ndarray:
    """Matrix of ψ((y_1⋯y_lower)^* x_1⋯x_upper) over basis tuples, shape (dim**lower, dim**upper).

    Both products run left to right; an empty product is 1_B.
    """
    ups = _products(spec, upper)
    lows = _products(spec, lower)
    return np.einsum("cjk,ajk,k->ca", lows.conj(), ups, spec.weights)


def structure_operator(spec: AlgebraSpec, kind: str, k: int = 2) -> Operator:
    """Multiplication m^(k), its adjoint ``m_star`` (of m^(k)), the unit η or its adjoint."""
    if kind == "m_k":
        if k < 1:
            raise ArityError("m^(k) needs k >= 1")
        return Operator(k, 1, spec.dim, block_functional(spec, k, 1))
    if kind == "m_star":
        if k < 1:
            raise ArityError("m^(k) needs k >= 1")
        return Operator(1, k, spec.dim, block_functional(spec, 1, k))
    if kind == "unit":
        return Operator(0, 1, spec.dim, block_functional(spec, 0, 1))
    if kind == "unit_star":
        return Operator(1, 0, spec.dim, block_functional(spec, 1, 0))
    raise ParseError(f"unknown structure map {kind!r}")


@dataclass
class StructureReport:
    deviations: dict[str, float]
    tol: float

    @property
    def passed(self) -> bool:
        return all(v <= self.tol for v in self.deviations.values())

    @property
    def worst(self) -> tuple[str, float]:
        return max(self.deviations.items(), key=lambda kv: kv[1])

    def to_document(self) -> dict:
        return {"passed": self.passed, "tol": self.tol, "deviations": self.deviations}


def verify_structure(spec: AlgebraSpec, k_max: int = 5, tol: Optional[float] = None) -> StructureReport:
    """Checks the algebra identities numerically and reports the max deviation of each."""
    tol = DEFAULTS.tol if tol is None else tol
    n = spec.dim
    ident = Operator.identity(n)
    m = structure_operator(spec, "m_k", 2)
    m_star = m.adjoint()
    eta = structure_operator(spec, "unit")
    dev = {}

    gram = block_functional(spec, 1, 1)
    dev["orthonormal"] = float(np.max(np.abs(gram - np.eye(n))))
    dev["unit_left"] = m.after(eta.tensor(ident)).deviation(ident)
    dev["unit_right"] = m.after(ident.tensor(eta)).deviation(ident)
    m3 = structure_operator(spec, "m_k", 3)
    dev["assoc_left"] = m.after(m.tensor(ident)).deviation(m3)
    dev["assoc_right"] = m.after(ident.tensor(m)).deviation(m3)
    dev["frobenius"] = m3.adjoint().after(m).deviation(
        ident.tensor(m).tensor(ident).after(m_star.tensor(m_star))
    )
    if spec.is_delta_form:
        delta = float(spec.delta)
        for k in range(1, k_max + 1):
            mk = structure_operator(spec, "m_k", k)
            target = ident.scaled(delta ** (k - 1))
            dev[f"m{k}_m{k}_star"] = mk.after(mk.adjoint()).deviation(target)
    logger.info("structure check on dim %d: worst %s", n, max(dev.items(), key=lambda kv: kv[1]))
    return StructureReport(dev, tol)


def arithmetic_lemma_holds(xs: Sequence) -> bool:
    """For n >= 2 positive numbers with Σ x_i <= 1, Σ 1/x_i >= 4."""
    if len(xs) < 2 or any(x <= 0 for x in xs) or sum(xs) > 1:
        raise ValueError("the lemma needs at least two positive numbers summing to at most 1")
    return sum(1 / x for x in xs) >= 4


def inverse_trace_bounds(spec: AlgebraSpec) -> list[tuple[int, Fraction, bool]]:
    """Per block of size >= 2 with Tr(Q_T) <= 1: (T, Tr(Q_T^{-1}), bound >= 4 holds)."""
    out = []
    for T, b in enumerate(spec.blocks):
        if b.size >= 2 and b.trace_q <= 1:
            out.append((T, b.trace_q_inverse, b.trace_q_inverse >= 4))
    return out


@dataclass(frozen=True, eq=False)
class QuantumGraph:
    algebra: AlgebraSpec
    d: np.ndarray
    is_normal: bool = field(init=False)

    def __post_init__(self):
        n = self.algebra.dim
        if self.d.shape != (n, n):
            raise ArityError(f"d has shape {self.d.shape}, the algebra has dimension {n}")
        dd = self.d @ self.d.conj().T
        normal = bool(np.allclose(dd, self.d.conj().T @ self.d, atol=DEFAULTS.tol * max(1.0, np.abs(dd).max())))
        object.__setattr__(self, "is_normal", normal)


def _square(matrix, what: str) -> np.ndarray:
    arr = np.asarray(matrix, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ArityError(f"{what} must be square, got shape {arr.shape}")
    return arr


def from_classical_graph(adjacency) -> QuantumGraph:
    """(C^n, uniform ψ, adjacency matrix); on C^n the orthonormal basis is a uniform rescaling."""
    adj = _square(adjacency, "adjacency matrix")
    if not np.all((adj == 0) | (adj == 1)):
        raise ParseError("adjacency matrix entries must be 0 or 1")
    return QuantumGraph(uniform_commutative(adj.shape[0]), adj)


def from_metric_space(distances) -> QuantumGraph:
    """(C^n, uniform ψ, d) with d_ij the distance between points i and j."""
    dist = _square(distances, "distance matrix")
    if np.any(dist < 0) or not np.allclose(dist, dist.T) or np.any(np.diag(dist) != 0):
        raise ParseError("distance matrix must be symmetric, nonnegative, with zero diagonal")
    return QuantumGraph(uniform_commutative(dist.shape[0]), dist)


def graph_from_matrix_units(spec: AlgebraSpec, d_units) -> QuantumGraph:
    """Converts d written on the matrix units e_ij^T to the orthonormal basis."""
    d_e = np.asarray(d_units, dtype=complex)
    if d_e.shape != (spec.dim, spec.dim):
        raise ArityError(f"d has shape {d_e.shape}, the algebra has dimension {spec.dim}")
    s = np.array([float(spec.blocks[T].q[j]) ** -0.5 for T, i, j in spec.basis_index])
    d_b = (d_e * s[None, :]) / s[:, None]
    return QuantumGraph(spec, np.real_if_close(d_b))


@dataclass
class GraphReport:
    trivial: bool
    normal: bool
    eigenvalues: list = field(default_factory=list)
    spectral_projections: list = field(default_factory=list)

    def to_document(self) -> dict:
        def num(z):
            z = complex(z)
            return z.real if abs(z.imag) < 1e-12 else [z.real, z.imag]

        return {
            "trivial": self.trivial,
            "normal": self.normal,
            "eigenvalues": [num(x) for x in self.eigenvalues],
            "spectral_projections": [
                [[num(x) for x in row] for row in p] for p in self.spectral_projections
            ],
        }


def graph_constraint_analysis(g: QuantumGraph, spectral: bool = True, tol: Optional[float] = None) -> GraphReport:
    """Decides whether d ∈ span{id, ηη*} and, for normal d, returns its spectral projections."""
    tol = DEFAULTS.tol if tol is None else tol
    n = g.algebra.dim
    u = g.algebra.unit_vector()
    proj = np.outer(u, u) / (u @ u)
    span = np.stack([np.eye(n).ravel(), proj.ravel()], axis=1)
    coeffs, *_ = np.linalg.lstsq(span, g.d.ravel().astype(complex), rcond=None)
    residual = np.abs(span @ coeffs - g.d.ravel()).max()
    trivial = bool(residual <= tol * max(1.0, np.abs(g.d).max()))
    report = GraphReport(trivial=trivial, normal=g.is_normal)
    if not spectral:
        return report
    if not g.is_normal:
        raise NormalityError("spectral projections need a normal d (dd* != d*d)")

    schur_form, z = scipy.linalg.schur(g.d.astype(complex), output="complex")
    eig = np.diag(schur_form)
    scale = max(1.0, np.abs(eig).max())
    groups: list[list[int]] = []
    for idx in np.argsort(eig.real, kind="stable"):
        for grp in groups:
            if abs(eig[grp[0]] - eig[idx]) <= 1e-8 * scale:
                grp.append(idx)
                break
        else:
            groups.append([idx])
    for grp in groups:
        vecs = z[:, grp]
        report.eigenvalues.append(np.mean(eig[grp]))
        report.spectral_projections.append(np.real_if_close(vecs @ vecs.conj().T, tol=1000))
    logger.info("spectral decomposition: %d projections", len(groups))
    return report


def _load_json(source: Union[str, Path, dict]) -> dict:
    if isinstance(source, dict):
        return source
    try:
        return json.loads(Path(source).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise ParseError(f"cannot read {source}: {e}") from e


def load_algebra(source: Union[str, Path, dict]) -> AlgebraSpec:
    """Reads ``{"blocks":[{"size":2,"q":["1/2","1/2"]}], "normalize":false}``."""
    data = _load_json(source)
    if "blocks" not in data:
        raise ParseError("algebra file needs a 'blocks' list")
    return make_algebra(data["blocks"], normalize=bool(data.get("normalize", False)))


def load_quantum_graph(source: Union[str, Path, dict]) -> QuantumGraph:
    """An algebra file with an extra ``"d"`` matrix, row-major on the matrix units."""
    data = _load_json(source)
    if "d" not in data:
        raise ParseError("quantum graph file needs a 'd' matrix")
    return graph_from_matrix_units(load_algebra(data), data["d"])


def algebra_to_json(spec: AlgebraSpec) -> dict:
    return {
        "blocks": [{"size": b.size, "q": [str(x) for x in b.q]} for b in spec.blocks],
        "normalize": False,
    }
