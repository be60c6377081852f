"""
Partition maps: the linear map T_p attached to a noncrossing partition, and numerical checks of
its compatibility with tensor product, adjoint and composition, plus the rank of the family
{T_p | p ∈ NC(k,l)}.
"""
import logging
import string
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from src.algebra.fdalg import AlgebraSpec, block_functional
from src.algebra.operator import Operator
from src.core.errors import HypothesisViolation, ParseError
from src.partitions.ncpart import NcPartition, adjoint, catalan, compose, enumerate_nc, iter_nc_upto, tensor
from src.utils.config import DEFAULTS

logger = logging.getLogger(__name__)

_LETTERS = string.ascii_letters

MODES = ("delta_form", "one_form")


def build_tp(spec: AlgebraSpec, p: NcPartition) -> Operator:
    """T_p: B^{⊗k} -> B^{⊗l}, entry Π_v ψ((b_v^↓)^* b_v^↑) in the orthonormal basis.

    Tensor factors and the block products b_v^↑, b_v^↓ both run left to right in the picture.
    """
    n, k, l = spec.dim, p.upper_count, p.lower_count
    if not p.blocks:
        return Operator(0, 0, n, np.ones((1, 1)))
    operands, subscripts = [], []
    for ups, lows in p.rows:
        tensor_v = block_functional(spec, len(ups), len(lows))
        operands.append(tensor_v.reshape((n,) * (len(lows) + len(ups))))
        subscripts.append("".join(_LETTERS[t] for t in lows) + "".join(_LETTERS[l + u] for u in ups))
    output = _LETTERS[: l + k]
    full = np.einsum(",".join(subscripts) + "->" + output, *operands)
    return Operator(k, l, n, full.reshape(n ** l, n ** k))


class TpCache:
    """Builds each T_p once per algebra during a sweep."""

    def __init__(self, spec: AlgebraSpec):
        self.spec = spec
        self._table: dict[NcPartition, Operator] = {}

    def get(self, p: NcPartition) -> Operator:
        op = self._table.get(p)
        if op is None:
            op = build_tp(self.spec, p)
            self._table[p] = op
        return op

    def __len__(self):
        return len(self._table)


@dataclass
class CalculusReport:
    mode: str
    k_max: int
    tol: float
    tensor_deviation: float = 0.0
    adjoint_deviation: float = 0.0
    composition_deviation: float = 0.0
    pairs_checked: int = 0
    worst_pair: Optional[tuple[str, str]] = None
    counterexamples: list = field(default_factory=list)

    @property
    def max_deviation(self) -> float:
        return max(self.tensor_deviation, self.adjoint_deviation, self.composition_deviation)

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.tol

    def to_document(self) -> dict:
        return {
            "mode": self.mode,
            "k_max": self.k_max,
            "passed": self.passed,
            "pairs_checked": self.pairs_checked,
            "tensor_deviation": self.tensor_deviation,
            "adjoint_deviation": self.adjoint_deviation,
            "composition_deviation": self.composition_deviation,
            "worst_pair": list(self.worst_pair) if self.worst_pair else None,
            "counterexamples": self.counterexamples[:10],
        }


def working_algebra(spec: AlgebraSpec, mode: str) -> tuple[AlgebraSpec, float]:
    """The algebra whose maps T_p obey the mode's composition law, and that law's base.

    Both modes need a δ-form; ``one_form`` moves to ψ̃ = δψ with base ψ̃(1).
    """
    if mode not in MODES:
        raise ParseError(f"unknown mode {mode!r}, expected one of {MODES}")
    spec.require_delta_form()
    if mode == "delta_form":
        return spec, float(spec.delta)
    working = spec.one_form()
    return working, float(working.total_weight)


def composition_coefficient(spec: AlgebraSpec, mode: str, central_blocks: int, cycles: int) -> float:
    """The scalar c with T_q T_p = c · T_{qp} for the given mode."""
    _, base = working_algebra(spec, mode)
    return base ** (cycles if mode == "delta_form" else central_blocks)


def verify_calculus(
    spec: AlgebraSpec,
    k_max: int,
    mode: str = "delta_form",
    tol: Optional[float] = None,
    limit: Optional[int] = None,
) -> CalculusReport:
    """Checks T_{p⊗q} = T_p⊗T_q, T_p^* = T_{p^*} and the composition law with the mode's coefficient.

    Composition is checked for every p ∈ NC(k,l), q ∈ NC(l,m) with k+l+m <= k_max; tensor and
    adjoint laws for all partitions with at most k_max points in total. Violations are reported,
    never raised; enumerations over ``limit`` points raise SizeLimitError up front.
    """
    tol = DEFAULTS.tol if tol is None else tol
    working, base = working_algebra(spec, mode)
    cache = TpCache(working)
    report = CalculusReport(mode=mode, k_max=k_max, tol=tol)

    small = list(iter_nc_upto(k_max, limit=limit))
    for p in small:
        dev = cache.get(p).adjoint().deviation(cache.get(adjoint(p)))
        report.adjoint_deviation = max(report.adjoint_deviation, dev)
        if dev > tol:
            report.counterexamples.append({"law": "adjoint", "p": str(p), "deviation": dev})
    for p in small:
        for q in small:
            if p.size + q.size > k_max:
                continue
            dev = cache.get(tensor(p, q)).deviation(cache.get(p).tensor(cache.get(q)))
            report.tensor_deviation = max(report.tensor_deviation, dev)
            if dev > tol:
                report.counterexamples.append({"law": "tensor", "p": str(p), "q": str(q), "deviation": dev})

    worst = -1.0
    for l in range(k_max + 1):
        for k in range(k_max - l + 1):
            ps = enumerate_nc(k, l, limit=limit)
            for m in range(k_max - l - k + 1):
                qs = enumerate_nc(l, m, limit=limit)
                for p in ps:
                    tp = cache.get(p)
                    for q in qs:
                        res = compose(q, p)
                        exponent = res.cycles if mode == "delta_form" else res.central_blocks
                        product = cache.get(q).after(tp).scaled(base ** -exponent)
                        dev = cache.get(res.result).deviation(product)
                        report.pairs_checked += 1
                        if dev > worst:
                            worst = dev
                            report.worst_pair = (f"{p} in NC({k},{l})", f"{q} in NC({l},{m})")
                            logger.debug("new worst pair %s: %.3g", report.worst_pair, dev)
                        if dev > tol:
                            report.counterexamples.append(
                                {"law": "composition", "p": str(p), "q": str(q), "deviation": dev}
                            )
    report.composition_deviation = max(worst, 0.0)
    logger.info(
        "calculus check (%s, k_max=%d): %d pairs, %d operators, max deviation %.3g",
        mode, k_max, report.pairs_checked, len(cache), report.max_deviation,
    )
    return report


def gram_matrix(spec: AlgebraSpec, k: int, l: int, limit: Optional[int] = None) -> np.ndarray:
    """⟨T_p, T_q⟩ = Tr(T_q^* T_p) over NC(k,l) in canonical order."""
    parts = enumerate_nc(k, l, limit=limit)
    stacked = np.stack([build_tp(spec, p).matrix.ravel() for p in parts], axis=1)
    return stacked.conj().T @ stacked


def gram_rank(spec: AlgebraSpec, k: int, l: int, rtol: Optional[float] = None, limit: Optional[int] = None) -> int:
    """Numeric rank of the Gram matrix of {T_p | p ∈ NC(k,l)}.

    Equals C_{k+l} when dim(B) >= 4; for smaller algebras the value is returned unasserted.
    """
    rtol = DEFAULTS.rank_rtol if rtol is None else rtol
    if spec.small_dimension:
        logger.warning("gram rank on dim(B) = %d < 4: result is not covered by linear independence", spec.dim)
    singular = scipy.linalg.svdvals(gram_matrix(spec, k, l, limit=limit))
    if singular.size == 0 or singular[0] == 0:
        return 0
    rank = int(np.sum(singular > rtol * singular[0]))
    logger.info("gram rank NC(%d,%d) on dim %d: %d of %d", k, l, spec.dim, rank, catalan(k + l))
    return rank


def require_independence(spec: AlgebraSpec):
    if spec.small_dimension:
        raise HypothesisViolation("dim(B) >= 4", f"dim(B) = {spec.dim} < 4")
