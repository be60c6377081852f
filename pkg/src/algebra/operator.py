"""
Operator: a dense linear map B^{⊗k} -> B^{⊗l} written in the orthonormal tensor basis.
"""
import io
from dataclasses import dataclass

import numpy as np

from src.core.errors import ArityError


@dataclass(frozen=True, eq=False)
class Operator:
    domain_power: int
    codomain_power: int
    dim: int
    matrix: np.ndarray

    def __post_init__(self):
        expected = (self.dim ** self.codomain_power, self.dim ** self.domain_power)
        if self.matrix.shape != expected:
            raise ArityError(
                f"operator B^{self.domain_power} -> B^{self.codomain_power} over dim {self.dim} "
                f"needs shape {expected}, got {self.matrix.shape}"
            )
        if not np.all(np.isfinite(self.matrix)):
            raise ArithmeticError("operator has non-finite entries")

    @classmethod
    def identity(cls, dim: int, power: int = 1) -> "Operator":
        return cls(power, power, dim, np.eye(dim ** power))

    def adjoint(self) -> "Operator":
        """Adjoint for the ψ inner product; in orthonormal coordinates the conjugate transpose."""
        return Operator(self.codomain_power, self.domain_power, self.dim, self.matrix.conj().T)

    def tensor(self, other: "Operator") -> "Operator":
        self._same_algebra(other)
        return Operator(
            self.domain_power + other.domain_power,
            self.codomain_power + other.codomain_power,
            self.dim,
            np.kron(self.matrix, other.matrix),
        )

    def after(self, other: "Operator") -> "Operator":
        """``self ∘ other``."""
        self._same_algebra(other)
        if other.codomain_power != self.domain_power:
            raise ArityError(
                f"cannot compose B^{other.domain_power}->B^{other.codomain_power} "
                f"with B^{self.domain_power}->B^{self.codomain_power}"
            )
        return Operator(other.domain_power, self.codomain_power, self.dim, self.matrix @ other.matrix)

    def scaled(self, factor: float) -> "Operator":
        return Operator(self.domain_power, self.codomain_power, self.dim, self.matrix * factor)

    def deviation(self, other: "Operator") -> float:
        """Max absolute entrywise difference."""
        self._same_algebra(other)
        if self.matrix.shape != other.matrix.shape:
            raise ArityError(f"shape mismatch {self.matrix.shape} vs {other.matrix.shape}")
        if self.matrix.size == 0:
            return 0.0
        return float(np.max(np.abs(self.matrix - other.matrix)))

    def to_tsv(self) -> str:
        return matrix_to_tsv(self.matrix)

    def _same_algebra(self, other: "Operator"):
        if self.dim != other.dim:
            raise ArityError(f"operators act on algebras of dimension {self.dim} and {other.dim}")


def matrix_to_tsv(matrix: np.ndarray) -> str:
    """One row per line, tab separated, 12 significant digits."""
    buf = io.StringIO()
    np.savetxt(buf, np.real_if_close(matrix), delimiter="\t", fmt="%.12g")
    return buf.getvalue()
