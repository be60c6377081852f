"""
Fusion rings: irreducible labels of a compact quantum group G with unit, conjugation,
binary tensor multiplicities N_{ab}^c, dimensions and quantum dimensions.

Built-in rings are rule based and possibly infinite (su2, so3, integer_dual); user rings are
finite tables read from JSON. Every binary product is memoized in the ring's table.
"""
import hashlib
import json
import logging
import re
import threading
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Union

import numpy as np

from src.core.errors import ParseError, RingDataError, UnknownLabelError, UnknownRingError

logger = logging.getLogger(__name__)

Label = str
Multiset = dict[Label, int]


class FusionRing:
    """Base class: subclasses supply the rules, this class memoizes products."""
    name = "ring"
    unit: Label = "1"
    is_lazy = False

    def __init__(self):
        self._table: dict[tuple[Label, Label], Multiset] = {}
        self._lock = threading.Lock()

    # rules supplied by subclasses
    def _is_label(self, a: Label) -> bool:
        raise NotImplementedError

    def _conj(self, a: Label) -> Label:
        raise NotImplementedError

    def _fuse(self, a: Label, b: Label) -> Multiset:
        raise NotImplementedError

    def _dim(self, a: Label) -> float:
        raise NotImplementedError

    def _qdim(self, a: Label) -> float:
        return self._dim(a)

    def labels(self) -> Optional[list[Label]]:
        """All labels for finite rings, None for lazy ones."""
        return None

    def sample_labels(self, bound: int) -> list[Label]:
        """A finite window of labels for validation."""
        return self.labels() or []

    def sort_key(self, a: Label):
        return a

    # public interface
    def is_label(self, a) -> bool:
        return isinstance(a, str) and self._is_label(a)

    def check_label(self, a: Label) -> Label:
        if not self.is_label(a):
            raise UnknownLabelError(f"{a!r} is not an irreducible of {self.name}")
        return a

    def conj(self, a: Label) -> Label:
        return self._conj(self.check_label(a))

    def dim(self, a: Label) -> float:
        return float(self._dim(self.check_label(a)))

    def qdim(self, a: Label) -> float:
        return float(self._qdim(self.check_label(a)))

    def fuse(self, a: Label, b: Label) -> Multiset:
        """N_{ab}^c for all c with nonzero multiplicity, in canonical label order."""
        key = (self.check_label(a), self.check_label(b))
        cached = self._table.get(key)
        if cached is not None:
            return cached
        raw = self._fuse(*key)
        result = {c: raw[c] for c in sorted(raw, key=self.sort_key) if raw[c]}
        with self._lock:
            self._table.setdefault(key, result)
        logger.debug("%s: memoized %s*%s", self.name, a, b)
        return result

    def multiplicity(self, a: Label, b: Label, c: Label) -> int:
        return self.fuse(a, b).get(c, 0)

    def is_kac(self, labels: Optional[Iterable[Label]] = None, tol: float = 1e-9) -> bool:
        """dim = qdim on the given labels (default: all finite labels, else every label seen so far)."""
        if labels is None:
            labels = self.labels()
        if labels is None:
            labels = {x for (a, b), out in self._table.items() for x in (a, b, *out)} or {self.unit}
        return all(abs(self.qdim(a) - self.dim(a)) <= tol * max(1.0, self.dim(a)) for a in labels)

    def table_snapshot(self) -> dict[str, Multiset]:
        with self._lock:
            return {f"{a}*{b}": dict(out) for (a, b), out in sorted(self._table.items())}

    def preload(self, snapshot: dict[str, Multiset]):
        """Loads memoized products produced by ``table_snapshot``."""
        with self._lock:
            for key, out in snapshot.items():
                a, _, b = key.partition("*")
                self._table.setdefault((a, b), {c: int(n) for c, n in out.items()})

    def describe(self) -> dict:
        return {"builtin": self.name}


class CyclicDualRing(FusionRing):
    """Dual of Z_s: labels 1, g, g2, ..., g{s-1}."""

    def __init__(self, order: int, name: Optional[str] = None):
        if order < 1:
            raise UnknownRingError(f"cyclic_dual needs order >= 1, got {order}")
        super().__init__()
        self.order = order
        self.name = name or f"cyclic_dual({order})"
        self.unit = "1"

    def label(self, e: int) -> Label:
        e %= self.order
        return "1" if e == 0 else ("g" if e == 1 else f"g{e}")

    def exponent(self, a: Label) -> int:
        if a == "1":
            return 0
        if a == "g":
            return 1
        return int(a[1:])

    def _is_label(self, a):
        if a in ("1", "g"):
            return self.order > (0 if a == "1" else 1)
        m = re.fullmatch(r"g([2-9]|[1-9][0-9]+)", a)
        return bool(m) and int(m.group(1)) < self.order

    def _conj(self, a):
        return self.label(-self.exponent(a))

    def _fuse(self, a, b):
        return {self.label(self.exponent(a) + self.exponent(b)): 1}

    def _dim(self, a):
        return 1.0

    def labels(self):
        return [self.label(e) for e in range(self.order)]

    def sort_key(self, a):
        return self.exponent(a)

    def describe(self):
        return {"builtin": "trivial" if self.name == "trivial" else f"cyclic_dual({self.order})"}


class IntegerDualRing(FusionRing):
    """Dual of Z: labels are decimal integers, unit 0."""
    name = "integer_dual"
    unit = "0"
    is_lazy = True

    def _is_label(self, a):
        return re.fullmatch(r"0|-?[1-9][0-9]*", a) is not None

    def _conj(self, a):
        return str(-int(a))

    def _fuse(self, a, b):
        return {str(int(a) + int(b)): 1}

    def _dim(self, a):
        return 1.0

    def sample_labels(self, bound):
        return [str(i) for i in range(-bound, bound + 1)]

    def sort_key(self, a):
        return (abs(int(a)), int(a))


class SU2Ring(FusionRing):
    """SU(2): label a is twice the spin, a⊗b = |a-b| ⊕ |a-b|+2 ⊕ ... ⊕ a+b."""
    name = "su2"
    unit = "0"
    is_lazy = True
    step = 2

    def _is_label(self, a):
        return re.fullmatch(r"0|[1-9][0-9]*", a) is not None

    def _conj(self, a):
        return a

    def _fuse(self, a, b):
        x, y = int(a), int(b)
        return {str(c): 1 for c in range(abs(x - y), x + y + 1, self.step)}

    def _dim(self, a):
        return float(int(a) + 1)

    def sample_labels(self, bound):
        return [str(i) for i in range(bound + 1)]

    def sort_key(self, a):
        return int(a)


class SO3Ring(SU2Ring):
    """SO(3): integer spins j with a⊗b = |a-b| ⊕ ... ⊕ a+b and dim 2j+1."""
    name = "so3"
    step = 1

    def _dim(self, a):
        return float(2 * int(a) + 1)


class TableRing(FusionRing):
    """A finite ring given by explicit tables."""

    def __init__(self, unit: Label, irreps: dict[Label, dict], tensor: dict[tuple[Label, Label], Multiset], name="user"):
        super().__init__()
        self.name = name
        self.unit = unit
        self._irreps = dict(irreps)
        self._irreps.setdefault(unit, {"dim": 1.0, "qdim": 1.0, "conj": unit})
        self._order = {a: i for i, a in enumerate(self._irreps)}
        for a, data in self._irreps.items():
            if "*" in a or "," in a or a == "":
                raise ParseError(f"label {a!r} may not be empty or contain '*' or ','")
            if data.get("conj", a) not in self._irreps:
                raise RingDataError(f"conjugate of {a!r} is {data.get('conj')!r}, not a label")
        self._tensor = {}
        for (a, b), out in tensor.items():
            for x in (a, b, *out):
                if x not in self._irreps:
                    raise RingDataError(f"tensor table mentions unknown label {x!r}")
            self._tensor[(a, b)] = {c: int(n) for c, n in out.items()}

    def _is_label(self, a):
        return a in self._irreps

    def _conj(self, a):
        return self._irreps[a].get("conj", a)

    def _fuse(self, a, b):
        if (a, b) in self._tensor:
            return self._tensor[(a, b)]
        if a == self.unit:
            return {b: 1}
        if b == self.unit:
            return {a: 1}
        raise RingDataError(f"ring {self.name} gives no decomposition of {a}*{b}")

    def _dim(self, a):
        return float(self._irreps[a].get("dim", 1.0))

    def _qdim(self, a):
        return float(self._irreps[a].get("qdim", self._dim(a)))

    def labels(self):
        return list(self._irreps)

    def sort_key(self, a):
        return self._order.get(a, len(self._order))

    def describe(self):
        return ring_to_json(self)


_CYCLIC = re.compile(r"cyclic_dual\(\s*(\d+)\s*\)")


def builtin_ring(name: str) -> FusionRing:
    """trivial, cyclic_dual(s), integer_dual, su2 or so3."""
    key = name.strip().lower()
    if key == "trivial":
        return CyclicDualRing(1, name="trivial")
    m = _CYCLIC.fullmatch(key)
    if m:
        return CyclicDualRing(int(m.group(1)))
    if key == "integer_dual":
        return IntegerDualRing()
    if key == "su2":
        return SU2Ring()
    if key == "so3":
        return SO3Ring()
    raise UnknownRingError(f"no built-in ring named {name!r}")


def _load_json(source) -> dict:
    if isinstance(source, dict):
        return source
    try:
        return json.loads(Path(source).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise ParseError(f"cannot read ring file {source}: {e}") from e


def load_ring(source: Union[str, Path, dict], name: str = "user") -> FusionRing:
    """Reads the ring JSON schema; a ``{"builtin": name}`` document resolves to a built-in."""
    data = _load_json(source)
    if "builtin" in data:
        return builtin_ring(data["builtin"])
    try:
        unit = str(data["unit"])
        irreps = {
            str(entry["id"]): {
                "dim": float(entry.get("dim", 1)),
                "qdim": float(entry.get("qdim", entry.get("dim", 1))),
                "conj": str(entry.get("conj", entry["id"])),
            }
            for entry in data["irreps"]
        }
        tensor = {}
        for key, out in data.get("tensor", {}).items():
            a, sep, b = key.partition("*")
            if not sep:
                raise ParseError(f"tensor key {key!r} must look like 'a*b'")
            tensor[(a, b)] = {str(c): int(n) for c, n in out.items()}
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(f"malformed ring document: {e}") from e
    return TableRing(unit, irreps, tensor, name=name)


def resolve_ring(spec: str) -> FusionRing:
    """A built-in name or a path to a ring file."""
    try:
        return builtin_ring(spec)
    except UnknownRingError:
        if Path(spec).exists():
            return load_ring(spec, name=Path(spec).stem)
        raise


def ring_to_json(ring: FusionRing) -> dict:
    """The ring file document; built-ins serialize to their name."""
    if not isinstance(ring, TableRing):
        return ring.describe()
    labels = ring.labels()
    return {
        "unit": ring.unit,
        "irreps": [
            {"id": a, "dim": ring.dim(a), "qdim": ring.qdim(a), "conj": ring.conj(a)} for a in labels
        ],
        "tensor": {f"{a}*{b}": out for (a, b), out in sorted(ring._tensor.items())},
    }


def ring_content_hash(ring: FusionRing) -> str:
    text = json.dumps(ring.describe(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def tensor_decompose(ring: FusionRing, word: Iterable[Label]) -> Multiset:
    """Left fold of the binary tensor over ``word``; the empty word gives the unit."""
    acc: Counter = Counter({ring.unit: 1})
    for letter in word:
        ring.check_label(letter)
        nxt: Counter = Counter()
        for gamma, mult in acc.items():
            for c, n in ring.fuse(gamma, letter).items():
                nxt[c] += mult * n
        acc = nxt
    return {c: acc[c] for c in sorted(acc, key=ring.sort_key) if acc[c]}


def hom_dim(ring: FusionRing, w1: Iterable[Label], w2: Iterable[Label]) -> int:
    """dim Hom(w1, w2) = Σ_γ mult_γ(w1) mult_γ(w2)."""
    d1, d2 = tensor_decompose(ring, w1), tensor_decompose(ring, w2)
    return sum(n * d2.get(c, 0) for c, n in d1.items())


@dataclass
class RingReport:
    ring: str
    labels_checked: int = 0
    triples_checked: int = 0
    violations: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def fail(self, check: str, **witness):
        self.violations.append({"check": check, **witness})

    def to_document(self) -> dict:
        return {
            "ring": self.ring,
            "passed": self.passed,
            "labels_checked": self.labels_checked,
            "triples_checked": self.triples_checked,
            "violations": self.violations[:20],
        }


def label_window(ring: FusionRing, budget: int) -> list[Label]:
    labels = ring.labels()
    if labels is not None:
        return labels
    bound = 1
    while len(ring.sample_labels(bound + 1)) ** 2 <= budget:
        bound += 1
    return ring.sample_labels(bound)


def validate_ring(ring: FusionRing, sample_budget: int = 500, seed: int = 0, tol: float = 1e-9) -> RingReport:
    """Checks conjugation, unit, Frobenius, conjugate-uniqueness, dimension and associativity laws."""
    report = RingReport(ring=ring.name)
    rng = np.random.default_rng(seed)
    labels = label_window(ring, sample_budget)
    unit = ring.unit

    if ring.conj(unit) != unit:
        report.fail("conj_unit", label=unit)
    for a in labels:
        report.labels_checked += 1
        try:
            back = ring.conj(ring.conj(a))
        except (UnknownLabelError, RingDataError):
            back = None
        if back != a:
            report.fail("conj_involutive", label=a)
            continue
        if ring.fuse(a, unit) != {a: 1} or ring.fuse(unit, a) != {a: 1}:
            report.fail("unit", label=a)
        if ring.qdim(a) < ring.dim(a) - tol or ring.dim(a) <= 0:
            report.fail("qdim_at_least_dim", label=a, dim=ring.dim(a), qdim=ring.qdim(a))
    if not report.passed:
        return report

    pairs = [(a, b) for a in labels for b in labels]
    if len(pairs) > sample_budget:
        pairs = [pairs[i] for i in rng.choice(len(pairs), size=sample_budget, replace=False)]
    for a, b in pairs:
        try:
            out = ring.fuse(a, b)
        except RingDataError as e:
            report.fail("missing_product", a=a, b=b, message=str(e))
            continue
        for dim_of, check in ((ring.dim, "dim_homomorphism"), (ring.qdim, "qdim_homomorphism")):
            lhs = dim_of(a) * dim_of(b)
            rhs = sum(n * dim_of(c) for c, n in out.items())
            if abs(lhs - rhs) > tol * max(1.0, lhs):
                report.fail(check, a=a, b=b, lhs=lhs, rhs=rhs)
        expected_unit = 1 if b == ring.conj(a) else 0
        if out.get(unit, 0) != expected_unit:
            report.fail("conj_unique", a=a, b=b, multiplicity=out.get(unit, 0))
        candidates = list(out) + [labels[int(rng.integers(len(labels)))]]
        for c in candidates:
            report.triples_checked += 1
            n = ring.multiplicity(a, b, c)
            try:
                n2 = ring.multiplicity(ring.conj(a), c, b)
                n3 = ring.multiplicity(c, ring.conj(b), a)
            except RingDataError as e:
                report.fail("missing_product", a=a, b=b, c=c, message=str(e))
                continue
            if not n == n2 == n3:
                report.fail("frobenius", a=a, b=b, c=c, values=[n, n2, n3])
        c = labels[int(rng.integers(len(labels)))]
        try:
            if tensor_decompose(ring, [a, b, c]) != _right_fold(ring, [a, b, c]):
                report.fail("associativity", word=[a, b, c])
        except RingDataError as e:
            report.fail("missing_product", word=[a, b, c], message=str(e))
    logger.info("validated %s: %d labels, %d triples, %d violations",
                ring.name, report.labels_checked, report.triples_checked, len(report.violations))
    return report


def _right_fold(ring: FusionRing, word: list[Label]) -> Multiset:
    acc: Counter = Counter({ring.unit: 1})
    for letter in reversed(word):
        nxt: Counter = Counter()
        for gamma, mult in acc.items():
            for c, n in ring.fuse(letter, gamma).items():
                nxt[c] += mult * n
        acc = nxt
    return {c: acc[c] for c in sorted(acc, key=ring.sort_key) if acc[c]}
