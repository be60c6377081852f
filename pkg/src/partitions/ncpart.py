"""
Noncrossing partitions: canonical representation, enumeration and the diagram calculus
(tensor product, adjoint, composition with central-block and cycle bookkeeping).

Points are numbered 1..k on the upper row from left to right and k+1..k+l on the
lower row from right to left, so walking 1..k+l goes once around the diagram and
the noncrossing condition is the usual circular one.
"""
import json
import logging
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Iterable, Iterator, Optional

from src.core.errors import ArityError, ParseError, SizeLimitError
from src.utils.config import DEFAULTS

logger = logging.getLogger(__name__)

Block = tuple[int, ...]


@lru_cache(maxsize=None)
def catalan(n: int) -> int:
    """Catalan numbers by the convolution recurrence."""
    if n < 0:
        raise ValueError("catalan(n) needs n >= 0")
    if n == 0:
        return 1
    return sum(catalan(i) * catalan(n - 1 - i) for i in range(n))


def _crosses(a: Block, b: Block) -> bool:
    for lo, hi in zip(a, a[1:]):
        inside = sum(1 for x in b if lo < x < hi)
        if inside and inside != len(b):
            return True
    return False


def is_noncrossing(blocks: Iterable[Iterable[int]]) -> bool:
    """Pairwise interleaving test over sorted blocks."""
    blocks = [tuple(sorted(b)) for b in blocks]
    for i, a in enumerate(blocks):
        for b in blocks[i + 1:]:
            if _crosses(a, b) or _crosses(b, a):
                return False
    return True


def _canonical(blocks: Iterable[Iterable[int]]) -> tuple[Block, ...]:
    return tuple(sorted((tuple(sorted(b)) for b in blocks), key=lambda b: b[0]))


@dataclass(frozen=True)
class NcPartition:
    """A noncrossing partition of ``upper_count`` upper and ``lower_count`` lower points."""
    upper_count: int
    lower_count: int
    blocks: tuple[Block, ...]

    def __post_init__(self):
        k, l = self.upper_count, self.lower_count
        if k < 0 or l < 0:
            raise ArityError(f"negative row size ({k}, {l})")
        canonical = _canonical(self.blocks)
        object.__setattr__(self, "blocks", canonical)
        points = [x for b in canonical for x in b]
        if any(len(b) == 0 for b in canonical):
            raise ParseError("empty block")
        if sorted(points) != list(range(1, k + l + 1)):
            raise ParseError(f"blocks {list(map(list, canonical))} do not partition 1..{k + l}")
        if not is_noncrossing(canonical):
            raise ParseError(f"blocks {list(map(list, canonical))} are crossing")

    @classmethod
    def _trusted(cls, k: int, l: int, blocks: Iterable[Iterable[int]]) -> "NcPartition":
        # Skips validation; used where the calculus guarantees a valid result.
        p = object.__new__(cls)
        object.__setattr__(p, "upper_count", k)
        object.__setattr__(p, "lower_count", l)
        object.__setattr__(p, "blocks", _canonical(blocks))
        return p

    @classmethod
    def from_blocks(cls, k: int, l: int, blocks: Iterable[Iterable[int]]) -> "NcPartition":
        return cls(k, l, tuple(tuple(b) for b in blocks))

    @classmethod
    def from_rows(cls, k: int, l: int, rows: Iterable[tuple[Iterable[int], Iterable[int]]]) -> "NcPartition":
        """Builds a partition from blocks given as (upper positions, lower positions), 0-based, left to right."""
        blocks = []
        for ups, lows in rows:
            blocks.append([u + 1 for u in ups] + [k + l - t for t in lows])
        return cls._trusted(k, l, blocks)

    @classmethod
    def empty(cls) -> "NcPartition":
        return cls._trusted(0, 0, ())

    @classmethod
    def identity(cls, k: int) -> "NcPartition":
        return cls.from_rows(k, k, [((i,), (i,)) for i in range(k)])

    @classmethod
    def singleton_lower(cls) -> "NcPartition":
        return cls._trusted(0, 1, [(1,)])

    @classmethod
    def singleton_upper(cls) -> "NcPartition":
        return cls._trusted(1, 0, [(1,)])

    @classmethod
    def one_block(cls, k: int, l: int) -> "NcPartition":
        if k + l == 0:
            return cls.empty()
        return cls._trusted(k, l, [tuple(range(1, k + l + 1))])

    @property
    def size(self) -> int:
        return self.upper_count + self.lower_count

    @property
    def block_count(self) -> int:
        """b(p), the total number of blocks."""
        return len(self.blocks)

    @cached_property
    def rows(self) -> tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]:
        """Per block: upper positions and lower positions, each 0-based and left to right."""
        k, l = self.upper_count, self.lower_count
        out = []
        for b in self.blocks:
            ups = tuple(x - 1 for x in b if x <= k)
            lows = tuple(sorted(k + l - x for x in b if x > k))
            out.append((ups, lows))
        return tuple(out)

    def to_text(self) -> str:
        return format_partition(self)

    def __str__(self) -> str:
        return self.to_text()


@dataclass(frozen=True)
class CompositionResult:
    result: NcPartition
    central_blocks: int
    cycles: int


def format_partition(p: NcPartition) -> str:
    """Blocks as bracketed integer lists, e.g. ``[[1,3],[2],[4,5]]``."""
    return json.dumps([list(b) for b in p.blocks], separators=(",", ":"))


def parse_partition(text: str, upper: int, lower: int) -> NcPartition:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"cannot parse partition {text!r}: {e}") from e
    if not isinstance(data, list) or not all(
        isinstance(b, list) and all(isinstance(x, int) for x in b) for b in data
    ):
        raise ParseError(f"partition text must be a list of integer lists, got {text!r}")
    return NcPartition.from_blocks(upper, lower, data)


@lru_cache(maxsize=None)
def _nc_blocks(lo: int, hi: int) -> tuple[tuple[Block, ...], ...]:
    # All NC partitions of lo..hi; in each result the block holding ``lo`` comes first.
    if lo > hi:
        return ((),)
    out = []
    for rest in _nc_blocks(lo + 1, hi):
        out.append(((lo,),) + rest)
    for j in range(lo + 1, hi + 1):
        for inner in _nc_blocks(lo + 1, j - 1):
            for outer in _nc_blocks(j, hi):
                out.append(((lo,) + outer[0],) + inner + outer[1:])
    return tuple(out)


def enumerate_nc(k: int, l: int, limit: Optional[int] = None) -> list[NcPartition]:
    """Every partition in NC(k, l) exactly once, sorted by canonical blocks."""
    limit = DEFAULTS.nc_limit if limit is None else limit
    if k < 0 or l < 0:
        raise ArityError(f"negative row size ({k}, {l})")
    if k + l > limit:
        raise SizeLimitError(f"NC({k},{l}) has {k + l} points, over the limit of {limit}")
    logger.info("enumerating NC(%d,%d): %d partitions", k, l, catalan(k + l))
    parts = [NcPartition._trusted(k, l, blocks) for blocks in _nc_blocks(1, k + l)]
    parts.sort(key=lambda p: p.blocks)
    return parts


def iter_nc_upto(total: int, limit: Optional[int] = None) -> Iterator[NcPartition]:
    """All partitions with k + l <= total, grouped by (k, l)."""
    for n in range(total + 1):
        for k in range(n + 1):
            yield from enumerate_nc(k, n - k, limit=limit)


def tensor(p: NcPartition, q: NcPartition) -> NcPartition:
    """Horizontal concatenation, p on the left."""
    k, l = p.upper_count + q.upper_count, p.lower_count + q.lower_count
    rows = list(p.rows)
    for ups, lows in q.rows:
        rows.append((tuple(u + p.upper_count for u in ups), tuple(t + p.lower_count for t in lows)))
    return NcPartition.from_rows(k, l, rows)


def adjoint(p: NcPartition) -> NcPartition:
    """Reflection across the horizontal middle line."""
    return NcPartition.from_rows(p.lower_count, p.upper_count, [(lows, ups) for ups, lows in p.rows])


class _Components:
    """Union-find over the nodes of a stacked diagram."""

    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def join(self, nodes: list[int]):
        if not nodes:
            return
        root = self.find(nodes[0])
        for x in nodes[1:]:
            self.parent[self.find(x)] = root


def compose(q: NcPartition, p: NcPartition) -> CompositionResult:
    """qp: the lower row of p is glued onto the upper row of q."""
    if p.lower_count != q.upper_count:
        raise ArityError(
            f"cannot compose: p has {p.lower_count} lower points, q has {q.upper_count} upper points"
        )
    k, l, m = p.upper_count, p.lower_count, q.lower_count
    # nodes: top row 0..k-1, glued row k..k+l-1, bottom row k+l..k+l+m-1
    comps = _Components(k + l + m)
    for ups, lows in p.rows:
        comps.join([u for u in ups] + [k + t for t in lows])
    for ups, lows in q.rows:
        comps.join([k + u for u in ups] + [k + l + t for t in lows])

    groups: dict[int, tuple[list[int], list[int]]] = {}
    for node in range(k + l + m):
        ups, lows = groups.setdefault(comps.find(node), ([], []))
        if node < k:
            ups.append(node)
        elif node >= k + l:
            lows.append(node - k - l)
    rows = [(tuple(u), tuple(w)) for u, w in groups.values() if u or w]
    central = sum(1 for u, w in groups.values() if not u and not w)
    result = NcPartition.from_rows(k, m, rows)
    cycles = l + result.block_count + central - p.block_count - q.block_count
    return CompositionResult(result=result, central_blocks=central, cycles=cycles)
