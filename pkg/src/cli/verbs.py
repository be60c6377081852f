"""
Verb registry: every command-line verb is a function of the parsed arguments and a Context that
returns a result document (a JSON-ready dict) or, for ``--tsv`` output, plain text.
"""
import inspect
import json
import re
from dataclasses import dataclass
from typing import Callable, Optional, Union

from src.algebra.fdalg import (
    AlgebraSpec,
    algebra_to_json,
    from_classical_graph,
    graph_constraint_analysis,
    load_algebra,
    load_quantum_graph,
    make_algebra,
    matrix_algebra,
    uniform_commutative,
    verify_structure,
)
from src.algebra.operator import matrix_to_tsv
from src.algebra.pmap import build_tp, gram_matrix, gram_rank, verify_calculus, working_algebra
from src.core.errors import ParseError
from src.data_stores.fusion_cache import FusionCache
from src.fusion.fusionring import FusionRing, hom_dim, resolve_ring, validate_ring
from src.fusion.words import parse_word
from src.fusion.wreath import (
    decompose_basic_tensor,
    free_product_decomposition,
    hypothesis_flags,
    kac_check,
    moments,
    verify_semiring_iso,
    word_dims,
    wreath_hom_dim,
    wreath_tensor,
)
from src.partitions.ncpart import NcPartition, adjoint, catalan, compose, enumerate_nc, parse_partition, tensor
from src.utils.config import Settings

Result = Union[dict, str]


@dataclass
class Context:
    settings: Settings
    cache: FusionCache
    tol: float
    seed: int

    def ring(self, spec: str) -> FusionRing:
        ring = resolve_ring(spec)
        self.cache.load(ring)
        return ring


_SHORTHAND = re.compile(r"([CM])(\d+)")


def resolve_algebra(spec: str) -> AlgebraSpec:
    """``C<n>`` (uniform commutative), ``M<n>`` (normalized trace) or a path to an algebra file."""
    m = _SHORTHAND.fullmatch(spec.strip())
    if m:
        n = int(m.group(2))
        return uniform_commutative(n) if m.group(1) == "C" else matrix_algebra(n)
    return load_algebra(spec)


def _shape(text: str) -> tuple[int, int]:
    try:
        k, l = (int(x) for x in text.split(","))
    except ValueError as e:
        raise ParseError(f"shape must look like 'k,l', got {text!r}") from e
    return k, l


def _partition(text: str, shape: str) -> NcPartition:
    return parse_partition(text, *_shape(shape))


def _algebra_summary(spec: AlgebraSpec) -> dict:
    return {
        **algebra_to_json(spec),
        "dim": spec.dim,
        "delta_form": spec.is_delta_form,
        "delta": str(spec.delta) if spec.delta is not None else None,
        "tracial": spec.is_tracial,
        "flags": hypothesis_flags(spec),
    }


def _number(z: complex):
    z = complex(z)
    return z.real if abs(z.imag) < 1e-12 else [z.real, z.imag]


# ---------------------------------------------------------------------------
# nc

def nc_enum(args, ctx: Context) -> Result:
    """Enumerates NC(upper, lower); with --count-only reports the count alone."""
    parts = enumerate_nc(args.upper, args.lower, limit=ctx.settings.nc_limit)
    if args.count_only:
        return {"count": len(parts)}
    return {"count": len(parts), "partitions": [p.to_text() for p in parts]}


def nc_compose(args, ctx: Context) -> Result:
    """qp for p in NC(k,l) and q in NC(l,m), with central blocks and cycle count."""
    res = compose(_partition(args.q, args.q_shape), _partition(args.p, args.p_shape))
    return {
        "result": res.result.to_text(),
        "shape": [res.result.upper_count, res.result.lower_count],
        "central_blocks": res.central_blocks,
        "cycles": res.cycles,
    }


def nc_tensor(args, ctx: Context) -> Result:
    """p ⊗ q, p on the left."""
    r = tensor(_partition(args.p, args.p_shape), _partition(args.q, args.q_shape))
    return {"result": r.to_text(), "shape": [r.upper_count, r.lower_count]}


def nc_adjoint(args, ctx: Context) -> Result:
    """p*, the reflection of p."""
    r = adjoint(_partition(args.p, args.p_shape))
    return {"result": r.to_text(), "shape": [r.upper_count, r.lower_count]}


# ---------------------------------------------------------------------------
# alg / graph

def alg_make(args, ctx: Context) -> Result:
    """Builds an algebra from --blocks JSON (or --algebra) and reports its derived data."""
    if args.blocks:
        try:
            blocks = json.loads(args.blocks)
        except json.JSONDecodeError as e:
            raise ParseError(f"--blocks is not JSON: {e}") from e
        spec = make_algebra(blocks, normalize=args.normalize)
    elif args.algebra:
        spec = resolve_algebra(args.algebra)
    else:
        raise ParseError("alg make needs --blocks or --algebra")
    return _algebra_summary(spec)


def alg_verify(args, ctx: Context) -> Result:
    """Checks unit, associativity, Frobenius and m^(k) m^(k)* identities."""
    spec = resolve_algebra(args.algebra)
    return verify_structure(spec, k_max=args.k, tol=ctx.tol).to_document()


def graph_analyze(args, ctx: Context) -> Result:
    """Triviality test of d and its spectral projections (normal d only)."""
    if args.graph:
        g = load_quantum_graph(args.graph)
    elif args.adjacency:
        try:
            g = from_classical_graph(json.loads(args.adjacency))
        except json.JSONDecodeError as e:
            raise ParseError(f"--adjacency is not JSON: {e}") from e
    else:
        raise ParseError("graph analyze needs --graph or --adjacency")
    return graph_constraint_analysis(g, spectral=not args.no_spectral, tol=ctx.tol).to_document()


# ---------------------------------------------------------------------------
# tp

_MODES = {"delta": "delta_form", "oneform": "one_form"}


def tp_build(args, ctx: Context) -> Result:
    """The matrix of T_p in the orthonormal tensor basis (of ψ̃ = δψ with --mode oneform)."""
    spec = resolve_algebra(args.algebra)
    if args.mode:
        spec, _ = working_algebra(spec, _MODES[args.mode])
    op = build_tp(spec, _partition(args.p, args.p_shape))
    if args.tsv:
        return op.to_tsv()
    return {
        "domain_power": op.domain_power,
        "codomain_power": op.codomain_power,
        "dim": op.dim,
        "matrix": [[_number(x) for x in row] for row in op.matrix],
    }


def tp_verify(args, ctx: Context) -> Result:
    """Tensor, adjoint and composition laws of p -> T_p up to --k points."""
    report = verify_calculus(resolve_algebra(args.algebra), args.k, mode=_MODES[args.mode], tol=ctx.tol,
                             limit=ctx.settings.nc_limit)
    return report.to_document()


def tp_gram(args, ctx: Context) -> Result:
    """Rank of the Gram matrix of {T_p | p ∈ NC(upper, lower)}; the matrix itself with --tsv."""
    spec = resolve_algebra(args.algebra)
    limit = ctx.settings.nc_limit
    if args.tsv:
        return matrix_to_tsv(gram_matrix(spec, args.upper, args.lower, limit=limit))
    rank = gram_rank(spec, args.upper, args.lower, rtol=ctx.settings.rank_rtol, limit=limit)
    return {
        "rank": rank,
        "catalan": catalan(args.upper + args.lower),
        "flags": hypothesis_flags(spec, delta_form_needed=False),
    }


# ---------------------------------------------------------------------------
# ring

def ring_validate(args, ctx: Context) -> Result:
    """Conjugation, unit, Frobenius, dimension and associativity laws of a fusion ring."""
    ring = ctx.ring(args.ring)
    report = validate_ring(ring, sample_budget=args.budget, seed=ctx.seed, tol=ctx.tol)
    ctx.cache.store(ring)
    return report.to_document()


def ring_tensor(args, ctx: Context) -> Result:
    """N_{xy}^c for two labels."""
    ring = ctx.ring(args.ring)
    out = ring.fuse(args.x, args.y)
    ctx.cache.store(ring)
    return out


def ring_homdim(args, ctx: Context) -> Result:
    """dim Hom(x_1 ⊗ ..., y_1 ⊗ ...) in G for two words."""
    ring = ctx.ring(args.ring)
    value = hom_dim(ring, parse_word(args.x), parse_word(args.y))
    ctx.cache.store(ring)
    return {"hom_dim": value}


# ---------------------------------------------------------------------------
# wreath

def wreath_tensor_verb(args, ctx: Context) -> Result:
    """r_x ⊗ r_y as a formal sum of words."""
    ring = ctx.ring(args.ring)
    out = wreath_tensor(ring, parse_word(args.x), parse_word(args.y))
    ctx.cache.store(ring)
    return out.to_json()


def wreath_decompose_basic(args, ctx: Context) -> Result:
    """a(α_1) ⊗ ... ⊗ a(α_k) for the word --x."""
    ring = ctx.ring(args.ring)
    out = decompose_basic_tensor(ring, parse_word(args.x))
    ctx.cache.store(ring)
    return out.to_json()


def wreath_homdim(args, ctx: Context) -> Result:
    """dim Hom(a(upper), a(lower)) by decorated partitions, the fusion rule, or both."""
    ring = ctx.ring(args.ring)
    spec = resolve_algebra(args.algebra) if args.algebra else None
    value = wreath_hom_dim(ring, spec, parse_word(args.upper), parse_word(args.lower),
                           method=args.method, limit=ctx.settings.nc_limit)
    ctx.cache.store(ring)
    doc = {"method": args.method, "flags": hypothesis_flags(spec)}
    if args.method == "both":
        doc["hom_dim"], doc["fusion"] = value
    else:
        doc["hom_dim"] = value
    return doc


def wreath_dims(args, ctx: Context) -> Result:
    """dim and quantum dimension of r_x."""
    ring = ctx.ring(args.ring)
    spec = resolve_algebra(args.algebra)
    x = parse_word(args.x)
    d, q = word_dims(ring, spec, x)
    ctx.cache.store(ring)
    return {"word": x.to_text(), "dim": d, "qdim": q, "flags": hypothesis_flags(spec)}


def wreath_moments(args, ctx: Context) -> Result:
    """h(χ(a(1_G))^k), the k-th free Poisson moment."""
    return {"k": args.k, "moment": moments(args.k, limit=ctx.settings.nc_limit)}


def wreath_split(args, ctx: Context) -> Result:
    """Splits a state into δ-form components by equal Tr(Q_T^{-1})."""
    components = free_product_decomposition(resolve_algebra(args.algebra))
    return {"components": [c.to_document() for c in components]}


def wreath_kac(args, ctx: Context) -> Result:
    """Kac type test: ψ tracial and G Kac."""
    ring = ctx.ring(args.ring)
    spec = resolve_algebra(args.algebra)
    return {"kac": kac_check(ring, spec)}


def _label_map(text: Optional[str]) -> dict[str, str]:
    if not text:
        return {}
    out = {}
    for pair in text.split(","):
        a, sep, b = pair.partition(":")
        if not sep or not a.strip() or not b.strip():
            raise ParseError(f"label map entries must look like 'a:b', got {pair!r}")
        out[a.strip()] = b.strip()
    return out


def wreath_iso_check(args, ctx: Context) -> Result:
    """Transport of the fusion rules along a label map φ (labels not listed are fixed)."""
    ring1 = ctx.ring(args.ring)
    ring2 = ctx.ring(args.ring2) if args.ring2 else ring1
    report = verify_semiring_iso(ring1, ring2, _label_map(args.phi), sample_words=args.count, seed=ctx.seed)
    ctx.cache.store(ring1)
    return report.to_document()


Verb = Callable[..., Result]


def load_verbs() -> dict[tuple[str, ...], Verb]:
    """Loads all available verbs, keyed by their command path."""
    return {
        ("nc", "enum"): nc_enum,
        ("nc", "compose"): nc_compose,
        ("nc", "tensor"): nc_tensor,
        ("nc", "adjoint"): nc_adjoint,
        ("alg", "make"): alg_make,
        ("alg", "verify"): alg_verify,
        ("graph", "analyze"): graph_analyze,
        ("tp", "build"): tp_build,
        ("tp", "verify"): tp_verify,
        ("tp", "gram"): tp_gram,
        ("ring", "validate"): ring_validate,
        ("ring", "tensor"): ring_tensor,
        ("ring", "homdim"): ring_homdim,
        ("wreath", "tensor"): wreath_tensor_verb,
        ("wreath", "decompose-basic"): wreath_decompose_basic,
        ("wreath", "homdim"): wreath_homdim,
        ("wreath", "dims"): wreath_dims,
        ("wreath", "moments"): wreath_moments,
        ("wreath", "split"): wreath_split,
        ("wreath", "kac"): wreath_kac,
        ("wreath", "iso-check"): wreath_iso_check,
        ("moments",): wreath_moments,
    }


def verb_summary(verb: Verb) -> str:
    """First line of the verb's docstring, used as its help text."""
    doc = inspect.getdoc(verb) or ""
    return doc.splitlines()[0] if doc else ""
