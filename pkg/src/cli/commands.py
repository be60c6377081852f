"""
Command-line controller: parses arguments, dispatches to the verb registry and renders results.

Result documents go to stdout as JSON (or TSV with --tsv); logs go to stderr. Every failure is
reported as ``{"error": code, "message": ...}`` with the error's exit code.
"""
import argparse
import json
import logging
import sys
from typing import Optional, Sequence, TextIO

from src.cli.verbs import Context, load_verbs, verb_summary
from src.core.errors import ParseError, ToleranceBreach, WreathcatError
from src.data_stores.fusion_cache import FusionCache
from src.utils.config import Settings
from src.utils.logging import setup_logging

logger = logging.getLogger(__name__)

FAILED_REPORT_EXIT = ToleranceBreach.exit_code

RING = (("--ring",), {"default": "trivial", "help": "built-in ring name or ring JSON file"})
ALGEBRA = (("--algebra",), {"help": "algebra JSON file, or C<n> / M<n>"})
P = (("--p",), {"required": True, "help": "partition, e.g. '[[1,3],[2]]'"})
P_SHAPE = (("--p-shape",), {"required": True, "help": "rows of p as 'k,l'"})
Q = (("--q",), {"required": True})
Q_SHAPE = (("--q-shape",), {"required": True})
X = (("--x",), {"default": "", "help": "comma-joined word"})
Y = (("--y",), {"default": "", "help": "comma-joined word"})
TSV = (("--tsv",), {"action": "store_true", "help": "print the matrix as TSV"})
MODE_CHOICES = ("delta", "oneform")

ARGUMENTS = {
    ("nc", "enum"): [
        (("--upper",), {"type": int, "default": 0}),
        (("--lower",), {"type": int, "default": 0}),
        (("--count-only",), {"action": "store_true"}),
    ],
    ("nc", "compose"): [P, P_SHAPE, Q, Q_SHAPE],
    ("nc", "tensor"): [P, P_SHAPE, Q, Q_SHAPE],
    ("nc", "adjoint"): [P, P_SHAPE],
    ("alg", "make"): [
        (("--blocks",), {"help": "JSON list of {\"size\": n, \"q\": [...]}"}),
        ALGEBRA,
        (("--normalize",), {"action": "store_true"}),
    ],
    ("alg", "verify"): [ALGEBRA, (("--k",), {"type": int, "default": 5})],
    ("graph", "analyze"): [
        (("--graph",), {"help": "quantum graph JSON file"}),
        (("--adjacency",), {"help": "JSON 0/1 matrix of a classical graph"}),
        (("--no-spectral",), {"action": "store_true"}),
    ],
    ("tp", "build"): [
        ALGEBRA, P, P_SHAPE, TSV,
        (("--mode",), {"choices": MODE_CHOICES, "default": None, "help": "build for ψ itself when omitted"}),
    ],
    ("tp", "verify"): [
        ALGEBRA,
        (("--k",), {"type": int, "default": 4, "help": "largest k+l+m checked"}),
        (("--mode",), {"choices": MODE_CHOICES, "default": "delta"}),
    ],
    ("tp", "gram"): [
        ALGEBRA,
        (("--upper",), {"type": int, "default": 0}),
        (("--lower",), {"type": int, "default": 0}),
        TSV,
    ],
    ("ring", "validate"): [RING, (("--budget",), {"type": int, "default": 500})],
    ("ring", "tensor"): [RING, (("--x",), {"required": True}), (("--y",), {"required": True})],
    ("ring", "homdim"): [RING, X, Y],
    ("wreath", "tensor"): [RING, X, Y],
    ("wreath", "decompose-basic"): [RING, X],
    ("wreath", "homdim"): [
        RING,
        ALGEBRA,
        (("--upper",), {"default": "", "help": "comma-joined labels"}),
        (("--lower",), {"default": "", "help": "comma-joined labels"}),
        (("--method",), {"choices": ("partitions", "fusion", "both"), "default": "both"}),
    ],
    ("wreath", "dims"): [RING, ALGEBRA, X],
    ("wreath", "moments"): [(("--k",), {"type": int, "required": True})],
    ("wreath", "split"): [ALGEBRA],
    ("wreath", "kac"): [RING, ALGEBRA],
    ("wreath", "iso-check"): [
        RING,
        (("--ring2",), {"help": "target ring (default: --ring)"}),
        (("--phi",), {"default": "", "help": "label map 'a:b,c:d'; unlisted labels are fixed"}),
        (("--count",), {"type": int, "default": 100, "help": "random word pairs"}),
    ],
    ("moments",): [(("--k",), {"type": int, "required": True})],
}

NEEDS_ALGEBRA = {("alg", "verify"), ("tp", "build"), ("tp", "verify"), ("tp", "gram"),
                 ("wreath", "dims"), ("wreath", "split"), ("wreath", "kac")}


class CommandParser(argparse.ArgumentParser):
    """Raises ParseError instead of printing usage and exiting, so bad flags get an error document."""

    def error(self, message):
        raise ParseError(f"{self.prog}: {message}")


def _common_options() -> argparse.ArgumentParser:
    common = CommandParser(add_help=False)
    common.add_argument("--tol", type=float, default=None, help="identity-check tolerance")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--cache", default=None, help="directory for persisted fusion tables")
    common.add_argument("--verbose", action="store_true")
    common.add_argument("--debug", action="store_true")
    return common


def build_parser() -> argparse.ArgumentParser:
    verbs = load_verbs()
    common = _common_options()
    parser = CommandParser(prog="wreathcat", description=__doc__,
                           formatter_class=argparse.RawDescriptionHelpFormatter)
    top = parser.add_subparsers(dest="group", required=True)
    groups: dict[str, argparse._SubParsersAction] = {}
    for path, verb in verbs.items():
        if len(path) == 1:
            leaf = top.add_parser(path[0], parents=[common], help=verb_summary(verb))
        else:
            if path[0] not in groups:
                group_parser = top.add_parser(path[0], help=f"{path[0]} commands")
                groups[path[0]] = group_parser.add_subparsers(dest="verb", required=True)
            leaf = groups[path[0]].add_parser(path[1], parents=[common], help=verb_summary(verb))
        for flags, kwargs in ARGUMENTS[path]:
            kwargs = dict(kwargs)
            if path in NEEDS_ALGEBRA and flags == ("--algebra",):
                kwargs["required"] = True
            leaf.add_argument(*flags, **kwargs)
        leaf.set_defaults(handler=verb, path=path)
    return parser


def render(result) -> str:
    if isinstance(result, str):
        return result.rstrip("\n")
    return json.dumps(result, separators=(",", ":"), ensure_ascii=False)


def run(argv: Optional[Sequence[str]] = None, stdout: Optional[TextIO] = None) -> int:
    """Runs one command and returns its exit code."""
    stdout = stdout or sys.stdout
    args = None
    try:
        args = build_parser().parse_args(argv)
        settings = Settings.from_env()
        level = "DEBUG" if args.debug else ("INFO" if args.verbose else settings.log_level)
        setup_logging(level)
        ctx = Context(
            settings=settings,
            cache=FusionCache(args.cache or settings.cache_dir),
            tol=settings.tol if args.tol is None else args.tol,
            seed=args.seed,
        )
        logger.info("running %s", " ".join(args.path))
        result = args.handler(args, ctx)
    except WreathcatError as e:
        logger.info("%s failed: %s", " ".join(getattr(args, "path", ("wreathcat",))), e.message)
        print(render(e.to_document()), file=stdout)
        return e.exit_code
    except Exception:
        logger.exception("unexpected failure")
        return 1
    print(render(result), file=stdout)
    if isinstance(result, dict) and result.get("passed") is False:
        return FAILED_REPORT_EXIT
    return 0


def main():
    sys.exit(run())
