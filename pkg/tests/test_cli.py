import io
import json

import pytest

from src.cli.commands import build_parser, run
from src.cli.verbs import load_verbs, verb_summary
from src.data_stores.fusion_cache import FusionCache
from src.fusion.fusionring import builtin_ring

SKEW_ALGEBRA = {"blocks": [{"size": 1, "q": ["1/2"]}, {"size": 1, "q": ["1/3"]}, {"size": 1, "q": ["1/6"]}]}


def invoke(*argv):
    out = io.StringIO()
    code = run(list(argv), stdout=out)
    return code, out.getvalue()


def invoke_json(*argv):
    code, text = invoke(*argv)
    return code, json.loads(text)


@pytest.fixture(autouse=True)
def clean_env(monkeypatch, tmp_path):
    for name in ("WREATHCAT_TOL", "WREATHCAT_NC_LIMIT", "WREATHCAT_RANK_RTOL", "WREATHCAT_CACHE_DIR", "WREATHCAT_LOG_LEVEL"):
        monkeypatch.delenv(name, raising=False)
    monkeypatch.chdir(tmp_path)


@pytest.fixture
def skew_file(tmp_path):
    path = tmp_path / "skew.json"
    path.write_text(json.dumps(SKEW_ALGEBRA))
    return str(path)


def test_every_verb_has_help_text():
    for path, verb in load_verbs().items():
        assert verb_summary(verb), path
    assert build_parser().prog == "wreathcat"


def test_moments():
    assert invoke("moments", "--k", "4") == (0, '{"k":4,"moment":14}\n')
    assert invoke_json("wreath", "moments", "--k", "8") == (0, {"k": 8, "moment": 1430})


def test_nc_enum():
    assert invoke_json("nc", "enum", "--upper", "0", "--lower", "3", "--count-only") == (0, {"count": 5})
    code, doc = invoke_json("nc", "enum", "--upper", "1", "--lower", "1")
    assert code == 0
    assert doc == {"count": 2, "partitions": ["[[1],[2]]", "[[1,2]]"]}


def test_nc_compose_worked_example():
    code, doc = invoke_json(
        "nc", "compose",
        "--p", "[[1,2,4],[3]]", "--p-shape", "1,3",
        "--q", "[[1,3,4,5],[2]]", "--q-shape", "3,2",
    )
    assert code == 0
    assert doc == {"result": "[[1,2,3]]", "shape": [1, 2], "central_blocks": 1, "cycles": 1}


def test_nc_adjoint_and_tensor():
    assert invoke_json("nc", "adjoint", "--p", "[[1]]", "--p-shape", "0,1") == (
        0, {"result": "[[1]]", "shape": [1, 0]}
    )
    code, doc = invoke_json("nc", "tensor", "--p", "[[1,2]]", "--p-shape", "1,1", "--q", "[[1]]", "--q-shape", "0,1")
    assert code == 0 and doc["shape"] == [1, 2]


def test_wreath_tensor():
    assert invoke_json("wreath", "tensor", "--ring", "trivial", "--x", "1", "--y", "1") == (
        0, {"": 1, "1": 1, "1,1": 1}
    )
    assert invoke_json("wreath", "decompose-basic", "--ring", "trivial", "--x", "1,1") == (
        0, {"": 2, "1": 3, "1,1": 1}
    )


def test_wreath_homdim():
    code, doc = invoke_json("wreath", "homdim", "--ring", "su2", "--algebra", "C4", "--upper", "1,1", "--lower", "")
    assert code == 0
    assert doc == {"method": "both", "flags": [], "hom_dim": 1, "fusion": 1}
    code, doc = invoke_json(
        "wreath", "homdim", "--ring", "trivial", "--algebra", "C4", "--upper", "1", "--lower", "1,1",
        "--method", "partitions",
    )
    assert (code, doc["hom_dim"]) == (0, 5)
    code, doc = invoke_json("wreath", "homdim", "--ring", "trivial", "--algebra", "C2", "--upper", "1", "--lower", "1")
    assert code == 0 and doc["flags"] == ["dim(B) >= 4"]


def test_ring_verbs():
    assert invoke_json("ring", "tensor", "--ring", "su2", "--x", "1", "--y", "1") == (0, {"0": 1, "2": 1})
    assert invoke_json("ring", "homdim", "--ring", "su2", "--x", "1,1", "--y", "1,1") == (0, {"hom_dim": 2})
    code, doc = invoke_json("ring", "validate", "--ring", "cyclic_dual(3)")
    assert code == 0 and doc["passed"] is True


def test_unknown_ring_is_an_input_error():
    code, doc = invoke_json("wreath", "tensor", "--ring", "e8", "--x", "1", "--y", "1")
    assert code == 2
    assert doc["error"] == "UnknownRingError"


def test_unknown_label_is_an_input_error():
    code, doc = invoke_json("ring", "tensor", "--ring", "su2", "--x", "a", "--y", "1")
    assert code == 2
    assert doc["error"] == "UnknownLabelError"


def test_dims_need_a_delta_form(skew_file):
    code, doc = invoke_json("wreath", "dims", "--ring", "trivial", "--algebra", skew_file, "--x", "1")
    assert code == 3
    assert doc["error"] == "hypothesis"
    assert doc["hypothesis"] == "psi is a delta-form"


def test_dims():
    code, doc = invoke_json("wreath", "dims", "--ring", "trivial", "--algebra", "C4", "--x", "1,1")
    assert code == 0
    assert doc["dim"] == pytest.approx(5.0) and doc["qdim"] == pytest.approx(5.0)


def test_tp_gram_flags_small_algebras():
    code, doc = invoke_json("tp", "gram", "--algebra", "C2", "--upper", "2", "--lower", "2")
    assert code == 0
    assert doc["rank"] < doc["catalan"] == 14
    assert doc["flags"] == ["dim(B) >= 4"]
    code, doc = invoke_json("tp", "gram", "--algebra", "C4", "--upper", "2", "--lower", "2")
    assert doc == {"rank": 14, "catalan": 14, "flags": []}


def test_tp_build():
    code, text = invoke("tp", "build", "--algebra", "C4", "--p", "[[1]]", "--p-shape", "0,1", "--tsv")
    assert code == 0
    assert text.splitlines() == ["0.5"] * 4
    code, doc = invoke_json("tp", "build", "--algebra", "C4", "--p", "[[1,2]]", "--p-shape", "1,1")
    assert code == 0
    assert (doc["domain_power"], doc["codomain_power"], doc["dim"]) == (1, 1, 4)
    assert doc["matrix"][0] == pytest.approx([1.0, 0.0, 0.0, 0.0])


def test_verify_verbs():
    code, doc = invoke_json("alg", "verify", "--algebra", "M2", "--k", "3")
    assert code == 0 and doc["passed"] is True
    code, doc = invoke_json("tp", "verify", "--algebra", "C4", "--k", "3")
    assert code == 0 and doc["passed"] is True and doc["mode"] == "delta_form"
    code, doc = invoke_json("tp", "verify", "--algebra", "C4", "--k", "3", "--mode", "oneform")
    assert code == 0 and doc["mode"] == "one_form"


def test_alg_make():
    code, doc = invoke_json("alg", "make", "--blocks", '[{"size":2,"q":["1/3","2/3"]}]')
    assert code == 0
    assert doc["delta"] == "9/2" and doc["delta_form"] is True and doc["tracial"] is False
    assert doc["dim"] == 4 and doc["flags"] == []
    code, doc = invoke_json("alg", "make", "--blocks", '[{"size":1,"q":[1]},{"size":1,"q":[3]}]', "--normalize")
    assert code == 0 and doc["blocks"][1]["q"] == ["3/4"]
    code, doc = invoke_json("alg", "make", "--blocks", '[{"size":1,"q":[1]},{"size":1,"q":[3]}]')
    assert code == 2 and doc["error"] == "StateError"


def test_wreath_split_and_kac(skew_file):
    code, doc = invoke_json("wreath", "split", "--algebra", skew_file)
    assert code == 0
    assert [c["delta"] for c in doc["components"]] == ["2", "3", "6"]
    assert all(c["renormalized_delta"] == "1" and c["delta_form"] for c in doc["components"])
    assert invoke_json("wreath", "kac", "--ring", "su2", "--algebra", "M2") == (0, {"kac": True})


def test_graph_analyze():
    code, doc = invoke_json("graph", "analyze", "--adjacency", "[[0,1],[1,0]]")
    assert code == 0 and doc["trivial"] is True


def test_failed_iso_check_exits_with_report():
    code, doc = invoke_json("wreath", "iso-check", "--ring", "cyclic_dual(4)", "--phi", "g:g2,g2:g")
    assert code == 5
    assert doc["passed"] is False and doc["precondition_ok"] is False
    code, doc = invoke_json("wreath", "iso-check", "--ring", "cyclic_dual(3)", "--phi", "g:g2,g2:g", "--count", "20")
    assert code == 0 and doc["pairs_checked"] == 20
    code, doc = invoke_json("wreath", "iso-check", "--ring", "cyclic_dual(3)", "--phi", "g=g2")
    assert code == 2 and doc["error"] == "ParseError"


def test_cache_does_not_change_results(tmp_path):
    cache = tmp_path / "cache"
    argv = ("wreath", "tensor", "--ring", "su2", "--x", "1,2", "--y", "2,3")
    plain = invoke(*argv)
    first = invoke(*argv, "--cache", str(cache))
    second = invoke(*argv, "--cache", str(cache))
    assert plain == first == second
    assert FusionCache(cache).path_for(builtin_ring("su2")).exists()


def test_stale_cache_is_ignored(tmp_path):
    cache = tmp_path / "cache"
    cache.mkdir()
    path = FusionCache(cache).path_for(builtin_ring("su2"))
    path.write_text(json.dumps({"hash": "0000", "table": {"1*1": {"7": 1}}}))
    code, doc = invoke_json("ring", "tensor", "--ring", "su2", "--x", "1", "--y", "1", "--cache", str(cache))
    assert (code, doc) == (0, {"0": 1, "2": 1})


def test_cache_directory_from_environment(monkeypatch, tmp_path):
    monkeypatch.setenv("WREATHCAT_CACHE_DIR", str(tmp_path / "env-cache"))
    assert invoke_json("ring", "tensor", "--ring", "so3", "--x", "1", "--y", "1")[0] == 0
    assert FusionCache(tmp_path / "env-cache").path_for(builtin_ring("so3")).exists()


def test_bad_environment_is_an_input_error(monkeypatch):
    monkeypatch.setenv("WREATHCAT_TOL", "tight")
    code, doc = invoke_json("moments", "--k", "2")
    assert code == 2 and doc["error"] == "ParseError"


def test_size_limit_from_environment(monkeypatch):
    monkeypatch.setenv("WREATHCAT_NC_LIMIT", "6")
    code, doc = invoke_json("nc", "enum", "--upper", "4", "--lower", "3", "--count-only")
    assert code == 2 and doc["error"] == "SizeLimitError"


@pytest.mark.parametrize(
    "argv",
    [
        ("nc", "enum", "--upper", "x"),
        ("tp", "gram"),
        ("nope",),
        ("wreath", "homdim", "--method", "guess"),
        ("ring", "tensor", "--ring", "su2", "--x", "1"),
        ("moments", "--k", "3", "--extra"),
        (),
    ],
)
def test_argument_errors_are_reported_as_documents(argv):
    code, doc = invoke_json(*argv)
    assert code == 2
    assert doc["error"] == "ParseError"
    assert doc["message"].startswith("wreathcat")


def test_help_still_exits_cleanly(capsys):
    with pytest.raises(SystemExit) as info:
        run(["--help"], stdout=io.StringIO())
    assert info.value.code == 0
    assert "wreathcat" in capsys.readouterr().out


def test_size_limit_applies_to_tp_verbs(monkeypatch):
    monkeypatch.setenv("WREATHCAT_NC_LIMIT", "3")
    code, doc = invoke_json("tp", "gram", "--algebra", "C4", "--upper", "2", "--lower", "2")
    assert code == 2 and doc["error"] == "SizeLimitError"
    code, doc = invoke_json("tp", "gram", "--algebra", "C4", "--upper", "2", "--lower", "2", "--tsv")
    assert code == 2 and doc["error"] == "SizeLimitError"
    code, doc = invoke_json("tp", "verify", "--algebra", "C4", "--k", "4")
    assert code == 2 and doc["error"] == "SizeLimitError"
    code, doc = invoke_json("tp", "verify", "--algebra", "C4", "--k", "3")
    assert code == 0 and doc["passed"] is True


def test_tp_build_in_one_form_mode():
    code, text = invoke("tp", "build", "--algebra", "M2", "--p", "[[1]]", "--p-shape", "1,0", "--tsv", "--mode", "oneform")
    assert code == 0
    assert [float(x) for x in text.split()] == pytest.approx([2 ** 0.5, 0.0, 0.0, 2 ** 0.5])
    code, text = invoke("tp", "build", "--algebra", "M2", "--p", "[[1]]", "--p-shape", "1,0", "--tsv")
    assert [float(x) for x in text.split()] == pytest.approx([0.5 ** 0.5, 0.0, 0.0, 0.5 ** 0.5])


def test_one_form_mode_needs_a_delta_form(skew_file):
    code, doc = invoke_json("tp", "build", "--algebra", skew_file, "--p", "[[1]]", "--p-shape", "0,1", "--mode", "oneform")
    assert code == 3 and doc["error"] == "hypothesis"
    assert invoke("tp", "build", "--algebra", skew_file, "--p", "[[1]]", "--p-shape", "0,1")[0] == 0


def test_tp_gram_tsv():
    code, text = invoke("tp", "gram", "--algebra", "C4", "--upper", "1", "--lower", "1", "--tsv")
    assert code == 0
    rows = [[float(x) for x in line.split("\t")] for line in text.splitlines()]
    assert len(rows) == 2 and all(len(r) == 2 for r in rows)
    assert rows[0][1] == pytest.approx(rows[1][0])


def test_partition_method_flags_a_state_that_is_not_a_delta_form(skew_file):
    code, doc = invoke_json(
        "wreath", "homdim", "--ring", "trivial", "--algebra", skew_file, "--upper", "1", "--lower", "1",
        "--method", "partitions",
    )
    assert code == 0
    assert doc["hom_dim"] == 2
    assert "psi is a delta-form" in doc["flags"]
