import json

from src.data_stores.fusion_cache import FusionCache
from src.fusion.fusionring import builtin_ring, load_ring, ring_content_hash

Z2_DOC = {
    "unit": "e",
    "irreps": [{"id": "e", "conj": "e"}, {"id": "s", "conj": "s"}],
    "tensor": {"s*s": {"e": 1}},
}
FIB_DOC = {
    "unit": "e",
    "irreps": [{"id": "e", "conj": "e"}, {"id": "s", "conj": "s"}],
    "tensor": {"s*s": {"e": 1, "s": 1}},
}


def test_files_are_named_by_content_hash(tmp_path):
    cache = FusionCache(tmp_path)
    z2 = load_ring(Z2_DOC, name="r")
    fib = load_ring(FIB_DOC, name="r")
    assert cache.path_for(z2) != cache.path_for(fib)
    assert ring_content_hash(z2) in cache.path_for(z2).name
    z2.fuse("s", "s")
    cache.store(z2)
    fresh = load_ring(FIB_DOC, name="r")
    assert not cache.load(fresh)
    assert fresh.fuse("s", "s") == {"e": 1, "s": 1}


def test_round_trip_preloads_the_table(tmp_path):
    cache = FusionCache(tmp_path)
    ring = builtin_ring("su2")
    ring.fuse("3", "4")
    cache.store(ring)
    again = builtin_ring("su2")
    assert cache.load(again)
    assert again.table_snapshot() == ring.table_snapshot()


def test_stale_or_unreadable_files_are_ignored(tmp_path):
    cache = FusionCache(tmp_path)
    ring = builtin_ring("so3")
    path = cache.path_for(ring)
    path.write_text(json.dumps({"hash": "feed", "table": {"1*1": {"5": 1}}}))
    assert not cache.load(ring)
    path.write_text("{not json")
    assert not cache.load(ring)
    assert ring.fuse("1", "1") == {"0": 1, "1": 1, "2": 1}


def test_disabled_cache_does_nothing(tmp_path):
    cache = FusionCache(None)
    ring = builtin_ring("su2")
    assert not cache.enabled
    assert not cache.load(ring)
    cache.store(ring)
    assert list(tmp_path.iterdir()) == []
