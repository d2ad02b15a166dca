import pytest

import fidstore


def test_fid_roundtrip():
    fid = fidstore.encode_fid(3, 12345)
    assert fid == (3 << 48) | 12345
    assert fidstore.decode_fid(fid) == (3, 12345)
    assert fidstore.decode_fid(fidstore.encode_fid(5, 7, prefix_bits=8), prefix_bits=8) == (5, 7)


def test_fid_out_of_range():
    with pytest.raises(fidstore.FidStoreError) as exc:
        fidstore.encode_fid(1 << 16, 0)
    assert fidstore.error_code(exc.value) == "OutOfRange"


def test_store_put_get_delete_reuse():
    s = fidstore.Store()
    part = s.create_partition("permanent", width=4)
    a = s.put(part, b"abcd")
    b = s.put(part, b"efgh")
    assert a != b
    assert s.get(a) == b"abcd"
    s.delete(a)
    assert s.get(a) is None
    assert not s.is_live(a)
    with pytest.raises(fidstore.FidStoreError):
        s.put(part, b"toolong")


def test_store_promote_and_drop():
    s = fidstore.Store()
    perm = s.create_partition("permanent")
    temp = s.create_partition("temporary")
    t = s.put(temp, b"secret value")
    p = s.promote(t, perm)
    assert s.get(p) == b"secret value"
    assert s.get(t) == b"secret value"
    s.put(temp, b"scratch")
    assert s.drop_temporary(temp) == 2
    assert s.get(t) is None
    assert s.get(p) == b"secret value"


def test_store_crash_recovery():
    s = fidstore.Store()
    part = s.create_partition("permanent")
    kept = s.put(part, b"durable")
    s.flush()
    lost = s.put(part, b"volatile")
    s.crash()
    s.recover()
    assert s.get(kept) == b"durable"
    assert s.get(lost) is None


def test_store_on_directory(tmp_path):
    s = fidstore.Store(str(tmp_path))
    part = s.create_partition("permanent")
    fid = s.put(part, b"on disk")
    s.flush()
    s.reopen()
    assert s.get(fid) == b"on disk"
    assert not s.simulated


def test_database_transactions():
    db = fidstore.Database()
    db.create_table("t", [("id", "int"), ("k", "secret_int"), ("c", "secret_bytes")])
    tx = db.begin()
    r1 = db.insert(tx, "t", [1, 10, b"alpha"])
    db.insert(tx, "t", [2, 32, "beta"])
    db.commit(tx)

    tx = db.begin()
    rows = db.select(tx, "t")
    assert rows[0] == (r1, [1, 10, b"alpha"])
    assert rows[1][1] == [2, 32, b"beta"]
    assert db.sum(tx, "t", 1) == 42
    assert [r[1][0] for r in db.select_where(tx, "t", 1, ">", 20)] == [2]
    db.commit(tx)

    tx = db.begin()
    db.update(tx, "t", r1, [1, 11, b"alpha2"])
    db.abort(tx)
    tx = db.begin()
    assert db.select(tx, "t", r1, r1)[0][1] == [1, 10, b"alpha"]
    db.commit(tx)
    assert db.check_invariant()["holds"]


def test_database_crash_recover():
    db = fidstore.Database()
    db.create_table("t", [("id", "int"), ("k", "secret_int")])
    tx = db.begin()
    db.insert(tx, "t", [1, 5])
    db.commit(tx)
    db.crash("both")
    report = db.recover()
    assert report["invariant"]["holds"]
    tx = db.begin()
    assert db.sum(tx, "t", 1) == 5
    db.commit(tx)


def test_run_workload_and_crash_point():
    rep = fidstore.run_workload(ops=500, rows=200, seed=3)
    assert rep["final_invariant"]["holds"]
    assert rep["statements"] >= 500
    rep = fidstore.run_workload(ops=500, rows=200, seed=3, crash="AfterDbCommit")
    assert rep["final_invariant"]["violations"] == 0


def test_bench_storage():
    r = fidstore.bench_storage(1000, 4)
    assert r["fid_metadata_per_field"] == 8
    assert r["aead_metadata_per_field"] == 28
    assert r["metadata_reduction_pct"] == pytest.approx(75.0)


def test_bench_ops_smoke():
    r = fidstore.bench_ops(20000)
    assert r["put"]["median_ns"] > 0
    assert r["decrypt_over_get"] > 0
