import random

import pytest
import sympy
from hypothesis import given, settings, strategies as st

from cssim.fingerprint import DERIVATIVE_SIDE, Fingerprint
from cssim.psi import (
    RUN_GROUP,
    TEST_GROUP,
    TOY_GROUP,
    UNMATCHED,
    Account,
    Matched,
    ServerKeys,
    Voucher,
    VoucherFormatError,
    client_encode,
    client_encode_synthetic,
    h2g,
    opened_headers,
    publish_blinded_db,
    published_view,
    seal,
    server_process_voucher,
    unseal,
)
from cssim.shamir import AccountSecret, reconstruct

DERIV = bytes(range(256))[: DERIVATIVE_SIDE * DERIVATIVE_SIDE]


def _setup(group, n_db=20, seed=0, p=None):
    rng = random.Random(seed)
    keys = ServerKeys.generate(group, rng)
    db = [Fingerprint(rng.getrandbits(64)) for _ in range(n_db)]
    table = publish_blinded_db(keys, db)
    published = published_view(keys, table, rng)
    account = Account(7, AccountSecret.generate(3, p or (1 << 61) - 1, rng))
    return rng, keys, db, table, published, account


@pytest.mark.parametrize("group", [TOY_GROUP, TEST_GROUP, RUN_GROUP])
def test_group_parameters(group):
    assert sympy.isprime(group.q) and sympy.isprime(group.r)
    assert group.q == 2 * group.r + 1
    assert pow(group.g, group.r, group.q) == 1 and group.g != 1
    assert group.contains(h2g(Fingerprint(123), group))
    assert not group.contains(0) and not group.contains(group.q)


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**64 - 1), st.integers(1, 1018), st.integers(1, 1018))
def test_dh_agreement(fp, alpha, beta):
    g = TEST_GROUP
    h = h2g(fp, g)
    P, Q = pow(h, alpha, g.q), pow(h, beta, g.q)
    assert pow(Q, alpha, g.q) == pow(P, beta, g.q)


def test_publish_examples():
    keys = ServerKeys(TEST_GROUP, 1, 5)
    assert len(publish_blinded_db(keys, [])) == 0
    fps = [Fingerprint(v) for v in (11, 22, 33)]
    t = publish_blinded_db(keys, fps)
    assert [t.lookup(fp) for fp in fps] == [h2g(fp, TEST_GROUP) for fp in fps]
    t2 = publish_blinded_db(ServerKeys(TEST_GROUP, 2, 5), fps)
    assert all(t.lookup(fp) != t2.lookup(fp) for fp in fps)


def test_published_view_has_no_secret():
    _, keys, _, table, published, _ = _setup(RUN_GROUP)
    blob = published.to_bytes()
    assert keys.alpha.to_bytes(8, "little") not in blob
    assert "alpha=<hidden>" in repr(keys)
    assert all(k is None for tab in published.table.keys for k in tab)
    assert all(RUN_GROUP.contains(v) for tab in published.table.values for v in tab)


def test_match_opens_exactly_one_position():
    rng, keys, db, table, published, account = _setup(RUN_GROUP)
    for fp in db:
        v = client_encode(fp, DERIV, account, published, rng)
        opened = opened_headers(keys, v)
        assert len(opened) == 1
        assert opened[0].position == table.locate(fp)[0]
        res = server_process_voucher(keys, v)
        assert isinstance(res, Matched) and res.share.x == v.sequence
        assert res.share.y == account.secret.poly(v.sequence)


def test_absent_fingerprints_never_open_run_group():
    rng, keys, db, table, published, account = _setup(RUN_GROUP, seed=1)
    dbset = set(db)
    for _ in range(10_000):
        fp = Fingerprint(rng.getrandbits(64))
        assert fp not in dbset
        v = client_encode(fp, DERIV, account, published, rng)
        assert server_process_voucher(keys, v) == UNMATCHED


def test_test_group_opens_iff_h2g_collides():
    # in a 1019-element subgroup H2G collides (and random filler can hit
    # H(fp)^alpha); the server must open exactly the headers whose slot equals H(fp)^alpha
    rng, keys, db, table, published, account = _setup(TEST_GROUP, n_db=50, seed=2, p=257)
    spurious = 0
    for _ in range(10_000):
        fp = Fingerprint(rng.getrandbits(64))
        if fp in db:
            continue
        want = set()
        blinded = pow(h2g(fp, TEST_GROUP), keys.alpha, TEST_GROUP.q)
        for tab, pos in enumerate(table.positions(fp)):
            if published.table.slot(tab, pos) == blinded:
                want.add(tab)
        if account.secret._counter >= 250:
            account = Account(account.account_id + 1, AccountSecret.generate(3, 257, rng))
        v = client_encode(fp, DERIV, account, published, rng)
        got = {m.position for m in opened_headers(keys, v)}
        assert got == want
        spurious += bool(got)
    # the tiny group really does produce false openings; the run group does not
    assert spurious > 0


def test_fresh_vouchers_differ():
    rng, keys, db, table, published, account = _setup(RUN_GROUP)
    a = client_encode(db[0], DERIV, account, published, rng)
    b = client_encode(db[0], DERIV, account, published, rng)
    assert a.sequence != b.sequence
    assert a.headers[0][0] != b.headers[0][0] and a.headers[1][0] != b.headers[1][0]


def test_round_trip_serialization():
    rng, keys, db, table, published, account = _setup(RUN_GROUP, seed=3)
    for i in range(10_000):
        if i % 3 == 0:
            v = client_encode_synthetic(account, published, rng)
        else:
            v = client_encode(Fingerprint(rng.getrandbits(64)), DERIV, account, published, rng)
        assert Voucher.from_bytes(v.to_bytes(RUN_GROUP), RUN_GROUP) == v


def test_truncated_and_corrupt_vouchers():
    rng, keys, db, table, published, account = _setup(RUN_GROUP)
    data = client_encode(db[0], DERIV, account, published, rng).to_bytes(RUN_GROUP)
    for cut in range(len(data)):
        with pytest.raises(VoucherFormatError):
            Voucher.from_bytes(data[:cut], RUN_GROUP)
    with pytest.raises(VoucherFormatError):
        Voucher.from_bytes(data + b"\x00", RUN_GROUP)
    with pytest.raises(VoucherFormatError):
        Voucher.from_bytes(b"XXXX" + data[4:], RUN_GROUP)
    with pytest.raises(VoucherFormatError):
        Voucher.from_bytes(data, TEST_GROUP)


def test_synthetic_format_and_opening():
    rng, keys, db, table, published, account = _setup(RUN_GROUP)
    real = client_encode(db[1], DERIV, account, published, rng)
    for _ in range(200):
        syn = client_encode_synthetic(account, published, rng)
        assert len(syn.to_bytes(RUN_GROUP)) == len(real.to_bytes(RUN_GROUP))
        assert [len(ct) for _, ct in syn.headers] == [len(ct) for _, ct in real.headers]
        opened = opened_headers(keys, syn)
        assert len(opened) == 1
        res = server_process_voucher(keys, syn)
        assert isinstance(res, Matched) and res.share.x == syn.sequence
        assert len(res.inner) == len(server_process_voucher(keys, real).inner)


def test_synthetic_share_breaks_reconstruction():
    rng = random.Random(97)
    p, t, trials = 97, 3, 5000
    hits = 0
    keys = ServerKeys.generate(RUN_GROUP, rng)
    published = published_view(keys, publish_blinded_db(keys, []), rng)
    for i in range(trials):
        account = Account(i, AccountSecret.generate(t, p, rng))
        real = [account.secret.deal_next() for _ in range(t - 1)]
        syn = server_process_voucher(keys, client_encode_synthetic(account, published, rng)).share
        hits += reconstruct(real + [syn], t, p) == account.secret.adkey
    # Binomial(trials, 1/p): mean 51.5, sd 7.1
    assert hits <= trials / p + 4 * (trials / p) ** 0.5


def test_seal_rejects_tampering():
    key = bytes(range(64))
    ct = seal(key, b"hello world")
    assert unseal(key, ct) == b"hello world"
    assert unseal(bytes(64), ct) is None
    assert unseal(key, ct[:-1] + bytes([ct[-1] ^ 1])) is None
    assert unseal(key, b"short") is None
