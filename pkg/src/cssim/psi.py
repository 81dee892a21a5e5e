"""DH-blinded matching layer and the per-upload voucher.

The server blinds every database fingerprint as ``H(fp)^alpha`` and places it
in a cuckoo table. A client holding fingerprint ``fp`` reads the two slots at
``positions(fp)``, and for each slot ``P`` picks a fresh ``beta`` and sends
``Q = H(fp)^beta`` together with a ciphertext keyed from ``P^beta``. The
server recomputes ``Q^alpha``; the two agree exactly when the slot blinds
the same fingerprint.

DESK-SCALE ONLY. The groups are at most 64 bits, ``H`` has a public discrete
log, and nothing is constant-time. This models structure, not security.

Voucher wire format (little-endian)::

    magic     4s  b"FTPV"
    version   u16 1
    account   u64
    sequence  u64
    2 x [ elem_len u16, elem bytes, ct_len u32, ct bytes ]

Outer plaintext: ``x u64 | y u64 | inner ciphertext``. Every ciphertext is
``body XOR keystream || tag[16]``, keystream and tag both keyed BLAKE2b.
"""

from __future__ import annotations

import hashlib
import hmac
import random
import struct
from dataclasses import dataclass
from typing import Optional, Union

from .cuckoo import CuckooTable, build_with_reseed, mix64, size_for
from .fingerprint import DERIVATIVE_SIDE, Fingerprint
from .shamir import AccountSecret, ShamirShare

VOUCHER_MAGIC = b"FTPV"
VOUCHER_VERSION = 1
TAG_LEN = 16
H2G_SEED = 0x48324720_43535349  # b"H2G CSSI"
DERIVATIVE_LEN = DERIVATIVE_SIDE * DERIVATIVE_SIDE

_VHEAD = struct.Struct("<4sHQQ")
_SHARE = struct.Struct("<QQ")


class VoucherFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Group:
    """Prime-order subgroup of Z_q^* for a safe prime ``q = 2r + 1``."""

    name: str
    q: int
    g: int

    @property
    def r(self) -> int:
        return (self.q - 1) // 2

    @property
    def elem_len(self) -> int:
        return (self.q.bit_length() + 7) // 8

    def contains(self, e: int) -> bool:
        return 1 <= e < self.q and pow(e, self.r, self.q) == 1

    def exp(self, base: int, e: int) -> int:
        return pow(base, e, self.q)

    def random_exponent(self, rng: random.Random) -> int:
        return rng.randrange(1, self.r)

    def random_element(self, rng: random.Random) -> int:
        return pow(self.g, self.random_exponent(rng), self.q)


# 4 = 2^2 is a quadratic residue, hence a generator of the order-r subgroup.
TOY_GROUP = Group("toy", 23, 4)
TEST_GROUP = Group("test", 2039, 4)
RUN_GROUP = Group("run", 0xFFFFFFFFFFFFFA43, 4)
GROUPS = {g.name: g for g in (TOY_GROUP, TEST_GROUP, RUN_GROUP)}


def h2g(fp: Union[Fingerprint, int], group: Group) -> int:
    """Hash a fingerprint into the subgroup (exponent via the keyed mixer)."""
    v = fp if isinstance(fp, int) else fp.value
    e = mix64(v, H2G_SEED) % group.r
    return pow(group.g, e or 1, group.q)


@dataclass(frozen=True)
class ServerKeys:
    group: Group
    alpha: int
    cuckoo_seed: int

    @classmethod
    def generate(cls, group: Group, rng: random.Random) -> ServerKeys:
        return cls(group, group.random_exponent(rng), rng.getrandbits(64))

    @property
    def public_key(self) -> int:
        return pow(self.group.g, self.alpha, self.group.q)

    def __repr__(self):
        return f"ServerKeys(group={self.group.name}, alpha=<hidden>)"


@dataclass
class PublishedDatabase:
    """What clients download: group, ``g^alpha`` and the key-less table."""

    group: Group
    public_key: int
    table: CuckooTable

    def to_bytes(self) -> bytes:
        return self.table.to_bytes(self.group.elem_len)


def publish_blinded_db(keys: ServerKeys, fingerprints, load: float = 0.40) -> CuckooTable:
    """Server-side table mapping each fingerprint to ``H(fp)^alpha``."""
    g = keys.group
    entries = [(fp, pow(h2g(fp, g), keys.alpha, g.q)) for fp in fingerprints]
    return build_with_reseed(entries, size_for(len(entries), load), random.Random(keys.cuckoo_seed))


def published_view(keys: ServerKeys, table: CuckooTable, rng: random.Random) -> PublishedDatabase:
    """Strip keys and pad empty slots with random group elements."""
    g = keys.group
    return PublishedDatabase(g, keys.public_key, table.published(lambda tab, i: g.random_element(rng)))


# ---------------------------------------------------------------- ciphers

def _stream(key: bytes, n: int) -> bytes:
    out = bytearray()
    ctr = 0
    while len(out) < n:
        out += hashlib.blake2b(ctr.to_bytes(8, "little"), key=key, person=b"cssim-stream").digest()
        ctr += 1
    return bytes(out[:n])


def _xor(data: bytes, pad: bytes) -> bytes:
    n = len(data)
    return (int.from_bytes(data, "little") ^ int.from_bytes(pad, "little")).to_bytes(n, "little")


def seal(key: bytes, plaintext: bytes) -> bytes:
    """Encrypt-then-MAC under a 64-byte key (32 cipher, 32 MAC)."""
    body = _xor(plaintext, _stream(key[:32], len(plaintext)))
    tag = hashlib.blake2b(body, key=key[32:], digest_size=TAG_LEN, person=b"cssim-tag").digest()
    return body + tag


def unseal(key: bytes, ciphertext: bytes) -> Optional[bytes]:
    if len(ciphertext) < TAG_LEN:
        return None
    body, tag = ciphertext[:-TAG_LEN], ciphertext[-TAG_LEN:]
    want = hashlib.blake2b(body, key=key[32:], digest_size=TAG_LEN, person=b"cssim-tag").digest()
    if not hmac.compare_digest(tag, want):
        return None
    return _xor(body, _stream(key[:32], len(body)))


def outer_key(shared: int, position: int, account_id: int, sequence: int, group: Group) -> bytes:
    material = shared.to_bytes(group.elem_len, "little") + bytes([position]) + struct.pack("<QQ", account_id, sequence)
    return hashlib.blake2b(material, person=b"cssim-outer").digest()


def inner_key(adkey: int, account_id: int, sequence: int) -> bytes:
    material = adkey.to_bytes(8, "little") + struct.pack("<QQ", account_id, sequence)
    return hashlib.blake2b(material, person=b"cssim-inner").digest()


# ---------------------------------------------------------------- vouchers

@dataclass(frozen=True)
class Voucher:
    account_id: int
    sequence: int
    headers: tuple  # ((Q0, ct0), (Q1, ct1))

    def to_bytes(self, group: Group) -> bytes:
        parts = [_VHEAD.pack(VOUCHER_MAGIC, VOUCHER_VERSION, self.account_id, self.sequence)]
        for q_elem, ct in self.headers:
            parts.append(struct.pack("<H", group.elem_len))
            parts.append(q_elem.to_bytes(group.elem_len, "little"))
            parts.append(struct.pack("<I", len(ct)))
            parts.append(ct)
        return b"".join(parts)

    @classmethod
    def from_bytes(cls, data: bytes, group: Group) -> Voucher:
        try:
            magic, version, account_id, sequence = _VHEAD.unpack_from(data)
        except struct.error as exc:
            raise VoucherFormatError("truncated voucher header") from exc
        if magic != VOUCHER_MAGIC:
            raise VoucherFormatError(f"bad magic {magic!r}")
        if version != VOUCHER_VERSION:
            raise VoucherFormatError(f"unsupported version {version}")
        off = _VHEAD.size
        headers = []
        try:
            for _ in range(2):
                (elen,) = struct.unpack_from("<H", data, off)
                off += 2
                if elen != group.elem_len:
                    raise VoucherFormatError(f"element length {elen} does not match group")
                raw = data[off : off + elen]
                if len(raw) != elen:
                    raise VoucherFormatError("truncated group element")
                off += elen
                (clen,) = struct.unpack_from("<I", data, off)
                off += 4
                ct = data[off : off + clen]
                if len(ct) != clen:
                    raise VoucherFormatError("truncated ciphertext")
                off += clen
                q_elem = int.from_bytes(raw, "little")
                if not group.contains(q_elem):
                    raise VoucherFormatError("header element outside the group")
                headers.append((q_elem, bytes(ct)))
        except struct.error as exc:
            raise VoucherFormatError("truncated voucher") from exc
        if off != len(data):
            raise VoucherFormatError("trailing bytes after voucher")
        return cls(account_id, sequence, tuple(headers))


@dataclass
class Account:
    account_id: int
    secret: AccountSecret


@dataclass(frozen=True)
class Matched:
    share: ShamirShare
    inner: bytes
    position: int


UNMATCHED = "unmatched"


def _outer_plaintext(share: ShamirShare, inner: bytes) -> bytes:
    return _SHARE.pack(share.x, share.y) + inner


def client_encode(fp: Fingerprint, derivative: bytes, account: Account,
                  published: PublishedDatabase, rng: random.Random) -> Voucher:
    """Real voucher for an upload whose fingerprint is ``fp``.

    ``derivative`` is the visual derivative of the uploaded image; it goes
    into the inner layer under the account key.
    """
    if len(derivative) != DERIVATIVE_LEN:
        raise ValueError(f"visual derivative must be {DERIVATIVE_LEN} bytes")
    g = published.group
    share = account.secret.deal_next()
    seq = share.x
    inner = seal(inner_key(account.secret.adkey, account.account_id, seq), derivative)
    plaintext = _outer_plaintext(share, inner)
    h = h2g(fp, g)
    headers = []
    for tab, pos in enumerate(published.table.positions(fp)):
        blinded = published.table.slot(tab, pos)
        if blinded is None:
            blinded = g.random_element(rng)
        beta = g.random_exponent(rng)
        q_elem = pow(h, beta, g.q)
        shared = pow(blinded, beta, g.q)
        headers.append((q_elem, seal(outer_key(shared, tab, account.account_id, seq, g), plaintext)))
    return Voucher(account.account_id, seq, tuple(headers))


def synthetic_position(q0: int, q1: int, group: Group) -> int:
    """Which header of a synthetic voucher is openable; a PRF of both headers."""
    material = q0.to_bytes(group.elem_len, "little") + q1.to_bytes(group.elem_len, "little")
    return hashlib.blake2b(material, digest_size=1, person=b"cssim-synpos").digest()[0] & 1


def client_encode_synthetic(account: Account, published: PublishedDatabase, rng: random.Random) -> Voucher:
    """Decoy voucher: openable by the server, carrying a uniform random share.

    Uses ``g^alpha``: with ``Q = g^gamma`` both sides derive ``g^(alpha*gamma)``.
    """
    g = published.group
    secret = account.secret
    share = secret.deal_synthetic(rng)
    seq = share.x
    dummy_inner = rng.randbytes(DERIVATIVE_LEN + TAG_LEN)
    plaintext = _outer_plaintext(share, dummy_inner)
    gammas = [g.random_exponent(rng) for _ in range(2)]
    qs = [pow(g.g, gm, g.q) for gm in gammas]
    j = synthetic_position(qs[0], qs[1], g)
    headers = []
    for tab in (0, 1):
        if tab == j:
            shared = pow(published.public_key, gammas[tab], g.q)
        else:
            shared = g.random_element(rng)
        headers.append((qs[tab], seal(outer_key(shared, tab, account.account_id, seq, g), plaintext)))
    return Voucher(account.account_id, seq, tuple(headers))


def _open_header(keys: ServerKeys, v: Voucher, tab: int) -> Optional[Matched]:
    g = keys.group
    q_elem, ct = v.headers[tab]
    shared = pow(q_elem, keys.alpha, g.q)
    pt = unseal(outer_key(shared, tab, v.account_id, v.sequence, g), ct)
    if pt is None or len(pt) < _SHARE.size:
        return None
    x, y = _SHARE.unpack_from(pt)
    if x != v.sequence:
        return None
    return Matched(ShamirShare(x, y), pt[_SHARE.size :], tab)


def opened_headers(keys: ServerKeys, v: Voucher) -> list:
    """Every header the server can open (audit helper; the server stops at the first)."""
    return [m for m in (_open_header(keys, v, tab) for tab in range(len(v.headers))) if m is not None]


def server_process_voucher(keys: ServerKeys, v: Voucher):
    """Try both headers; return :class:`Matched` or ``UNMATCHED``."""
    for tab in range(len(v.headers)):
        m = _open_header(keys, v, tab)
        if m is not None:
            return m
    return UNMATCHED
