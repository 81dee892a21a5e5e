"""
One upload, end to end
======================

Fingerprint an image, publish a blinded database, send vouchers, and watch
the server learn nothing until an account crosses the threshold.
"""

import random

from cssim.corpus import generate_corpus
from cssim.field import RUN_PRIME
from cssim.fingerprint import compute_fingerprint, make_visual_derivative
from cssim.protocol import DetectionServer
from cssim.psi import (
    RUN_GROUP,
    Account,
    ServerKeys,
    client_encode,
    publish_blinded_db,
    published_view,
)
from cssim.shamir import AccountSecret

rng = random.Random(1)
corpus = generate_corpus(seed=1, n_db=20, n_benign=20)

# the server blinds every database fingerprint with its secret exponent
keys = ServerKeys.generate(RUN_GROUP, rng)
table = publish_blinded_db(keys, corpus.db_fingerprints)
published = published_view(keys, table, rng)
print(f"published table: {table.m} slots per table, {len(table)} entries")

# a device holds one sharing polynomial per account; threshold 5 here
account = Account(1, AccountSecret.generate(5, RUN_PRIME, rng))
server = DetectionServer(keys, t=5, p=RUN_PRIME)

db_images = [corpus.images[i] for i in corpus.indices("db")]
benign_images = [corpus.images[i] for i in corpus.indices("benign")]

for img in benign_images[:5]:
    v = client_encode(compute_fingerprint(img), make_visual_derivative(img), account, published, rng)
    print("benign upload ->", server.ingest(v.to_bytes(RUN_GROUP)).value)

for k, img in enumerate(db_images[:5], 1):
    v = client_encode(compute_fingerprint(img), make_visual_derivative(img), account, published, rng)
    outcome = server.ingest(v.to_bytes(RUN_GROUP))
    reports = server.sweep()
    print(f"db upload {k} -> {outcome.value}; reports so far: {len(server.reports)}")

(report,) = server.reports
print("recovered key matches the device:", report.adkey == account.secret.adkey)
print("inlier sequence numbers:", report.inlier_sequences)
print("thumbnails revealed:", len(report.derivatives), "x", len(report.derivatives[0]), "bytes")
