"""
Synthetic shares and the decoding radius
========================================

Decoy shares hide how many real matches an account has. The server can
still recover the key once real shares outnumber the noise enough:
n >= t + 2e, with e synthetic shares among n.
"""

import random

from cssim.rs import NoisyShareSet, brute_force_decode, bw_decode
from cssim.shamir import AccountSecret

p, t = 97, 3
rng = random.Random(4)

for real, noise in [(3, 0), (4, 1), (4, 2), (5, 2), (7, 2), (6, 3), (5, 4)]:
    secret = AccountSecret.generate(t, p, rng)
    shares = [secret.deal_next() for _ in range(real)] + [secret.deal_synthetic(rng) for _ in range(noise)]
    s = NoisyShareSet(tuple(shares), t, p)
    res = bw_decode(s)
    ok = res.recovered and res.secret == secret.adkey
    check = brute_force_decode(s)
    print(f"real={real} synthetic={noise} n={s.n} radius={s.radius}: "
          f"{'recovered' if ok else res.status.value:12s} brute force agrees: {check.status == res.status}")
