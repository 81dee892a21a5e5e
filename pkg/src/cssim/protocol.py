"""End-to-end detection pipeline: device clients, the server, threshold sweeps.

The server sees only vouchers. For each account it keeps the shares of
vouchers whose outer layer opened, plus a bare counter for the rest. A sweep
runs Berlekamp-Welch over every account holding at least ``t`` shares and
reports an account only if the recovered key actually decrypts inner
payloads.
"""

from __future__ import annotations

import random
import threading
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional, Union

from .config import ConfigError, ScenarioConfig
from .corpus import MANIFEST, Corpus, generate_corpus
from .field import RUN_PRIME
from .fingerprint import Fingerprint, Image, compute_fingerprint, make_visual_derivative
from .psi import (
    RUN_GROUP,
    TEST_GROUP,
    Account,
    Matched,
    PublishedDatabase,
    ServerKeys,
    Voucher,
    VoucherFormatError,
    client_encode,
    client_encode_synthetic,
    inner_key,
    publish_blinded_db,
    published_view,
    server_process_voucher,
    unseal,
)
from .rs import NoisyShareSet, bw_decode
from .shamir import AccountSecret

PROFILES = {"run": (RUN_PRIME, RUN_GROUP), "test": (257, TEST_GROUP)}
METRICS_SCHEMA_ID = "cssim.metrics/1"


class IngestOutcome(Enum):
    MATCHED = "matched"
    UNMATCHED = "unmatched"
    PARSE_ERROR = "parse_error"
    DUPLICATE = "duplicate"


@dataclass(frozen=True)
class UploadRecord:
    sequence: int
    synthetic: bool
    fingerprint: Optional[Fingerprint]
    derivative: Optional[bytes]


@dataclass
class DeviceClient:
    account: Account
    synthetic_rate: float
    rng: random.Random
    log: list = field(default_factory=list)

    @property
    def account_id(self) -> int:
        return self.account.account_id

    @classmethod
    def create(cls, account_id: int, t: int, p: int, synthetic_rate: float, rng: random.Random) -> DeviceClient:
        secret = AccountSecret.generate(t, p, rng)
        return cls(Account(account_id, secret), synthetic_rate, rng)


def client_upload(client: DeviceClient, image: Image, published: PublishedDatabase,
                  rng: Optional[random.Random] = None, features: Optional[tuple] = None) -> Voucher:
    """One upload. With probability rho the voucher is synthetic.

    ``features`` may carry a precomputed ``(fingerprint, derivative)`` for
    ``image``; both are pure functions of the pixels.
    """
    rng = rng or client.rng
    if rng.random() < client.synthetic_rate:
        v = client_encode_synthetic(client.account, published, rng)
        client.log.append(UploadRecord(v.sequence, True, None, None))
        return v
    fp, deriv = features if features is not None else (compute_fingerprint(image), make_visual_derivative(image))
    v = client_encode(fp, deriv, client.account, published, rng)
    client.log.append(UploadRecord(v.sequence, False, fp, deriv))
    return v


@dataclass
class AccountState:
    account_id: int
    shares: list = field(default_factory=list)
    inner: dict = field(default_factory=dict)  # sequence -> inner ciphertext
    unmatched: int = 0
    reported: bool = False


@dataclass(frozen=True)
class DetectionReport:
    account_id: int
    adkey: int
    inlier_sequences: tuple
    derivatives: tuple
    synthetic_excluded: int

    def as_dict(self) -> dict:
        return {"account_id": self.account_id, "inlier_sequences": list(self.inlier_sequences),
                "derivatives": len(self.derivatives), "synthetic_excluded": self.synthetic_excluded}


class DetectionServer:
    def __init__(self, keys: ServerKeys, t: int, p: int):
        self.keys = keys
        self.t = t
        self.p = p
        self.accounts: dict = {}
        self.parse_errors: Counter = Counter()
        self.reports: list = []
        self._lock = threading.Lock()
        self._account_locks: dict = {}

    def _state(self, account_id: int) -> tuple:
        with self._lock:
            if account_id not in self.accounts:
                self.accounts[account_id] = AccountState(account_id)
                self._account_locks[account_id] = threading.Lock()
            return self.accounts[account_id], self._account_locks[account_id]

    def ingest(self, v: Union[Voucher, bytes], source: str = "client") -> IngestOutcome:
        if isinstance(v, (bytes, bytearray)):
            try:
                v = Voucher.from_bytes(bytes(v), self.keys.group)
            except VoucherFormatError:
                with self._lock:
                    self.parse_errors[source] += 1
                return IngestOutcome.PARSE_ERROR
        state, lock = self._state(v.account_id)
        with lock:
            if any(s.x == v.sequence for s in state.shares):
                return IngestOutcome.DUPLICATE
            res = server_process_voucher(self.keys, v)
            if not isinstance(res, Matched):
                state.unmatched += 1
                return IngestOutcome.UNMATCHED
            state.shares.append(res.share)
            state.inner[res.share.x] = res.inner
            return IngestOutcome.MATCHED

    def sweep(self) -> list:
        """Attempt threshold reveal on every eligible account; returns new reports."""
        new = []
        for account_id in sorted(self.accounts):
            state, lock = self._state(account_id)
            with lock:
                if state.reported or len(state.shares) < self.t:
                    continue
                report = self._try_reveal(state)
                if report is not None:
                    state.reported = True
                    new.append(report)
        self.reports.extend(new)
        return new

    def _try_reveal(self, state: AccountState) -> Optional[DetectionReport]:
        shares = sorted(state.shares, key=lambda s: s.x)
        n = len(shares)
        res = bw_decode(NoisyShareSet(shares, self.t, self.p, (n - self.t) // 2))
        if not res.recovered:
            return None
        adkey = res.secret
        seqs, derivs = [], []
        for x in sorted(res.inlier_xs):
            pt = unseal(inner_key(adkey, state.account_id, x), state.inner[x])
            if pt is not None:
                seqs.append(x)
                derivs.append(pt)
        # a wrong polynomial (noise beyond the radius) unlocks nothing
        if len(seqs) < self.t:
            return None
        return DetectionReport(state.account_id, adkey, tuple(seqs), tuple(derivs), n - len(seqs))


def server_ingest(server: DetectionServer, v, source: str = "client") -> IngestOutcome:
    return server.ingest(v, source)


def server_sweep(server: DetectionServer) -> list:
    return server.sweep()


@dataclass
class ClientPlan:
    client: DeviceClient
    match_rate: float
    kind: str  # "heavy", "light" or "benign"


def _corpus_for(config: ScenarioConfig, corpus_seed: int) -> Corpus:
    if config.corpus_dir:
        if not (Path(config.corpus_dir) / MANIFEST).is_file():
            raise ConfigError(f"corpus_dir has no {MANIFEST}: {config.corpus_dir}")
        return Corpus.load(config.corpus_dir)
    return generate_corpus(corpus_seed, config.db_size, config.benign_size, config.image_side)


def scenario_corpus(config: ScenarioConfig) -> Corpus:
    """The corpus a :class:`Simulation` built from ``config`` would use."""
    return _corpus_for(config, random.Random(config.seed).getrandbits(32))


class Simulation:
    """A server, its published database and a population of clients."""

    def __init__(self, config: ScenarioConfig, corpus: Optional[Corpus] = None):
        self.config = config
        self.p, self.group = PROFILES[config.profile]
        self.rng = random.Random(config.seed)
        corpus_seed = self.rng.getrandbits(32)
        self.corpus = corpus if corpus is not None else _corpus_for(config, corpus_seed)
        self._features = {}
        corpus = self.corpus
        self.db_idx = corpus.indices("db")
        self.benign_idx = corpus.indices("benign")
        self.keys = ServerKeys.generate(self.group, self.rng)
        self.table = publish_blinded_db(self.keys, corpus.db_fingerprints)
        self.published = published_view(self.keys, self.table, self.rng)
        self.server = DetectionServer(self.keys, config.threshold, self.p)
        self.plans: list = []
        self.bytes_on_wire = 0
        self._wire_lock = threading.Lock()
        self._next_account = 1

    def features(self, idx: int) -> tuple:
        f = self._features.get(idx)
        if f is None:
            img = self.corpus.images[idx]
            f = (self.corpus.fingerprints[idx], make_visual_derivative(img))
            self._features[idx] = f
        return f

    def add_client(self, match_rate: float = 0.0, kind: str = "benign",
                   synthetic_rate: Optional[float] = None) -> DeviceClient:
        rho = self.config.synthetic_rate if synthetic_rate is None else synthetic_rate
        client_rng = random.Random(self.rng.getrandbits(64))
        client = DeviceClient.create(self._next_account, self.config.threshold, self.p, rho, client_rng)
        self._next_account += 1
        self.plans.append(ClientPlan(client, match_rate, kind))
        return client

    def populate(self) -> None:
        cfg = self.config
        n_heavy = round(cfg.accounts * cfg.heavy_fraction)
        n_light = min(cfg.accounts - n_heavy, round(cfg.accounts * cfg.light_fraction))
        for i in range(cfg.accounts):
            if i < n_heavy:
                self.add_client(cfg.heavy_match_rate, "heavy")
            elif i < n_heavy + n_light:
                self.add_client(cfg.light_match_rate, "light")
            else:
                self.add_client(0.0, "benign")

    def upload(self, client: DeviceClient, idx: int) -> IngestOutcome:
        """Client uploads corpus image ``idx``; the voucher crosses the wire as bytes."""
        v = client_upload(client, self.corpus.images[idx], self.published, features=self.features(idx))
        data = v.to_bytes(self.group)
        with self._wire_lock:
            self.bytes_on_wire += len(data)
        return self.server.ingest(data)

    def upload_image(self, client: DeviceClient, image: Image) -> IngestOutcome:
        v = client_upload(client, image, self.published)
        data = v.to_bytes(self.group)
        with self._wire_lock:
            self.bytes_on_wire += len(data)
        return self.server.ingest(data)

    def pick_image(self, plan: ClientPlan) -> int:
        rng = plan.client.rng
        if self.db_idx and (not self.benign_idx or rng.random() < plan.match_rate):
            return rng.choice(self.db_idx)
        return rng.choice(self.benign_idx)

    def _run_client(self, plan: ClientPlan) -> None:
        for _ in range(self.config.uploads_per_account):
            self.upload(plan.client, self.pick_image(plan))

    def run_workload(self) -> None:
        # warm the feature cache so worker threads only read it
        for idx in range(len(self.corpus)):
            if self.config.accounts and self.config.uploads_per_account:
                self.features(idx)
        if self.config.jobs > 1:
            with ThreadPoolExecutor(self.config.jobs) as pool:
                list(pool.map(self._run_client, self.plans))
        else:
            for plan in self.plans:
                self._run_client(plan)

    def sweep(self) -> list:
        return self.server.sweep()

    def metrics(self) -> dict:
        return simulation_metrics(self)


def _ground_truth(sim: Simulation, client: DeviceClient) -> dict:
    db = set(sim.corpus.db_fingerprints)
    real = sum(1 for r in client.log if not r.synthetic and r.fingerprint in db)
    synth = sum(1 for r in client.log if r.synthetic)
    return {"real_matches": real, "synthetic": synth}


def simulation_metrics(sim: Simulation) -> dict:
    t = sim.config.threshold
    reported = {r.account_id for r in sim.server.reports}
    per_account = []
    totals = Counter()
    for plan in sim.plans:
        c = plan.client
        gt = _ground_truth(sim, c)
        state = sim.server.accounts.get(c.account_id)
        matched = len(state.shares) if state else 0
        unmatched = state.unmatched if state else 0
        n = gt["real_matches"] + gt["synthetic"]
        decodable = gt["real_matches"] >= t and n >= t + 2 * gt["synthetic"]
        is_reported = c.account_id in reported
        per_account.append({
            "account_id": c.account_id, "kind": plan.kind, "uploads": len(c.log),
            "real_matches": gt["real_matches"], "synthetic": gt["synthetic"],
            "matched": matched, "unmatched": unmatched,
            "decodable": decodable, "reported": is_reported,
        })
        totals["uploads"] += len(c.log)
        totals["synthetic_vouchers"] += gt["synthetic"]
        totals["db_matching_uploads"] += gt["real_matches"]
        totals["matched"] += matched
        totals["unmatched"] += unmatched
        if is_reported:
            totals["true_positives" if gt["real_matches"] >= t else "false_positives"] += 1
        elif gt["real_matches"] >= t:
            totals["missed"] += 1
            if decodable:
                totals["decodable_missed"] += 1
    return {
        "schema": METRICS_SCHEMA_ID,
        "seed": sim.config.seed,
        "profile": sim.config.profile,
        "threshold": t,
        "synthetic_rate": sim.config.synthetic_rate,
        "accounts": len(sim.plans),
        "uploads": totals["uploads"],
        "real_vouchers": totals["uploads"] - totals["synthetic_vouchers"],
        "synthetic_vouchers": totals["synthetic_vouchers"],
        "db_matching_uploads": totals["db_matching_uploads"],
        "matched": totals["matched"],
        "unmatched": totals["unmatched"],
        "shares_observed": totals["matched"],
        "parse_errors": sum(sim.server.parse_errors.values()),
        "bytes_on_wire": sim.bytes_on_wire,
        "reports": len(sim.server.reports),
        "true_positives": totals["true_positives"],
        "false_positives": totals["false_positives"],
        "missed": totals["missed"],
        "decodable_missed": totals["decodable_missed"],
        "reported_accounts": sorted(reported),
        "per_account": per_account,
    }


def run_simulation(config: ScenarioConfig, corpus: Optional[Corpus] = None) -> dict:
    """Publish the database, run every client's uploads, sweep once, report metrics."""
    sim = Simulation(config, corpus)
    sim.populate()
    sim.run_workload()
    sim.sweep()
    return sim.metrics()
