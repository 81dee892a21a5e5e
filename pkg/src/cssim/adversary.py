"""Attacks on the toy fingerprint and on the detection protocol.

* :func:`evade` - push an image off its own fingerprint (black box: the
  oracle plus the public 8x8 grid geometry).
* :func:`collide` - steer an image onto a chosen fingerprint. Plans edits with
  the public resampling kernel and verifies every round through the oracle.
* :func:`detect_and_quit_strategy` - upload until detection, then stop for good.
* :func:`plant_evidence` - push db-matching uploads through a victim's account.

All budgets are audited: attacks stop the moment any limit would be exceeded.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .fingerprint import (
    BLOCK,
    GRID,
    HASH_SIDE,
    Fingerprint,
    Image,
    compute_fingerprint,
    hamming,
    influence_weights,
    make_visual_derivative,
)
from .corpus import random_fingerprint
from .protocol import IngestOutcome

DEFAULT_EDIT_FRACTION = 0.05
DEFAULT_MAX_DELTA = 32
DEFAULT_MAX_QUERIES = 10_000
ATTACKS_SCHEMA_ID = "cssim.attacks/1"


@dataclass(frozen=True)
class AttackBudget:
    max_edits: int
    max_delta: int = DEFAULT_MAX_DELTA
    max_queries: int = DEFAULT_MAX_QUERIES

    @classmethod
    def default_for(cls, img: Image) -> AttackBudget:
        return cls(int(DEFAULT_EDIT_FRACTION * img.width * img.height))


@dataclass(frozen=True)
class AttackOutcome:
    success: bool
    edits: int
    queries: int
    hamming: int
    distortion: float

    def as_dict(self) -> dict:
        return {"success": self.success, "edits": self.edits, "queries": self.queries,
                "hamming": self.hamming, "distortion": round(self.distortion, 6)}


class _BudgetExhausted(Exception):
    pass


class _Workspace:
    """Mutable copy of an image that meters edits and oracle queries."""

    def __init__(self, img: Image, budget: AttackBudget, oracle: Callable[[Image], Fingerprint]):
        self.orig = img.pixels.astype(np.int16)
        self.cur = self.orig.copy()
        self.budget = budget
        self.oracle = oracle
        self.queries = 0

    @property
    def edits(self) -> int:
        return int(np.count_nonzero(self.cur != self.orig))

    def image(self) -> Image:
        return Image(self.cur.astype(np.uint8))

    def query(self) -> Fingerprint:
        if self.queries >= self.budget.max_queries:
            raise _BudgetExhausted
        self.queries += 1
        return self.oracle(self.image())

    def headroom(self, rows, cols, sign: int) -> np.ndarray:
        """How far each pixel may still move in direction ``sign``."""
        cur = self.cur[np.ix_(rows, cols)]
        orig = self.orig[np.ix_(rows, cols)]
        used = (cur - orig) * sign
        limit = self.budget.max_delta - used
        room = (255 - cur) if sign > 0 else cur
        # a pixel already pushed the other way is left alone
        return np.where(used < 0, 0, np.minimum(limit, room)).astype(np.int64)

    def push(self, rr: np.ndarray, cc: np.ndarray, amounts: np.ndarray, sign: int) -> bool:
        """Apply edits unless that would exceed the edit budget."""
        new_px = int(np.count_nonzero(self.cur[rr, cc] == self.orig[rr, cc]))
        if self.edits + new_px > self.budget.max_edits:
            return False
        self.cur[rr, cc] += (sign * amounts).astype(np.int16)
        return True

    def outcome(self, success: bool, ham: int) -> AttackOutcome:
        dist = float(np.abs(self.cur - self.orig).mean())
        return AttackOutcome(success, self.edits, self.queries, ham, dist)


def _block_regions(side: int) -> list:
    """Source-pixel bounds of each grid cell, assuming the grid maps uniformly."""
    edges = [round(k * side / GRID) for k in range(GRID + 1)]
    return [(edges[k], edges[k + 1]) for k in range(GRID)]


def evade(img: Image, budget: Optional[AttackBudget] = None, rng: Optional[np.random.Generator] = None,
          oracle: Callable[[Image], Fingerprint] = compute_fingerprint, chunk: int = 16):
    """Change the fingerprint of ``img`` within ``budget``.

    Black box: block margins are estimated from source-resolution area means
    over the public 8x8 grid; the oracle decides success. The block nearest
    the threshold is pushed across it in pixel chunks, then the next one.
    """
    budget = budget or AttackBudget.default_for(img)
    rng = rng if rng is not None else np.random.default_rng(0)
    ws = _Workspace(img, budget, oracle)
    if budget.max_edits <= 0 or budget.max_delta <= 0:
        return img, ws.outcome(False, 0)
    try:
        fp0 = ws.query()
    except _BudgetExhausted:
        return img, ws.outcome(False, 0)
    bits = fp0.bits()
    ys, xs = _block_regions(img.height), _block_regions(img.width)
    px = ws.orig.astype(np.float64)
    gmean = px.mean()
    margins = np.array([[px[y0:y1, x0:x1].mean() - gmean for (x0, x1) in xs] for (y0, y1) in ys])
    order = np.argsort(np.abs(margins), axis=None, kind="stable")
    try:
        for flat in order:
            a, b = divmod(int(flat), GRID)
            sign = -1 if bits[a, b] else 1
            (y0, y1), (x0, x1) = ys[a], xs[b]
            rows, cols = np.arange(y0, y1), np.arange(x0, x1)
            room = ws.headroom(rows, cols, sign)
            cand = np.flatnonzero(room.ravel() > 0)
            cand = rng.permutation(cand)
            start = 0
            while start < len(cand):
                left = budget.max_edits - ws.edits
                if left <= 0:
                    raise _BudgetExhausted
                sel = cand[start : start + min(chunk, left)]
                start += len(sel)
                r, c = np.divmod(sel, len(cols))
                if not ws.push(rows[r], cols[c], room.ravel()[sel], sign):
                    raise _BudgetExhausted
                fp = ws.query()
                if fp != fp0:
                    return ws.image(), ws.outcome(True, hamming(fp, fp0))
    except _BudgetExhausted:
        pass
    return ws.image(), ws.outcome(False, 0)


class _Kernel:
    """Per-axis block influence of every source pixel under the public resampler."""

    def __init__(self, height: int, width: int):
        wy = influence_weights(height, HASH_SIDE)
        wx = influence_weights(width, HASH_SIDE)
        self.ry = wy.reshape(GRID, BLOCK, height).sum(axis=1)  # (8, H)
        self.rx = wx.reshape(GRID, BLOCK, width).sum(axis=1)  # (8, W)

    def block_sums(self, px: np.ndarray) -> np.ndarray:
        return self.ry @ px.astype(np.int64) @ self.rx.T


def collide(src: Image, target: Fingerprint, budget: Optional[AttackBudget] = None,
            oracle: Callable[[Image], Fingerprint] = compute_fingerprint, rounds: int = 12):
    """Edit ``src`` until its fingerprint equals ``target``.

    Each round recomputes block margins with the public kernel and, for every
    wrong bit, pushes the most influential pixels of that block just past
    the global mean. One oracle query per round confirms progress.
    """
    budget = budget or AttackBudget.default_for(src)
    ws = _Workspace(src, budget, oracle)
    kern = _Kernel(src.height, src.width)
    want = target.bits().astype(bool)
    fp = None
    try:
        fp = ws.query()
        for _ in range(rounds):
            if fp == target:
                break
            sums = kern.block_sums(ws.cur)
            total = sums.sum()
            margin = sums * (GRID * GRID) - total  # > 0 <=> bit 1
            wrong = np.argwhere((margin > 0) != want)
            # smallest correction first so a tight budget fixes the most bits
            wrong = sorted(map(tuple, wrong), key=lambda ab: abs(int(margin[ab])))
            for a, b in wrong:
                sign = 1 if want[a, b] else -1
                # margin moves by 63 * delta_block per unit of block-sum change
                need = (abs(int(margin[a, b])) + (1 if sign > 0 else 0)) / (GRID * GRID - 1)
                need = need * 1.02 + 1
                rows = np.flatnonzero(kern.ry[a])
                cols = np.flatnonzero(kern.rx[b])
                infl = np.outer(kern.ry[a, rows], kern.rx[b, cols])
                room = ws.headroom(rows, cols, sign)
                gain = (infl * room).ravel()
                idx = np.argsort(-gain, kind="stable")
                cum = np.cumsum(gain[idx])
                k = int(np.searchsorted(cum, need)) + 1
                if k > len(idx) or cum[min(k, len(cum)) - 1] < need:
                    continue
                sel = idx[:k]
                r, c = np.divmod(sel, len(cols))
                ws.push(rows[r], cols[c], room.ravel()[sel], sign)
            fp = ws.query()
    except _BudgetExhausted:
        pass
    if fp is None:
        return src, ws.outcome(False, 64)
    ok = fp == target
    return ws.image(), ws.outcome(ok, hamming(fp, target))


def leakage_probe(img: Image, fp: Optional[Fingerprint] = None) -> float:
    """Correlation between the fingerprint bits and the image's 8x8 block means.

    The fingerprint is a thresholded thumbnail, so anyone holding it learns
    the coarse brightness layout of the picture without seeing it.
    """
    fp = fp or compute_fingerprint(img)
    bits = fp.bits().astype(np.float64).ravel()
    ys, xs = _block_regions(img.height), _block_regions(img.width)
    px = img.pixels.astype(np.float64)
    means = np.array([px[y0:y1, x0:x1].mean() for (y0, y1) in ys for (x0, x1) in xs])
    if bits.std() == 0 or means.std() == 0:
        return 0.0
    return float(np.corrcoef(bits, means)[0, 1])


# ---------------------------------------------------------------- campaigns

def _campaign_job(args):
    name, i, img, seed, budget = args
    rng = np.random.default_rng([seed, i])
    if name == "evade":
        _, out = evade(img, budget, rng=rng)
    else:
        _, out = collide(img, random_fingerprint(rng), budget)
    return i, out


def run_attack_campaign(images, name: str, seed: int, edit_fraction: float = DEFAULT_EDIT_FRACTION,
                        max_delta: int = DEFAULT_MAX_DELTA, max_queries: int = DEFAULT_MAX_QUERIES,
                        jobs: int = 1) -> dict:
    """Run ``evade`` or ``collide`` over ``images``; per-image outcomes plus the rate.

    Each image gets its own generator derived from ``(seed, index)``, so the
    result does not depend on ``jobs``.
    """
    if name not in ("evade", "collide"):
        raise ValueError(f"unknown attack {name!r}")
    tasks = []
    for i, img in enumerate(images):
        budget = AttackBudget(int(edit_fraction * img.width * img.height), max_delta, max_queries)
        tasks.append((name, i, img, seed, budget))
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            results = list(pool.map(_campaign_job, tasks))
    else:
        results = [_campaign_job(t) for t in tasks]
    results.sort(key=lambda r: r[0])
    outcomes = [dict(index=i, **o.as_dict()) for i, o in results]
    n = len(outcomes)
    wins = sum(o["success"] for o in outcomes)
    return {
        "schema": ATTACKS_SCHEMA_ID,
        "attack": name,
        "seed": seed,
        "images": n,
        "successes": wins,
        "success_rate": wins / n if n else 0.0,
        "mean_edits": sum(o["edits"] for o in outcomes) / n if n else 0.0,
        "mean_queries": sum(o["queries"] for o in outcomes) / n if n else 0.0,
        "mean_distortion": round(sum(o["distortion"] for o in outcomes) / n, 6) if n else 0.0,
        "budget": {"edit_fraction": edit_fraction, "max_delta": max_delta, "max_queries": max_queries},
        "outcomes": outcomes,
    }


# ---------------------------------------------------------------- protocol-level

@dataclass
class StrategyTrace:
    account_id: int
    planned: int
    uploads: int
    quit_after_sequence: Optional[int] = None
    matched_before_quit: int = 0
    matched_after_quit: int = 0
    reports: list = field(default_factory=list)

    @property
    def quit(self) -> bool:
        return self.quit_after_sequence is not None

    def as_dict(self) -> dict:
        return {"account_id": self.account_id, "planned": self.planned, "uploads": self.uploads,
                "quit_after_sequence": self.quit_after_sequence,
                "matched_before_quit": self.matched_before_quit,
                "matched_after_quit": self.matched_after_quit, "reports": len(self.reports)}


def _server_matched(sim, account_id: int) -> list:
    state = sim.server.accounts.get(account_id)
    return [] if state is None else [s.x for s in state.shares]


def detect_and_quit_strategy(client, sim, planned: int = 50, signal: str = "match",
                             patience: int = 1, sweep_every: int = 1) -> StrategyTrace:
    """Upload database content until detection, then never again.

    ``signal="match"`` models learning that a voucher matched (quit on the
    ``patience``-th such event); ``"report"`` models learning of a threshold
    report. The simulation keeps sweeping for the rest of the planned
    timeline, so a late detection would show up in the trace.
    """
    if signal not in ("match", "report"):
        raise ValueError(f"unknown detection signal {signal!r}")
    if patience < 1:
        raise ValueError("patience must be >= 1")
    trace = StrategyTrace(client.account_id, planned, 0)
    seen = 0
    for step in range(planned):
        if not trace.quit:
            outcome = sim.upload(client, client.rng.choice(sim.db_idx))
            trace.uploads += 1
            seen += outcome is IngestOutcome.MATCHED
        if step % sweep_every == 0:
            trace.reports.extend(r for r in sim.sweep() if r.account_id == client.account_id)
        if not trace.quit:
            hit = seen >= patience if signal == "match" else bool(trace.reports)
            if hit:
                trace.quit_after_sequence = client.log[-1].sequence
    trace.reports.extend(r for r in sim.sweep() if r.account_id == client.account_id)
    xs = _server_matched(sim, client.account_id)
    cut = trace.quit_after_sequence
    trace.matched_before_quit = sum(1 for x in xs if cut is None or x <= cut)
    trace.matched_after_quit = sum(1 for x in xs if cut is not None and x > cut)
    return trace


@dataclass
class PlantTrace:
    victim_id: int
    planted: int
    report: Optional[object]
    planted_derivatives: list

    @property
    def reported(self) -> bool:
        return self.report is not None


def plant_evidence(victim, images, sim) -> PlantTrace:
    """Push ``images`` through the victim's device, then sweep.

    ``images`` are attacker-chosen: database images, or benign-looking images
    steered onto database fingerprints with :func:`collide`.
    """
    derivs = []
    for img in images:
        sim.upload_image(victim, img)
        derivs.append(make_visual_derivative(img))
    report = None
    for r in sim.sweep():
        if r.account_id == victim.account_id:
            report = r
    if report is None:
        report = next((r for r in sim.server.reports if r.account_id == victim.account_id), None)
    return PlantTrace(victim.account_id, len(images), report, derivs)


def craft_collisions(sources, targets, budget: Optional[AttackBudget] = None) -> list:
    """Collide each source image onto the paired target fingerprint; successes only."""
    out = []
    for src, tgt in zip(sources, targets):
        img, res = collide(src, tgt, budget)
        if res.success:
            out.append(img)
    return out
