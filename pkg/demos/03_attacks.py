"""
Attacking the toy fingerprint and the protocol
==============================================

Evasion and collision against the average-hash fingerprint, then the two
protocol-level strategies: quitting on first detection, and planting
colliding images on someone else's account.
"""

import numpy as np

from cssim.adversary import (
    craft_collisions,
    detect_and_quit_strategy,
    plant_evidence,
    run_attack_campaign,
)
from cssim.config import ScenarioConfig
from cssim.fingerprint import make_visual_derivative
from cssim.protocol import Simulation

cfg = ScenarioConfig(seed=3, accounts=0, uploads_per_account=0, db_size=40, benign_size=60)
sim = Simulation(cfg)
images = sim.corpus.images

for name in ("evade", "collide"):
    res = run_attack_campaign(images[:50], name, seed=0)
    print(f"{name:7s}: {res['success_rate']:.2f} success, "
          f"{res['mean_edits']:.0f} pixels edited on average, mean |delta| {res['mean_distortion']:.3f}")

# an adversary who stops at the first sign of detection is never reported
quitter = sim.add_client()
trace = detect_and_quit_strategy(quitter, sim, planned=40, signal="match")
print("detect-and-quit:", trace.as_dict())

# planted evidence: benign scenes nudged onto database fingerprints
benign = [images[i] for i in sim.corpus.indices("benign")[:12]]
targets = [sim.corpus.fingerprints[i] for i in sim.db_idx[:12]]
crafted = craft_collisions(benign, targets)
victim = sim.add_client(synthetic_rate=0.0)
planted = plant_evidence(victim, crafted[: cfg.threshold], sim)
print(f"victim {victim.account_id} reported: {planted.reported}")
thumbs = [np.frombuffer(make_visual_derivative(b), np.uint8).astype(int) for b in benign]
diffs = [min(np.abs(t - np.frombuffer(d, np.uint8).astype(int)).mean() for t in thumbs)
         for d in planted.report.derivatives]
print(f"each revealed thumbnail is within {max(diffs):.2f} gray levels of an innocent original")
