"""Desk-scale simulator of a client-side scanning detection pipeline.

Toy average-hash fingerprints, DH-blinded cuckoo-table matching, Shamir
threshold shares with synthetic noise, Berlekamp-Welch reveal, and the
attacks that defeat it.
"""

from .config import AttackConfig, ConfigError, ScenarioConfig
from .cuckoo import CuckooTable, ReseedNeeded, build, build_with_reseed
from .field import FieldElement, FieldError, Polynomial, lagrange_interpolate, solve_linear_system
from .fingerprint import Fingerprint, Image, compute_fingerprint, hamming, make_visual_derivative
from .protocol import DetectionReport, DetectionServer, IngestOutcome, Simulation, run_simulation
from .psi import RUN_GROUP, TEST_GROUP, ServerKeys, Voucher, client_encode, client_encode_synthetic, server_process_voucher
from .rs import DecodeResult, NoisyShareSet, brute_force_decode, bw_decode
from .shamir import AccountSecret, ShamirShare, deal_share, reconstruct

__version__ = "0.1.0"
