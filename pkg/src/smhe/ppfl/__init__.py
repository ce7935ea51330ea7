"""Federated aggregation simulator built on the masked multi-key scheme."""

from smhe.ppfl.codec import FixedPointCodec, decode_aggregate, encode_gradient, num_chunks
from smhe.ppfl.sim import (
    CDKS,
    SMHE,
    AttackReport,
    ClientState,
    PhaseRecord,
    RoundReport,
    ServerState,
    SimConfig,
    World,
    aggregate_ring,
    build_world,
    client_elimination_sweep,
    run_attack_round,
    run_round,
    run_rounds,
    to_jsonl,
    update_model,
)
