"""Python access to the VLP fleet core."""

import json

from ._vlpfleet import (
    CodecError,
    ConfigError,
    ProtocolError,
    decode_chips,
    decode_frame,
    decode_message,
    encode_id,
    encode_message,
    locate,
    render_frame,
)
from . import _vlpfleet


def run_coverage_handoff(seed=1, metrics_csv=None):
    return json.loads(_vlpfleet.run_coverage_handoff(seed, metrics_csv))


def run_scenario_file(path, metrics_csv=None):
    return json.loads(_vlpfleet.run_scenario_file(str(path), metrics_csv))


__all__ = [
    "CodecError",
    "ConfigError",
    "ProtocolError",
    "decode_chips",
    "decode_frame",
    "decode_message",
    "encode_id",
    "encode_message",
    "locate",
    "render_frame",
    "run_coverage_handoff",
    "run_scenario_file",
]
