"""flare: session, flow, and sliding-window feature aggregation for
IoT network traffic, with PCA reduction and window-size tuning."""

from .packets import CaptureMeta, FormatError, PacketRecord, SchemaError
from .sessions import FlowKey, SessionParams, SessionRecord
from .windows import WindowRecord
from .merge import AggregatedRecord, TruthInterval
from .synth import AttackSpec, TrafficProfile

__version__ = "0.1.0"

__all__ = [
    "AggregatedRecord",
    "AttackSpec",
    "CaptureMeta",
    "FlowKey",
    "FormatError",
    "PacketRecord",
    "SchemaError",
    "SessionParams",
    "SessionRecord",
    "TrafficProfile",
    "TruthInterval",
    "WindowRecord",
    "__version__",
]
