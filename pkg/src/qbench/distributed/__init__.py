"""Partitioned statevector execution over message-passing ranks."""
from .engine import (Partition, PartitionedResult, PartitionError, apply_global_gate, apply_local_gate,
                     exchange_rounds, needs_exchange, partitioned_execute, partitioned_run)
from .transport import (TRANSPORTS, ExchangeMessage, InProcessTransport, SocketTransport,
                        TransportError)

__all__ = [
    "Partition", "PartitionedResult", "PartitionError", "apply_global_gate", "apply_local_gate",
    "exchange_rounds", "needs_exchange", "partitioned_execute", "partitioned_run",
    "TRANSPORTS", "ExchangeMessage", "InProcessTransport", "SocketTransport", "TransportError",
]
