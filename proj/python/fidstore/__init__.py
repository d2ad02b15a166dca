"""Field-identifier store for confidential databases.

Sensitive values live in a mapping store inside the privacy zone and the
database holds only 64-bit field identifiers (FIDs) in their place.
"""

from ._core import (
    CRASH_POINTS,
    Database,
    FidStoreError,
    Store,
    bench_ops,
    bench_storage,
    decode_fid,
    encode_fid,
    run_workload,
)


def error_code(err: FidStoreError) -> str:
    """Name of the error code carried by a FidStoreError."""
    return err.args[0] if err.args else ""


__all__ = [
    "CRASH_POINTS",
    "Database",
    "FidStoreError",
    "Store",
    "bench_ops",
    "bench_storage",
    "decode_fid",
    "encode_fid",
    "error_code",
    "run_workload",
]
