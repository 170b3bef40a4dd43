"""
Utility functions for the runs app.
"""
import logging
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np
from django.utils import timezone

from utils.error_handling import safe_execution

from .models import RunRecord

logger = logging.getLogger(__name__)


def json_serial(obj):
    """
    JSON serializer for objects not serializable by default.
    """
    if isinstance(obj, datetime):
        return obj.isoformat()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (set, frozenset, tuple)):
        return list(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return str(obj)


@safe_execution(default_return=None)
def record_run(
    command: str,
    status: str,
    seed: int,
    output_dir: Path,
    config: Dict[str, Any],
    started_at: datetime,
    summary: Optional[Dict[str, Any]] = None,
    fingerprints: Optional[Dict[str, Any]] = None,
    error: str = '',
) -> Optional[RunRecord]:
    """
    Store one run in the ledger.

    A missing or unmigrated database never fails a numeric run; the error is
    logged and None is returned.

    Args:
        command: Management command name
        status: RunRecord.SUCCESS or RunRecord.FAILED
        seed: Global seed of the run
        output_dir: Artifact directory
        config: Effective configuration
        started_at: When the command started
        summary: JSON-safe summary of the run
        fingerprints: Solver/dataset fingerprints
        error: Error message for failed runs

    Returns:
        RunRecord: The stored record, or None if it could not be stored
    """
    record = RunRecord.objects.create(
        command=command,
        status=status,
        seed=str(seed),
        output_dir=str(output_dir),
        config=config,
        summary=summary,
        fingerprints=fingerprints or {},
        error=error,
        started_at=started_at,
        finished_at=timezone.now(),
    )
    logger.debug(f"Recorded run {record.id} ({command}, {status})")
    return record
