"""
Service layer for slopeforge.

Orchestrates the descent engine, the Frobenius–connection checks and
batch execution over several instance files.
"""

from .batch_service import BatchJob, BatchService
from .descent_service import DescentReport, DescentService, descend, monitor_envelope
from .fnabla_service import FNablaModule, FNablaService

__all__ = ['BatchJob', 'BatchService', 'DescentReport', 'DescentService', 'descend', 'monitor_envelope',
           'FNablaModule', 'FNablaService']
