"""
Batch service for running one command over several instance files.

Instances run concurrently up to a configured limit; each instance is
deterministic on its own and reports come back in input order.
"""

import asyncio
import logging
from datetime import datetime
from typing import Any, Callable, Dict, List, Optional


class BatchJob:
    """One instance file scheduled under a command."""

    def __init__(self, job_id: str, source: str, command: str):
        self.job_id = job_id
        self.source = source
        self.command = command
        self.status = "pending"  # pending, running, completed, failed
        self.created_at = datetime.now()
        self.started_at: Optional[datetime] = None
        self.completed_at: Optional[datetime] = None
        self.error_message: Optional[str] = None
        self.result: Any = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            'job_id': self.job_id,
            'source': self.source,
            'command': self.command,
            'status': self.status,
            'created_at': self.created_at.isoformat(),
            'started_at': self.started_at.isoformat() if self.started_at else None,
            'completed_at': self.completed_at.isoformat() if self.completed_at else None,
            'error_message': self.error_message
        }


class BatchService:
    """Runs a blocking per-instance callable for many sources under a semaphore."""

    def __init__(self, max_concurrent: int = 2):
        self.max_concurrent = max(1, max_concurrent)
        self.jobs: Dict[str, BatchJob] = {}
        self.logger = logging.getLogger(__name__)

    def create_job(self, source: str, command: str) -> str:
        job_id = f"{command}_{len(self.jobs)}"
        self.jobs[job_id] = BatchJob(job_id, source, command)
        self.logger.info(f"Created batch job: {job_id} for {source}")
        return job_id

    async def _run_job(self, job: BatchJob, runner: Callable[[str], Any],
                       semaphore: asyncio.Semaphore) -> Any:
        async with semaphore:
            job.status = "running"
            job.started_at = datetime.now()
            try:
                job.result = await asyncio.to_thread(runner, job.source)
                job.status = "completed"
                return job.result
            except Exception as e:
                job.status = "failed"
                job.error_message = str(e)
                self.logger.error(f"Error in batch job {job.job_id}: {e}")
                raise
            finally:
                job.completed_at = datetime.now()

    async def run_batch(self, sources: List[str], command: str, runner: Callable[[str], Any]) -> List[Any]:
        """Results in the order of `sources`; a failing job yields its exception."""
        job_ids = [self.create_job(source, command) for source in sources]
        semaphore = asyncio.Semaphore(self.max_concurrent)
        tasks = [self._run_job(self.jobs[job_id], runner, semaphore) for job_id in job_ids]
        results = await asyncio.gather(*tasks, return_exceptions=True)
        failed = sum(1 for r in results if isinstance(r, Exception))
        self.logger.info(f"Batch {command}: {len(results) - failed} completed, {failed} failed")
        return list(results)

    def get_job_statistics(self) -> Dict[str, Any]:
        stats = {'total_jobs': len(self.jobs), 'by_status': {}}
        for job in self.jobs.values():
            stats['by_status'][job.status] = stats['by_status'].get(job.status, 0) + 1
        return stats
