import asyncio
import unittest
from unittest.mock import MagicMock

from src.services.batch_service import BatchJob, BatchService


class TestBatchService(unittest.TestCase):
    def setUp(self):
        self.service = BatchService(max_concurrent=2)

    def test_create_job(self):
        job_id = self.service.create_job('a.inst', 'np')
        self.assertEqual(job_id, 'np_0')
        job = self.service.jobs[job_id]
        self.assertIsInstance(job, BatchJob)
        self.assertEqual(job.status, 'pending')

    def test_results_keep_input_order(self):
        runner = MagicMock(side_effect=lambda source: source.upper())
        results = asyncio.run(self.service.run_batch(['a', 'b', 'c'], 'diag', runner))
        self.assertEqual(results, ['A', 'B', 'C'])
        self.assertEqual(runner.call_count, 3)
        self.assertEqual(self.service.get_job_statistics(), {'total_jobs': 3, 'by_status': {'completed': 3}})

    def test_failure_is_returned_not_raised(self):
        def runner(source):
            if source == 'bad':
                raise ValueError('boom')
            return source

        results = asyncio.run(self.service.run_batch(['ok', 'bad'], 'np', runner))
        self.assertEqual(results[0], 'ok')
        self.assertIsInstance(results[1], ValueError)
        failed = self.service.jobs['np_1']
        self.assertEqual(failed.status, 'failed')
        self.assertEqual(failed.error_message, 'boom')
        self.assertIsNotNone(failed.completed_at)

    def test_job_to_dict(self):
        job_id = self.service.create_job('x.inst', 'solve')
        data = self.service.jobs[job_id].to_dict()
        self.assertEqual(data['source'], 'x.inst')
        self.assertEqual(data['command'], 'solve')
        self.assertIsNone(data['started_at'])


if __name__ == '__main__':
    unittest.main()
