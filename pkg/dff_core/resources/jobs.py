"""
DFF Core: job resources

Job types are defined in dff_core.resources.job_plugins; each job type backs
one command-line subcommand. Jobs run in the calling process: the heavy
lifting is parallelized inside torch and numpy, with the thread count set by
the WORKERS option.
"""

import os
from datetime import datetime
from typing import Callable, Dict as TDict, Optional

import torch

from .. import config, logger, plugins
from ..errors import DFFError
from ..errors.job import JobFailedError, UnknownJobTypeError
from ..models import Job


__all__ = ['create_job', 'get_job_types', 'run_job', 'set_worker_threads']


_job_types = None


def get_job_types() -> TDict[str, Job]:
    """
    Return the registered job plugins

    :return: dictionary {job type: job plugin instance with default fields}
    """
    global _job_types
    if _job_types is None:
        _job_types = plugins.load_plugins('job', 'resources.job_plugins', Job)
    return _job_types


def set_worker_threads(workers: Optional[int] = None) -> int:
    """
    Set the torch intra-op thread count

    :param workers: number of threads; defaults to the WORKERS option; 0 means
        all available cores

    :return: actual number of threads
    """
    if workers is None:
        workers = config.get('WORKERS', 0)
    workers = int(workers or 0)
    if workers <= 0:
        workers = os.cpu_count() or 1
    torch.set_num_threads(workers)
    logger.debug('Using %d worker thread(s)', workers)
    return workers


def create_job(job_type: str, _on_update: Optional[Callable] = None,
               **kwargs) -> Job:
    """
    Create a job instance of the given type

    :param job_type: registered job type, e.g. "train"
    :param _on_update: optional callback invoked on each job state change
    :param kwargs: job-specific fields

    :return: job plugin instance
    """
    if job_type not in get_job_types():
        raise UnknownJobTypeError(type=job_type)
    return Job(type=job_type, _on_update=_on_update, _set_defaults=True,
               **kwargs)


def run_job(job: Job) -> Job:
    """
    Run a job to completion

    Typed DFF errors raised by the job propagate unchanged. Any other
    exception, as well as errors reported via :meth:`Job.add_error`, fail the
    job with :class:`JobFailedError`.

    :param job: job instance created by :func:`create_job`

    :return: the same job with its final state and result
    """
    set_worker_threads()
    job.state.status = 'in_progress'
    job.update()
    logger.info('Running job "%s"', job.type)
    try:
        job.run()
    except DFFError as e:
        job.result.errors.append(str(e))
        raise
    except Exception as e:
        job.add_error(str(e) or e.__class__.__name__)
    finally:
        job.state.status = 'completed'
        job.state.progress = 100
        job.state.completed_on = datetime.utcnow()
        job.update()

    if job.result.errors:
        raise JobFailedError(type=job.type, errors='; '.join(job.result.errors))
    logger.info('Job "%s" completed', job.type)
    return job
