"""
DFF Core: job data models
"""

import os
import sys
import traceback
from datetime import datetime
from typing import Callable, List as TList, Optional

from marshmallow.fields import List, Nested, String

from .. import config, logger
from ..errors import MethodNotImplementedError
from ..schemas import DFFSchema, DateTime, Float


__all__ = ['Job', 'JobResult', 'JobState']


class JobState(DFFSchema):
    """
    Job state structure

    Attributes::
        status: current job status; "in_progress" while the job is running,
            "completed" when it's finished (no matter success or error)
        created_on: time of job creation (UTC "YYYY-MM-DD HH:MM:SS.SSSSSS")
        completed_on: time of completion
        progress: current job progress, a number from 0 to 100
    """
    status: str = String(dump_default='in_progress')
    created_on: datetime = DateTime()
    completed_on: datetime = DateTime()
    progress: float = Float(dump_default=0)

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)

        if not hasattr(self, 'created_on'):
            self.created_on = datetime.utcnow()


class JobResult(DFFSchema):
    """
    Base class for job results

    Attributes::
        errors: list of error messages
        warnings: list of warnings issued by :meth:`Job.run`
        files: paths of the output files created by the job

    The job plugin class usually subclasses :class:`JobResult` to define custom
    result fields in addition to the above:

    class MyJobResult(JobResult):
        value1 = fields.Integer()
        value2 = fields.Float()
    """
    errors: TList[str] = List(String())
    warnings: TList[str] = List(String())
    files: TList[str] = List(String())

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)

        if not hasattr(self, 'errors'):
            self.errors = []
        if not hasattr(self, 'warnings'):
            self.warnings = []
        if not hasattr(self, 'files'):
            self.files = []


class Job(DFFSchema):
    """
    Base class for job plugins

    Plugin modules live in :mod:`dff_core.resources.job_plugins`. Each plugin
    subclasses :class:`Job`, sets `type` to the name of the command-line
    subcommand it backs, declares its options as fields, and implements
    :meth:`run`. Job-specific results go to a :class:`JobResult` subclass:

    class SampleJobResult(JobResult):
        n_samples: int = Integer(dump_default=0)

    class SampleJob(Job):
        type = 'sample'
        result: SampleJobResult = Nested(SampleJobResult, dump_default={})
        n: int = Integer(dump_default=10000)

        def run(self):
            ...
            self.create_job_file(self.out, writer=...)

    Typed errors raised by :meth:`run` abort the job; non-fatal problems are
    reported with :meth:`add_warning`.

    Fields::
        type: job type name; equals the command-line subcommand name
        out_dir: directory for the output files; defaults to DATA_ROOT
        state: current job state, an instance of JobState
        result: job result structure, an instance of JobResult or its subclass
    """
    __polymorphic_on__ = 'type'

    type: str = String()
    description: str = String()
    out_dir: str = String(dump_default=None)
    state: JobState = Nested(JobState)
    result: JobResult = Nested(JobResult)

    _on_update: Optional[Callable] = None

    def __init__(self, *args, _on_update: Optional[Callable] = None,
                 **kwargs):
        """
        Create a :class:`Job` instance; used both when loading job plugins and
        when creating a new job

        :param args: may include job object to initialize from
        :param _on_update: optional callback invoked with the job instance
            after each state change
        :param kwargs: job-specific parameters passed on job creation
        """
        super().__init__(*args, **kwargs)

        self._on_update = _on_update

        # Initialize to default state and result
        if not hasattr(self, 'state'):
            # noinspection PyTypeChecker
            self.state = {}
        if not hasattr(self, 'result'):
            # noinspection PyTypeChecker
            self.result = {}

    def run(self) -> None:
        """
        Run the job; fully implemented by job plugin
        """
        raise MethodNotImplementedError(
            class_name=self.__class__.__name__, method_name='run')

    def update(self) -> None:
        """
        Notify the caller about job state change; should be called after
        modifying any of the JobState or JobResult fields while the job is still
        in progress; also called automatically upon job completion
        """
        logger.debug(
            'Job "%s": %s, %.0f%%', self.type, self.state.status,
            self.state.progress)
        if self._on_update is not None:
            self._on_update(self)

    def add_error(self, msg: str) -> None:
        """
        Add error message to Job.result.errors; in debug mode, also appends
        exception traceback

        :param msg: error message
        """
        if config.get('LOG_LEVEL') == 'DEBUG' and sys.exc_info()[0] is not None:
            msg = '{}\nTraceback (most recent call last):\n{}'.format(
                msg, ''.join(traceback.format_tb(sys.exc_info()[-1])))
        logger.error('Job "%s": %s', self.type, msg)
        self.result.errors.append(msg)
        self.update()

    def add_warning(self, msg: str) -> None:
        """
        Add warning message to Job.result.warnings

        :param msg: warning message
        """
        logger.warning('Job "%s": %s', self.type, msg)
        self.result.warnings.append(msg)
        self.update()

    def update_progress(self, progress: float) -> None:
        """
        Set Job.state.progress and call :meth:`update`

        :param progress: job progress (0 to 100)
        """
        self.state.progress = progress
        self.update()

    def job_file_path(self, filename: str) -> str:
        """
        Return path to an output file of the job

        :param filename: file name relative to the job output directory

        :return: path to the file
        """
        return os.path.join(
            self.out_dir or config['DATA_ROOT'], filename)

    def create_job_file(self, filename: str,
                        data: Optional[bytes] = None,
                        writer: Optional[Callable[[str], None]] = None) -> str:
        """
        Create an output file and record it in Job.result.files

        :param filename: file name relative to the job output directory
        :param data: file data to write
        :param writer: alternatively, a function that writes the file given
            its path

        :return: path to the created file
        """
        fp = self.job_file_path(filename)
        d = os.path.dirname(fp)
        if d:
            os.makedirs(d, exist_ok=True)
        if writer is not None:
            writer(fp)
        else:
            with open(fp, 'wb') as f:
                f.write(data)
        self.result.files.append(fp)
        return fp
