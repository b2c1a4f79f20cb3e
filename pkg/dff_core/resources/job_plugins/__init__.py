"""
DFF Core: job plugin package

A job plugin must define a custom model subclassing from
:class:`dff_core.models.jobs.Job`, along with the optional custom result
model subclassing from :class:`dff_core.models.jobs.JobResult`, and implement
:meth:`Job.run`. The job type is the name of the command-line subcommand.
"""
