from enum import StrEnum


class RunEvents(StrEnum):
    JOB_FINISHED = 'job.finished'
    JOB_FAILED = 'job.failed'
    HORIZON_FINISHED = 'horizon.finished'
    RUN_FINISHED = 'run.finished'
