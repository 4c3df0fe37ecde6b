from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional

from pysupplygame import models, variables
from pysupplygame.misc.events import RunEvents


class BaseUpdate(ABC):
    """Payload passed to the handlers of a run event."""
    event: str

    @property
    @abstractmethod
    def summary(self) -> str:
        """Returns a one-line, human-readable description of the update."""
        raise NotImplementedError


@dataclass
class JobUpdate(models.BaseModel, BaseUpdate):
    """Outcome of one (horizon, seed) job.

    Attributes:
        event (str): RunEvents.JOB_FINISHED or RunEvents.JOB_FAILED.
        mode (str): The experiment mode.
        horizon (int): T.
        seed (int): The job seed.
        summary_record (Optional[models.EpisodeSummary]): The stored summary (finished jobs only).
        reason (Optional[str]): The error message (failed jobs only).
    """
    event: str
    mode: str
    horizon: int
    seed: int
    summary_record: Optional[models.EpisodeSummary] = None
    reason: Optional[str] = None

    @property
    def summary(self) -> str:
        if self.event == RunEvents.JOB_FAILED:
            return variables.EVENT_TEXTS[RunEvents.JOB_FAILED].format(mode=self.mode, horizon=self.horizon, seed=self.seed, reason=self.reason)
        bound = self.summary_record.bound
        return variables.EVENT_TEXTS[RunEvents.JOB_FINISHED].format(
            mode=self.mode, horizon=self.horizon, seed=self.seed,
            regret=self.summary_record.regret, bound=bound if bound is not None else float('nan'),
        )


@dataclass
class HorizonUpdate(models.BaseModel, BaseUpdate):
    """Aggregate of every stored job of one horizon."""
    event: str
    mode: str
    row: models.AggregateRow

    @property
    def summary(self) -> str:
        compliance = self.row.compliance if self.row.compliance is not None else float('nan')
        return variables.EVENT_TEXTS[RunEvents.HORIZON_FINISHED].format(
            mode=self.mode, horizon=self.row.horizon, count=self.row.count, mean=self.row.mean, compliance=compliance,
        )


@dataclass
class RunUpdate(models.BaseModel, BaseUpdate):
    event: str
    mode: str
    count: int
    output_dir: str

    @property
    def summary(self) -> str:
        return variables.EVENT_TEXTS[RunEvents.RUN_FINISHED].format(mode=self.mode, count=self.count, output_dir=self.output_dir)
