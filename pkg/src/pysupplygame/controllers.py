import json
import logging
import math
import shutil
from datetime import datetime, timezone
from pathlib import Path
from typing import TYPE_CHECKING, Callable, Dict, List, Optional

import numpy as np
import pandas as pd

from pysupplygame import constants, exceptions, utils, variables
from pysupplygame.distributions import WeibullDemand, distribution_from_dict
from pysupplygame.learners import build_retailer, build_supplier, default_lipschitz
from pysupplygame.misc.dispatchers import JobDispatcher
from pysupplygame.misc.events import RunEvents
from pysupplygame.misc.storages import InMemoryStorage, ResultStore, SQLiteStorage
from pysupplygame.misc.updates import HorizonUpdate, JobUpdate, RunUpdate
from pysupplygame.models import AggregateReport, AggregateRow, BoundParams, EpisodeSummary, run_key
from pysupplygame.repeated_game import (
    bound_params, bound_value, l1_last_iterate, regret_report, retailer_regret, run_episode, supplier_regret,
    write_trajectory,
)
from pysupplygame.stage_game import StageGame, verify_weibull_uniqueness
from pysupplygame.vertical_integration import instance_from_dict, run_adversarial, write_adversarial

if TYPE_CHECKING:
    from pysupplygame import SupplyChainLab

logger = logging.getLogger(__name__)


def _write_json(path: Path, payload):
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + '\n', encoding='utf-8')


def _config_echo(lab: 'SupplyChainLab') -> dict:
    """The config as written to the manifest, without the fields that only steer execution."""
    echo = lab.config.to_dict()
    for name in ('output_dir', 'workers'):
        echo.pop(name, None)
    return echo


class BaseController():
    def __init__(self, lab: 'SupplyChainLab', mode: Optional[str]):
        """
        Initialize the controller with the lab it runs experiments for.

        Args:
            lab (SupplyChainLab): The lab holding the config, output directory and routers.
            mode (str): The experiment mode this controller runs, None for mode-independent controllers.
        """
        self._lab = lab
        self._mode = mode

    @property
    def output_dir(self) -> Path:
        return self._lab.output_dir

    def _trigger(self, event: str, update):
        for router in self._lab.routers:
            router.trigger_event(event, update)

    def _prepare_output(self) -> bool:
        """
        Create the run directory.

        A non-empty directory is only reused with force. When it holds a manifest of the same config the
        stored episodes are kept and their jobs skipped; anything else is wiped first.

        Returns:
            bool: Whether stored episodes were kept.

        Raises:
            OutputExistsError: If the directory is not empty and force was not given.
        """
        out = self.output_dir
        if out.exists() and any(out.iterdir()):
            if not self._lab.force:
                raise exceptions.OutputExistsError(output_dir=str(out))
            manifest = out / constants.MANIFEST_FILE
            if manifest.is_file() and (out / constants.RESULTS_STORE_FILE).is_file():
                try:
                    previous = json.loads(manifest.read_text(encoding='utf-8')).get('config_hash')
                except (OSError, ValueError):
                    previous = None
                if previous == utils.content_hash(_config_echo(self._lab)):
                    logger.info("resuming run in %s", out)
                    return True
            logger.info("overwriting %s", out)
            shutil.rmtree(out)
        (out / constants.TRAJECTORY_DIR).mkdir(parents=True, exist_ok=True)
        return False

    def _write_manifest(self, runs: Dict[str, dict], files: Dict[str, str]):
        config = self._lab.config
        echo = _config_echo(self._lab)
        _write_json(self.output_dir / constants.MANIFEST_FILE, {
            'mode': self._mode,
            'config': echo,
            'config_hash': utils.content_hash(echo),
            'created_at': datetime.now(timezone.utc).isoformat(),
            'horizons': list(config.horizons),
            'seeds': list(config.seeds),
            'bound': config.primary_bound,
            'bound_formula': variables.BOUND_LABELS.get(config.primary_bound),
            'runs': runs,
            'files': files,
        })

    def _open_store(self) -> ResultStore:
        return ResultStore(SQLiteStorage(str(self.output_dir / constants.RESULTS_STORE_FILE)))


class EpisodeController(BaseController):
    """Shared (horizon, seed) fan-out of the simulate and adversarial modes."""

    def _trajectory_file(self, horizon: int, seed: int) -> str:
        return f'{constants.TRAJECTORY_DIR}/{run_key(horizon, seed)}.csv'

    def _setup(self):
        """Build what every job of the run shares; called once before dispatching."""
        pass

    def _run_job(self, horizon: int, seed: int) -> EpisodeSummary:
        raise NotImplementedError

    def _job(self, store: ResultStore, horizon: int, seed: int) -> Callable[[], EpisodeSummary]:
        def job() -> EpisodeSummary:
            summary = self._run_job(horizon, seed)
            store.put(summary)
            return summary
        return job

    def run(self) -> AggregateReport:
        """
        Run every (horizon, seed) episode of the config and aggregate them.

        Writes the manifest, one CSV per episode, the result store and aggregate.json.

        Returns:
            AggregateReport: The per-horizon summary of the run.

        Raises:
            OutputExistsError: If the output directory is not empty and force was not given.
            JobFailedError: If too many consecutive episodes fail.
        """
        config = self._lab.config
        if config is None or config.mode != self._mode:
            raise exceptions.ConfigurationError(field='mode', reason=f"this controller runs {self._mode!r} configs")
        self._setup()
        resumed = self._prepare_output()
        runs = {
            run_key(horizon, seed): {'horizon': horizon, 'seed': seed, 'trajectory': self._trajectory_file(horizon, seed)}
            for horizon in config.horizons for seed in config.seeds
        }
        self._write_manifest(runs, {'results': constants.RESULTS_STORE_FILE, 'aggregate': constants.AGGREGATE_FILE})

        store = self._open_store()
        try:
            done = set(store.keys()) if resumed else set()
            dispatcher = JobDispatcher(self._lab.routers, workers=config.workers)
            for horizon in config.horizons:
                for seed in config.seeds:
                    if run_key(horizon, seed) in done:
                        continue
                    dispatcher.submit(
                        (horizon, seed),
                        self._job(store, horizon, seed),
                        on_success=lambda summary: JobUpdate(RunEvents.JOB_FINISHED, self._mode, summary.horizon, summary.seed, summary_record=summary),
                        on_failure=lambda e, h=horizon, s=seed: JobUpdate(RunEvents.JOB_FAILED, self._mode, h, s, reason=str(e)),
                    )
            results = dispatcher.run()
        finally:
            store.close()
        self._trigger(RunEvents.RUN_FINISHED, RunUpdate(RunEvents.RUN_FINISHED, self._mode, len(results), str(self.output_dir)))
        return self._lab.aggregate.run(self.output_dir)


class SolveController(BaseController):
    def __init__(self, lab: 'SupplyChainLab'):
        super().__init__(lab, constants.Modes.SOLVE_SE)

    def solve(self, distribution: dict) -> dict:
        """
        Solve the stage game of a distribution spec.

        Args:
            distribution (dict): A tagged distribution record.

        Returns:
            dict: w_star, q_star, both utilities, the stationary points, the uniqueness certificate, poa and
                the welfare breakdown; for Weibull demand with k >= 1 also the concavity check.
        """
        dist = distribution_from_dict(distribution)
        game = StageGame(dist)
        se = game.solve_equilibrium()
        payload = se.to_dict()
        try:
            poa = game.price_of_anarchy()
        except exceptions.SupplyGameError as e:
            logger.warning("price of anarchy unavailable: %s", e)
            payload['poa'] = None
            payload['price_of_anarchy'] = None
        else:
            payload['poa'] = poa.ratio
            payload['price_of_anarchy'] = poa.to_dict()
        if isinstance(dist, WeibullDemand) and dist.k >= 1.0 and dist.c > 0.0:
            payload['concavity'] = verify_weibull_uniqueness(dist.c, dist.p, dist.lam, dist.k).to_dict()
        logger.info("equilibrium w*=%.9g q*=%.9g (unique: %s)", se.w_star, se.q_star, se.unique)
        return payload

    def run(self) -> dict:
        """
        Solve the configured stage game and write equilibrium.json and the manifest.

        Returns:
            dict: The payload written to equilibrium.json.
        """
        config = self._lab.config
        if config is None or config.mode != self._mode:
            raise exceptions.ConfigurationError(field='mode', reason=f"this controller runs {self._mode!r} configs")
        payload = self.solve(config.distribution)
        self._prepare_output()
        _write_json(self.output_dir / constants.EQUILIBRIUM_FILE, payload)
        self._write_manifest({}, {'equilibrium': constants.EQUILIBRIUM_FILE})
        self._trigger(RunEvents.RUN_FINISHED, RunUpdate(RunEvents.RUN_FINISHED, self._mode, 1, str(self.output_dir)))
        return payload


class SimulateController(EpisodeController):
    def __init__(self, lab: 'SupplyChainLab'):
        super().__init__(lab, constants.Modes.SIMULATE)
        self.dist = None
        self.game: Optional[StageGame] = None
        self.params: Optional[BoundParams] = None
        self.bounds: List[str] = []

    def _setup(self):
        config = self._lab.config
        self.dist = distribution_from_dict(config.distribution)
        self.game = StageGame(self.dist)
        # memoized once here; jobs only read it
        self.game.solve_equilibrium()
        lipschitz = None
        if config.supplier.name == constants.Suppliers.PIYAVSKII:
            lipschitz = config.supplier.params.get('lipschitz') or default_lipschitz(self.dist)
        self.params = bound_params(self.game, lipschitz)
        self.bounds = list(config.bounds)
        primary = config.primary_bound
        if primary is not None and primary not in self.bounds:
            try:
                bound_value(primary, self.params, 1)
                self.bounds.insert(0, primary)
            except exceptions.ConfigurationError as e:
                logger.warning("no bound to check against: %s", e)
        for bound in self.bounds:
            bound_value(bound, self.params, 1)

    def _run_job(self, horizon: int, seed: int) -> EpisodeSummary:
        config = self._lab.config
        supplier = build_supplier(config.supplier, horizon, self.dist)
        retailer = build_retailer(config.retailer, horizon, self.game, utils.substream(seed, constants.Streams.RETAILER))
        trajectory = run_episode(self.dist, supplier, retailer, horizon, seed)
        trajectory_file = self._trajectory_file(horizon, seed)
        write_trajectory(trajectory, self.output_dir / trajectory_file)

        reports = {bound: regret_report(trajectory, self.game, bound, self.params) for bound in self.bounds}
        metrics = {
            'supplier_avg_regret': supplier_regret(trajectory, self.game),
            'retailer_avg_regret': retailer_regret(trajectory, self.game),
            'l1_last_iterate': l1_last_iterate(trajectory, self.game),
            'bounds': {
                bound: {'value': report.bound_value, 'metric': report.metric, 'compliant': report.compliant}
                for bound, report in reports.items()
            },
        }
        if self.bounds:
            primary = reports[self.bounds[0]]
            regret, bound, compliant = primary.metric, primary.bound_value, primary.compliant
        else:
            regret, bound, compliant = metrics['supplier_avg_regret'], None, None
        return EpisodeSummary(
            mode=self._mode, horizon=horizon, seed=seed, regret=regret, bound=bound, compliant=compliant,
            metrics=metrics, trajectory_file=trajectory_file,
        )


class AdversarialController(EpisodeController):
    def __init__(self, lab: 'SupplyChainLab'):
        super().__init__(lab, constants.Modes.ADVERSARIAL)

    def _run_job(self, horizon: int, seed: int) -> EpisodeSummary:
        config = self._lab.config
        instance = instance_from_dict(config.instance, horizon, seed)
        run = run_adversarial(instance, config.gamma, config.eta, seed=seed)
        trajectory_file = self._trajectory_file(horizon, seed)
        write_adversarial(run, self.output_dir / trajectory_file)
        bound = run.tuned_bound if config.primary_bound == constants.Bounds.EXP3VI_TUNED else run.bound
        metrics = {
            'K': run.K,
            'gamma': run.gamma,
            'eta': run.eta,
            'best_price': run.best.price,
            'best_quantity': run.best.quantity,
            'best_total_welfare': run.best.total_welfare,
            'bounds': {
                constants.Bounds.EXP3VI.value: {'value': run.bound, 'compliant': run.regret <= run.bound},
                constants.Bounds.EXP3VI_TUNED.value: {'value': run.tuned_bound, 'compliant': run.regret <= run.tuned_bound},
            },
        }
        return EpisodeSummary(
            mode=self._mode, horizon=horizon, seed=seed, regret=run.regret, bound=bound, compliant=run.regret <= bound,
            metrics=metrics, trajectory_file=trajectory_file,
        )


class AggregateController(BaseController):
    def __init__(self, lab: 'SupplyChainLab'):
        super().__init__(lab, None)

    @staticmethod
    def rows(summaries: List[EpisodeSummary]) -> List[AggregateRow]:
        """
        Per-horizon statistics of the stored episodes, folded in seed order.

        A horizon with a single episode reports std 0 and is flagged small_sample.
        """
        if not summaries:
            return []
        frame = pd.DataFrame([
            {'horizon': s.horizon, 'seed': s.seed, 'regret': s.regret, 'bound': s.bound, 'compliant': s.compliant}
            for s in summaries
        ]).sort_values(['horizon', 'seed'], kind='stable')
        rows = []
        for horizon, group in frame.groupby('horizon', sort=True):
            regrets = group['regret'].to_numpy(dtype=float)
            count = len(regrets)
            bounds = [b for b in group['bound'] if b is not None and not (isinstance(b, float) and math.isnan(b))]
            verdicts = [bool(c) for c in group['compliant'] if c is not None and not (isinstance(c, float) and math.isnan(c))]
            rows.append(AggregateRow(
                horizon=int(horizon),
                count=count,
                mean=float(np.mean(regrets)),
                std=float(np.std(regrets, ddof=1)) if count > 1 else 0.0,
                min=float(np.min(regrets)),
                max=float(np.max(regrets)),
                bound=float(bounds[0]) if bounds else None,
                compliance=float(np.mean(verdicts)) if verdicts else None,
                small_sample=count < 2,
            ))
        return rows

    def run(self, run_dir=None) -> AggregateReport:
        """
        Aggregate the stored episodes of a run directory and write aggregate.json.

        Runs listed in the manifest but absent from the result store are reported in `missing`;
        aggregation proceeds on the available ones.

        Args:
            run_dir (str | Path, optional): The run directory. Defaults to the lab's output directory.

        Returns:
            AggregateReport: The report written to aggregate.json.

        Raises:
            ManifestNotFoundError: If the directory holds no manifest.
        """
        run_dir = Path(run_dir) if run_dir is not None else self.output_dir
        manifest_path = run_dir / constants.MANIFEST_FILE
        if not manifest_path.is_file():
            raise exceptions.ManifestNotFoundError(run_dir=str(run_dir))
        try:
            manifest = json.loads(manifest_path.read_text(encoding='utf-8'))
        except ValueError as e:
            raise exceptions.ConfigurationError(field=str(manifest_path), reason=f"unreadable manifest: {e}")

        store_path = run_dir / constants.RESULTS_STORE_FILE
        store = ResultStore(SQLiteStorage(str(store_path)) if store_path.is_file() else InMemoryStorage())
        try:
            diff = utils.list_diff(manifest.get('runs', {}), store.keys())
            summaries = [store.get(key) for key in diff.common]
        finally:
            store.close()
        if diff.unique1:
            logger.warning("%d of %d runs missing from %s", len(diff.unique1), len(diff.list1), run_dir)

        rows = self.rows(summaries)
        mode = manifest.get('mode')
        for row in rows:
            if row.small_sample:
                logger.warning("T=%d: a single episode, std reported as 0", row.horizon)
            self._trigger(RunEvents.HORIZON_FINISHED, HorizonUpdate(RunEvents.HORIZON_FINISHED, mode, row))

        report = AggregateReport(
            mode=mode,
            config_hash=manifest.get('config_hash'),
            bound=manifest.get('bound'),
            horizons=list(manifest.get('horizons', [])),
            seeds=list(manifest.get('seeds', [])),
            rows=rows,
            missing=diff.unique1,
        )
        (run_dir / constants.AGGREGATE_FILE).write_text(report.json(indent=2) + '\n', encoding='utf-8')
        return report

    @staticmethod
    def table(report: AggregateReport) -> str:
        """The report as a fixed-width text table, one line per horizon."""
        header = variables.SUMMARY_HEADER.format(
            horizon='T', count='runs', mean='mean', std='std', min='min', max='max', bound='bound', compliance='compliance',
        )
        lines = [header]
        for row in report.rows:
            lines.append(variables.SUMMARY_HEADER.format(
                horizon=row.horizon,
                count=row.count,
                mean=f"{row.mean:.8g}",
                std=f"{row.std:.8g}",
                min=f"{row.min:.8g}",
                max=f"{row.max:.8g}",
                bound='-' if row.bound is None else f"{row.bound:.8g}",
                compliance='-' if row.compliance is None else f'{row.compliance:.3f}',
            ))
        if report.missing:
            lines.append(f"missing: {', '.join(report.missing)}")
        return '\n'.join(lines)
