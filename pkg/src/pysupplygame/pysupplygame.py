import json
import logging
import os
from pathlib import Path
from typing import List, Optional, Union

from pysupplygame import constants, controllers, exceptions
from pysupplygame.misc.routers import Router
from pysupplygame.models import AggregateReport, ExperimentConfig

logger = logging.getLogger(__name__)


def load_config_data(path: Union[str, Path]) -> dict:
    """
    Read a JSON experiment config.

    Raises:
        exceptions.ConfigurationError: If the file is unreadable or not valid JSON; syntax errors carry the line.
    """
    try:
        text = Path(path).read_text(encoding='utf-8')
    except OSError as e:
        raise exceptions.ConfigurationError(field=str(path), reason=f"cannot read config: {e.strerror}")
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise exceptions.ConfigurationError(field=str(path), reason=f"{e.msg} at column {e.colno}", line=e.lineno)


def apply_overrides(data: dict, seed_base: Optional[int] = None, seeds: Optional[int] = None,
                    output_dir: Optional[str] = None, workers: Optional[int] = None) -> dict:
    """
    Apply command-line overrides to a decoded config.

    The output directory comes from output_dir, else from the PYSUPPLYGAME_OUT environment variable,
    else from the file. seeds is a seed count; together with seed_base it replaces the file's seed list.

    Returns:
        dict: A new config record; data is not modified.
    """
    if not isinstance(data, dict):
        return data
    data = dict(data)
    if seeds is not None or seed_base is not None:
        if seeds is None:
            seeds = data['seed_count'] if 'seed_count' in data else len(data.get('seeds', []))
        if seed_base is None:
            seed_base = data.get('seed_base', 0)
        data.pop('seeds', None)
        data['seed_base'] = seed_base
        data['seed_count'] = seeds
    env_output = os.environ.get(constants.OUTPUT_DIR_ENV)
    if output_dir is not None:
        data['output_dir'] = output_dir
    elif env_output:
        data['output_dir'] = env_output
    if workers is not None:
        data['workers'] = workers
    return data


class SupplyChainLab:

    def __init__(self, config: ExperimentConfig = None, output_dir: Union[str, Path] = None, force: bool = False,
                 routers: Union[Router, List[Router]] = None):
        """
        Initialize a SupplyChainLab object.

        Args:
            config (ExperimentConfig, optional): The experiment to run. Not needed to aggregate existing runs.
            output_dir (str | Path, optional): The run directory. Defaults to config.output_dir.
            force (bool, optional): Allow writing into a non-empty run directory. Defaults to False.
            routers (Router | list[Router], optional): Routers receiving RunEvents. Defaults to none.
        """
        if routers is None:
            routers = []
        if isinstance(routers, Router):
            routers = [routers]
        self.config = config
        if output_dir is None:
            output_dir = config.output_dir if config is not None else '.'
        self._output_dir = Path(output_dir)
        self.force = force
        self.routers = list(routers)

        #Controllers
        self.solve = controllers.SolveController(self)
        self.simulate = controllers.SimulateController(self)
        self.adversarial = controllers.AdversarialController(self)
        self.aggregate = controllers.AggregateController(self)

    @classmethod
    def from_file(cls, path: Union[str, Path], seed_base: int = None, seeds: int = None, output_dir: str = None,
                  workers: int = None, force: bool = False, routers: Union[Router, List[Router]] = None) -> 'SupplyChainLab':
        """
        Load, override and validate a config file.

        Raises:
            exceptions.ConfigurationError: If the file or the resulting config is invalid.
        """
        data = apply_overrides(load_config_data(path), seed_base=seed_base, seeds=seeds, output_dir=output_dir, workers=workers)
        return cls(ExperimentConfig.from_dict(data), force=force, routers=routers)

    @property
    def output_dir(self) -> Path:
        """
        The run directory.

        Returns:
            Path: Where the manifest, trajectories, result store and aggregate are written.
        """
        return self._output_dir

    def run(self) -> Union[dict, AggregateReport]:
        """
        Run the configured experiment.

        Returns:
            dict | AggregateReport: The equilibrium payload in solve-se mode, the aggregate otherwise.
        """
        if self.config is None:
            raise exceptions.ConfigurationError(field='mode', reason="no experiment config given")
        logger.info("running %s into %s", self.config.mode, self.output_dir)
        if self.config.mode == constants.Modes.SOLVE_SE:
            return self.solve.run()
        if self.config.mode == constants.Modes.SIMULATE:
            return self.simulate.run()
        return self.adversarial.run()
