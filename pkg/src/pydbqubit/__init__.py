# ruff: noqa: F401, E402
"""PyDbQubit: simulator for silicon dangling-bond charge qubits."""

from __future__ import annotations

import importlib
import os
from typing import TYPE_CHECKING, Iterable

from .errors import (
    CalibrationError,
    CapacityError,
    ConfigError,
    CouplingError,
    DbQubitError,
    DomainError,
    LayoutStructureError,
    NoTunnelingError,
    ProjectionError,
    RegimeError,
    ScheduleError,
    StepSizeError,
)
from .version import __version__

if TYPE_CHECKING:
    from .experiments import ScenarioResult  # pragma: no cover
    from .physics import (  # pragma: no cover
        DeviceLayout,
        MaterialParams,
        PulseSchedule,
        QuantumState,
        QubitParams,
        build_hq,
        evolve_lindblad,
        evolve_unitary,
        project_to_qubits,
        solve_bound_states,
    )
    from .settings import SimulationConfig  # pragma: no cover


_PHYSICS_MODULE = None
_EXPERIMENTS_MODULE = None


def _physics():
    """Lazily import the numpy/scipy physics stack."""
    global _PHYSICS_MODULE
    if _PHYSICS_MODULE is None:
        _PHYSICS_MODULE = importlib.import_module(".physics", __name__)
    return _PHYSICS_MODULE


def _experiments():
    global _EXPERIMENTS_MODULE
    if _EXPERIMENTS_MODULE is None:
        _EXPERIMENTS_MODULE = importlib.import_module(".experiments", __name__)
    return _EXPERIMENTS_MODULE


def load_config(path: str | os.PathLike[str], overrides: Iterable[str] = ()) -> SimulationConfig:
    """Read a YAML config file, applying dotted ``key=value`` overrides."""
    path_str = os.fspath(path)
    if not os.path.isfile(path_str):
        raise FileNotFoundError(f"Config not found: {path_str}")
    if not os.access(path_str, os.R_OK):
        raise PermissionError(f"Config is not readable: {path_str}")
    settings = importlib.import_module(".settings", __name__)
    return settings.read_config(path_str, overrides)


def run(
    scenario: str,
    config: SimulationConfig | str | os.PathLike[str],
    out_dir: str | os.PathLike[str] | None = None,
) -> ScenarioResult:
    """Run one scenario; outputs are written only when ``out_dir`` is given."""
    if isinstance(config, (str, os.PathLike)):
        config = load_config(config)
    experiments = _experiments()
    result = experiments.run_scenario(scenario, config)
    if out_dir is not None:
        experiments.write_outputs(result, config, out_dir)
    return result


def __getattr__(name: str):
    physics = _physics()
    if hasattr(physics, name):
        return getattr(physics, name)
    experiments = _experiments()
    if name in experiments.__all__:
        return getattr(experiments, name)
    raise AttributeError(name)


def __dir__():
    physics = _physics()
    return sorted(set(list(globals().keys()) + dir(physics) + _experiments().__all__))
