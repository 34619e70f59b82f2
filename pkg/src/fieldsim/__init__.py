"""Co-simulation, design-space exploration and safety evidence for field vehicles.

The package splits into:

* :mod:`fieldsim.simunit` -- the pluggable simulation unit contract,
* :mod:`fieldsim.orchestrator` -- the fixed-step co-simulation master,
* :mod:`fieldsim.units` -- vehicle, controllers, sensor and map,
* :mod:`fieldsim.traces` -- timed traces, scenario generation, alignment,
* :mod:`fieldsim.dse` -- exhaustive parameter sweeps and ranking,
* :mod:`fieldsim.safety` -- fault trees, goal structures, safety suites,
* :mod:`fieldsim.cli` -- the ``fieldsim`` command.
"""

from .errors import (
    ConfigError,
    ContractViolation,
    FieldsimError,
    SimulationError,
    UnknownUnitError,
)
from .orchestrator import (
    Connection,
    InstanceSpec,
    MultiModelConfig,
    PortRef,
    load_multimodel,
    run_cosim,
    validate_config,
    write_results_csv,
)
from .simunit import (
    PortDescriptor,
    PortDirection,
    PortKind,
    SimulationUnit,
    UnitDescription,
    UnitRegistry,
)
from .traces import (
    AlignedPair,
    ScenarioSpec,
    TimedTrace,
    align,
    generate_scenario,
    read_trace_csv,
    write_trace_csv,
)

__version__ = "0.1.0"

__all__ = [
    "AlignedPair",
    "ConfigError",
    "Connection",
    "ContractViolation",
    "FieldsimError",
    "InstanceSpec",
    "MultiModelConfig",
    "PortDescriptor",
    "PortDirection",
    "PortKind",
    "PortRef",
    "ScenarioSpec",
    "SimulationError",
    "SimulationUnit",
    "TimedTrace",
    "UnitDescription",
    "UnitRegistry",
    "UnknownUnitError",
    "align",
    "generate_scenario",
    "load_multimodel",
    "read_trace_csv",
    "run_cosim",
    "validate_config",
    "write_results_csv",
    "write_trace_csv",
    "__version__",
]
