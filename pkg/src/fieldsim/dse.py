"""Design-space exploration: exhaustive parameter sweeps over recorded drives.

A sweep config names a multi-model, a list of manoeuvre scenarios (each
a command trace to replay plus a reference position trace), and one or
more parameter grids.  Every grid assignment is simulated against every
scenario; the objective per run is the cross-track error between the
reference positions and the simulated path, and the calibration result
is the assignment minimising the error summed over scenarios.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from itertools import product
from pathlib import Path
from typing import Iterable, Mapping

from .errors import ConfigError
from .orchestrator import (
    InstanceSpec,
    MultiModelConfig,
    PortRef,
    load_multimodel,
    run_cosim,
    write_results_csv,
)
from .simunit import UnitRegistry
from .traces import AlignedPair, TimedTrace, align, format_real, read_trace_csv
from .units import default_registry, replay_factory

ParameterSpace = dict[str, list[float]]
ParameterAssignment = dict[str, float]


def cross_track_error(pair: AlignedPair) -> tuple[float, float]:
    """Mean and maximum point distance between paired positions.

    The mean is the plain average of the Euclidean distances
    sqrt((x2-x1)**2 + (y2-y1)**2) over all pairs.
    """
    if not pair.pairs:
        raise ConfigError("cannot compute cross-track error of an empty alignment")
    total = 0.0
    worst = 0.0
    for x1, y1, x2, y2 in pair.pairs:
        dx = x2 - x1
        dy = y2 - y1
        d = math.sqrt(dx * dx + dy * dy)
        total += d
        if d > worst:
            worst = d
    return total / len(pair.pairs), worst


def expand_grid(space: ParameterSpace) -> list[ParameterAssignment]:
    """Cartesian product of the value lists, lexicographic in key order.

    The first key varies slowest; within one key, values keep list order.
    """
    names = list(space)
    for name, values in space.items():
        if not values:
            raise ConfigError(f"parameter {name!r} has an empty value list")
        for v in values:
            if not (isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)):
                raise ConfigError(f"parameter {name!r}: bad value {v!r}")
    return [dict(zip(names, combo)) for combo in product(*space.values())]


@dataclass
class SweepRow:
    """Objective of one (scenario, assignment) run."""

    scenario: str
    assignment: ParameterAssignment
    mean_error: float
    max_error: float


@dataclass
class DseConfig:
    """Parsed sweep configuration.

    ``parameters`` keys are rendered port references (``instance.port``);
    ``scenario_files`` maps each scenario name to its command-input and
    reference-trace CSV paths.  ``warnings`` records tolerated legacy
    keys that were parsed and ignored.
    """

    algorithm: str
    parameters: ParameterSpace
    scenarios: list[str]
    multi_model: MultiModelConfig | None = None
    scenario_files: dict[str, tuple[Path, Path]] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)


def _parse_grid_value(name: str, value) -> float:
    """Accept plain numbers or strings with a 'k' (x1000) suffix."""
    if isinstance(value, bool):
        raise ConfigError(f"parameter {name!r}: bad value {value!r}")
    if isinstance(value, (int, float)):
        out = float(value)
    elif isinstance(value, str):
        text = value.strip()
        scale = 1.0
        if text.endswith(("k", "K")):
            text = text[:-1]
            scale = 1000.0
        try:
            out = float(text) * scale
        except ValueError:
            raise ConfigError(f"parameter {name!r}: cannot parse value {value!r}") from None
    else:
        raise ConfigError(f"parameter {name!r}: bad value {value!r}")
    if not math.isfinite(out):
        raise ConfigError(f"parameter {name!r}: non-finite value {value!r}")
    return out


def _parse_scenarios(raw) -> list[str]:
    if isinstance(raw, str):
        raw = [raw]
    if not isinstance(raw, list):
        raise ConfigError("'scenarios' must be a list of names")
    names: list[str] = []
    for item in raw:
        if not isinstance(item, str):
            raise ConfigError(f"scenario name {item!r} is not a string")
        # a single comma-joined string is accepted as a list of names
        names.extend(part.strip() for part in item.split(",") if part.strip())
    if not names:
        raise ConfigError("no scenarios named")
    if len(set(names)) != len(names):
        raise ConfigError("scenario names must be unique")
    return names


def read_dse_config(path: str | Path) -> DseConfig:
    """Parse a sweep configuration document.

    Only the exhaustive algorithm is supported.  The keys
    ``objectiveDefinitions``, ``externalScripts`` and
    ``parameterConstraints`` are tolerated for compatibility with older
    project files but ignored (a warning is recorded on the returned
    config).  Relative file paths resolve against the config file's
    directory.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: sweep config must be a JSON object")

    known = {"algorithm", "parameters", "scenarios", "multiModel", "scenarioFiles"}
    tolerated = {"objectiveDefinitions", "externalScripts", "parameterConstraints"}
    unknown = set(doc) - known - tolerated
    if unknown:
        raise ConfigError(f"{path}: unknown keys: {', '.join(sorted(unknown))}")

    algorithm = doc.get("algorithm")
    if isinstance(algorithm, dict):
        algorithm = algorithm.get("type")
    if not isinstance(algorithm, str):
        raise ConfigError(f"{path}: 'algorithm' must name the search type")
    if algorithm != "exhaustive":
        raise ConfigError(f"{path}: unsupported algorithm {algorithm!r}; only 'exhaustive'")

    raw_params = doc.get("parameters")
    if not isinstance(raw_params, dict) or not raw_params:
        raise ConfigError(f"{path}: 'parameters' must be a non-empty object")
    parameters: ParameterSpace = {}
    for ref_text, values in raw_params.items():
        ref = PortRef.parse(ref_text)  # normalises multi-segment references
        if not isinstance(values, list) or not values:
            raise ConfigError(f"{path}: parameter {ref_text!r} needs a non-empty value list")
        parameters[ref.render()] = [_parse_grid_value(ref_text, v) for v in values]

    scenarios = _parse_scenarios(doc.get("scenarios"))

    warnings = [f"key {key!r} is not interpreted; ignoring it" for key in sorted(tolerated & set(doc))]

    multi_model = None
    if "multiModel" in doc:
        mm_path = path.parent / doc["multiModel"]
        multi_model = load_multimodel(mm_path)

    scenario_files: dict[str, tuple[Path, Path]] = {}
    raw_files = doc.get("scenarioFiles", {})
    if not isinstance(raw_files, dict):
        raise ConfigError(f"{path}: 'scenarioFiles' must be an object")
    for name, entry in raw_files.items():
        if not isinstance(entry, dict) or set(entry) != {"inputs", "reference"}:
            raise ConfigError(
                f"{path}: scenarioFiles[{name!r}] needs exactly 'inputs' and 'reference'"
            )
        scenario_files[name] = (path.parent / entry["inputs"], path.parent / entry["reference"])

    return DseConfig(
        algorithm=algorithm,
        parameters=parameters,
        scenarios=scenarios,
        multi_model=multi_model,
        scenario_files=scenario_files,
        warnings=warnings,
    )


# --- sweep execution ---------------------------------------------------------


def _cached_trace(path_text: str, expect_commands: bool) -> TimedTrace:
    stat = Path(path_text).stat()
    return _cached_trace_impl(path_text, expect_commands, stat.st_mtime_ns, stat.st_size)


@lru_cache(maxsize=64)
def _cached_trace_impl(path_text: str, expect_commands: bool, mtime_ns: int, size: int) -> TimedTrace:
    expected = ["velocity", "delta_f"] if expect_commands else None
    return read_trace_csv(path_text, expected_channels=expected)


def _registry_for(inputs_trace: TimedTrace) -> UnitRegistry:
    registry = default_registry()
    registry.register("replay", replay_factory(inputs_trace))
    return registry


def _apply_assignment(mm: MultiModelConfig, assignment: ParameterAssignment) -> MultiModelConfig:
    instances = dict(mm.instances)
    for ref_text, value in assignment.items():
        ref = PortRef.parse(ref_text)
        spec = instances.get(ref.instance)
        if spec is None:
            raise ConfigError(f"parameter {ref_text!r}: no instance {ref.instance!r} in multi-model")
        instances[ref.instance] = InstanceSpec(
            spec.unit_type, {**dict(spec.parameters), ref.port: value}
        )
    return replace(mm, instances=instances)


def _run_point(task) -> tuple[int, int, float, float]:
    """Run one (scenario, assignment) point; used by worker processes too."""
    si, gi, mm, inputs_path, reference_path, assignment, scenario, artifacts_dir = task
    inputs_trace = _cached_trace(inputs_path, True)
    reference = _cached_trace(reference_path, False)
    run_config = _apply_assignment(mm, assignment)
    simulated = run_cosim(run_config, _registry_for(inputs_trace))
    mean_error, max_error = cross_track_error(align(reference, simulated))
    if artifacts_dir is not None:
        run_dir = Path(artifacts_dir) / scenario / f"run_{gi:04d}"
        run_dir.mkdir(parents=True, exist_ok=True)
        write_results_csv(simulated, run_dir / "results.csv")
        write_objectives_json(run_dir / "objectives.json", mean_error, max_error)
    return si, gi, mean_error, max_error


def run_sweep(
    config: DseConfig,
    workers: int = 1,
    artifacts_dir: str | Path | None = None,
) -> list[SweepRow]:
    """Simulate every scenario under every grid assignment.

    Rows come back scenario-major in config order, assignments in
    :func:`expand_grid` order within each scenario, independent of the
    worker count, so repeated sweeps are reproducible byte for byte.
    """
    if config.multi_model is None:
        raise ConfigError("sweep config names no multi-model")
    missing = [s for s in config.scenarios if s not in config.scenario_files]
    if missing:
        raise ConfigError(f"no trace files for scenarios: {', '.join(missing)}")
    if workers < 1:
        raise ConfigError(f"workers must be >= 1, got {workers}")

    grid = expand_grid(config.parameters)
    for ref_text in config.parameters:
        ref = PortRef.parse(ref_text)
        if ref.instance not in config.multi_model.instances:
            raise ConfigError(f"parameter {ref_text!r}: no instance {ref.instance!r} in multi-model")

    if artifacts_dir is not None:
        artifacts_dir = str(artifacts_dir)

    tasks = []
    for si, scenario in enumerate(config.scenarios):
        inputs_path, reference_path = config.scenario_files[scenario]
        if not Path(inputs_path).is_file():
            raise ConfigError(f"scenario {scenario!r}: missing inputs file {inputs_path}")
        if not Path(reference_path).is_file():
            raise ConfigError(f"scenario {scenario!r}: missing reference file {reference_path}")
        for gi, assignment in enumerate(grid):
            tasks.append(
                (si, gi, config.multi_model, str(inputs_path), str(reference_path),
                 assignment, scenario, artifacts_dir)
            )

    if workers == 1:
        outcomes = [_run_point(task) for task in tasks]
    else:
        chunk = max(1, len(tasks) // (workers * 4))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_point, tasks, chunksize=chunk))

    rows = []
    for (si, gi, mean_error, max_error), task in zip(outcomes, tasks):
        assert (si, gi) == (task[0], task[1])  # map preserves submission order
        rows.append(
            SweepRow(
                scenario=config.scenarios[si],
                assignment=grid[gi],
                mean_error=mean_error,
                max_error=max_error,
            )
        )
    return rows


# --- calibration and ranking -------------------------------------------------


def _assignment_key(assignment: ParameterAssignment, names: list[str]) -> tuple[float, ...]:
    try:
        return tuple(assignment[n] for n in names)
    except KeyError as exc:
        raise ConfigError(f"row is missing parameter {exc.args[0]!r}") from None


def optimize(
    rows: Iterable[SweepRow], space: ParameterSpace | None = None
) -> tuple[ParameterAssignment, float]:
    """Pick the assignment with the smallest error summed over scenarios.

    The table must be a complete grid: every assignment present for every
    scenario.  Ties keep the assignment that enumerates first (strictly
    smaller sums win); enumeration order is the grid order of ``space``
    when given, otherwise the assignment order of the first scenario
    block in the table.
    """
    rows = list(rows)
    if not rows:
        raise ConfigError("cannot optimize an empty result table")
    names = list(space) if space is not None else list(rows[0].assignment)

    per_scenario: dict[str, dict[tuple[float, ...], float]] = {}
    for row in rows:
        key = _assignment_key(row.assignment, names)
        if len(row.assignment) != len(names):
            raise ConfigError(f"row has parameters {list(row.assignment)}, expected {names}")
        block = per_scenario.setdefault(row.scenario, {})
        if key in block:
            raise ConfigError(f"duplicate row for scenario {row.scenario!r}, assignment {key}")
        block[key] = row.mean_error

    if space is not None:
        order = [_assignment_key(a, names) for a in expand_grid(space)]
    else:
        first = rows[0].scenario
        order = list(per_scenario[first])
    expected = set(order)
    for scenario, block in per_scenario.items():
        if set(block) != expected:
            raise ConfigError(f"scenario {scenario!r} does not cover the same grid as the others")

    best_key = None
    best_total = math.inf
    for key in order:
        total = 0.0
        for block in per_scenario.values():
            total += block[key]
        if total < best_total:
            best_total = total
            best_key = key
    assert best_key is not None

    # recompute the winner's total as a consistency check, adding in the
    # same scenario order so the float sum is reproducible
    check = 0.0
    for block in per_scenario.values():
        check += block[best_key]
    assert check == best_total

    return dict(zip(names, best_key)), best_total


def pareto_rank(rows: Iterable[SweepRow]) -> list[SweepRow]:
    """Rows not strictly dominated on (mean_error, max_error), both minimised.

    A row dominates another when both objectives are <= and at least one
    is <.  Duplicates of a non-dominated point all survive.  The front
    comes back sorted by mean error ascending (stable for ties).
    """
    rows = list(rows)
    indexed = sorted(range(len(rows)), key=lambda i: (rows[i].mean_error, rows[i].max_error, i))
    front: list[int] = []
    best_max = math.inf
    i = 0
    while i < len(indexed):
        # group rows sharing one mean_error value
        j = i
        mean = rows[indexed[i]].mean_error
        while j < len(indexed) and rows[indexed[j]].mean_error == mean:
            j += 1
        group = indexed[i:j]
        group_min_max = rows[group[0]].max_error  # sorted, so first has the smallest max
        if group_min_max < best_max:
            front.extend(k for k in group if rows[k].max_error == group_min_max)
            best_max = group_min_max
        i = j
    front.sort(key=lambda k: (rows[k].mean_error, k))
    return [rows[k] for k in front]


# --- result files ------------------------------------------------------------

_MEAN_COLUMN = "mean_cross_track_error"
_MAX_COLUMN = "max_cross_track_error"


def write_dse_results(
    rows: list[SweepRow], path: str | Path, param_names: list[str] | None = None
) -> None:
    """Write sweep rows as CSV; parameter columns keep grid key order."""
    if param_names is None:
        if not rows:
            raise ConfigError("cannot derive parameter names from an empty table")
        param_names = list(rows[0].assignment)
    lines = [",".join(["scenario"] + param_names + [_MEAN_COLUMN, _MAX_COLUMN])]
    for row in rows:
        if "," in row.scenario:
            raise ConfigError(f"scenario name {row.scenario!r} cannot contain a comma")
        key = _assignment_key(row.assignment, param_names)
        lines.append(
            ",".join(
                [row.scenario]
                + [format_real(v) for v in key]
                + [format_real(row.mean_error), format_real(row.max_error)]
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")


def read_dse_results(path: str | Path) -> tuple[list[str], list[SweepRow]]:
    """Read a sweep result table; returns (parameter names, rows)."""
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines:
        raise ConfigError(f"{path}: empty file, expected a header line")
    header = lines[0].split(",")
    if len(header) < 3 or header[0] != "scenario" or header[-2:] != [_MEAN_COLUMN, _MAX_COLUMN]:
        raise ConfigError(
            f"{path}:1: header must be 'scenario,<params...>,{_MEAN_COLUMN},{_MAX_COLUMN}'"
        )
    param_names = header[1:-2]
    rows: list[SweepRow] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != len(header):
            raise ConfigError(f"{path}:{lineno}: expected {len(header)} fields, got {len(parts)}")
        try:
            numbers = [float(p) for p in parts[1:]]
        except ValueError:
            raise ConfigError(f"{path}:{lineno}: malformed number") from None
        rows.append(
            SweepRow(
                scenario=parts[0],
                assignment=dict(zip(param_names, numbers[:-2])),
                mean_error=numbers[-2],
                max_error=numbers[-1],
            )
        )
    return param_names, rows


def write_objectives_json(path: str | Path, mean_error: float, max_error: float) -> None:
    """Write the per-run objective file."""
    Path(path).write_text(
        json.dumps({"cross_track_mean": mean_error, "cross_track_max": max_error}, indent=2)
        + "\n"
    )
