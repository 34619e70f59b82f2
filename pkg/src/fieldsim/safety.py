"""Safety cases: fault trees, goal-structure graphs, and evidence from runs.

The flow mirrors how a safety argument is actually assembled: a fault
tree captures which basic failures can raise the hazard, a goal
structure (GSN) decomposes the safety claim, and a suite of supervised
co-simulation runs produces pass/fail verdicts that back the solution
nodes at the bottom of the goal structure.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Mapping

from .errors import ConfigError, SimulationError
from .orchestrator import (
    Connection,
    InstanceSpec,
    MultiModelConfig,
    PortRef,
    run_cosim,
    write_results_csv,
)
from .simunit import UnitRegistry
from .traces import TimedTrace
from .units import (
    GridMap,
    default_registry,
    pure_pursuit_factory,
    read_grid_map,
    sensor_factory,
)

# --- fault trees -------------------------------------------------------------

GATE_KINDS = ("and", "or", "basic")
MAX_CUT_SET_BASICS = 20


@dataclass(frozen=True)
class FtEvent:
    label: str
    gate: str
    children: tuple[str, ...] = ()


@dataclass
class FaultTree:
    """Top event id plus the event map; gates combine child events."""

    top: str
    events: dict[str, FtEvent]

    def validate(self) -> None:
        if self.top not in self.events:
            raise ConfigError(f"fault tree top event {self.top!r} is not defined")
        for name, event in self.events.items():
            if event.gate not in GATE_KINDS:
                raise ConfigError(f"event {name!r}: unknown gate {event.gate!r}")
            if event.gate == "basic":
                if event.children:
                    raise ConfigError(f"basic event {name!r} cannot have children")
            elif not event.children:
                raise ConfigError(f"gate {name!r} needs at least one child")
            for child in event.children:
                if child not in self.events:
                    raise ConfigError(f"event {name!r} references unknown child {child!r}")
        # cycle check: depth-first with an explicit in-progress set
        done: set[str] = set()
        in_progress: set[str] = set()

        def visit(name: str) -> None:
            if name in done:
                return
            if name in in_progress:
                raise ConfigError(f"fault tree has a cycle through {name!r}")
            in_progress.add(name)
            for child in self.events[name].children:
                visit(child)
            in_progress.discard(name)
            done.add(name)

        for name in self.events:
            visit(name)

    def basic_events(self) -> list[str]:
        return [name for name, e in self.events.items() if e.gate == "basic"]


def read_fault_tree(source: str | Path | Mapping) -> FaultTree:
    if isinstance(source, (str, Path)):
        path = Path(source)
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON: {exc}") from None
    else:
        doc = source
    if not isinstance(doc, dict) or set(doc) != {"top", "events"}:
        raise ConfigError("fault tree document needs exactly 'top' and 'events'")
    events: dict[str, FtEvent] = {}
    for name, entry in doc["events"].items():
        if not isinstance(entry, dict) or "gate" not in entry:
            raise ConfigError(f"event {name!r} needs a 'gate'")
        extra = set(entry) - {"label", "gate", "children"}
        if extra:
            raise ConfigError(f"event {name!r}: unknown keys {', '.join(sorted(extra))}")
        events[name] = FtEvent(
            label=entry.get("label", name),
            gate=entry["gate"],
            children=tuple(entry.get("children", ())),
        )
    tree = FaultTree(top=doc["top"], events=events)
    tree.validate()
    return tree


def evaluate_fault_tree(tree: FaultTree, states: Mapping[str, bool]) -> bool:
    """Evaluate the top event for one assignment of the basic events."""
    tree.validate()
    missing = [b for b in tree.basic_events() if b not in states]
    if missing:
        raise ConfigError(f"no state for basic events: {', '.join(sorted(missing))}")
    for name, value in states.items():
        if name not in tree.events or tree.events[name].gate != "basic":
            raise ConfigError(f"state given for {name!r}, which is not a basic event")
        if value is not True and value is not False:
            raise ConfigError(f"state for {name!r} must be a boolean, got {value!r}")

    memo: dict[str, bool] = {}

    def value_of(name: str) -> bool:
        if name in memo:
            return memo[name]
        event = tree.events[name]
        if event.gate == "basic":
            out = states[name]
        elif event.gate == "and":
            out = all(value_of(c) for c in event.children)
        else:
            out = any(value_of(c) for c in event.children)
        memo[name] = out
        return out

    return value_of(tree.top)


def minimal_cut_sets(tree: FaultTree) -> list[frozenset[str]]:
    """All minimal sets of basic events whose joint truth forces the top.

    Works by bottom-up set expansion and absorption; limited to
    20 basic events to keep the blow-up in check.  The result is sorted
    by size, then by member names, so it is stable across runs.
    """
    tree.validate()
    basics = tree.basic_events()
    if len(basics) > MAX_CUT_SET_BASICS:
        raise ConfigError(
            f"cut set analysis supports at most {MAX_CUT_SET_BASICS} basic events, "
            f"got {len(basics)}"
        )

    def minimise(sets: Iterable[frozenset[str]]) -> list[frozenset[str]]:
        unique = sorted(set(sets), key=lambda s: (len(s), sorted(s)))
        kept: list[frozenset[str]] = []
        for candidate in unique:
            if not any(have <= candidate for have in kept):
                kept.append(candidate)
        return kept

    memo: dict[str, list[frozenset[str]]] = {}

    def cuts_of(name: str) -> list[frozenset[str]]:
        if name in memo:
            return memo[name]
        event = tree.events[name]
        if event.gate == "basic":
            out = [frozenset([name])]
        elif event.gate == "or":
            combined: list[frozenset[str]] = []
            for child in event.children:
                combined.extend(cuts_of(child))
            out = minimise(combined)
        else:  # and
            out = [frozenset()]
            for child in event.children:
                out = minimise(a | b for a in out for b in cuts_of(child))
        memo[name] = out
        return out

    return sorted(cuts_of(tree.top), key=lambda s: (len(s), sorted(s)))


# --- evidence verdicts -------------------------------------------------------


@dataclass(frozen=True)
class EvidenceVerdict:
    """Outcome of one safety run, stored as evidence/<run_id>/verdict.json."""

    run_id: str
    passed: bool
    criterion: str
    measured: float
    threshold: float
    note: str = ""


def write_verdict(verdict: EvidenceVerdict, directory: str | Path) -> Path:
    run_dir = Path(directory) / verdict.run_id
    run_dir.mkdir(parents=True, exist_ok=True)
    out = run_dir / "verdict.json"
    doc = {
        "run_id": verdict.run_id,
        "passed": verdict.passed,
        "criterion": verdict.criterion,
        "measured": verdict.measured,
        "threshold": verdict.threshold,
    }
    if verdict.note:
        doc["note"] = verdict.note
    out.write_text(json.dumps(doc, indent=2) + "\n")
    return out


def read_verdicts(evidence_dir: str | Path) -> dict[str, EvidenceVerdict]:
    """Load every evidence/<run_id>/verdict.json below a directory."""
    evidence_dir = Path(evidence_dir)
    verdicts: dict[str, EvidenceVerdict] = {}
    if not evidence_dir.is_dir():
        return verdicts
    for verdict_file in sorted(evidence_dir.glob("*/verdict.json")):
        try:
            doc = json.loads(verdict_file.read_text())
            verdict = EvidenceVerdict(
                run_id=doc["run_id"],
                passed=bool(doc["passed"]),
                criterion=doc["criterion"],
                measured=float(doc["measured"]),
                threshold=float(doc["threshold"]),
                note=doc.get("note", ""),
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"{verdict_file}: malformed verdict: {exc}") from None
        if verdict.run_id != verdict_file.parent.name:
            raise ConfigError(
                f"{verdict_file}: run_id {verdict.run_id!r} does not match its directory"
            )
        verdicts[verdict.run_id] = verdict
    return verdicts


# --- goal structure ----------------------------------------------------------

GSN_KINDS = ("goal", "strategy", "solution", "context", "away_goal")


class Status(Enum):
    UNSUPPORTED = "unsupported"
    UNDEVELOPED = "undeveloped"
    SUPPORTED = "supported"


@dataclass(frozen=True)
class GsnNode:
    node_id: str
    kind: str
    text: str = ""
    children: tuple[str, ...] = ()
    evidence_refs: tuple[str, ...] = ()
    module_ref: str | None = None
    asserted: bool = False


@dataclass
class GsnGraph:
    nodes: list[GsnNode]

    def __post_init__(self):
        self.by_id = {n.node_id: n for n in self.nodes}

    def validate(self) -> None:
        if len(self.by_id) != len(self.nodes):
            seen: set[str] = set()
            for n in self.nodes:
                if n.node_id in seen:
                    raise ConfigError(f"duplicate node id {n.node_id!r}")
                seen.add(n.node_id)
        for node in self.nodes:
            if node.kind not in GSN_KINDS:
                raise ConfigError(f"node {node.node_id!r}: unknown kind {node.kind!r}")
            if node.children and node.kind not in ("goal", "strategy"):
                raise ConfigError(
                    f"node {node.node_id!r}: only goals and strategies have children"
                )
            if node.evidence_refs and node.kind != "solution":
                raise ConfigError(
                    f"node {node.node_id!r}: only solutions carry evidence_refs"
                )
            if node.kind == "away_goal" and not node.module_ref:
                raise ConfigError(f"away goal {node.node_id!r} needs a module_ref")
            for child in node.children:
                if child not in self.by_id:
                    raise ConfigError(
                        f"node {node.node_id!r} references unknown child {child!r}"
                    )
        # cycle check over child edges
        done: set[str] = set()
        in_progress: set[str] = set()

        def visit(node_id: str) -> None:
            if node_id in done:
                return
            if node_id in in_progress:
                raise ConfigError(f"goal structure has a cycle through {node_id!r}")
            in_progress.add(node_id)
            for child in self.by_id[node_id].children:
                visit(child)
            in_progress.discard(node_id)
            done.add(node_id)

        for node in self.nodes:
            visit(node.node_id)

    def roots(self) -> list[GsnNode]:
        """Non-context nodes that no other node claims as a child."""
        referenced = {c for n in self.nodes for c in n.children}
        return [n for n in self.nodes if n.node_id not in referenced and n.kind != "context"]


def read_gsn(source: str | Path | Mapping) -> GsnGraph:
    if isinstance(source, (str, Path)):
        path = Path(source)
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON: {exc}") from None
    else:
        doc = source
    if not isinstance(doc, dict) or set(doc) != {"nodes"}:
        raise ConfigError("goal structure document needs exactly a 'nodes' list")
    nodes: list[GsnNode] = []
    for entry in doc["nodes"]:
        if not isinstance(entry, dict) or "id" not in entry or "kind" not in entry:
            raise ConfigError(f"node {entry!r} needs 'id' and 'kind'")
        extra = set(entry) - {"id", "kind", "text", "children", "evidence_refs", "module_ref", "asserted"}
        if extra:
            raise ConfigError(f"node {entry['id']!r}: unknown keys {', '.join(sorted(extra))}")
        nodes.append(
            GsnNode(
                node_id=entry["id"],
                kind=entry["kind"],
                text=entry.get("text", ""),
                children=tuple(entry.get("children", ())),
                evidence_refs=tuple(entry.get("evidence_refs", ())),
                module_ref=entry.get("module_ref"),
                asserted=bool(entry.get("asserted", False)),
            )
        )
    graph = GsnGraph(nodes)
    graph.validate()
    return graph


@dataclass
class AnnotatedGsn:
    """A validated goal structure plus the status of every node."""

    graph: GsnGraph
    statuses: dict[str, Status]

    def root_status(self) -> Status:
        roots = self.graph.roots()
        if not roots:
            raise ConfigError("goal structure has no root node")
        return self.statuses[roots[0].node_id]


def link_evidence(graph: GsnGraph, verdicts: Mapping[str, EvidenceVerdict]) -> AnnotatedGsn:
    """Attach run verdicts to solutions and propagate support upward.

    A solution is supported iff it cites at least one verdict and all of
    them passed.  An away goal is supported only when explicitly
    asserted.  A goal or strategy takes the worst status of its
    non-context children (unsupported < undeveloped < supported); with
    no children it is undeveloped.  Flipping any verdict from fail to
    pass can therefore never downgrade a node.
    """
    graph.validate()
    dangling = [
        ref
        for node in graph.nodes
        if node.kind == "solution"
        for ref in node.evidence_refs
        if ref not in verdicts
    ]
    if dangling:
        raise ConfigError(f"evidence refs without verdicts: {', '.join(sorted(set(dangling)))}")

    statuses: dict[str, Status] = {}

    def status_of(node_id: str) -> Status:
        if node_id in statuses:
            return statuses[node_id]
        node = graph.by_id[node_id]
        if node.kind == "solution":
            if not node.evidence_refs:
                out = Status.UNDEVELOPED
            elif all(verdicts[ref].passed for ref in node.evidence_refs):
                out = Status.SUPPORTED
            else:
                out = Status.UNSUPPORTED
        elif node.kind == "away_goal":
            out = Status.SUPPORTED if node.asserted else Status.UNDEVELOPED
        elif node.kind == "context":
            out = Status.SUPPORTED  # contexts never gate their parent
        else:
            child_statuses = [
                status_of(c) for c in node.children if graph.by_id[c].kind != "context"
            ]
            if not child_statuses:
                out = Status.UNDEVELOPED
            elif any(s is Status.UNSUPPORTED for s in child_statuses):
                out = Status.UNSUPPORTED
            elif any(s is Status.UNDEVELOPED for s in child_statuses):
                out = Status.UNDEVELOPED
            else:
                out = Status.SUPPORTED
        statuses[node_id] = out
        return out

    for node in graph.nodes:
        status_of(node.node_id)
    return AnnotatedGsn(graph=graph, statuses=statuses)


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")


_DOT_SHAPES = {
    "goal": "box",
    "strategy": "parallelogram",
    "solution": "circle",
    "context": "box",
    "away_goal": "tab",
}


def render_gsn_dot(annotated: AnnotatedGsn) -> str:
    """Render the annotated goal structure as Graphviz DOT.

    Goals are boxes, strategies parallelograms, solutions circles,
    contexts rounded boxes, away goals tab-shaped with their module
    named in the label.  Unsupported nodes are dashed, undeveloped ones
    grey.  Output is deterministic: nodes and edges in input order.
    """
    graph = annotated.graph
    lines = ["digraph gsn {", "  rankdir=TB;", '  node [fontname="Helvetica"];']
    for node in graph.nodes:
        label = node.node_id if not node.text else f"{node.node_id}\n{node.text}"
        if node.kind == "away_goal":
            label += f"\n[{node.module_ref}]"
        attrs = [f"shape={_DOT_SHAPES[node.kind]}", f'label="{_dot_escape(label)}"']
        styles = []
        if node.kind == "context":
            styles.append("rounded")
        status = annotated.statuses.get(node.node_id)
        if node.kind != "context":
            if status is Status.UNSUPPORTED:
                styles.append("dashed")
            elif status is Status.UNDEVELOPED:
                attrs.append("color=grey")
                attrs.append("fontcolor=grey")
        if styles:
            attrs.append(f'style="{",".join(styles)}"')
        lines.append(f'  "{_dot_escape(node.node_id)}" [{", ".join(attrs)}];')
    for node in graph.nodes:
        for child in node.children:
            lines.append(f'  "{_dot_escape(node.node_id)}" -> "{_dot_escape(child)}";')
    lines.append("}")
    return "\n".join(lines) + "\n"


# --- safety suite ------------------------------------------------------------


@dataclass(frozen=True)
class SafetyRun:
    """One supervised drive toward whatever the map holds."""

    run_id: str
    map_path: str
    speed: float
    sensor: Mapping[str, float] = field(default_factory=dict)
    decel: float = 3.0
    margin: float = 0.2
    path: tuple[tuple[float, float], ...] = ((0.0, 0.0), (50.0, 0.0))
    duration: float = 20.0
    step_size: float = 0.01
    gap_threshold: float = 0.0


@dataclass
class SafetySuite:
    runs: list[SafetyRun]


# the one built-in closed loop: path follower -> supervisor -> vehicle,
# with the sensor watching the vehicle pose
_HARVESTER_TOPOLOGY = "harvester"


def read_safety_suite(path: str | Path) -> SafetySuite:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or not isinstance(doc.get("runs"), list):
        raise ConfigError(f"{path}: suite document needs a 'runs' list")
    extra = set(doc) - {"runs", "map"}
    if extra:
        raise ConfigError(f"{path}: unknown keys: {', '.join(sorted(extra))}")
    default_map = doc.get("map")

    runs: list[SafetyRun] = []
    seen: set[str] = set()
    for entry in doc["runs"]:
        if not isinstance(entry, dict) or "id" not in entry or "speed" not in entry:
            raise ConfigError(f"{path}: every run needs 'id' and 'speed'")
        run_id = entry["id"]
        if not isinstance(run_id, str) or not run_id or any(c in run_id for c in "/\\,"):
            raise ConfigError(f"{path}: bad run id {run_id!r}")
        if run_id in seen:
            raise ConfigError(f"{path}: duplicate run id {run_id!r}")
        seen.add(run_id)
        known = {"id", "speed", "map", "sensor", "decel", "margin", "path",
                 "duration", "step_size", "gap_threshold", "multi_model"}
        unknown = set(entry) - known
        if unknown:
            raise ConfigError(f"{path}: run {run_id!r}: unknown keys {', '.join(sorted(unknown))}")
        topology = entry.get("multi_model", _HARVESTER_TOPOLOGY)
        if topology != _HARVESTER_TOPOLOGY:
            raise ConfigError(
                f"{path}: run {run_id!r}: unknown multi_model {topology!r}; "
                f"only {_HARVESTER_TOPOLOGY!r} is built in"
            )
        map_name = entry.get("map", default_map)
        if not map_name:
            raise ConfigError(f"{path}: run {run_id!r} names no map")
        speed = entry["speed"]
        if not (isinstance(speed, (int, float)) and math.isfinite(speed) and speed >= 0):
            raise ConfigError(f"{path}: run {run_id!r}: bad speed {speed!r}")
        waypoints = entry.get("path", [[0.0, 0.0], [50.0, 0.0]])
        try:
            path_tuple = tuple((float(p[0]), float(p[1])) for p in waypoints)
        except (TypeError, IndexError, ValueError):
            raise ConfigError(f"{path}: run {run_id!r}: bad path {waypoints!r}") from None
        runs.append(
            SafetyRun(
                run_id=run_id,
                map_path=str(path.parent / map_name),
                speed=float(speed),
                sensor={k: float(v) for k, v in entry.get("sensor", {}).items()},
                decel=float(entry.get("decel", 3.0)),
                margin=float(entry.get("margin", 0.2)),
                path=path_tuple,
                duration=float(entry.get("duration", 20.0)),
                step_size=float(entry.get("step_size", 0.01)),
                gap_threshold=float(entry.get("gap_threshold", 0.0)),
            )
        )
    return SafetySuite(runs=runs)


def harvester_config(run: SafetyRun) -> MultiModelConfig:
    """The built-in supervised loop for one safety run."""

    def ref(text: str) -> PortRef:
        return PortRef.parse(text)

    def conn(source: str, sink: str) -> Connection:
        return Connection(ref(source), ref(sink))

    return MultiModelConfig(
        instances={
            "ctl": InstanceSpec("pure_pursuit", {"cruise_speed": run.speed}),
            "sns": InstanceSpec("sensor", dict(run.sensor)),
            "sup": InstanceSpec("supervisor", {"decel": run.decel, "margin": run.margin}),
            "veh": InstanceSpec("vehicle"),
        },
        connections=[
            conn("ctl.velocity", "sup.velocity_cmd"),
            conn("ctl.delta_f", "veh.delta_f"),
            conn("sns.obstacle_detected", "sup.obstacle_detected"),
            conn("sns.obstacle_distance", "sup.obstacle_distance"),
            conn("sup.velocity", "veh.velocity"),
            conn("veh.x", "ctl.x"),
            conn("veh.y", "ctl.y"),
            conn("veh.theta", "ctl.theta"),
            conn("veh.x", "sns.x"),
            conn("veh.y", "sns.y"),
            conn("veh.theta", "sns.theta"),
        ],
        outputs=[
            ref("veh.x"),
            ref("veh.y"),
            ref("veh.theta"),
            ref("sup.velocity"),
            ref("sup.stop_engaged"),
            ref("sns.obstacle_distance"),
        ],
        step_size=run.step_size,
        duration=run.duration,
    )


@lru_cache(maxsize=32)
def _cached_map(path_text: str, mtime_ns: int, size: int) -> GridMap:
    return read_grid_map(path_text)


def _load_map(path_text: str) -> GridMap:
    stat = Path(path_text).stat()
    return _cached_map(path_text, stat.st_mtime_ns, stat.st_size)


def assess_run(trace: TimedTrace, grid_map: GridMap, gap_threshold: float) -> tuple[float, bool]:
    """Measure the minimum vehicle-obstacle gap and judge the criterion.

    Passes when the gap stays strictly above the threshold for the whole
    run and the vehicle is at standstill whenever the stop latch is still
    engaged at the end.
    """
    xs = trace.column("veh.x")
    ys = trace.column("veh.y")
    min_gap = math.inf
    for x, y in zip(xs, ys):
        gap = grid_map.clearance(x, y)
        if gap < min_gap:
            min_gap = gap
    stop_engaged = trace.column("sup.stop_engaged")[-1] != 0.0
    final_velocity = trace.column("sup.velocity")[-1]
    passed = min_gap > gap_threshold and (not stop_engaged or final_velocity == 0.0)
    return min_gap, passed


def _run_safety_case(args) -> EvidenceVerdict:
    run, evidence_dir = args
    criterion = f"min gap > {run.gap_threshold:g} m; standstill while stop engaged"
    grid_map = _load_map(run.map_path)
    registry = default_registry()
    registry.register("pure_pursuit", pure_pursuit_factory(run.path))
    registry.register("sensor", sensor_factory(grid_map))
    try:
        trace = run_cosim(harvester_config(run), registry)
    except (ConfigError, SimulationError) as exc:
        verdict = EvidenceVerdict(
            run_id=run.run_id,
            passed=False,
            criterion=criterion,
            measured=-1.0,
            threshold=run.gap_threshold,
            note=f"simulation failed: {exc}",
        )
        write_verdict(verdict, evidence_dir)
        return verdict
    min_gap, passed = assess_run(trace, grid_map, run.gap_threshold)
    verdict = EvidenceVerdict(
        run_id=run.run_id,
        passed=passed,
        criterion=criterion,
        measured=min_gap,
        threshold=run.gap_threshold,
    )
    run_dir = Path(evidence_dir) / run.run_id
    run_dir.mkdir(parents=True, exist_ok=True)
    write_results_csv(trace, run_dir / "results.csv")
    write_verdict(verdict, evidence_dir)
    return verdict


def run_safety_suite(
    suite: SafetySuite, evidence_dir: str | Path, workers: int = 1
) -> list[EvidenceVerdict]:
    """Run every case, write evidence/<run_id>/{results.csv,verdict.json}.

    Verdicts come back in suite order; a run that breaks mid-simulation
    is recorded as failed with the reason in its note rather than
    aborting the remaining runs.
    """
    if workers < 1:
        raise ConfigError(f"workers must be >= 1, got {workers}")
    for run in suite.runs:
        if not Path(run.map_path).is_file():
            raise ConfigError(f"run {run.run_id!r}: missing map file {run.map_path}")
    evidence_dir = str(evidence_dir)
    tasks = [(run, evidence_dir) for run in suite.runs]
    if workers == 1 or len(tasks) <= 1:
        return [_run_safety_case(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_safety_case, tasks))
