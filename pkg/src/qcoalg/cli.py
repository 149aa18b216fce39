"""
Command-line front end.

    qcoalg behaviour --in system.json --depth 3
    qcoalg simulate  --in walk.json --steps 3
    qcoalg minimize  --in square.json --check-depth 20 --tol 1e-8
    qcoalg dfa-min   --in dfa.json

Input files are JSON objects with a ``"kind"`` of ``dfa``, ``markov``,
``quantum`` or ``walk``.  Exit status is 0 on success, 2 for parse or
validation errors and 3 for numerical failures.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from collections.abc import Mapping
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import linalg
from .automata import Dfa, minimize_dfa
from .behaviour import unfold
from .convdist import Distribution, dist_unit
from .errors import NumericalError, ValidationError
from .markov import MarkovChain, behaviour_stream
from .minimize import DEFAULT_MAX_STEPS, DEFAULT_TOL, minimal_realization
from .quantum import BehaviourPrefix, QuantumSystem, WalkSpec, behaviour_prefix, observation_stream, pure_density, walk_distribution

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3

KINDS = ("dfa", "markov", "quantum", "walk")
COMMANDS = ("behaviour", "simulate", "minimize", "dfa-min")


def fmt_float(x: float) -> str:
    """12 significant digits; negative zero prints as 0."""
    s = format(float(x), ".12g")
    return "0" if s == "-0" else s


def _round_floats(obj):
    if isinstance(obj, float):
        r = float(fmt_float(obj))
        return r if math.isfinite(r) else obj
    if isinstance(obj, Mapping):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    return obj


def dump_json(obj) -> str:
    return json.dumps(_round_floats(obj), indent=2) + "\n"


# ---------------------------------------------------------------------------
# Input files


def _read_json(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(obj, dict):
        raise ValidationError(f"{path}: top level must be a JSON object")
    return obj


def system_from_dict(obj: Mapping):
    kind = obj.get("kind")
    if kind not in KINDS:
        raise ValidationError(f"field 'kind' must be one of {list(KINDS)}, got {kind!r}")
    if kind == "dfa":
        return Dfa.from_dict(obj)
    if kind == "markov":
        return MarkovChain.from_dict(obj)
    if kind == "quantum":
        return QuantumSystem.from_dict(obj)
    walk_type = obj.get("type")
    if walk_type == "line":
        if "n_max" not in obj:
            raise ValidationError("line walk: missing field 'n_max'")
        return WalkSpec.line(int(obj["n_max"]))
    if walk_type == "graph":
        if "unitary" not in obj:
            raise ValidationError("graph walk: missing field 'unitary'")
        return WalkSpec.graph(linalg.matrix_from_json(obj["unitary"], name="walk unitary"), int(obj.get("start", 0)))
    raise ValidationError(f"walk: field 'type' must be 'line' or 'graph', got {walk_type!r}")


def parse_system_file(path):
    """Load and validate a system file; returns a Dfa, MarkovChain, QuantumSystem or WalkSpec."""
    return system_from_dict(_read_json(path))


def initial_from_dict(system, obj: Mapping):
    """
    Initial state named in a system file, with per-kind defaults.

    markov: ``"initial"`` is a state id or ``{state: prob}`` (default: first
    state).  quantum: ``{"vector": [[re, im], ...]}`` or ``{"density":
    matrix}`` (default ``|0><0|``).  Walks start at their built-in state.
    """
    init = obj.get("initial")
    if isinstance(system, Dfa):
        return system.initial if system.initial is not None else system.states[0]
    if isinstance(system, MarkovChain):
        if init is None:
            return dist_unit(system.states[0])
        return Distribution(init) if isinstance(init, Mapping) else dist_unit(init)
    if isinstance(system, WalkSpec):
        return system.initial_state()
    if init is None:
        psi = np.zeros(system.dim, dtype=np.complex128)
        psi[0] = 1
        return pure_density(psi)
    if "vector" in init:
        return pure_density(linalg.vector_from_json(init["vector"], name="initial vector"), system.tol)
    if "density" in init:
        return system.check_state(linalg.matrix_from_json(init["density"], name="initial density"))
    raise ValidationError("quantum 'initial' must contain 'vector' or 'density'")


# ---------------------------------------------------------------------------
# Commands


@dataclass(frozen=True)
class RunConfig:
    command: str
    input: str
    output: str | None = None
    depth: int = 3
    steps: int = 10
    tol: float = DEFAULT_TOL
    check_depth: int | None = None
    max_steps: int = DEFAULT_MAX_STEPS
    fmt: str | None = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValidationError(f"unknown command {self.command!r}")
        if not self.input or (self.output is not None and not self.output):
            raise ValidationError("paths must be nonempty")
        if self.depth < 0 or self.steps < 0:
            raise ValidationError("depth and steps must be >= 0")
        if self.fmt not in (None, "csv", "json"):
            raise ValidationError(f"format must be csv or json, got {self.fmt!r}")


def _table_out(prefix: BehaviourPrefix, fmt: str) -> str:
    if fmt == "json":
        return dump_json(prefix.to_dict())
    return prefix.to_csv(fmt_float)


def _behaviour(cfg: RunConfig, system, init) -> str:
    fmt = cfg.fmt or "csv"
    if isinstance(system, Dfa):
        table = unfold(system.as_system(), init, cfg.depth)
        prefix = BehaviourPrefix(
            cfg.depth, ("accept",), system.alphabet, {w: (float(ok),) for w, ok in table.items()}, False
        )
        if fmt == "json":
            return dump_json(prefix.to_dict())
        # Acceptance is a yes/no observation, so no non-test marker here.
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["word", "label", "probability"])
        w.writerows((word, label, fmt_float(x)) for word, label, x in prefix.rows())
        return buf.getvalue()
    if isinstance(system, MarkovChain):
        stream = behaviour_stream(system, init, cfg.depth)
        return dump_json(json.loads(stream.to_json())) if fmt == "json" else stream.to_csv(fmt_float, system.states)
    qsys = system.system() if isinstance(system, WalkSpec) else system
    return _table_out(behaviour_prefix(qsys, init, cfg.depth), fmt)


def _simulate(cfg: RunConfig, system, init) -> str:
    if isinstance(system, MarkovChain):
        stream, order = behaviour_stream(system, init, cfg.steps), system.states
    elif isinstance(system, WalkSpec):
        stream, order = walk_distribution(system, cfg.steps), None
    elif isinstance(system, QuantumSystem):
        stream, order = observation_stream(system, init, cfg.steps), system.labels
    else:
        raise ValidationError("simulate needs a markov, quantum or walk system")
    if cfg.fmt == "json":
        return dump_json(json.loads(stream.to_json()))
    return stream.to_csv(fmt_float, order)


def _minimize(cfg: RunConfig, system, init) -> str:
    if isinstance(system, WalkSpec):
        system = system.system()
    if not isinstance(system, QuantumSystem):
        raise ValidationError("minimize needs a quantum or walk system (use dfa-min for automata)")
    if cfg.fmt == "csv":
        raise ValidationError("minimize writes JSON only")
    m = minimal_realization(system, init, cfg.tol, cfg.check_depth, cfg.max_steps)
    return dump_json({**m.to_dict(), "report": m.report()})


def _dfa_min(cfg: RunConfig, system, init) -> str:
    if not isinstance(system, Dfa):
        raise ValidationError("dfa-min needs a dfa system")
    if cfg.fmt == "csv":
        raise ValidationError("dfa-min writes JSON only")
    return dump_json({"kind": "dfa", **minimize_dfa(system, init).to_dict()})


_HANDLERS = {"behaviour": _behaviour, "simulate": _simulate, "minimize": _minimize, "dfa-min": _dfa_min}


def run_command(cfg: RunConfig, stdout=None, stderr=None) -> int:
    """Execute one command; returns the process exit status."""
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    try:
        raw = _read_json(cfg.input)
        system = system_from_dict(raw)
        init = initial_from_dict(system, raw)
        text = _HANDLERS[cfg.command](cfg, system, init)
        if cfg.output:
            Path(cfg.output).write_text(text)
        else:
            stdout.write(text)
    except ValidationError as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_INVALID
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_INVALID
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qcoalg", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--in", dest="input", required=True, help="system file (JSON)")
        p.add_argument("--out", dest="output", help="write here instead of stdout")
        p.add_argument("--format", dest="fmt", choices=("csv", "json"))

    p = sub.add_parser("behaviour", help="behaviour table for all words up to a depth")
    common(p)
    p.add_argument("--depth", type=int, default=3)
    p = sub.add_parser("simulate", help="distribution stream of a markov chain or walk")
    common(p)
    p.add_argument("--steps", type=int, default=10)
    p = sub.add_parser("minimize", help="minimal convex realization of a quantum system")
    common(p)
    p.add_argument("--check-depth", type=int, default=None)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--max-steps", type=int, default=DEFAULT_MAX_STEPS)
    p = sub.add_parser("dfa-min", help="minimal automaton")
    common(p)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig(**{k: v for k, v in vars(args).items() if v is not None})
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return run_command(cfg)


if __name__ == "__main__":
    sys.exit(main())
