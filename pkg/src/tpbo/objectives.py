"""Benchmark objectives, constraint-penalty wrapping, and the external adapter.

An objective evaluation produces an outcome: a plain value, a constraint
violation with magnitude xi, a non-physical result, or a crash.  The penalty
transform maps every outcome onto a single scalar the optimizer can minimize:

    value       -> value
    violation   -> violation_base * (1 + xi)
    nonphysical -> nonphysical_value
    crash       -> crash_value

External simulators are driven over a line-delimited protocol on the child
process's stdin/stdout: one UTF-8 JSON object per line, newline-terminated.
Request ``{"x": [..]}``; response one of ``{"y": v}``, ``{"violation": xi}``,
``{"nonphysical": true}``, ``{"crash": true}``.
"""

from __future__ import annotations

import json
import queue
import shlex
import subprocess
import threading
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .distributions import InvalidParameter


class OutOfBounds(Exception):
    """Input lies outside the objective's domain."""


class ProtocolError(Exception):
    """External adapter received a malformed response."""


VALUE = "value"
VIOLATION = "violation"
NONPHYSICAL = "nonphysical"
CRASH = "crash"


@dataclass(frozen=True)
class EvalOutcome:
    """Tagged result of one objective evaluation.

    ``value`` holds the objective value for kind ``value`` and the violation
    magnitude xi for kind ``violation``; it is unused otherwise.
    """

    kind: str
    value: float = 0.0

    @classmethod
    def of_value(cls, v: float) -> "EvalOutcome":
        return cls(VALUE, float(v))

    @classmethod
    def of_violation(cls, xi: float) -> "EvalOutcome":
        return cls(VIOLATION, float(xi))

    @classmethod
    def of_nonphysical(cls) -> "EvalOutcome":
        return cls(NONPHYSICAL)

    @classmethod
    def of_crash(cls) -> "EvalOutcome":
        return cls(CRASH)


@dataclass(frozen=True)
class PenaltySpec:
    """Penalty levels for failed evaluations; ordered crash > nonphysical > violation."""

    violation_base: float = 180_000.0
    nonphysical_value: float = 300_000.0
    crash_value: float = 400_000.0

    def __post_init__(self) -> None:
        if not (self.crash_value > self.nonphysical_value > self.violation_base > 0):
            raise InvalidParameter(
                "penalty ordering must satisfy crash > nonphysical > violation_base > 0"
            )


def penalty_wrap(raw: EvalOutcome, spec: PenaltySpec) -> float:
    """Collapse an evaluation outcome to a scalar via the penalty transform."""
    if raw.kind == VALUE:
        return raw.value
    if raw.kind == VIOLATION:
        if raw.value < 0:
            raise InvalidParameter(f"violation magnitude must be >= 0, got {raw.value}")
        return spec.violation_base * (1.0 + raw.value)
    if raw.kind == NONPHYSICAL:
        return spec.nonphysical_value
    if raw.kind == CRASH:
        return spec.crash_value
    raise InvalidParameter(f"unknown outcome kind {raw.kind!r}")


ROSENBROCK_BOUNDS = np.array([[-3.0, 3.0], [-3.0, 3.0]])
CAMEL_BOUNDS = np.array([[-3.0, 3.0], [-2.0, 2.0]])

# Global minima of the two benchmarks.  Note that the Rosenbrock function is
# sometimes misquoted as having its minimum at the origin; the formula's
# minimum of 0 is at (1, 1).
ROSENBROCK_OPTIMUM = 0.0
CAMEL_OPTIMUM = -1.0316284534898774


def _check_bounds(x: np.ndarray, bounds: np.ndarray) -> np.ndarray:
    v = np.asarray(x, dtype=float).ravel()
    if v.size != bounds.shape[0]:
        raise OutOfBounds(f"expected {bounds.shape[0]} coordinates, got {v.size}")
    if (v < bounds[:, 0]).any() or (v > bounds[:, 1]).any():
        raise OutOfBounds(f"point {v.tolist()} outside bounds {bounds.tolist()}")
    return v


def rosenbrock(x: np.ndarray) -> float:
    """Banana-valley benchmark on [-3, 3]^2; minimum 0 at (1, 1)."""
    x1, x2 = _check_bounds(x, ROSENBROCK_BOUNDS)
    return float((1.0 - x1) ** 2 + 100.0 * (x2 - x1**2) ** 2)


def six_hump_camel(x: np.ndarray) -> float:
    """Six-minimum benchmark on [-3, 3] x [-2, 2]; two global minima of -1.0316."""
    x1, x2 = _check_bounds(x, CAMEL_BOUNDS)
    return float(
        (4.0 - 2.1 * x1**2 + x1**4 / 3.0) * x1**2
        + x1 * x2
        + (-4.0 + 4.0 * x2**2) * x2**2
    )


class ExternalObjective:
    """Adapter around an external evaluator process.

    The child is spawned lazily and kept alive between requests; access is
    serialized by construction (one in-flight request).  A response timeout
    kills the child and maps to a crash outcome; the next request restarts it.
    """

    def __init__(self, command: Sequence[str] | str, timeout: float = 600.0):
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        self.timeout = float(timeout)
        self._proc: subprocess.Popen | None = None
        self._lines: queue.Queue[str | None] = queue.Queue()

    def _start(self) -> None:
        self._lines = queue.Queue()
        self._proc = subprocess.Popen(
            self.command,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            encoding="utf-8",
            bufsize=1,
        )

        def pump(proc: subprocess.Popen, sink: queue.Queue) -> None:
            for line in proc.stdout:
                sink.put(line)
            sink.put(None)  # EOF marker

        threading.Thread(
            target=pump, args=(self._proc, self._lines), daemon=True
        ).start()

    def close(self) -> None:
        if self._proc is not None and self._proc.poll() is None:
            self._proc.kill()
            self._proc.wait()
        self._proc = None

    def evaluate_outcome(self, x: np.ndarray) -> EvalOutcome:
        if self._proc is None or self._proc.poll() is not None:
            self._start()
        request = json.dumps({"x": [float(v) for v in np.asarray(x, dtype=float).ravel()]})
        try:
            self._proc.stdin.write(request + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError):
            self.close()
            return EvalOutcome.of_crash()
        try:
            line = self._lines.get(timeout=self.timeout)
        except queue.Empty:
            self.close()
            return EvalOutcome.of_crash()
        if line is None:  # child exited without answering
            self.close()
            return EvalOutcome.of_crash()
        try:
            reply = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"unparseable response line: {line!r}") from exc
        if not isinstance(reply, dict):
            raise ProtocolError(f"response must be a JSON object, got {reply!r}")
        if "y" in reply:
            return EvalOutcome.of_value(reply["y"])
        if "violation" in reply:
            return EvalOutcome.of_violation(reply["violation"])
        if reply.get("nonphysical"):
            return EvalOutcome.of_nonphysical()
        if reply.get("crash"):
            return EvalOutcome.of_crash()
        raise ProtocolError(f"response carries no recognized field: {reply!r}")


def external_evaluate(adapter: ExternalObjective, x: np.ndarray) -> EvalOutcome:
    """Evaluate one point through an external adapter."""
    return adapter.evaluate_outcome(x)


@dataclass
class ObjectiveHandle:
    """Uniform evaluation interface the optimization driver runs against.

    ``evaluate`` always returns a scalar: outcomes pass through the penalty
    transform, and unexpected evaluator exceptions map to the crash penalty so
    a single bad point never aborts a campaign.  Out-of-bounds inputs are a
    caller error and still raise.
    """

    kind: str
    bounds: np.ndarray
    known_optimum: float | None = None
    failure_policy: PenaltySpec = field(default_factory=PenaltySpec)
    outcome_fn: Callable[[np.ndarray], EvalOutcome] | None = None

    def __post_init__(self) -> None:
        self.bounds = np.asarray(self.bounds, dtype=float).reshape(-1, 2)

    def evaluate_outcome(self, x: np.ndarray) -> EvalOutcome:
        try:
            return self.outcome_fn(x)
        except OutOfBounds:
            raise
        except Exception:
            return EvalOutcome.of_crash()

    def evaluate(self, x: np.ndarray) -> float:
        return penalty_wrap(self.evaluate_outcome(x), self.failure_policy)

    @property
    def dim(self) -> int:
        return self.bounds.shape[0]


def make_objective(
    kind: str,
    bounds: np.ndarray | None = None,
    known_optimum: float | None = None,
    failure_policy: PenaltySpec | None = None,
    command: Sequence[str] | str | None = None,
    timeout: float = 600.0,
) -> ObjectiveHandle:
    """Build an objective handle for a named benchmark or an external command."""
    policy = failure_policy if failure_policy is not None else PenaltySpec()
    if kind == "rosenbrock":
        return ObjectiveHandle(
            kind=kind,
            bounds=ROSENBROCK_BOUNDS if bounds is None else bounds,
            known_optimum=ROSENBROCK_OPTIMUM if known_optimum is None else known_optimum,
            failure_policy=policy,
            outcome_fn=lambda x: EvalOutcome.of_value(rosenbrock(x)),
        )
    if kind == "six_hump_camel":
        return ObjectiveHandle(
            kind=kind,
            bounds=CAMEL_BOUNDS if bounds is None else bounds,
            known_optimum=CAMEL_OPTIMUM if known_optimum is None else known_optimum,
            failure_policy=policy,
            outcome_fn=lambda x: EvalOutcome.of_value(six_hump_camel(x)),
        )
    if kind == "external":
        if command is None:
            raise InvalidParameter("external objective requires a command")
        if bounds is None:
            raise InvalidParameter("external objective requires bounds")
        adapter = ExternalObjective(command, timeout=timeout)
        return ObjectiveHandle(
            kind=kind,
            bounds=bounds,
            known_optimum=known_optimum,
            failure_policy=policy,
            outcome_fn=adapter.evaluate_outcome,
        )
    raise InvalidParameter(f"unknown objective kind {kind!r}")
