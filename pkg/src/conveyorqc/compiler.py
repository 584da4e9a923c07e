"""Lower logical circuits to global-pulse schedules.

Only three IC positions are directly usable: Q_2 hosts single-qubit rotations
(the B-crossed site) and (Q_1, Q_3 -> Q_2) hosts the one-shot Toffoli.  Every
other gate is reduced to those two primitives plus exchange rotations, which
shift odd-position occupants one way around the loop and even-position
occupants the other way while toggling the sector phase.

Placement is tracked, not restored: gates are lowered against the current
placement and the final placement is reported so a verifier can un-permute.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .pulses import (
    HADAMARD_AXIS,
    GlobalPulse,
    MacroSpan,
    PulseSchedule,
    TargetClass,
    X_AXIS,
    Z_AXIS,
    apply_global_pulse,
    seq_exchange,
    seq_exchange_inverse,
    seq_toffoli,
)
from .state import LogicalStateVector, PhaseLabel, State, well_formed_residual
from .topology import BASELINE, DeviceTopology

GATE_ARITY = {"R": 1, "X": 1, "Z": 1, "H": 1, "CNOT": 2, "CZ": 2, "SWAP": 2, "TOFFOLI": 3}


@dataclass(frozen=True)
class LogicalGate:
    kind: str
    qubits: tuple[int, ...]  # 1-based logical indices
    theta: float = 0.0
    axis: tuple[float, float, float] = X_AXIS

    def __post_init__(self):
        if self.kind not in GATE_ARITY:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if len(self.qubits) != GATE_ARITY[self.kind]:
            raise ValueError(f"{self.kind} takes {GATE_ARITY[self.kind]} operands, got {self.qubits}")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"{self.kind} operands must be distinct, got {self.qubits}")
        if any(q < 1 for q in self.qubits):
            raise ValueError(f"operands are 1-based, got {self.qubits}")


@dataclass(frozen=True)
class LogicalCircuit:
    n_qubits: int
    gates: tuple[LogicalGate, ...]

    def __post_init__(self):
        for g in self.gates:
            if any(q > self.n_qubits for q in g.qubits):
                raise ValueError(f"gate {g} addresses qubits beyond n={self.n_qubits}")


@dataclass
class RoutingState:
    """placement[j-1] = IC position currently holding logical qubit j."""

    placement: list[int]
    phase: PhaseLabel
    pulse_count: int = 0


def initial_routing(n_qubits: int) -> RoutingState:
    return RoutingState(list(range(1, n_qubits + 1)), PhaseLabel.FP)


def step_position(pos: int, phase: PhaseLabel, n: int) -> int:
    """Where the occupant of `pos` lands after one exchange sequence."""
    clockwise = (pos % 2 == 1) == (phase is PhaseLabel.FP)
    return pos % n + 1 if clockwise else (pos - 2) % n + 1


def permutation_after(ell: int, start_phase: PhaseLabel, n: int) -> tuple[int, ...]:
    """Positions after `ell` exchanges: entry j-1 is where origin position j
    ends up.  Odd origins travel clockwise from FP, even origins the other
    way; both directions reverse from PF."""
    out = []
    for j in range(1, n + 1):
        forward = (j % 2 == 1) == (start_phase is PhaseLabel.FP)
        out.append((j - 1 + ell) % n + 1 if forward else (j - 1 - ell) % n + 1)
    return tuple(out)


def route_to_Q2(j: int, phase: PhaseLabel, n: int) -> int:
    """Smallest number of exchanges that brings position j onto Q_2."""
    for ell in range(n):
        if permutation_after(ell, phase, n)[j - 1] == 2:
            return ell
    raise AssertionError("unreachable: every position cycles through Q_2")


class _Emitter:
    """Accumulates pulses while keeping the routing state in step."""

    def __init__(self, routing: RoutingState):
        self.rt = routing
        self.n = len(routing.placement)
        self.sched = PulseSchedule()

    def _mark(self, name: str, pulses: list[GlobalPulse]) -> None:
        start = len(self.sched.pulses)
        self.sched.pulses.extend(pulses)
        self.sched.annotations.append(MacroSpan(name, start, len(self.sched.pulses)))

    def exc(self) -> None:
        self._mark("EXC", seq_exchange().pulses)
        self.rt.placement = [step_position(p, self.rt.phase, self.n) for p in self.rt.placement]
        self.rt.phase = self.rt.phase.flipped()

    def exc_inv(self) -> None:
        self._mark("EXC_INV", seq_exchange_inverse().pulses)
        flipped = self.rt.phase.flipped()
        self.rt.placement = [step_position(p, flipped, self.n) for p in self.rt.placement]
        self.rt.phase = flipped

    def q2_pulse(self, theta: float, axis) -> None:
        self.sched.pulses.append(GlobalPulse(TargetClass.B_CROSSED, theta, tuple(axis)))

    def toffoli(self) -> None:
        self._mark("TOFFOLI", seq_toffoli().pulses)

    def pulse_at(self, pos: int, theta: float, axis) -> None:
        """Rotate the occupant of IC position `pos`: rotate it into Q_2,
        pulse, rotate back.  Placement and phase are restored."""
        ell = route_to_Q2(pos, self.rt.phase, self.n)
        for _ in range(ell):
            self.exc()
        self.q2_pulse(theta, axis)
        for _ in range(ell):
            self.exc_inv()

    # -- fixed-position two-qubit building blocks (positions 1, 2, 3) --

    def cnot_towards_q2(self, control_pos: int) -> None:
        """CNOT with control at Q_1 or Q_3 and target at Q_2, via two Toffolis
        and two bit flips of the spare control-site occupant."""
        spare = 3 if control_pos == 1 else 1
        self.toffoli()
        self.pulse_at(spare, math.pi, X_AXIS)
        self.toffoli()
        self.pulse_at(spare, math.pi, X_AXIS)

    def cnot_from_q2(self, target_pos: int) -> None:
        """CNOT with control at Q_2, realized by conjugating the reversed
        CNOT with Hadamard rotations on both ends."""
        self.pulse_at(target_pos, math.pi, HADAMARD_AXIS)
        self.pulse_at(2, math.pi, HADAMARD_AXIS)
        self.cnot_towards_q2(target_pos)
        self.pulse_at(target_pos, math.pi, HADAMARD_AXIS)
        self.pulse_at(2, math.pi, HADAMARD_AXIS)

    def _relabel(self, x: int, y: int) -> None:
        ix = self.rt.placement.index(x)
        iy = self.rt.placement.index(y)
        self.rt.placement[ix], self.rt.placement[iy] = y, x

    def swap_positions(self, x: int, y: int) -> None:
        """Physically exchange the occupants of two of Q_1..Q_3 and relabel
        the placement, so the tracked logical content is unchanged."""
        pair = (min(x, y), max(x, y))
        if pair == (1, 2):
            self.cnot_towards_q2(1)
            self.cnot_from_q2(1)
            self.cnot_towards_q2(1)
            self._relabel(1, 2)
        elif pair == (2, 3):
            self.cnot_towards_q2(3)
            self.cnot_from_q2(3)
            self.cnot_towards_q2(3)
            self._relabel(2, 3)
        elif pair == (1, 3):
            self.swap_positions(1, 2)
            self.swap_positions(2, 3)
            self.swap_positions(1, 2)
        else:
            raise ValueError(f"fixed-site swaps exist only among Q_1..Q_3, got {pair}")

    def do_move(self, move: str) -> None:
        if move == "EXC":
            self.exc()
        elif move == "EXC_INV":
            self.exc_inv()
        elif move.startswith("SWAP_Q"):
            x, y = int(move[6]), int(move[8])
            self.swap_positions(x, y)
        else:
            raise ValueError(f"unknown routing move {move!r}")

    def finish(self) -> PulseSchedule:
        self.rt.pulse_count += len(self.sched.pulses)
        return self.sched


# --- routing search ---------------------------------------------------------------

MOVES = ("EXC", "EXC_INV", "SWAP_Q1Q2", "SWAP_Q2Q3", "SWAP_Q1Q3")
_SWAP_SITES = {"SWAP_Q1Q2": (1, 2), "SWAP_Q2Q3": (2, 3), "SWAP_Q1Q3": (1, 3)}


def apply_move(positions: tuple[int, ...], phase: PhaseLabel, move: str, n: int):
    """Track a move's effect on a tuple of positions; returns (positions, phase)."""
    if move == "EXC":
        return tuple(step_position(p, phase, n) for p in positions), phase.flipped()
    if move == "EXC_INV":
        flipped = phase.flipped()
        return tuple(step_position(p, flipped, n) for p in positions), flipped
    x, y = _SWAP_SITES[move]
    return tuple(y if p == x else x if p == y else p for p in positions), phase


def bfs_route(targets: tuple[int, int, int], routing: RoutingState) -> list[str]:
    """Shortest move sequence placing logical (a, b, c) at (Q_1, Q_3, Q_2).

    The search space is (pos_a, pos_b, pos_c, phase); moves are exchanges in
    either direction plus the three fixed-site swaps, so every arrangement is
    reachable.  Does not mutate `routing`.
    """
    n = len(routing.placement)
    start = (tuple(routing.placement[q - 1] for q in targets), routing.phase)
    goal = (1, 3, 2)
    if start[0] == goal:
        return []
    seen = {start}
    queue = deque([(start, [])])
    while queue:
        (positions, phase), path = queue.popleft()
        for move in MOVES:
            nxt = apply_move(positions, phase, move, n)
            if nxt in seen:
                continue
            if nxt[0] == goal:
                return path + [move]
            seen.add(nxt)
            queue.append((nxt, path + [move]))
    raise AssertionError("unreachable: the routing move graph is connected")


# --- gate macros ------------------------------------------------------------------

def macro_single_qubit(j: int, theta: float, axis, routing: RoutingState) -> PulseSchedule:
    em = _Emitter(routing)
    em.pulse_at(routing.placement[j - 1], theta, axis)
    return em.finish()


def macro_cnot(a: int, c: int, routing: RoutingState) -> PulseSchedule:
    """CNOT control a -> target c: route a, a spare qubit b and c onto
    (Q_1, Q_3, Q_2), then Toffoli, flip b, Toffoli, flip b."""
    if a == c:
        raise ValueError("CNOT needs two distinct qubits")
    n = len(routing.placement)
    b = min(q for q in range(1, n + 1) if q not in (a, c))
    em = _Emitter(routing)
    for move in bfs_route((a, b, c), routing):
        em.do_move(move)
    em.toffoli()
    em.pulse_at(3, math.pi, X_AXIS)
    em.toffoli()
    em.pulse_at(3, math.pi, X_AXIS)
    return em.finish()


def macro_swap(a: int, b: int, routing: RoutingState) -> PulseSchedule:
    out = macro_cnot(a, b, routing)
    out.extend(macro_cnot(b, a, routing))
    out.extend(macro_cnot(a, b, routing))
    return out


def macro_toffoli(a: int, b: int, c: int, routing: RoutingState) -> PulseSchedule:
    if len({a, b, c}) != 3:
        raise ValueError("TOFFOLI needs three distinct qubits")
    em = _Emitter(routing)
    for move in bfs_route((a, b, c), routing):
        em.do_move(move)
    em.toffoli()
    return em.finish()


@dataclass
class CompileResult:
    schedule: PulseSchedule
    placement: tuple[int, ...]  # final: logical j sits at placement[j-1]
    phase: PhaseLabel
    pulse_count: int


def compile_circuit(circuit: LogicalCircuit, topo: DeviceTopology) -> CompileResult:
    if topo.kind != BASELINE:
        raise ValueError("compilation targets the baseline design only")
    if circuit.n_qubits != topo.n_logical:
        raise ValueError(
            f"circuit has {circuit.n_qubits} qubits but device encodes {topo.n_logical}"
        )
    routing = initial_routing(circuit.n_qubits)
    total = PulseSchedule()
    for gate in circuit.gates:
        if gate.kind == "R":
            part = macro_single_qubit(gate.qubits[0], gate.theta, gate.axis, routing)
        elif gate.kind == "X":
            part = macro_single_qubit(gate.qubits[0], math.pi, X_AXIS, routing)
        elif gate.kind == "Z":
            part = macro_single_qubit(gate.qubits[0], math.pi, Z_AXIS, routing)
        elif gate.kind == "H":
            part = macro_single_qubit(gate.qubits[0], math.pi, HADAMARD_AXIS, routing)
        elif gate.kind == "CNOT":
            part = macro_cnot(gate.qubits[0], gate.qubits[1], routing)
        elif gate.kind == "CZ":
            a, c = gate.qubits
            part = macro_single_qubit(c, math.pi, HADAMARD_AXIS, routing)
            part.extend(macro_cnot(a, c, routing))
            part.extend(macro_single_qubit(c, math.pi, HADAMARD_AXIS, routing))
        elif gate.kind == "SWAP":
            part = macro_swap(gate.qubits[0], gate.qubits[1], routing)
        else:  # TOFFOLI
            part = macro_toffoli(gate.qubits[0], gate.qubits[1], gate.qubits[2], routing)
        total.extend(part)
    return CompileResult(total, tuple(routing.placement), routing.phase, len(total.pulses))


# --- verification helpers ------------------------------------------------------------

def permute_logical(psi: LogicalStateVector, placement) -> LogicalStateVector:
    """Move logical qubit j onto position placement[j-1] (bit relabeling)."""
    n = psi.n_qubits
    m = np.arange(1 << n, dtype=np.int64)
    out_idx = np.zeros_like(m)
    for j, pos in enumerate(placement, start=1):
        out_idx |= ((m >> (j - 1)) & 1) << (pos - 1)
    out = np.zeros_like(psi.amplitudes)
    out[out_idx] = psi.amplitudes
    return LogicalStateVector(n, out)


def macro_boundaries(schedule: PulseSchedule) -> list[int]:
    """Pulse counts after which a compiled schedule is back in the well-formed
    subspace: the end of every annotated span plus every bare pulse."""
    inside = [False] * len(schedule.pulses)
    bounds = set()
    for a in schedule.annotations:
        for i in range(a.start, a.stop):
            inside[i] = True
        bounds.add(a.stop)
    bounds.update(i + 1 for i, flag in enumerate(inside) if not flag)
    return sorted(b for b in bounds if 0 < b <= len(schedule.pulses))


def apply_with_boundary_residuals(
    state: State, topo: DeviceTopology, schedule: PulseSchedule
) -> list[float]:
    """Apply the schedule, measuring the out-of-subspace weight at every macro
    boundary.  Returns the residuals in order."""
    bounds = macro_boundaries(schedule)
    residuals = []
    bi = 0
    for i, pulse in enumerate(schedule.pulses, start=1):
        apply_global_pulse(state, topo, pulse)
        if bi < len(bounds) and bounds[bi] == i:
            residuals.append(well_formed_residual(state, topo)[0])
            bi += 1
    return residuals


def random_circuit(n_qubits: int, depth: int, rng: np.random.Generator) -> LogicalCircuit:
    kinds = sorted(GATE_ARITY)
    gates = []
    for _ in range(depth):
        kind = kinds[rng.integers(len(kinds))]
        qubits = tuple(int(q) + 1 for q in rng.choice(n_qubits, size=GATE_ARITY[kind], replace=False))
        if kind == "R":
            axis = rng.normal(size=3)
            axis /= np.linalg.norm(axis)
            gates.append(LogicalGate("R", qubits, float(rng.uniform(-math.pi, math.pi)), tuple(axis)))
        else:
            gates.append(LogicalGate(kind, qubits))
    return LogicalCircuit(n_qubits, tuple(gates))


# --- circuit text format --------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(x, ".17g")


def write_circuit(circuit: LogicalCircuit) -> str:
    lines = []
    for g in circuit.gates:
        if g.kind == "R":
            ax = ",".join(_fmt(v) for v in g.axis)
            lines.append(f"R q={g.qubits[0]} theta={_fmt(g.theta)} axis={ax}")
        elif g.kind in ("X", "Z", "H"):
            lines.append(f"{g.kind} q={g.qubits[0]}")
        elif g.kind == "TOFFOLI":
            a, b, c = g.qubits
            lines.append(f"TOFFOLI a={a} b={b} c={c}")
        else:
            a, b = g.qubits
            lines.append(f"{g.kind} a={a} b={b}")
    return "\n".join(lines) + "\n" if lines else ""


def parse_circuit(text: str, n_qubits: int) -> LogicalCircuit:
    gates = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        kind = fields[0]
        kv = {}
        for f in fields[1:]:
            if "=" not in f:
                raise ValueError(f"line {line_no}: expected key=value, got {f!r}")
            k, _, v = f.partition("=")
            kv[k] = v
        try:
            if kind == "R":
                axis = tuple(float(v) for v in kv["axis"].split(","))
                gates.append(LogicalGate("R", (int(kv["q"]),), float(kv["theta"]), axis))
            elif kind in ("X", "Z", "H"):
                gates.append(LogicalGate(kind, (int(kv["q"]),)))
            elif kind in ("CNOT", "CZ", "SWAP"):
                gates.append(LogicalGate(kind, (int(kv["a"]), int(kv["b"]))))
            elif kind == "TOFFOLI":
                gates.append(LogicalGate("TOFFOLI", (int(kv["a"]), int(kv["b"]), int(kv["c"]))))
            else:
                raise ValueError(f"unknown gate {kind!r}")
        except KeyError as e:
            raise ValueError(f"line {line_no}: missing field {e} for {kind}") from None
    return LogicalCircuit(n_qubits, tuple(gates))
