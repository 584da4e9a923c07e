"""Reference simulator for logical circuits; ground truth for equivalence tests.

Deliberately shares no kernels with the device simulator: every gate is
expanded to a full 2^N x 2^N matrix and applied by matrix-vector product,
which is plenty for the small N used in verification.
"""

from __future__ import annotations

import numpy as np

from .compiler import LogicalCircuit, LogicalGate
from .state import LogicalStateVector

_SQ2 = 1.0 / np.sqrt(2.0)

_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_H = np.array([[1, 1], [1, -1]], dtype=complex) * _SQ2


def _rotation(theta: float, axis) -> np.ndarray:
    nx, ny, nz = axis
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array(
        [[c - 1j * s * nz, -s * (1j * nx + ny)], [s * (-1j * nx + ny), c + 1j * s * nz]],
        dtype=complex,
    )


def _permutation(dim: int, mapping: dict[int, int]) -> np.ndarray:
    out = np.zeros((dim, dim), dtype=complex)
    for col in range(dim):
        out[mapping.get(col, col), col] = 1.0
    return out


def gate_small(gate: LogicalGate) -> np.ndarray:
    """Gate matrix on its own operands; operand i maps to bit i."""
    if gate.kind == "R":
        return _rotation(gate.theta, gate.axis)
    if gate.kind == "X":
        return _X
    if gate.kind == "Z":
        return _Z
    if gate.kind == "H":
        return _H
    if gate.kind == "CNOT":  # control = operand 0 (bit 0), target = operand 1 (bit 1)
        return _permutation(4, {1: 3, 3: 1})
    if gate.kind == "CZ":
        return np.diag([1, 1, 1, -1]).astype(complex)
    if gate.kind == "SWAP":
        return _permutation(4, {1: 2, 2: 1})
    if gate.kind == "TOFFOLI":  # controls = operands 0,1, target = operand 2
        return _permutation(8, {3: 7, 7: 3})
    raise ValueError(f"unknown gate kind {gate.kind!r}")


def embed(small: np.ndarray, qubits: tuple[int, ...], n_qubits: int) -> np.ndarray:
    """Lift a k-qubit matrix onto the full register (1-based qubit labels)."""
    dim = 1 << n_qubits
    k = len(qubits)
    full = np.zeros((dim, dim), dtype=complex)
    bits = [1 << (q - 1) for q in qubits]
    clear = dim - 1
    for b in bits:
        clear &= ~b
    for col in range(dim):
        col_small = 0
        for i, b in enumerate(bits):
            if col & b:
                col_small |= 1 << i
        base = col & clear
        for row_small in range(1 << k):
            amp = small[row_small, col_small]
            if amp == 0:
                continue
            row = base
            for i, b in enumerate(bits):
                if row_small & (1 << i):
                    row |= b
            full[row, col] = amp
    return full


def gate_unitary(gate: LogicalGate, n_qubits: int) -> np.ndarray:
    return embed(gate_small(gate), gate.qubits, n_qubits)


def circuit_unitary(circuit: LogicalCircuit) -> np.ndarray:
    u = np.eye(1 << circuit.n_qubits, dtype=complex)
    for gate in circuit.gates:
        u = gate_unitary(gate, circuit.n_qubits) @ u
    return u


def simulate_logical(circuit: LogicalCircuit, psi_in: LogicalStateVector) -> LogicalStateVector:
    if psi_in.n_qubits != circuit.n_qubits:
        raise ValueError(
            f"state has {psi_in.n_qubits} qubits but circuit expects {circuit.n_qubits}"
        )
    psi = psi_in.amplitudes.astype(complex).copy()
    for gate in circuit.gates:
        psi = gate_unitary(gate, circuit.n_qubits) @ psi
    return LogicalStateVector(circuit.n_qubits, psi)


def compare_up_to_global_phase(psi1: LogicalStateVector, psi2: LogicalStateVector):
    """Returns (fidelity, phase): |<1|2>|^2 after normalization, and the
    phase alpha for which psi2 ~ e^{i alpha} psi1."""
    a, b = psi1.amplitudes, psi2.amplitudes
    if a.shape != b.shape:
        raise ValueError("dimension mismatch")
    ip = np.vdot(a, b)
    denom = float(np.linalg.norm(a) ** 2 * np.linalg.norm(b) ** 2)
    return float(abs(ip) ** 2 / denom), float(np.angle(ip))
