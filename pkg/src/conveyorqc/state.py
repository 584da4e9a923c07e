"""Exact quantum states over all physical qubits, dense and sparse backends.

Basis convention: little-endian, bit i of the basis index is qubit i,
bit value 0 = |g>, 1 = |e>.  Rotations follow R(theta, n) =
exp(-i (theta/2) n.sigma).  The sparse backend stores a basis-index ->
amplitude map and prunes entries below a tolerance after every update.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .topology import DeviceTopology

SPARSE_PRUNE_TOL = 1e-12
DECODE_TOL = 1e-9


class PhaseLabel(str, Enum):
    """Which sector alternation carries the logical state: FP puts the
    ferromagnetic (ggg) pattern on odd sectors, PF is the mirror."""

    FP = "FP"
    PF = "PF"

    def flipped(self) -> "PhaseLabel":
        return PhaseLabel.PF if self is PhaseLabel.FP else PhaseLabel.FP


class NotWellFormedError(ValueError):
    def __init__(self, residual: float):
        super().__init__(f"not well-formed (residual = {residual:.3e})")
        self.residual = residual


@dataclass
class PureState:
    n_qubits: int
    amplitudes: np.ndarray  # complex128, length 2**n_qubits

    def copy(self) -> "PureState":
        return PureState(self.n_qubits, self.amplitudes.copy())


@dataclass
class SparseState:
    n_qubits: int
    amplitudes: dict[int, complex] = field(default_factory=dict)
    prune_tolerance: float = SPARSE_PRUNE_TOL

    def copy(self) -> "SparseState":
        return SparseState(self.n_qubits, dict(self.amplitudes), self.prune_tolerance)


State = PureState | SparseState


@dataclass
class LogicalStateVector:
    """Amplitudes of the N computational qubits, same bit convention."""

    n_qubits: int
    amplitudes: np.ndarray


def all_ground(n_qubits: int, backend: str = "dense") -> State:
    if n_qubits < 1:
        raise ValueError(f"n_qubits must be >= 1, got {n_qubits}")
    if backend == "dense":
        amp = np.zeros(1 << n_qubits, dtype=np.complex128)
        amp[0] = 1.0
        return PureState(n_qubits, amp)
    if backend == "sparse":
        return SparseState(n_qubits, {0: 1.0 + 0.0j})
    raise ValueError(f"unknown backend {backend!r}")


def norm(state: State) -> float:
    if isinstance(state, PureState):
        return float(np.linalg.norm(state.amplitudes))
    return float(np.sqrt(sum(abs(a) ** 2 for a in state.amplitudes.values())))


def rotation_matrix(theta: float, axis) -> np.ndarray:
    nx, ny, nz = axis
    length = np.sqrt(nx * nx + ny * ny + nz * nz)
    if abs(length - 1.0) > 1e-12:
        raise ValueError(f"rotation axis must be unit length, |n| = {length}")
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array(
        [
            [c - 1j * s * nz, -s * (1j * nx + ny)],
            [s * (-1j * nx + ny), c + 1j * s * nz],
        ],
        dtype=np.complex128,
    )


# Conditioned index pairs are reused heavily when the same pulse classes hit
# the same device over and over; keyed by (n_qubits, target bit, control mask).
_KERNEL_CACHE: dict[tuple[int, int, int], tuple[np.ndarray, np.ndarray]] = {}

# Matrix entries below this are float dust from pi/2pi trigonometry; snapping
# them keeps pi pulses exact basis permutations.
_MATRIX_SNAP = 1e-15


def _kernel_indices(n_qubits: int, tbit: int, ctrl_mask: int):
    key = (n_qubits, tbit, ctrl_mask)
    pair = _KERNEL_CACHE.get(key)
    if pair is None:
        i0 = np.zeros(1, dtype=np.int64)
        fixed = ctrl_mask | tbit
        for b in range(n_qubits):
            bit = 1 << b
            if not fixed & bit:
                i0 = np.concatenate([i0, i0 | bit])
        if len(_KERNEL_CACHE) > 512:
            _KERNEL_CACHE.clear()
        _KERNEL_CACHE[key] = pair = (i0, i0 + tbit)
    return pair


def _rotate_site(state: State, target: int, ctrl_mask: int, r: np.ndarray) -> None:
    tbit = 1 << target
    r00, r01, r10, r11 = r[0, 0], r[0, 1], r[1, 0], r[1, 1]
    diag = abs(r01) < _MATRIX_SNAP and abs(r10) < _MATRIX_SNAP
    anti = abs(r00) < _MATRIX_SNAP and abs(r11) < _MATRIX_SNAP

    if isinstance(state, PureState):
        i0, i1 = _kernel_indices(state.n_qubits, tbit, ctrl_mask)
        amp = state.amplitudes
        if diag:
            amp[i0] *= r00
            amp[i1] *= r11
        elif anti:
            a0 = amp[i0].copy()
            amp[i0] = r01 * amp[i1]
            amp[i1] = r10 * a0
        else:
            a0, a1 = amp[i0], amp[i1]
            amp[i0] = r00 * a0 + r01 * a1
            amp[i1] = r10 * a0 + r11 * a1
        return

    out: dict[int, complex] = {}
    for idx, a in state.amplitudes.items():
        if idx & ctrl_mask:
            out[idx] = out.get(idx, 0j) + a
        elif diag:
            out[idx] = out.get(idx, 0j) + (r11 if idx & tbit else r00) * a
        elif anti:
            flipped = idx ^ tbit
            m = r10 if flipped & tbit else r01
            out[flipped] = out.get(flipped, 0j) + m * a
        else:
            col = 1 if idx & tbit else 0
            ig, ie = idx & ~tbit, idx | tbit
            out[ig] = out.get(ig, 0j) + r[0, col] * a
            out[ie] = out.get(ie, 0j) + r[1, col] * a
    tol = state.prune_tolerance
    state.amplitudes = {k: v for k, v in out.items() if abs(v) >= tol}


def control_mask(control_sites) -> int:
    mask = 0
    for c in control_sites:
        mask |= 1 << c
    return mask


def apply_controlled_rotation(state: State, target: int, control_sites, theta: float, axis) -> State:
    """Rotate `target` by R(theta, axis) on the subspace where every control
    site is |g>; identity elsewhere.  Mutates and returns `state`."""
    controls = frozenset(control_sites)
    if target in controls:
        raise ValueError(f"target {target} cannot also be a control")
    if not 0 <= target < state.n_qubits or any(not 0 <= c < state.n_qubits for c in controls):
        raise ValueError("site id out of range")
    _rotate_site(state, target, control_mask(controls), rotation_matrix(theta, axis))
    return state


def to_sparse(state: PureState, prune_tolerance: float = SPARSE_PRUNE_TOL) -> SparseState:
    amp = state.amplitudes
    (nz,) = np.nonzero(np.abs(amp) >= prune_tolerance)
    return SparseState(state.n_qubits, {int(i): complex(amp[i]) for i in nz}, prune_tolerance)


def to_dense(state: SparseState) -> PureState:
    amp = np.zeros(1 << state.n_qubits, dtype=np.complex128)
    for idx, a in state.amplitudes.items():
        amp[idx] = a
    return PureState(state.n_qubits, amp)


def _inner(s1: State, s2: State) -> complex:
    if isinstance(s1, PureState) and isinstance(s2, PureState):
        return complex(np.vdot(s1.amplitudes, s2.amplitudes))
    if isinstance(s1, SparseState) and isinstance(s2, SparseState):
        small, big = (s1, s2) if len(s1.amplitudes) <= len(s2.amplitudes) else (s2, s1)
        acc = 0j
        for idx, a in small.amplitudes.items():
            b = big.amplitudes.get(idx)
            if b is not None:
                acc += (a.conjugate() * b) if small is s1 else (b.conjugate() * a)
        return acc
    if isinstance(s1, SparseState):
        return sum(a.conjugate() * complex(s2.amplitudes[i]) for i, a in s1.amplitudes.items())
    return sum(complex(s1.amplitudes[i]).conjugate() * a for i, a in s2.amplitudes.items())


def fidelity(s1: State, s2: State) -> float:
    """|<s1|s2>|^2; insensitive to global phase."""
    if s1.n_qubits != s2.n_qubits:
        raise ValueError(f"qubit count mismatch: {s1.n_qubits} vs {s2.n_qubits}")
    return float(abs(_inner(s1, s2)) ** 2)


def l2_distance(s1: State, s2: State) -> float:
    if s1.n_qubits != s2.n_qubits:
        raise ValueError(f"qubit count mismatch: {s1.n_qubits} vs {s2.n_qubits}")
    d1 = s1 if isinstance(s1, PureState) else to_dense(s1)
    d2 = s2 if isinstance(s2, PureState) else to_dense(s2)
    return float(np.linalg.norm(d1.amplitudes - d2.amplitudes))


# --- well-formed encoding ------------------------------------------------------

def _ic_spread_table(topo: DeviceTopology) -> np.ndarray:
    # physical basis offsets of each logical basis index (IC bits only)
    n = topo.n_logical
    m = np.arange(1 << n, dtype=np.int64)
    out = np.zeros_like(m)
    for j, site in enumerate(topo.ic_sites):
        out |= ((m >> j) & 1) << site
    return out


def _sector_mask(topo: DeviceTopology, phase: PhaseLabel) -> int:
    start = 2 if phase is PhaseLabel.FP else 1  # paramagnetic sectors
    mask = 0
    for j in range(start, topo.n_logical + 1, 2):
        mask |= 1 << topo.sectors[j - 1][1]
    return mask


def encode_well_formed(
    psi: LogicalStateVector, phase: PhaseLabel, topo: DeviceTopology, backend: str = "dense"
) -> State:
    """Lift the logical state onto the device: IC sites carry the amplitudes,
    sectors alternate ferromagnetic/paramagnetic per `phase`, everything else
    stays in |g>."""
    if psi.n_qubits != topo.n_logical:
        raise ValueError(
            f"logical state has {psi.n_qubits} qubits but device encodes {topo.n_logical}"
        )
    n_phys = topo.n_sites
    table = _ic_spread_table(topo) | _sector_mask(topo, phase)
    if backend == "dense":
        amp = np.zeros(1 << n_phys, dtype=np.complex128)
        amp[table] = psi.amplitudes
        return PureState(n_phys, amp)
    if backend == "sparse":
        entries = {
            int(table[m]): complex(psi.amplitudes[m])
            for m in range(1 << psi.n_qubits)
            if abs(psi.amplitudes[m]) >= SPARSE_PRUNE_TOL
        }
        return SparseState(n_phys, entries)
    raise ValueError(f"unknown backend {backend!r}")


def _project_logical(state: State, table: np.ndarray) -> np.ndarray:
    if isinstance(state, PureState):
        return state.amplitudes[table].copy()
    return np.array([state.amplitudes.get(int(i), 0j) for i in table], dtype=np.complex128)


def _complement_weight(state: State, table: np.ndarray) -> float:
    # Summed directly over out-of-subspace entries: subtracting two O(1)
    # norms would hide anything below the float cancellation floor ~1e-8.
    if isinstance(state, PureState):
        amp = state.amplitudes
        saved = amp[table].copy()
        amp[table] = 0.0
        weight = float(np.vdot(amp, amp).real)
        amp[table] = saved
        return weight
    keep = set(int(i) for i in table)
    return float(sum(abs(a) ** 2 for i, a in state.amplitudes.items() if i not in keep))


def well_formed_residual(state: State, topo: DeviceTopology):
    """Out-of-subspace weight against the closer of the two encodings.

    Returns (residual, phase, logical_amplitudes).
    """
    spread = _ic_spread_table(topo)
    best = None
    for phase in (PhaseLabel.FP, PhaseLabel.PF):
        c = _project_logical(state, spread | _sector_mask(topo, phase))
        weight = float(np.sum(np.abs(c) ** 2))
        if best is None or weight > best[0]:
            best = (weight, phase, c)
    _, phase, c = best
    table = spread | _sector_mask(topo, phase)
    residual = float(np.sqrt(_complement_weight(state, table)))
    return residual, phase, c


def decode_well_formed(state: State, topo: DeviceTopology, tol: float = DECODE_TOL):
    """Invert the well-formed encoding.

    Returns (logical state, phase label, global phase alpha), where alpha is
    read off the largest-magnitude logical component and divided out.
    Raises NotWellFormedError when the out-of-subspace weight exceeds `tol`.
    """
    residual, phase, c = well_formed_residual(state, topo)
    if residual > tol:
        raise NotWellFormedError(residual)
    k_star = int(np.argmax(np.abs(c)))
    alpha = float(np.angle(c[k_star]))
    c = c * np.exp(-1j * alpha)
    c /= np.linalg.norm(c)
    return LogicalStateVector(topo.n_logical, c), phase, alpha


def random_logical_state(n_qubits: int, rng: np.random.Generator) -> LogicalStateVector:
    """Haar-ish random state, canonicalized so the largest component is
    real-positive (matches the decode phase reference)."""
    amp = rng.normal(size=1 << n_qubits) + 1j * rng.normal(size=1 << n_qubits)
    amp /= np.linalg.norm(amp)
    k = int(np.argmax(np.abs(amp)))
    amp *= np.exp(-1j * np.angle(amp[k]))
    return LogicalStateVector(n_qubits, amp)


# --- state dump format ----------------------------------------------------------

def state_csv_lines(state: State, threshold: float = 1e-12) -> list[str]:
    """CSV rows (hex basis index, real, imag) for entries above threshold."""
    lines = ["index,real,imag"]
    if isinstance(state, PureState):
        (nz,) = np.nonzero(np.abs(state.amplitudes) > threshold)
        items = [(int(i), complex(state.amplitudes[i])) for i in nz]
    else:
        items = sorted((i, a) for i, a in state.amplitudes.items() if abs(a) > threshold)
    for idx, a in items:
        lines.append(f"{idx:#x},{a.real:.17g},{a.imag:.17g}")
    return lines


def load_logical_csv(path, n_qubits: int) -> LogicalStateVector:
    amp = np.zeros(1 << n_qubits, dtype=np.complex128)
    with open(path) as f:
        for line_no, line in enumerate(f):
            line = line.strip()
            if not line or line.startswith("#") or line.lower().startswith("index"):
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ValueError(f"{path}:{line_no + 1}: expected 'index,real,imag'")
            idx = int(parts[0], 0)
            if not 0 <= idx < len(amp):
                raise ValueError(f"{path}:{line_no + 1}: index {idx:#x} out of range")
            amp[idx] = float(parts[1]) + 1j * float(parts[2])
    n = np.linalg.norm(amp)
    if abs(n - 1.0) > 1e-9:
        raise ValueError(f"logical state in {path} has norm {n}, expected 1")
    return LogicalStateVector(n_qubits, amp)
