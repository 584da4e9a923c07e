"""Continuous-time check of the blockade primitive on small device fragments.

A fragment is one driven qubit plus its 2 or 3 ZZ-coupled neighbors.  The
static part of the Hamiltonian is diagonal in the computational basis:
(omega_i/2) sigma_z per site plus (zeta/2) sigma_z sigma_z per coupling, with
sigma_z |e> = +|e>.  Each ground neighbor therefore lowers the driven qubit's
transition energy by zeta, so a drive at omega - 2*zeta is resonant exactly
when all neighbors sit in |g>; three-neighbor sites get a +zeta level-spacing
correction so they share that resonance.

The integrator advances the diagonal part exactly and treats only the drive
term with classical RK4 (an integrating-factor scheme, still 4th order).
Plain RK4 would need a far smaller step to keep norm drift below 1e-8 at
these frequency scales.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .topology import DeviceTopology

# Default numeric scales (arbitrary units; only ratios matter).
OMEGA_B = 2 * math.pi * 5.0
OMEGA_A = 2 * math.pi * 6.5
ZETA = 2 * math.pi * 0.25
DT_SCALE = 0.04  # dt = DT_SCALE / fastest angular frequency

LAB = "lab"
ROTATING_WAVE = "rotating_wave"


@dataclass(frozen=True)
class ContinuousModel:
    omega_a: float
    omega_b: float
    zeta: float
    omega_rabi: float  # drive amplitude Omega (before any crossing doubling)
    omega_drive: float
    duration: float
    dt: float
    phi: float = 0.0
    frame: str = LAB

    def __post_init__(self):
        for name in ("omega_a", "omega_b", "omega_drive", "duration", "dt"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.zeta < 0 or self.omega_rabi < 0:
            raise ValueError("zeta and omega_rabi must be non-negative")
        if self.frame not in (LAB, ROTATING_WAVE):
            raise ValueError(f"unknown frame {self.frame!r}")
        fastest = max(self.omega_a, self.omega_b, self.omega_drive)
        if self.dt * fastest >= 0.05:
            raise ValueError(
                f"dt={self.dt} does not resolve the fastest scale: dt*omega = {self.dt * fastest:.3f} >= 0.05"
            )


@dataclass(frozen=True)
class Fragment:
    driven_family: str = "B"
    n_neighbors: int = 2
    triangle_corrected: bool = False
    crossed: bool = False

    def __post_init__(self):
        if self.driven_family not in ("A", "B"):
            raise ValueError(f"driven family must be A or B, got {self.driven_family!r}")
        if self.n_neighbors not in (2, 3):
            raise ValueError(f"fragments have 2 or 3 neighbors, got {self.n_neighbors}")

    @property
    def n_qubits(self) -> int:
        return self.n_neighbors + 1


FRAGMENT_KINDS = {
    "two_neighbor": Fragment("B", 2, triangle_corrected=False),
    "three_neighbor": Fragment("B", 3, triangle_corrected=True),
    "three_neighbor_uncorrected": Fragment("B", 3, triangle_corrected=False),
}


def fragment_from_site(topo: DeviceTopology, site: int) -> Fragment:
    s = topo.sites[site]
    return Fragment(
        driven_family=s.species.family.value,
        n_neighbors=len(topo.neighbor_map[site]),
        triangle_corrected=s.triangle_corrected,
        crossed=s.species.crossing.value != "regular",
    )


def _frequencies(fragment: Fragment, model: ContinuousModel) -> tuple[float, float]:
    if fragment.driven_family == "B":
        w0, wn = model.omega_b, model.omega_a
    else:
        w0, wn = model.omega_a, model.omega_b
    if fragment.triangle_corrected:
        w0 += model.zeta
    return w0, wn


def rabi_amplitude(fragment: Fragment, model: ContinuousModel) -> float:
    return 2 * model.omega_rabi if fragment.crossed else model.omega_rabi


def _diagonal(fragment: Fragment, model: ContinuousModel, frame: str) -> np.ndarray:
    m = fragment.n_qubits
    idx = np.arange(1 << m)
    sz = [2.0 * ((idx >> q) & 1) - 1.0 for q in range(m)]
    w0, wn = _frequencies(fragment, model)
    d = 0.5 * w0 * sz[0]
    for k in range(1, m):
        d = d + 0.5 * wn * sz[k] + 0.5 * model.zeta * sz[0] * sz[k]
    if frame == ROTATING_WAVE:
        d = d - 0.5 * model.omega_drive * sz[0]
    return d


def build_hamiltonian(fragment: Fragment, model: ContinuousModel, t: float) -> np.ndarray:
    """H(t) as a dense Hermitian matrix in the model's frame (hbar = 1)."""
    dim = 1 << fragment.n_qubits
    h = np.diag(_diagonal(fragment, model, model.frame).astype(complex))
    amp = rabi_amplitude(fragment, model)
    i0 = np.arange(0, dim, 2)  # driven-qubit bit clear
    i1 = i0 + 1
    if model.frame == LAB:
        s = amp * math.sin(model.omega_drive * t + model.phi)
        h[i1, i0] += 1j * s  # sigma_y on the driven qubit
        h[i0, i1] += -1j * s
    else:
        half = 0.5 * amp
        h[i1, i0] += half * np.exp(1j * model.phi)
        h[i0, i1] += half * np.exp(-1j * model.phi)
    return h


def evolve(state, fragment: Fragment, model: ContinuousModel) -> np.ndarray:
    """Integrate i d|psi>/dt = H(t)|psi> over the model duration."""
    psi = np.asarray(state, dtype=complex).copy()
    dim = 1 << fragment.n_qubits
    if psi.shape != (dim,):
        raise ValueError(f"state must have {dim} amplitudes for this fragment")
    if abs(np.linalg.norm(psi) - 1.0) > 1e-9:
        raise ValueError("input state must be unit norm")

    d = _diagonal(fragment, model, model.frame)
    amp = rabi_amplitude(fragment, model)
    if model.frame == LAB:
        u01, u10 = -1j, 1j  # sigma_y

        def s_of(t):
            return amp * math.sin(model.omega_drive * t + model.phi)

    else:
        u01 = 0.5 * amp * np.exp(-1j * model.phi)
        u10 = 0.5 * amp * np.exp(1j * model.phi)

        def s_of(t):
            return 1.0

    def drive(v):  # off-diagonal coupling of the driven qubit (bit 0)
        w = v.reshape(-1, 2)
        out = np.empty_like(w)
        out[:, 0] = u01 * w[:, 1]
        out[:, 1] = u10 * w[:, 0]
        return out.reshape(-1)

    n_steps = max(1, math.ceil(model.duration / model.dt - 1e-12))
    h = model.duration / n_steps
    e_half = np.exp(-1j * d * (h / 2))  # exact diagonal propagator, half step
    e_half_c = e_half.conj()
    e_full = e_half * e_half
    e_full_c = e_full.conj()

    for k in range(n_steps):
        t = k * h
        y0 = psi
        k1 = -1j * s_of(t) * drive(y0)
        k2 = -1j * s_of(t + h / 2) * (e_half_c * drive(e_half * (y0 + (h / 2) * k1)))
        k3 = -1j * s_of(t + h / 2) * (e_half_c * drive(e_half * (y0 + (h / 2) * k2)))
        k4 = -1j * s_of(t + h) * (e_full_c * drive(e_full * (y0 + h * k3)))
        psi = e_full * (y0 + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4))
    return psi


def resonant_drive_frequency(fragment: Fragment, *, omega_a=OMEGA_A, omega_b=OMEGA_B, zeta=ZETA) -> float:
    """Ground-conditioned resonance target: bare family frequency minus
    2*zeta (each ground neighbor pulls the spacing down by zeta; the triangle
    correction exists so 3-neighbor sites land on the same value)."""
    bare = omega_b if fragment.driven_family == "B" else omega_a
    return bare - 2 * zeta


def pi_pulse_model(
    fragment: Fragment,
    eta: float,
    *,
    zeta: float = ZETA,
    omega_a: float = OMEGA_A,
    omega_b: float = OMEGA_B,
    frame: str = LAB,
    dt: float | None = None,
) -> ContinuousModel:
    """Rectangular pi-pulse at blockade ratio eta = zeta / Omega."""
    if eta <= 0:
        raise ValueError("eta must be positive")
    omega_rabi = zeta / eta
    amp = 2 * omega_rabi if fragment.crossed else omega_rabi
    omega_drive = resonant_drive_frequency(fragment, omega_a=omega_a, omega_b=omega_b, zeta=zeta)
    if dt is None:
        dt = DT_SCALE / max(omega_a, omega_b, omega_drive)
    return ContinuousModel(
        omega_a=omega_a,
        omega_b=omega_b,
        zeta=zeta,
        omega_rabi=omega_rabi,
        omega_drive=omega_drive,
        duration=math.pi / amp,
        dt=dt,
        frame=frame,
    )


def blockade_fidelity(fragment: Fragment, model: ContinuousModel) -> dict[str, float]:
    """Flip probability of the driven qubit from |g>, for neighbor patterns
    all-ground / one-excited / two-excited."""
    expected = resonant_drive_frequency(
        fragment, omega_a=model.omega_a, omega_b=model.omega_b, zeta=model.zeta
    )
    if abs(model.omega_drive - expected) > 1e-9 * expected:
        raise ValueError(
            f"omega_drive={model.omega_drive} is not the ground-conditioned resonance {expected}"
        )
    dim = 1 << fragment.n_qubits
    flip_mask = np.arange(dim) & 1 == 1

    def flip_probability(neighbor_bits: int) -> float:
        psi0 = np.zeros(dim, dtype=complex)
        psi0[neighbor_bits << 1] = 1.0
        psi = evolve(psi0, fragment, model)
        return float(np.sum(np.abs(psi[flip_mask]) ** 2))

    return {
        "p_flip_gg": flip_probability(0b00),
        "p_leak_ge": flip_probability(0b01),
        "p_leak_ee": flip_probability(0b11),
    }


def sweep_blockade(etas, fragment_kind: str, *, frame: str = LAB) -> list[dict[str, float]]:
    """One row per eta, in order, duplicates preserved."""
    if fragment_kind not in FRAGMENT_KINDS:
        raise ValueError(f"unknown fragment kind {fragment_kind!r}; expected {sorted(FRAGMENT_KINDS)}")
    fragment = FRAGMENT_KINDS[fragment_kind]
    rows = []
    for eta in etas:
        model = pi_pulse_model(fragment, eta, frame=frame)
        record = blockade_fidelity(fragment, model)
        rows.append({"eta": float(eta), **record})
    return rows


def sweep_csv_lines(rows) -> list[str]:
    lines = ["eta,p_flip_gg,p_leak_ge,p_leak_ee"]
    for r in rows:
        lines.append(
            ",".join(
                format(r[k], ".12g") for k in ("eta", "p_flip_gg", "p_leak_ge", "p_leak_ee")
            )
        )
    return lines
