"""Multiqubit state math: canonical constructors, circuit simulation, noise,
fidelity, and partial-transpose positivity checks.

Basis convention: qubit 0 is the most significant bit of a computational-basis
index, so basis index ``i`` assigns qubit ``q`` the bit ``(i >> (n-1-q)) & 1``.
All functions are pure and never mutate their inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kernels import jacobi_eigvalsh

NORM_ATOL = 1e-12
HERMITIAN_ATOL = 1e-10
TRACE_ATOL = 1e-10
PSD_ATOL = 1e-9


@dataclass(frozen=True, eq=False)
class StateVector:
    """Pure n-qubit state: 2^n complex amplitudes with unit norm."""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError(f"n_qubits must be >= 1, got {self.n_qubits}")
        amps = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (2 ** self.n_qubits,):
            raise ValueError(
                f"expected {2 ** self.n_qubits} amplitudes for {self.n_qubits} qubits, "
                f"got shape {amps.shape}"
            )
        norm2 = float(np.real(np.vdot(amps, amps)))
        if abs(norm2 - 1.0) > NORM_ATOL:
            raise ValueError(f"state vector is not normalized: |psi|^2 = {norm2!r}")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return 2 ** self.n_qubits


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Mixed n-qubit state: Hermitian, unit-trace, positive semidefinite."""

    n_qubits: int
    matrix: np.ndarray

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError(f"n_qubits must be >= 1, got {self.n_qubits}")
        m = np.ascontiguousarray(self.matrix, dtype=np.complex128)
        d = 2 ** self.n_qubits
        if m.shape != (d, d):
            raise ValueError(f"expected a {d}x{d} matrix, got shape {m.shape}")
        herm = np.abs(m - m.conj().T).max()
        if herm > HERMITIAN_ATOL:
            raise ValueError(f"matrix is not Hermitian: max |m - m^H| = {herm:.3e}")
        tr = complex(np.trace(m))
        if abs(tr - 1.0) > TRACE_ATOL:
            raise ValueError(f"matrix trace is {tr!r}, expected 1")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return 2 ** self.n_qubits

    def eigenvalues(self) -> np.ndarray:
        """All eigenvalues, ascending."""
        return eigvalsh_hermitian(self.matrix)

    def min_eigenvalue(self) -> float:
        return min_eigenvalue_hermitian(self.matrix)

    def validate(self, psd_atol: float = PSD_ATOL) -> None:
        """Raise if the PSD invariant fails (hermiticity/trace are checked on construction)."""
        lam = self.min_eigenvalue()
        if lam < -psd_atol:
            raise ValueError(f"matrix is not PSD: min eigenvalue {lam:.3e}")


# ---------------------------------------------------------------------------
# Canonical states
# ---------------------------------------------------------------------------

def zero_state(n: int) -> StateVector:
    """|0...0> on n qubits."""
    if n < 1:
        raise ValueError(f"zero_state needs n >= 1, got {n}")
    amps = np.zeros(2 ** n, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(n, amps)


def ghz_state(n: int) -> StateVector:
    """(|0...0> + |1...1>)/sqrt(2) on n >= 2 qubits."""
    if n < 2:
        raise ValueError(f"ghz_state needs n >= 2, got {n}")
    amps = np.zeros(2 ** n, dtype=np.complex128)
    amps[0] = amps[-1] = 1.0 / math.sqrt(2.0)
    return StateVector(n, amps)


def w_state(n: int) -> StateVector:
    """Equal superposition of all weight-1 basis states, amplitude 1/sqrt(n)."""
    if n < 2:
        raise ValueError(f"w_state needs n >= 2, got {n}")
    amps = np.zeros(2 ** n, dtype=np.complex128)
    for q in range(n):
        amps[1 << (n - 1 - q)] = 1.0 / math.sqrt(n)
    return StateVector(n, amps)


_BELL_NAMES = ("phi+", "phi-", "psi+", "psi-")


def bell_state(index: int) -> StateVector:
    """Bell basis: 0 -> phi+, 1 -> phi-, 2 -> psi+, 3 -> psi-."""
    if index not in (0, 1, 2, 3):
        raise ValueError(f"bell index must be in 0..3, got {index}")
    r = 1.0 / math.sqrt(2.0)
    table = {
        0: [r, 0, 0, r],
        1: [r, 0, 0, -r],
        2: [0, r, r, 0],
        3: [0, r, -r, 0],
    }
    return StateVector(2, np.asarray(table[index], dtype=np.complex128))


# ---------------------------------------------------------------------------
# Composition and mixing
# ---------------------------------------------------------------------------

def tensor_product(a, b):
    """Kronecker product of two states of the same kind; qubit counts add."""
    if isinstance(a, StateVector) and isinstance(b, StateVector):
        return StateVector(a.n_qubits + b.n_qubits, np.kron(a.amplitudes, b.amplitudes))
    if isinstance(a, DensityMatrix) and isinstance(b, DensityMatrix):
        return DensityMatrix(a.n_qubits + b.n_qubits, np.kron(a.matrix, b.matrix))
    raise TypeError(
        f"tensor_product needs two StateVectors or two DensityMatrices, "
        f"got {type(a).__name__} and {type(b).__name__}"
    )


def to_density(psi: StateVector) -> DensityMatrix:
    """Rank-1 projector |psi><psi|."""
    amps = psi.amplitudes
    norm2 = float(np.real(np.vdot(amps, amps)))
    if abs(norm2 - 1.0) > 1e-9:
        raise ValueError(f"cannot project a non-normalized vector: |psi|^2 = {norm2!r}")
    return DensityMatrix(psi.n_qubits, np.outer(amps, amps.conj()))


def mix(weights, states) -> DensityMatrix:
    """Convex combination sum_i w_i rho_i of density matrices."""
    w = np.asarray(weights, dtype=np.float64)
    states = list(states)
    if len(states) != w.size:
        raise ValueError(f"{w.size} weights but {len(states)} states")
    if w.size == 0:
        raise ValueError("mix needs at least one state")
    if (w < 0).any():
        raise ValueError("mixture weights must be non-negative")
    if abs(w.sum() - 1.0) > 1e-12:
        raise ValueError(f"mixture weights sum to {w.sum()!r}, expected 1")
    n = states[0].n_qubits
    for s in states:
        if not isinstance(s, DensityMatrix):
            raise TypeError("mix expects DensityMatrix inputs")
        if s.n_qubits != n:
            raise ValueError(f"dimension mismatch: {s.n_qubits} qubits vs {n}")
    acc = np.zeros((2 ** n, 2 ** n), dtype=np.complex128)
    for wi, s in zip(w, states):
        acc += wi * s.matrix
    return DensityMatrix(n, acc)


def white_noise(state, p: float) -> DensityMatrix:
    """p * rho + (1-p) * I/2^n; accepts a StateVector or DensityMatrix."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"noise weight p must be in [0, 1], got {p}")
    if isinstance(state, StateVector):
        rho = np.outer(state.amplitudes, state.amplitudes.conj())
        n = state.n_qubits
    elif isinstance(state, DensityMatrix):
        rho = state.matrix
        n = state.n_qubits
    else:
        raise TypeError(f"white_noise expects a state, got {type(state).__name__}")
    d = 2 ** n
    out = p * rho + ((1.0 - p) / d) * np.eye(d, dtype=np.complex128)
    return DensityMatrix(n, out)


def fidelity(psi: StateVector, rho: DensityMatrix) -> float:
    """Overlap <psi|rho|psi> of a mixed state with a pure target."""
    if psi.n_qubits != rho.n_qubits:
        raise ValueError(
            f"dimension mismatch: state has {psi.n_qubits} qubits, matrix has {rho.n_qubits}"
        )
    return float(np.real(np.vdot(psi.amplitudes, rho.matrix @ psi.amplitudes)))


def noise_for_fidelity(target_f: float, n: int) -> float:
    """Invert fidelity(psi, white_noise(psi, p)) = p + (1-p)/2^n for p."""
    floor = 2.0 ** -n
    if target_f > 1.0 + 1e-12:
        raise ValueError(f"target fidelity {target_f} exceeds 1")
    if target_f < floor - 1e-12:
        raise ValueError(
            f"target fidelity {target_f} is below the maximally mixed floor {floor}"
        )
    p = (target_f - floor) / (1.0 - floor)
    return min(max(p, 0.0), 1.0)


# ---------------------------------------------------------------------------
# Gates and circuit simulation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Gate:
    kind: str  # "H" | "RY" | "CNOT" | "CZ"
    qubits: tuple
    theta: float | None = None


def hadamard(q: int) -> Gate:
    return Gate("H", (q,))


def ry(theta: float, q: int) -> Gate:
    return Gate("RY", (q,), float(theta))


def cnot(control: int, target: int) -> Gate:
    return Gate("CNOT", (control, target))


def cz(a: int, b: int) -> Gate:
    return Gate("CZ", (a, b))


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: tuple

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if self.n_qubits < 1:
            raise ValueError(f"n_qubits must be >= 1, got {self.n_qubits}")
        for g in self.gates:
            if any(not 0 <= q < self.n_qubits for q in g.qubits):
                raise ValueError(f"gate {g} has qubit index outside 0..{self.n_qubits - 1}")
            if len(g.qubits) == 2 and g.qubits[0] == g.qubits[1]:
                raise ValueError(f"two-qubit gate {g} needs distinct qubits")


_H_MAT = np.array([[1, 1], [1, -1]], dtype=np.complex128) / math.sqrt(2.0)
_CNOT_MAT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=np.complex128
)
_CZ_MAT = np.diag([1, 1, 1, -1]).astype(np.complex128)


def _ry_mat(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2.0), math.sin(theta / 2.0)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def _apply_1q(tensor: np.ndarray, u: np.ndarray, q: int) -> np.ndarray:
    return np.moveaxis(np.tensordot(u, tensor, axes=([1], [q])), 0, q)


def _apply_2q(tensor: np.ndarray, u4: np.ndarray, a: int, b: int) -> np.ndarray:
    t4 = u4.reshape(2, 2, 2, 2)  # indexed (out_a, out_b, in_a, in_b)
    return np.moveaxis(np.tensordot(t4, tensor, axes=([2, 3], [a, b])), [0, 1], [a, b])


def apply_unitary1(psi: StateVector, u: np.ndarray, q: int) -> StateVector:
    """Apply an arbitrary single-qubit unitary to qubit q."""
    u = np.asarray(u, dtype=np.complex128)
    if u.shape != (2, 2):
        raise ValueError(f"expected a 2x2 unitary, got shape {u.shape}")
    if not 0 <= q < psi.n_qubits:
        raise ValueError(f"qubit {q} outside 0..{psi.n_qubits - 1}")
    t = psi.amplitudes.reshape([2] * psi.n_qubits)
    return StateVector(psi.n_qubits, _apply_1q(t, u, q).reshape(-1))


def simulate(circuit: Circuit) -> StateVector:
    """Apply the circuit's gates in order to |0...0>."""
    n = circuit.n_qubits
    t = np.zeros([2] * n, dtype=np.complex128)
    t[(0,) * n] = 1.0
    for g in circuit.gates:
        if g.kind == "H":
            t = _apply_1q(t, _H_MAT, g.qubits[0])
        elif g.kind == "RY":
            t = _apply_1q(t, _ry_mat(g.theta), g.qubits[0])
        elif g.kind == "CNOT":
            t = _apply_2q(t, _CNOT_MAT, g.qubits[0], g.qubits[1])
        elif g.kind == "CZ":
            t = _apply_2q(t, _CZ_MAT, g.qubits[0], g.qubits[1])
        else:
            raise ValueError(f"unknown gate kind {g.kind!r}")
    return StateVector(n, t.reshape(-1))


def ghz_circuit(n: int) -> Circuit:
    """Hadamard on qubit 0 followed by a CNOT chain."""
    if n < 2:
        raise ValueError(f"ghz_circuit needs n >= 2, got {n}")
    gates = [hadamard(0)] + [cnot(k, k + 1) for k in range(n - 1)]
    return Circuit(n, tuple(gates))


def w_circuit(n: int) -> Circuit:
    """RY/CNOT chain preparing the n-qubit W state exactly.

    Starts with an excitation on qubit 0 (RY(pi)), then for each link k shares
    it down the chain with a controlled RY of angle 2*acos(1/sqrt(n-k))
    (decomposed into RY halves around CNOTs) followed by CNOT(k+1, k).
    """
    if n < 2:
        raise ValueError(f"w_circuit needs n >= 2, got {n}")
    gates = [ry(math.pi, 0)]
    for k in range(n - 1):
        theta = 2.0 * math.acos(1.0 / math.sqrt(n - k))
        gates += [
            ry(theta / 2.0, k + 1),
            cnot(k, k + 1),
            ry(-theta / 2.0, k + 1),
            cnot(k, k + 1),
            cnot(k + 1, k),
        ]
    return Circuit(n, tuple(gates))


# ---------------------------------------------------------------------------
# Partial transpose and Hermitian eigenvalues
# ---------------------------------------------------------------------------

def partial_transpose(rho: DensityMatrix, subset) -> np.ndarray:
    """Transpose the tensor factors of the given qubits; returns a plain matrix."""
    qubits = sorted(set(int(q) for q in subset))
    n = rho.n_qubits
    if not qubits:
        raise ValueError("partial_transpose needs a non-empty qubit subset")
    if len(qubits) >= n:
        raise ValueError("partial_transpose subset must be a proper subset of the qubits")
    if qubits[0] < 0 or qubits[-1] >= n:
        raise ValueError(f"qubit indices {qubits} outside 0..{n - 1}")
    t = rho.matrix.reshape([2] * (2 * n))  # axes: row bits 0..n-1, col bits n..2n-1
    perm = list(range(2 * n))
    for q in qubits:
        perm[q], perm[n + q] = perm[n + q], perm[q]
    d = 2 ** n
    return np.ascontiguousarray(t.transpose(perm).reshape(d, d))


def _real_embedding(m: np.ndarray) -> np.ndarray:
    a, b = m.real, m.imag
    top = np.concatenate([a, -b], axis=1)
    bot = np.concatenate([b, a], axis=1)
    return np.concatenate([top, bot], axis=0)


def _check_hermitian(m: np.ndarray, atol: float) -> np.ndarray:
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    dev = np.abs(m - m.conj().T).max()
    if dev > atol:
        raise ValueError(f"matrix is not Hermitian: max |m - m^H| = {dev:.3e}")
    return m


def eigvalsh_hermitian(m: np.ndarray) -> np.ndarray:
    """All eigenvalues of a Hermitian matrix, ascending.

    Runs cyclic Jacobi on the real symmetric embedding [[A, -B], [B, A]],
    whose spectrum is that of m with every eigenvalue doubled.
    """
    m = _check_hermitian(m, 1e-9)
    vals = jacobi_eigvalsh(_real_embedding(m))
    return vals[::2].copy()


def min_eigenvalue_hermitian(m: np.ndarray) -> float:
    """Smallest eigenvalue of a Hermitian matrix."""
    m = _check_hermitian(m, 1e-9)
    return float(jacobi_eigvalsh(_real_embedding(m))[0])
