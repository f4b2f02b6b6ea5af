"""Dense statevector simulation core.

Conventions (fixed, relied on everywhere else):

* qubit ``k`` is the least-significant bit ``k`` of the amplitude index,
  so ``|q_{n-1} ... q_1 q_0>`` lives at index ``sum(q_k << k)``;
* amplitudes are a dense, contiguous ``complex128`` array mutated in place;
* global phase is never asserted on — state comparisons go through
  :func:`fidelity`.

The gate kernels are scalar numba loops.  Pairs of amplitudes that differ
only in the target bit are enumerated with bit-shift arithmetic instead of
index arrays; for controlled gates the loop walks the quarter of the index
space where the control bit is 1.  ``run_program`` applies a whole compiled
gate sequence in one jitted call, which matters when circuits are executed
thousands of times (training, acceptance sweeps).
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

DEFAULT_MAX_QUBITS = 24

# program-runner opcodes
OP_1Q = 0
OP_C1Q = 1


class CapacityError(Exception):
    """Requested register size is outside the configured qubit cap."""


@njit(cache=True, fastmath=True)
def _apply_1q(amps, u00, u01, u10, u11, target):
    s = 1 << target
    step = s << 1
    dim = amps.shape[0]
    for base in range(0, dim, step):
        for i0 in range(base, base + s):
            i1 = i0 + s
            a0 = amps[i0]
            a1 = amps[i1]
            amps[i0] = u00 * a0 + u01 * a1
            amps[i1] = u10 * a0 + u11 * a1


@njit(cache=True, fastmath=True)
def _apply_controlled_1q(amps, u00, u01, u10, u11, control, target):
    # walk indices with the control bit set, split by the target bit
    lo = control if control < target else target
    hi = target if control < target else control
    slo = 1 << lo
    shi = 1 << hi
    cbit = 1 << control
    tbit = 1 << target
    dim = amps.shape[0]
    for a in range(0, dim, shi << 1):
        for b in range(a, a + shi, slo << 1):
            for x in range(b, b + slo):
                i0 = x | cbit
                i1 = i0 | tbit
                a0 = amps[i0]
                a1 = amps[i1]
                amps[i0] = u00 * a0 + u01 * a1
                amps[i1] = u10 * a0 + u11 * a1


@njit(cache=True, fastmath=True)
def run_program(amps, kinds, qubits0, qubits1, mats, start, stop):
    """Apply gates ``start..stop`` of a compiled program in one jitted call.

    ``kinds[g]`` selects the kernel (OP_1Q / OP_C1Q), ``qubits0``/``qubits1``
    hold (target, -1) or (control, target), and ``mats[g]`` is the flattened
    2x2 payload.
    """
    for g in range(start, stop):
        if kinds[g] == OP_1Q:
            _apply_1q(amps, mats[g, 0], mats[g, 1], mats[g, 2], mats[g, 3],
                      qubits0[g])
        else:
            _apply_controlled_1q(amps, mats[g, 0], mats[g, 1], mats[g, 2],
                                 mats[g, 3], qubits0[g], qubits1[g])


@njit(cache=True, fastmath=True)
def _prob_one(amps, q):
    s = 1 << q
    step = s << 1
    dim = amps.shape[0]
    total = 0.0
    for base in range(s, dim, step):
        for i in range(base, base + s):
            a = amps[i]
            total += a.real * a.real + a.imag * a.imag
    return total


def u3_matrix(theta: float, phi: float, lam: float) -> np.ndarray:
    """The u3 gate matrix, OpenQASM 2.0 convention.

    u3(theta, phi, lam) = [[cos(t/2),            -e^{i lam} sin(t/2)],
                           [e^{i phi} sin(t/2),  e^{i(phi+lam)} cos(t/2)]]
    """
    c = math.cos(theta / 2.0)
    s = math.sin(theta / 2.0)
    return np.array(
        [
            [c, -s * np.exp(1j * lam)],
            [s * np.exp(1j * phi), c * np.exp(1j * (phi + lam))],
        ],
        dtype=np.complex128,
    )


H_MATRIX = np.array([[1, 1], [1, -1]], dtype=np.complex128) / math.sqrt(2.0)
X_MATRIX = np.array([[0, 1], [1, 0]], dtype=np.complex128)


def is_unitary2(u: np.ndarray, tol: float = 1e-12) -> bool:
    """Whether a 2x2 matrix is unitary to entrywise tolerance ``tol``."""
    u = np.asarray(u, dtype=np.complex128)
    if u.shape != (2, 2):
        return False
    return bool(np.all(np.abs(u @ u.conj().T - np.eye(2)) <= tol))


class StateVector:
    """A dense ``2**num_qubits`` amplitude vector, mutated in place by gates."""

    __slots__ = ("num_qubits", "amps")

    def __init__(self, num_qubits: int, amps: np.ndarray):
        self.num_qubits = num_qubits
        self.amps = amps

    @property
    def dim(self) -> int:
        return self.amps.shape[0]

    def copy(self) -> "StateVector":
        return StateVector(self.num_qubits, self.amps.copy())

    def norm_sq(self) -> float:
        a = self.amps
        return float(np.real(np.vdot(a, a)))

    def apply_1q(self, u: np.ndarray, target: int) -> "StateVector":
        """Apply a 2x2 unitary to ``target``, in place."""
        if not 0 <= target < self.num_qubits:
            raise IndexError(f"target qubit {target} out of range "
                             f"for {self.num_qubits} qubits")
        u = np.ascontiguousarray(u, dtype=self.amps.dtype)
        _apply_1q(self.amps, u[0, 0], u[0, 1], u[1, 0], u[1, 1], target)
        return self

    def apply_controlled_1q(self, u: np.ndarray, control: int,
                            target: int) -> "StateVector":
        """Apply a 2x2 unitary to ``target`` where ``control`` is 1, in place."""
        if control == target:
            raise ValueError(f"control and target coincide (qubit {control})")
        if not 0 <= target < self.num_qubits:
            raise IndexError(f"target qubit {target} out of range "
                             f"for {self.num_qubits} qubits")
        if not 0 <= control < self.num_qubits:
            raise IndexError(f"control qubit {control} out of range "
                             f"for {self.num_qubits} qubits")
        u = np.ascontiguousarray(u, dtype=self.amps.dtype)
        _apply_controlled_1q(self.amps, u[0, 0], u[0, 1], u[1, 0], u[1, 1],
                             control, target)
        return self

    def marginal_prob_one(self, q: int) -> float:
        """P(qubit ``q`` measures 1) = sum of |a_i|^2 over indices with bit q set."""
        if not 0 <= q < self.num_qubits:
            raise IndexError(f"qubit {q} out of range for {self.num_qubits} qubits")
        return float(_prob_one(self.amps, q))

    def sample_bitstrings(self, shots: int, seed: int) -> list[str]:
        """Draw ``shots`` basis-state samples; bitstrings list qubit n-1 first.

        Deterministic for a fixed seed.  Zero-amplitude outcomes never occur.
        """
        if shots < 1:
            raise ValueError(f"shots must be >= 1, got {shots}")
        probs = np.abs(self.amps) ** 2
        probs = probs / probs.sum()
        rng = np.random.default_rng(seed)
        draws = rng.choice(self.dim, size=shots, p=probs)
        width = self.num_qubits
        return [format(int(i), f"0{width}b") for i in draws]


def new_zero_state(num_qubits: int,
                   max_qubits: int = DEFAULT_MAX_QUBITS,
                   dtype=np.complex128) -> StateVector:
    """|0...0> on ``num_qubits`` qubits.

    ``max_qubits`` is a memory guardrail (default 24), overridable per call.
    """
    if num_qubits < 1 or num_qubits > max_qubits:
        raise CapacityError(
            f"num_qubits must be in [1, {max_qubits}], got {num_qubits}")
    amps = np.zeros(1 << num_qubits, dtype=dtype)
    amps[0] = 1.0
    return StateVector(num_qubits, amps)


def fidelity(a: StateVector, b: StateVector) -> float:
    """|<a|b>|^2 — the global-phase-insensitive state comparison."""
    return float(np.abs(np.vdot(a.amps, b.amps)) ** 2)
