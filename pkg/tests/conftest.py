"""Shared brute-force references.

The dense helpers build full 2^n x 2^n operators with explicit Kronecker
products — deliberately naive, so they cannot share bugs with the
bit-indexed kernels they check.
"""

import numpy as np
import pytest

from igoqnn.circuit import Circuit, gate_matrix

I2 = np.eye(2, dtype=complex)


def dense_1q(u: np.ndarray, target: int, n: int) -> np.ndarray:
    """I (x) ... (x) u (x) ... (x) I with u at qubit `target` (qubit 0 is the
    least-significant amplitude index bit, hence the rightmost kron factor)."""
    out = np.array([[1.0 + 0.0j]])
    for q in range(n):
        out = np.kron(u if q == target else I2, out)
    return out


def dense_controlled_1q(u: np.ndarray, control: int, target: int,
                        n: int) -> np.ndarray:
    dim = 1 << n
    out = np.eye(dim, dtype=complex)
    for i in range(dim):
        if not (i >> control) & 1:
            continue
        b = (i >> target) & 1
        out[i, i] = u[b, b]
        out[i ^ (1 << target), i] = u[1 - b, b]
    return out


def dense_unitary(circuit: Circuit) -> np.ndarray:
    """The circuit's full operator, gate matrices kron'd one at a time."""
    dim = 1 << circuit.num_qubits
    out = np.eye(dim, dtype=complex)
    for op in circuit.ops:
        u = gate_matrix(op)
        if len(op.qubits) == 1:
            g = dense_1q(u, op.qubits[0], circuit.num_qubits)
        else:
            g = dense_controlled_1q(u, op.qubits[0], op.qubits[1],
                                    circuit.num_qubits)
        out = g @ out
    return out


def random_circuit(rng: np.random.Generator, num_qubits: int,
                   num_gates: int) -> Circuit:
    c = Circuit(num_qubits)
    for _ in range(num_gates):
        kind = rng.choice(["h", "x", "u3", "cx", "cu3"]
                          if num_qubits > 1 else ["h", "x", "u3"])
        q = int(rng.integers(num_qubits))
        if kind in ("cx", "cu3"):
            t = int(rng.integers(num_qubits - 1))
            t = t if t < q else t + 1  # distinct target
            if kind == "cx":
                c.cx(q, t)
            else:
                c.cu3(q, t, *rng.uniform(-2 * np.pi, 2 * np.pi, 3))
        elif kind == "u3":
            c.u3(q, *rng.uniform(-2 * np.pi, 2 * np.pi, 3))
        else:
            getattr(c, kind)(q)
    return c


def random_state(rng: np.random.Generator, num_qubits: int) -> np.ndarray:
    v = rng.normal(size=1 << num_qubits) + 1j * rng.normal(size=1 << num_qubits)
    return v / np.linalg.norm(v)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
