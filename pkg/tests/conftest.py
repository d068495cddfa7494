"""Shared fixtures: corpus access, parsing shortcuts and a dense unitary model of gate traces."""

from pathlib import Path
from typing import Iterable

import numpy as np
import pytest

from qiro.services.oracle import GateRecord
from qiro.services.parser import parse, parse_file

CORPUS_DIR = Path(__file__).resolve().parent.parent / "corpus"


@pytest.fixture
def corpus_dir() -> Path:
    return CORPUS_DIR


@pytest.fixture
def load_corpus():
    """Parse a corpus program by file name."""
    def _load(name: str):
        return parse_file(str(CORPUS_DIR / name))
    return _load


@pytest.fixture
def parse_text():
    """Parse program text, optionally without verification."""
    def _parse(text: str, verify_module: bool = True):
        return parse(text, verify_module=verify_module)
    return _parse


# ======================
# Dense unitaries for gate traces
# ======================


def _one_qubit(gate: GateRecord) -> np.ndarray:
    theta = gate.angle or 0.0
    half = theta / 2
    matrices = {
        "H": np.array([[1, 1], [1, -1]]) / np.sqrt(2),
        "X": np.array([[0, 1], [1, 0]]),
        "Y": np.array([[0, -1j], [1j, 0]]),
        "Z": np.diag([1, -1]),
        "S": np.diag([1, 1j]),
        "T": np.diag([1, np.exp(1j * np.pi / 4)]),
        "R": np.diag([1, np.exp(1j * theta)]),
        "Rx": np.array([[np.cos(half), -1j * np.sin(half)], [-1j * np.sin(half), np.cos(half)]]),
        "Ry": np.array([[np.cos(half), -np.sin(half)], [np.sin(half), np.cos(half)]]),
        "Rz": np.diag([np.exp(-1j * half), np.exp(1j * half)]),
    }
    matrix = matrices[gate.base].astype(complex)
    return matrix.conj().T if gate.adjoint else matrix


def _local_matrix(gate: GateRecord) -> np.ndarray:
    # Local basis index: bit k belongs to gate.targets[k].
    if gate.base == "CX":
        matrix = np.zeros((4, 4), dtype=complex)
        for index in range(4):
            control, target = index & 1, (index >> 1) & 1
            matrix[control | ((target ^ control) << 1), index] = 1
        return matrix
    if gate.base == "SWAP":
        matrix = np.zeros((4, 4), dtype=complex)
        for index in range(4):
            a, b = index & 1, (index >> 1) & 1
            matrix[b | (a << 1), index] = 1
        return matrix
    return _one_qubit(gate)


def gate_unitary(gate: GateRecord, num_qubits: int) -> np.ndarray:
    """Full 2^n x 2^n matrix of one (possibly controlled) gate; qubit q is bit q of the basis index."""
    dim = 2 ** num_qubits
    local = _local_matrix(gate)
    unitary = np.zeros((dim, dim), dtype=complex)
    for column in range(dim):
        bits = [(column >> q) & 1 for q in range(num_qubits)]
        if not all(bits[c] for c in gate.controls):
            unitary[column, column] = 1
            continue
        local_in = sum(bits[t] << k for k, t in enumerate(gate.targets))
        for local_out in range(local.shape[0]):
            amplitude = local[local_out, local_in]
            if amplitude == 0:
                continue
            out_bits = list(bits)
            for k, t in enumerate(gate.targets):
                out_bits[t] = (local_out >> k) & 1
            row = sum(b << q for q, b in enumerate(out_bits))
            unitary[row, column] += amplitude
    return unitary


def trace_unitary(trace: Iterable[GateRecord], num_qubits: int) -> np.ndarray:
    unitary = np.eye(2 ** num_qubits, dtype=complex)
    for gate in trace:
        unitary = gate_unitary(gate, num_qubits) @ unitary
    return unitary


@pytest.fixture
def unitary_of():
    """Dense unitary of a gate trace on `num_qubits` qubits."""
    return trace_unitary
