"""Gate unitaries used by the tomography pipeline.

Two fixed menus are defined here:

* :data:`TOMOGRAPHY_PULSES` — the six single-qubit preparation/analysis
  rotations ``I, X_pi, X_pi/2, X_-pi/2, Y_pi/2, Y_-pi/2``.
* :func:`process_menu` — the twelve two-qubit processes characterised in
  the study: single-qubit rotations ``X_theta`` for
  ``theta in {pi, pi/2, pi/4, pi/8}`` and ``Y_pi/2`` on either qubit,
  identity, and the CNOT (qubit 1 controls qubit 2).
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .channels import ptm_of_unitary
from .pauli import _SINGLE_QUBIT

_AXES = {"x": _SINGLE_QUBIT["X"], "y": _SINGLE_QUBIT["Y"], "z": _SINGLE_QUBIT["Z"]}

CNOT = np.array(
    [
        [1, 0, 0, 0],
        [0, 1, 0, 0],
        [0, 0, 0, 1],
        [0, 0, 1, 0],
    ],
    dtype=complex,
)


def rotation(axis: str, angle: float) -> np.ndarray:
    """Single-qubit rotation ``exp(-i angle sigma_axis / 2)``.

    Args:
        axis: one of ``"x"``, ``"y"``, ``"z"``.
        angle: rotation angle in radians.
    """
    try:
        sigma = _AXES[axis.lower()]
    except KeyError:
        raise ValueError(f"axis must be x, y or z, got {axis!r}") from None
    half = 0.5 * angle
    return np.cos(half) * np.eye(2, dtype=complex) - 1j * np.sin(half) * sigma


# Preparation/analysis pulse menu, in the frozen ordering used for records.
TOMOGRAPHY_PULSES: tuple[str, ...] = (
    "I",
    "Xpi",
    "Xpi2",
    "Xmpi2",
    "Ypi2",
    "Ympi2",
)

_PULSE_ANGLES = {
    "I": ("x", 0.0),
    "Xpi": ("x", np.pi),
    "Xpi2": ("x", np.pi / 2),
    "Xmpi2": ("x", -np.pi / 2),
    "Ypi2": ("y", np.pi / 2),
    "Ympi2": ("y", -np.pi / 2),
    "Xpi4": ("x", np.pi / 4),
    "Xpi8": ("x", np.pi / 8),
}


def pulse_unitary(name: str) -> np.ndarray:
    """2x2 unitary for a named single-qubit pulse (see ``_PULSE_ANGLES``)."""
    try:
        axis, angle = _PULSE_ANGLES[name]
    except KeyError:
        raise ValueError(
            f"unknown pulse {name!r}; known: {sorted(_PULSE_ANGLES)}"
        ) from None
    return rotation(axis, angle)


@lru_cache(maxsize=None)
def process_menu() -> dict[str, np.ndarray]:
    """The twelve benchmark processes as 4x4 unitaries, keyed by name.

    Single-qubit entries are named ``<pulse>xI`` / ``Ix<pulse>`` with the
    left factor acting on qubit 1.
    """
    eye = np.eye(2, dtype=complex)
    menu: dict[str, np.ndarray] = {"IxI": np.eye(4, dtype=complex)}
    for pulse in ("Xpi", "Xpi2", "Ypi2", "Xpi4", "Xpi8"):
        u = pulse_unitary(pulse)
        menu[f"{pulse}xI"] = np.kron(u, eye)
        menu[f"Ix{pulse}"] = np.kron(eye, u)
    menu["CNOT"] = CNOT.copy()
    for mat in menu.values():
        mat.setflags(write=False)
    return menu


def process_unitary(name: str) -> np.ndarray:
    """Unitary of a named benchmark process."""
    menu = process_menu()
    try:
        return menu[name]
    except KeyError:
        raise ValueError(
            f"unknown process {name!r}; known: {list(menu)}"
        ) from None


def process_ptm(name: str) -> np.ndarray:
    """PTM of a named benchmark process."""
    return ptm_of_unitary(process_unitary(name))


def single_qubit_clifford_ptms() -> list[np.ndarray]:
    """All 24 single-qubit Clifford transfer matrices.

    Generated by closing ``{X_pi/2, Y_pi/2}`` under composition.  Entries
    are snapped to exact integers, which is lossless because Clifford PTMs
    are signed permutations.
    """
    gens = [
        np.rint(ptm_of_unitary(rotation("x", np.pi / 2))).astype(int),
        np.rint(ptm_of_unitary(rotation("y", np.pi / 2))).astype(int),
    ]
    found = {np.eye(4, dtype=int).tobytes(): np.eye(4, dtype=int)}
    frontier = [np.eye(4, dtype=int)]
    while frontier:
        nxt = []
        for r in frontier:
            for g in gens:
                cand = g @ r
                key = cand.tobytes()
                if key not in found:
                    found[key] = cand
                    nxt.append(cand)
        frontier = nxt
    return [m.astype(float) for m in found.values()]
