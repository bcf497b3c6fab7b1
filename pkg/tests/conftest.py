import numpy as np
import pytest

from dfsim import gates
from dfsim.effective import solve_phase_gate


@pytest.fixture(scope="session")
def uphase_solution():
    ref = gates.REFERENCE
    return solve_phase_gate(ref.blockade, ref.uphase_pulse(atoms=(0, 2)))


@pytest.fixture(scope="session")
def refined_h():
    from dfsim.optimizer import refined_recipe_H
    return refined_recipe_H()


@pytest.fixture(scope="session")
def refined_uphase(uphase_solution):
    from dfsim.optimizer import refined_recipe_Uphase
    return refined_recipe_Uphase(seed_solution=uphase_solution)


@pytest.fixture(scope="session")
def refined_cnot(refined_h, refined_uphase):
    from dfsim.gates import recipe_CNOT
    return recipe_CNOT(h=refined_h, uphase=refined_uphase)


def assert_equal_up_to_phase(a, b, tol=1e-9):
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    overlap = np.trace(b.conj().T @ a)
    assert abs(overlap) > 1e-12, "matrices are orthogonal"
    phase = overlap / abs(overlap)
    assert np.abs(a - phase * b).max() <= tol
