import numpy as np
import pytest

from momipde import AffineBlock, ConstraintSystem, SymmetricMatrix, VariableLayout


def rand_sym(rng, n, scale=1.0):
    """Random symmetric matrix with entries of the given magnitude."""
    a = scale * (2.0 * rng.random((n, n)) - 1.0)
    return SymmetricMatrix(0.5 * (a + a.T))


def rand_spd(rng, n, shift=0.5):
    """Random SPD matrix: Gram matrix plus a positive diagonal shift."""
    g = rng.random((n, n)) - 0.5
    return SymmetricMatrix(g @ g.T + shift * np.eye(n))


def diag_system(block_diags, coeff_diags=()):
    """Constraint system over a single scalar variable x (rectangular 1x1)
    from diagonal base blocks and matching diagonal coefficient blocks.
    With coeff_diags empty the system has d=1 but no x dependence."""
    layout = VariableLayout([("x", "rectangular", 1, 1)])
    blocks = []
    for i, base in enumerate(block_diags):
        base = np.diag(np.asarray(base, dtype=np.float64))
        coeffs = {}
        if i < len(coeff_diags) and coeff_diags[i] is not None:
            coeffs[0] = SymmetricMatrix(np.diag(np.asarray(coeff_diags[i], dtype=np.float64)))
        blocks.append(AffineBlock(n=base.shape[0], base=SymmetricMatrix(base), coeffs=coeffs))
    return ConstraintSystem(blocks=tuple(blocks), layout=layout, d=1)


def constant_system(block_diags):
    """d=0 system: constant diagonal blocks only."""
    layout = VariableLayout([])
    blocks = tuple(
        AffineBlock(n=len(b), base=SymmetricMatrix(np.diag(np.asarray(b, dtype=np.float64))),
                    coeffs={})
        for b in block_diags)
    return ConstraintSystem(blocks=blocks, layout=layout, d=0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
