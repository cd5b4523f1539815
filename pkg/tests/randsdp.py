"""Random feasible bounded SDPs used by the solver tests and the acceptance
suite. Problems are built around a known interior point so feasibility is
guaranteed, and a total-trace row keeps the feasible set compact."""

import numpy as np

from steercert.linalg import HermitianOperator
from steercert.sdp import SdpProblem


def random_psd(rng, dim, floor=0.3):
    raw = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return raw @ raw.conj().T / dim + floor * np.eye(dim)


def random_hermitian(rng, dim):
    raw = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return 0.5 * (raw + raw.conj().T)


def random_feasible_problem(rng):
    n_blocks = int(rng.integers(1, 4))
    dims = tuple(int(rng.integers(1, 4)) for _ in range(n_blocks))
    interior = [random_psd(rng, d) for d in dims]

    constraints = []
    n_rows = int(rng.integers(1, 6))
    for _ in range(n_rows):
        coeffs = []
        value = 0.0
        for j, d in enumerate(dims):
            if n_blocks > 1 and rng.random() < 0.3:
                coeffs.append(None)
                continue
            mat = random_hermitian(rng, d)
            coeffs.append(HermitianOperator(mat))
            value += float(np.sum(mat.conj() * interior[j]).real)
        constraints.append((coeffs, value))

    # Compactness: fix the total trace to that of the interior point.
    total = sum(float(np.trace(x).real) for x in interior)
    constraints.append(
        ([HermitianOperator.identity(d) for d in dims], total)
    )

    if rng.random() < 0.3:
        # Duplicate a row (scaled) to exercise the rank reduction.
        idx = int(rng.integers(0, len(constraints)))
        coeffs, rhs = constraints[idx]
        scale = float(rng.uniform(0.5, 2.0))
        constraints.append(
            (
                [None if c is None else scale * c for c in coeffs],
                scale * rhs,
            )
        )

    # Unit-scale objective so the absolute stopping tolerances mean the same
    # thing across draws (matches how the physics programs are scaled).
    raw = [random_hermitian(rng, d) for d in dims]
    scale = np.sqrt(sum(float(np.sum(np.abs(r) ** 2)) for r in raw))
    objective = [HermitianOperator(r / scale) for r in raw]
    return SdpProblem(
        dims=dims,
        objective=objective,
        constraints=constraints,
        maximize=bool(rng.random() < 0.5),
    )
