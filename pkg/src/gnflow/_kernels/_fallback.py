"""Pure-Python kernel backend (numpy + scipy.linalg banded Cholesky).

Same contract as the compiled backend in ``_core``:

* ``deriv4(f, dx)``: 4th-order centered periodic first derivative.
* ``cyclic_spd_factor(diag, off)``: factor the symmetric cyclic tridiagonal
  matrix with diagonal ``diag`` and couplings ``off`` (``off[j]`` links
  unknowns ``j`` and ``j+1``; ``off[n-1]`` is the periodic corner linking
  ``n-1`` and ``0``).  Raises ``ValueError`` if the matrix is not positive
  definite.
* ``cyclic_spd_solve(factor, b)``: solve with a previously computed factor.

The cyclic structure is handled by a bordered elimination: the leading
(n-1) x (n-1) tridiagonal block is factored by banded Cholesky and the last
unknown is eliminated through its Schur complement, whose sign doubles as
the positive-definiteness check for the full matrix.
"""

import numpy as np
from scipy.linalg import LinAlgError, cho_solve_banded, cholesky_banded

BACKEND = "python"


def deriv4(f, dx):
    f = np.asarray(f, dtype=float)
    return (8.0 * (np.roll(f, -1) - np.roll(f, 1))
            - (np.roll(f, -2) - np.roll(f, 2))) / (12.0 * dx)


def cyclic_spd_factor(diag, off):
    d = np.asarray(diag, dtype=float)
    e = np.asarray(off, dtype=float)
    n = d.shape[0]
    if e.shape[0] != n:
        raise ValueError("diag and offdiag must have equal length")
    if n < 4:
        raise ValueError("cyclic solve needs at least 4 unknowns")
    m = n - 1

    ab = np.zeros((2, m))
    ab[0, 1:] = e[: m - 1]
    ab[1, :] = d[:m]
    try:
        cb = cholesky_banded(ab, lower=False)
    except LinAlgError as exc:
        raise ValueError(f"matrix not positive definite: {exc}") from None

    c = np.zeros(m)
    c[0] = e[n - 1]
    c[m - 1] = e[n - 2]
    z = cho_solve_banded((cb, False), c)
    s = d[n - 1] - c @ z
    if not s > 0.0:
        raise ValueError("matrix not positive definite (Schur complement)")
    return (cb, z, s, e[n - 1], e[n - 2])


def cyclic_spd_solve(factor, b):
    cb, z, s, c0, cm1 = factor
    b = np.asarray(b, dtype=float)
    m = z.shape[0]
    t = cho_solve_banded((cb, False), b[:m])
    x_last = (b[m] - c0 * t[0] - cm1 * t[m - 1]) / s
    out = np.empty(m + 1)
    out[:m] = t - z * x_last
    out[m] = x_last
    return out
