"""Matrix-free adiabatic operator over n-bit strings.

H(s) acts on amplitudes indexed by the 2^n strings as

    (H(s) psi)[z] = ((1-s) n/2 + s cost(z)) psi[z]
                    - (1-s)/2 * sum_i psi[z ^ e_i]

which interpolates from the transverse-field driver at s=0 (ground state
uniform, unit gap) to the diagonal cost at s=1.  Off-diagonal entries are
nonpositive for s in [0, 1], so the ground state can be taken entrywise
positive and min-ratio lower bounds apply.

The hop sum is evaluated one bit at a time through reshaped views, so a single
apply costs n vectorized passes over the state and never materializes a
matrix.  The same kernel serves float and complex states.
"""

from __future__ import annotations

import numpy as np

from .bitperm import ScrambleTable, popcount
from .errors import ResourceLimitError


def flip_bit(vec: np.ndarray, i: int) -> np.ndarray:
    """View of vec with index bit i flipped: result[z] = vec[z ^ (1 << i)]."""
    step = 1 << i
    return vec.reshape(-1, 2, step)[:, ::-1, :]


def neighbor_sum(vec: np.ndarray, n: int, out: np.ndarray | None = None) -> np.ndarray:
    """Sum of vec over the n single-bit-flip neighbors of every index."""
    if vec.shape != (1 << n,):
        raise ValueError(f"state length {vec.shape} does not match n={n}")
    if out is None:
        out = np.zeros_like(vec)
    else:
        out[:] = 0
    for i in range(n):
        step = 1 << i
        acc = out.reshape(-1, 2, step)
        np.add(acc, flip_bit(vec, i), out=acc)
    return out


class AdiabaticOperator:
    """Hamiltonian family H(s) for one scramble table.

    The table's cost array is cached once (one byte per string plus a float
    copy used by the kernel).  Instances are cheap to create and hold no
    solver state; apply() is safe to call from multiple threads.
    """

    def __init__(self, table: ScrambleTable):
        self.table = table
        self.n = table.n
        self.dim = 1 << table.n
        self.cost = table.cost_array()
        self._cost_f = self.cost.astype(np.float64)
        self._cost_f.setflags(write=False)

    def __repr__(self):
        return (f"AdiabaticOperator(n={self.n}, seed={self.table.seed}, "
                f"generator={self.table.generator!r})")

    def _check(self, s: float, vec: np.ndarray) -> None:
        if not 0.0 <= s <= 1.0:
            raise ValueError(f"schedule parameter s={s} outside [0, 1]")
        if vec.shape != (self.dim,):
            raise ValueError(
                f"state length {vec.shape} does not match dimension {self.dim}"
            )

    def diagonal(self, s: float) -> np.ndarray:
        """Diagonal (1-s) n/2 + s cost(z) as a float array."""
        return (1.0 - s) * (self.n / 2.0) + s * self._cost_f

    def apply(self, s: float, vec: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
        """Apply H(s) to a state vector (real or complex)."""
        self._check(s, vec)
        hop = neighbor_sum(vec, self.n, out=out)
        hop *= -(1.0 - s) / 2.0
        hop += self.diagonal(s) * vec
        return hop

    def matvec(self, s: float):
        """Bound single-argument kernel for iterative solvers."""
        return lambda v: self.apply(s, v)

    def expectation(self, s: float, psi: np.ndarray) -> float:
        """<psi|H(s)|psi> for a normalized state."""
        nrm = np.linalg.norm(psi)
        if abs(nrm - 1.0) > 1e-10:
            raise ValueError(f"state norm {nrm} is not 1 within 1e-10")
        return float(np.real(np.vdot(psi, self.apply(s, psi))))

    def dense_matrix(self, s: float, max_n: int = 14) -> np.ndarray:
        """Materialize H(s) as a dense symmetric matrix (small n only)."""
        if self.n > max_n:
            raise ResourceLimitError(
                f"dense matrix at n={self.n} needs {(self.dim ** 2 * 8) >> 20} MiB; "
                f"cap is n={max_n}"
            )
        idx = np.arange(self.dim)
        h = np.zeros((self.dim, self.dim))
        h[idx, idx] = self.diagonal(s)
        for i in range(self.n):
            h[idx, idx ^ (1 << i)] = -(1.0 - s) / 2.0
        return h

    def dump_diagonal(self, fh) -> None:
        """Write (z, cost) rows as CSV to an open text file handle."""
        fh.write("z,cost\n")
        for z in range(self.dim):
            fh.write(f"{z},{int(self.cost[z])}\n")


def cost_rms(table: ScrambleTable) -> float:
    """Quadratic mean sqrt(sum_z cost(z)^2 / (2^n - 1)) of the cost profile.

    The z=0 preimage contributes nothing, hence the N-1 denominator; the
    value is at most n.
    """
    c = table.cost_array().astype(np.int64)
    total = int(np.dot(c, c))
    return float(np.sqrt(total / (table.size - 1)))
