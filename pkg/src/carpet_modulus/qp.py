"""Solvers for the pool problem  min ||y||^2  s.t.  A y >= 1.

:class:`InteriorPointQP` hands the whole pool to Clarabel each round and
rescales the answer so that every stored row holds exactly.
:class:`ActiveSetQP` is the Goldfarb-Idnani dual method specialized to an
identity Hessian: the iterate is always ``y = A^T u`` with ``u`` supported
on the active set, whose Gram block is kept as an updated Cholesky factor,
and appended rows warm-start the next solve.  It is exact on small pools
but crawls on heavily degenerate ones (many dependent path rows), which is
why the interior-point route is the default.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.linalg import solve_triangular

from .errors import ConvergenceError, DomainError


class _Pool:
    def __init__(self, n_vars: int):
        self.n = int(n_vars)
        self._A = sp.csr_matrix((0, self.n))
        self.u = np.zeros(0)
        self.y = np.zeros(self.n)
        self.iterations = 0

    def add_rows(self, rows):
        rows = sp.csr_matrix(rows, dtype=float)
        if rows.shape[1] != self.n:
            raise DomainError("row length does not match the variable count")
        if rows.shape[0] and np.any(np.diff(rows.indptr) == 0):
            raise DomainError("a constraint row has no variables (infeasible)")
        self._A = sp.vstack([self._A, rows], format="csr")
        self.u = np.concatenate([self.u, np.zeros(rows.shape[0])])

    def keep_rows(self, keep: np.ndarray):
        """Restrict the pool to the rows flagged in ``keep``."""
        keep = np.asarray(keep, bool)
        self._A = self._A[keep]
        self.u = self.u[keep]
        return keep

    @property
    def A(self) -> sp.csr_matrix:
        return self._A

    @property
    def m(self) -> int:
        return self._A.shape[0]

    @property
    def passive(self) -> np.ndarray:
        """Rows carrying a positive multiplier."""
        if not len(self.u):
            return np.zeros(0, bool)
        return self.u > 1e-7 * max(1e-300, float(self.u.max()))

    @property
    def objective(self) -> float:
        return float(self.y @ self.y)

    def multipliers(self) -> np.ndarray:
        return self.u.copy()


class InteriorPointQP(_Pool):
    def __init__(self, n_vars: int, tol: float = 1e-10, max_iter: int = 200):
        super().__init__(n_vars)
        self.tol = tol
        self.max_iter = max_iter

    def solve(self) -> np.ndarray:
        import clarabel

        A = self._A
        if self.m == 0:
            self.y = np.zeros(self.n)
            return self.y
        st = clarabel.DefaultSettings()
        st.verbose = False
        st.max_iter = self.max_iter
        st.tol_gap_abs = st.tol_gap_rel = st.tol_feas = self.tol
        solver = clarabel.DefaultSolver(sp.identity(self.n, format="csc"), np.zeros(self.n),
                                        (-A).tocsc(), -np.ones(self.m),
                                        [clarabel.NonnegativeConeT(self.m)], st)
        sol = solver.solve()
        self.iterations += int(sol.iterations)
        y = np.maximum(np.asarray(sol.x, float), 0.0)  # the exact optimum A^T u is nonnegative
        status = str(sol.status)
        if not status.endswith("Solved") or not np.all(np.isfinite(y)):
            raise ConvergenceError(f"interior-point solve ended with status {status}", partial=y)
        lo = float((A @ y).min())
        if lo <= 0:
            raise ConvergenceError("interior-point iterate is not admissible", partial=y)
        if lo < 1:
            y = y / lo
        self.u = np.maximum(np.asarray(sol.z, float), 0.0)
        self.y = y
        return y


def _chol_delete(L: np.ndarray, k: int) -> np.ndarray:
    """Cholesky factor of the Gram matrix with row/column k removed."""
    n = L.shape[0]
    out = np.delete(np.delete(L, k, axis=0), k, axis=1)
    if k == n - 1:
        return out
    # trailing block absorbs the removed column: L33 L33^T + v v^T
    v = L[k + 1:, k].copy()
    B = out[k:, k:]
    for i in range(len(v)):
        r = np.hypot(B[i, i], v[i])
        c, s = r / B[i, i], v[i] / B[i, i]
        B[i, i] = r
        if i + 1 < len(v):
            B[i + 1:, i] = (B[i + 1:, i] + s * v[i + 1:]) / c
            v[i + 1:] = c * v[i + 1:] - s * B[i + 1:, i]
    out[k:, k:] = B
    return out


class ActiveSetQP(_Pool):
    def __init__(self, n_vars: int, tol: float = 1e-12, max_iter: int = 500_000):
        super().__init__(n_vars)
        self.tol = tol
        self.max_iter = max_iter
        self.active: list = []        # row indices, order matches L
        self.L = np.zeros((0, 0))     # lower Cholesky factor of Gram(active)

    def _row(self, p: int) -> np.ndarray:
        A = self._A
        out = np.zeros(self.n)
        sl = slice(A.indptr[p], A.indptr[p + 1])
        out[A.indices[sl]] = A.data[sl]
        return out

    def _refactor(self):
        if not self.active:
            self.L = np.zeros((0, 0))
            return
        As = self._A[self.active]
        self.L = np.linalg.cholesky((As @ As.T).toarray())

    def keep_rows(self, keep: np.ndarray):
        keep = np.asarray(keep, bool).copy()
        keep[self.active] = True
        new_index = np.cumsum(keep) - 1
        self.active[:] = [int(new_index[a]) for a in self.active]
        return super().keep_rows(keep)

    def _spread(self, r: np.ndarray) -> np.ndarray:
        full = np.zeros(self.m)
        full[self.active] = r
        return full

    def solve(self) -> np.ndarray:
        A = self._A
        At = A.T.tocsr()
        act = self.active
        it = 0
        self.y = At @ self.u
        while True:
            s = A @ self.y - 1.0
            if not len(s):
                return self.y
            p = int(np.argmin(s))
            if s[p] >= -self.tol:
                return self.y
            if p in act:
                # numerically violated active row: rebuild the factor and the iterate
                self._refactor()
                ua = solve_triangular(self.L.T, solve_triangular(self.L, np.ones(len(act)), lower=True), lower=False)
                self.u[:] = 0
                self.u[act] = np.maximum(ua, 0)
                self.y = At @ self.u
                if (A[p] @ self.y)[0] - 1 >= -self.tol:
                    continue
                raise ConvergenceError("active-set solver lost accuracy", partial=self.y.copy())
            ap = self._row(p)
            app = float(ap @ ap)
            while True:
                it += 1
                self.iterations += 1
                if it > self.max_iter:
                    raise ConvergenceError("active-set iteration cap", partial=self.y.copy())
                if act:
                    q = (A @ ap)[act]
                    lp = solve_triangular(self.L, q, lower=True)
                    r = solve_triangular(self.L.T, lp, lower=False)
                    zz = app - float(lp @ lp)
                else:
                    lp = r = np.zeros(0)
                    zz = app
                slack = float(ap @ self.y) - 1.0
                dependent = zz <= 1e-12 * app
                ua = self.u[act]
                pos = r > 1e-14
                t2, k2 = np.inf, -1
                if np.any(pos):
                    ratios = np.full(len(r), np.inf)
                    ratios[pos] = ua[pos] / r[pos]
                    k2 = int(np.argmin(ratios))
                    t2 = float(ratios[k2])
                if dependent:
                    if not np.isfinite(t2):
                        raise DomainError("constraints are inconsistent")
                    t = t2
                else:
                    t = min(-slack / zz, t2)
                # step: u_S -= t r, u_p += t, y += t (a_p - A_S^T r)
                if len(r):
                    self.u[act] = ua - t * r
                    self.y = self.y - t * (At @ self._spread(r))
                self.u[p] += t
                self.y = self.y + t * ap
                if not dependent and t < t2:
                    n = len(lp)
                    L = np.zeros((n + 1, n + 1))
                    L[:n, :n] = self.L
                    L[n, :n] = lp
                    L[n, n] = np.sqrt(max(zz, 1e-300))
                    self.L = L
                    act.append(p)
                    break
                kk = act[k2]
                self.u[kk] = 0.0
                del act[k2]
                self.L = _chol_delete(self.L, k2)
            self.y = At @ self.u  # resync to limit drift


SOLVERS = {"interior-point": InteriorPointQP, "active-set": ActiveSetQP}


def make_qp(n_vars: int, method: str = "interior-point"):
    try:
        return SOLVERS[method](n_vars)
    except KeyError:
        raise DomainError(f"unknown QP method {method!r}") from None
