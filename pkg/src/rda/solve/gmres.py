"""Left-preconditioned restarted GMRES with a true-residual stopping test."""
from dataclasses import dataclass, field
import time

import numpy as np
from scipy.linalg import solve_triangular


class GMRESBreakdown(ArithmeticError):
    """Non-finite values appeared during the Arnoldi process."""


@dataclass
class SolveStats:
    iterations: int = 0
    restarts: int = 0
    relres: float = np.inf
    seconds: float = 0.0
    converged: bool = False
    history: list = field(default_factory=list, repr=False)

    def write_history(self, path):
        """Residual history as CSV with header ``iteration,relres``."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("iteration,relres\n")
            for i, r in enumerate(self.history):
                fh.write(f"{i},{r:.17g}\n")


def _check(*vals):
    for v in vals:
        if not np.all(np.isfinite(v)):
            raise GMRESBreakdown("non-finite value in GMRES (matrix or preconditioner)")


def gmres(A, b, M=None, restart=100, tol=1e-8, maxit=10000, x0=None):
    """Solve ``A x = b`` by GMRES(restart) on ``M^{-1} A x = M^{-1} b``.

    Convergence is declared on ``||b - A x|| / ||b|| <= tol``.  The true
    residual of the current Krylov iterate is tracked at every inner step
    through the stored products ``A v_j``.  Each cycle restarts from its best
    iterate, so the history never increases across restarts.  Returns
    ``(x, stats)``; ``stats.converged`` is false when ``maxit`` inner steps
    were exhausted.
    """
    t0 = time.perf_counter()
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    apply_M = (lambda r: r) if M is None else M
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    bnorm = np.linalg.norm(b)
    stats = SolveStats()
    if bnorm == 0.0:
        stats.relres, stats.converged = 0.0, True
        stats.history = [0.0]
        stats.seconds = time.perf_counter() - t0
        return np.zeros(n), stats
    r = b - A @ x
    rel = np.linalg.norm(r) / bnorm
    _check(rel)
    history = [rel]
    cycles = 0
    m = max(1, int(restart))
    while rel > tol and stats.iterations < maxit:
        cycles += 1
        z = apply_M(r)
        beta = np.linalg.norm(z)
        _check(beta)
        if beta == 0.0:
            raise GMRESBreakdown("preconditioner annihilated a nonzero residual")
        V = np.empty((m + 1, n))
        W = np.empty((m, n))
        H = np.zeros((m + 1, m))
        cs, sn = np.zeros(m), np.zeros(m)
        g = np.zeros(m + 1)
        g[0] = beta
        V[0] = z / beta
        best_rel, best_y = rel, None
        for j in range(m):
            w = A @ V[j]
            W[j] = w
            u = apply_M(w)
            Vj = V[:j + 1]
            h = Vj @ u
            u = u - h @ Vj
            h2 = Vj @ u
            u -= h2 @ Vj
            h += h2
            hn = np.linalg.norm(u)
            _check(h, hn)
            col = np.empty(j + 2)
            col[:j + 1], col[j + 1] = h, hn
            for i in range(j):
                a, c = col[i], col[i + 1]
                col[i], col[i + 1] = cs[i] * a + sn[i] * c, -sn[i] * a + cs[i] * c
            rho = np.hypot(col[j], col[j + 1])
            if rho == 0.0:
                raise GMRESBreakdown("singular Hessenberg matrix")
            cs[j], sn[j] = col[j] / rho, col[j + 1] / rho
            col[j], col[j + 1] = rho, 0.0
            H[:j + 2, j] = col
            g[j + 1] = -sn[j] * g[j]
            g[j] = cs[j] * g[j]
            y = solve_triangular(H[:j + 1, :j + 1], g[:j + 1])
            rt = r - y @ W[:j + 1]
            stats.iterations += 1
            rel_j = np.linalg.norm(rt) / bnorm
            _check(rel_j)
            history.append(rel_j)
            if rel_j < best_rel:
                best_rel, best_y = rel_j, y
            if rel_j <= tol or stats.iterations >= maxit or hn <= 1e-14 * beta:
                break
            V[j + 1] = u / hn
        if best_y is None:
            break
        x = x + best_y @ V[:len(best_y)]
        r = b - A @ x
        rel = np.linalg.norm(r) / bnorm
    stats.restarts = max(cycles - 1, 0)
    stats.relres = float(rel)
    stats.converged = bool(rel <= tol)
    stats.history = history
    stats.seconds = time.perf_counter() - t0
    return x, stats
