"""Statistical tasks for the experiment harness.

Two tasks are supported over datasets with unit-l2-norm rows:

* regularized logistic regression released via output perturbation, with
  sensitivities Delta_2 = 2/(n*lambda) and Delta_1 = 2*sqrt(d)/(n*lambda);
* ridge regression released via covariance perturbation: X'X and X'y are
  concatenated into one vector of length d^2 + d and released through a
  single session.  Per-block l2 sensitivities are 2.0 each, so the combined
  release has l2 sensitivity 2*sqrt(2); the l1 sensitivities are 2d and
  2*sqrt(d), combined 2d + 2*sqrt(d).  Labels are clamped to [-1, 1] so
  these bounds hold.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import OptimizationError

DEFAULT_REG_LAMBDA = 0.05


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray  # n x d, rows of l2 norm <= 1
    y: np.ndarray  # length n; binary in {-1, +1} or real in [-1, 1]
    task: str  # "binary" | "real"

    def __post_init__(self):
        if self.X.ndim != 2 or self.y.ndim != 1 or len(self.X) != len(self.y):
            raise ValueError("X must be n x d with a matching length-n label vector")
        if self.task == "binary":
            if not np.all(np.isin(self.y, (-1.0, 1.0))):
                raise ValueError("binary labels must lie in {-1, +1}")
        elif self.task == "real":
            if np.any(np.abs(self.y) > 1 + 1e-12):
                raise ValueError("real labels must lie in [-1, 1]")
        else:
            raise ValueError(f"unknown task kind {self.task!r}")

    @property
    def n(self) -> int:
        return len(self.y)

    @property
    def d(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class TaskSpec:
    loss: str  # "logistic" | "squared"
    reg_lambda: float
    n: int
    d: int

    @property
    def l2_sensitivity(self) -> float:
        if self.loss == "logistic":
            return 2.0 / (self.n * self.reg_lambda)
        return 2.0 * math.sqrt(2.0)

    @property
    def l1_sensitivity(self) -> float:
        if self.loss == "logistic":
            return 2.0 * math.sqrt(self.d) / (self.n * self.reg_lambda)
        return 2.0 * self.d + 2.0 * math.sqrt(self.d)


def load_csv(path, task: str = "binary") -> Dataset:
    """Load a numeric CSV with the label in the last column.

    A non-numeric header row is skipped; any other non-numeric cell raises
    with its row and column.
    """
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for i, row in enumerate(reader):
            if not row:
                continue
            try:
                rows.append([float(c) for c in row])
            except ValueError as exc:
                if i == 0:
                    continue  # header
                bad = next(j for j, c in enumerate(row) if not _is_float(c))
                raise ValueError(
                    f"non-numeric cell at row {i}, column {bad}: {row[bad]!r}"
                ) from exc
    data = np.asarray(rows, dtype=float)
    X, y = data[:, :-1], data[:, -1]
    if task == "binary":
        # Map {0, 1} labels onto {-1, +1}.
        uniq = set(np.unique(y))
        if uniq <= {0.0, 1.0}:
            y = 2 * y - 1
        if not set(np.unique(y)) <= {-1.0, 1.0}:
            raise ValueError(f"binary labels must be in {{-1, +1}}, got {sorted(uniq)}")
    return Dataset(X=X, y=y, task=task)


def _is_float(c: str) -> bool:
    try:
        float(c)
        return True
    except ValueError:
        return False


def normalize(dataset: Dataset) -> Dataset:
    """Scale every row to unit l2 norm; zero rows pass through with a warning."""
    norms = np.linalg.norm(dataset.X, axis=1)
    zero = norms == 0
    if np.any(zero):
        warnings.warn(f"{int(zero.sum())} zero rows left unnormalized")
    safe = np.where(zero, 1.0, norms)
    y = dataset.y
    if dataset.task == "real":
        y = np.clip(y, -1.0, 1.0)
    return Dataset(X=dataset.X / safe[:, None], y=y, task=dataset.task)


def subsample(dataset: Dataset, n: int, seed: int) -> Dataset:
    """Draw n rows without replacement, seeded."""
    if n > dataset.n:
        raise ValueError(f"cannot subsample {n} rows from {dataset.n}")
    rng = np.random.default_rng(seed)
    idx = rng.choice(dataset.n, size=n, replace=False)
    return Dataset(X=dataset.X[idx], y=dataset.y[idx], task=dataset.task)


def logistic_loss(beta: np.ndarray, dataset: Dataset, reg_lambda: float) -> float:
    """Regularized mean logistic loss, overflow-safe via logaddexp."""
    margins = dataset.y * (dataset.X @ beta)
    return float(np.mean(np.logaddexp(0.0, -margins))) + reg_lambda * float(
        beta @ beta
    ) / 2.0


def logistic_gradient(beta: np.ndarray, dataset: Dataset, reg_lambda: float) -> np.ndarray:
    margins = dataset.y * (dataset.X @ beta)
    # d/dz log(1 + e^{-z}) = -sigmoid(-z)
    sig = 0.5 * (1.0 - np.tanh(margins / 2.0))
    grad = -(dataset.X.T @ (dataset.y * sig)) / dataset.n
    return grad + reg_lambda * beta


def logistic_fit(
    dataset: Dataset,
    reg_lambda: float,
    grad_tol: float = 1e-8,
    max_iter: int = 100_000,
) -> np.ndarray:
    """Full-batch Newton minimization of the regularized logistic objective."""
    beta = np.zeros(dataset.d)
    for _ in range(max_iter):
        grad = logistic_gradient(beta, dataset, reg_lambda)
        gnorm = float(np.linalg.norm(grad))
        if gnorm <= grad_tol:
            return beta
        margins = dataset.y * (dataset.X @ beta)
        sig = 0.5 * (1.0 - np.tanh(margins / 2.0))
        w = sig * (1.0 - sig)
        hess = (dataset.X.T * w) @ dataset.X / dataset.n + reg_lambda * np.eye(dataset.d)
        direction = np.linalg.solve(hess, grad)
        # Backtracking keeps Newton globally convergent on this strongly
        # convex objective.
        step_size, f0 = 1.0, logistic_loss(beta, dataset, reg_lambda)
        while (
            logistic_loss(beta - step_size * direction, dataset, reg_lambda)
            > f0 - 1e-4 * step_size * float(grad @ direction)
            and step_size > 1e-12
        ):
            step_size /= 2.0
        beta = beta - step_size * direction
    gnorm = float(np.linalg.norm(logistic_gradient(beta, dataset, reg_lambda)))
    raise OptimizationError(f"Newton did not converge; final gradient norm {gnorm}")


def ridge_suffstats(dataset: Dataset) -> np.ndarray:
    """Exact sufficient statistics (X'X flattened, X'y) as one release vector."""
    xtx = dataset.X.T @ dataset.X
    xty = dataset.X.T @ dataset.y
    return np.concatenate([xtx.ravel(), xty])


def ridge_solve(noisy_stats: np.ndarray, n: int, reg_lambda: float) -> np.ndarray:
    """Decode noisy (X'X, X'y), repair to PSD, and solve (A + n*lambda*I) beta = b."""
    noisy_stats = np.asarray(noisy_stats, dtype=float)
    d = int(round((math.sqrt(4 * len(noisy_stats) + 1) - 1) / 2))
    if d * d + d != len(noisy_stats):
        raise ValueError(f"stats vector of length {len(noisy_stats)} is not d^2 + d")
    mat = noisy_stats[: d * d].reshape(d, d)
    b = noisy_stats[d * d :]
    sym = (mat + mat.T) / 2.0
    eigvals, eigvecs = np.linalg.eigh(sym)
    eigvals = np.clip(eigvals, 1e-6, None)
    a = (eigvecs * eigvals) @ eigvecs.T
    return np.linalg.solve(a + n * reg_lambda * np.eye(d), b)


def ridge_loss(beta: np.ndarray, dataset: Dataset, reg_lambda: float) -> float:
    """Regularized mean squared loss."""
    residuals = dataset.X @ beta - dataset.y
    return float(np.mean(residuals**2)) / 2.0 + reg_lambda * float(beta @ beta) / 2.0


def synth_generate(kind: str, n: int, d: int, seed: int) -> Dataset:
    """Desk-scale synthetic datasets with unit-norm rows.

    logistic: rows cluster around a hidden direction (so a well-separated,
    realistically classifiable task exists at unit row norm) and labels are
    sign(<beta*, x>) flipped with probability 0.05; ridge: isotropic unit
    rows with y = clamp(<beta*, x> + N(0, 0.01), -1, 1).  Both tasks leave
    comfortable headroom below the 0.41 / 0.025 stopping thresholds for a
    non-private fit at lambda = 0.05.
    """
    if n < 1 or d < 1:
        raise ValueError("n and d must be positive")
    rng = np.random.default_rng(seed)
    if kind == "logistic":
        direction = rng.standard_normal(d)
        direction /= np.linalg.norm(direction)
        sides = rng.choice([-1.0, 1.0], n)
        X = rng.standard_normal((n, d)) + 4.0 * sides[:, None] * direction
        X /= np.linalg.norm(X, axis=1)[:, None]
        y = np.sign(X @ direction)
        y[y == 0] = 1.0
        flips = rng.random(n) < 0.05
        y[flips] *= -1
        return Dataset(X=X, y=y, task="binary")
    if kind == "ridge":
        X = rng.standard_normal((n, d))
        X /= np.linalg.norm(X, axis=1)[:, None]
        beta_star = rng.standard_normal(d)
        beta_star *= 0.5 / np.linalg.norm(beta_star)
        y = np.clip(X @ beta_star + rng.normal(0.0, 0.1, n), -1.0, 1.0)
        return Dataset(X=X, y=y, task="real")
    raise ValueError(f"unknown synthetic kind {kind!r}")


def dataset_to_csv(dataset: Dataset) -> str:
    """Serialize rows plus the label column; round-trips through `load_csv`."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for xi, yi in zip(dataset.X, dataset.y):
        writer.writerow([repr(float(v)) for v in xi] + [repr(float(yi))])
    return buf.getvalue()
