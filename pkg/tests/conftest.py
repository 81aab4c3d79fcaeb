import numpy as np
import pytest

from bidual.model import BlockPartition, ProblemInstance, SparsityMode

ACCEPTANCE_LINES = []


def random_partition(rng, n, max_block=4):
    sizes = []
    left = n
    while left:
        s = int(rng.integers(1, min(left, max_block) + 1))
        sizes.append(s)
        left -= s
    return BlockPartition(tuple(sizes))


def random_weighted_instance(rng, m_range=(3, 8), n_range=(6, 16), M_range=(1.0, 10.0)):
    """Gaussian A, random blocks and weights, b = A x0 with ||x0||_inf <= 1 (feasible for M >= 1)."""
    m = int(rng.integers(m_range[0], m_range[1] + 1))
    n = int(rng.integers(n_range[0], n_range[1] + 1))
    part = random_partition(rng, n)
    A = rng.standard_normal((m, n))
    x0 = rng.uniform(-1, 1, n) * (rng.random(n) < 0.5)
    alpha = rng.uniform(0, 2, part.K)
    beta = rng.uniform(0, 2, part.K)
    M = float(rng.uniform(*M_range))
    return ProblemInstance(A, A @ x0, part, alpha, beta, M)


def planted_entry(rng, m, n, s, M="conservative"):
    A = rng.standard_normal((m, n))
    x0 = np.zeros(n)
    x0[rng.choice(n, s, replace=False)] = rng.standard_normal(s)
    return ProblemInstance.from_mode(A, A @ x0, SparsityMode.entry(), M=M), x0


def planted_group(rng, m, part, active_blocks, M="conservative"):
    A = rng.standard_normal((m, part.n))
    x0 = np.zeros(part.n)
    for k in rng.choice(part.K, active_blocks, replace=False):
        x0[part.block_slice(k)] = rng.standard_normal(part.sizes[k])
    return ProblemInstance.from_mode(A, A @ x0, SparsityMode.group(), part, M), x0


def planted_mixed(rng, m, x_blocks, active_blocks, n_err, gamma=0.01, M="conservative"):
    part_x = BlockPartition(tuple(x_blocks))
    A = rng.standard_normal((m, part_x.n))
    x0 = np.zeros(part_x.n)
    for k in rng.choice(part_x.K, active_blocks, replace=False):
        x0[part_x.block_slice(k)] = rng.standard_normal(part_x.sizes[k])
    e = np.zeros(m)
    e[rng.choice(m, n_err, replace=False)] = rng.standard_normal(n_err)
    return ProblemInstance.mixed(A, A @ x0 + e, x_blocks, gamma, M)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def acceptance_report():
    def record(number, name, passed, detail=""):
        line = f"[criterion {number}] {'PASS' if passed else 'FAIL'}  {name}"
        if detail:
            line += f"  ({detail})"
        ACCEPTANCE_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
