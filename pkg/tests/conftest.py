import numpy as np
import pytest

from least_error.model import DiscretizationFamily, ProblemInstance, SourceCertificate
from least_error.problems import make_denoising, make_random_sparse

_ACCEPTANCE = []


def record_acceptance(label, passed, detail=""):
    _ACCEPTANCE.append((label, passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {label}  {detail}")


@pytest.fixture
def small():
    """2x3 operator with columns e1, e2, e1+e2 and data (1, 1)."""
    astar = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 1.0]])
    inst = ProblemInstance(astar=astar, f_delta=np.array([1.0, 1.0]), f=np.array([1.0, 1.0]),
                           u_true=np.array([0.0, 0.0, 1.0]))
    return inst, DiscretizationFamily.canonical(2)


@pytest.fixture
def denoise4():
    return make_denoising(4, [3.0, -1.0, 0.5, 0.2])


@pytest.fixture(scope="session")
def rate_fixture():
    """Random sparse instance with a strict source element and n0 = 6."""
    return make_random_sparse(10, 20, 2, seed=2)


def random_instance(rng, m, N):
    """Unit-column Gaussian operator, random data and a random orthonormal basis."""
    astar = rng.standard_normal((m, N))
    astar /= np.linalg.norm(astar, axis=0)
    f = rng.standard_normal(m)
    basis = np.linalg.qr(rng.standard_normal((m, m)))[0]
    return ProblemInstance(astar=astar, f_delta=f), DiscretizationFamily(basis)


def nonstrict_instance(rng, m, k, n0, n_free):
    """Operator and certificate with ``n0`` off-support entries of ``Av`` at exactly +-1."""
    v = rng.standard_normal(m)
    n_active = k + n0
    cols = rng.standard_normal((m, n_active + n_free))
    target = np.concatenate([rng.choice([-1.0, 1.0], n_active),
                             rng.uniform(-0.7, 0.7, n_free)])
    cols *= target / (v @ cols)
    u = np.zeros(cols.shape[1])
    u[:k] = target[:k] * rng.uniform(1, 2, k)
    f = cols @ u
    inst = ProblemInstance(astar=cols, f_delta=f, f=f, u_true=u)
    return inst, SourceCertificate(v=v, support=tuple(range(k)), margin=0.0)
