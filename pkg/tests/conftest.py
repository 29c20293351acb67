import numpy as np
import pytest


def periodic_laplacian_matrix(h, w):
    """Dense 5-point periodic Laplacian with +4 on the diagonal (i.e. -Lap)."""
    n = h * w
    mat = np.zeros((n, n))
    for i in range(h):
        for j in range(w):
            c = i * w + j
            mat[c, c] += 4.0
            for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                mat[c, ((i + di) % h) * w + (j + dj) % w] -= 1.0
    return mat


def dense_regularized_solution(stats, lam):
    """Solve (diag(aa) + lam/(4 pi^2) L) u = ab directly."""
    h, w = stats.shape
    system = np.diag(stats.aa.ravel()) + lam / (4 * np.pi**2) * periodic_laplacian_matrix(h, w)
    return np.linalg.solve(system.astype(complex), stats.ab.ravel()).reshape(h, w)


def random_pairs(rng, shape, n=1, noise=0.5):
    """Input/output pairs with a random kernel plus noise; inputs keep their mean."""
    kernel = rng.standard_normal(shape)
    pairs = []
    for _ in range(n):
        a = rng.standard_normal(shape)
        b = np.fft.ifft2(np.fft.fft2(a) * np.fft.fft2(kernel)).real + noise * rng.standard_normal(shape)
        pairs.append((a, b))
    return pairs


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# --- acceptance reporting ---------------------------------------------------

_ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = []


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line for an acceptance criterion.

    Call ``acceptance(label, ok, detail)``; a test that errors before
    reporting is recorded as a failure.
    """
    lines = request.config.stash[_ACCEPTANCE_KEY]
    reported = []

    def report(label, ok, detail=""):
        status = "PASS" if ok else "FAIL"
        lines.append(f"[{status}] {label}: {detail}")
        reported.append(label)
        print(lines[-1])

    yield report
    if not reported:
        lines.append(f"[FAIL] {request.node.name}: raised before reporting")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
