import numpy as np
import pytest

from hrris_covert.channel import ChannelSet
from hrris_covert.surface import SurfaceCoefficients


def crandn(rng, *shape, scale=1.0):
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_channels(rng, n=8, na=4, nb=4, nw=4, sigma_sq=1.0, direct=1.0, cascade=0.5):
    return ChannelSet(
        h_ar=crandn(rng, n, na, scale=cascade),
        h_ab=crandn(rng, nb, na, scale=direct),
        h_rb=crandn(rng, nb, n, scale=cascade),
        h_aw=crandn(rng, nw, na, scale=direct),
        h_rw=crandn(rng, nw, n, scale=cascade),
        sigma_b_sq=sigma_sq,
    )


def random_coeffs(rng, n, k, max_amp=3.0):
    active = tuple(sorted(rng.choice(n, size=k, replace=False))) if k else ()
    phases = rng.uniform(0, 2 * np.pi, n)
    return SurfaceCoefficients.from_phases(phases, active, rng.uniform(0.1, max_amp, k))


def random_instance(rng, n=None, k=None, nb=4, na=4, nw=4):
    n = int(rng.integers(1, 33)) if n is None else n
    k = int(rng.integers(0, n + 1)) if k is None else k
    ch = random_channels(rng, n=n, na=na, nb=nb, nw=nw)
    return ch, random_coeffs(rng, n, k)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
