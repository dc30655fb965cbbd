from fractions import Fraction

import numpy as np
import pytest


def area_oracle(f, g, w=None):
    """Exact kernel of the signed area sets, in rational arithmetic.

    Each coordinate of a vector spans the interval between 0 and its value;
    intersection and union are measured per coordinate and weighted.  Shares
    no code with the implementations under test.
    """
    f = [Fraction(float(v)) for v in f]
    g = [Fraction(float(v)) for v in g]
    w = [Fraction(1)] * len(f) if w is None else [Fraction(float(v)) for v in w]
    inter = Fraction(0)
    union = Fraction(0)
    for fj, gj, wj in zip(f, g, w):
        lo_f, hi_f = min(fj, 0), max(fj, 0)
        lo_g, hi_g = min(gj, 0), max(gj, 0)
        overlap = max(Fraction(0), min(hi_f, hi_g) - max(lo_f, lo_g))
        inter += wj * overlap
        union += wj * ((hi_f - lo_f) + (hi_g - lo_g) - overlap)
    return inter, union


def area_kernel(f, g, w=None) -> float:
    inter, union = area_oracle(f, g, w)
    return 0.0 if union == 0 else float(inter / union)


def random_pairs(rng, count, n_max=32, low=-10.0, high=10.0):
    for _ in range(count):
        n = int(rng.integers(1, n_max + 1))
        yield rng.uniform(low, high, n), rng.uniform(low, high, n)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE: list[tuple[str, str, str]] = []


@pytest.fixture
def acceptance_record():
    def record(label, passed, detail=""):
        _ACCEPTANCE.append((label, "PASS" if passed else "FAIL", detail))

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, status, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"[{status}] {label}  {detail}")
