import numpy as np
import pytest


@pytest.fixture
def fd_grads():
    """Central finite differences of scalar_fn over every entry of params.

    Returns a function (scalar_fn, params, h) -> list of gradient arrays;
    params are perturbed in place and restored.
    """

    def compute(scalar_fn, params, h=1e-5):
        grads = []
        for p in params:
            g = np.zeros_like(p)
            it = np.nditer(p, flags=["multi_index"])
            for _ in it:
                i = it.multi_index
                orig = p[i]
                p[i] = orig + h
                up = scalar_fn()
                p[i] = orig - h
                down = scalar_fn()
                p[i] = orig
                g[i] = (up - down) / (2.0 * h)
            grads.append(g)
        return grads

    return compute


def max_rel_err(a, b, floor=1e-3):
    """Largest |a-b| / max(|a|, |b|, floor) over matching array lists."""
    worst = 0.0
    for x, y in zip(a, b):
        denom = np.maximum(np.maximum(np.abs(x), np.abs(y)), floor)
        worst = max(worst, float((np.abs(x - y) / denom).max()))
    return worst


@pytest.fixture
def rel_err():
    return max_rel_err
