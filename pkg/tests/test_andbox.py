import numpy as np
import pytest

from tbqc.andbox import IdealAndBox, ScriptedAndBox, call
from tbqc.suites import andbox_suite


@pytest.mark.parametrize("a,b,want", [(1, 1, 1), (0, 1, 0), (1, 0, 0), (0, 0, 0)])
def test_contract(a, b, want, rng):
    for _ in range(20):
        alpha, beta = call(a, b, rng)
        assert alpha ^ beta == want


def test_scripted_both_alphas():
    for a in (0, 1):
        for b in (0, 1):
            for alpha in (0, 1):
                box = ScriptedAndBox([alpha])
                assert box.call(a, b) == (alpha, alpha ^ (a & b))


def test_alpha_uniform_fixed_inputs(rng):
    box = IdealAndBox(rng)
    n = 10_000
    mean = np.mean([box.call(1, 1)[0] for _ in range(n)])
    assert abs(mean - 0.5) <= 3 * 0.5 / np.sqrt(n)
    assert box.calls == n


def test_rejects_non_bits(rng):
    with pytest.raises(ValueError):
        IdealAndBox(rng).call(2, 0)


def test_log_order_deterministic():
    a = IdealAndBox(np.random.default_rng(5))
    b = IdealAndBox(np.random.default_rng(5))
    for x in (0, 1, 1, 0):
        a.call(x, 1)
        b.call(x, 1)
    assert a.log == b.log
    assert [r.call_id for r in a.log] == [0, 1, 2, 3]


def test_one_call_per_r_gate():
    checks = andbox_suite(calls=2000, programs=10)
    assert all(c.passed for c in checks), [c.line() for c in checks]
