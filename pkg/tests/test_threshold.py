import itertools
from types import SimpleNamespace

import pytest
from hypothesis import given, strategies as st

from mecsim.domain import Task, Urgency
from mecsim.threshold import Reason, decide


def task(mem, work):
    return Task(0, mem, work, Urgency.NORMAL, 3, 1000, 0)


def executor(mem, budget):
    return SimpleNamespace(mem_avail_mb=mem, exec_budget=budget)


def test_500mb_job_on_750mb_device():
    d = decide(task(500, 5), executor(750, 10))
    assert d.o == 1 and d.reason is Reason.FEASIBLE


def test_memory_violation():
    d = decide(task(800, 5), executor(750, 10))
    assert d.o == 0 and d.reason is Reason.MEM_INFEASIBLE


def test_budget_violation():
    d = decide(task(500, 11), executor(750, 10))
    assert d.o == 0 and d.reason is Reason.BUDGET_INFEASIBLE


def test_both_bounds_inclusive():
    assert decide(task(750, 10), executor(750, 10)).o == 1


@pytest.mark.parametrize("mem_ok, budget_ok", list(itertools.product([True, False], repeat=2)))
def test_truth_table(mem_ok, budget_ok):
    t = task(500, 5)
    ex = executor(500 if mem_ok else 499, 5 if budget_ok else 4.999)
    assert decide(t, ex).o == int(mem_ok and budget_ok)


positive = st.floats(0.001, 1e5)


@given(positive, positive, positive, positive, st.floats(0, 1e4), st.floats(0, 1e4))
def test_more_capacity_never_revokes(mem, work, m_d, e_d, extra_m, extra_e):
    before = decide(task(mem, work), executor(m_d, e_d))
    after = decide(task(mem, work), executor(m_d + extra_m, e_d + extra_e))
    assert after.o >= before.o
    assert (before.o == 1) == (before.reason is Reason.FEASIBLE)
