"""One test per acceptance criterion; criterion 3 is split per extremum.

Tolerances live in boolcov.verification and are not relaxed here. The
Monte Carlo criteria use 10^4 replicates and are marked ``slow``.
"""

import time

import pytest

from boolcov import verification as V
from conftest import record


def _run(number: int, **kw):
    res = V.CRITERIA[number](**kw)
    record(number, res)
    bad = [c for c in res.checks if not c.ok]
    assert not bad, "\n".join(f"{c.label}: measured {c.measured!r}, expected {c.expected}" for c in bad)


def test_criterion_01_sigma01_zero():
    _run(1)


def test_criterion_02_sigma02_sigma12_zeros():
    _run(2)


@pytest.mark.parametrize("target", V.EXTREMA_TARGETS, ids=[t[1].replace(" ", "_") for t in V.EXTREMA_TARGETS])
def test_criterion_03_extremum(target):
    t0 = time.perf_counter()
    check = V.extremum_check(target)
    record(3, V.CriterionResult(3, "sigma01 and sigma02 extrema", [check], time.perf_counter() - t0))
    assert check.ok, f"{check.label}: measured {check.measured!r}, expected {check.expected}"


def test_criterion_04_correlation_limit():
    _run(4)


def test_criterion_05_internal_consistency():
    _run(5)


def test_criterion_06_positive_definite():
    _run(6)


@pytest.mark.slow
def test_criterion_07_volume_variance_mc():
    _run(7)


@pytest.mark.slow
def test_criterion_08_finite_window_mc():
    _run(8)


def test_criterion_09_rate():
    _run(9)


@pytest.mark.slow
def test_criterion_10_clt():
    _run(10)


@pytest.mark.slow
def test_criterion_11_one_dimensional():
    _run(11)


def test_criterion_12_disk_union():
    _run(12)


def test_criterion_13_figures(tmp_path):
    _run(13, out_dir=tmp_path)
