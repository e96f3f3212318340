"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to watch the lines, or
via the CLI: `passivelsm validate --suite all`.
"""

import json

import pytest

from passivelsm import validate


def _check(cid):
    result = validate.CRITERIA[cid]()
    print()
    print(result.line())
    if not result.passed:
        print(json.dumps(result.measured, indent=2, default=str))
    assert result.passed, (
        f"criterion {cid} [{result.name}] failed: threshold '{result.threshold}', "
        f"measured {result.measured}"
    )


def test_criterion_01_special_functions():
    _check(1)


def test_criterion_02_forward_solver_vs_mie():
    _check(2)


def test_criterion_03_helmholtz_kirchhoff():
    _check(3)


def test_criterion_04_bridge_cross_correlation():
    _check(4)


def test_criterion_05_quadrature_rate():
    _check(5)


def test_criterion_06_beta_degradation():
    _check(6)


def test_criterion_07_morozov():
    _check(7)


def test_criterion_08_svd():
    _check(8)


def test_criterion_09_reconstruction_contrast():
    _check(9)


def test_criterion_10_point_scatterers():
    _check(10)


def test_criterion_11_second_setup():
    _check(11)


def test_criterion_12_wavenumber_scaling():
    _check(12)


def test_criterion_13_determinism():
    _check(13)
