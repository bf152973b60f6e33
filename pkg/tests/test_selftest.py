"""Exact-tier invariant suites and sign-error injection."""

import numpy as np
import pytest

from spinsurf import clifford as cl
from spinsurf.selftest import (
    SUITES,
    Suite,
    algebra_suite,
    catalog_suite,
    isomorphism_suite,
    run_selftest,
    spinor_suite,
)


@pytest.fixture(scope="module")
def clean():
    return run_selftest()


class TestSuite:
    def test_max_is_kept(self):
        s = Suite("x", 1e-12)
        s.add("a", 1e-14)
        s.add("a", 1e-13)
        s.add("a", 1e-15)
        assert s.checks["a"] == 1e-13
        assert s.passed

    def test_override_and_nan(self):
        s = Suite("x", 1e-12)
        s.add("loose", 1e-8, tol=1e-6)
        assert s.ok("loose")
        s.add("bad", float("nan"))
        assert not s.passed
        assert s.to_dict()["failed"] == ["bad"]


class TestCleanRun:
    def test_all_pass(self, clean):
        report, seconds = clean
        assert report["passed"]
        assert report["injected_sign_error"] is None
        assert set(report["suites"]) == set(SUITES)
        for suite in report["suites"].values():
            assert suite["max_residual"] <= 1e-12
            assert suite["failed"] == []

    def test_runtime(self, clean):
        assert sum(clean[1].values()) < 10.0

    @pytest.mark.parametrize(
        "name", ["jacobi", "torsion_free", "metric_compatible", "antisymmetry", "su12_collapse", "su12_equals_lkt"]
    )
    def test_catalog_checks_present(self, clean, name):
        assert name in clean[0]["suites"]["catalog"]["checks"]

    def test_deterministic(self, clean):
        again, _ = run_selftest()
        assert again == clean[0]

    @pytest.mark.parametrize("fn", [algebra_suite, isomorphism_suite, spinor_suite])
    def test_other_seeds(self, fn):
        assert fn(seed=7).passed


class TestInjection:
    @pytest.mark.parametrize("pair", [(1, 2), (1, 4), (2, 4), (3, 5)])
    def test_detected(self, pair):
        report, _ = run_selftest(inject=pair)
        assert not report["passed"]
        assert report["injected_sign_error"] == list(pair)
        assert report["suites"]["algebra"]["failed"]

    def test_restored_afterwards(self):
        before = cl.CL12.table.copy() if hasattr(cl.CL12, "table") else None
        run_selftest(inject=(1, 2))
        assert run_selftest()[0]["passed"]
        if before is not None:
            assert np.array_equal(before, cl.CL12.table)

    def test_catalog_unaffected_by_clifford_table(self):
        with cl.inject_sign_error(cl.CL12, 1, 2):
            assert catalog_suite().passed
