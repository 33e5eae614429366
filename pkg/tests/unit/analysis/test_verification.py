"""
Tests for the randomized property suites.
"""

import numpy as np
import pytest

from ctnet.analysis.verification import (
    SUITES,
    CaseResult,
    VerifyReport,
    check_gradients,
    run_suite,
)
from ctnet.core.autograd import functional as F
from ctnet.error_handling import ConfigInvalid


@pytest.mark.unit
class TestCaseResult:
    """Pass/fail of single cases."""

    def test_within_tolerance(self):
        assert CaseResult(index=0, seed=1, label="x", max_error=1e-12, tolerance=1e-10).passed

    def test_nan_fails(self):
        assert not CaseResult(index=0, seed=1, label="x", max_error=float("nan"), tolerance=1.0).passed

    def test_render_lists_replay_seeds(self):
        report = VerifyReport(
            suite="equivalence",
            seed=7,
            trials=2,
            cases=[
                CaseResult(index=0, seed=7, label="a", max_error=0.0, tolerance=1e-10),
                CaseResult(index=1, seed=8, label="b", max_error=1.0, tolerance=1e-10),
            ],
        )
        assert not report.passed
        assert [c.seed for c in report.failures] == [8]
        assert "--seed in {8}" in report.render()


@pytest.mark.unit
class TestCheckGradients:
    """Finite-difference comparison on a single primitive."""

    def test_sigmoid(self, rng):
        err = check_gradients(F.sigmoid, [rng.standard_normal((2, 3, 2, 2, 2))], rng)
        assert err < 1e-6

    def test_wrong_gradient_is_caught(self, rng):
        def leaky(x):
            # backward treats this as identity, forward doubles
            return F.scale(x, 2.0) if isinstance(x, np.ndarray) else x

        err = check_gradients(leaky, [rng.standard_normal((2, 3))], rng)
        assert err > 0.1


@pytest.mark.unit
class TestSuites:
    """Each suite passes and replays deterministically."""

    def test_equivalence(self):
        report = run_suite("equivalence", seed=42, trials=5)
        assert report.passed, report.render()
        assert [c.seed for c in report.cases] == [42, 43, 44, 45, 46]

    def test_replay_single_case(self):
        full = run_suite("equivalence", seed=42, trials=4)
        replay = run_suite("equivalence", seed=44, trials=1)
        assert replay.cases[0].label == full.cases[2].label
        assert replay.cases[0].max_error == full.cases[2].max_error

    def test_equivalence_on_input_tensor(self, rng):
        x = rng.standard_normal((1, 6, 3, 4, 4))
        report = run_suite("equivalence", seed=1, trials=1, input_tensor=x)
        assert len(report.cases) == 2
        assert report.cases[-1].label.startswith("input")
        assert report.passed

    def test_degenerate(self):
        report = run_suite("degenerate", seed=0, trials=5)
        assert report.passed, report.render()
        labels = [c.label.split()[0] for c in report.cases]
        assert labels == ["c3d", "r21d", "csn", "tsn", "ctnet"]

    def test_interaction(self):
        report = run_suite("interaction", seed=3, trials=3)
        assert report.passed, report.render()
        assert len(report.cases) == 3 + 5

    def test_gradients_primitives(self):
        report = run_suite("gradients", seed=0, trials=16)
        primitives = report.cases[:-1]
        assert all(c.passed for c in primitives), report.render()

    @pytest.mark.slow
    def test_gradients_network(self):
        report = run_suite("gradients", seed=42, trials=1)
        assert report.cases[-1].label == "toy network end to end"
        assert report.passed, report.render()

    def test_unknown_suite(self):
        with pytest.raises(ConfigInvalid):
            run_suite("bogus")

    def test_trials_must_be_positive(self):
        with pytest.raises(ConfigInvalid):
            run_suite("equivalence", trials=0)

    def test_suite_names(self):
        assert SUITES == ("equivalence", "gradients", "degenerate", "interaction")
