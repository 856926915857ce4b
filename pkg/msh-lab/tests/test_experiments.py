"""Tests for the experiment context and the cheaper experiment runners."""

import pytest

from lab.config_loader import validate_config
from lab.errors import ConstraintError
from lab.experiments import FULL_SUITE, ExperimentContext, Outcome, phases, runner_for
from lab.experiments.weight_checks import run_expansion, run_infrastructure, run_minimal, run_verify_weights
from lab.output.report_writer import Provenance, RunReport

HASH = "0" * 64


def make_context(overrides=None, experiment="minimal"):
    config = validate_config({"experiment": experiment, "performance": {"threads": 2}, **(overrides or {})})
    return ExperimentContext(config, RunReport(experiment, HASH, config.seed), experiment=experiment)


class TestPhases:
    def test_full_suite(self):
        assert phases("full-suite") == FULL_SUITE
        assert FULL_SUITE[-1] == "infrastructure"
        assert len(FULL_SUITE) == 9

    def test_single(self):
        assert phases("siu") == ["siu"]
        assert runner_for("minimal") is run_minimal
        assert runner_for("infrastructure") is run_infrastructure

    def test_unknown(self):
        with pytest.raises(KeyError):
            phases("everything")


class TestContext:
    def test_library_errors_become_failed_records(self):
        ctx = make_context()

        def broken() -> Outcome:
            raise ConstraintError("delta too small")

        record = ctx.check("broken", "claim", Provenance.DERIVED, broken)
        assert not record.passed
        assert "ConstraintError" in record.note
        assert ctx.report.records == [record]

    def test_other_errors_propagate(self):
        ctx = make_context()

        def crash() -> Outcome:
            raise RuntimeError("bug")

        with pytest.raises(RuntimeError):
            ctx.check("crash", "claim", Provenance.DERIVED, crash)

    def test_informational(self):
        ctx = make_context()
        ctx.check("info", "claim", Provenance.DERIVED, lambda: Outcome(False, {}, {}), informational=True)
        assert ctx.report.passed

    def test_seeds_are_stable(self):
        a, b = make_context(), make_context()
        assert a.seed_for("probe") == b.seed_for("probe")
        assert a.seed_for("probe") != a.seed_for("scan")
        other = make_context({"seed": 1})
        assert other.seed_for("probe") != a.seed_for("probe")

    def test_tube_params(self):
        params = make_context({"lelong": {"mc_samples": 64}}).tube_params(strata=2)
        assert params.samples_per_stratum == 64
        assert params.strata == 2
        assert params.threads == 2

    def test_calibration_is_memoized(self):
        ctx = make_context()
        model = ctx.model()
        assert ctx.calibration(model) is ctx.calibration(model)


class TestRunners:
    def test_minimal(self):
        ctx = make_context()
        run_minimal(ctx)
        names = [r.name for r in ctx.report.records]
        assert names == ["minimal-harmonic-kappa3", "minimal-harmonic-kappa4", "minimal-perturbed-control"]
        assert ctx.report.passed

    def test_expansion(self):
        ctx = make_context({"expansion": {"tuples": [[2, 1, 3.0], [3, 2, 2.0]]}}, "expansion")
        run_expansion(ctx)
        assert len(ctx.report.records) == 2 * 2 * 2
        assert ctx.report.passed, [r.name for r in ctx.report.failures]
        assert "expansion-k2_m1_d3-e0-A+1" in {r.name for r in ctx.report.records}
        rows = ctx.report.artifacts["expansion_residuals"]
        assert len(rows) == 8 * 48

    def test_verify_weights(self):
        ctx = make_context(
            {"weights": {"tuples": [[2, 2, 2.0], [3, 2, 2.0]], "maximal_pairs": [[2, 1], [3, 2]]}},
            "verify-weights",
        )
        run_verify_weights(ctx)
        assert ctx.report.passed, [(r.name, r.note) for r in ctx.report.failures]
        assert "certificate_sub_k3_m2_d2" in ctx.report.artifacts
        assert "maximal_ode_k2_m1" in ctx.report.artifacts

    @pytest.mark.slow
    def test_infrastructure(self):
        ctx = make_context(experiment="full-suite")
        run_infrastructure(ctx)
        assert {r.name for r in ctx.report.records} == {
            "sigma-minors-oracle", "fd-hessian-radial-pole", "fd-hessian-order", "thread-reproducibility",
        }
        assert ctx.report.passed, [r.name for r in ctx.report.failures]

    @pytest.mark.slow
    def test_localize(self):
        ctx = make_context(
            {
                "localize": {"torus_points": 4, "sphere_points": 4, "probes": 2, "min_relation_per_dim": 4, "explore_nu": False},
                "reltype": {"torus_per_dim": 4, "sphere_points": 4},
            },
            "localize",
        )
        runner_for("localize")(ctx)
        names = {r.name for r in ctx.report.records}
        for tag in ("k2_m1_nu1.5", "k2_m2_nu0.75"):
            for check in ("construction", "reltype", "lelong", "sublevel", "polar-density", "bound", "min-relation"):
                assert f"localize-{check}-{tag}" in names
        failures = [(r.name, r.measured, r.note) for r in ctx.report.failures]
        assert ctx.report.passed, failures
        assert all(r.name.startswith("localize-") for r in ctx.report.records)
