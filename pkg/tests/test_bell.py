import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from oambell.bell import (
    TSIRELSON,
    CoincidenceCurve,
    CorrelationMode,
    CurveKind,
    FourSettingProbabilities,
    beats_communication_bound,
    correlation_chsh,
    correlation_correct,
    correlation_curve,
    default_grid,
    dimensionality,
    fidelity,
    four_setting_probabilities,
    probability_curve,
    s_max,
    s_scan,
    s_value,
    scan_report,
)
from oambell.hilbert import AnalyzerSpec, SpectrumModel

EQ1, EQ2 = CorrelationMode.CORRECT_EQ1, CorrelationMode.CHSH_EQ2
GRID = default_grid()
RAW = oracles.RAW_PAPER
NORM = oracles.normalized(RAW)
weights = st.one_of(st.just(0.0), st.floats(1e-6, 10))  # no subnormals: they underflow on rescaling


def probs(p):
    return FourSettingProbabilities(*p)


class TestFourSettingProbabilities:
    @pytest.mark.parametrize("d", [0, math.pi / 8, math.pi / 6, math.pi / 2, -1.1])
    def test_matches_closed_form(self, paper_spec, ideal, d):
        p = four_setting_probabilities(ideal, paper_spec, d, 0)
        assert p.pp == pytest.approx(oracles.probability(NORM, d), abs=1e-12)
        assert p.tt == pytest.approx(oracles.probability(NORM, d), abs=1e-12)
        assert p.pt == pytest.approx(oracles.perp_probability(NORM, d), abs=1e-12)
        assert p.tp == pytest.approx(oracles.perp_probability(NORM, d), abs=1e-12)

    def test_paper_peak(self, paper_spec, ideal):
        p = four_setting_probabilities(ideal, paper_spec, 0, 0)
        assert p.pp == pytest.approx(0.2429, abs=5e-4)
        assert p.pt < 1e-12 and p.tp < 1e-12

    @pytest.mark.parametrize(
        "func, d, quoted, tol",
        [
            (oracles.probability, 0, 0.2423, 5e-4),
            (oracles.probability, math.pi / 8, 0.2301, 5e-4),
            (oracles.perp_probability, math.pi / 8, 0.0071, 5e-4),
            (oracles.e_correct, math.pi / 8, 0.4461, 1e-3),
            (oracles.e_correct, math.pi / 2, -0.4845, 1e-3),
        ],
    )
    def test_quoted_values_use_published_coefficients(self, func, d, quoted, tol):
        # these reference numbers follow from b as printed (sum |b|^2 = 0.998)
        assert func(RAW, d) == pytest.approx(quoted, abs=tol)

    @given(st.floats(-4, 4))
    def test_alpha_one(self, d):
        spec, spectrum = AnalyzerSpec.single(1), SpectrumModel.paper_ideal([1])
        p = four_setting_probabilities(spectrum, spec, d, 0)
        c2, s2 = math.cos(d) ** 2 / 2, math.sin(d) ** 2 / 2
        assert np.allclose([p.pp, p.pt, p.tp, p.tt], [c2, s2, s2, c2], atol=1e-12)

    def test_rejects_even_multi_term_spec(self, ideal):
        with pytest.raises(ValueError):
            four_setting_probabilities(ideal, AnalyzerSpec.from_coefficients({1: 1, 2: 1}), 0, 0)

    def test_postselection_loss_under_unit_norm_spectrum(self, paper_spec, flat):
        for d in np.linspace(-1.5, 1.5, 31):
            assert four_setting_probabilities(flat, paper_spec, d, 0).total <= 1 + 1e-9

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            probs((0.1, -0.1, 0, 0))


class TestCorrelations:
    def test_correct_at_pi_over_8(self, paper_spec, ideal):
        e = correlation_correct(four_setting_probabilities(ideal, paper_spec, math.pi / 8, 0))
        assert e == pytest.approx(oracles.e_correct(NORM, math.pi / 8), abs=1e-12)
        assert e == pytest.approx(0.4472, abs=1e-3)

    def test_correct_at_pi_over_2(self, paper_spec, ideal):
        e = correlation_correct(four_setting_probabilities(ideal, paper_spec, math.pi / 2, 0))
        assert e == pytest.approx(oracles.e_correct(NORM, math.pi / 2), abs=1e-12)

    @given(st.floats(-4, 4))
    def test_alpha_one_correct_is_cos_2d(self, d):
        spec, spectrum = AnalyzerSpec.single(1), SpectrumModel.paper_ideal([1])
        e = correlation_correct(four_setting_probabilities(spectrum, spec, d, 0))
        assert e == pytest.approx(math.cos(2 * d), abs=1e-12)

    @pytest.mark.parametrize("p, expected", [((0.5, 0, 0, 0.5), 1), ((0.25,) * 4, 0), ((0, 1, 1, 0), -1)])
    def test_chsh_trivial(self, p, expected):
        assert correlation_chsh(probs(p)) == expected

    def test_chsh_at_pi_over_6(self, paper_spec, ideal):
        e = correlation_chsh(four_setting_probabilities(ideal, paper_spec, math.pi / 6, 0))
        assert e == pytest.approx(oracles.e_chsh(NORM, math.pi / 6), abs=1e-12)
        assert e == pytest.approx(0.998, abs=2e-3)

    def test_chsh_needs_events(self):
        with pytest.raises(ValueError, match="no detected events"):
            correlation_chsh(probs((0, 0, 0, 0)))

    @given(weights, weights, weights, weights, st.sampled_from([1e-3, 1.0, 1e3]))
    def test_chsh_scale_invariance_and_bound(self, a, b, c, d, lam):
        p = probs((a, b, c, d))
        if p.total == 0:
            return
        e = correlation_chsh(p)
        assert abs(e) <= 1
        assert correlation_chsh(p.scaled(lam)) == pytest.approx(e, abs=1e-12)


class TestSValue:
    @pytest.mark.parametrize(
        "e, s",
        [((1, -1, 1, 1), 4), ((1 / math.sqrt(2), -1 / math.sqrt(2), 1 / math.sqrt(2), 1 / math.sqrt(2)), TSIRELSON), ((0,) * 4, 0)],
    )
    def test_examples(self, e, s):
        assert s_value(e) == pytest.approx(s, abs=1e-12)

    @given(st.tuples(*[st.floats(-1, 1)] * 4))
    def test_algebraic_bound(self, e):
        assert s_value(e) <= 4


class TestScan:
    def test_eq2_at_pi_over_6(self, paper_spec, ideal):
        report = scan_report(ideal, paper_spec, math.pi / 6, EQ2)
        oracle = oracles.s_scan(oracles.e_chsh, NORM, math.pi / 6)
        assert report.s == pytest.approx(oracle, abs=1e-12)
        assert report.s == pytest.approx(3.994, abs=5e-3)

    def test_eq1_at_pi_over_8(self, paper_spec, ideal):
        report = scan_report(ideal, paper_spec, math.pi / 8, EQ1)
        assert report.s == pytest.approx(oracles.s_scan(oracles.e_correct, NORM, math.pi / 8), abs=1e-12)
        assert report.s == pytest.approx(1.784, abs=5e-3)

    @pytest.mark.parametrize("mode", [EQ1, EQ2])
    def test_alpha_one_reaches_tsirelson(self, alpha1, ideal1, mode):
        assert scan_report(ideal1, alpha1, math.pi / 8, mode).s == pytest.approx(TSIRELSON, abs=1e-9)

    @pytest.mark.parametrize("mode, oracle", [(EQ1, oracles.e_correct), (EQ2, oracles.e_chsh)])
    def test_scan_matches_closed_form(self, paper_spec, ideal, mode, oracle):
        curve = s_scan(ideal, paper_spec, GRID, mode)
        assert curve.kind is CurveKind.S_SCAN
        assert np.max(np.abs(curve.values - oracles.s_scan(oracle, NORM, GRID))) < 1e-12

    @pytest.mark.parametrize("mode", [EQ1, EQ2])
    def test_correlation_is_even(self, paper_spec, ideal, mode):
        e = correlation_curve(ideal, paper_spec, GRID[1:], mode).values
        assert np.max(np.abs(e - e[::-1])) < 1e-12

    def test_modes_agree_for_single_ell(self, ideal1, alpha1):
        p = np.array([four_setting_probabilities(ideal1, alpha1, d, 0).total for d in GRID])
        assert np.ptp(p) < 1e-12
        e1 = correlation_curve(ideal1, alpha1, GRID, EQ1).values / p[0]
        e2 = correlation_curve(ideal1, alpha1, GRID, EQ2).values
        assert np.max(np.abs(e1 - e2)) < 1e-9

    def test_modes_disagree_for_paper_spec(self, paper_spec, ideal):
        s1 = s_scan(ideal, paper_spec, GRID, EQ1).values
        s2 = s_scan(ideal, paper_spec, GRID, EQ2).values
        assert np.max(np.abs(s2 - s1)) > 1

    def test_report_is_recomputable(self, paper_spec, ideal):
        report = scan_report(ideal, paper_spec, 0.3, EQ2)
        assert report.recomputed_s() == pytest.approx(report.s, abs=1e-12)
        assert any("angle" in note for note in report.notes)
        assert report.convention.value == "paper-ideal"


class TestSMax:
    def test_eq2(self, paper_spec, ideal):
        report = s_max(ideal, paper_spec, EQ2)
        assert report.s == pytest.approx(3.99, abs=0.01)
        assert report.recomputed_s() == pytest.approx(report.s, abs=1e-12)

    def test_eq1(self, paper_spec, ideal):
        assert s_max(ideal, paper_spec, EQ1).s == pytest.approx(1.79, abs=0.01)

    def test_general_search_not_below_scan(self, paper_spec, ideal):
        for mode in (EQ1, EQ2):
            scan_best = s_scan(ideal, paper_spec, GRID, mode).values.max()
            assert s_max(ideal, paper_spec, mode).s >= scan_best - 1e-9

    def test_alpha_one(self, alpha1, ideal1):
        report = s_max(ideal1, alpha1, EQ2)
        assert report.s == pytest.approx(TSIRELSON, abs=1e-6)
        assert report.fidelity == pytest.approx(0.8536, abs=1e-4)

    @pytest.mark.parametrize("ell", [1, 2, 3, 4, 5])
    @pytest.mark.parametrize("mode", [EQ1, EQ2])
    def test_single_ell_respects_tsirelson(self, ell, mode):
        report = s_max(SpectrumModel.paper_ideal([ell]), AnalyzerSpec.single(ell), mode)
        assert report.s <= TSIRELSON + 1e-6


class TestFidelity:
    @pytest.mark.parametrize("s, f", [(4, 1.0), (3.99, 0.99875), (TSIRELSON, 0.8536)])
    def test_values(self, s, f):
        assert fidelity(s) == pytest.approx(f, abs=1e-4)

    @pytest.mark.parametrize("s", [-0.1, 4.01])
    def test_domain(self, s):
        with pytest.raises(ValueError):
            fidelity(s)

    def test_threshold(self):
        assert beats_communication_bound(fidelity(3.99))
        assert not beats_communication_bound(fidelity(TSIRELSON))


class TestDimensionality:
    def test_cos_squared(self):
        curve = CoincidenceCurve(CurveKind.PROBABILITY, GRID, np.cos(GRID) ** 2)
        assert dimensionality(curve) == pytest.approx(2.0, abs=1e-6)

    def test_paper_curve(self, paper_spec, ideal):
        d = dimensionality(probability_curve(ideal, paper_spec, GRID))
        p = oracles.probability(NORM, GRID)
        assert d == pytest.approx(p.max() / p.mean(), abs=1e-12)
        assert d == pytest.approx(2.215, abs=0.01)

    def test_constant(self):
        assert dimensionality(CoincidenceCurve(CurveKind.PROBABILITY, GRID, np.full_like(GRID, 0.3))) == pytest.approx(1)

    def test_zero_curve(self):
        with pytest.raises(ValueError):
            dimensionality(CoincidenceCurve(CurveKind.PROBABILITY, GRID, np.zeros_like(GRID)))


class TestCoincidenceCurve:
    def test_rejects_unsorted_grid(self):
        with pytest.raises(ValueError):
            CoincidenceCurve(CurveKind.PROBABILITY, [0, 0.2, 0.1], [1, 2, 3])

    def test_argmax_prefers_smallest_positive(self):
        x = np.array([-0.5, -0.2, 0.2, 0.5])
        curve = CoincidenceCurve(CurveKind.S_SCAN, x, np.array([3.0, 3.0, 3.0, 3.0]))
        assert curve.argmax() == (0.2, 3.0)
