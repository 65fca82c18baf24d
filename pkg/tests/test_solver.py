import csv

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from oracles import naive_energy, naive_step
from vofdenoise.coefficients import CoeffConfig, uniform_pair_field
from vofdenoise.filters import gabor_bank
from vofdenoise.solver import (
    IterationRecord,
    SolverConfig,
    discrete_energy,
    run,
    sign0,
    step_aa,
    step_f1p_aa,
    step_vo_f1l,
    step_vo_fpl,
    tv_curvature,
)

BANK = gabor_bank(4, 8, radius=9)


def two_pixel(p=1.0):
    # 1x2 image, eta=1: the only neighbor is at unit distance so w == 1
    return uniform_pair_field((1, 2), eta=1, s=0.5, k=1.0, p=p)


class TestSign0:
    def test_values(self):
        assert sign0(np.array([-3.0, 0.0, 2.0])).tolist() == [-1.0, 0.0, 1.0]
        assert sign0(-0.0) == 0.0


class TestVoF1L:
    def test_two_pixel_example(self):
        out = step_vo_f1l(np.array([[0.0, 10.0]]), two_pixel(), 0.5)
        assert out.tolist() == [[0.5, 9.5]]

    def test_constant_fixed_point(self):
        u = np.full((9, 9), 42.0)
        pf = uniform_pair_field(u.shape)
        assert np.array_equal(step_vo_f1l(u, pf, 0.5), u)

    def test_matches_oracle(self, rng):
        u = rng.uniform(0, 255, (9, 11))
        pf = uniform_pair_field(u.shape, eta=2, s=0.7)
        assert np.array_equal(step_vo_f1l(u, pf, 0.3), naive_step(u, pf, 0.3))

    def test_rejects_p_weights(self):
        with pytest.raises(ValueError, match="p="):
            step_vo_f1l(np.zeros((3, 3)), uniform_pair_field((3, 3), eta=1, p=1.5), 0.1)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="shape"):
            step_vo_f1l(np.zeros((3, 3)), uniform_pair_field((4, 4), eta=1), 0.1)

    def test_increment_is_bounded_by_weight_sum(self, rng):
        u = rng.uniform(0, 255, (12, 12))
        pf = uniform_pair_field(u.shape)
        out = step_vo_f1l(u, pf, 0.5)
        assert np.all(np.abs(out - u) <= 0.5 * pf.weight_sum() + 1e-12)


class TestVoFpL:
    def test_two_pixel_p2(self):
        out = step_vo_fpl(np.array([[0.0, 10.0]]), two_pixel(2.0), 0.1, 2.0)
        assert out == pytest.approx(np.array([[1.0, 9.0]]), abs=1e-12)

    def test_constant_fixed_point(self):
        u = np.full((7, 7), 3.0)
        pf = uniform_pair_field(u.shape, p=1.5)
        assert np.array_equal(step_vo_fpl(u, pf, 0.2, 1.5), u)

    @pytest.mark.parametrize("p", [1.5, 2.0])
    def test_matches_oracle(self, rng, p):
        u = rng.uniform(0, 255, (8, 8))
        pf = uniform_pair_field(u.shape, eta=3, s=0.6, p=p)
        assert np.array_equal(step_vo_fpl(u, pf, 0.01, p), naive_step(u, pf, 0.01, p))

    @pytest.mark.parametrize("p", [1.0, 2.5])
    def test_rejects_p_out_of_range(self, p):
        with pytest.raises(ValueError):
            step_vo_fpl(np.zeros((3, 3)), uniform_pair_field((3, 3), eta=1), 0.1, p)

    def test_rejects_weights_for_other_p(self):
        with pytest.raises(ValueError):
            step_vo_fpl(np.zeros((3, 3)), uniform_pair_field((3, 3), eta=1, p=2.0), 0.1, 1.5)


class TestF1PAA:
    def test_single_pixel_example(self):
        pf = uniform_pair_field((1, 1), eta=1)
        out = step_f1p_aa(np.array([[50.0]]), pf, 0.5, 1.0, np.array([[100.0]]))
        assert out[0, 0] == pytest.approx(50.01, abs=1e-12)

    def test_lambda_zero_reduces(self, rng):
        u = rng.uniform(1, 255, (8, 8))
        pf = uniform_pair_field(u.shape, eta=2)
        f = rng.uniform(1, 255, u.shape)
        assert np.array_equal(step_f1p_aa(u, pf, 0.3, 0.0, f), step_vo_f1l(u, pf, 0.3))

    def test_source_vanishes_when_u_equals_f(self, rng):
        u = rng.uniform(1, 255, (8, 8))
        pf = uniform_pair_field(u.shape, eta=1)
        assert np.array_equal(step_f1p_aa(u, pf, 0.3, 50.0, u.copy()), step_vo_f1l(u, pf, 0.3))

    def test_floor_guards_zero(self):
        pf = uniform_pair_field((1, 1), eta=1)
        out = step_f1p_aa(np.array([[0.0]]), pf, 0.5, 1.0, np.array([[1e-7]]), u_floor=1e-3)
        assert np.isfinite(out).all()


class TestAA:
    def test_constant_fixed_point(self):
        u = np.full((6, 6), 10.0)
        assert np.array_equal(step_aa(u, 0.1, 0.0, u), u)
        assert np.array_equal(step_aa(u, 0.1, 5.0, u), u)

    def test_linear_ramp_interior_unchanged(self):
        u = np.tile(np.arange(10.0)[:, None], (1, 8))
        out = step_aa(u, 0.1, 0.0, u)
        assert np.allclose(out[1:-1, 1:-1], u[1:-1, 1:-1], rtol=0, atol=1e-12)

    def test_curvature_conserves_mass(self, rng):
        u = rng.uniform(0, 255, (15, 13))
        assert abs(tv_curvature(u, 1e-3).sum()) < 1e-9

    def test_curvature_is_bounded(self, rng):
        # each face flux has magnitude < 1 so the divergence is within [-4, 4]
        u = rng.uniform(0, 255, (10, 10))
        assert np.abs(tv_curvature(u, 1e-3)).max() <= 4.0


class TestEnergy:
    def test_examples(self):
        assert discrete_energy(np.array([[0.0, 10.0]]), two_pixel()) == 10.0
        assert discrete_energy(np.full((5, 5), 7.0), uniform_pair_field((5, 5))) == 0.0

    def test_positive_on_nonconstant(self, rng):
        u = rng.uniform(0, 1, (6, 6))
        assert discrete_energy(u, uniform_pair_field(u.shape)) > 0

    @pytest.mark.parametrize("p", [1.0, 1.5, 2.0])
    def test_matches_oracle(self, rng, p):
        u = rng.uniform(0, 255, (7, 9))
        pf = uniform_pair_field(u.shape, eta=2, s=0.8, p=p)
        assert discrete_energy(u, pf) == pytest.approx(naive_energy(u, pf), rel=1e-12)

    def test_step_does_not_increase_energy_p2(self, rng):
        # for p = 2 the explicit step is gradient descent on the energy
        u = rng.uniform(0, 255, (10, 10))
        pf = uniform_pair_field(u.shape, eta=1, p=2.0)
        tau = 0.9 / (2 * pf.weight_sum().max())
        assert discrete_energy(step_vo_fpl(u, pf, tau, 2.0), pf) < discrete_energy(u, pf)


image_8x8 = arrays(np.float64, (8, 8), elements=st.floats(0, 255))


@settings(max_examples=40, deadline=None)
@given(image_8x8)
def test_step_preserves_mean_and_extremum_signs(u):
    pf = uniform_pair_field(u.shape, eta=2)
    out = step_vo_f1l(u, pf, 0.5)
    delta = out - u
    assert abs(out.mean() - u.mean()) <= 1e-9
    assert delta.flat[np.argmax(u)] <= 0.0
    assert delta.flat[np.argmin(u)] >= 0.0


@settings(max_examples=40, deadline=None)
@given(image_8x8, st.floats(-100, 100))
def test_p2_step_is_translation_equivariant(u, c):
    pf = uniform_pair_field(u.shape, eta=1, p=2.0)
    a = step_vo_fpl(u + c, pf, 0.05, 2.0)
    b = step_vo_fpl(u, pf, 0.05, 2.0) + c
    assert np.allclose(a, b, rtol=0, atol=1e-9)


class TestRun:
    def noisy(self, rng, size=24):
        clean = np.full((size, size), 100.0)
        clean[size // 4 : 3 * size // 4, size // 4 : 3 * size // 4] = 180.0
        return clean, clean * rng.gamma(4.0, 0.25, clean.shape)

    def test_max_psnr_returns_best_iterate(self, rng):
        clean, f = self.noisy(rng)
        cfg = SolverConfig(max_iters=80, patience=3)
        rep = run(f, cfg, CoeffConfig(), BANK, clean, looks=4)
        assert rep.records[0].iter == 0
        assert rep.records[0].psnr == pytest.approx(
            10 * np.log10(255**2 / np.mean((f - clean) ** 2)), rel=1e-12
        )
        psnrs = [r.psnr for r in rep.records]
        assert rep.best_iter == int(np.argmax(psnrs))
        assert rep.best.psnr > rep.records[0].psnr
        if rep.stop_reason == "patience":
            assert rep.stopped_at == rep.best_iter + 3
        assert len(rep.records) == rep.stopped_at + 1

    def test_fixed_iters(self, rng):
        _, f = self.noisy(rng, 12)
        rep = run(f, SolverConfig(max_iters=7, stop_policy="fixed_iters"), CoeffConfig(), BANK)
        assert rep.stopped_at == 7 and rep.best_iter == 7
        assert rep.stop_reason == "max_iters"
        assert rep.records[0].psnr is None and rep.records[0].ssim is None

    def test_constant_input_converges_immediately(self):
        f = np.full((10, 10), 50.0)
        rep = run(f, SolverConfig(stop_policy="mean_change"), CoeffConfig(), BANK)
        assert rep.stopped_at == 1
        assert rep.stop_reason == "converged"
        assert np.array_equal(rep.final_image, f)

    def test_max_psnr_needs_reference(self):
        with pytest.raises(ValueError, match="reference"):
            run(np.ones((8, 8)), SolverConfig(), CoeffConfig(), BANK, model="aa")

    def test_vo_fpl_needs_p(self):
        with pytest.raises(ValueError, match="p"):
            run(np.ones((8, 8)), SolverConfig(stop_policy="fixed_iters"), CoeffConfig(), BANK, model="vo_fpl")

    def test_unknown_model(self):
        with pytest.raises(ValueError, match="model"):
            run(np.ones((8, 8)), SolverConfig(stop_policy="fixed_iters"), CoeffConfig(), BANK, model="nope")

    @pytest.mark.parametrize("model", ["vo_fpl", "f1p_aa", "aa"])
    def test_other_models_run(self, rng, model):
        clean, f = self.noisy(rng, 16)
        cfg = SolverConfig(max_iters=10, p=1.5, tau=0.05)
        rep = run(f, cfg, CoeffConfig(), BANK, clean, model=model, looks=4)
        assert rep.model == model
        assert np.isfinite(rep.final_image).all()

    def test_mass_is_recorded(self, rng):
        _, f = self.noisy(rng, 12)
        rep = run(f, SolverConfig(max_iters=5, stop_policy="fixed_iters"), CoeffConfig(), BANK)
        assert all(abs(r.mass - rep.records[0].mass) < 1e-10 for r in rep.records)

    def test_csv(self, rng, tmp_path):
        clean, f = self.noisy(rng, 16)
        rep = run(f, SolverConfig(max_iters=4, stop_policy="fixed_iters"), CoeffConfig(), BANK, clean)
        path = tmp_path / "iters.csv"
        rep.write_csv(path)
        raw = path.read_bytes()
        assert b"\r" not in raw
        rows = list(csv.reader(raw.decode().splitlines()))
        assert tuple(rows[0]) == IterationRecord.CSV_HEADER
        assert len(rows) == 6
        assert rows[1][0] == "0"
        assert len(rows[1][1].split(".")[1]) == 4

    def test_perfect_psnr_formats_as_label(self):
        rec = IterationRecord(0, float("inf"), 1.0, 1.0, 0.0, 2.0, 0.0)
        assert rec.csv_row()[1] == "identical"

    @pytest.mark.parametrize(
        "kwargs",
        [dict(tau=0), dict(max_iters=0), dict(stop_policy="x"), dict(p=1.0), dict(p=3.0), dict(lam=-1)],
    )
    def test_config_validation(self, kwargs):
        with pytest.raises(ValueError):
            SolverConfig(**kwargs)


def test_unstable_p2_tau_warns(caplog):
    f = np.tile(np.arange(12.0), (12, 1)) * 10
    cfg = SolverConfig(tau=0.5, p=2.0, max_iters=1, stop_policy="fixed_iters")
    with caplog.at_level("WARNING", logger="vofdenoise.solver"):
        run(f, cfg, CoeffConfig(a_mode="constant_one"), BANK, model="vo_fpl")
    assert "stability bound" in caplog.text
