import math

import numpy as np
import pytest

from fermigauss import (
    CLASS_C,
    CLASS_CI,
    CLASS_D,
    CLASS_DIII,
    ContractError,
    DomainError,
    RngSpec,
    WeightSpec,
    polar_decompose,
    sample_class_d,
    sample_class_d_batch,
    sample_haar_unitary,
    sample_haar_unitary_batch,
    sample_radial_mcmc,
    symmetry_class,
)


def chain_moment_se(run, f):
    """Mean and batch-means SE of f(lam_row) over an MCMC run, one batch per chain."""
    vals = np.array([f(row) for row in run.samples])
    per = run.per_chain
    chains = vals.reshape(run.chains, per).mean(axis=1)
    return float(chains.mean()), float(chains.std(ddof=1) / math.sqrt(run.chains))


class TestSymmetryClasses:
    def test_index_table(self):
        assert (CLASS_D.beta, CLASS_D.alpha) == (2, 0)
        assert (CLASS_C.beta, CLASS_C.alpha) == (2, 2)
        assert (CLASS_DIII.beta, CLASS_DIII.alpha) == (4, 1)
        assert (CLASS_CI.beta, CLASS_CI.alpha) == (1, 1)

    def test_lookup(self):
        assert symmetry_class("DIII") is CLASS_DIII
        with pytest.raises(DomainError):
            symmetry_class("A")


class TestRngSpec:
    def test_same_pair_reproduces_bits(self):
        a = RngSpec(123, 4).generator().normal(size=16)
        b = RngSpec(123, 4).generator().normal(size=16)
        assert np.array_equal(a, b)

    def test_streams_differ(self):
        a = RngSpec(123, 0).generator().normal(size=16)
        b = RngSpec(123, 1).generator().normal(size=16)
        assert not np.allclose(a, b)


class TestClassDSampler:
    def test_pairing_block_antisymmetric_exactly(self):
        bdg = sample_class_d(3, 1.0, RngSpec(1))
        assert np.array_equal(bdg.delta, -bdg.delta.T)
        assert np.array_equal(np.diag(bdg.delta), np.zeros(3))

    def test_determinism(self):
        a = sample_class_d(3, 2.0, RngSpec(5, 7))
        b = sample_class_d(3, 2.0, RngSpec(5, 7))
        assert np.array_equal(a.assembled(), b.assembled())

    def test_batch_matches_single(self):
        single = sample_class_d(2, 1.0, RngSpec(9)).assembled()
        batch = sample_class_d_batch(2, 1.0, RngSpec(9), 1)[0]
        assert np.array_equal(single, batch)

    def test_trace_square_moment(self):
        # E Tr[H^2] = M (2M - 1) / (2p) from the component variances
        n = 100_000
        for modes, p in [(1, 1.0), (2, 0.5)]:
            mats = sample_class_d_batch(modes, p, RngSpec(42), n)
            tr2 = np.einsum("sij,sij->s", mats, mats.conj()).real
            want = modes * (2 * modes - 1) / (2.0 * p)
            se = tr2.std(ddof=1) / math.sqrt(n)
            assert abs(tr2.mean() - want) < 5.0 * se
            assert se < 0.05 * want

    def test_invalid_p(self):
        with pytest.raises(DomainError):
            sample_class_d(2, 0.0, RngSpec(0))


class TestHaarSampler:
    def test_unitary_every_draw(self):
        us = sample_haar_unitary_batch(3, RngSpec(11), 100)
        res = np.abs(np.einsum("sij,skj->sik", us, us.conj()) - np.eye(3)).max()
        assert res < 1e-12

    def test_single_mode_phase_average(self):
        us = sample_haar_unitary_batch(1, RngSpec(12), 100_000)[:, 0, 0]
        se = us.real.std(ddof=1) / math.sqrt(us.size)
        assert abs(us.real.mean()) < 5 * se
        assert abs(us.imag.mean()) < 5 * se
        assert np.abs(np.abs(us) - 1.0).max() < 1e-12

    def test_first_moment_at_two_modes(self):
        us = sample_haar_unitary_batch(2, RngSpec(13), 100_000)
        x = np.abs(us[:, 0, 0]) ** 2
        se = x.std(ddof=1) / math.sqrt(x.size)
        assert abs(x.mean() - 0.5) < 5 * se

    def test_determinism(self):
        assert np.array_equal(
            sample_haar_unitary(3, RngSpec(2, 3)), sample_haar_unitary(3, RngSpec(2, 3))
        )


class TestRadialMcmc:
    def test_class_d_single_mode_second_moment(self):
        # density ~ exp(-2 p lam^2): E[lam^2] = 1 / (4p)
        p = 1.0
        run = sample_radial_mcmc(CLASS_D, WeightSpec.gaussian(p), 1, 40_000, RngSpec(21))
        mean, se = chain_moment_se(run, lambda row: row[0] ** 2)
        assert abs(mean - 1.0 / (4.0 * p)) < 5 * se
        assert se < 0.02
        assert 0.1 <= run.acceptance_rate <= 0.9
        assert run.warning is None

    def test_class_c_single_mode_against_quadrature(self):
        # density ~ lam^2 exp(-2 p lam^2); oracle pinned by 1-D quadrature
        from scipy.integrate import quad

        p = 1.0
        num, _ = quad(lambda t: t**4 * np.exp(-2 * p * t * t), -np.inf, np.inf)
        den, _ = quad(lambda t: t**2 * np.exp(-2 * p * t * t), -np.inf, np.inf)
        oracle = num / den  # equals 3 / (4p)
        assert abs(oracle - 3.0 / (4.0 * p)) < 1e-12
        run = sample_radial_mcmc(CLASS_C, WeightSpec.gaussian(p), 1, 40_000, RngSpec(22))
        mean, se = chain_moment_se(run, lambda row: row[0] ** 2)
        assert abs(mean - oracle) < 5 * se

    def test_class_d_two_modes_against_quadrature(self):
        p = 1.0
        order = 40
        x, w = np.polynomial.hermite.hermgauss(order)
        lam = x / math.sqrt(2.0 * p)
        l1, l2 = np.meshgrid(lam, lam, indexing="ij")
        ww = np.outer(w, w) * (l1**2 - l2**2) ** 2
        stats = {
            "sum_sq": l1**2 + l2**2,
            "repulsion": (l1**2 - l2**2) ** 2,
            "fourth": l1**4 + l2**4,
        }
        oracles = {k: float((ww * v).sum() / ww.sum()) for k, v in stats.items()}
        run = sample_radial_mcmc(CLASS_D, WeightSpec.gaussian(p), 2, 40_000, RngSpec(23))
        checks = {
            "sum_sq": lambda row: row[0] ** 2 + row[1] ** 2,
            "repulsion": lambda row: (row[0] ** 2 - row[1] ** 2) ** 2,
            "fourth": lambda row: row[0] ** 4 + row[1] ** 4,
        }
        for key, f in checks.items():
            mean, se = chain_moment_se(run, f)
            assert abs(mean - oracles[key]) < 5 * se, key

    def test_hermitian_jacobian_kinds(self):
        run = sample_radial_mcmc(CLASS_D, WeightSpec.nc_modified(1.0), 2, 10_000, RngSpec(24))
        assert run.samples.shape == (10_000, 2)
        assert 0.1 <= run.acceptance_rate <= 0.9

    def test_determinism(self):
        a = sample_radial_mcmc(CLASS_D, WeightSpec.gaussian(1.0), 2, 500, RngSpec(3, 1), burn_in=500)
        b = sample_radial_mcmc(CLASS_D, WeightSpec.gaussian(1.0), 2, 500, RngSpec(3, 1), burn_in=500)
        assert np.array_equal(a.samples, b.samples)

    def test_determinant_weight_domain(self):
        with pytest.raises(DomainError, match="p > M - 3/4"):
            sample_radial_mcmc(CLASS_D, WeightSpec.determinant(1.0), 2, 100, RngSpec(0))
        run = sample_radial_mcmc(CLASS_D, WeightSpec.determinant(2.0), 2, 2_000, RngSpec(25))
        assert np.isfinite(run.samples).all()

    def test_rejects_zero_steps(self):
        with pytest.raises(ContractError):
            sample_radial_mcmc(CLASS_D, WeightSpec.gaussian(1.0), 1, 0, RngSpec(0))


class TestWeightSpec:
    def test_kinds_and_validation(self):
        with pytest.raises(DomainError):
            WeightSpec("cauchy", 1.0)
        with pytest.raises(DomainError):
            WeightSpec.gaussian(-1.0)
        assert WeightSpec.determinant(2.0).is_even
        assert not WeightSpec.nc_modified(1.0).is_even
        assert WeightSpec.nc_even(1.0).uses_hermitian_jacobian

    def test_modified_weight_restores_parity(self):
        # Delta(lam)^2 * modified weight is even in each eigenvalue separately
        gen = RngSpec(26).generator()
        w = WeightSpec.nc_modified(1.0)
        for _ in range(20):
            lam = gen.normal(size=3)
            base = 2.0 * sum(
                math.log(abs(lam[i] - lam[j])) for i in range(3) for j in range(i + 1, 3)
            )
            total = base + w.log_weight(lam)
            flipped = lam * np.array([-1.0, 1.0, 1.0])
            base_f = 2.0 * sum(
                math.log(abs(flipped[i] - flipped[j])) for i in range(3) for j in range(i + 1, 3)
            )
            total_f = base_f + w.log_weight(flipped)
            assert abs(total - total_f) < 1e-10


class TestCartesianVersusRadial:
    @pytest.mark.parametrize("modes", [1, 2])
    def test_eigenvalue_moments_agree(self, modes):
        # polar eigenvalues of Cartesian draws vs the radial walker, first
        # three even moments of the pair representatives squared
        p = 1.0
        n_cart = 4_000
        gen = RngSpec(27).generator()
        lams = []
        for _ in range(n_cart):
            lams.append(polar_decompose(sample_class_d(modes, p, gen)).lambdas)
        lams = np.array(lams)

        run = sample_radial_mcmc(CLASS_D, WeightSpec.gaussian(p), modes, 40_000, RngSpec(28))

        for power in (2, 4, 6):
            cart_vals = (lams**power).mean(axis=1)
            blocks = cart_vals.reshape(20, -1).mean(axis=1)
            cart_mean = float(cart_vals.mean())
            cart_se = float(blocks.std(ddof=1) / math.sqrt(blocks.size))
            mc_mean, mc_se = chain_moment_se(run, lambda row: (np.abs(row) ** power).mean())
            comb = math.hypot(cart_se, mc_se)
            assert abs(cart_mean - mc_mean) < 5.0 * comb, power
