#!/usr/bin/env python3
# -*- coding: utf-8 -*-

import unittest
import sys
import os

import numpy as np
from numpy.testing import assert_allclose

# 添加项目根目录到路径
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

# 导入待测试模块
import qchannel_core as qc
import info_tasks as it
from channel_classify import is_coherence_breaking


class TestQRAC(unittest.TestCase):
    """QRAC测试"""

    def setUp(self):
        """测试前设置"""
        self.strategy = it.standard_qrac_strategy()

    def test_bounds(self):
        """测试经典与量子上界"""
        self.assertAlmostEqual(it.qrac_classical_bound(2), 0.75)
        self.assertAlmostEqual(it.qrac_quantum_bound(2), 0.5 * (1 + 1 / np.sqrt(2)))
        self.assertAlmostEqual(it.qrac_success(self.strategy, qc.unitary_channel(qc.I2)),
                               it.qrac_quantum_bound(2), places=12)
        with self.assertRaises(ValueError):
            it.qrac_classical_bound(1)

    def test_phi_curve_matches_closed_form(self):
        """测试Φ(λ3)有效信道上的成功概率与闭式一致"""
        for lam3 in np.linspace(0.0, 1.0, 11):
            p = it.qrac_success(self.strategy, it.phi_effective_channel(lam3))
            self.assertAlmostEqual(p, it.qrac_closed_form(lam3), places=10)

    def test_threshold(self):
        """测试 P′ = 3/4 的根"""
        self.assertAlmostEqual(it.qrac_threshold(), 2 ** 0.75 - 1, places=9)

    def test_random_strategy_bounded(self):
        """测试随机策略的成功概率不超过量子上界"""
        rng = np.random.default_rng(31)
        ch = qc.random_channel(rng)
        for _ in range(10):
            p = it.qrac_success(it.random_qrac_strategy(rng), ch)
            self.assertLessEqual(p, it.qrac_quantum_bound(2) + 1e-12)
            self.assertGreaterEqual(p, 0.0)

    def test_invalid_strategy(self):
        """测试编码不完整时报错"""
        with self.assertRaises(qc.DimensionMismatch):
            it.QRACStrategy(encode={(0, 0): np.eye(2) / 2}, measurements=self.strategy.measurements)

    def test_curve_frame(self):
        """测试曲线表格"""
        df = it.qrac_curve(np.linspace(0.0, 1.0, 5))
        self.assertEqual(list(df.columns), ['lambda3', 'p_direct', 'p_closed', 'classical_bound'])
        self.assertEqual(len(df), 5)
        assert_allclose(df['p_direct'], df['p_closed'], atol=1e-10)

    def test_batch_matches_scalar(self):
        """测试批量成功概率与逐个信道计算一致"""
        rng = np.random.default_rng(33)
        channels = [qc.random_channel(rng) for _ in range(10)]
        tms = np.stack([ch.tmatrix for ch in channels])
        for _ in range(5):
            strategy = it.random_qrac_strategy(rng)
            expected = [it.qrac_success(strategy, ch) for ch in channels]
            assert_allclose(it.qrac_success_batch(strategy, tms), expected, atol=1e-12)

    def test_phi_effective_tmatrices(self):
        """测试批量有效T矩阵与逐点构造一致"""
        grid = np.linspace(-0.5, 1.0, 7)
        batch = it.phi_effective_tmatrices(grid)
        for lam3, tm in zip(grid, batch):
            assert_allclose(tm, it.phi_effective_channel(lam3).tmatrix, atol=1e-10)

    def test_depolarizing_two_ibc_not_useful(self):
        """测试 t ≤ 2/3 的去极化信道上随机策略不超过经典界"""
        rng = np.random.default_rng(34)
        ts = np.append(rng.uniform(-1.0 / 3.0, 2.0 / 3.0, size=9), 2.0 / 3.0)
        tms = np.stack([qc.depolarizing(t).tmatrix for t in ts])
        worst = 0.0
        for _ in range(200):
            worst = max(worst, float(np.max(it.qrac_success_batch(it.random_qrac_strategy(rng), tms))))
        self.assertLessEqual(worst, it.qrac_classical_bound(2) + 1e-9)
        self.assertLessEqual(it.qrac_success(self.strategy, qc.depolarizing(2.0 / 3.0)), 0.75 + 1e-9)

    def test_strictly_increasing(self):
        """测试 P′(λ3) 在 [0,1] 上严格递增"""
        grid = np.arange(0.0, 1.0 + 5e-4, 1e-3)
        self.assertTrue(np.all(np.diff(it.qrac_closed_form(grid)) > 0))
        self.assertTrue(np.all(np.diff(it.qrac_curve(grid)['p_direct'].to_numpy()) > 0))


class TestSteering(unittest.TestCase):
    """导引测试"""

    def test_maximally_entangled(self):
        """测试最大纠缠态的F"""
        self.assertAlmostEqual(it.steering_F(qc.PHI_PLUS), np.sqrt(2), places=12)
        self.assertAlmostEqual(it.optimized_steering_F(qc.PHI_PLUS), np.sqrt(2), places=12)

    def test_phi_curve_matches_closed_form(self):
        """测试Φ(λ3)有效信道上的F与闭式一致"""
        for lam3 in np.linspace(0.0, 1.0, 11):
            state = it.steered_state(it.phi_effective_channel(lam3), qc.PHI_PLUS)
            self.assertAlmostEqual(it.steering_F(state), it.steering_closed_form(lam3), places=10)

    def test_thresholds(self):
        """测试两种表达式的根"""
        direct = it.steering_threshold('direct')
        self.assertAlmostEqual(direct, (np.sqrt(20 * np.sqrt(2) - 4) - 1) / 5, places=9)
        self.assertAlmostEqual(direct, 0.785582, places=5)
        self.assertLess(abs(it.steering_threshold('printed') - 0.8123), 5e-4)
        with self.assertRaises(ValueError):
            it.steering_threshold('other')

    def test_curve_frame(self):
        """测试曲线表格"""
        df = it.steering_curve([0.0, 0.5, 1.0])
        self.assertEqual(list(df.columns), ['lambda3', 'F_direct', 'F_closed', 'F_printed'])
        self.assertAlmostEqual(df['F_direct'].iloc[-1], np.sqrt(2), places=10)

    def test_batch_matches_scalar(self):
        """测试批量 F 与逐个态计算一致"""
        rng = np.random.default_rng(35)
        states = np.stack([qc.random_state(rng, 4) for _ in range(20)])
        assert_allclose(it.steering_F_batch(states), [it.steering_F(s) for s in states], atol=1e-12)

    def test_depolarizing_two_ibc_not_steerable(self):
        """测试 t ≤ 2/3 的去极化信道作用于一半后 F ≤ 1"""
        rng = np.random.default_rng(36)
        ts = np.append(rng.uniform(-1.0 / 3.0, 2.0 / 3.0, size=199), 2.0 / 3.0)
        for t in ts:
            ch = qc.depolarizing(t)
            self.assertLessEqual(it.steering_F(it.steered_state(ch, qc.PHI_PLUS)), 1.0 + 1e-9)
            self.assertLessEqual(it.steering_F(it.steered_state(ch, qc.random_state(rng, 4))), 1.0 + 1e-9)

    def test_strictly_increasing(self):
        """测试 F(λ3) 在 [0.5,1] 上严格递增"""
        grid = np.arange(0.5, 1.0 + 5e-4, 1e-3)
        self.assertTrue(np.all(np.diff(it.steering_closed_form(grid)) > 0))
        self.assertTrue(np.all(np.diff(it.steering_curve(grid)['F_direct'].to_numpy()) > 0))


class TestCoherence(unittest.TestCase):
    """相干传输测试"""

    def test_reference_point(self):
        """测试 λ=0.5, t=0.1, φ1=π/2 的有效T矩阵"""
        tm = it.coherence_effective_channel(0.5, 0.1)
        self.assertAlmostEqual(tm[1, 1], 0.06, places=12)
        self.assertAlmostEqual(tm[2, 2], 0.06, places=12)
        self.assertAlmostEqual(tm[3, 0], 0.15, places=12)
        self.assertAlmostEqual(tm[3, 3], 0.25, places=12)
        self.assertFalse(is_coherence_breaking(tm))

    def test_plain_switch_stays_coherence_breaking(self):
        """测试不做校正时仍是相干破坏"""
        tm = it.coherence_effective_channel(0.5, 0.1, controlled=False)
        self.assertTrue(is_coherence_breaking(tm))
        self.assertAlmostEqual(tm[3, 0], 0.15, places=12)

    def test_closed_form(self):
        """测试一般校正幺正下的闭式"""
        rng = np.random.default_rng(32)
        for _ in range(10):
            lam, t = rng.uniform(-0.5, 0.5, size=2)
            theta, phi1, phi2 = rng.uniform(0, 2 * np.pi, size=3)
            assert_allclose(it.coherence_effective_channel(lam, t, theta, phi1, phi2),
                            it.coherence_closed_form(lam, t, theta, phi1, phi2), atol=1e-10)

    def test_incoherent_block(self):
        """测试 θ=0 时 x/y 块的形式"""
        lam, t, phi1 = 0.2, -0.3, 0.7
        g = ((1 - lam) ** 2 - t ** 2) / 4
        tm = it.coherence_effective_channel(lam, t, 0.0, phi1, 0.0)
        assert_allclose(tm[1:3, 1:3], [[g * np.sin(phi1) ** 2, -g * np.sin(2 * phi1) / 2],
                                       [g * np.sin(2 * phi1) / 2, g * np.sin(phi1) ** 2]], atol=1e-12)

    def test_form_extraction(self):
        """测试有效T矩阵拆分"""
        tm = it.coherence_effective_channel(0.5, 0.1)
        form = it.coherence_form(tm, 0.5, 0.1, 0.0, np.pi / 2, 0.0)
        self.assertAlmostEqual(form.t1, 0.15, places=12)
        self.assertAlmostEqual(form.gamma[0].real, 0.06, places=12)
        self.assertAlmostEqual(form.gamma[1].real, 0.06, places=12)
        self.assertAlmostEqual(form.eta[2], 0.25, places=12)
        self.assertIn('gamma', form.to_dict())

    def test_invalid_parameters(self):
        """测试CP区域之外报错"""
        with self.assertRaises(qc.NotCompletelyPositive):
            it.coherence_effective_channel(0.8, 0.5)

    def test_l1_coherence(self):
        """测试l1相干度"""
        self.assertAlmostEqual(it.l1_coherence(qc.bloch_to_density([1.0, 0.0, 0.0])), 1.0)
        self.assertAlmostEqual(it.l1_coherence(np.diag([0.3, 0.7])), 0.0)

    def test_diagonal_states_stay_diagonal(self):
        """测试 θ=0、φ1=π/2 的有效信道不产生相干"""
        rng = np.random.default_rng(37)
        for _ in range(20):
            lam = rng.uniform(-1.0, 1.0)
            t = rng.uniform(-1.0, 1.0) * (1.0 - abs(lam))
            tm = it.coherence_effective_channel(lam, t, 0.0, np.pi / 2, rng.uniform(0, 2 * np.pi))
            p = rng.uniform()
            out = qc.apply(tm, np.diag([p, 1.0 - p]))
            self.assertLess(abs(out[0, 1]), 1e-10)
            self.assertLess(it.l1_coherence(out), 1e-10)


if __name__ == '__main__':
    unittest.main()
