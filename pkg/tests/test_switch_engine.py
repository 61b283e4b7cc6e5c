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
import switch_engine as se


class TestSwitchConstruction(unittest.TestCase):
    """开关构造测试"""

    def setUp(self):
        """测试前设置"""
        self.rng = np.random.default_rng(11)

    def test_switch_kraus_complete(self):
        """测试开关Kraus算符满足完备性"""
        ch = qc.random_channel(self.rng)
        total = sum(s.conj().T @ s for s in se.switch_kraus(ch))
        assert_allclose(total, np.eye(4), atol=1e-12)

    def test_branches_sum_to_concatenation(self):
        """测试两个分支之和等于信道自身级联"""
        ch = qc.random_channel(self.rng)
        plus, minus = se.branch_maps(ch)
        assert_allclose(plus.choi + minus.choi, qc.compose(ch, ch).choi, atol=1e-12)

    def test_joint_output_decomposition(self):
        """测试联合输出 = C+(ρ)⊗ω + C-(ρ)⊗σzωσz"""
        for _ in range(5):
            ch = qc.random_channel(self.rng)
            rho = qc.random_state(self.rng)
            omega = qc.random_state(self.rng)
            sr = se.run_switch(ch, rho, omega)
            expected = np.kron(sr.branch_plus.apply(rho), omega) + \
                np.kron(sr.branch_minus.apply(rho), qc.SZ @ omega @ qc.SZ)
            assert_allclose(sr.joint, expected, atol=1e-12)
            self.assertAlmostEqual(np.trace(sr.joint).real, 1.0, places=12)

    def test_invalid_inputs(self):
        """测试非法输入态"""
        ch = qc.depolarizing(0.5)
        with self.assertRaises(qc.DimensionMismatch):
            se.run_switch(ch, rho=np.eye(2))
        with self.assertRaises(qc.SwitchLabError):
            se.ControlledOp(basis=(np.array([1, 0]), np.array([1, 1])),
                            branch_channels=(qc.depolarizing(1.0), qc.depolarizing(1.0)))


class TestPauliBranches(unittest.TestCase):
    """Pauli闭式分支测试"""

    def setUp(self):
        """测试前设置"""
        self.rng = np.random.default_rng(12)

    def test_closed_form_matches_brute_force(self):
        """测试闭式分支与暴力构造一致"""
        for _ in range(50):
            pc = qc.lambdas_to_probs(qc.random_pauli_lambdas(self.rng))
            pb = se.pauli_branches(pc)
            plus, minus = se.branch_maps(pc.channel())
            assert_allclose(pb.plus_map().choi, plus.choi, atol=1e-9)
            assert_allclose(pb.minus_map().choi, minus.choi, atol=1e-9)
            self.assertAlmostEqual(se.branch_weight(plus), pb.q, places=10)

    def test_minus_images_on_plane(self):
        """测试C̄-的像落在 λ1+λ2+λ3 = -1 平面上"""
        for _ in range(20):
            pb = se.pauli_branches(qc.lambdas_to_probs(qc.random_pauli_lambdas(self.rng)))
            if pb.c_minus is not None:
                self.assertAlmostEqual(pb.c_minus.lambdas.sum(), -1.0, places=10)

    def test_batched_lambdas(self):
        """测试批量闭式与逐个计算一致"""
        lam = qc.random_pauli_lambdas(self.rng, 30)
        q, plus, minus = se.pauli_branch_lambdas(lam)
        for i in range(30):
            pb = se.pauli_branches(qc.lambdas_to_probs(lam[i]))
            self.assertAlmostEqual(q[i], pb.q, places=12)
            assert_allclose(plus[i], pb.c_plus.lambdas, atol=1e-12)
            assert_allclose(minus[i], pb.c_minus.lambdas, atol=1e-12)

    def test_obs1_degenerate(self):
        """测试 q=1 时 C- 为零分支"""
        pc = qc.lambdas_to_probs([0.0, 0.0, 1.0])
        pb = se.pauli_branches(pc)
        self.assertAlmostEqual(pb.q, 1.0, places=12)
        self.assertTrue(pb.degenerate)
        self.assertIsNone(pb.c_minus)
        assert_allclose(pb.c_plus.lambdas, [0.0, 0.0, 1.0], atol=1e-12)
        _, minus = se.branch_maps(pc.channel())
        self.assertTrue(minus.is_zero)
        q, _, minus_lam = se.pauli_branch_lambdas(np.array([[0.0, 0.0, 1.0]]))
        self.assertTrue(np.all(np.isnan(minus_lam[0])))

    def test_phi_channel(self):
        """测试Φ(λ3)信道的q与有效信道"""
        for lam3 in (-0.5, 0.2, 0.5, 0.9):
            pc = se.phi_channel(lam3)
            assert_allclose(pc.lambdas, [0.0, 0.0, -lam3], atol=1e-14)
            self.assertAlmostEqual(se.pauli_branches(pc).q, se.phi_q(lam3), places=12)
            a = (1 + lam3) ** 2 / 4
            eff = se.effective_channel(pc.channel()).tmatrix
            assert_allclose(eff, np.diag([1.0, a, a, lam3 ** 2]), atol=1e-10)
        self.assertAlmostEqual(se.phi_q(0.5), 0.53125)
        self.assertAlmostEqual(se.printed_phi_q(0.5), 1.75)
        with self.assertRaises(qc.NotCompletelyPositive):
            se.phi_channel(1.5)


class TestControlledOperations(unittest.TestCase):
    """受控操作与控制噪声测试"""

    def setUp(self):
        """测试前设置"""
        self.rng = np.random.default_rng(13)
        self.perfect = qc.lambdas_to_probs([0.0, 0.0, -1.0]).channel()

    def test_perfect_communication(self):
        """测试完美通信：有效信道为恒等"""
        assert_allclose(se.effective_channel(self.perfect).tmatrix, np.eye(4), atol=1e-12)

    def test_apply_controlled_matches_joint(self):
        """测试受控操作的Kraus路径与联合态路径一致"""
        ch = qc.random_channel(self.rng)
        rho = qc.random_state(self.rng)
        omega = qc.random_state(self.rng)
        sr = se.run_switch(ch, rho, omega)
        op = se.random_controlled_op(self.rng)
        assert_allclose(se.apply_controlled(op, sr).apply(rho),
                        se.controlled_joint_output(op, sr.joint), atol=1e-12)

    def test_identity_op_traces_control(self):
        """测试不做操作时有效信道为 C∘C"""
        ch = qc.random_channel(self.rng)
        eff = se.effective_channel(ch, se.identity_op())
        assert_allclose(eff.tmatrix, ch.tmatrix @ ch.tmatrix, atol=1e-12)

    def test_noisy_control_closed_form(self):
        """测试控制噪声下完美信道的闭式"""
        rho = qc.random_state(self.rng)
        for t in (-1.0 / 3.0, 0.0, 0.5, 1.0):
            out = se.noisy_control_effective(self.perfect, t).apply(rho)
            expected = (1 + t) / 2 * rho + (1 - t) / 2 * qc.SZ @ rho @ qc.SZ
            assert_allclose(out, expected, atol=1e-12)

    def test_noiseless_limit(self):
        """测试 t=1 时与无噪声一致"""
        ch = qc.random_channel(self.rng)
        assert_allclose(se.noisy_control_effective(ch, 1.0).tmatrix,
                        se.effective_channel(ch).tmatrix, atol=1e-12)

    def test_zero_basis_vector_rejected(self):
        """测试零向量不能作为控制测量基"""
        ops = (qc.unitary_channel(qc.I2), qc.unitary_channel(qc.SZ))
        with self.assertRaises(qc.SwitchLabError):
            se.ControlledOp((np.zeros(2), np.array([0.0, 1.0])), ops)
        with self.assertRaises(qc.SwitchLabError):
            se.ControlledOp((np.array([1.0, 0.0]), np.array([0.0, 1e-15])), ops)

    def test_control_basis_covariance(self):
        """测试与 σz 对易的幺正同时作用于 ω 和测量基时有效信道不变"""
        for _ in range(20):
            ch = qc.random_channel(self.rng)
            omega = qc.random_state(self.rng)
            op = se.random_controlled_op(self.rng)
            alpha, beta = self.rng.uniform(0.0, 2 * np.pi, size=2)
            v = np.diag([np.exp(1j * alpha), np.exp(1j * beta)])
            moved = se.ControlledOp((v @ op.basis[0], v @ op.basis[1]), op.branch_channels)
            before = se.effective_channel(ch, op, omega=omega).tmatrix
            after = se.effective_channel(ch, moved, omega=v @ omega @ v.conj().T).tmatrix
            assert_allclose(after, before, atol=1e-10)

    def test_batched_controlled_matches_kraus(self):
        """测试批量 T 矩阵路径与 Kraus 路径给出相同的有效信道"""
        ch = qc.random_channel(self.rng)
        sr = se.run_switch(ch, omega=qc.random_state(self.rng))
        ops = [se.random_controlled_op(self.rng) for _ in range(8)]
        basis = np.stack([op.tmatrices()[0] for op in ops])
        lam_tms = np.stack([op.tmatrices()[1] for op in ops])
        batch = se.controlled_tmatrices(basis, lam_tms, sr.branch_plus.tmatrix, sr.branch_minus.tmatrix,
                                        sr.control_plus, sr.control_minus)
        for op, tm in zip(ops, batch):
            assert_allclose(tm, se.apply_controlled(op, sr).tmatrix, atol=1e-10)

    def test_random_controlled_batch(self):
        """测试批量随机受控操作：测量基幺正，条件信道保迹"""
        basis, lam_tms = se.random_controlled_batch(self.rng, 30)
        self.assertEqual(basis.shape, (30, 2, 2))
        self.assertEqual(lam_tms.shape, (30, 2, 4, 4))
        eye = np.broadcast_to(np.eye(2), basis.shape)
        assert_allclose(np.conj(np.swapaxes(basis, 1, 2)) @ basis, eye, atol=1e-10)
        assert_allclose(lam_tms[:, :, 0, :], np.broadcast_to([1.0, 0.0, 0.0, 0.0], (30, 2, 4)), atol=1e-10)
        single_basis, single_tms = se.random_controlled_batch(self.rng, 1)
        self.assertEqual(single_basis.shape, (1, 2, 2))
        self.assertEqual(single_tms.shape, (1, 2, 4, 4))

    def test_invalid_noise(self):
        """测试噪声参数越界"""
        with self.assertRaises(se.InvalidNoiseParameter):
            se.noisy_control_effective(self.perfect, 2.0)
        with self.assertRaises(se.InvalidNoiseParameter):
            se.noisy_control_effective(self.perfect, -0.5)


if __name__ == '__main__':
    unittest.main()
