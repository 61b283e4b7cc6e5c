#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
量子开关引擎

对两个相同信道构造量子开关，给出 C+/C- 两个分支的CP映射（一般Kraus构造与Pauli闭式），
并实现基于控制比特测量的受控操作、控制比特噪声以及最终的有效信道。
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from qchannel_core import (
    I2, SZ, KRAUS_CUTOFF, P_TO_LAMBDA, PROB_TOL,
    CPMap, Channel, NotCompletelyPositive, PauliChannel, SwitchLabError,
    batched_tmatrix_from_kraus, depolarizing, ket_projector, partial_trace,
    random_channel, random_unitary, unitary_channel, validate_density, _as_square,
)

logger = logging.getLogger(__name__)

KET_PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)
KET_MINUS = np.array([1, -1], dtype=complex) / np.sqrt(2)
ORTHO_TOL = 1e-12


class InvalidNoiseParameter(SwitchLabError):
    """控制比特去极化参数超出 [-1/3, 1]"""


# ========== 数据类型 ==========
@dataclass(frozen=True, eq=False)
class SwitchResult:
    """
    开关输出 joint = C+(ρ)⊗ω + C-(ρ)⊗σzωσz

    control_plus / control_minus 是两个分支所携带的控制比特因子，
    无噪声时分别为 ω 和 σzωσz，控制噪声会同时作用在二者上。
    """

    joint: np.ndarray
    branch_plus: CPMap
    branch_minus: CPMap
    control_in: np.ndarray
    control_plus: np.ndarray = None
    control_minus: np.ndarray = None

    def __post_init__(self):
        if self.control_plus is None:
            object.__setattr__(self, 'control_plus', self.control_in)
        if self.control_minus is None:
            object.__setattr__(self, 'control_minus', SZ @ self.control_in @ SZ)


@dataclass(frozen=True, eq=False)
class PauliBranches:
    """Pauli 信道的两个归一化分支；c_minus 为 None 表示零分支"""

    q: float
    c_plus: Optional[PauliChannel]
    c_minus: Optional[PauliChannel]
    degenerate: bool = False

    def plus_map(self) -> CPMap:
        """未归一化的 qC̄+"""
        if self.c_plus is None:
            return CPMap.zero()
        return self.c_plus.channel().scaled(self.q)

    def minus_map(self) -> CPMap:
        """未归一化的 (1-q)C̄-"""
        if self.c_minus is None:
            return CPMap.zero()
        return self.c_minus.channel().scaled(1.0 - self.q)


@dataclass(frozen=True, eq=False)
class ControlledOp:
    """
    测量控制比特的可观测量 {|a⟩⟨a|, |a⊥⟩⟨a⊥|}，按结果对系统施加 Λ1 或 Λ2
    """

    basis: Tuple[np.ndarray, np.ndarray]
    branch_channels: Tuple[Channel, Channel]

    def __post_init__(self):
        a, b = (np.asarray(v, dtype=complex).reshape(2) for v in self.basis)
        for v in (a, b):
            if np.linalg.norm(v) <= ORTHO_TOL:
                raise SwitchLabError("控制测量基向量不能是零向量")
        a = a / np.linalg.norm(a)
        b = b / np.linalg.norm(b)
        if abs(np.vdot(a, b)) > ORTHO_TOL:
            raise SwitchLabError(f"控制测量基不正交: |⟨a|a⊥⟩| = {abs(np.vdot(a, b)):.3e}")
        object.__setattr__(self, 'basis', (a, b))

    def projectors(self) -> Tuple[np.ndarray, np.ndarray]:
        return ket_projector(self.basis[0]), ket_projector(self.basis[1])

    def tmatrices(self) -> Tuple[np.ndarray, np.ndarray]:
        """(以基向量为列的 2x2 矩阵, Λ1/Λ2 的 T 矩阵 (2,4,4))"""
        return np.column_stack(self.basis), np.stack([c.tmatrix for c in self.branch_channels])


# ========== 默认设置 ==========
def default_control() -> np.ndarray:
    """ω = |+⟩⟨+|"""
    return ket_projector(KET_PLUS)


def default_correction() -> ControlledOp:
    """𝒰 = I⊗|+⟩⟨+| + σz⊗|−⟩⟨−|"""
    return ControlledOp(
        basis=(KET_PLUS, KET_MINUS),
        branch_channels=(unitary_channel(I2), unitary_channel(SZ)),
    )


def identity_op(basis: Optional[Sequence[np.ndarray]] = None) -> ControlledOp:
    """两个结果都不做任何操作，等价于直接对控制比特求迹"""
    basis = basis if basis is not None else (np.array([1, 0]), np.array([0, 1]))
    return ControlledOp(tuple(basis), (unitary_channel(I2), unitary_channel(I2)))


def random_controlled_op(rng: np.random.Generator, rank: int = 4) -> ControlledOp:
    u = random_unitary(rng, 2)
    return ControlledOp(
        basis=(u[:, 0], u[:, 1]),
        branch_channels=(random_channel(rng, rank), random_channel(rng, rank)),
    )


# ========== 开关构造 ==========
def switch_kraus(ch: CPMap) -> List[np.ndarray]:
    """
    S_xy = ½{A_x,A_y}⊗I + ½[A_x,A_y]⊗σz，遍历所有有序对 (x, y)

    Args:
        ch: 输入信道（两次使用同一信道）

    Returns:
        系统⊗控制 上的 4x4 Kraus 算符列表
    """
    ops = []
    for ax in ch.kraus:
        for ay in ch.kraus:
            anti = 0.5 * (ax @ ay + ay @ ax)
            comm = 0.5 * (ax @ ay - ay @ ax)
            ops.append(np.kron(anti, I2) + np.kron(comm, SZ))
    return ops


def branch_maps(ch: CPMap) -> Tuple[CPMap, CPMap]:
    """C+ 的Kraus为 {½{A_x,A_y}}，C- 的Kraus为 {½[A_x,A_y]}；全零分支返回零映射"""
    plus, minus = [], []
    for ax in ch.kraus:
        for ay in ch.kraus:
            anti = 0.5 * (ax @ ay + ay @ ax)
            comm = 0.5 * (ax @ ay - ay @ ax)
            if np.max(np.abs(anti)) > KRAUS_CUTOFF:
                plus.append(anti)
            if np.max(np.abs(comm)) > KRAUS_CUTOFF:
                minus.append(comm)
    return CPMap(tuple(plus)), CPMap(tuple(minus))


def switch_output(ch: CPMap, rho: np.ndarray, omega: np.ndarray) -> np.ndarray:
    """直接用联合Kraus算符计算 S(ρ⊗ω)"""
    state = np.kron(_as_square(rho, 2), _as_square(omega, 2))
    out = np.zeros((4, 4), dtype=complex)
    for s in switch_kraus(ch):
        out += s @ state @ s.conj().T
    return out


def run_switch(ch: CPMap, rho: Optional[np.ndarray] = None,
               omega: Optional[np.ndarray] = None) -> SwitchResult:
    """
    对相同的两个信道运行量子开关

    Args:
        ch: 信道
        rho: 系统输入态，默认 I/2
        omega: 控制比特输入态，默认 |+⟩⟨+|

    Returns:
        SwitchResult
    """
    rho = validate_density(I2 / 2 if rho is None else rho, dims=(2,))
    omega = validate_density(default_control() if omega is None else omega, dims=(2,))
    plus, minus = branch_maps(ch)
    joint = switch_output(ch, rho, omega)
    logger.debug(f"开关分支: C+ 含 {len(plus.kraus)} 个Kraus, C- 含 {len(minus.kraus)} 个Kraus")
    return SwitchResult(joint=joint, branch_plus=plus, branch_minus=minus, control_in=omega)


def branch_weight(m: CPMap) -> float:
    """分支在最大混态输入下的后选择概率 Tr[C(I/2)]"""
    return m.trace_weight()


# ========== Pauli 闭式 ==========
def pauli_branches(pc: PauliChannel) -> PauliBranches:
    """
    Pauli信道在开关下的两个归一化分支

    q = 1 − 2(p1p2 + p2p3 + p3p1)；q 为 0 或 1 时对应分支用零映射表示，并设置 degenerate 标志。
    """
    p0, p1, p2, p3 = pc.p
    q = 1.0 - 2.0 * (p1 * p2 + p2 * p3 + p3 * p1)
    plus_w = np.array([p0 ** 2 + p1 ** 2 + p2 ** 2 + p3 ** 2, 2 * p0 * p1, 2 * p0 * p2, 2 * p0 * p3])
    minus_w = np.array([0.0, 2 * p2 * p3, 2 * p1 * p3, 2 * p1 * p2])
    degenerate = q < PROB_TOL or 1.0 - q < PROB_TOL
    c_plus = PauliChannel(plus_w / plus_w.sum()) if q >= PROB_TOL else None
    c_minus = PauliChannel(minus_w / minus_w.sum()) if 1.0 - q >= PROB_TOL else None
    return PauliBranches(q=float(q), c_plus=c_plus, c_minus=c_minus, degenerate=degenerate)


def pauli_branch_lambdas(lam: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    pauli_branches 的批量版本

    Args:
        lam: (N, 3) λ 数组，须在CP四面体内

    Returns:
        (q[N], λ+[N,3], λ-[N,3])；零分支对应的行为 NaN
    """
    lam = np.atleast_2d(np.asarray(lam, dtype=float))
    l1, l2, l3 = lam[:, 0], lam[:, 1], lam[:, 2]
    p = np.stack([1 + l1 + l2 + l3, 1 + l1 - l2 - l3, 1 - l1 + l2 - l3, 1 - l1 - l2 + l3], axis=1) / 4.0
    p = np.clip(p, 0.0, None)
    p0, p1, p2, p3 = p.T
    q = 1.0 - 2.0 * (p1 * p2 + p2 * p3 + p3 * p1)
    plus_w = np.stack([(p ** 2).sum(axis=1), 2 * p0 * p1, 2 * p0 * p2, 2 * p0 * p3], axis=1)
    minus_w = np.stack([np.zeros_like(p0), 2 * p2 * p3, 2 * p1 * p3, 2 * p1 * p2], axis=1)
    with np.errstate(invalid='ignore', divide='ignore'):
        plus_p = plus_w / np.where(q >= PROB_TOL, q, np.nan)[:, None]
        minus_p = minus_w / np.where(1.0 - q >= PROB_TOL, 1.0 - q, np.nan)[:, None]
    return q, plus_p @ P_TO_LAMBDA.T, minus_p @ P_TO_LAMBDA.T


def phi_channel(lam3: float) -> PauliChannel:
    """
    Φ(λ3)：p = ((1-λ3)/4, (1+λ3)/4, (1+λ3)/4, (1-λ3)/4)，T = diag(1, 0, 0, -λ3)

    对 -1 ≤ λ3 ≤ 1 都是纠缠破坏信道，经开关与默认校正后得到 diag(1, (1+λ3)²/4, (1+λ3)²/4, λ3²)。
    """
    if abs(lam3) > 1.0 + PROB_TOL:
        raise NotCompletelyPositive(f"λ3={lam3} 超出 [-1, 1]")
    lam3 = min(max(lam3, -1.0), 1.0)
    return PauliChannel(np.array([1 - lam3, 1 + lam3, 1 + lam3, 1 - lam3]) / 4.0)


def phi_q(lam3: float) -> float:
    return (5.0 - 2.0 * lam3 + lam3 ** 2) / 8.0


def printed_phi_q(lam3: float) -> float:
    """q 的另一种写法 2λ3+3λ3²，与 phi_q 不一致，只用于对照输出"""
    return 2.0 * lam3 + 3.0 * lam3 ** 2


# ========== 受控操作与有效信道 ==========
def apply_controlled(op: ControlledOp, sr: SwitchResult) -> Channel:
    """
    测量控制比特后按结果施加 Λ1/Λ2，再对控制比特求迹

    有效信道 = Σ_i Λ_i ∘ (⟨a_i|ω+|a_i⟩ C+ + ⟨a_i|ω-|a_i⟩ C-)，其中 ω± 为两个分支携带的控制因子。
    """
    ops = []
    for vec, lam_i in zip(op.basis, op.branch_channels):
        w_plus = float(np.vdot(vec, sr.control_plus @ vec).real)
        w_minus = float(np.vdot(vec, sr.control_minus @ vec).real)
        for weight, branch in ((w_plus, sr.branch_plus), (w_minus, sr.branch_minus)):
            if weight <= KRAUS_CUTOFF:
                continue
            s = np.sqrt(weight)
            for L in lam_i.kraus:
                for P in branch.kraus:
                    k = s * (L @ P)
                    if np.max(np.abs(k)) > KRAUS_CUTOFF:
                        ops.append(k)
    return Channel(tuple(ops))


def controlled_joint_output(op: ControlledOp, joint: np.ndarray) -> np.ndarray:
    """直接对联合态做测量+条件信道再求迹，作为 apply_controlled 的对照"""
    out = np.zeros((2, 2), dtype=complex)
    for proj, lam_i in zip(op.projectors(), op.branch_channels):
        big = np.kron(I2, proj)
        conditional = partial_trace(big @ joint @ big, keep=0)
        out += lam_i.apply(conditional)
    return out


def effective_channel(ch: CPMap, op: Optional[ControlledOp] = None,
                      omega: Optional[np.ndarray] = None) -> Channel:
    """默认 ω=|+⟩⟨+| 与默认校正 𝒰 下的有效信道"""
    return apply_controlled(op or default_correction(), run_switch(ch, omega=omega))


def noisy_control(sr: SwitchResult, noise_t: float) -> SwitchResult:
    """去极化噪声 Γ^t_2 作用于联合态中的控制比特"""
    if noise_t < -1.0 / 3.0 - PROB_TOL or noise_t > 1.0 + PROB_TOL:
        raise InvalidNoiseParameter(f"控制噪声参数 t={noise_t} 超出 [-1/3, 1]")
    noise = depolarizing(noise_t)
    joint = np.zeros((4, 4), dtype=complex)
    for k in noise.kraus:
        kk = np.kron(I2, k)
        joint += kk @ sr.joint @ kk.conj().T
    return SwitchResult(
        joint=joint,
        branch_plus=sr.branch_plus,
        branch_minus=sr.branch_minus,
        control_in=sr.control_in,
        control_plus=noise.apply(sr.control_plus),
        control_minus=noise.apply(sr.control_minus),
    )


def noisy_control_effective(ch: CPMap, noise_t: float, op: Optional[ControlledOp] = None,
                            omega: Optional[np.ndarray] = None,
                            rho: Optional[np.ndarray] = None) -> Channel:
    """
    控制比特受去极化噪声后再做受控操作得到的有效信道

    Raises:
        InvalidNoiseParameter: noise_t 不在 [-1/3, 1] 内
    """
    sr = noisy_control(run_switch(ch, rho=rho, omega=omega), noise_t)
    return apply_controlled(op or default_correction(), sr)


# ========== 批量计算 ==========
def batched_branch_chois(choi: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    由信道 Choi 批量计算 C+ / C- 分支的 Choi 矩阵

    Kraus 取 Choi 本征分解，分支 Choi = (1/8) Σ_{x,y} vec(A_x A_y ± A_y A_x) vec(·)†。
    """
    n = choi.shape[0]
    vals, vecs = np.linalg.eigh(0.5 * (choi + np.conj(np.swapaxes(choi, 1, 2))))
    scale = np.sqrt(2.0 * np.clip(vals, 0.0, None))
    kraus = scale[:, :, None, None] * np.swapaxes(vecs, 1, 2).reshape(n, 4, 2, 2)
    prod = np.einsum('nxab,nybc->nxyac', kraus, kraus)
    swapped = np.swapaxes(prod, 1, 2)
    out = []
    for ops in (prod + swapped, prod - swapped):
        v = ops.reshape(n, 16, 4)
        out.append(np.einsum('nka,nkb->nab', v, v.conj()) / 8.0)
    return out[0], out[1]


def controlled_tmatrices(basis: np.ndarray, lam_tms: np.ndarray,
                         t_plus: np.ndarray, t_minus: np.ndarray,
                         control_plus: np.ndarray, control_minus: np.ndarray) -> np.ndarray:
    """
    apply_controlled 的批量 T 矩阵版本：T_eff = Σ_i T_Λi (w+_i T+ + w-_i T-)

    Args:
        basis: (N,2,2)，第 i 列是第 i 个测量结果的基向量
        lam_tms: (N,2,4,4)，Λ1/Λ2 的 T 矩阵
        t_plus, t_minus: 未归一化分支的 T 矩阵，(4,4) 或 (N,4,4)
        control_plus, control_minus: 两个分支携带的控制比特因子 (2,2)

    Returns:
        (N,4,4) 有效信道 T 矩阵
    """
    basis = np.asarray(basis, dtype=complex)
    w_plus = np.einsum('nai,ab,nbi->ni', basis.conj(), control_plus, basis).real
    w_minus = np.einsum('nai,ab,nbi->ni', basis.conj(), control_minus, basis).real
    tp = np.asarray(t_plus, dtype=float)
    tm = np.asarray(t_minus, dtype=float)
    tp = tp[None] if tp.ndim == 2 else tp
    tm = tm[None] if tm.ndim == 2 else tm
    mixed = w_plus[:, :, None, None] * tp[:, None] + w_minus[:, :, None, None] * tm[:, None]
    return np.einsum('nkij,nkjl->nil', np.asarray(lam_tms, dtype=float), mixed)


def random_controlled_batch(rng: np.random.Generator, count: int,
                            rank: int = 4) -> Tuple[np.ndarray, np.ndarray]:
    """
    count 个随机受控操作，分布与 random_controlled_op 相同

    Returns:
        (basis (count,2,2), lam_tms (count,2,4,4))
    """
    basis = random_unitary(rng, 2, size=count)
    iso = random_unitary(rng, 2 * rank, size=2 * count)[:, :, :2]
    kraus = iso.reshape(2 * count, rank, 2, 2)
    return basis, batched_tmatrix_from_kraus(kraus).reshape(count, 2, 4, 4)
