#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
信息任务模块 - QRAC 成功概率、两设置导引函数与相干传输

所有函数都是纯函数。曲线函数返回 pandas DataFrame，供命令行写出 CSV。
"""

import logging
from dataclasses import dataclass
from typing import Dict, Iterable, Tuple

import numpy as np
import pandas as pd
from scipy.optimize import bisect

from qchannel_core import (
    HERM_TOL, I2, SX, SY, SZ, PAULIS,
    CPMap, Channel, DimensionMismatch,
    apply_on_first, batched_choi_from_tmatrix, batched_tmatrix_from_choi, bloch_to_density,
    coherence_breaking_kraus, unitary_channel, validate_density, _as_square,
)
from switch_engine import (
    KET_MINUS, KET_PLUS, ControlledOp,
    batched_branch_chois, controlled_tmatrices, default_control, default_correction,
    effective_channel, identity_op, phi_channel,
)

logger = logging.getLogger(__name__)

ROOT_XTOL = 1e-12
QRAC_STRINGS = ((0, 0), (0, 1), (1, 0), (1, 1))


# ========== QRAC ==========
@dataclass(frozen=True, eq=False)
class QRACStrategy:
    """
    (2,2)-QRAC 策略

    encode: 二比特串 (x1, x2) -> 密度矩阵
    measurements: (M1, M2)，每个是两结果POVM (M(0), M(1))
    """

    encode: Dict[Tuple[int, int], np.ndarray]
    measurements: Tuple[Tuple[np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray]]

    def __post_init__(self):
        if set(self.encode) != set(QRAC_STRINGS):
            raise DimensionMismatch(f"编码必须覆盖全部4个二比特串，实际为 {sorted(self.encode)}")
        encode = {x: validate_density(rho, dims=(2,)) for x, rho in self.encode.items()}
        measurements = []
        for povm in self.measurements:
            elems = tuple(_as_square(e, 2) for e in povm)
            if len(elems) != 2:
                raise DimensionMismatch("每个测量必须恰好有两个结果")
            for e in elems:
                if np.linalg.eigvalsh(0.5 * (e + e.conj().T))[0] < -HERM_TOL:
                    raise DimensionMismatch("POVM元素不是半正定的")
            if np.max(np.abs(elems[0] + elems[1] - I2)) > HERM_TOL:
                raise DimensionMismatch("POVM元素之和不等于单位矩阵")
            measurements.append(elems)
        if len(measurements) != 2:
            raise DimensionMismatch("(2,2)-QRAC 需要两个测量")
        object.__setattr__(self, 'encode', encode)
        object.__setattr__(self, 'measurements', tuple(measurements))


def _sharp_measurement(sigma: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    return 0.5 * (I2 + sigma), 0.5 * (I2 - sigma)


def standard_qrac_strategy() -> QRACStrategy:
    """编码 n̂ = ((-1)^x1 x̂ + (-1)^x2 ŷ)/√2，测量 σx 与 σy"""
    encode = {}
    for x1, x2 in QRAC_STRINGS:
        n = np.array([(-1) ** x1, (-1) ** x2, 0.0]) / np.sqrt(2.0)
        encode[(x1, x2)] = bloch_to_density(n)
    return QRACStrategy(encode=encode, measurements=(_sharp_measurement(SX), _sharp_measurement(SY)))


def random_qrac_strategy(rng: np.random.Generator) -> QRACStrategy:
    """随机纯态编码与两个随机方向的投影测量"""
    encode = {}
    for x in QRAC_STRINGS:
        v = rng.normal(size=3)
        encode[x] = bloch_to_density(v / np.linalg.norm(v))
    measurements = []
    for _ in range(2):
        m = rng.normal(size=3)
        m /= np.linalg.norm(m)
        measurements.append(_sharp_measurement(m[0] * SX + m[1] * SY + m[2] * SZ))
    return QRACStrategy(encode=encode, measurements=tuple(measurements))


def qrac_success(strategy: QRACStrategy, ch: CPMap) -> float:
    """
    平均成功概率 1/(2d²) Σ_x Tr[Λ(ℰ(x))(M1(x1) + M2(x2))]，d = 2

    Args:
        strategy: QRAC 策略
        ch: 信道

    Returns:
        [0, 1] 内的成功概率
    """
    m1, m2 = strategy.measurements
    total = 0.0
    for (x1, x2), rho in strategy.encode.items():
        out = ch.apply(rho)
        total += np.trace(out @ (m1[x1] + m2[x2])).real
    return float(total / 8.0)


def qrac_success_batch(strategy: QRACStrategy, tms: np.ndarray) -> np.ndarray:
    """
    qrac_success 的批量版本，信道以 (N,4,4) T 矩阵给出

    ρ = ½ Σ c_j σ_j 时 Tr[Λ(ρ)M] = ½ (T c)·m，其中 m_i = Tr[σ_i M]。
    """
    tms = np.asarray(tms, dtype=float).reshape(-1, 4, 4)
    m1, m2 = strategy.measurements
    total = np.zeros(len(tms))
    for (x1, x2), rho in strategy.encode.items():
        c = np.array([np.trace(s @ rho).real for s in PAULIS])
        m = np.array([np.trace(s @ (m1[x1] + m2[x2])).real for s in PAULIS])
        total += 0.5 * (tms @ c) @ m
    return total / 8.0


def qrac_classical_bound(d: int, n: int = 2) -> float:
    """P_rac^(2,d) = ½(1 + 1/d)"""
    if n != 2 or d < 2:
        raise ValueError(f"只支持 n=2, d≥2，实际为 n={n}, d={d}")
    return 0.5 * (1.0 + 1.0 / d)


def qrac_quantum_bound(d: int) -> float:
    """P_qrac^(2,d) = ½(1 + 1/√d)"""
    if d < 2:
        raise ValueError(f"d 必须 ≥ 2，实际为 {d}")
    return 0.5 * (1.0 + 1.0 / np.sqrt(d))


def qrac_closed_form(lam3: float) -> float:
    """Φ(λ3) 经开关校正后的有效信道上标准策略的成功概率"""
    return 0.5 * (1.0 + (1.0 + lam3) ** 2 / (4.0 * np.sqrt(2.0)))


def qrac_threshold() -> float:
    """P′(λ3) = 3/4 的根，解析值为 2^{3/4} − 1"""
    return bisect(lambda x: qrac_closed_form(x) - qrac_classical_bound(2), 0.0, 1.0, xtol=ROOT_XTOL)


def phi_effective_channel(lam3: float) -> Channel:
    return effective_channel(phi_channel(lam3).channel())


def phi_effective_tmatrices(grid: Iterable[float]) -> np.ndarray:
    """
    整个 λ3 网格上 Φ(λ3) 的有效 T 矩阵 (N,4,4)

    两个分支由 Choi 本征分解得到的 Kraus 直接构造（不用 Pauli 闭式），再施加默认控制态
    与默认校正；结果与逐点调用 phi_effective_channel 相同。
    """
    tm = np.array([phi_channel(float(x)).tmatrix() for x in grid]).reshape(-1, 4, 4)
    n = len(tm)
    plus, minus = batched_branch_chois(batched_choi_from_tmatrix(tm))
    basis, lam_tms = default_correction().tmatrices()
    omega = default_control()
    return controlled_tmatrices(
        np.broadcast_to(basis, (n, 2, 2)), np.broadcast_to(lam_tms, (n, 2, 4, 4)),
        batched_tmatrix_from_choi(plus), batched_tmatrix_from_choi(minus),
        omega, SZ @ omega @ SZ,
    )


def qrac_curve(grid: Iterable[float]) -> pd.DataFrame:
    lam3 = np.asarray(list(grid), dtype=float)
    return pd.DataFrame({
        'lambda3': lam3,
        'p_direct': qrac_success_batch(standard_qrac_strategy(), phi_effective_tmatrices(lam3)),
        'p_closed': qrac_closed_form(lam3),
        'classical_bound': np.full(len(lam3), qrac_classical_bound(2)),
    }, columns=['lambda3', 'p_direct', 'p_closed', 'classical_bound'])


# ========== 导引 ==========
def steering_F(rho_ab: np.ndarray) -> float:
    """F = 1/√2 |Tr[ρ(σx⊗σx)] + Tr[ρ(σz⊗σz)]|，F > 1 见证可导引性"""
    rho_ab = validate_density(rho_ab, dims=(4,))
    xx = np.trace(rho_ab @ np.kron(SX, SX)).real
    zz = np.trace(rho_ab @ np.kron(SZ, SZ)).real
    return float(abs(xx + zz) / np.sqrt(2.0))


def steering_F_batch(rho_ab: np.ndarray) -> np.ndarray:
    """steering_F 的批量版本，输入 (N,4,4)，不做密度矩阵校验"""
    rho_ab = np.asarray(rho_ab, dtype=complex).reshape(-1, 4, 4)
    xx = np.einsum('nab,ba->n', rho_ab, np.kron(SX, SX)).real
    zz = np.einsum('nab,ba->n', rho_ab, np.kron(SZ, SZ)).real
    return np.abs(xx + zz) / np.sqrt(2.0)


def steered_state(ch: CPMap, rho_ab: np.ndarray) -> np.ndarray:
    """(Λ⊗id)(ρ_AB)"""
    rho_ab = validate_density(rho_ab, dims=(4,))
    return apply_on_first(ch, rho_ab)


def correlation_matrix(rho_ab: np.ndarray) -> np.ndarray:
    """C_ij = Tr[ρ (σ_i ⊗ σ_j)]，i, j ∈ {x, y, z}"""
    rho_ab = _as_square(rho_ab, 4)
    return np.array([[np.trace(rho_ab @ np.kron(a, b)).real for b in PAULIS[1:]] for a in PAULIS[1:]])


def optimized_steering_F(rho_ab: np.ndarray) -> float:
    """
    双方各自选取一对正交测量方向后 F 的最大值，等于 (s1 + s2)/√2

    s1, s2 是关联矩阵最大的两个奇异值。
    """
    s = np.linalg.svd(correlation_matrix(rho_ab), compute_uv=False)
    return float((s[0] + s[1]) / np.sqrt(2.0))


def steering_closed_form(lam3: float) -> float:
    """(C_eff⊗id)|Φ+⟩ 上直接计算的 F = (5λ3² + 2λ3 + 1)/(4√2)"""
    return (5.0 * lam3 ** 2 + 2.0 * lam3 + 1.0) / (4.0 * np.sqrt(2.0))


def steering_printed_form(lam3: float) -> float:
    """F 的另一种写法 (1+λ3)²√2/4 + (3λ3²−2λ3−1)/4，仅用于对照"""
    return (1.0 + lam3) ** 2 * np.sqrt(2.0) / 4.0 + (3.0 * lam3 ** 2 - 2.0 * lam3 - 1.0) / 4.0


STEERING_FORMS = {
    'direct': steering_closed_form,
    'printed': steering_printed_form,
}


def steering_threshold(form: str = 'direct') -> float:
    """在 [0.5, 1] 上二分求 F(λ3) = 1 的根"""
    try:
        f = STEERING_FORMS[form]
    except KeyError:
        raise ValueError(f"未知的导引表达式: {form}，可选 {sorted(STEERING_FORMS)}") from None
    return bisect(lambda x: f(x) - 1.0, 0.5, 1.0, xtol=ROOT_XTOL)


def steering_curve(grid: Iterable[float]) -> pd.DataFrame:
    """(C_eff⊗id)|Φ+⟩ 就是 C_eff 的 Choi 矩阵（输出系统在前）"""
    lam3 = np.asarray(list(grid), dtype=float)
    states = batched_choi_from_tmatrix(phi_effective_tmatrices(lam3))
    return pd.DataFrame({
        'lambda3': lam3,
        'F_direct': steering_F_batch(states),
        'F_closed': steering_closed_form(lam3),
        'F_printed': steering_printed_form(lam3),
    }, columns=['lambda3', 'F_direct', 'F_closed', 'F_printed'])


# ========== 相干 ==========
def coherence_unitary(theta: float, phi1: float, phi2: float) -> np.ndarray:
    return np.array([
        [np.exp(1j * phi1) * np.cos(theta), np.exp(1j * phi2) * np.sin(theta)],
        [-np.exp(-1j * phi2) * np.sin(theta), np.exp(-1j * phi1) * np.cos(theta)],
    ])


def coherence_correction(theta: float, phi1: float, phi2: float) -> ControlledOp:
    """𝒰 = I⊗|+⟩⟨+| + U(θ,φ1,φ2)⊗|−⟩⟨−|"""
    return ControlledOp(
        basis=(KET_PLUS, KET_MINUS),
        branch_channels=(unitary_channel(I2), unitary_channel(coherence_unitary(theta, phi1, phi2))),
    )


def coherence_channel(lam: float, t: float) -> Channel:
    return Channel(coherence_breaking_kraus(lam, t))


def coherence_effective_channel(lam: float, t: float, theta: float = 0.0,
                                phi1: float = np.pi / 2, phi2: float = 0.0,
                                controlled: bool = True) -> np.ndarray:
    """
    相干破坏信道经开关和受控幺正校正后的有效 T 矩阵

    Args:
        lam, t: 相干破坏信道参数，需满足 |λ|+|t| ≤ 1
        theta, phi1, phi2: 校正幺正 U 的参数
        controlled: False 时直接对控制比特求迹

    Raises:
        NotCompletelyPositive: 参数不在CP区域内
    """
    ch = coherence_channel(lam, t)
    op = coherence_correction(theta, phi1, phi2) if controlled else identity_op()
    return effective_channel(ch, op).tmatrix


def _rotation_of(u: np.ndarray) -> np.ndarray:
    """U·U† 共轭作用的 4x4 T 矩阵（块对角 1 ⊕ R）"""
    rot = np.empty((4, 4))
    for i, si in enumerate(PAULIS):
        for j, sj in enumerate(PAULIS):
            rot[i, j] = 0.5 * np.trace(si @ u @ sj @ u.conj().T).real
    return rot


def coherence_minus_tmatrix(lam: float, t: float) -> np.ndarray:
    """
    相干破坏信道 C- 分支的 T 矩阵

    C-(ρ) = ½a²(1+λ)ρ00|1⟩⟨1| + ½c²(1+λ)ρ11|0⟩⟨0| + (g/2)σzρσz，g = ((1−λ)² − t²)/4
    """
    a2 = (1.0 - lam - t) / 2.0
    c2 = (1.0 - lam + t) / 2.0
    alpha = 0.5 * a2 * (1.0 + lam)
    beta = 0.5 * c2 * (1.0 + lam)
    g = ((1.0 - lam) ** 2 - t ** 2) / 4.0
    down = np.array([[0.5, 0, 0, 0.5], [0, 0, 0, 0], [0, 0, 0, 0], [-0.5, 0, 0, -0.5]])
    up = np.array([[0.5, 0, 0, -0.5], [0, 0, 0, 0], [0, 0, 0, 0], [0.5, 0, 0, -0.5]])
    return alpha * down + beta * up + 0.5 * g * np.diag([1.0, -1.0, -1.0, 1.0])


def coherence_closed_form(lam: float, t: float, theta: float = 0.0,
                          phi1: float = np.pi / 2, phi2: float = 0.0) -> np.ndarray:
    """
    有效 T 矩阵的闭式：T_Λ² + (R_U − I)·T_{C-}

    θ=0 时 z 行为 (t(1+λ), 0, 0, λ²)，x/y 块为
    [[g sin²φ1, −g sin2φ1/2], [g sin2φ1/2, g sin²φ1]]。
    """
    coherence_breaking_kraus(lam, t)  # CP 校验
    base = np.zeros((4, 4))
    base[0, 0] = 1.0
    base[3, 0] = t
    base[3, 3] = lam
    rot = _rotation_of(coherence_unitary(theta, phi1, phi2))
    return base @ base + (rot - np.eye(4)) @ coherence_minus_tmatrix(lam, t)


@dataclass(frozen=True)
class CoherenceEffectiveForm:
    """
    有效 T 矩阵按以下位置拆分：

        [[1,    0,    0,     0   ],
         [t2ᴿ,  γ1ᴿ, −γ2ᴵ,  γ3ᴿ ],
         [t2ᴵ,  γ1ᴵ,  γ2ᴿ,  γ3ᴵ ],
         [t1,   η1,  −iη2,  η3  ]]
    """

    lam: float
    t: float
    theta: float
    phi1: float
    phi2: float
    t1: float
    t2: complex
    eta: Tuple[float, complex, float]
    gamma: Tuple[complex, complex, complex]

    def to_dict(self) -> Dict[str, object]:
        def enc(z):
            z = complex(z)
            return {'re': z.real, 'im': z.imag}

        return {
            'lambda': self.lam, 't': self.t,
            'theta': self.theta, 'phi1': self.phi1, 'phi2': self.phi2,
            't1': self.t1, 't2': enc(self.t2),
            'eta': [enc(e) for e in self.eta],
            'gamma': [enc(g) for g in self.gamma],
        }


def coherence_form(tm: np.ndarray, lam: float = float('nan'), t: float = float('nan'),
                   theta: float = float('nan'), phi1: float = float('nan'),
                   phi2: float = float('nan')) -> CoherenceEffectiveForm:
    tm = np.asarray(tm, dtype=float)
    if tm.shape != (4, 4):
        raise DimensionMismatch(f"T矩阵必须为4x4，实际为 {tm.shape}")
    return CoherenceEffectiveForm(
        lam=lam, t=t, theta=theta, phi1=phi1, phi2=phi2,
        t1=float(tm[3, 0]),
        t2=complex(tm[1, 0], tm[2, 0]),
        eta=(float(tm[3, 1]), 1j * tm[3, 2], float(tm[3, 3])),
        gamma=(complex(tm[1, 1], tm[2, 1]), complex(tm[2, 2], -tm[1, 2]), complex(tm[1, 3], tm[2, 3])),
    )


def l1_coherence(rho: np.ndarray) -> float:
    """计算基下的 l1 相干度 |ρ01| + |ρ10|"""
    rho = _as_square(rho, 2)
    return float(abs(rho[0, 1]) + abs(rho[1, 0]))

