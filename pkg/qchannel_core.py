#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
量子信道核心模块 - 量子比特态与信道的表示、转换与组合

支持三种等价表示：Kraus算符组、T矩阵(4x4实仿射表示)、Choi矩阵(迹为1约定)。
所有类型构造后不可变，所有运算为纯函数，可在多线程中并行调用。
"""

import json
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.stats import unitary_group

logger = logging.getLogger(__name__)

# ========== 配置常量 ==========
HERM_TOL = 1e-10      # 厄米性/迹容差
PSD_TOL = 1e-9        # 半正定容差
KRAUS_CUTOFF = 1e-12  # 从Choi提取Kraus时丢弃的本征值阈值
PROB_TOL = 1e-12      # 概率向量容差
BLOCH_TOL = 1e-12     # Bloch球半径容差

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (I2, SX, SY, SZ)


def pauli_matrices() -> Tuple[np.ndarray, ...]:
    """(I, σx, σy, σz) 的副本"""
    return tuple(s.copy() for s in PAULIS)


# CP四面体顶点：恒等、σx、σy、σz共轭
TETRAHEDRON_VERTICES = np.array([
    [1.0, 1.0, 1.0],
    [1.0, -1.0, -1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0],
])

# 概率 p -> λ 的线性映射 (λ_i = Σ_u M[i,u] p_u)
P_TO_LAMBDA = np.array([
    [1.0, 1.0, -1.0, -1.0],
    [1.0, -1.0, 1.0, -1.0],
    [1.0, -1.0, -1.0, 1.0],
])


# ========== 异常 ==========
class SwitchLabError(Exception):
    """本项目所有领域错误的基类"""


class BlochOutOfBall(SwitchLabError):
    """Bloch向量长度超过1"""


class DimensionMismatch(SwitchLabError):
    """矩阵维度不符合要求"""


class NotCompletelyPositive(SwitchLabError):
    """映射不是完全正的（Choi矩阵存在负本征值）"""


class NotTracePreserving(SwitchLabError):
    """Kraus算符不满足完备性，或T矩阵首行不是(1,0,0,0)"""


# ========== 量子态 ==========
def bloch_to_density(a: Sequence[float]) -> np.ndarray:
    """
    由Bloch向量构造密度矩阵 ρ = ½(I + a·σ)

    Args:
        a: 三分量实向量，|a| ≤ 1

    Returns:
        2x2 复厄米矩阵
    """
    a = np.asarray(a, dtype=float)
    if a.shape != (3,):
        raise DimensionMismatch(f"Bloch向量必须是3维，实际为 {a.shape}")
    norm = float(np.linalg.norm(a))
    if norm > 1.0 + BLOCH_TOL:
        raise BlochOutOfBall(f"Bloch向量长度 {norm:.6g} 超出单位球")
    return 0.5 * (I2 + a[0] * SX + a[1] * SY + a[2] * SZ)


def density_to_bloch(rho: np.ndarray) -> np.ndarray:
    """返回 a_i = Tr[σ_i ρ]"""
    rho = _as_square(rho, 2)
    return np.array([np.trace(s @ rho).real for s in (SX, SY, SZ)])


def validate_density(rho: np.ndarray, dims: Tuple[int, ...] = (2, 4)) -> np.ndarray:
    """检查厄米性、单位迹与半正定性，返回复数数组"""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or rho.shape[0] not in dims:
        raise DimensionMismatch(f"密度矩阵维度必须为 {dims}，实际为 {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > HERM_TOL:
        raise DimensionMismatch("密度矩阵不是厄米矩阵")
    if abs(np.trace(rho) - 1.0) > HERM_TOL:
        raise DimensionMismatch(f"密度矩阵迹为 {np.trace(rho).real:.12g}，应为1")
    if np.linalg.eigvalsh(rho)[0] < -HERM_TOL:
        raise NotCompletelyPositive("密度矩阵存在负本征值")
    return rho


def ket_projector(psi: Sequence[complex]) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


PHI_PLUS = ket_projector([1, 0, 0, 1])


def _as_square(m: np.ndarray, dim: int) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.shape != (dim, dim):
        raise DimensionMismatch(f"需要 {dim}x{dim} 矩阵，实际为 {m.shape}")
    return m


# ========== 部分迹 / 部分转置 ==========
def partial_trace(rho: np.ndarray, keep: int) -> np.ndarray:
    """
    两个量子比特的部分迹

    Args:
        rho: 4x4 矩阵，子系统顺序为 (第一, 第二)
        keep: 保留的子系统，0 表示第一个，1 表示第二个
    """
    r = _as_square(rho, 4).reshape(2, 2, 2, 2)
    if keep == 0:
        return np.einsum('ajbj->ab', r)
    return np.einsum('jajb->ab', r)


def partial_transpose(rho: np.ndarray, sys: int = 1) -> np.ndarray:
    """对第 sys 个子系统(0或1)做转置"""
    r = _as_square(rho, 4).reshape(2, 2, 2, 2)
    if sys == 0:
        return r.transpose(2, 1, 0, 3).reshape(4, 4)
    return r.transpose(0, 3, 2, 1).reshape(4, 4)


# ========== Pauli 概率 <-> λ ==========
def probs_to_lambdas(p: Sequence[float]) -> np.ndarray:
    return P_TO_LAMBDA @ np.asarray(p, dtype=float)


def lambdas_to_probs(lam: Sequence[float]) -> "PauliChannel":
    """
    λ 向量转换为 Pauli 信道概率

    Raises:
        NotCompletelyPositive: λ 不在 CP 四面体内
    """
    l1, l2, l3 = np.asarray(lam, dtype=float)
    p = np.array([
        1 + l1 + l2 + l3,
        1 + l1 - l2 - l3,
        1 - l1 + l2 - l3,
        1 - l1 - l2 + l3,
    ]) / 4.0
    if np.min(p) < -PROB_TOL:
        raise NotCompletelyPositive(f"λ={tuple(np.round([l1, l2, l3], 12))} 不在CP四面体内")
    return PauliChannel(np.clip(p, 0.0, None))


# ========== 信道类型 ==========
@dataclass(frozen=True, eq=False)
class CPMap:
    """完全正映射（可以不保迹），以 Kraus 算符组存储"""

    kraus: Tuple[np.ndarray, ...]

    def __post_init__(self):
        ops = tuple(np.array(k, dtype=complex) for k in self.kraus)
        for k in ops:
            if k.shape != (2, 2):
                raise DimensionMismatch(f"Kraus算符必须为2x2，实际为 {k.shape}")
        object.__setattr__(self, 'kraus', ops)

    @classmethod
    def zero(cls) -> "CPMap":
        """分支不存在时使用的零映射"""
        return cls(())

    @property
    def is_zero(self) -> bool:
        return all(np.max(np.abs(k)) < KRAUS_CUTOFF for k in self.kraus)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        rho = _as_square(rho, 2)
        out = np.zeros((2, 2), dtype=complex)
        for k in self.kraus:
            out += k @ rho @ k.conj().T
        return out

    def dual_apply(self, effect: np.ndarray) -> np.ndarray:
        """Heisenberg图像 Λ*(A) = Σ K† A K"""
        effect = _as_square(effect, 2)
        out = np.zeros((2, 2), dtype=complex)
        for k in self.kraus:
            out += k.conj().T @ effect @ k
        return out

    @cached_property
    def choi(self) -> np.ndarray:
        return choi_of(self.kraus)

    @cached_property
    def tmatrix(self) -> np.ndarray:
        return tmatrix_of(self.kraus)

    def trace_weight(self) -> float:
        """Tr[C(I/2)]，即最大混态输入下该映射的后选择概率"""
        return float(np.trace(self.apply(I2 / 2)).real)

    def scaled(self, factor: float) -> "CPMap":
        if factor < 0:
            raise NotCompletelyPositive("CP映射只能乘以非负系数")
        s = np.sqrt(factor)
        return CPMap(tuple(s * k for k in self.kraus))


@dataclass(frozen=True, eq=False)
class Channel(CPMap):
    """保迹的量子比特信道"""

    def __post_init__(self):
        super().__post_init__()
        if not self.kraus:
            raise NotTracePreserving("信道至少需要一个Kraus算符")
        completeness = sum(k.conj().T @ k for k in self.kraus)
        if np.max(np.abs(completeness - I2)) > HERM_TOL:
            raise NotTracePreserving("Kraus算符不满足完备性 ΣK†K = I")

    @property
    def is_unital(self) -> bool:
        return bool(np.max(np.abs(self.tmatrix[1:, 0])) < HERM_TOL)


@dataclass(frozen=True, eq=False)
class PauliChannel:
    """Pauli信道 ρ -> Σ p_u σ_u ρ σ_u"""

    p: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float).reshape(-1)
        if p.shape != (4,):
            raise DimensionMismatch(f"Pauli概率向量必须是4维，实际为 {p.shape}")
        if np.min(p) < -PROB_TOL or abs(p.sum() - 1.0) > PROB_TOL:
            raise NotCompletelyPositive(f"Pauli概率向量无效: {p.tolist()}")
        object.__setattr__(self, 'p', p)

    @property
    def lambdas(self) -> np.ndarray:
        return probs_to_lambdas(self.p)

    def kraus(self) -> Tuple[np.ndarray, ...]:
        return tuple(np.sqrt(max(pu, 0.0)) * s for pu, s in zip(self.p, PAULIS) if pu > 0)

    def channel(self) -> Channel:
        return Channel(self.kraus())

    def tmatrix(self) -> np.ndarray:
        return np.diag(np.concatenate(([1.0], self.lambdas)))


# ========== 表示之间的转换 ==========
def choi_of(kraus: Iterable[np.ndarray]) -> np.ndarray:
    """
    Choi矩阵 (Λ⊗id)(|Φ+⟩⟨Φ+|)，输出系统在前，参考系统在后，保迹映射迹为1

    Args:
        kraus: Kraus算符序列，可为空（零映射）

    Returns:
        4x4 复矩阵
    """
    choi = np.zeros((4, 4), dtype=complex)
    for k in kraus:
        v = np.asarray(k, dtype=complex).reshape(-1)
        choi += np.outer(v, v.conj())
    return choi / 2.0


def tmatrix_of(kraus: Iterable[np.ndarray]) -> np.ndarray:
    """T_ij = ½ Tr[σ_i Λ(σ_j)]"""
    cp = kraus if isinstance(kraus, CPMap) else CPMap(tuple(kraus))
    images = [cp.apply(s) for s in PAULIS]
    t = np.empty((4, 4))
    for i, si in enumerate(PAULIS):
        for j in range(4):
            t[i, j] = 0.5 * np.trace(si @ images[j]).real
    return t


def choi_from_tmatrix(t: np.ndarray) -> np.ndarray:
    """J = ¼ Σ T_ij σ_i ⊗ σ_j^T"""
    t = np.asarray(t, dtype=float)
    if t.shape != (4, 4):
        raise DimensionMismatch(f"T矩阵必须为4x4，实际为 {t.shape}")
    choi = np.zeros((4, 4), dtype=complex)
    for i, si in enumerate(PAULIS):
        for j, sj in enumerate(PAULIS):
            if t[i, j] != 0.0:
                choi += t[i, j] * np.kron(si, sj.T)
    return choi / 4.0


# ---------- 批量转换 (N 个信道一起算) ----------
_PAULI_STACK = np.array(PAULIS)
_CHOI_BASIS = np.array([[np.kron(si, sj.T) for sj in PAULIS] for si in PAULIS]) / 4.0


def batched_choi_from_tmatrix(tm: np.ndarray) -> np.ndarray:
    """(N,4,4) T 矩阵 -> (N,4,4) Choi 矩阵"""
    return np.einsum('nij,ijab->nab', np.asarray(tm, dtype=complex), _CHOI_BASIS)


def batched_tmatrix_from_choi(choi: np.ndarray) -> np.ndarray:
    """(N,4,4) Choi 矩阵 -> (N,4,4) T 矩阵，T_ij = Tr[J (σ_i ⊗ σ_j^T)]"""
    return 4.0 * np.einsum('nab,ijba->nij', np.asarray(choi, dtype=complex), _CHOI_BASIS).real


def batched_tmatrix_from_kraus(kraus: np.ndarray) -> np.ndarray:
    """(N,K,2,2) Kraus 组 -> (N,4,4) T 矩阵，T_ij = ½ Σ_k Tr[σ_i K σ_j K†]"""
    kraus = np.asarray(kraus, dtype=complex)
    return 0.5 * np.einsum('iab,nkbc,jcd,nkad->nij',
                           _PAULI_STACK, kraus, _PAULI_STACK, kraus.conj()).real


def choi_to_kraus(choi: np.ndarray) -> Tuple[np.ndarray, ...]:
    """
    Choi矩阵本征分解得到最小Kraus组

    每个Kraus算符的全局相位固定为：模最大的矩阵元为正实数。

    Raises:
        NotCompletelyPositive: Choi矩阵存在小于 -PSD_TOL 的本征值
    """
    choi = _as_square(choi, 4)
    choi = 0.5 * (choi + choi.conj().T)
    vals, vecs = np.linalg.eigh(choi)
    if vals[0] < -PSD_TOL:
        raise NotCompletelyPositive(f"Choi矩阵最小本征值 {vals[0]:.3e} < 0")
    ops = []
    for mu, v in sorted(zip(vals, vecs.T), key=lambda item: -item[0]):
        if mu <= KRAUS_CUTOFF:
            continue
        k = np.sqrt(2.0 * mu) * v.reshape(2, 2)
        flat = k.reshape(-1)
        pivot = flat[np.argmax(np.abs(flat))]
        ops.append(k * (abs(pivot) / pivot))
    return tuple(ops)


def kraus_from_tmatrix(t: np.ndarray) -> Tuple[np.ndarray, ...]:
    """
    从保迹T矩阵重构Kraus算符（最多4个）

    Raises:
        NotTracePreserving: 首行不是 (1,0,0,0)
        NotCompletelyPositive: 对应Choi矩阵不是半正定
    """
    t = np.asarray(t, dtype=float)
    if t.shape != (4, 4):
        raise DimensionMismatch(f"T矩阵必须为4x4，实际为 {t.shape}")
    if np.max(np.abs(t[0] - np.array([1.0, 0.0, 0.0, 0.0]))) > PROB_TOL:
        raise NotTracePreserving(f"T矩阵首行必须为(1,0,0,0)，实际为 {t[0].tolist()}")
    return choi_to_kraus(choi_from_tmatrix(t))


def channel_from_tmatrix(t: np.ndarray) -> Channel:
    return Channel(kraus_from_tmatrix(t))


# ========== 作用 / 组合 / 对偶 ==========
MapLike = Union[CPMap, np.ndarray]


def apply(ch: MapLike, rho: np.ndarray) -> np.ndarray:
    """
    将信道作用于单比特态

    Args:
        ch: CPMap/Channel（Kraus路径）或 4x4 实 T 矩阵（仿射路径）
        rho: 2x2 密度矩阵

    Returns:
        输出密度矩阵
    """
    rho = _as_square(rho, 2)
    if isinstance(ch, CPMap):
        return ch.apply(rho)
    t = np.asarray(ch, dtype=float)
    if t.shape != (4, 4):
        raise DimensionMismatch(f"T矩阵必须为4x4，实际为 {t.shape}")
    v = np.array([np.trace(s @ rho).real for s in PAULIS])
    w = t @ v
    return 0.5 * sum(wi * s for wi, s in zip(w, PAULIS))


def apply_choi(choi: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """通过信道-态对偶作用：Λ(ρ) = 2 Tr_ref[J (I ⊗ ρ^T)]"""
    choi = _as_square(choi, 4)
    rho = _as_square(rho, 2)
    return 2.0 * partial_trace(choi @ np.kron(I2, rho.T), keep=0)


def apply_on_first(ch: CPMap, rho_ab: np.ndarray) -> np.ndarray:
    """(Λ ⊗ id)(ρ_AB)"""
    rho_ab = _as_square(rho_ab, 4)
    out = np.zeros((4, 4), dtype=complex)
    for k in ch.kraus:
        kk = np.kron(k, I2)
        out += kk @ rho_ab @ kk.conj().T
    return out


def compose(outer: CPMap, inner: CPMap) -> CPMap:
    """
    信道级联 outer∘inner，Kraus组为两两乘积

    两个参数都是 Channel 时返回 Channel，否则返回 CPMap。
    """
    ops = tuple(a @ b for a in outer.kraus for b in inner.kraus)
    if isinstance(outer, Channel) and isinstance(inner, Channel):
        return Channel(ops)
    return CPMap(ops)


def dual(ch: CPMap) -> CPMap:
    """对偶映射（Heisenberg图像）的Kraus组为 {K†}；对保迹信道它是幺正的CP映射"""
    return CPMap(tuple(k.conj().T for k in ch.kraus))


# ========== 常用信道 ==========
def depolarizing(t: float) -> Channel:
    """Γ^t_2(ρ) = tρ + (1-t) I/2，-1/3 ≤ t ≤ 1"""
    if t < -1.0 / 3.0 - PROB_TOL or t > 1.0 + PROB_TOL:
        raise NotCompletelyPositive(f"去极化参数 t={t} 超出 [-1/3, 1]")
    p = 3.0 * (1.0 - t) / 4.0
    p = min(max(p, 0.0), 1.0)
    return pauli_channel([1.0 - p, p / 3.0, p / 3.0, p / 3.0]).channel()


def pauli_channel(p: Sequence[float]) -> PauliChannel:
    return PauliChannel(np.asarray(p, dtype=float))


def pauli_from_lambdas(lam: Sequence[float]) -> Channel:
    return lambdas_to_probs(lam).channel()


def unitary_channel(u: np.ndarray) -> Channel:
    return Channel((_as_square(u, 2),))


def nonunital_tmatrix(k1: float, k3: float, t: float) -> np.ndarray:
    """三参数非幺正族 diag(1,k1,k1,k3)，z 行平移 t"""
    return np.array([
        [1.0, 0.0, 0.0, 0.0],
        [0.0, k1, 0.0, 0.0],
        [0.0, 0.0, k1, 0.0],
        [t, 0.0, 0.0, k3],
    ])


def coherence_breaking_kraus(lam: float, t: float) -> Tuple[np.ndarray, ...]:
    """
    相干破坏信道（T矩阵只有 T00=1, T30=t, T33=λ）的 Kraus 算符 K1..K4

    Raises:
        NotCompletelyPositive: 四个权重 (1±λ±t)/2 中有负值，即 |λ|+|t| > 1
    """
    weights = np.array([1 - lam - t, 1 + lam - t, 1 - lam + t, 1 + lam + t]) / 2.0
    if np.min(weights) < -PROB_TOL:
        raise NotCompletelyPositive(f"(λ={lam}, t={t}) 不满足 |λ|+|t| ≤ 1")
    a, b, c, d = np.sqrt(np.clip(weights, 0.0, None))
    return (
        a * np.array([[0, 0], [1, 0]], dtype=complex),
        b * np.array([[0, 0], [0, 1]], dtype=complex),
        c * np.array([[0, 1], [0, 0]], dtype=complex),
        d * np.array([[1, 0], [0, 0]], dtype=complex),
    )


# ========== 随机采样 ==========
def random_pauli_lambdas(rng: np.random.Generator, size: Optional[int] = None) -> np.ndarray:
    """在CP四面体内均匀采样 λ（单纯形上的Dirichlet(1,1,1,1)经线性映射）"""
    n = 1 if size is None else size
    p = rng.dirichlet(np.ones(4), size=n)
    lam = p @ P_TO_LAMBDA.T
    return lam[0] if size is None else lam


def random_unitary(rng: np.random.Generator, dim: int = 2, size: Optional[int] = None) -> np.ndarray:
    """Haar 随机幺正；给出 size 时返回 (size, dim, dim)"""
    if size is None:
        return unitary_group.rvs(dim, random_state=rng)
    return unitary_group.rvs(dim, size=size, random_state=rng).reshape(size, dim, dim)


def random_channel(rng: np.random.Generator, rank: int = 4) -> Channel:
    """由随机等距嵌入 V (2r x 2) 切分得到秩不超过 r 的随机信道"""
    v = random_unitary(rng, 2 * rank)[:, :2]
    return Channel(tuple(v[2 * k:2 * k + 2, :] for k in range(rank)))


def random_state(rng: np.random.Generator, dim: int = 2) -> np.ndarray:
    """Hilbert-Schmidt 测度下的随机混态"""
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


# ========== JSON 编解码 ==========
def _matrix_to_json(m: np.ndarray) -> Dict[str, List[List[float]]]:
    m = np.asarray(m, dtype=complex)
    return {'re': m.real.tolist(), 'im': m.imag.tolist()}


def _matrix_from_json(obj: Dict[str, Any]) -> np.ndarray:
    re = np.asarray(obj['re'], dtype=float)
    im = np.asarray(obj.get('im', np.zeros_like(re)), dtype=float)
    return re + 1j * im


def channel_to_json(ch: Union[CPMap, PauliChannel, np.ndarray]) -> Dict[str, Any]:
    """序列化为 {"kind": "pauli"|"tmatrix"|"kraus", ...}"""
    if isinstance(ch, PauliChannel):
        return {'kind': 'pauli', 'p': ch.p.tolist(), 'lambdas': ch.lambdas.tolist()}
    if isinstance(ch, CPMap):
        return {'kind': 'kraus', 'ops': [_matrix_to_json(k) for k in ch.kraus]}
    return {'kind': 'tmatrix', 'm': np.asarray(ch, dtype=float).tolist()}


def channel_from_json(obj: Union[str, Dict[str, Any]]) -> Channel:
    if isinstance(obj, str):
        obj = json.loads(obj)
    kind = obj.get('kind')
    if kind == 'pauli':
        if 'p' in obj:
            return pauli_channel(obj['p']).channel()
        return pauli_from_lambdas(obj['lambdas'])
    if kind == 'tmatrix':
        return channel_from_tmatrix(np.asarray(obj['m'], dtype=float))
    if kind == 'kraus':
        return Channel(tuple(_matrix_from_json(op) for op in obj['ops']))
    raise DimensionMismatch(f"未知的信道类型: {kind}")
