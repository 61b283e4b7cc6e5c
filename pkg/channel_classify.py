#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
信道分类模块

判定纠缠破坏(EB)、n-不相容破坏(n-IBC)与相干破坏(CB)，
并据此给出信道在量子开关下 "有用 / 无用 / 完全无用" 的标志。
"""

import logging
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, Iterable, Optional, Union

import numpy as np
from scipy.optimize import linprog

from qchannel_core import (
    HERM_TOL, KRAUS_CUTOFF, PHI_PLUS, PSD_TOL,
    CPMap, NotCompletelyPositive, PauliChannel,
    partial_transpose, _as_square,
)
from switch_engine import branch_maps, pauli_branches
from info_tasks import (
    optimized_steering_F, qrac_classical_bound, qrac_success,
    standard_qrac_strategy, steered_state, steering_F,
)

logger = logging.getLogger(__name__)

EB_TOL = 1e-9
CB_TOL = 1e-10
WITNESS_TOL = 1e-9

# IBC 三态标志
IBC_BREAKING = 'breaking'
IBC_NOT_BREAKING = 'not-breaking'
IBC_UNKNOWN = 'unknown'

DEFAULT_IBC_NS = (2, 3, 4)

UselessPredicate = Callable[[CPMap], bool]


# ========== PPT / 纠缠破坏 ==========
def ppt_margin(rho_ab: np.ndarray) -> float:
    """部分转置后的最小本征值；非负即 PPT"""
    pt = partial_transpose(_as_square(rho_ab, 4), sys=1)
    return float(np.linalg.eigvalsh(0.5 * (pt + pt.conj().T))[0])


def is_ppt(rho_ab: np.ndarray, tol: float = EB_TOL) -> bool:
    return ppt_margin(rho_ab) >= -tol


def _normalized_choi(m: CPMap) -> Optional[np.ndarray]:
    """按迹归一化的 Choi 矩阵；零映射返回 None"""
    choi = m.choi
    vals = np.linalg.eigvalsh(0.5 * (choi + choi.conj().T))
    if vals[0] < -PSD_TOL:
        raise NotCompletelyPositive(f"Choi矩阵最小本征值 {vals[0]:.3e} < 0")
    tr = float(np.trace(choi).real)
    if tr <= KRAUS_CUTOFF:
        return None
    return choi / tr


def is_entanglement_breaking(m: CPMap) -> bool:
    """
    Choi 矩阵的 PPT 判据（2⊗2 时等价于可分性）

    不保迹的分支映射按迹归一化后再判定；零映射约定为 EB。

    Raises:
        NotCompletelyPositive: Choi矩阵不是半正定
    """
    if m.is_zero:
        return True
    choi = _normalized_choi(m)
    if choi is None:
        return True
    return is_ppt(choi)


def pauli_ebc_margin(lam: Iterable[float]) -> float:
    """Σ|λi| − 1，≤ 0 即 EB"""
    return float(np.sum(np.abs(np.asarray(lam, dtype=float))) - 1.0)


def pauli_is_ebc_batch(lam: np.ndarray, tol: float = EB_TOL) -> np.ndarray:
    """
    批量八面体判据

    Args:
        lam: (N, 3) λ 数组；整行 NaN 表示零分支，视为 EB

    Returns:
        (N,) 布尔数组
    """
    lam = np.atleast_2d(np.asarray(lam, dtype=float))
    margin = np.abs(lam).sum(axis=1) - 1.0
    return np.where(np.isnan(margin), True, margin <= tol)


_OCTAHEDRON_VERTICES = np.vstack([np.eye(3), -np.eye(3)])


def octahedron_contains_lp(lam: Iterable[float]) -> bool:
    """
    线性规划可行性：λ 是否为八面体六个顶点 ±e_i 的凸组合

    与 pauli_ebc_margin 相互独立，用作对照。
    """
    lam = np.asarray(lam, dtype=float).reshape(3)
    a_eq = np.vstack([_OCTAHEDRON_VERTICES.T, np.ones(6)])
    b_eq = np.concatenate([lam, [1.0]])
    res = linprog(np.zeros(6), A_eq=a_eq, b_eq=b_eq, bounds=[(0, None)] * 6, method='highs')
    return res.status == 0


# ========== 不相容破坏 ==========
def depolarizing_ibc_threshold(n: int, d: int = 2) -> float:
    """Γ^t_d 在 t ≤ (n+d)/(n(1+d)) 时是 n-IBC"""
    if n < 2 or d < 2:
        raise ValueError(f"需要 n ≥ 2 且 d ≥ 2，实际为 n={n}, d={d}")
    return (n + d) / (n * (1.0 + d))


def ibc_all_n_threshold(d: int = 2) -> float:
    """对所有 n 都是 IBC 的去极化参数上界 (3d−1)(d−1)^{d−1}/(d^d(d+1))"""
    if d < 2:
        raise ValueError(f"d 必须 ≥ 2，实际为 {d}")
    return (3 * d - 1) * (d - 1) ** (d - 1) / (d ** d * (d + 1.0))


def depolarizing_parameter(tm: np.ndarray) -> Optional[float]:
    """T 矩阵形如 diag(1, t, t, t) 时返回 t，否则返回 None"""
    tm = np.asarray(tm, dtype=float)
    t = tm[1, 1]
    if np.max(np.abs(tm - np.diag([1.0, t, t, t]))) > HERM_TOL:
        return None
    return float(t)


def ibc_witnesses(m: CPMap) -> Dict[str, float]:
    """
    两个非 2-IBC 见证：标准策略下的 QRAC 成功概率与导引函数

    steering 为固定设置 σx/σz 下的 F，steering_opt 为双方各取一对正交方向后的最大值。
    """
    state = steered_state(m, PHI_PLUS)
    return {
        'qrac': qrac_success(standard_qrac_strategy(), m),
        'steering': steering_F(state),
        'steering_opt': optimized_steering_F(state),
    }


def _ibc_flag(n: int, is_ebc: bool, depol_t: Optional[float],
              witnesses: Optional[Dict[str, float]]) -> str:
    if is_ebc:
        return IBC_BREAKING
    if depol_t is not None and depol_t <= depolarizing_ibc_threshold(n) + EB_TOL:
        return IBC_BREAKING
    if n == 2 and witnesses is not None:
        if witnesses['qrac'] > qrac_classical_bound(2) + WITNESS_TOL:
            return IBC_NOT_BREAKING
        if max(witnesses['steering'], witnesses['steering_opt']) > 1.0 + WITNESS_TOL:
            return IBC_NOT_BREAKING
    return IBC_UNKNOWN


# ========== 相干破坏 ==========
_CB_FREE = np.zeros((4, 4), dtype=bool)
_CB_FREE[0, 0] = _CB_FREE[3, 0] = _CB_FREE[3, 3] = True


def is_coherence_breaking(m: Union[CPMap, np.ndarray], tol: float = CB_TOL) -> bool:
    """T 矩阵除 (0,0)、(3,0)、(3,3) 外全部为零"""
    tm = m.tmatrix if isinstance(m, CPMap) else np.asarray(m, dtype=float)
    return bool(np.max(np.abs(tm[~_CB_FREE])) <= tol)


USELESS_PREDICATES: Dict[str, UselessPredicate] = {
    'eb': is_entanglement_breaking,
    'cb': is_coherence_breaking,
}


def resolve_predicate(pred: Union[str, UselessPredicate]) -> UselessPredicate:
    if callable(pred):
        return pred
    try:
        return USELESS_PREDICATES[pred]
    except KeyError:
        raise ValueError(f"未知的无用判据: {pred}，可选 {sorted(USELESS_PREDICATES)}") from None


# ========== 开关下的有用性 ==========
@dataclass(frozen=True)
class SwitchUsefulness:
    useless_plain: bool
    useful_under_plus: bool
    useful_under_minus: bool

    @property
    def completely_useless(self) -> bool:
        return self.useless_plain and not self.useful_under_plus and not self.useful_under_minus

    def to_dict(self) -> Dict[str, bool]:
        d = asdict(self)
        d['completely_useless'] = self.completely_useless
        return d


def _branch_useful(branch: Optional[CPMap], pred: UselessPredicate) -> bool:
    if branch is None or branch.is_zero:
        return False
    return not pred(branch)


def switch_usefulness(ch: Union[CPMap, PauliChannel],
                      useless_pred: Union[str, UselessPredicate] = 'eb') -> SwitchUsefulness:
    """
    分别对信道本身、C+ 分支和 C- 分支求值无用判据

    Pauli 信道配合 EB 判据时直接使用分支的 λ 闭式与八面体判据。
    """
    if isinstance(ch, PauliChannel) and useless_pred == 'eb':
        br = pauli_branches(ch)
        plus_useful = br.c_plus is not None and pauli_ebc_margin(br.c_plus.lambdas) > EB_TOL
        minus_useful = br.c_minus is not None and pauli_ebc_margin(br.c_minus.lambdas) > EB_TOL
        return SwitchUsefulness(
            useless_plain=pauli_ebc_margin(ch.lambdas) <= EB_TOL,
            useful_under_plus=plus_useful,
            useful_under_minus=minus_useful,
        )

    pred = resolve_predicate(useless_pred)
    if isinstance(ch, PauliChannel):
        ch = ch.channel()
    plus, minus = branch_maps(ch)
    return SwitchUsefulness(
        useless_plain=pred(ch),
        useful_under_plus=_branch_useful(plus, pred),
        useful_under_minus=_branch_useful(minus, pred),
    )


# ========== 综合分类 ==========
@dataclass(frozen=True)
class ChannelClassification:
    is_ebc: bool
    ppt_margin: float
    pauli_octahedron_margin: Optional[float]
    ibc_flags: Dict[int, str]
    is_coherence_breaking: bool
    witnesses: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, object]:
        d = asdict(self)
        d['ibc_flags'] = {str(n): flag for n, flag in self.ibc_flags.items()}
        return d


def _pauli_lambdas(tm: np.ndarray) -> Optional[np.ndarray]:
    """T 矩阵是 Pauli 信道 (对角、幺正) 时返回 λ"""
    if np.max(np.abs(tm - np.diag(np.diag(tm)))) > HERM_TOL:
        return None
    return np.diag(tm)[1:].copy()


def classify_channel(ch: Union[CPMap, PauliChannel], witnesses: bool = True,
                     ns: Iterable[int] = DEFAULT_IBC_NS) -> ChannelClassification:
    """
    对信道做完整分类

    Args:
        ch: 信道（CPMap/Channel 或 PauliChannel）
        witnesses: 是否计算 QRAC 与导引见证，用于 2-IBC 判定
        ns: 需要报告的 n-IBC 的 n

    Returns:
        ChannelClassification
    """
    if isinstance(ch, PauliChannel):
        ch = ch.channel()
    tm = ch.tmatrix
    choi = _normalized_choi(ch)
    margin = float('inf') if choi is None else ppt_margin(choi)
    is_ebc = choi is None or margin >= -EB_TOL

    lam = _pauli_lambdas(tm)
    octahedron = None if lam is None else pauli_ebc_margin(lam)
    if octahedron is not None and (octahedron <= EB_TOL) != is_ebc:
        logger.warning(f"八面体判据 ({octahedron:.3e}) 与 PPT 判据 ({margin:.3e}) 不一致")

    found = ibc_witnesses(ch) if witnesses else None
    depol_t = depolarizing_parameter(tm)
    flags = {n: _ibc_flag(n, is_ebc, depol_t, found) for n in ns}
    return ChannelClassification(
        is_ebc=is_ebc,
        ppt_margin=margin,
        pauli_octahedron_margin=octahedron,
        ibc_flags=flags,
        is_coherence_breaking=is_coherence_breaking(tm),
        witnesses=found or {},
    )
