#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
信道空间蒙特卡洛扫描

- 八面体分支映射数据集（Pauli EBC 在 C̄+ / C̄- 下的像）
- 级联普查：两个无用信道级联后在开关下是否变得有用
- 有用信道对的欧氏距离统计
- 完全无用信道对的级联反例搜索
- 两个分支都是 EB 时任意受控操作都给出 EB 有效信道的抽样检验

样本按固定大小的块划分，第 k 块使用 Philox(SeedSequence([seed, k])) 独立随机流，
结果与线程数无关。
"""

import json
import logging
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from qchannel_core import (
    KRAUS_CUTOFF, PSD_TOL,
    Channel, SwitchLabError,
    batched_choi_from_tmatrix, compose, nonunital_tmatrix, pauli_from_lambdas, channel_from_tmatrix,
    random_unitary, random_state, unitary_channel,
)
from switch_engine import (
    batched_branch_chois, branch_maps, controlled_tmatrices, pauli_branch_lambdas,
    random_controlled_batch, run_switch,
)
from channel_classify import (
    EB_TOL, USELESS_PREDICATES, is_entanglement_breaking, pauli_is_ebc_batch,
)

logger = logging.getLogger(__name__)

# ========== 配置常量 ==========
DEFAULT_SEED = 20240229
DEFAULT_CHUNK_SIZE = 20000
DEFAULT_CONFIG_FILE = 'switchlab_config.json'
SEED_ENV_VAR = 'SWITCHLAB_SEED'
SAMPLING_MEASURE = 'uniform-rejection-cube'

INPUT_CATEGORIES = ('plus-only', 'minus-only', 'both')
VENN_CATEGORIES = ('none', 'plus', 'minus', 'both')
NOT_GATED = 'not_gated'
TALLY_KEYS = tuple(f"{c}/{v}" for c in INPUT_CATEGORIES for v in VENN_CATEGORIES) + (NOT_GATED,)


class EmptyInput(SwitchLabError):
    """统计输入为空"""


def default_threads() -> int:
    return os.cpu_count() or 1


# ========== 工具类 ==========
class Counter:
    """线程安全的计数器"""

    def __init__(self):
        self.value = 0
        self.lock = threading.Lock()

    def increment(self, n: int = 1) -> int:
        with self.lock:
            self.value += n
            return self.value

    def get(self) -> int:
        with self.lock:
            return self.value


@dataclass
class ScanConfig:
    """
    扫描配置

    seed 一旦给定即为最终种子。from_file 读入时环境变量 SWITCHLAB_SEED 优先于文件里的 seed；
    seed 为 None 时使用环境变量，否则使用默认种子。
    """

    family: str = 'pauli'
    sample_count: int = 100000
    seed: Optional[int] = None
    useless_predicate: str = 'eb'
    output_path: Optional[str] = None
    chunk_size: int = DEFAULT_CHUNK_SIZE
    threads: int = field(default_factory=default_threads)

    def __post_init__(self):
        if self.sample_count < 1:
            raise ValueError(f"sample_count 必须 ≥ 1，实际为 {self.sample_count}")
        if self.chunk_size < 1:
            raise ValueError(f"chunk_size 必须 ≥ 1，实际为 {self.chunk_size}")
        if self.threads < 1:
            raise ValueError(f"threads 必须 ≥ 1，实际为 {self.threads}")
        if self.family not in FAMILIES:
            raise ValueError(f"未知的信道族: {self.family}，可选 {sorted(FAMILIES)}")
        if self.useless_predicate not in USELESS_PREDICATES:
            raise ValueError(f"未知的无用判据: {self.useless_predicate}")
        if self.seed is not None and self.seed < 0:
            raise ValueError(f"seed 必须非负，实际为 {self.seed}")

    @classmethod
    def from_file(cls, config_file: str = DEFAULT_CONFIG_FILE) -> "ScanConfig":
        """从 JSON 配置文件加载；文件缺失或格式错误时使用默认值"""
        if not os.path.exists(config_file):
            logger.warning(f"配置文件 {config_file} 不存在，使用默认配置")
            return cls()

        try:
            with open(config_file, 'r', encoding='utf-8') as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            logger.error(f"加载配置文件出错: {str(e)}")
            return cls()

        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            logger.warning(f"忽略未知配置项: {', '.join(unknown)}")
        config = cls(**{k: v for k, v in data.items() if k in known})
        env = env_seed()
        if env is not None and config.seed is not None and env != config.seed:
            logger.info(f"环境变量 {SEED_ENV_VAR}={env} 覆盖配置文件中的 seed={config.seed}")
        return config if env is None else replace(config, seed=env)

    def with_overrides(self, **overrides: Any) -> "ScanConfig":
        """用非 None 的值覆盖配置项"""
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    def resolved_seed(self) -> int:
        return int(self.seed) if self.seed is not None else resolve_seed(None)

    def to_dict(self) -> Dict[str, Any]:
        d = asdict(self)
        d['seed'] = self.resolved_seed()
        return d


def env_seed() -> Optional[int]:
    """SWITCHLAB_SEED 的整数值；未设置或无法解析时为 None"""
    env = os.environ.get(SEED_ENV_VAR)
    if not env:
        return None
    try:
        return int(env)
    except ValueError:
        logger.warning(f"环境变量 {SEED_ENV_VAR}={env!r} 不是整数，已忽略")
        return None


def resolve_seed(cli_seed: Optional[int], config_seed: Optional[int] = None) -> int:
    """--seed > SWITCHLAB_SEED > 配置文件 > 默认种子"""
    if cli_seed is not None:
        return int(cli_seed)
    env = env_seed()
    if env is not None:
        return env
    if config_seed is not None:
        return int(config_seed)
    return DEFAULT_SEED


# ========== 随机流与线程池 ==========
def chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, chunk])))


def chunk_plan(total: int, chunk_size: int) -> List[Tuple[int, int]]:
    """[(块编号, 块内样本数)]"""
    return [(k, min(chunk_size, total - start)) for k, start in enumerate(range(0, total, chunk_size))]


def run_chunks(worker: Callable[[np.random.Generator, int, int], Any],
               total: int, seed: int, chunk_size: int = DEFAULT_CHUNK_SIZE,
               threads: Optional[int] = None, progress: bool = True, desc: str = '扫描') -> List[Any]:
    """
    在线程池中运行 worker(rng, n, chunk)，按块编号顺序返回结果

    任何块失败时等线程池全部结束后再抛出第一个异常。
    """
    plan = chunk_plan(total, chunk_size)
    threads = threads or default_threads()
    results: Dict[int, Any] = {}
    errors: List[Tuple[int, BaseException]] = []
    done = Counter()

    with tqdm(total=total, desc=desc, disable=not progress, unit='样本') as bar:
        with ThreadPoolExecutor(max_workers=max(1, min(threads, len(plan)))) as executor:
            future_to_chunk = {
                executor.submit(worker, chunk_rng(seed, k), n, k): (k, n) for k, n in plan
            }
            for future in as_completed(future_to_chunk):
                k, n = future_to_chunk[future]
                try:
                    results[k] = future.result()
                except Exception as e:
                    logger.error(f"第 {k} 块处理出错: {str(e)}")
                    errors.append((k, e))
                    continue
                count = done.increment()
                bar.update(n)
                logger.debug(f"[{count}/{len(plan)}] 块 {k} 完成 ({n} 个样本)")

    if errors:
        _, first = min(errors, key=lambda item: item[0])
        raise first
    return [results[k] for k, _ in plan]


# ========== 采样 ==========
def _rejection_sample(rng: np.random.Generator, count: int,
                      accept: Callable[[np.ndarray], np.ndarray],
                      rate_hint: float) -> Tuple[np.ndarray, int]:
    """从 [-1,1]³ 均匀提议并按 accept 拒绝采样，返回 (样本, 提议总数)"""
    chunks, have, proposals = [], 0, 0
    while have < count:
        batch = max(64, int((count - have) / rate_hint * 1.2) + 1)
        x = rng.uniform(-1.0, 1.0, size=(batch, 3))
        proposals += batch
        kept = x[accept(x)]
        chunks.append(kept)
        have += len(kept)
    return np.concatenate(chunks)[:count], proposals


def octahedron_acceptance(rng: np.random.Generator, proposals: int) -> float:
    """立方体内均匀提议落入八面体的比例，理论值 1/6"""
    x = rng.uniform(-1.0, 1.0, size=(proposals, 3))
    return float(np.mean(np.abs(x).sum(axis=1) <= 1.0))


def sample_pauli_ebc(rng: np.random.Generator, count: int) -> np.ndarray:
    """八面体 Σ|λi| ≤ 1 内的均匀样本，形状 (count, 3)"""
    if count < 1:
        raise ValueError(f"count 必须 ≥ 1，实际为 {count}")
    lam, _ = _rejection_sample(rng, count, lambda x: np.abs(x).sum(axis=1) <= 1.0, 1.0 / 6.0)
    return lam


# ---------- 批量 PPT ----------
def batched_partial_transpose(choi: np.ndarray) -> np.ndarray:
    n = choi.shape[0]
    return choi.reshape(n, 2, 2, 2, 2).transpose(0, 1, 4, 3, 2).reshape(n, 4, 4)


def batched_min_eig(m: np.ndarray) -> np.ndarray:
    return np.linalg.eigvalsh(0.5 * (m + np.conj(np.swapaxes(m, 1, 2))))[:, 0]


def batched_is_ppt(choi: np.ndarray, tol: float = EB_TOL) -> np.ndarray:
    """按迹归一化后的 PPT 判定；迹为零（零分支）视为 PPT"""
    tr = np.einsum('nii->n', choi).real
    pt_min = batched_min_eig(batched_partial_transpose(choi))
    safe = np.where(tr > KRAUS_CUTOFF, tr, 1.0)
    return (tr <= KRAUS_CUTOFF) | (pt_min / safe >= -tol)


def nonunital_tmatrices(params: np.ndarray) -> np.ndarray:
    params = np.atleast_2d(np.asarray(params, dtype=float))
    tm = np.zeros((len(params), 4, 4))
    tm[:, 0, 0] = 1.0
    tm[:, 1, 1] = params[:, 0]
    tm[:, 2, 2] = params[:, 0]
    tm[:, 3, 3] = params[:, 1]
    tm[:, 3, 0] = params[:, 2]
    return tm


def _nonunital_accept(x: np.ndarray) -> np.ndarray:
    choi = batched_choi_from_tmatrix(nonunital_tmatrices(x))
    cp = batched_min_eig(choi) >= -PSD_TOL
    return cp & batched_is_ppt(choi)


def sample_nonunital_ebc(rng: np.random.Generator, count: int) -> np.ndarray:
    """(k1, k3, t) ∈ [-1,1]³ 中 CP 且 EB 的均匀样本，形状 (count, 3)"""
    if count < 1:
        raise ValueError(f"count 必须 ≥ 1，实际为 {count}")
    params, _ = _rejection_sample(rng, count, _nonunital_accept, 0.05)
    return params


def nonunital_channel(params: Sequence[float]) -> Channel:
    k1, k3, t = params
    return channel_from_tmatrix(nonunital_tmatrix(k1, k3, t))


# ========== 信道族 ==========
def _pauli_branch_useful(lam: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    _, plus, minus = pauli_branch_lambdas(lam)
    return ~pauli_is_ebc_batch(plus), ~pauli_is_ebc_batch(minus)


def _nonunital_useless(params: np.ndarray) -> np.ndarray:
    return batched_is_ppt(batched_choi_from_tmatrix(nonunital_tmatrices(params)))


def _nonunital_branch_useful(params: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    plus, minus = batched_branch_chois(batched_choi_from_tmatrix(nonunital_tmatrices(params)))
    return ~batched_is_ppt(plus), ~batched_is_ppt(minus)


def _nonunital_compose(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """T_a · T_b 仍在三参数族内：(k1a·k1b, k3a·k3b, ta + k3a·tb)"""
    return np.stack([a[:, 0] * b[:, 0], a[:, 1] * b[:, 1], a[:, 2] + a[:, 1] * b[:, 2]], axis=1)


@dataclass(frozen=True)
class ChannelFamily:
    name: str
    param_names: Tuple[str, str, str]
    sample: Callable[[np.random.Generator, int], np.ndarray]
    compose: Callable[[np.ndarray, np.ndarray], np.ndarray]
    useless_plain: Callable[[np.ndarray], np.ndarray]
    branch_useful: Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray]]


FAMILIES: Dict[str, ChannelFamily] = {
    'pauli': ChannelFamily(
        name='pauli',
        param_names=('l1', 'l2', 'l3'),
        sample=sample_pauli_ebc,
        compose=lambda a, b: a * b,
        useless_plain=pauli_is_ebc_batch,
        branch_useful=_pauli_branch_useful,
    ),
    'nonunital': ChannelFamily(
        name='nonunital',
        param_names=('k1', 'k3', 't'),
        sample=sample_nonunital_ebc,
        compose=_nonunital_compose,
        useless_plain=_nonunital_useless,
        branch_useful=_nonunital_branch_useful,
    ),
}


def get_family(name: str) -> ChannelFamily:
    try:
        return FAMILIES[name]
    except KeyError:
        raise ValueError(f"未知的信道族: {name}，可选 {sorted(FAMILIES)}") from None


def family_channel(family: str, params: Sequence[float]) -> Channel:
    if family == 'pauli':
        return pauli_from_lambdas(params)
    return nonunital_channel(params)


# ========== 八面体映射 ==========
def octahedron_mapping_table(lam: np.ndarray, branch: str = 'plus') -> pd.DataFrame:
    """
    给定 λ 计算所选分支的像与有用标志；零分支记为 NaN 且 useful=False
    """
    if branch not in ('plus', 'minus'):
        raise ValueError(f"branch 必须是 plus 或 minus，实际为 {branch}")
    lam = np.atleast_2d(np.asarray(lam, dtype=float))
    q, plus, minus = pauli_branch_lambdas(lam)
    out = plus if branch == 'plus' else minus
    weight = q if branch == 'plus' else 1.0 - q
    return pd.DataFrame({
        'l1': lam[:, 0], 'l2': lam[:, 1], 'l3': lam[:, 2],
        'out1': out[:, 0], 'out2': out[:, 1], 'out3': out[:, 2],
        'weight': weight,
        'useful': ~pauli_is_ebc_batch(out),
    })


def octahedron_mapping_dataset(count: int, branch: str = 'plus', seed: int = DEFAULT_SEED,
                               chunk_size: int = DEFAULT_CHUNK_SIZE, threads: Optional[int] = None,
                               progress: bool = True) -> pd.DataFrame:
    def worker(rng, n, k):
        return octahedron_mapping_table(sample_pauli_ebc(rng, n), branch)

    parts = run_chunks(worker, count, seed, chunk_size, threads, progress, desc=f'八面体 C̄{branch}')
    df = pd.concat(parts, ignore_index=True)
    logger.info(f"八面体映射: {len(df)} 个样本，其中 {int(df['useful'].sum())} 个在 C̄{branch} 下变为有用")
    return df


def minus_plane_residual(df: pd.DataFrame) -> float:
    """C̄- 下有用的像到平面 λ1+λ2+λ3 = -1 的最大偏差"""
    useful = df[df['useful']]
    if useful.empty:
        return 0.0
    return float(np.max(np.abs(useful['out1'] + useful['out2'] + useful['out3'] + 1.0)))


# ========== 级联普查 ==========
@dataclass
class PairBatch:
    """一批信道对 (a, b) 及其级联 a∘b 的无用/有用标志"""

    family: str
    a: np.ndarray
    b: np.ndarray
    ab: np.ndarray
    a_plain: np.ndarray
    b_plain: np.ndarray
    a_plus: np.ndarray
    a_minus: np.ndarray
    b_plus: np.ndarray
    b_minus: np.ndarray
    ab_plus: np.ndarray
    ab_minus: np.ndarray

    @property
    def distance(self) -> np.ndarray:
        return np.linalg.norm(self.a - self.b, axis=1)

    @property
    def gate_plus(self) -> np.ndarray:
        return self.a_plain & self.b_plain & ~self.a_plus & ~self.b_plus

    @property
    def gate_minus(self) -> np.ndarray:
        return self.a_plain & self.b_plain & ~self.a_minus & ~self.b_minus

    @property
    def input_category(self) -> np.ndarray:
        gp, gm = self.gate_plus, self.gate_minus
        return np.select([gp & gm, gp, gm], ['both', 'plus-only', 'minus-only'], default=NOT_GATED)

    @property
    def venn(self) -> np.ndarray:
        p, m = self.ab_plus, self.ab_minus
        return np.select([p & m, p, m], ['both', 'plus', 'minus'], default='none')

    def tally_keys(self) -> np.ndarray:
        cat = self.input_category
        return np.where(cat == NOT_GATED, NOT_GATED, np.char.add(np.char.add(cat, '/'), self.venn))


def evaluate_pairs(family: str, a: np.ndarray, b: np.ndarray) -> PairBatch:
    fam = get_family(family)
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    ab = fam.compose(a, b)
    a_plus, a_minus = fam.branch_useful(a)
    b_plus, b_minus = fam.branch_useful(b)
    ab_plus, ab_minus = fam.branch_useful(ab)
    return PairBatch(
        family=family, a=a, b=b, ab=ab,
        a_plain=fam.useless_plain(a), b_plain=fam.useless_plain(b),
        a_plus=a_plus, a_minus=a_minus, b_plus=b_plus, b_minus=b_minus,
        ab_plus=ab_plus, ab_minus=ab_minus,
    )


def _records_frame(batch: PairBatch, mask: np.ndarray, seed: int, chunk: int) -> pd.DataFrame:
    names = get_family(batch.family).param_names
    data: Dict[str, Any] = {'family': batch.family, 'seed': seed, 'chunk': chunk}
    for prefix, arr in (('a_', batch.a), ('b_', batch.b)):
        for i, name in enumerate(names):
            data[prefix + name] = arr[mask, i]
    data['input_category'] = batch.input_category[mask]
    data['venn'] = batch.venn[mask]
    for flag in ('a_plus', 'a_minus', 'b_plus', 'b_minus', 'ab_plus', 'ab_minus'):
        data[flag] = getattr(batch, flag)[mask]
    data['distance'] = batch.distance[mask]
    return pd.DataFrame(data)


@dataclass
class ChunkCensus:
    tallies: Dict[str, int]
    records: pd.DataFrame
    distances_plus: np.ndarray
    distances_minus: np.ndarray


def census_chunk(family: str, rng: np.random.Generator, n: int, seed: int, chunk: int) -> ChunkCensus:
    fam = get_family(family)
    batch = evaluate_pairs(family, fam.sample(rng, n), fam.sample(rng, n))
    keys, counts = np.unique(batch.tally_keys(), return_counts=True)
    tallies = dict.fromkeys(TALLY_KEYS, 0)
    tallies.update({str(k): int(c) for k, c in zip(keys, counts)})
    gated = batch.input_category != NOT_GATED
    useful = gated & (batch.venn != 'none')
    dist = batch.distance
    return ChunkCensus(
        tallies=tallies,
        records=_records_frame(batch, useful, seed, chunk),
        distances_plus=dist[batch.gate_plus & batch.ab_plus],
        distances_minus=dist[batch.gate_minus & batch.ab_minus],
    )


@dataclass
class CensusResult:
    config: ScanConfig
    seed: int
    tallies: Dict[str, int]
    records: pd.DataFrame
    distances_plus: np.ndarray
    distances_minus: np.ndarray
    wall_time_ms: int = 0

    @property
    def sampled(self) -> int:
        return int(sum(self.tallies.values()))

    @property
    def venn(self) -> Dict[str, int]:
        """所有被门控的信道对按级联后有用分支的汇总"""
        return {v: sum(self.tallies[f"{c}/{v}"] for c in INPUT_CATEGORIES) for v in VENN_CATEGORIES}

    @property
    def counterexamples(self) -> pd.DataFrame:
        """两个完全无用信道级联后变得有用的记录"""
        return self.records[self.records['input_category'] == 'both']

    def summary(self) -> Dict[str, Any]:
        gated = self.sampled - self.tallies[NOT_GATED]
        out: Dict[str, Any] = {
            'family': self.config.family,
            'seed': self.seed,
            'sample_count': self.sampled,
            'chunk_size': self.config.chunk_size,
            'sampling_measure': SAMPLING_MEASURE,
            'tallies': self.tallies,
            'venn': self.venn,
            'venn_fractions': {k: (v / gated if gated else 0.0) for k, v in self.venn.items()},
            'completely_useless_counterexamples': int(len(self.counterexamples)),
            'wall_time_ms': self.wall_time_ms,
        }
        for branch, dist in (('plus', self.distances_plus), ('minus', self.distances_minus)):
            try:
                out[f'distance_{branch}'] = distance_stats(dist)
            except EmptyInput:
                out[f'distance_{branch}'] = None
        return out


def concat_census(config: ScanConfig, progress: bool = True) -> CensusResult:
    """
    随机抽取 EBC 对并统计级联后在 C+ / C- 下的有用情况

    Returns:
        CensusResult，tallies 的各项之和等于抽样对数
    """
    if config.useless_predicate != 'eb':
        raise ValueError("批量扫描只支持 eb 判据")
    seed = config.resolved_seed()
    start = time.time()
    logger.info("=" * 30)
    logger.info(f"开始级联普查: 信道族={config.family}, 信道对={config.sample_count}, seed={seed}")

    def worker(rng, n, k):
        return census_chunk(config.family, rng, n, seed, k)

    parts = run_chunks(worker, config.sample_count, seed, config.chunk_size,
                       config.threads, progress, desc='级联普查')
    tallies = dict.fromkeys(TALLY_KEYS, 0)
    for part in parts:
        for key, value in part.tallies.items():
            tallies[key] += value
    result = CensusResult(
        config=config,
        seed=seed,
        tallies=tallies,
        records=pd.concat([p.records for p in parts], ignore_index=True),
        distances_plus=np.concatenate([p.distances_plus for p in parts]),
        distances_minus=np.concatenate([p.distances_minus for p in parts]),
        wall_time_ms=int((time.time() - start) * 1000),
    )
    show_census(result)
    return result


def show_census(result: CensusResult):
    logger.info("=" * 30)
    logger.info("级联普查完成！统计信息:")
    logger.info(f"抽样信道对: {result.sampled}")
    logger.info(f"未满足无用前提: {result.tallies[NOT_GATED]}")
    for v, count in result.venn.items():
        logger.info(f"级联后有用分支 {v}: {count}")
    if len(result.distances_plus):
        logger.info(f"C̄+ 有用信道对平均距离: {np.mean(result.distances_plus):.4f}")
    if len(result.distances_minus):
        logger.info(f"C̄- 有用信道对平均距离: {np.mean(result.distances_minus):.4f}")
    logger.info(f"完全无用信道对反例: {len(result.counterexamples)}")
    logger.info("=" * 50)


def distance_stats(distances: Sequence[float], bins: int = 20) -> Dict[str, Any]:
    """
    距离的均值、极值与直方图

    Raises:
        EmptyInput: 没有距离数据
    """
    d = np.asarray(distances, dtype=float).reshape(-1)
    if d.size == 0:
        raise EmptyInput("没有可统计的信道对距离")
    counts, edges = np.histogram(d, bins=bins)
    return {
        'count': int(d.size),
        'mean': float(d.mean()),
        'min': float(d.min()),
        'max': float(d.max()),
        'histogram': {'edges': edges.tolist(), 'counts': counts.tolist()},
    }


# ========== 级联几何 ==========
def concat_geometry_dataset(count: int, seed: int = DEFAULT_SEED,
                            chunk_size: int = DEFAULT_CHUNK_SIZE, threads: Optional[int] = None,
                            progress: bool = True) -> pd.DataFrame:
    """
    在 C̄+ 下都无用、级联后变为 C̄+ 有用的 Pauli EBC 对

    记录两个输入的 λ、级联的 λ 及其 C̄+ 像。count 为抽样对数。
    """
    def worker(rng, n, k):
        batch = evaluate_pairs('pauli', sample_pauli_ebc(rng, n), sample_pauli_ebc(rng, n))
        mask = batch.gate_plus & batch.ab_plus
        _, image, _ = pauli_branch_lambdas(batch.ab[mask])
        cols = {}
        for prefix, arr in (('a', batch.a[mask]), ('b', batch.b[mask]),
                            ('ab', batch.ab[mask]), ('img', image)):
            for i in range(3):
                cols[f'{prefix}{i + 1}'] = arr[:, i]
        return pd.DataFrame(cols)

    parts = run_chunks(worker, count, seed, chunk_size, threads, progress, desc='级联几何')
    df = pd.concat(parts, ignore_index=True)
    logger.info(f"级联几何: {count} 对中 {len(df)} 对在级联后变为 C̄+ 有用")
    return df


# ========== 完全无用信道级联 ==========
@dataclass
class ConjectureResult:
    family: str
    seed: int
    pairs_tested: int
    draws: int
    counterexamples: pd.DataFrame

    def summary(self) -> Dict[str, Any]:
        return {
            'family': self.family,
            'seed': self.seed,
            'pairs_tested': self.pairs_tested,
            'draws': self.draws,
            'counterexamples': int(len(self.counterexamples)),
        }


def _completely_useless_sample(family: str, rng: np.random.Generator, count: int) -> Tuple[np.ndarray, int]:
    fam = get_family(family)
    kept, have, draws = [], 0, 0
    while have < count:
        batch = max(256, 2 * (count - have))
        x = fam.sample(rng, batch)
        draws += batch
        plus, minus = fam.branch_useful(x)
        good = x[fam.useless_plain(x) & ~plus & ~minus]
        kept.append(good)
        have += len(good)
    return np.concatenate(kept)[:count], draws


def conjecture_search(count: int, family: str = 'pauli', seed: int = DEFAULT_SEED,
                      chunk_size: int = DEFAULT_CHUNK_SIZE, threads: Optional[int] = None,
                      progress: bool = True) -> ConjectureResult:
    """两个完全无用信道的级联是否仍然完全无用；返回所有反例"""
    def worker(rng, n, k):
        a, da = _completely_useless_sample(family, rng, n)
        b, db = _completely_useless_sample(family, rng, n)
        batch = evaluate_pairs(family, a, b)
        bad = batch.ab_plus | batch.ab_minus
        return _records_frame(batch, bad, seed, k), da + db

    parts = run_chunks(worker, count, seed, chunk_size, threads, progress, desc='完全无用级联')
    found = pd.concat([p[0] for p in parts], ignore_index=True)
    result = ConjectureResult(family=family, seed=seed, pairs_tested=count,
                              draws=int(sum(p[1] for p in parts)), counterexamples=found)
    if len(found):
        logger.warning(f"发现 {len(found)} 个完全无用信道对在级联后变得有用")
    else:
        logger.info(f"{count} 个完全无用信道对的级联均保持完全无用")
    return result


# ========== 分支均为 EB 时的受控操作 ==========
def _branch_ppt_channel(rng: np.random.Generator) -> Channel:
    """两个分支都是 EB 的随机信道：旋转后的完全无用 Pauli 信道或非幺正 EBC"""
    if rng.random() < 0.5:
        lam, _ = _completely_useless_sample('pauli', rng, 1)
        u = unitary_channel(random_unitary(rng))
        base = pauli_from_lambdas(lam[0])
        return compose(u, compose(base, unitary_channel(u.kraus[0].conj().T)))
    params, _ = _completely_useless_sample('nonunital', rng, 1)
    return nonunital_channel(params[0])


def eb_preservation_chunk(rng: np.random.Generator, n_channels: int, n_ops: int) -> Dict[str, int]:
    checked = violations = 0
    for _ in range(n_channels):
        ch = _branch_ppt_channel(rng)
        plus, minus = branch_maps(ch)
        if not (is_entanglement_breaking(plus) and is_entanglement_breaking(minus)):
            continue
        sr = run_switch(ch, omega=random_state(rng))
        basis, lam_tms = random_controlled_batch(rng, n_ops)
        eff = controlled_tmatrices(basis, lam_tms, plus.tmatrix, minus.tmatrix,
                                   sr.control_plus, sr.control_minus)
        bad = np.flatnonzero(~batched_is_ppt(batched_choi_from_tmatrix(eff)))
        checked += n_ops
        violations += len(bad)
        for i in bad[:3]:
            logger.warning(f"受控操作后的有效信道不是 EB: T={eff[i].round(6).tolist()}")
    return {'channels': n_channels, 'checked': checked, 'violations': violations}


def eb_preservation_sampling(n_channels: int = 100, n_ops: int = 500, seed: int = DEFAULT_SEED,
                             chunk_size: int = 10, threads: Optional[int] = None,
                             progress: bool = True) -> Dict[str, int]:
    """两个分支都 PPT 的信道，在随机受控操作下有效信道必须仍为 PPT"""
    parts = run_chunks(lambda rng, n, k: eb_preservation_chunk(rng, n, n_ops), n_channels, seed,
                       chunk_size, threads, progress, desc='受控操作抽样')
    total = {'channels': 0, 'checked': 0, 'violations': 0}
    for part in parts:
        for key in total:
            total[key] += part[key]
    logger.info(f"受控操作抽样: 检查 {total['checked']} 个有效信道，违反 {total['violations']} 个")
    return total
