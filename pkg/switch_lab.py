#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Switch Lab - 量子开关信道分类与任务复现工具

对量子比特信道运行量子开关，判断无用信道能否在开关（以及级联）帮助下变得有用，
并复现 QRAC、导引、相干与控制噪声的数值结果。所有输出文件都以 manifest 注释行开头，
可用 --rerun 原样重跑。

许可证: MIT
"""

import argparse
import json
import logging
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from qchannel_core import (
    I2, SZ, KRAUS_CUTOFF, PHI_PLUS,
    Channel, PauliChannel, SwitchLabError,
    apply, bloch_to_density, channel_from_json, channel_from_tmatrix, channel_to_json,
    batched_choi_from_tmatrix, choi_of, depolarizing, lambdas_to_probs, pauli_channel,
    random_pauli_lambdas, random_state,
)
from switch_engine import (
    apply_controlled, branch_maps, branch_weight, default_correction, effective_channel,
    noisy_control_effective, pauli_branches, phi_channel, phi_q, printed_phi_q,
    run_switch, switch_output,
)
from channel_classify import (
    USELESS_PREDICATES, classify_channel, is_coherence_breaking, octahedron_contains_lp,
    pauli_ebc_margin, switch_usefulness,
)
from info_tasks import (
    coherence_closed_form, coherence_effective_channel, coherence_form, l1_coherence,
    phi_effective_channel, phi_effective_tmatrices, qrac_closed_form, qrac_curve, qrac_threshold,
    standard_qrac_strategy, qrac_success, qrac_success_batch, steered_state, steering_closed_form,
    steering_curve, steering_F, steering_F_batch, steering_threshold,
)
from scan_lab import (
    DEFAULT_CHUNK_SIZE, DEFAULT_CONFIG_FILE, FAMILIES, ScanConfig,
    batched_is_ppt, concat_census, concat_geometry_dataset, conjecture_search, default_threads,
    distance_stats, eb_preservation_sampling, minus_plane_residual, octahedron_mapping_dataset,
    resolve_seed,
)

logger = logging.getLogger(__name__)

__version__ = '0.3.0'

# ========== 配置常量 ==========
DEFAULT_LOG_FILE = 'switch_lab.log'
FLOAT_FORMAT = '%.12g'
MANIFEST_PREFIX = '# manifest: '

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_DOMAIN = 3
EXIT_ACCEPTANCE = 4
EXIT_INTERRUPTED = 130

PRESETS = {
    'perfect': (0.0, 0.0, -1.0),
    'obs1': (0.0, 0.0, 1.0),
    'identity': (1.0, 1.0, 1.0),
    'depolarize': (0.0, 0.0, 0.0),
}


class ChannelSpecError(SwitchLabError):
    """命令行信道描述无法解析"""


# ========== 日志 ==========
def setup_logging(log_file: str = DEFAULT_LOG_FILE, verbose: bool = False):
    """配置根日志：文件 + stderr；数据输出只走 stdout / --out"""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format='%(asctime)s - %(levelname)s - %(message)s',
        handlers=[
            logging.FileHandler(log_file, encoding='utf-8'),
            logging.StreamHandler(sys.stderr),
        ],
        force=True,
    )


# ========== 运行清单 ==========
@dataclass
class RunManifest:
    command: str
    argv: List[str]
    seed: Optional[int]
    config: Dict[str, Any] = field(default_factory=dict)
    tool_version: str = __version__
    wall_time_ms: int = 0

    def header(self) -> str:
        return MANIFEST_PREFIX + json.dumps(asdict(self), sort_keys=True, default=_json_default) + '\n'


def read_manifest(path: str) -> RunManifest:
    """读取输出文件开头的 manifest 行"""
    with open(path, 'r', encoding='utf-8') as f:
        first = f.readline()
    if not first.startswith(MANIFEST_PREFIX):
        raise ChannelSpecError(f"{path} 不是本工具的输出文件（缺少 manifest 行）")
    data = json.loads(first[len(MANIFEST_PREFIX):])
    return RunManifest(**data)


def _json_default(obj: Any) -> Any:
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, complex):
        return {'re': obj.real, 'im': obj.imag}
    raise TypeError(f"无法序列化类型 {type(obj).__name__}")


def render(payload: Any, fmt: str) -> str:
    if isinstance(payload, pd.DataFrame) and fmt == 'csv':
        return payload.to_csv(index=False, float_format=FLOAT_FORMAT)
    if isinstance(payload, pd.DataFrame):
        payload = payload.to_dict(orient='records')
    elif fmt == 'csv':
        logger.warning("该命令的结果不是表格，改为输出 JSON")
    return json.dumps(payload, sort_keys=True, indent=2, default=_json_default) + '\n'


def emit(payload: Any, fmt: str, out: Optional[str], manifest: RunManifest):
    text = manifest.header() + render(payload, fmt)
    if out:
        with open(out, 'w', encoding='utf-8') as f:
            f.write(text)
        logger.info(f"结果已保存到 {out}")
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


# ========== 参数解析 ==========
def parse_floats(text: str, count: Optional[int] = None, what: str = '参数') -> List[float]:
    """逗号分隔的数值，支持分数写法如 -1/3"""
    try:
        values = [float(Fraction(s.strip())) for s in text.replace(';', ',').split(',') if s.strip()]
    except (ValueError, ZeroDivisionError):
        raise ChannelSpecError(f"无法解析{what}: {text!r}") from None
    if count is not None and len(values) != count:
        raise ChannelSpecError(f"{what}需要 {count} 个数，实际为 {len(values)} 个")
    return values


@dataclass
class ChannelSpec:
    channel: Channel
    label: str
    pauli: Optional[PauliChannel] = None
    phi_lam3: Optional[float] = None


def parse_channel_spec(args: argparse.Namespace) -> ChannelSpec:
    """
    从 --pauli / --probs / --tmatrix / --channel-json / --preset 中恰好一个构造信道

    Raises:
        ChannelSpecError: 没有或给出了多个信道描述，或数值无法解析
        NotCompletelyPositive: 参数不在CP区域
    """
    given = [name for name in ('pauli', 'probs', 'tmatrix', 'channel_json', 'preset')
             if getattr(args, name, None) is not None]
    if len(given) != 1:
        raise ChannelSpecError("必须且只能给出一个信道描述: --pauli/--probs/--tmatrix/--channel-json/--preset")
    kind = given[0]
    value = getattr(args, kind)

    if kind == 'pauli':
        pc = lambdas_to_probs(parse_floats(value, 3, 'λ 向量'))
        return ChannelSpec(pc.channel(), f"pauli:{value}", pauli=pc)
    if kind == 'probs':
        pc = pauli_channel(parse_floats(value, 4, 'Pauli 概率'))
        return ChannelSpec(pc.channel(), f"probs:{value}", pauli=pc)
    if kind == 'tmatrix':
        tm = np.array(parse_floats(value, 16, 'T 矩阵')).reshape(4, 4)
        return ChannelSpec(channel_from_tmatrix(tm), 'tmatrix')
    if kind == 'channel_json':
        text = value
        if os.path.exists(value):
            with open(value, 'r', encoding='utf-8') as f:
                text = f.read()
        try:
            return ChannelSpec(channel_from_json(text), 'json')
        except (json.JSONDecodeError, KeyError, TypeError) as e:
            raise ChannelSpecError(f"无法解析信道 JSON: {str(e)}") from None

    name = value.strip().lower()
    if name in PRESETS:
        pc = lambdas_to_probs(PRESETS[name])
        return ChannelSpec(pc.channel(), name, pauli=pc)
    if name.startswith('phi:'):
        lam3 = parse_floats(name[4:], 1, 'λ3')[0]
        pc = phi_channel(lam3)
        return ChannelSpec(pc.channel(), name, pauli=pc, phi_lam3=lam3)
    if name.startswith('depol:'):
        t = parse_floats(name[6:], 1, '去极化参数')[0]
        return ChannelSpec(depolarizing(t), name)
    raise ChannelSpecError(f"未知的预设信道: {value}，可选 {sorted(PRESETS)} 或 phi:<λ3>、depol:<t>")


def parse_grid(start: float, stop: float, step: float) -> np.ndarray:
    if step <= 0 or stop < start:
        raise ChannelSpecError(f"网格参数无效: start={start}, stop={stop}, step={step}")
    n = int(round((stop - start) / step)) + 1
    return np.linspace(start, stop, n)


def _state_arg(text: Optional[str], what: str) -> Optional[np.ndarray]:
    if text is None:
        return None
    return bloch_to_density(parse_floats(text, 3, what))


# ========== 子命令 ==========
def cmd_classify(args: argparse.Namespace) -> Any:
    spec = parse_channel_spec(args)
    target = spec.pauli if spec.pauli is not None else spec.channel
    cls = classify_channel(spec.channel, witnesses=not args.no_witnesses)
    usefulness = switch_usefulness(target, args.predicate)
    logger.info(f"{spec.label}: EB={cls.is_ebc}, 完全无用={usefulness.completely_useless}")
    return {
        'channel': channel_to_json(spec.pauli if spec.pauli is not None else spec.channel.tmatrix),
        'predicate': args.predicate,
        'classification': cls.to_dict(),
        'switch_usefulness': usefulness.to_dict(),
    }


def cmd_switch(args: argparse.Namespace) -> Any:
    spec = parse_channel_spec(args)
    rho = _state_arg(args.rho, '系统输入 Bloch 向量')
    omega = _state_arg(args.omega, '控制比特 Bloch 向量')
    sr = run_switch(spec.channel, rho=rho, omega=omega)
    rho_in = I2 / 2 if rho is None else rho

    expected = np.kron(sr.branch_plus.apply(rho_in), sr.control_plus) + \
        np.kron(sr.branch_minus.apply(rho_in), sr.control_minus)
    decomposition_error = float(np.max(np.abs(sr.joint - expected)))

    branches = {}
    for name, branch in (('plus', sr.branch_plus), ('minus', sr.branch_minus)):
        weight = branch_weight(branch)
        branches[name] = {
            'weight': weight,
            'kraus_count': len(branch.kraus),
            'tmatrix': branch.tmatrix,
            'normalized_tmatrix': branch.tmatrix / weight if weight > KRAUS_CUTOFF else None,
        }

    payload: Dict[str, Any] = {
        'channel': spec.label,
        'branches': branches,
        'decomposition_max_error': decomposition_error,
        'effective_tmatrix': apply_controlled(default_correction(), sr).tmatrix,
        'switch_usefulness': switch_usefulness(spec.channel, args.predicate).to_dict(),
    }
    if spec.pauli is not None:
        pb = pauli_branches(spec.pauli)
        payload['pauli_closed_form'] = {
            'q': pb.q,
            'degenerate': pb.degenerate,
            'lambda_plus': None if pb.c_plus is None else pb.c_plus.lambdas,
            'lambda_minus': None if pb.c_minus is None else pb.c_minus.lambdas,
            'choi_max_error': max(
                float(np.max(np.abs(pb.plus_map().choi - sr.branch_plus.choi))),
                float(np.max(np.abs(pb.minus_map().choi - sr.branch_minus.choi))),
            ),
        }
    if spec.phi_lam3 is not None:
        payload['phi'] = {
            'lambda3': spec.phi_lam3,
            'q': phi_q(spec.phi_lam3),
            'printed_q': printed_phi_q(spec.phi_lam3),
        }
    return payload


def cmd_qrac(args: argparse.Namespace) -> Any:
    df = qrac_curve(parse_grid(args.start, args.stop, args.step))
    root = qrac_threshold()
    logger.info(f"P′ = 3/4 的阈值 λ3 = {root:.10f} (2^(3/4)−1 = {2 ** 0.75 - 1:.10f})")
    logger.info(f"直接计算与闭式最大偏差: {np.max(np.abs(df['p_direct'] - df['p_closed'])):.3e}")
    return df


def cmd_steer(args: argparse.Namespace) -> Any:
    df = steering_curve(parse_grid(args.start, args.stop, args.step))
    logger.info(f"F = 1 的阈值: 直接计算 λ3 = {steering_threshold('direct'):.6f}, "
                f"印出表达式 λ3 = {steering_threshold('printed'):.6f}")
    logger.info(f"直接计算与闭式最大偏差: {np.max(np.abs(df['F_direct'] - df['F_closed'])):.3e}")
    return df


def cmd_coherence(args: argparse.Namespace) -> Any:
    lam, t = args.lam, args.t
    plain = coherence_effective_channel(lam, t, controlled=False)
    corrected = coherence_effective_channel(lam, t, args.theta, args.phi1, args.phi2)
    closed = coherence_closed_form(lam, t, args.theta, args.phi1, args.phi2)
    plus_state = bloch_to_density([1.0, 0.0, 0.0])
    return {
        'parameters': {'lambda': lam, 't': t, 'theta': args.theta, 'phi1': args.phi1, 'phi2': args.phi2},
        'plain_tmatrix': plain,
        'plain_is_coherence_breaking': is_coherence_breaking(plain),
        'effective_tmatrix': corrected,
        'effective_is_coherence_breaking': is_coherence_breaking(corrected),
        'closed_form_tmatrix': closed,
        'closed_form_max_error': float(np.max(np.abs(corrected - closed))),
        'form': coherence_form(corrected, lam, t, args.theta, args.phi1, args.phi2).to_dict(),
        'l1_coherence_plain': l1_coherence(apply(plain, plus_state)),
        'l1_coherence_effective': l1_coherence(apply(corrected, plus_state)),
    }


def perfect_noisy_tmatrix(t: float) -> np.ndarray:
    """完美信道在控制噪声 t 下的有效信道 (1+t)/2 ρ + (1−t)/2 σzρσz"""
    return np.diag([1.0, t, t, 1.0])


def cmd_noisy(args: argparse.Namespace) -> Any:
    spec = parse_channel_spec(args)
    is_perfect = spec.pauli is not None and np.allclose(spec.pauli.lambdas, PRESETS['perfect'], atol=1e-12)
    rows = []
    for t in parse_floats(args.noise_t, what='控制噪声参数'):
        tm = noisy_control_effective(spec.channel, t).tmatrix
        row: Dict[str, Any] = {
            'noise_t': t,
            'effective_tmatrix': tm,
            'octahedron_margin': pauli_ebc_margin(np.diag(tm)[1:]),
        }
        if is_perfect:
            row['closed_form_max_error'] = float(np.max(np.abs(tm - perfect_noisy_tmatrix(t))))
        rows.append(row)
    return {'channel': spec.label, 'results': rows}


def scan_config_from_args(args: argparse.Namespace) -> ScanConfig:
    base = ScanConfig.from_file(args.config) if args.config else ScanConfig()
    cfg = base.with_overrides(
        family=args.family,
        sample_count=args.samples,
        useless_predicate=args.predicate,
        output_path=args.out,
        chunk_size=args.chunk_size,
        threads=args.threads,
        seed=args.seed,
    )
    return cfg.with_overrides(seed=cfg.resolved_seed())


def cmd_scan(args: argparse.Namespace) -> Any:
    cfg = scan_config_from_args(args)
    seed = cfg.resolved_seed()
    progress = not args.no_progress
    common = dict(seed=seed, chunk_size=cfg.chunk_size, threads=cfg.threads, progress=progress)
    args._config_dict = cfg.to_dict()

    if args.kind == 'octahedron':
        return octahedron_mapping_dataset(cfg.sample_count, args.branch, **common)
    if args.kind == 'geometry':
        return concat_geometry_dataset(cfg.sample_count, **common)
    if args.kind == 'conjecture':
        result = conjecture_search(cfg.sample_count, cfg.family, **common)
        return {'summary': result.summary(), 'counterexamples': result.counterexamples.to_dict(orient='records')}

    census = concat_census(cfg, progress=progress)
    if args.summary_out:
        with open(args.summary_out, 'w', encoding='utf-8') as f:
            f.write(render(census.summary(), 'json'))
        logger.info(f"普查汇总已保存到 {args.summary_out}")
    if args.kind == 'distances':
        return {branch: distance_stats(d, bins=args.bins)
                for branch, d in (('plus', census.distances_plus), ('minus', census.distances_minus))}
    if args.format == 'csv':
        return census.records
    return census.summary()


# ========== 自检 ==========
Check = Tuple[bool, Dict[str, Any]]


def check_branch_oracle(rng: np.random.Generator, quick: bool) -> Check:
    n_channels, n_states = (100, 20) if quick else (1000, 100)
    states = [random_state(rng) for _ in range(n_states)]
    omega = bloch_to_density([1.0, 0.0, 0.0])
    choi_err = state_err = 0.0
    for _ in range(n_channels):
        pc = lambdas_to_probs(random_pauli_lambdas(rng))
        ch = pc.channel()
        plus, minus = branch_maps(ch)
        pb = pauli_branches(pc)
        choi_err = max(choi_err,
                       float(np.max(np.abs(pb.plus_map().choi - plus.choi))),
                       float(np.max(np.abs(pb.minus_map().choi - minus.choi))))
    for rho in states:
        pc = lambdas_to_probs(random_pauli_lambdas(rng))
        pb = pauli_branches(pc)
        joint = switch_output(pc.channel(), rho, omega)
        expected = np.kron(pb.plus_map().apply(rho), omega) + np.kron(pb.minus_map().apply(rho), SZ @ omega @ SZ)
        state_err = max(state_err, float(np.max(np.abs(joint - expected))))
    return max(choi_err, state_err) <= 1e-9, {'choi_max_error': choi_err, 'state_max_error': state_err}


def check_perfect(rng, quick) -> Check:
    tm = effective_channel(lambdas_to_probs(PRESETS['perfect']).channel()).tmatrix
    err = float(np.max(np.abs(tm - np.eye(4))))
    return err <= 1e-12, {'max_error': err}


def check_obs1(rng, quick) -> Check:
    pc = lambdas_to_probs(PRESETS['obs1'])
    pb = pauli_branches(pc)
    _, minus = branch_maps(pc.channel())
    plus_err = float(np.max(np.abs(pb.c_plus.lambdas - pc.lambdas)))
    minus_choi = float(np.max(np.abs(choi_of(minus.kraus)))) if minus.kraus else 0.0
    ok = abs(pb.q - 1.0) <= 1e-12 and plus_err <= 1e-12 and minus_choi <= 1e-12 and pb.c_minus is None
    return ok, {'q': pb.q, 'plus_error': plus_err, 'minus_choi_max': minus_choi}


def check_phi_effective(rng, quick) -> Check:
    detail, ok = {}, True
    for lam3 in (0.2, 0.5, 0.9):
        tm = phi_effective_channel(lam3).tmatrix
        a = (1 + lam3) ** 2 / 4
        err = float(np.max(np.abs(tm - np.diag([1.0, a, a, lam3 ** 2]))))
        is_ebc = classify_channel(phi_effective_channel(lam3), witnesses=False).is_ebc
        ok &= err <= 1e-10 and is_ebc == (lam3 <= 1.0 / 3.0)
        detail[str(lam3)] = {'max_error': err, 'is_ebc': is_ebc}
    for lam3, want_ebc in ((1.0 / 3.0 - 1e-6, True), (1.0 / 3.0 + 1e-6, False)):
        is_ebc = classify_channel(phi_effective_channel(lam3), witnesses=False).is_ebc
        ok &= is_ebc == want_ebc
        detail[f'{lam3:.7f}'] = {'is_ebc': is_ebc}
    return ok, detail


def check_qrac(rng, quick) -> Check:
    strategy = standard_qrac_strategy()
    grid = np.linspace(0.0, 1.0, 101 if quick else 1001)
    batch = qrac_success_batch(strategy, phi_effective_tmatrices(grid))
    err = float(np.max(np.abs(batch - qrac_closed_form(grid))))
    spot = max(abs(qrac_success(strategy, phi_effective_channel(x)) - qrac_closed_form(x))
               for x in grid[::50])
    root = qrac_threshold()
    root_err = abs(root - (2 ** 0.75 - 1))
    ok = max(err, spot) <= 1e-10 and root_err <= 1e-9
    return ok, {'max_error': err, 'scalar_max_error': spot, 'threshold': root, 'threshold_error': root_err}


def check_steering(rng, quick) -> Check:
    grid = np.linspace(0.0, 1.0, 101 if quick else 1001)
    batch = steering_F_batch(batched_choi_from_tmatrix(phi_effective_tmatrices(grid)))
    err = float(np.max(np.abs(batch - steering_closed_form(grid))))
    spot = max(abs(steering_F(steered_state(phi_effective_channel(x), PHI_PLUS)) - steering_closed_form(x))
               for x in grid[::50])
    printed = steering_threshold('printed')
    direct = steering_threshold('direct')
    ok = max(err, spot) <= 1e-10 and abs(printed - 0.8123) <= 5e-4
    return ok, {'max_error': err, 'scalar_max_error': spot,
                'printed_threshold': printed, 'direct_threshold': direct}


def check_ebc_equivalence(rng, quick) -> Check:
    lam = random_pauli_lambdas(rng, 10000 if quick else 100000)
    margin = np.abs(lam).sum(axis=1) - 1.0
    keep = np.abs(margin) >= 1e-7
    tm = np.zeros((len(lam), 4, 4))
    tm[:, 0, 0] = 1.0
    tm[:, 1, 1], tm[:, 2, 2], tm[:, 3, 3] = lam[:, 0], lam[:, 1], lam[:, 2]
    ppt = batched_is_ppt(batched_choi_from_tmatrix(tm))
    disagree = int(np.sum(ppt[keep] != (margin[keep] <= 0)))
    subset = np.flatnonzero(np.abs(margin) >= 1e-4)[:200]
    lp_disagree = sum(octahedron_contains_lp(lam[i]) != (margin[i] <= 0) for i in subset)
    ok = disagree == 0 and lp_disagree == 0
    return ok, {'samples': int(keep.sum()), 'disagreements': disagree, 'lp_disagreements': int(lp_disagree)}


def check_eb_preservation(rng, quick, seed=0, threads=None, progress=False) -> Check:
    n_ch, n_ops = (20, 50) if quick else (100, 500)
    stats = eb_preservation_sampling(n_ch, n_ops, seed=seed, threads=threads, progress=progress)
    return stats['violations'] == 0, stats


def check_noisy(rng, quick) -> Check:
    ch = lambdas_to_probs(PRESETS['perfect']).channel()
    rho = random_state(rng)
    err = 0.0
    for t in (-1.0 / 3.0, 0.0, 0.5, 1.0):
        out = noisy_control_effective(ch, t).apply(rho)
        expected = (1 + t) / 2 * rho + (1 - t) / 2 * SZ @ rho @ SZ
        err = max(err, float(np.max(np.abs(out - expected))))
    return err <= 1e-10, {'max_error': err}


def check_coherence(rng, quick) -> Check:
    grid = np.linspace(-1.0, 1.0, 21)
    err_eff = err_plain = 0.0
    points = 0
    for lam in grid:
        for t in grid:
            if abs(lam) + abs(t) > 1.0 + 1e-12:
                continue
            points += 1
            g = ((1 - lam) ** 2 - t ** 2) / 4
            want = np.diag([1.0, g, g, lam ** 2])
            want[3, 0] = t * (1 + lam)
            got = coherence_effective_channel(lam, t, 0.0, np.pi / 2, 0.0)
            err_eff = max(err_eff, float(np.max(np.abs(got - want))))
            plain = coherence_effective_channel(lam, t, controlled=False)
            want_plain = np.diag([1.0, 0.0, 0.0, lam ** 2])
            want_plain[3, 0] = t * (1 + lam)
            err_plain = max(err_plain, float(np.max(np.abs(plain - want_plain))))
    ok = err_eff <= 1e-9 and err_plain <= 1e-9
    return ok, {'points': points, 'effective_max_error': err_eff, 'plain_max_error': err_plain}


def check_scan_statistics(rng, quick, seed=0, threads=None, progress=False) -> Check:
    n = 100000 if quick else 1000000
    cfg = ScanConfig(family='pauli', sample_count=n, seed=seed, threads=threads or default_threads())
    census = concat_census(cfg, progress=progress)
    plus = distance_stats(census.distances_plus)['mean'] if len(census.distances_plus) else float('nan')
    minus = distance_stats(census.distances_minus)['mean'] if len(census.distances_minus) else float('nan')
    venn = census.venn
    conj = conjecture_search(n, 'pauli', seed=seed, threads=threads, progress=progress)
    ok = 1.18 <= plus <= 1.38 and 1.11 <= minus <= 1.31 and all(v > 0 for v in venn.values())
    detail = {
        'mean_distance_plus': plus,
        'mean_distance_minus': minus,
        'venn': venn,
        'conjecture': conj.summary(),
        'counterexamples': conj.counterexamples.head(10).to_dict(orient='records'),
    }
    return ok, detail


def check_geometry(rng, quick, seed=0, threads=None, progress=False) -> Check:
    df = octahedron_mapping_dataset(20000 if quick else 100000, 'minus', seed=seed,
                                    threads=threads, progress=progress)
    residual = minus_plane_residual(df)
    return residual <= 1e-9, {'useful': int(df['useful'].sum()), 'max_residual': residual}


SELFTEST_CHECKS: List[Tuple[int, str, Callable[..., Check], bool]] = [
    (1, '分支闭式与暴力构造一致', check_branch_oracle, False),
    (2, '完美通信', check_perfect, False),
    (3, 'q=1 退化', check_obs1, False),
    (4, 'Φ(λ3) 有效信道', check_phi_effective, False),
    (5, 'QRAC 曲线与阈值', check_qrac, False),
    (6, '导引曲线与阈值', check_steering, False),
    (7, 'PPT 与八面体判据等价', check_ebc_equivalence, False),
    (8, '分支均 EB 时受控操作保持 EB', check_eb_preservation, True),
    (9, '控制噪声闭式', check_noisy, False),
    (10, '相干闭式', check_coherence, False),
    (11, '扫描统计', check_scan_statistics, True),
    (12, 'C̄- 像的平面几何', check_geometry, True),
]


def cmd_selftest(args: argparse.Namespace) -> Any:
    seed = resolve_seed(args.seed)
    only = set(int(x) for x in parse_floats(args.only, what='检查编号')) if args.only else None
    results = []
    logger.info("=" * 50)
    logger.info(f"开始自检 (quick={args.quick}, seed={seed})")
    for number, name, func, pooled in SELFTEST_CHECKS:
        if only is not None and number not in only:
            continue
        rng = np.random.default_rng([seed, number])
        start = time.time()
        if pooled:
            passed, detail = func(rng, args.quick, seed=seed, threads=args.threads or default_threads(),
                                  progress=not args.no_progress)
        else:
            passed, detail = func(rng, args.quick)
        elapsed = time.time() - start
        status = "✅" if passed else "❌"
        logger.info(f"[{number}] {status} {name} ({elapsed:.2f}s)")
        results.append({'criterion': number, 'name': name, 'passed': bool(passed),
                        'seconds': round(elapsed, 3), 'detail': detail})
    failed = [r['criterion'] for r in results if not r['passed']]
    logger.info("=" * 50)
    logger.info(f"自检完成: {len(results) - len(failed)}/{len(results)} 通过")
    if failed:
        logger.error(f"未通过的检查: {failed}")
    args._exit_code = EXIT_ACCEPTANCE if failed else EXIT_OK
    return {'seed': seed, 'quick': args.quick, 'results': results, 'failed': failed}


# ========== 命令行 ==========
def _add_channel_args(p: argparse.ArgumentParser):
    g = p.add_argument_group('信道描述（恰好一个）')
    g.add_argument('--pauli', help='Pauli 信道 λ 向量 "λ1,λ2,λ3"，须在CP四面体内；负数开头时写成 --pauli=-1,0,0')
    g.add_argument('--probs', help='Pauli 概率 "p0,p1,p2,p3"，非负且和为1')
    g.add_argument('--tmatrix', help='按行展开的 4x4 T 矩阵（16个数），首行须为 1,0,0,0')
    g.add_argument('--channel-json', help='信道 JSON 文件路径或 JSON 字符串 (kind: pauli|tmatrix|kraus)')
    g.add_argument('--preset', help=f'预设信道: {", ".join(sorted(PRESETS))}、phi:<λ3> (λ3∈[-1,1])、depol:<t> (t∈[-1/3,1])')


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--seed', type=int, default=None,
                        help='随机种子（优先于 SWITCHLAB_SEED 环境变量与配置文件）')
    common.add_argument('--threads', type=int, default=None,
                        help='扫描线程数 (默认: CPU 核数)')
    common.add_argument('--out', default=None, help='输出文件路径 (默认: 标准输出)')
    common.add_argument('--format', choices=['json', 'csv'], default=None,
                        help='输出格式 (表格类命令默认 csv，其余默认 json)')
    common.add_argument('--log-file', default=DEFAULT_LOG_FILE,
                        help=f'日志文件 (默认: {DEFAULT_LOG_FILE})')
    common.add_argument('--verbose', '-v', action='store_true', help='显示详细日志')
    common.add_argument('--no-progress', action='store_true', help='不显示进度条')

    parser = argparse.ArgumentParser(description='量子开关信道分类与任务复现工具')
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    parser.add_argument('--rerun', metavar='FILE', help='读取输出文件的 manifest 并重新运行同一命令')
    sub = parser.add_subparsers(dest='command')

    p = sub.add_parser('classify', parents=[common], help='信道分类 (EB / n-IBC / CB) 与开关下的有用性')
    _add_channel_args(p)
    p.add_argument('--predicate', choices=sorted(USELESS_PREDICATES), default='eb',
                   help='无用判据: eb=纠缠破坏, cb=相干破坏 (默认: eb)')
    p.add_argument('--no-witnesses', action='store_true', help='不计算 QRAC / 导引见证')
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser('switch', parents=[common], help='开关分支报告与默认校正后的有效信道')
    _add_channel_args(p)
    p.add_argument('--rho', help='系统输入 Bloch 向量 "x,y,z"，|a|≤1 (默认: 最大混态)')
    p.add_argument('--omega', help='控制比特 Bloch 向量 "x,y,z"，|a|≤1 (默认: |+⟩ 即 1,0,0)')
    p.add_argument('--predicate', choices=sorted(USELESS_PREDICATES), default='eb')
    p.set_defaults(func=cmd_switch)

    for name, func, what in (('qrac', cmd_qrac, 'QRAC 成功概率 P′(λ3) 曲线'),
                             ('steer', cmd_steer, '导引函数 F(λ3) 曲线')):
        p = sub.add_parser(name, parents=[common], help=f'{what}，λ3 为 Φ(λ3) 的参数 (无量纲, [-1,1])')
        p.add_argument('--start', type=float, default=0.0, help='λ3 起点 (默认: 0)')
        p.add_argument('--stop', type=float, default=1.0, help='λ3 终点 (默认: 1)')
        p.add_argument('--step', type=float, default=1e-3, help='λ3 步长 (默认: 0.001)')
        p.set_defaults(func=func)

    p = sub.add_parser('coherence', parents=[common], help='相干破坏信道经开关与受控幺正后的 T 矩阵')
    p.add_argument('--lam', type=float, default=0.5, help='λ (默认: 0.5)，需 |λ|+|t|≤1')
    p.add_argument('--t', type=float, default=0.1, help='t (默认: 0.1)')
    p.add_argument('--theta', type=float, default=0.0, help='θ，弧度 (默认: 0)')
    p.add_argument('--phi1', type=float, default=float(np.pi / 2), help='φ1，弧度 (默认: π/2)')
    p.add_argument('--phi2', type=float, default=0.0, help='φ2，弧度 (默认: 0)')
    p.set_defaults(func=cmd_coherence)

    p = sub.add_parser('noisy', parents=[common], help='控制比特去极化噪声下的有效信道')
    _add_channel_args(p)
    p.add_argument('--noise-t', default='-1/3,0,0.5,1',
                   help='控制噪声参数列表，每个 t∈[-1/3,1] (默认: -1/3,0,0.5,1)；负数开头时写成 --noise-t=-1/3,0')
    p.set_defaults(func=cmd_noisy)

    p = sub.add_parser('scan', parents=[common], help='蒙特卡洛扫描')
    p.add_argument('--kind', choices=['octahedron', 'concat', 'distances', 'geometry', 'conjecture'],
                   default='concat', help='扫描类型 (默认: concat)')
    p.add_argument('--family', choices=sorted(FAMILIES), default=None, help='信道族 (默认: pauli)')
    p.add_argument('--samples', type=int, default=None, help='样本数或信道对数，≥1 (默认: 100000)')
    p.add_argument('--branch', choices=['plus', 'minus'], default='plus', help='八面体映射的分支')
    p.add_argument('--predicate', choices=sorted(USELESS_PREDICATES), default=None)
    p.add_argument('--chunk-size', type=int, default=None,
                   help=f'随机子流的块大小，结果与线程数无关 (默认: {DEFAULT_CHUNK_SIZE})')
    p.add_argument('--config', default=None, help=f'JSON 配置文件 (例如 {DEFAULT_CONFIG_FILE})')
    p.add_argument('--summary-out', default=None, help='concat/distances 的普查汇总 JSON 路径')
    p.add_argument('--bins', type=int, default=20, help='距离直方图的箱数 (默认: 20)')
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser('selftest', parents=[common], help='运行全部验收检查')
    p.add_argument('--quick', action='store_true', help='缩小样本规模')
    p.add_argument('--only', default=None, help='只运行指定编号，如 "1,2,5"')
    p.set_defaults(func=cmd_selftest)

    return parser


def _default_format(args: argparse.Namespace, payload: Any) -> str:
    if args.format:
        return args.format
    return 'csv' if isinstance(payload, pd.DataFrame) else 'json'


# 重跑时由 manifest 重新给出的选项，原 argv 里的同名项先去掉
_REPLAYED_OPTIONS = ('--seed', '--config', '--family', '--samples', '--predicate', '--chunk-size')
_SCAN_REPLAY = (('--family', 'family'), ('--samples', 'sample_count'),
                ('--predicate', 'useless_predicate'), ('--chunk-size', 'chunk_size'))


def _strip_options(argv: Sequence[str], names: Sequence[str]) -> List[str]:
    kept, skip = [], False
    for token in argv:
        if skip:
            skip = False
            continue
        if token in names:
            skip = True
            continue
        if token.startswith('--') and token.split('=', 1)[0] in names:
            continue
        kept.append(token)
    return kept


def rerun_argv(path: str, extra: Sequence[str]) -> List[str]:
    """
    由输出文件的 manifest 重建命令行

    种子固定为 manifest 记录的值，扫描配置逐项写回，不再读取配置文件和环境变量；
    extra 附在最后，可以覆盖重放的选项
    """
    manifest = read_manifest(path)
    argv = _strip_options(manifest.argv, _REPLAYED_OPTIONS if manifest.config else ('--seed',))
    if manifest.config:
        for option, key in _SCAN_REPLAY:
            if manifest.config.get(key) is not None:
                argv += [option, str(manifest.config[key])]
    if manifest.seed is not None:
        argv += ['--seed', str(manifest.seed)]
    logger.info(f"按 {path} 的 manifest 重新运行: {' '.join(argv)}")
    return argv + list(extra)


def run(argv: Optional[Sequence[str]] = None) -> int:
    """解析参数并执行子命令，返回退出码"""
    argv = list(sys.argv[1:] if argv is None else argv)
    if '--rerun' in argv:
        i = argv.index('--rerun')
        if i + 1 >= len(argv):
            raise ChannelSpecError("--rerun 需要一个输出文件路径")
        argv = rerun_argv(argv[i + 1], argv[:i] + argv[i + 2:])

    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help(sys.stderr)
        return EXIT_USAGE

    setup_logging(args.log_file, args.verbose)
    logger.info("=" * 50)
    logger.info(f"Switch Lab {__version__} 启动: {args.command}")
    logger.debug(f"参数: {vars(args)}")

    start = time.time()
    payload = args.func(args)
    manifest = RunManifest(
        command=args.command,
        argv=argv,
        seed=getattr(args, '_config_dict', {}).get('seed', resolve_seed(args.seed)),
        config=getattr(args, '_config_dict', {}),
        wall_time_ms=int((time.time() - start) * 1000),
    )
    emit(payload, _default_format(args, payload), args.out, manifest)
    return getattr(args, '_exit_code', EXIT_OK)


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        return run(argv)
    except ChannelSpecError as e:
        logger.error(f"参数错误: {str(e)}")
        return EXIT_USAGE
    except ValueError as e:
        logger.error(f"参数错误: {str(e)}")
        return EXIT_USAGE
    except SwitchLabError as e:
        logger.error(f"{type(e).__name__}: {str(e)}")
        return EXIT_DOMAIN
    except KeyboardInterrupt:
        logger.info("\n用户中断运行")
        return EXIT_INTERRUPTED
    except Exception as e:
        logger.error(f"程序执行错误: {str(e)}", exc_info=True)
        return EXIT_FAILURE


__all__ = [
    'ChannelSpec',
    'ChannelSpecError',
    'RunManifest',
    'build_parser',
    'main',
    'parse_channel_spec',
    'read_manifest',
]

if __name__ == "__main__":
    sys.exit(main())
