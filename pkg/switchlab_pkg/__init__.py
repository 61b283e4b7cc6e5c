#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Switch Lab Package
"""

import os
import sys

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from qchannel_core import (
    Channel,
    CPMap,
    PauliChannel,
    SwitchLabError,
    NotCompletelyPositive,
    NotTracePreserving,
    BlochOutOfBall,
    DimensionMismatch,
    bloch_to_density,
    choi_of,
    tmatrix_of,
    choi_from_tmatrix,
    choi_to_kraus,
    apply,
    compose,
    dual,
    depolarizing,
    lambdas_to_probs,
    channel_to_json,
    channel_from_json,
    batched_choi_from_tmatrix,
    batched_tmatrix_from_choi,
)
from switch_engine import (
    ControlledOp,
    SwitchResult,
    PauliBranches,
    run_switch,
    branch_maps,
    pauli_branches,
    apply_controlled,
    effective_channel,
    noisy_control,
    noisy_control_effective,
    phi_channel,
    controlled_tmatrices,
)
from channel_classify import (
    ChannelClassification,
    SwitchUsefulness,
    is_entanglement_breaking,
    is_coherence_breaking,
    depolarizing_ibc_threshold,
    classify_channel,
    switch_usefulness,
)
from info_tasks import (
    QRACStrategy,
    qrac_success,
    qrac_classical_bound,
    steering_F,
    qrac_success_batch,
    steering_F_batch,
    coherence_effective_channel,
)
from scan_lab import (
    ScanConfig,
    CensusResult,
    octahedron_mapping_table,
    concat_census,
    distance_stats,
    eb_preservation_sampling,
)

__version__ = '0.3.0'
__author__ = 'Alan'

# 便于导入的组件列表
__all__ = [
    'Channel',
    'CPMap',
    'PauliChannel',
    'SwitchLabError',
    'NotCompletelyPositive',
    'NotTracePreserving',
    'BlochOutOfBall',
    'DimensionMismatch',
    'bloch_to_density',
    'choi_of',
    'tmatrix_of',
    'choi_from_tmatrix',
    'choi_to_kraus',
    'apply',
    'compose',
    'dual',
    'depolarizing',
    'lambdas_to_probs',
    'channel_to_json',
    'channel_from_json',
    'batched_choi_from_tmatrix',
    'batched_tmatrix_from_choi',
    'ControlledOp',
    'SwitchResult',
    'PauliBranches',
    'run_switch',
    'branch_maps',
    'pauli_branches',
    'apply_controlled',
    'effective_channel',
    'noisy_control',
    'noisy_control_effective',
    'phi_channel',
    'controlled_tmatrices',
    'ChannelClassification',
    'SwitchUsefulness',
    'is_entanglement_breaking',
    'is_coherence_breaking',
    'depolarizing_ibc_threshold',
    'classify_channel',
    'switch_usefulness',
    'QRACStrategy',
    'qrac_success',
    'qrac_classical_bound',
    'steering_F',
    'qrac_success_batch',
    'steering_F_batch',
    'coherence_effective_channel',
    'ScanConfig',
    'CensusResult',
    'octahedron_mapping_table',
    'concat_census',
    'distance_stats',
    'eb_preservation_sampling',
    'main'  # 命令行入口
]

# 导入命令行入口
from switch_lab import main
