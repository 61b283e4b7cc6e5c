#!/usr/bin/env python3
# -*- coding: utf-8 -*-

import unittest
import sys
import os
import json
import tempfile
import logging
from unittest import mock

import numpy as np
import pandas as pd

# 添加项目根目录到路径
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

# 导入待测试模块
import switch_lab


def _body(path):
    """去掉 manifest 行后的文件内容"""
    with open(path, 'r', encoding='utf-8') as f:
        lines = f.readlines()
    return ''.join(line for line in lines if not line.startswith(switch_lab.MANIFEST_PREFIX))


class TestSwitchLabCLI(unittest.TestCase):
    """命令行测试"""

    def setUp(self):
        """测试前设置"""
        self.tmp = tempfile.TemporaryDirectory()
        self.log = os.path.join(self.tmp.name, 'test.log')

    def tearDown(self):
        """关闭日志文件后清理临时目录"""
        for handler in logging.getLogger().handlers[:]:
            handler.close()
            logging.getLogger().removeHandler(handler)
        self.tmp.cleanup()

    def run_cli(self, *args, name='out.json'):
        out = os.path.join(self.tmp.name, name)
        code = switch_lab.main(list(args) + ['--out', out, '--log-file', self.log, '--no-progress'])
        return code, out

    def read_json(self, path):
        return json.loads(_body(path))

    def test_classify_perfect(self):
        """测试完美通信信道的分类"""
        code, out = self.run_cli('classify', '--pauli', '0,0,-1')
        self.assertEqual(code, 0)
        result = self.read_json(out)
        self.assertTrue(result['switch_usefulness']['useless_plain'])
        self.assertTrue(result['switch_usefulness']['useful_under_plus'])
        self.assertTrue(result['classification']['is_ebc'])

    def test_manifest(self):
        """测试输出文件的manifest行"""
        code, out = self.run_cli('classify', '--preset', 'obs1')
        self.assertEqual(code, 0)
        manifest = switch_lab.read_manifest(out)
        self.assertEqual(manifest.command, 'classify')
        self.assertEqual(manifest.tool_version, switch_lab.__version__)
        self.assertIn('--preset', manifest.argv)

    def test_switch_phi(self):
        """测试Φ(λ3)的开关报告"""
        code, out = self.run_cli('switch', '--preset', 'phi:0.5')
        self.assertEqual(code, 0)
        result = self.read_json(out)
        self.assertAlmostEqual(result['phi']['q'], 0.53125)
        self.assertAlmostEqual(result['phi']['printed_q'], 1.75)
        self.assertAlmostEqual(result['pauli_closed_form']['q'], 0.53125)
        self.assertLess(result['pauli_closed_form']['choi_max_error'], 1e-9)
        self.assertLess(result['decomposition_max_error'], 1e-12)
        eff = np.array(result['effective_tmatrix'])
        np.testing.assert_allclose(eff, np.diag([1.0, 0.5625, 0.5625, 0.25]), atol=1e-10)

    def test_qrac_csv(self):
        """测试QRAC曲线CSV输出"""
        code, out = self.run_cli('qrac', '--step', '0.1', name='qrac.csv')
        self.assertEqual(code, 0)
        df = pd.read_csv(out, comment='#')
        self.assertEqual(len(df), 11)
        np.testing.assert_allclose(df['p_direct'], df['p_closed'], atol=1e-10)

    def test_rerun_reproduces(self):
        """测试 --rerun 得到相同的数值结果"""
        code, first = self.run_cli('steer', '--step', '0.25', name='steer.csv')
        self.assertEqual(code, 0)
        second = os.path.join(self.tmp.name, 'steer2.csv')
        code = switch_lab.main(['--rerun', first, '--out', second])
        self.assertEqual(code, 0)
        self.assertEqual(_body(first), _body(second))

    def test_coherence(self):
        """测试相干报告"""
        code, out = self.run_cli('coherence', '--lam', '0.5', '--t', '0.1')
        self.assertEqual(code, 0)
        result = self.read_json(out)
        self.assertTrue(result['plain_is_coherence_breaking'])
        self.assertFalse(result['effective_is_coherence_breaking'])
        self.assertLess(result['closed_form_max_error'], 1e-10)
        self.assertAlmostEqual(result['form']['t1'], 0.15)

    def test_noisy(self):
        """测试控制噪声"""
        code, out = self.run_cli('noisy', '--preset', 'perfect', '--noise-t=-1/3,0,0.5,1')
        self.assertEqual(code, 0)
        rows = self.read_json(out)['results']
        self.assertEqual(len(rows), 4)
        for row in rows:
            self.assertLess(row['closed_form_max_error'], 1e-12)

    def test_scan_octahedron(self):
        """测试八面体扫描"""
        code, out = self.run_cli('scan', '--kind', 'octahedron', '--branch', 'minus',
                                 '--samples', '500', '--seed', '1', name='oct.csv')
        self.assertEqual(code, 0)
        df = pd.read_csv(out, comment='#')
        self.assertEqual(len(df), 500)
        self.assertEqual(switch_lab.read_manifest(out).config['seed'], 1)

    def test_scan_concat_summary(self):
        """测试级联普查汇总"""
        code, out = self.run_cli('scan', '--kind', 'concat', '--samples', '1000', '--seed', '2',
                                 '--chunk-size', '250', '--threads', '2')
        self.assertEqual(code, 0)
        summary = self.read_json(out)
        self.assertEqual(summary['sample_count'], 1000)
        self.assertEqual(sum(summary['tallies'].values()), 1000)

    def test_selftest_quick(self):
        """测试快速自检的部分检查"""
        code, out = self.run_cli('selftest', '--quick', '--only', '2,3,4,9')
        self.assertEqual(code, 0)
        result = self.read_json(out)
        self.assertEqual([r['criterion'] for r in result['results']], [2, 3, 4, 9])
        self.assertEqual(result['failed'], [])

    def test_exit_codes(self):
        """测试退出码"""
        code, _ = self.run_cli('classify', '--pauli', '1,1,-1')
        self.assertEqual(code, switch_lab.EXIT_DOMAIN)
        code, _ = self.run_cli('classify')
        self.assertEqual(code, switch_lab.EXIT_USAGE)
        code, _ = self.run_cli('classify', '--preset', 'perfect', '--pauli', '0,0,0')
        self.assertEqual(code, switch_lab.EXIT_USAGE)
        code, _ = self.run_cli('noisy', '--preset', 'perfect', '--noise-t', '2')
        self.assertEqual(code, switch_lab.EXIT_DOMAIN)
        code, _ = self.run_cli('classify', '--pauli', 'a,b,c')
        self.assertEqual(code, switch_lab.EXIT_USAGE)
        with self.assertRaises(SystemExit):
            switch_lab.main(['scan', '--kind', 'nothing'])

    def test_noise_t_space_form_rejected(self):
        """测试负数开头的 --noise-t 必须写成等号形式"""
        with self.assertRaises(SystemExit):
            switch_lab.build_parser().parse_args(['noisy', '--preset', 'perfect', '--noise-t', '-1/3,0'])
        args = switch_lab.build_parser().parse_args(['noisy', '--preset', 'perfect', '--noise-t=-1/3,0'])
        self.assertEqual(args.noise_t, '-1/3,0')

    def test_seed_flag_beats_env(self):
        """测试 --seed 优先于 SWITCHLAB_SEED"""
        with mock.patch.dict(os.environ, {'SWITCHLAB_SEED': '99'}):
            code, out = self.run_cli('scan', '--kind', 'octahedron', '--samples', '50', '--seed', '1',
                                     name='flag.csv')
            self.assertEqual(code, 0)
            manifest = switch_lab.read_manifest(out)
            self.assertEqual(manifest.seed, 1)
            self.assertEqual(manifest.config['seed'], 1)

            code, out = self.run_cli('scan', '--kind', 'octahedron', '--samples', '50', name='env.csv')
            self.assertEqual(code, 0)
            self.assertEqual(switch_lab.read_manifest(out).seed, 99)

            code, out = self.run_cli('selftest', '--quick', '--only', '2', '--seed', '3', name='st.json')
            self.assertEqual(self.read_json(out)['seed'], 3)

    def test_seed_with_config_file(self):
        """测试配置文件、环境变量与 --seed 的优先级"""
        config = os.path.join(self.tmp.name, 'cfg.json')
        with open(config, 'w', encoding='utf-8') as f:
            json.dump({'seed': 5, 'sample_count': 40}, f)
        with mock.patch.dict(os.environ, {'SWITCHLAB_SEED': '99'}):
            code, out = self.run_cli('scan', '--kind', 'octahedron', '--config', config, name='a.csv')
            self.assertEqual(switch_lab.read_manifest(out).seed, 99)
            code, out = self.run_cli('scan', '--kind', 'octahedron', '--config', config, '--seed', '1',
                                     name='b.csv')
            self.assertEqual(switch_lab.read_manifest(out).seed, 1)
        with mock.patch.dict(os.environ):
            os.environ.pop('SWITCHLAB_SEED', None)
            code, out = self.run_cli('scan', '--kind', 'octahedron', '--config', config, name='c.csv')
            self.assertEqual(switch_lab.read_manifest(out).seed, 5)
            self.assertEqual(len(pd.read_csv(out, comment='#')), 40)

    def test_rerun_ignores_changed_env(self):
        """测试 --rerun 使用 manifest 的种子，不受环境变量变化影响"""
        with mock.patch.dict(os.environ, {'SWITCHLAB_SEED': '7'}):
            code, first = self.run_cli('scan', '--kind', 'octahedron', '--samples', '200', name='first.csv')
        self.assertEqual(code, 0)
        second = os.path.join(self.tmp.name, 'second.csv')
        with mock.patch.dict(os.environ, {'SWITCHLAB_SEED': '8'}):
            code = switch_lab.main(['--rerun', first, '--out', second, '--log-file', self.log, '--no-progress'])
        self.assertEqual(code, 0)
        self.assertEqual(switch_lab.read_manifest(second).seed, 7)
        self.assertEqual(_body(first), _body(second))

    def test_rerun_replays_config(self):
        """测试 --rerun 在配置文件被删除或修改后仍按 manifest 的配置重跑"""
        config = os.path.join(self.tmp.name, 'cfg.json')
        with open(config, 'w', encoding='utf-8') as f:
            json.dump({'seed': 11, 'sample_count': 60, 'chunk_size': 16}, f)
        with mock.patch.dict(os.environ):
            os.environ.pop('SWITCHLAB_SEED', None)
            code, first = self.run_cli('scan', '--kind', 'octahedron', '--config', config, name='first.csv')
            self.assertEqual(code, 0)
            with open(config, 'w', encoding='utf-8') as f:
                json.dump({'seed': 12, 'sample_count': 10}, f)
            second = os.path.join(self.tmp.name, 'second.csv')
            code = switch_lab.main(['--rerun', first, '--out', second, '--log-file', self.log, '--no-progress'])
        self.assertEqual(code, 0)
        manifest = switch_lab.read_manifest(second)
        self.assertEqual(manifest.seed, 11)
        self.assertEqual(manifest.config['sample_count'], 60)
        self.assertEqual(manifest.config['chunk_size'], 16)
        self.assertNotIn('--config', manifest.argv)
        self.assertEqual(_body(first), _body(second))

    def test_rerun_argv(self):
        """测试由 manifest 重建的命令行"""
        path = os.path.join(self.tmp.name, 'fake.json')
        manifest = switch_lab.RunManifest(
            command='scan',
            argv=['scan', '--kind', 'concat', '--seed=4', '--config', 'x.json', '--samples', '9'],
            seed=4,
            config={'family': 'pauli', 'sample_count': 9, 'useless_predicate': 'eb', 'chunk_size': 3},
        )
        with open(path, 'w', encoding='utf-8') as f:
            f.write(manifest.header())
        argv = switch_lab.rerun_argv(path, ['--out', 'y.json'])
        self.assertEqual(argv[:3], ['scan', '--kind', 'concat'])
        self.assertEqual(argv.count('--seed'), 1)
        self.assertEqual(argv[argv.index('--seed') + 1], '4')
        self.assertEqual(argv[argv.index('--samples') + 1], '9')
        self.assertEqual(argv[argv.index('--chunk-size') + 1], '3')
        self.assertNotIn('--config', argv)
        self.assertNotIn('--seed=4', argv)
        self.assertEqual(argv[-2:], ['--out', 'y.json'])

    def test_selftest_curves_and_branches(self):
        """测试 QRAC、导引曲线与分支检查的完整网格"""
        code, out = self.run_cli('selftest', '--only', '1,5,6', '--quick')
        self.assertEqual(code, 0)
        result = self.read_json(out)
        self.assertEqual(result['failed'], [])
        for r in result['results']:
            if r['criterion'] in (5, 6):
                self.assertLess(r['detail']['scalar_max_error'], 1e-10)

    def test_branch_check_uses_every_state(self):
        """测试分支检查对全部采样态都比较开关输出"""
        calls = []
        real = switch_lab.switch_output

        def counting(*args, **kwargs):
            calls.append(1)
            return real(*args, **kwargs)

        with mock.patch.object(switch_lab, 'switch_output', side_effect=counting):
            passed, _ = switch_lab.check_branch_oracle(np.random.default_rng(0), True)
        self.assertTrue(passed)
        self.assertEqual(len(calls), 20)

    def test_parse_floats(self):
        """测试数值解析"""
        self.assertEqual(switch_lab.parse_floats('-1/3, 0.5'), [-1.0 / 3.0, 0.5])
        with self.assertRaises(switch_lab.ChannelSpecError):
            switch_lab.parse_floats('1,2', count=3)


if __name__ == '__main__':
    unittest.main()
