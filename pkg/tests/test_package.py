#!/usr/bin/env python3
# -*- coding: utf-8 -*-

import unittest
import sys
import os

import numpy as np

# 添加项目根目录到路径
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

# 导入待测试模块
import switchlab_pkg
import switch_lab


class TestPackage(unittest.TestCase):
    """包导出测试"""

    def test_all_names_resolve(self):
        """测试 __all__ 中的每个名字都能取到"""
        for name in switchlab_pkg.__all__:
            self.assertTrue(hasattr(switchlab_pkg, name), name)
        self.assertEqual(len(set(switchlab_pkg.__all__)), len(switchlab_pkg.__all__))

    def test_version_matches_cli(self):
        """测试包版本与命令行版本一致"""
        self.assertEqual(switchlab_pkg.__version__, switch_lab.__version__)
        self.assertIs(switchlab_pkg.main, switch_lab.main)

    def test_exported_workflow(self):
        """测试只用包导出完成一次开关分类"""
        ch = switchlab_pkg.lambdas_to_probs([0.0, 0.0, -1.0]).channel()
        np.testing.assert_allclose(switchlab_pkg.effective_channel(ch).tmatrix, np.eye(4), atol=1e-12)
        result = switchlab_pkg.switch_usefulness(ch)
        self.assertIsInstance(result, switchlab_pkg.SwitchUsefulness)


if __name__ == '__main__':
    unittest.main()
