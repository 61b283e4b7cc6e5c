#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Switch Lab - 批量生成全部数据集
依次调用 switch_lab.py 的各个子命令，把曲线、扫描结果和汇总写到输出目录，
每一步的结果追加到 figure_progress.csv，适合后台运行
"""

import os
import sys
import platform
import subprocess
import time
import datetime
import csv
import argparse

PROGRESS_FILE = 'figure_progress.csv'
DEFAULT_OUTDIR = 'figures'


def log(message):
    """记录日志"""
    timestamp = datetime.datetime.now().strftime("%Y-%m-%d %H:%M:%S")
    print(f"[{timestamp}] {message}")


def run_switch_lab(args, timeout=None):
    """运行 switch_lab.py，返回退出码；超时返回 None"""
    cmd = [sys.executable, 'switch_lab.py'] + args
    log(f"执行命令: {' '.join(cmd)}")

    try:
        process = subprocess.run(cmd, timeout=timeout, check=False)
    except subprocess.TimeoutExpired:
        log(f"命令执行超时（{timeout}秒），强制终止")
        return None

    if process.returncode != 0:
        log(f"switch_lab 异常退出，返回码: {process.returncode}")
    return process.returncode


def save_figure_progress(step_info, progress_file=PROGRESS_FILE):
    """追加一行步骤记录"""
    fieldnames = ['timestamp', 'step', 'success', 'returncode', 'output', 'duration']
    file_exists = os.path.exists(progress_file)

    with open(progress_file, 'a', newline='', encoding='utf-8') as f:
        writer = csv.DictWriter(f, fieldnames=fieldnames)
        if not file_exists:
            writer.writeheader()
        writer.writerow(step_info)


def figure_steps(outdir, samples, seed, threads):
    """[(步骤名, 参数列表, 输出文件)]"""
    def out(name):
        return os.path.join(outdir, name)

    common = ['--seed', str(seed), '--no-progress']
    if threads:
        common += ['--threads', str(threads)]
    scan = ['scan', '--samples', str(samples)] + common

    return [
        ('qrac', ['qrac', '--out', out('qrac_curve.csv')] + common, out('qrac_curve.csv')),
        ('steer', ['steer', '--out', out('steering_curve.csv')] + common, out('steering_curve.csv')),
        ('octahedron_plus', scan + ['--kind', 'octahedron', '--branch', 'plus',
                                    '--out', out('octahedron_plus.csv')], out('octahedron_plus.csv')),
        ('octahedron_minus', scan + ['--kind', 'octahedron', '--branch', 'minus',
                                     '--out', out('octahedron_minus.csv')], out('octahedron_minus.csv')),
        ('concat_pauli', scan + ['--kind', 'concat', '--family', 'pauli', '--format', 'csv',
                                 '--out', out('concat_pauli.csv'),
                                 '--summary-out', out('concat_pauli_summary.json')], out('concat_pauli.csv')),
        ('concat_nonunital', scan + ['--kind', 'concat', '--family', 'nonunital', '--format', 'csv',
                                     '--out', out('concat_nonunital.csv'),
                                     '--summary-out', out('concat_nonunital_summary.json')],
         out('concat_nonunital.csv')),
        ('distances', scan + ['--kind', 'distances', '--out', out('distances.json')], out('distances.json')),
        ('geometry', scan + ['--kind', 'geometry', '--out', out('geometry.csv')], out('geometry.csv')),
        ('conjecture', scan + ['--kind', 'conjecture', '--out', out('conjecture.json')], out('conjecture.json')),
        ('coherence', ['coherence', '--out', out('coherence.json')] + common, out('coherence.json')),
        ('noisy', ['noisy', '--preset', 'perfect', '--out', out('noisy_perfect.json')] + common,
         out('noisy_perfect.json')),
    ]


def run_figures(outdir, samples, seed, threads=None, only=None, timeout=3600):
    """按顺序运行全部步骤，返回失败步骤列表"""
    os.makedirs(outdir, exist_ok=True)
    steps = figure_steps(outdir, samples, seed, threads)
    if only:
        steps = [s for s in steps if s[0] in only]

    start_time = time.time()
    failed = []
    for i, (name, args, output) in enumerate(steps, 1):
        step_start = time.time()
        log("-" * 50)
        log(f"正在运行步骤 [{i}/{len(steps)}]: {name}")

        returncode = run_switch_lab(args, timeout=timeout)
        success = returncode == 0
        duration = time.time() - step_start

        save_figure_progress({
            'timestamp': datetime.datetime.now().strftime("%Y-%m-%d %H:%M:%S"),
            'step': name,
            'success': success,
            'returncode': returncode,
            'output': output,
            'duration': round(duration, 2),
        })

        log(f"步骤完成: {name} {'成功' if success else '失败'}，耗时 {round(duration, 2)}秒")
        if not success:
            failed.append(name)
            log("该步骤失败，将继续下一个步骤")

    log("-" * 50)
    log(f"全部步骤完成！总耗时: {round((time.time() - start_time) / 60, 2)}分钟")
    if failed:
        log(f"失败的步骤: {', '.join(failed)}")
    return failed


def check_environment():
    """检查运行环境"""
    log(f"系统: {platform.system()} {platform.release()}")
    log(f"Python版本: {platform.python_version()}")

    if not os.path.exists('switch_lab.py'):
        log("错误: 无法找到核心文件 switch_lab.py")
        return False
    return True


def parse_args(argv=None):
    """解析命令行参数"""
    parser = argparse.ArgumentParser(description='Switch Lab - 批量生成数据集')
    parser.add_argument('--outdir', default=DEFAULT_OUTDIR, help=f'输出目录，默认为 {DEFAULT_OUTDIR}')
    parser.add_argument('--samples', type=int, default=1000000, help='扫描的样本数，默认为1000000')
    parser.add_argument('--seed', type=int, default=20240229, help='随机种子，默认为20240229')
    parser.add_argument('--threads', type=int, default=None, help='扫描线程数，默认为CPU核数')
    parser.add_argument('--quick', action='store_true', help='快速模式，样本数降为100000')
    parser.add_argument('--only', nargs='+', metavar='STEP', help='只运行指定步骤')
    parser.add_argument('--timeout', type=int, default=3600, help='每个步骤的超时秒数，默认为3600')
    return parser.parse_args(argv)


def main(argv=None):
    """主函数"""
    args = parse_args(argv)

    print("=" * 80)
    print("  Switch Lab - 批量生成数据集")
    print("=" * 80)

    if not check_environment():
        log("环境检查未通过，程序无法运行")
        return 1

    samples = min(args.samples, 100000) if args.quick else args.samples
    try:
        failed = run_figures(args.outdir, samples, args.seed, args.threads, args.only, args.timeout)
    except KeyboardInterrupt:
        log("用户中断了批量生成")
        return 130

    log("程序执行完毕")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
