"""
蒙特卡洛定价
对数 Euler 离散扩散部分，复合泊松跳跃按泊松计数 + 均匀跳跃时刻模拟，VG 按 Gamma 时间变换逐步模拟。
路径按批次生成，每个批次的随机数流由 SeedSequence(seed).spawn 派生，结果按批次顺序归约，
因此给定种子的结果与线程数无关
"""

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from typing import Any, Dict, Iterator, List, Optional, Sequence

import numpy as np
import pandas as pd
from tqdm import tqdm

from pricing.exceptions import GammaSamplerError, ModelValidationError
from pricing.models import Instrument, ModelSpec, VGJumps

logger = logging.getLogger(__name__)

# Gamma 形状参数低于该值时抽样几乎全为 0
MIN_GAMMA_SHAPE = 1e-6


@dataclass
class MCConfig:
    """蒙特卡洛配置"""
    n_paths: int = 100000
    n_steps: int = 100
    seed: int = 20240227
    batch_size: int = 10000
    antithetic: bool = False
    threads: int = 0
    progress: bool = True

    def __post_init__(self):
        if self.n_paths < 1000:
            raise ValueError(f"路径数不能少于 1000: {self.n_paths}")
        if self.n_steps < 2:
            raise ValueError(f"时间步数不能少于 2: {self.n_steps}")
        if self.batch_size < 2:
            raise ValueError(f"批次大小不能少于 2: {self.batch_size}")
        if self.threads < 0:
            raise ValueError(f"线程数不能为负: {self.threads}")
        if self.antithetic and (self.batch_size % 2 or self.n_paths % 2):
            raise ValueError("对偶变量要求路径数与批次大小均为偶数")

    @property
    def workers(self) -> int:
        return self.threads or os.cpu_count() or 1


@dataclass
class MCResult:
    """蒙特卡洛结果 (已贴现)"""
    price: float
    std_err: float
    n_paths: int
    n_steps: int
    seed: int
    instrument: Instrument

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class PathBatch:
    """一个批次的路径统计量"""
    index: int
    averages: np.ndarray
    terminals: np.ndarray
    jump_counts: Optional[np.ndarray] = None


def _batch_sizes(cfg: MCConfig) -> List[int]:
    full, rest = divmod(cfg.n_paths, cfg.batch_size)
    return [cfg.batch_size] * full + ([rest] if rest else [])


def _jump_paths(model: ModelSpec, rng: np.random.Generator, n: int, T: float, n_steps: int):
    """返回 (累计对数跳跃 (n, n_steps+1), VG 高斯部分系数, 跳跃次数)"""
    jumps = model.jumps
    if jumps.is_compound_poisson:
        counts = rng.poisson(jumps.lam * T, size=n)
        increments = np.zeros((n, n_steps + 1))
        total = int(counts.sum())
        if total:
            owner = np.repeat(np.arange(n), counts)
            # 跳跃记在其所在时间步的末端
            step = np.clip(np.ceil(rng.random(total) * n_steps).astype(np.int64), 1, n_steps)
            np.add.at(increments, (owner, step), jumps.sample_sizes(rng, total))
        return np.cumsum(increments, axis=1), None, counts

    assert isinstance(jumps, VGJumps)
    dt = T / n_steps
    shape = dt / jumps.nu
    if shape < MIN_GAMMA_SHAPE:
        raise GammaSamplerError(f"Gamma 形状参数 Δt/ν={shape:.3e} 过小，请减少时间步数")
    d_gamma = rng.gamma(shape, jumps.nu, size=(n, n_steps))
    if not np.all(np.isfinite(d_gamma)):
        raise GammaSamplerError("Gamma 抽样出现非有限值")
    cum = np.zeros((n, n_steps + 1))
    cum[:, 1:] = np.cumsum(jumps.theta * d_gamma, axis=1)
    return cum, jumps.sigma_vg * np.sqrt(d_gamma), None


def _simulate_batch(model: ModelSpec, T: float, n: int, n_steps: int,
                    seed_seq: np.random.SeedSequence, antithetic: bool, index: int) -> PathBatch:
    rng = np.random.Generator(np.random.Philox(seed_seq))
    market, diffusion = model.market, model.diffusion
    dt = T / n_steps
    half = n // 2 if antithetic else n

    cum_jump, vg_scale, counts = _jump_paths(model, rng, half, T, n_steps)
    z = rng.standard_normal((half, n_steps))
    if vg_scale is not None:
        z_vg = rng.standard_normal((half, n_steps))

    if antithetic:
        z = np.concatenate([z, -z])
        cum_jump = np.concatenate([cum_jump, cum_jump])
        if vg_scale is not None:
            z_vg = np.concatenate([z_vg, -z_vg])
            vg_scale = np.concatenate([vg_scale, vg_scale])
        if counts is not None:
            counts = np.concatenate([counts, counts])

    if vg_scale is not None:
        cum_jump[:, 1:] += np.cumsum(vg_scale * z_vg, axis=1)

    drift = (market.r - market.q - model.jumps.compensator()) * dt
    log_s = np.empty((n, n_steps + 1))
    log_s[:, 0] = math.log(market.s0)

    if diffusion.kind == "constant":
        sigma = diffusion.sigma_const
        log_incr = drift - 0.5 * sigma * sigma * dt + sigma * math.sqrt(dt) * z
        log_s[:, 1:] = log_s[:, :1] + np.cumsum(log_incr, axis=1)
        log_s += cum_jump
    else:
        d_jump = np.diff(cum_jump, axis=1)
        for j in range(n_steps):
            sigma = np.asarray(diffusion.sigma_at(np.exp(log_s[:, j])), dtype=float)
            log_s[:, j + 1] = (log_s[:, j] + drift - 0.5 * sigma * sigma * dt
                               + sigma * math.sqrt(dt) * z[:, j] + d_jump[:, j])

    paths = np.exp(log_s)
    # 梯形法则离散平均
    averages = (0.5 * (paths[:, 0] + paths[:, -1]) + paths[:, 1:-1].sum(axis=1)) / n_steps
    return PathBatch(index=index, averages=averages, terminals=paths[:, -1], jump_counts=counts)


def simulate_paths(model: ModelSpec, T: float, cfg: Optional[MCConfig] = None) -> Iterator[PathBatch]:
    """按批次顺序产出路径平均值与终值"""
    cfg = cfg or MCConfig()
    if not T > 0:
        raise ModelValidationError(f"到期时间必须为正: {T}")
    sizes = _batch_sizes(cfg)
    seeds = np.random.SeedSequence(cfg.seed).spawn(len(sizes))

    def run(b: int) -> PathBatch:
        return _simulate_batch(model, T, sizes[b], cfg.n_steps, seeds[b], cfg.antithetic, b)

    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        batches = pool.map(run, range(len(sizes)))
        for batch in tqdm(batches, total=len(sizes), desc="MC 批次", disable=not cfg.progress):
            yield batch


def _payoff(inst: Instrument, batch: PathBatch) -> np.ndarray:
    A, S_T = batch.averages, batch.terminals
    if inst.style == "fixed":
        diff = A - inst.strike
    elif inst.style == "floating":
        diff = inst.kappa * S_T - A
    else:
        diff = S_T - inst.strike
    if inst.putcall == "put":
        diff = -diff
    return np.maximum(diff, 0.0)


def mc_price_strip(model: ModelSpec, instruments: Sequence[Instrument],
                   cfg: Optional[MCConfig] = None) -> List[MCResult]:
    """用同一组路径为多个同期限合约定价"""
    cfg = cfg or MCConfig()
    if not instruments:
        return []
    maturities = {inst.maturity for inst in instruments}
    if len(maturities) != 1 or None in maturities:
        raise ModelValidationError(f"同一组路径只能为单一到期时间定价: {sorted(map(str, maturities))}")
    T = maturities.pop()

    payoffs: List[List[np.ndarray]] = [[] for _ in instruments]
    for batch in simulate_paths(model, T, cfg):
        for i, inst in enumerate(instruments):
            p = _payoff(inst, batch)
            if cfg.antithetic:
                h = len(p) // 2
                p = 0.5 * (p[:h] + p[h:])
            payoffs[i].append(p)

    disc = math.exp(-model.market.r * T)
    results = []
    for inst, chunks in zip(instruments, payoffs):
        x = np.concatenate(chunks)
        results.append(MCResult(
            price=float(disc * x.mean()),
            std_err=float(disc * x.std(ddof=1) / math.sqrt(len(x))),
            n_paths=cfg.n_paths,
            n_steps=cfg.n_steps,
            seed=cfg.seed,
            instrument=inst,
        ))
    return results


def mc_price(model: ModelSpec, inst: Instrument, cfg: Optional[MCConfig] = None) -> MCResult:
    """单个合约的蒙特卡洛价格与标准误"""
    if inst.maturity is None:
        raise ModelValidationError("蒙特卡洛定价需要到期时间 T")
    return mc_price_strip(model, [inst], cfg)[0]


def convergence_study(model: ModelSpec, inst: Instrument, maturities: Sequence[float],
                      cfg: Optional[MCConfig] = None) -> pd.DataFrame:
    """不同期限下 (1/T)·价格 (虚值) 与 (1/√T)·价格 (平值) 的变化"""
    rows = []
    for T in maturities:
        res = mc_price(model, replace(inst, maturity=T), cfg)
        rows.append({
            "T": T,
            "price": res.price,
            "std_err": res.std_err,
            "price_over_T": res.price / T,
            "std_err_over_T": res.std_err / T,
            "price_over_sqrtT": res.price / math.sqrt(T),
        })
        logger.info("收敛性 T=%.6g: price=%.6g ± %.2g", T, res.price, res.std_err)
    return pd.DataFrame(rows)
