"""End-to-end acceptance criteria, one test per criterion at the stated tolerance.

Each test records a ``PASS C<n>`` or ``FAIL C<n>`` line with its measured
value and runtime; the lines are collected in the terminal summary.
"""

import math
import time

import numpy as np
import pytest
import torch

from aqec.analytic import AnalyticSolver, LossChannelSet
from aqec.cli import load_config, rwa_params, time_solvers
from aqec.codes import (
    calibrate_protecting_factor,
    codeword_from_action,
    grl_drive_ladder,
    named_code,
    xi_family,
)
from aqec.core import ProjectorLadder, SystemParams, annihilation, apply_lindblad_an, apply_lindblad_eng
from aqec.dense import cardinal_matrices, evolve_hybrid, simulate_rwa_three_mode, trace_distance
from aqec.fidelity import breakeven_reference, cardinal_states, mean_fidelity
from aqec.rl import (
    AQECEnv,
    CurriculumSchedule,
    RewardConfig,
    clipped_surrogate,
    compute_advantages,
    run_curriculum,
)
from aqec.rl.curriculum import TrainingConfig
from aqec.rl.ppo import squashed_log_prob

from conftest import ACCEPTANCE_LINES, random_hermitian

# gamma_b = 1800, g = 600 in units of the single-photon loss rate
ZETA = (1800.0, 0.012, 600.0)
LAMBDA_STD = 4 * 600.0**2 / 1800.0


class Criterion:
    def __init__(self, number: int, title: str, budget_s: float):
        self.number, self.title, self.budget = number, title, budget_s

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        return False

    def finish(self, passed: bool, detail: str):
        dt = time.perf_counter() - self.t0
        ok = passed and dt < self.budget
        line = f"{'PASS' if ok else 'FAIL'} C{self.number} {self.title}: {detail} [{dt:.1f} s, budget {self.budget:g} s]"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert passed, line
        assert dt < self.budget, line


def dissipator_products(rho, L):
    """2 L rho L^+ - {L^+ L, rho} written out with matrix products."""
    LdL = L.conj().T @ L
    return 2.0 * L @ rho @ L.conj().T - (LdL @ rho + rho @ LdL)


def test_c01_breakeven_closed_form():
    with Criterion(1, "breakeven closed form", 1) as c:
        code, _ = named_code("breakeven")
        f = mean_fidelity(code, LossChannelSet(), None, 0.0, 0.6)
        formula = 0.5 + math.exp(-0.6) / 6 + math.exp(-0.3) / 3
        ok = abs(f - 0.8384) <= 1e-3 and abs(f - formula) <= 1e-3 and abs(f - 0.84) <= 1e-3 + 0.005
        c.finish(ok, f"F={f:.6f}, formula {formula:.6f}")


def test_c02_grl_headline():
    with Criterion(2, "GRL headline fidelity", 1) as c:
        code, lad = named_code("grl")
        f = mean_fidelity(code, LossChannelSet.single_double(0.012), lad, 1e4, 0.6)
        c.finish(0.89 <= f <= 0.93, f"F={f:.4f}, window [0.89, 0.93]")


def test_c03_cross_solver_oracle():
    with Criterion(3, "analytic vs dense hybrid", 300) as c:
        rng = np.random.default_rng(2024)
        params = SystemParams(ZETA[0], 0.0, ZETA[2])
        taus = [0.06, 0.6]
        worst = 0.0
        for _ in range(20):
            cvec = rng.uniform(-1, 1, 8)
            cvec[np.argmax(cvec)] = max(cvec.max(), 0.2)
            cvec[np.argmin(cvec)] = min(cvec.min(), -0.2)
            code = codeword_from_action(cvec)
            lad = ProjectorLadder(rng.uniform(0, 1, 7))
            init = cardinal_matrices(code)
            hyb = evolve_hybrid(init, lad, params, taus)
            ana = AnalyticSolver(8, LossChannelSet(), lad, params.lambda_coop).evolve_many(init, taus)
            worst = max(worst, max(trace_distance(hyb[t, b], ana[t, b]) for t in range(2) for b in range(6)))
        c.finish(worst <= 5e-3, f"max trace distance {worst:.2e} (limit 5e-3)")


def test_c04_element_formulas():
    with Criterion(4, "element formulas vs superoperator", 10) as c:
        rng = np.random.default_rng(4)
        worst = 0.0
        for i in range(100):
            rho = random_hermitian(8, rng)
            n = 1 + i % 3
            an = np.linalg.matrix_power(annihilation(8), n)
            worst = max(worst, np.max(np.abs(apply_lindblad_an(rho, n) - dissipator_products(rho, an))))
            lad = ProjectorLadder(rng.normal(size=7))
            worst = max(worst, np.max(np.abs(apply_lindblad_eng(rho, lad) - dissipator_products(rho, lad.operator()))))
        c.finish(worst <= 1e-12, f"max deviation {worst:.2e}")


def test_c05_double_photon_ordering():
    with Criterion(5, "double-photon robustness ordering", 120) as c:
        expected = {"grl": 7.6, "rl": 21.7, "binomial": 5.5, "t4c": 16.1}
        grid = np.linspace(0.0, 4.2, 71)
        window = grid >= 0.5
        be = breakeven_reference(grid)
        problems, parts = [], []
        for name, target in expected.items():
            code, lad = named_code(name)
            f0 = mean_fidelity(code, LossChannelSet(), lad, LAMBDA_STD, grid)
            f1 = mean_fidelity(code, LossChannelSet.single_double(0.012), lad, LAMBDA_STD, grid)
            drop = 100 * (f0[-1] - f1[-1]) / f0[-1]
            below = bool(np.any(f1[window] < be[window]))
            parts.append(f"{name} drop {drop:.2f} ({target}), below={below}")
            if abs(drop - target) > 2:
                problems.append(f"{name} drop")
            if below != (name != "grl"):
                problems.append(f"{name} ordering")
        c.finish(not problems, "; ".join(parts) + (f"; misses: {problems}" if problems else ""))


def test_c06_u_slope():
    with Criterion(6, "protecting-factor slope", 30) as c:
        etas = [0.0, 0.04, 0.08]
        us = [calibrate_protecting_factor(e).u for e in etas]
        slope = np.polyfit(etas, us, 1)[0]
        target = 27 / 112
        c.finish(abs(slope - target) <= 0.05 * target, f"du/deta={slope:.4f}, target {target:.4f} +/- 5%, u(0)={us[0]:.4f}")


def test_c07_xi_robustness():
    with Criterion(7, "xi robustness", 60) as c:
        code, _ = named_code("grl")
        ch = LossChannelSet.single_double(0.012)
        taus = np.linspace(0, 4.2, 71)
        curves = [mean_fidelity(code, ch, xi_family(x), 1e4, taus) for x in (0.5, 1.0, 1.3)]
        dev = max(np.max(np.abs(a - b)) for a in curves for b in curves)
        c.finish(dev < 0.01, f"max pairwise deviation {dev:.4f}")


def test_c08_solver_benchmark():
    with Criterion(8, "analytic solver speedup", 300) as c:
        row = time_solvers(32, points=70, repeats=3)
        c.finish(row["speedup"] >= 5, f"speedup {row['speedup']:.2f}x at N=32, max |diff| {row['max_abs_difference']:.1e}")


def test_c09_long_horizon():
    with Criterion(9, "long-horizon fidelity", 60) as c:
        code, lad = named_code("grl")
        f = mean_fidelity(code, LossChannelSet.single_double(0.012), lad, LAMBDA_STD, 4.2)
        be_code, _ = named_code("breakeven")
        fb = mean_fidelity(be_code, LossChannelSet(), None, 0.0, 4.2)
        ok = abs(f - 0.705) <= 0.02 and abs(fb - 0.548) <= 0.02
        c.finish(ok, f"GRL {f:.4f} (0.705), breakeven {fb:.4f} (0.548)")


@pytest.mark.filterwarnings("ignore:RWA regime")
def test_c10_rwa_gain():
    with Criterion(10, "RWA gain at 3 ms", 600) as c:
        rp, tau_final = rwa_params(load_config(None, {}, "rwa"))
        code, _ = named_code("grl")
        _, g = simulate_rwa_three_mode(code, grl_drive_ladder(), rp, np.linspace(0, tau_final, 31))
        c.finish(abs(g[-1] - 2.64) <= 0.15, f"G={g[-1]:.4f}, target 2.64 +/- 0.15")


def test_c11_strong_double_loss():
    with Criterion(11, "strong double-photon loss", 120) as c:
        be = breakeven_reference(0.3)
        lam = {g: 4 * g * g / ZETA[0] for g in (600.0, 900.0)}
        problems, parts = [], []
        for name in ("rl", "binomial", "t4c"):
            code, lad = named_code(name)
            f0 = mean_fidelity(code, LossChannelSet(), lad, lam[600.0], 0.3)
            f8 = {g: mean_fidelity(code, LossChannelSet.single_double(0.08), lad, l, 0.3) for g, l in lam.items()}
            drop = 100 * (f0 - f8[600.0])
            shift = 100 * abs(f8[900.0] - f8[600.0])
            parts.append(f"{name} drop {drop:.2f} pts, F={f8[600.0]:.4f}, g shift {shift:.2f} pts")
            if drop < 8:
                problems.append(f"{name} drop")
            if f8[600.0] >= be:
                problems.append(f"{name} above breakeven")
            if shift >= 2:
                problems.append(f"{name} g sensitivity")
        c.finish(not problems, "; ".join(parts) + f"; breakeven {be:.4f}" + (f"; misses: {problems}" if problems else ""))


def test_c12_ppo_correctness():
    with Criterion(12, "PPO correctness", 60) as c:
        checks = {}
        u = torch.tensor([[0.3], [-0.8], [1.1], [0.05]], dtype=torch.float64)
        adv = torch.tensor([1.0, -0.5, 2.0, 0.7], dtype=torch.float64)
        old = torch.tensor([0.1, -0.3], dtype=torch.float64)

        def surrogate(th):
            lp = squashed_log_prob(u, th[0].expand(4, 1), th[1].expand(4, 1))
            lo = squashed_log_prob(u, old[0].expand(4, 1), old[1].expand(4, 1))
            return clipped_surrogate(torch.exp(lp - lo), adv, 0.2)

        th = torch.tensor([0.15, -0.28], dtype=torch.float64, requires_grad=True)
        surrogate(th).backward()
        fd = []
        for i in range(2):
            e = torch.zeros(2, dtype=torch.float64)
            e[i] = 1e-6
            fd.append(float((surrogate(th.detach() + e) - surrogate(th.detach() - e)) / 2e-6))
        checks["fd_gradient"] = bool(torch.allclose(th.grad, torch.tensor(fd, dtype=torch.float64), rtol=1e-4, atol=0))
        checks["advantages"] = np.allclose(compute_advantages([1.0, 1.0], [0.0, 0.0], 0.99), [1.99, 1.0])
        ratio = torch.ones(3)
        a3 = torch.tensor([1.0, -2.0, 0.5])
        checks["clip_inactive"] = float(clipped_surrogate(ratio, a3, 0.2)) == pytest.approx(float(a3.mean()))

        def roll(seed):
            env = AQECEnv()
            env.reset(seed, mode="phase1")
            rng = np.random.default_rng(seed)
            out, done = [], False
            while not done:
                obs, r, done, _ = env.step(rng.uniform(-0.99, 0.99, 15))
                out.append((r, obs.tolist()))
            return out

        checks["env_determinism"] = roll(7) == roll(7)
        c.finish(all(checks.values()), ", ".join(f"{k}={v}" for k, v in checks.items()))


@pytest.mark.slow
def test_c13_phase1_discovery():
    with Criterion(13, "phase-1 smoke discovery", 1800) as c:
        results = []
        for seed in range(5):
            cfg = TrainingConfig.from_dict({"schedule": {"phase1_episodes": 2000, "phase2_episodes": 0, "fixed_zeta": list(ZETA)}, "seed": seed})
            art = run_curriculum(cfg)
            eps = float("-inf")
            if art.best is not None and len(art.best.actions) == 4:
                # replay the code under the recorded ladder sequence
                code, _ = art.best.decode()
                init = cardinal_states(code).stack()
                rhos = init
                for lad in art.best.ladders():
                    rhos = AnalyticSolver(8, LossChannelSet.single_double(ZETA[1]), lad, LAMBDA_STD).evolve_many(rhos, [0.06])[0]
                f = float(np.real(np.einsum("bij,bji->", init, rhos))) / 6
                eps = f - breakeven_reference(0.24)
                assert eps == pytest.approx(art.best.epsilon, abs=1e-9)
            results.append(eps)
        c.finish(max(results) > 0, "best eps per seed " + ", ".join(f"{e:.4f}" for e in results))


def test_c14_delta_reward_pathology():
    with Criterion(14, "delta-fidelity reward pathology", 10) as c:
        env = AQECEnv(CurriculumSchedule(fixed_zeta=ZETA), RewardConfig(mode="delta_fidelity"))
        env.reset(0, mode="delta_fidelity", max_steps=70)
        total, k, done = 0.0, 0, False
        while not done:
            a = np.zeros(15)
            a[4], a[7] = 0.9, -0.9
            if k % 2:
                a[[10, 11, 13, 14]] = 0.5
            else:
                a[12] = 0.5
            _, r, done, info = env.step(a)
            total += r
            k += 1
        ok = total > 0 and info["mean_fidelity"] < info["breakeven"]
        c.finish(ok, f"cumulative reward {total:.4f}, final F {info['mean_fidelity']:.4f} vs breakeven {info['breakeven']:.4f}")
