"""Command-line entry point: one subcommand per experiment.

Every run validates its JSON config against :data:`CONFIG_SCHEMA`, writes
plot-ready CSV/JSON into ``--out`` and stamps each CSV with the config hash.
Exit codes: 0 ok, 2 bad config, 3 numerical failure, 4 ``--check`` miss.
"""
from __future__ import annotations

import argparse
import copy
import hashlib
import json
import math
import sys
import time
import warnings
from dataclasses import asdict
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .analytic import AnalyticSolver, LossChannelSet
from .codes import (
    CODE_NAMES,
    grl_drive_ladder,
    hamiltonian_distances,
    kl_check,
    named_code,
    xi_family,
)
from .core import AQECError, ConfigurationError, SystemParams
from .dense import (
    AmplitudeDampingParams,
    PhaseDampingParams,
    RWAParams,
    SingularityError,
    StiffnessError,
    cardinal_matrices,
    evolve_reduced_dense,
    simulate_amplitude_damping,
    simulate_aqec_hybrid,
    simulate_phase_damping,
    simulate_rwa_three_mode,
)
from .fidelity import (
    CARDINAL_LABELS,
    bloch_scan,
    breakeven_reference,
    cardinal_states,
    evolve_states,
    mean_fidelity,
    wigner,
    wigner_integral,
    wigner_overlap,
    write_csv,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_CHECK = 0, 2, 3, 4

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_nonneg = {"type": "number", "minimum": 0}
_num_list = {"type": "array", "items": _num, "minItems": 1}

TAU_GRID_SCHEMA = {
    "oneOf": [
        {"type": "array", "items": _nonneg, "minItems": 1},
        {
            "type": "object",
            "properties": {"start": _nonneg, "stop": _nonneg, "num": {"type": "integer", "minimum": 1}},
            "required": ["stop", "num"],
            "additionalProperties": False,
        },
    ]
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "aqec experiment config",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "experiment": {"type": "string"},
        "codes": {"type": "array", "items": {"enum": list(CODE_NAMES)}, "minItems": 1},
        "code": {"enum": list(CODE_NAMES)},
        "dim": {"type": "integer", "minimum": 2},
        "params": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "gamma_b_ratio": _pos,
                "eta2": {"type": "number", "minimum": 0, "maximum": 1},
                "g_ratio": _nonneg,
                "lambda_coop": {"type": ["number", "null"], "minimum": 0},
            },
        },
        "etas": {"type": "array", "items": _nonneg, "minItems": 1},
        "solver": {"enum": ["analytic", "dense"]},
        "tau_grid": TAU_GRID_SCHEMA,
        "tau": _nonneg,
        "drop_tau": _nonneg,
        "bloch": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"theta_points": {"type": "integer", "minimum": 2}, "phi_points": {"type": "integer", "minimum": 1}},
        },
        "benchmark": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dims": {"type": "array", "items": {"type": "integer", "minimum": 8}, "minItems": 1},
                "repeats": {"type": "integer", "minimum": 1},
                "points": {"type": "integer", "minimum": 1},
            },
        },
        "noise": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["phase", "amplitude"]},
                "omega_c": _num_list,
                "s": _num_list,
                "s_in_phase": {"type": "boolean"},
                "gamma0": {"type": "array", "items": _nonneg, "minItems": 1},
                "cases": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "properties": {"detuning_hz": _num, "width_hz": _pos},
                        "required": ["detuning_hz", "width_hz"],
                    },
                },
                "gamma_a_hz": _pos,
            },
        },
        "wigner": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"extent": _pos, "points": {"type": "integer", "minimum": 11}},
        },
        "xi_list": {"type": "array", "items": _pos, "minItems": 1},
        "rwa": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "gamma_a_hz": _pos,
                "gamma_a2_hz": _nonneg,
                "gamma_b_hz": _nonneg,
                "gamma_c_hz": _nonneg,
                "g0_hz": _num,
                "g1_hz": _num,
                "t_final_ms": _pos,
                "points": {"type": "integer", "minimum": 1},
            },
        },
        "training": {"type": "object"},
    },
}

DEFAULTS = {
    "codes": ["breakeven", "grl", "rl", "binomial", "t4c"],
    "code": "grl",
    "dim": 8,
    "params": {"gamma_b_ratio": 1800.0, "eta2": 0.012, "g_ratio": 600.0, "lambda_coop": None},
    "etas": [0.0, 0.012],
    "solver": "analytic",
    "tau_grid": {"start": 0.0, "stop": 4.2, "num": 71},
    "tau": 0.6,
    "drop_tau": 4.2,
    "bloch": {"theta_points": 11, "phi_points": 40},
    "benchmark": {"dims": [8, 16, 32], "repeats": 3, "points": 70},
    "noise": {
        "kind": "phase",
        "omega_c": [16.0, 64.0, 256.0, 1024.0],
        "s": [2.0, 3.7, 5.0],
        "s_in_phase": False,
        "gamma0": [0.0, 10.0, 100.0, 1000.0],
        "cases": [{"detuning_hz": 100e3, "width_hz": 140e3}, {"detuning_hz": 1e3, "width_hz": 40.0}],
        "gamma_a_hz": 200.0,
    },
    "wigner": {"extent": 6.0, "points": 121},
    "xi_list": [0.5, 1.0, 1.3],
    "rwa": {
        "gamma_a_hz": 0.2e3,
        "gamma_a2_hz": 2.0,
        "gamma_b_hz": 2e3,
        "gamma_c_hz": 0.24e6,
        "g0_hz": 0.12e6,
        "g1_hz": 0.16e6,
        "t_final_ms": 3.0,
        "points": 31,
    },
    "training": {},
}

# headline settings that differ from the experimental defaults above
COMMAND_DEFAULTS = {
    "scan-bloch": {"params": {"lambda_coop": 1e4}},
    "xi-scan": {"params": {"lambda_coop": 1e4}},
    "wigner": {"tau": 4.2},
}

# values the --check mode compares against
EXPECTED = {
    "breakeven_0.6": (0.8384, 1e-3),
    "drops": {"grl": 7.6, "rl": 21.7, "binomial": 5.5, "t4c": 16.1},
    "drop_tol": 2.0,
    "bloch_min": 0.90,
    "speedup_min": 5.0,
    "noise_long_loss_pct": 1.2,
    "wigner_integral_tol": 0.01,
    "wigner_grl": (0.705, 0.02),
    "wigner_breakeven": (0.548, 0.02),
    "xi_max_dev": 0.01,
    "rwa_gain": (2.64, 0.15),
}


class CheckFailed(Exception):
    pass


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k != "training":
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def load_config(path: str | None, overrides: dict, command: str | None = None) -> dict:
    raw = {}
    if path:
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    jsonschema.validate(raw, CONFIG_SCHEMA)
    cfg = _merge(_merge(DEFAULTS, COMMAND_DEFAULTS.get(command, {})), raw)
    cfg = _merge(cfg, {k: v for k, v in overrides.items() if v is not None})
    jsonschema.validate(cfg, CONFIG_SCHEMA)
    return cfg


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()[:16]


def tau_grid(spec) -> np.ndarray:
    if isinstance(spec, dict):
        return np.linspace(spec.get("start", 0.0), spec["stop"], spec["num"])
    return np.asarray(sorted(spec), dtype=float)


def system_params(cfg: dict, eta: float | None = None) -> SystemParams:
    """Hybrid parameters; an explicit ``lambda_coop`` rescales ``g`` to match it."""
    p = cfg["params"]
    g = p["g_ratio"]
    if p.get("lambda_coop") is not None:
        g = math.sqrt(p["lambda_coop"] * p["gamma_b_ratio"] / 4.0)
    return SystemParams(p["gamma_b_ratio"], p["eta2"] if eta is None else eta, g)


class Run:
    """Per-invocation context: output directory, hash and the check ledger."""

    def __init__(self, name: str, cfg: dict, out: Path, check: bool):
        self.name, self.cfg, self.out, self.check = name, cfg, out, check
        self.hash = config_hash(cfg)
        self.checks: list[dict] = []
        out.mkdir(parents=True, exist_ok=True)

    def csv(self, filename: str, columns, rows) -> Path:
        return write_csv(self.out / filename, columns, rows, self.hash)

    def expect(self, name: str, value: float, ok: bool, target: str):
        self.checks.append({"name": name, "value": value, "target": target, "passed": bool(ok)})

    def summary(self, data: dict) -> Path:
        doc = {"experiment": self.name, "version": __version__, "config_hash": self.hash, "config": self.cfg, **data}
        if self.checks:
            doc["checks"] = self.checks
        path = self.out / "summary.json"
        path.write_text(json.dumps(doc, indent=2, default=_json_default))
        return path


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


# --------------------------------------------------------------------------
# subcommands


def cmd_evaluate(run: Run) -> dict:
    cfg = run.cfg
    taus = tau_grid(cfg["tau_grid"])
    drop_tau = cfg["drop_tau"]
    grid = np.union1d(taus, [drop_tau])
    results = {}
    for name in cfg["codes"]:
        code, ladder = named_code(name, cfg["dim"])
        curves = {}
        for eta in cfg["etas"]:
            params = system_params(cfg, eta)
            lam = params.lambda_coop if ladder is not None else 0.0
            f = mean_fidelity(code, LossChannelSet.single_double(eta), ladder, lam, grid, cfg["solver"], params)
            curves[eta] = f
            run.csv(
                f"fidelity_{name}_eta{eta:g}.csv",
                ["tau", "mean_fidelity", "breakeven"],
                [(t, v, breakeven_reference(t)) for t, v in zip(grid, f) if t in taus],
            )
        i = int(np.searchsorted(grid, drop_tau))
        entry = {"lambda_coop": system_params(cfg).lambda_coop if ladder is not None else 0.0}
        window = (grid >= 0.5) & (grid <= 4.2)
        for eta, f in curves.items():
            entry[f"eta{eta:g}"] = {
                "fidelity_at_drop_tau": float(f[i]),
                "fidelity_at_0.6": float(np.interp(0.6, grid, f)),
                "below_breakeven_in_0.5_4.2": bool(np.any(f[window] < breakeven_reference(grid[window]))),
            }
        etas = sorted(curves)
        if len(etas) >= 2:
            f0, f1 = curves[etas[0]][i], curves[etas[-1]][i]
            entry["drop_percent"] = float(100.0 * (f0 - f1) / f0)
            entry["drop_points"] = float(100.0 * (f0 - f1))
            exp = EXPECTED["drops"].get(name)
            if exp is not None:
                run.expect(f"drop_{name}", entry["drop_percent"], abs(entry["drop_percent"] - exp) <= EXPECTED["drop_tol"], f"{exp} +/- {EXPECTED['drop_tol']}")
        results[name] = entry
    f_be = breakeven_reference(0.6)
    target, tol = EXPECTED["breakeven_0.6"]
    if "breakeven" in cfg["codes"]:
        run.expect("breakeven_0.6", f_be, abs(f_be - target) <= tol, f"{target} +/- {tol}")
    return {"drop_tau": drop_tau, "breakeven_0.6": f_be, "codes": results}


def cmd_scan_bloch(run: Run) -> dict:
    cfg = run.cfg
    out = {}
    for name in cfg["codes"]:
        code, ladder = named_code(name, cfg["dim"])
        params = system_params(cfg)
        lam = params.lambda_coop if ladder is not None else 0.0
        ch = LossChannelSet.single_double(params.eta2)
        scan = bloch_scan(code, ch, ladder, lam, cfg["tau"], cfg["bloch"]["theta_points"], cfg["bloch"]["phi_points"], cfg["solver"], params)
        run.csv(f"bloch_{name}.csv", ["theta", "phi", "fidelity"], scan.rows())
        mf = mean_fidelity(code, ch, ladder, lam, cfg["tau"], cfg["solver"], params)
        out[name] = {
            "min": float(scan.values.min()),
            "max": float(scan.values.max()),
            "argmax_theta": float(scan.theta[np.unravel_index(np.argmax(scan.values), scan.values.shape)[0]]),
            "sphere_average": scan.sphere_average(),
            "six_state_mean": mf,
        }
        if name == "grl":
            run.expect("bloch_min_grl", out[name]["min"], out[name]["min"] >= EXPECTED["bloch_min"], f">= {EXPECTED['bloch_min']}")
    return {"tau": cfg["tau"], "codes": out}


def benchmark_workload(dim: int, points: int = 70, eta: float = 0.012, lambda_coop: float = 800.0):
    """GRL code embedded in ``dim`` levels, six cardinal states, a 70-point grid to 4.2."""
    code, ladder = named_code("grl", 8)
    code, ladder = code.padded(dim), ladder.padded(dim)
    taus = np.linspace(4.2 / points, 4.2, points)
    return cardinal_matrices(code), LossChannelSet.single_double(eta), ladder, lambda_coop, taus


def time_solvers(dim: int, points: int = 70, repeats: int = 3) -> dict:
    rhos, ch, ladder, lam, taus = benchmark_workload(dim, points)
    ta, td = [], []
    ra = rd = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        ra = AnalyticSolver(dim, ch, ladder, lam).evolve_many(rhos, taus)
        ta.append(time.perf_counter() - t0)
        t0 = time.perf_counter()
        rd = evolve_reduced_dense(rhos, ch, ladder, lam, taus)
        td.append(time.perf_counter() - t0)
    err = float(np.max(np.abs(ra - rd)))
    return {
        "dim": dim,
        "analytic_s": float(np.median(ta)),
        "dense_s": float(np.median(td)),
        "analytic_spread": float((max(ta) - min(ta)) / np.median(ta)),
        "dense_spread": float((max(td) - min(td)) / np.median(td)),
        "speedup": float(np.median(td) / np.median(ta)),
        "max_abs_difference": err,
    }


def cmd_benchmark(run: Run) -> dict:
    b = run.cfg["benchmark"]
    rows = [time_solvers(n, b["points"], b["repeats"]) for n in b["dims"]]
    cols = ["dim", "analytic_s", "dense_s", "speedup", "analytic_spread", "dense_spread", "max_abs_difference"]
    run.csv("benchmark.csv", cols, [[r[c] for c in cols] for r in rows])
    top = max(rows, key=lambda r: r["dim"])
    run.expect(f"speedup_N{top['dim']}", top["speedup"], top["speedup"] >= EXPECTED["speedup_min"], f">= {EXPECTED['speedup_min']}")
    return {"rows": rows}


def cmd_noise(run: Run) -> dict:
    cfg = run.cfg
    nz = cfg["noise"]
    code, ladder = named_code(cfg["code"], cfg["dim"])
    if ladder is None:
        raise ConfigurationError("noise experiments need a code with a recovery ladder")
    params = system_params(cfg)
    taus = tau_grid(cfg["tau_grid"])
    base = simulate_aqec_hybrid(code, ladder, params, taus)
    run.csv("noise_free.csv", ["tau", "mean_fidelity"], zip(taus, base))
    points = []
    if nz["kind"] == "phase":
        variants = [False, True] if nz["s_in_phase"] else [False]
        for s_in_phase in variants:
            for s in nz["s"]:
                for wc in nz["omega_c"]:
                    p = PhaseDampingParams(wc, s, s_in_phase=s_in_phase)
                    f = simulate_phase_damping(code, ladder, params, p, taus)
                    tag = f"phase_s{s:g}_wc{wc:g}" + ("_sarg" if s_in_phase else "")
                    run.csv(f"{tag}.csv", ["tau", "mean_fidelity", "noise_free"], zip(taus, f, base))
                    early = taus <= 0.5
                    points.append({
                        "s": s, "omega_c": wc, "s_in_phase": s_in_phase,
                        "max_early_dip": float(np.max(base[early] - f[early])) if early.any() else 0.0,
                        "long_horizon_loss_pct": float(100.0 * (base[-1] - f[-1]) / base[-1]),
                    })
        worst = max(p["long_horizon_loss_pct"] for p in points)
        run.expect("phase_long_loss", worst, worst <= EXPECTED["noise_long_loss_pct"], f"<= {EXPECTED['noise_long_loss_pct']}%")
        deepest = max(points, key=lambda p: p["max_early_dip"])
        return {"kind": "phase", "points": points, "worst_long_loss_pct": worst, "deepest_dip_omega_c": deepest["omega_c"]}
    scale = nz["gamma_a_hz"]
    free = breakeven_reference(taus)
    for case in nz["cases"]:
        for g0 in nz["gamma0"]:
            p = AmplitudeDampingParams(g0, case["width_hz"] / scale, case["detuning_hz"] / scale)
            f = simulate_amplitude_damping(code, ladder, params, p, taus)
            tag = f"amp_det{case['detuning_hz']:g}_w{case['width_hz']:g}_g{g0:g}"
            run.csv(f"{tag}.csv", ["tau", "mean_fidelity", "noise_free", "breakeven"], zip(taus, f, base, free))
            points.append({**case, "gamma0": g0, "final": float(f[-1]), "final_noise_free": float(base[-1])})
    return {"kind": "amplitude", "points": points}


def cmd_wigner(run: Run) -> dict:
    cfg = run.cfg
    w = cfg["wigner"]
    xs = np.linspace(-w["extent"], w["extent"], w["points"])
    tau = cfg["tau"]
    out = {}
    for name in dict.fromkeys([cfg["code"], "breakeven"]):
        code, ladder = named_code(name, cfg["dim"])
        params = system_params(cfg)
        lam = params.lambda_coop if ladder is not None else 0.0
        init = cardinal_states(code).stack()
        evolved = evolve_states(init, LossChannelSet.single_double(params.eta2), ladder, lam, [0.0, tau], cfg["solver"], params)
        integrals, direct, via_wigner = [], [], []
        for j, label in enumerate(CARDINAL_LABELS):
            grids = []
            for ti, t in enumerate((0.0, tau)):
                W = wigner(evolved[ti, j], xs, xs)
                grids.append(W)
                integrals.append(wigner_integral(W, xs, xs))
                if name == cfg["code"]:
                    X, P = np.meshgrid(xs, xs)
                    run.csv(f"wigner_{name}_{label}_t{ti}.csv", ["x", "p", "W"], zip(X.ravel(), P.ravel(), W.ravel()))
            direct.append(float(np.real(np.trace(init[j] @ evolved[1, j]))))
            via_wigner.append(wigner_overlap(grids[0], grids[1], xs, xs))
        out[name] = {
            "overlap_fidelity": float(np.mean(direct)),
            "wigner_fidelity": float(np.mean(via_wigner)),
            "max_integral_error": float(np.max(np.abs(np.array(integrals) - 1.0))),
        }
    tol = EXPECTED["wigner_integral_tol"]
    err = out[cfg["code"]]["max_integral_error"]
    run.expect("wigner_integral", err, err <= tol, f"<= {tol}")
    if cfg["code"] == "grl":
        t, d = EXPECTED["wigner_grl"]
        v = out["grl"]["overlap_fidelity"]
        run.expect("wigner_grl_fidelity", v, abs(v - t) <= d, f"{t} +/- {d}")
    t, d = EXPECTED["wigner_breakeven"]
    v = out["breakeven"]["overlap_fidelity"]
    run.expect("wigner_breakeven_fidelity", v, abs(v - t) <= d, f"{t} +/- {d}")
    return {"tau": tau, "codes": out}


def cmd_xi_scan(run: Run) -> dict:
    cfg = run.cfg
    code, _ = named_code("grl", cfg["dim"])
    params = system_params(cfg)
    taus = tau_grid(cfg["tau_grid"])
    ch = LossChannelSet.single_double(params.eta2)
    curves = {xi: mean_fidelity(code, ch, xi_family(xi, cfg["dim"]), params.lambda_coop, taus, cfg["solver"], params) for xi in cfg["xi_list"]}
    xis = list(curves)
    run.csv("xi_scan.csv", ["tau"] + [f"xi_{x:g}" for x in xis], zip(taus, *[curves[x] for x in xis]))
    dev = max(float(np.max(np.abs(curves[a] - curves[b]))) for a in xis for b in xis) if len(xis) > 1 else 0.0
    run.expect("xi_max_deviation", dev, dev < EXPECTED["xi_max_dev"], f"< {EXPECTED['xi_max_dev']}")
    return {"max_pairwise_deviation": dev, "lambda_coop": params.lambda_coop, "eta": params.eta2}


def cmd_kl(run: Run) -> dict:
    cfg = run.cfg
    out = {}
    for name in cfg["codes"]:
        code, ladder = named_code(name, cfg["dim"])
        report = kl_check(code)
        out[name] = {"kl": report.to_dict(), "analysis": hamiltonian_distances(code, ladder).to_dict()}
        if name == "grl":
            run.expect("grl_no_flip", len(report.flip_violations), not report.flip_violations, "no flip violations")
    (run.out / "kl.json").write_text(json.dumps(out, indent=2, default=_json_default))
    return {"codes": out}


def rwa_params(cfg: dict) -> tuple[RWAParams, float]:
    r = cfg["rwa"]
    rp = RWAParams.from_hz(r["gamma_a_hz"], r["gamma_a2_hz"], r["gamma_b_hz"], r["gamma_c_hz"], r["g0_hz"], r["g1_hz"])
    tau_final = 2.0 * math.pi * r["gamma_a_hz"] * r["t_final_ms"] * 1e-3
    return rp, tau_final


def cmd_rwa(run: Run) -> dict:
    cfg = run.cfg
    rp, tau_final = rwa_params(cfg)
    code, _ = named_code("grl", cfg["dim"])
    taus = np.linspace(0.0, tau_final, cfg["rwa"]["points"])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        f, g = simulate_rwa_three_mode(code, grl_drive_ladder(cfg["dim"]), rp, taus)
    scale_ms = 1e3 / (2.0 * math.pi * cfg["rwa"]["gamma_a_hz"])
    rows = [(t, t * scale_ms, fi, breakeven_reference(t), "" if math.isnan(gi) else gi) for t, fi, gi in zip(taus, f, g)]
    run.csv("rwa_gain.csv", ["tau", "t_ms", "mean_fidelity", "breakeven", "gain"], rows)
    g_end = float(g[-1])
    t, d = EXPECTED["rwa_gain"]
    run.expect("rwa_gain_final", g_end, abs(g_end - t) <= d, f"{t} +/- {d}")
    return {
        "tau_final": tau_final,
        "gain_final": g_end,
        "fidelity_final": float(f[-1]),
        "regime_warnings": [str(w.message) for w in caught],
        "params_gamma_a_units": asdict(rp),
    }


def cmd_train(run: Run) -> dict:
    from .rl.curriculum import TrainingConfig, run_curriculum

    tcfg = dict(run.cfg["training"])
    if run.cfg.get("_seed") is not None:
        tcfg["seed"] = run.cfg["_seed"]
    try:
        config = TrainingConfig.from_dict(tcfg)
    except TypeError as exc:
        raise ConfigurationError(f"bad training config: {exc}") from exc
    art = run_curriculum(config, run.out)
    best = art.best
    if best is not None:
        run.expect("best_epsilon_positive", best.epsilon, best.epsilon > 0, "> 0")
    rewards = art.mean_rewards()
    run.csv("episode_rewards.csv", ["episode", "phase", "total_reward"], [(i, e.phase, e.total_reward) for i, e in enumerate(art.episodes)])
    return {
        "episodes": len(art.episodes),
        "best": None if best is None else {"epsilon": best.epsilon, "action": best.action, "phase": best.phase},
        "mean_reward_last_100": float(np.mean(rewards[-100:])) if rewards else None,
        "training_config_hash": config.config_hash(),
    }


COMMANDS = {
    "evaluate": cmd_evaluate,
    "scan-bloch": cmd_scan_bloch,
    "benchmark": cmd_benchmark,
    "noise": cmd_noise,
    "wigner": cmd_wigner,
    "train": cmd_train,
    "xi-scan": cmd_xi_scan,
    "kl": cmd_kl,
    "rwa": cmd_rwa,
}

HELP = {
    "evaluate": "mean-fidelity curves of the benchmark codes with and without double-photon loss",
    "scan-bloch": "fidelity over the logical Bloch sphere at one tau",
    "benchmark": "analytic solver against RK45 on the reduced master equation",
    "noise": "non-Markovian phase or amplitude damping of the ancilla",
    "wigner": "Wigner grids of the six cardinal states at tau = 0 and tau",
    "train": "two-phase curriculum PPO training",
    "xi-scan": "robustness of GRL to the relative ladder weight xi",
    "kl": "Knill-Laflamme report and Hamiltonian distances",
    "rwa": "three-mode rotating-wave model and its gain over breakeven",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aqec", description="Autonomous bosonic QEC experiments.")
    parser.add_argument("--version", action="version", version=f"aqec {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--out", help="output directory (default ./aqec-out/<command>)")
    common.add_argument("--seed", type=int, default=None, help="random seed (training)")
    common.add_argument("--solver", choices=["analytic", "dense"], default=None)
    common.add_argument("--check", action="store_true", help="compare against embedded expected values; exit 4 on a miss")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=HELP[name])
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, {"solver": args.solver}, args.command)
    except (jsonschema.ValidationError, ConfigurationError) as exc:
        print(f"config error: {getattr(exc, 'message', exc)}", file=sys.stderr)
        return EXIT_CONFIG
    cfg["experiment"] = args.command
    out = Path(args.out or Path("aqec-out") / args.command)
    run = Run(args.command, cfg, out, args.check)
    run.cfg = dict(cfg, _seed=args.seed)
    try:
        data = COMMANDS[args.command](run)
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (StiffnessError, SingularityError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except AQECError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    run.cfg = cfg
    run.summary(data)
    for c in run.checks:
        print(f"{'PASS' if c['passed'] else 'FAIL'} {c['name']}: {c['value']:.6g} (target {c['target']})")
    print(f"wrote {out}")
    if args.check and not all(c["passed"] for c in run.checks):
        return EXIT_CHECK
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
