"""Experiment orchestration: noise sweeps, modulation studies, parameter
tuning, and file outputs.

Subcommands: simulate (one gate, one noise point), sweep, modulate, tune,
ou-stats, check-effective, plot.  Exit codes: 0 success, 2 configuration
error, 3 numerical-convergence failure.

Noise trajectories for gate g (index in the config's gate list) and
trajectory j use stream ``g * 1_000_000 + j`` of the base seed; sweep
points reuse the same streams (common random numbers), which makes the
fidelity-versus-noise curves smooth in the Monte-Carlo sense and the CSV
deterministic for a given config.  Thread count is taken from
DFSIM_NUM_THREADS (no other environment input).
"""

from __future__ import annotations

import argparse
import csv
import sys
from typing import Dict, List, Optional

import numpy as np

from . import __version__
from .atoms import BlockadeModulation, DecayConfig
from .config import (
    ConfigError,
    ExperimentConfig,
    PRESETS,
    build_recipe,
    load_config,
    preset_config,
    recipes_from_json,
    recipes_to_json,
)
from .effective import (
    NoSolutionError,
    effective_params,
    solve_phase_gate,
)
from .engine import StateSet, average_superoperator, min_fidelity
from .gates import REFERENCE, GateRecipe, recipe_Uphase
from .noise import OUConfig, path_stats, sample_path
from .plotting import PlotSpec, emit_plot
from .rng import Rng

GATE_STREAM_BLOCK = 1_000_000

SWEEP_COLUMNS = ("gate", "tau_c_over_2", "sigma_over_2pi_khz", "f_min",
                 "argmin_state_id", "stderr", "mean_trace_loss", "n_traj",
                 "seed", "dt", "provenance", "duration_s")


def _noise_config(cfg: ExperimentConfig, tau_c_over_2: float,
                  stream: Rng) -> OUConfig:
    c = 2.0 * tau_c_over_2 / cfg.tau_ou
    return OUConfig(tau=cfg.tau_ou, c=c, dt=cfg.step, steps=0, rng=stream,
                    alpha_e=cfg.alpha_e, alpha_r=cfg.alpha_r)


def _state_set(cfg: ExperimentConfig, recipe: GateRecipe) -> Optional[StateSet]:
    if cfg.state_set == "default":
        return None
    raise ConfigError(f"state_set: unknown set {cfg.state_set!r}")


def _measure(recipe: GateRecipe, cfg: ExperimentConfig, tau_c_over_2: float,
             gate_index: int):
    noise = _noise_config(cfg, tau_c_over_2,
                          Rng(cfg.seed, gate_index * GATE_STREAM_BLOCK))
    decay = DecayConfig(cfg.gamma_e, cfg.gamma_r)
    avg = average_superoperator(recipe.schedule, noise, decay, cfg.n_traj)
    return avg, min_fidelity(avg, recipe.ideal_target, _state_set(cfg, recipe))


def _row(gate: str, recipe: GateRecipe, cfg: ExperimentConfig,
         tau_c_over_2: float, avg, result) -> Dict[str, str]:
    sigma_khz = float(np.sqrt(tau_c_over_2) / (2.0 * np.pi) / 1e3)
    vals = (gate, tau_c_over_2, sigma_khz, result.f_min, result.state_id,
            result.stderr, avg.trace_loss_mean, cfg.n_traj, cfg.seed,
            cfg.step, recipe.provenance, recipe.duration)
    return {k: (v if isinstance(v, str) else repr(float(v))
                if isinstance(v, (float, np.floating)) else repr(v))
            for k, v in zip(SWEEP_COLUMNS, vals)}


def _load_stored(cfg: ExperimentConfig) -> Optional[Dict]:
    if cfg.recipe_source != "file":
        return None
    with open(cfg.recipe_file) as fh:
        return recipes_from_json(fh.read())


def run_sweep(cfg: ExperimentConfig, out_csv: str,
              progress: bool = False) -> List[Dict[str, str]]:
    """Worst-case fidelity of each configured gate at each noise level."""
    stored = _load_stored(cfg)
    rows = []
    for g_idx, gate in enumerate(cfg.gates):
        recipe = build_recipe(gate, cfg, stored)
        for tau_c in cfg.sweep_tau_c_over_2:
            avg, result = _measure(recipe, cfg, tau_c, g_idx)
            rows.append(_row(gate, recipe, cfg, tau_c, avg, result))
            if progress:
                print(f"  {gate}: tau_c/2={tau_c:.3e}  "
                      f"F_min={result.f_min:.6f}", file=sys.stderr)
    _write_csv(out_csv, SWEEP_COLUMNS, rows)
    return rows


MODULATION_COLUMNS = ("gate", "depth", "frequency_hz", "tau_c_over_2",
                      "f_min", "argmin_state_id", "stderr",
                      "mean_trace_loss", "n_traj", "seed", "dt",
                      "provenance", "duration_s")


def run_modulation(cfg: ExperimentConfig, depths, out_csv: str,
                   gate: str = "Uphase") -> List[Dict[str, str]]:
    """Fidelity versus blockade-modulation depth at fixed noise.

    The modulation frequency must be configured; the harmonic variation
    has no default frequency.
    """
    if cfg.modulation_frequency is None:
        raise ConfigError(
            "modulation.frequency_hz: required for the modulation study")
    if gate != "Uphase":
        raise ConfigError("modulate: only the conditional phase gate is swept")
    tau_c = cfg.sweep_tau_c_over_2[0]
    stored = _load_stored(cfg)
    base = build_recipe(gate, cfg, stored)
    p = base.schedule.segments[0].pulse
    from .atoms import RydbergPulse
    rows = []
    for depth in depths:
        mod = None if depth == 0.0 else BlockadeModulation(
            float(depth), cfg.modulation_frequency, cfg.modulation_phase)
        pulse = RydbergPulse(atoms=p.atoms, rabi_0=p.rabi_0, rabi_1=p.rabi_1,
                             detuning=p.detuning,
                             detuning_raman=p.detuning_raman,
                             blockade=p.blockade, duration=p.duration,
                             modulation=mod)
        recipe = recipe_Uphase(pulse=pulse)
        avg, result = _measure(recipe, cfg, tau_c, 0)
        row = _row(gate, recipe, cfg, tau_c, avg, result)
        row = {"gate": row["gate"], "depth": repr(float(depth)),
               "frequency_hz": repr(float(cfg.modulation_frequency)),
               **{k: row[k] for k in SWEEP_COLUMNS if k not in
                  ("gate", "sigma_over_2pi_khz")}}
        rows.append(row)
    _write_csv(out_csv, MODULATION_COLUMNS, rows)
    return rows


def _write_csv(path: str, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(columns))
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def _config_from_args(args) -> ExperimentConfig:
    if args.config:
        return load_config(args.config)
    return preset_config(args.preset)


def _cmd_simulate(args) -> int:
    cfg = _config_from_args(args)
    gates = [args.gate] if args.gate else list(cfg.gates)
    tau_c = args.tau_c_over_2 if args.tau_c_over_2 is not None \
        else cfg.sweep_tau_c_over_2[0]
    stored = _load_stored(cfg)
    rows = []
    for g_idx, gate in enumerate(gates):
        recipe = build_recipe(gate, cfg, stored)
        avg, result = _measure(recipe, cfg, tau_c, g_idx)
        rows.append(_row(gate, recipe, cfg, tau_c, avg, result))
        print(f"{gate}: F_min = {result.f_min!r} at state "
              f"{result.state_id} (stderr {result.stderr:.2e}, "
              f"trace loss {avg.trace_loss_mean:.2e})")
    if args.output:
        _write_csv(args.output, SWEEP_COLUMNS, rows)
    return 0


def _cmd_sweep(args) -> int:
    cfg = _config_from_args(args)
    run_sweep(cfg, args.output, progress=args.progress)
    print(f"wrote {args.output}")
    return 0


def _cmd_modulate(args) -> int:
    cfg = _config_from_args(args)
    depths = [float(x) for x in args.depths.split(",")]
    run_modulation(cfg, depths, args.output)
    print(f"wrote {args.output}")
    return 0


def _cmd_tune(args) -> int:
    from . import optimizer

    h = optimizer.refined_recipe_H()
    uphase = optimizer.refined_recipe_Uphase()
    cnot = optimizer.refined_recipe_CNOT(h=h, uphase=uphase)
    recipes = {"H": h, "Uphase": uphase, "CNOT": cnot}
    for name, recipe in recipes.items():
        print(f"{name}: ideal infidelity {recipe.ideal_infidelity():.3e}, "
              f"duration {recipe.duration * 1e6:.2f} us")
    with open(args.output, "w") as fh:
        fh.write(recipes_to_json(recipes))
    print(f"wrote {args.output}")
    return 0


def _cmd_ou_stats(args) -> int:
    cfg = _config_from_args(args)
    tau_c = cfg.sweep_tau_c_over_2[0]
    noise = _noise_config(cfg, tau_c, Rng(cfg.seed, 0))
    ou = OUConfig(tau=noise.tau, c=noise.c, dt=noise.dt, steps=args.steps,
                  rng=noise.rng, alpha_e=noise.alpha_e, alpha_r=noise.alpha_r)
    path = sample_path(ou)
    var, tcorr = path_stats(path)
    print(f"samples:            {args.steps + 1}")
    print(f"target variance:    {ou.variance!r} (rad/s)^2")
    print(f"sample variance:    {var!r} (rad/s)^2  "
          f"({var / ou.variance - 1.0:+.2%})")
    print(f"target corr. time:  {ou.tau!r} s")
    print(f"fitted corr. time:  {tcorr!r} s  ({tcorr / ou.tau - 1.0:+.2%})")
    if args.output:
        path.to_csv(args.output)
        print(f"wrote {args.output}")
    return 0


def _cmd_check_effective(args) -> int:
    ref = REFERENCE
    rows = [
        ("R", ref.r_rabi_0, ref.r_rabi_1, ref.r_detuning,
         ref.r_detuning_raman),
        ("Uphase", ref.uphase_rabi_0, ref.uphase_rabi_1,
         ref.uphase_detuning, ref.uphase_detuning_raman),
    ]
    twopi_mhz = 2.0 * np.pi * 1e6
    print("gate    Omega_R/2pi[Hz]  Delta_0/2pi[MHz]  Delta_00/2pi[MHz]  "
          "Delta_11/2pi[MHz]  t(pi/4)[us]  4pi/|Omega_R|[us]")
    for name, o0, o1, d, dp in rows:
        ep = effective_params(o0, o1, d, dp, ref.blockade)
        t_quarter = 0.5 * np.pi / abs(ep.omega_r) * 1e6
        t_full = 4.0 * np.pi / abs(ep.omega_r) * 1e6
        print(f"{name:7s} {ep.omega_r / (2 * np.pi):15.4f}  "
              f"{ep.delta_0 / twopi_mhz:16.6f}  "
              f"{ep.delta_00 / twopi_mhz:17.6f}  "
              f"{ep.delta_11 / twopi_mhz:17.6f}  "
              f"{t_quarter:11.3f}  {t_full:17.3f}")
    if args.solve:
        sol = solve_phase_gate(ref.blockade, ref.uphase_pulse(atoms=(0, 2)))
        print(f"\nconditional-phase solution: k={sol.k} l={sol.l} "
              f"residual={sol.residual:.2e} tau={sol.duration * 1e6:.2f} us")
    return 0


def _cmd_plot(args) -> int:
    spec = PlotSpec(title=args.title, log_x=not args.linear_x)
    emit_plot(args.csv, args.output, spec)
    print(f"wrote {args.output}")
    return 0


def _add_config_args(p) -> None:
    p.add_argument("--config", help="JSON experiment config")
    p.add_argument("--preset", default="fig-protected",
                   choices=sorted(PRESETS), help="named preset config")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="dfsim",
        description="Protected-gate simulator for a neutral-atom "
                    "decoherence-free subspace")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="one gate at one noise point")
    _add_config_args(p)
    p.add_argument("--gate", help="gate name (default: all in config)")
    p.add_argument("--tau-c-over-2", type=float, dest="tau_c_over_2",
                   help="noise variance (rad/s)^2")
    p.add_argument("--output", help="optional CSV path")
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("sweep", help="fidelity vs noise variance, to CSV")
    _add_config_args(p)
    p.add_argument("--output", default="sweep.csv")
    p.add_argument("--progress", action="store_true")
    p.set_defaults(fn=_cmd_sweep)

    p = sub.add_parser("modulate",
                       help="fidelity vs blockade-modulation depth")
    _add_config_args(p)
    p.add_argument("--depths", default="0,0.2",
                   help="comma-separated modulation depths")
    p.add_argument("--output", default="modulation.csv")
    p.set_defaults(fn=_cmd_modulate)

    p = sub.add_parser("tune", help="refine pulse parameters, write recipes")
    p.add_argument("--output", default="recipes.json")
    p.set_defaults(fn=_cmd_tune)

    p = sub.add_parser("ou-stats", help="noise-path statistics vs theory")
    _add_config_args(p)
    p.add_argument("--steps", type=int, default=1_000_000)
    p.add_argument("--output", help="optional CSV path for the path itself")
    p.set_defaults(fn=_cmd_ou_stats)

    p = sub.add_parser("check-effective",
                       help="effective-theory table at the reference point")
    p.add_argument("--solve", action="store_true",
                   help="also run the conditional-phase condition solver")
    p.set_defaults(fn=_cmd_check_effective)

    p = sub.add_parser("plot", help="render a sweep CSV as SVG")
    p.add_argument("csv")
    p.add_argument("--output", default="sweep.svg")
    p.add_argument("--title", default="worst-case gate fidelity")
    p.add_argument("--linear-x", action="store_true")
    p.set_defaults(fn=_cmd_plot)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (NoSolutionError, RuntimeError) as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
