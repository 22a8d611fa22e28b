"""
Experiment runner.

    python -m opuc.runner <subcommand> --config PATH [--out DIR] [--seed U64] [--threads N]

Each subcommand is a handler in SUBCOMMAND_REGISTRY. The config file is
validated by the subcommand's schema, the handler writes its CSV/JSON
artifacts atomically under --out, and the process exits with

    0  success
    1  validation error (bad config, unknown subcommand, unmet precondition)
    2  numerical guard (aliasing, conditioning, resolution, resources, ...)

On failure error.json describes the error.
"""

import argparse
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from config.logging_config import get_log_file_path, setup_logging
from config.settings import settings
from opuc import __version__
from opuc.bernstein_szego import bs_density, lemma_sweep
from opuc.config_file import get_config_validator, read_config
from opuc.error_classifier import ErrorClassifier
from opuc.errors import PreconditionError, UnknownSubcommandError
from opuc.generators import (
    coulomb_family,
    constant_family,
    ell1_fractional_check,
    estimate_log_constant,
    geometric_family,
    random_disk_family,
    read_sequence,
    wigner_von_neumann_family,
    write_sequence,
)
from opuc.models import TWO_PI, ErrorDetail, VerblunskySequence, measure_moments
from opuc.output import config_hash, write_csv, write_json
from opuc.pruefer import pruefer_evolve_grid, radius_boundedness
from opuc.resonance import (
    abel_log_bound,
    default_xi_grid,
    kmax_check,
    phase_difference_function,
    resonant_angles,
)
from opuc.resource_manager import ResourceManager, get_resource_manager
from opuc.schemas import RunConfigBase
from opuc.singular_scan import (
    atom_candidates,
    detect_atoms,
    dyadic_stopping_times,
    eps0_admissibility,
    epsilon_energy,
    local_scaling_exponent,
    pure_point_budget,
    salem_zygmund_test,
    singular_interval_scan,
    tail_energy_test,
)
from opuc.szego import verblunsky_from_measure

logger = logging.getLogger(__name__)


@dataclass
class RunContext:
    """What a handler needs: its validated config and where to write."""

    subcommand: str
    config: RunConfigBase
    out_dir: Path
    resource_manager: ResourceManager
    metadata: dict
    written: list[Path] = field(default_factory=list)

    def write_csv(self, name: str, header, rows) -> Path:
        path = write_csv(self.out_dir / name, header, rows, self.metadata)
        self.written.append(path)
        return path

    def write_json(self, name: str, payload: dict) -> Path:
        path = write_json(self.out_dir / name, payload, self.metadata)
        self.written.append(path)
        return path


def build_sequence(config: RunConfigBase) -> VerblunskySequence:
    """Verblunsky family named by the config."""
    n = config.length
    family = config.family
    if family == "zero":
        return VerblunskySequence(np.zeros(n, dtype=np.complex128), generator_tag="zero")
    if family == "coulomb":
        return coulomb_family(config.c, n, config.phase_rule, config.omega, config.seed)
    if family == "geometric":
        return geometric_family(complex(config.a_re, config.a_im), n)
    if family == "constant":
        return constant_family(complex(config.a_re, config.a_im), n)
    if family == "random_disk":
        return random_disk_family(config.radius, n, config.seed)
    if family == "wvn":
        return wigner_von_neumann_family(config.c, config.omega, n)
    return read_sequence(config.sequence_file)


# === Handlers ===

def run_generate(ctx: RunContext) -> None:
    alpha = build_sequence(ctx.config)
    ctx.written.append(write_sequence(ctx.out_dir / "sequence.txt", alpha))
    payload = {"generator_tag": alpha.generator_tag, "length": alpha.length}
    if alpha.length >= 10:
        A_est, profile = estimate_log_constant(alpha)
        payload["A_est"] = A_est
        payload["profile"] = [{"N": int(N), "ratio": float(r)} for N, r in profile]
    payload["ell1"] = ell1_fractional_check(alpha, ctx.config.ell1_eps).to_dict()
    ctx.write_json("generate.json", payload)


def run_evolve(ctx: RunContext) -> None:
    cfg = ctx.config
    alpha = build_sequence(cfg)
    etas = TWO_PI * np.arange(cfg.eta_grid_size) / cfg.eta_grid_size
    state = pruefer_evolve_grid(alpha, etas, cfg.beta, cfg.n, ctx.resource_manager)
    rows = zip(
        state.etas, state.radii_log, state.phases, state.accumulator.real, state.accumulator.imag,
        state.sup_radii_log, state.sup_fs_gap,
    )
    ctx.write_csv(
        "evolve.csv",
        ["eta", "log_R", "theta", "re_A", "im_A", "sup_log_R", "sup_fs_gap"],
        [list(r) for r in rows],
    )
    if cfg.boundedness_eta is not None:
        records = radius_boundedness(alpha, cfg.boundedness_eta, cfg.n, cfg.beta_count, ctx.resource_manager)
        header = ["beta", "sup_log_radius", "final_log_radius", "sup_fs_gap"]
        ctx.write_csv("radius_boundedness.csv", header, [[r.to_dict()[h] for h in header] for r in records])


def run_bs_density(ctx: RunContext) -> None:
    cfg = ctx.config
    measure = bs_density(build_sequence(cfg), cfg.n, cfg.grid_size, resource_manager=ctx.resource_manager)
    logger.info(f"[bs-density] level {cfg.n} on {measure.grid_size} points, mass {measure.total_mass:.12f}")
    ctx.write_csv("bs_density.csv", ["eta", "density"], [[e, d] for e, d in zip(measure.grid, measure.density)])


def run_moments(ctx: RunContext) -> None:
    cfg = ctx.config
    measure = bs_density(build_sequence(cfg), cfg.n, cfg.grid_size, resource_manager=ctx.resource_manager)
    order = cfg.n if cfg.order is None else cfg.order
    moments = measure_moments(measure, order)
    ctx.write_csv("moments.csv", ["k", "re", "im"], [[k, c.real, c.imag] for k, c in enumerate(moments)])


def run_compare_intervals(ctx: RunContext) -> None:
    cfg = ctx.config
    alpha = build_sequence(cfg)
    kappa = settings.bernstein_szego.LEMMA_KAPPA if cfg.kappa is None else cfg.kappa
    floor = cfg.n ** (-1.0 / (2.0 + kappa))
    deltas = np.geomspace(floor, 0.5, cfg.delta_count) if floor < 0.5 else np.array([floor])
    centers = TWO_PI * np.arange(cfg.center_count) / cfg.center_count
    sweep = lemma_sweep(alpha, cfg.n, kappa, deltas, centers, resource_manager=ctx.resource_manager)
    records = [r.to_dict() for r in sweep.records]
    header = ["center", "delta", "mu_I", "nu_3I", "delta_kappa", "C_impl", "moment_mismatch", "moment_warning"]
    ctx.write_csv("compare_intervals.csv", header, [[r[h] for h in header] for r in records])
    ctx.write_json("lemma_sweep.json", {
        "n": sweep.n,
        "kappa": sweep.kappa,
        "deltas": sweep.deltas,
        "per_delta_constants": sweep.per_delta_constants,
        "fitted_constant": sweep.fitted_constant,
        "stability_ratio": sweep.stability_ratio,
        "max_moment_mismatch": sweep.max_moment_mismatch,
    })


def run_resonances(ctx: RunContext) -> None:
    cfg = ctx.config
    angles = resonant_angles(build_sequence(cfg), cfg.n, cfg.eta_grid_size, ctx.resource_manager)
    ctx.write_json("resonances.json", {
        "n": cfg.n,
        "threshold": float(np.log(cfg.n) / settings.resonance.RESONANCE_DIVISOR),
        "count": len(angles),
        "angles": [a.to_dict() for a in angles],
    })


def run_kmax_check(ctx: RunContext) -> None:
    cfg = ctx.config
    report = kmax_check(build_sequence(cfg), cfg.n, cfg.eta_grid_size, ctx.resource_manager)
    ctx.write_json("kmax_check.json", report.to_dict())


def run_abel_bound(ctx: RunContext) -> None:
    cfg = ctx.config
    xi_grid = default_xi_grid(cfg.n_max)
    if cfg.g_source == "zero":
        g, g_of_xi = np.zeros(cfg.n_max), None
    else:
        # g is recomputed for every xi' of the fit
        g_of_xi = phase_difference_function(build_sequence(cfg), cfg.eta_k, cfg.n_max, [cfg.xi] + xi_grid)
        g = g_of_xi(cfg.xi)
    bound = abel_log_bound(cfg.xi, g, cfg.n_max, xi_grid, g_of_xi)
    payload = bound.to_dict()
    payload["xi_grid"] = bound.xi_grid
    payload["sup_grid"] = bound.sup_grid
    ctx.write_json("abel_bound.json", payload)


def run_energy(ctx: RunContext) -> None:
    cfg = ctx.config
    alpha = build_sequence(cfg)
    measure = bs_density(alpha, cfg.n, cfg.grid_size, resource_manager=ctx.resource_manager)
    payload = {"n": cfg.n, "eps": cfg.eps, "energy": epsilon_energy(measure, cfg.eps)}
    if cfg.stopping != "none":
        stops = cfg.stop_n if cfg.stopping == "constant" else dyadic_stopping_times(alpha, measure, cfg.stop_n)
        payload["salem_zygmund"] = salem_zygmund_test(alpha, measure, cfg.eps, stops).to_dict()
        payload["stopping"] = cfg.stopping
        if cfg.stopping == "dyadic":
            payload["tail_energy"] = tail_energy_test(alpha, measure, cfg.eps, cfg.stop_n).to_dict()
    ctx.write_json("energy.json", payload)


def run_scan(ctx: RunContext) -> None:
    cfg = ctx.config
    report = singular_interval_scan(build_sequence(cfg), cfg.eps0, cfg.m_max, cfg.k_max, ctx.resource_manager)
    payload = report.model_dump()
    payload["eps0_admissibility"] = eps0_admissibility(cfg.delta, report.K_max, cfg.eps0, report.n0).to_dict()
    ctx.write_json("scan.json", payload)


def run_decompose(ctx: RunContext) -> None:
    cfg = ctx.config
    alpha = build_sequence(cfg)
    measure = bs_density(alpha, min(cfg.n, alpha.length), resource_manager=ctx.resource_manager)
    candidates = cfg.candidate_angles() or atom_candidates(measure, cfg.n, cfg.candidate_count)
    atoms = detect_atoms(alpha, cfg.n, candidates)
    deltas = np.geomspace(0.5, min(0.25, TWO_PI / cfg.n), cfg.delta_count) if cfg.delta_count > 1 else np.array([0.5])

    rows = []
    for atom in atoms:
        for delta, ratio in zip(deltas, local_scaling_exponent(measure, atom.angle, deltas)):
            rows.append([atom.angle, delta, ratio])
    ctx.write_csv("scaling.csv", ["eta", "delta", "ratio"], rows)

    payload = {"n": cfg.n, "atoms": [a.to_dict() for a in atoms]}
    if alpha.length >= 10:
        payload["pure_point_budget"] = pure_point_budget(alpha, atoms).to_dict()
    ctx.write_json("decompose.json", payload)


def run_roundtrip(ctx: RunContext) -> None:
    cfg = ctx.config
    alpha = build_sequence(cfg)
    if alpha.length < cfg.n:
        raise PreconditionError(f"roundtrip needs n={cfg.n} coefficients, have {alpha.length}")
    # one doubling past the mass check squares the aliasing left in the moments
    measure = bs_density(alpha, cfg.n, cfg.grid_size, extra_doublings=1, resource_manager=ctx.resource_manager)
    recovered = verblunsky_from_measure(measure, cfg.n)
    errors = np.abs(recovered.values - alpha.values[: cfg.n])
    ctx.write_json("roundtrip.json", {
        "n": cfg.n,
        "grid_size": cfg.grid_size,
        "resolved_grid_size": measure.grid_size,
        "mass": measure.total_mass,
        "max_error": float(np.max(errors)),
        "errors": errors,
    })


SUBCOMMAND_REGISTRY: dict[str, Callable[[RunContext], None]] = {
    "generate": run_generate,
    "evolve": run_evolve,
    "bs-density": run_bs_density,
    "moments": run_moments,
    "compare-intervals": run_compare_intervals,
    "resonances": run_resonances,
    "kmax-check": run_kmax_check,
    "abel-bound": run_abel_bound,
    "energy": run_energy,
    "scan": run_scan,
    "decompose": run_decompose,
    "roundtrip": run_roundtrip,
}


def get_handler(subcommand: str) -> Callable[[RunContext], None]:
    """Handler of a subcommand."""
    try:
        return SUBCOMMAND_REGISTRY[subcommand]
    except KeyError:
        raise UnknownSubcommandError(
            f"unknown subcommand {subcommand!r}; available: {', '.join(list_subcommands())}"
        ) from None


def list_subcommands() -> list[str]:
    return list(SUBCOMMAND_REGISTRY.keys())


def run(
    subcommand: str,
    config_path,
    out_dir=None,
    seed: Optional[int] = None,
    threads: Optional[int] = None,
) -> int:
    """
    Run one subcommand end to end.

    Returns:
        Process exit code
    """
    out = Path(out_dir or settings.runner.OPUC_OUTPUT_DIR)
    classifier = ErrorClassifier()
    started = time.monotonic()
    try:
        handler = get_handler(subcommand)
        text, values = read_config(config_path)
        config = get_config_validator().validate(subcommand, values, overrides={"seed": seed})
        ctx = RunContext(
            subcommand=subcommand,
            config=config,
            out_dir=out,
            resource_manager=get_resource_manager(threads),
            metadata={"config_sha256": config_hash(text), "version": __version__},
        )
        logger.info(f"[{subcommand}] config={config_path} out={out} threads={ctx.resource_manager.max_workers}")
        logger.info(f"[{subcommand}] system: {ctx.resource_manager.get_system_stats()}")
        handler(ctx)
    except Exception as e:
        error_type = classifier.classify(e)
        error_code = classifier.get_error_code(e)
        code = classifier.EXIT_CODES[error_type]
        logger.error(f"[{subcommand}] {error_type.value}/{error_code}: {e}")
        detail = ErrorDetail.from_exception(
            e, error_type, error_code, subcommand=subcommand, include_stack_trace=settings.general.DEBUG
        )
        try:
            write_json(out / "error.json", detail.to_dict(), {"version": __version__})
        except OSError as write_error:
            logger.error(f"could not write error.json: {write_error}")
        return code

    logger.info(
        f"[{subcommand}] done in {time.monotonic() - started:.2f}s: "
        f"{', '.join(p.name for p in ctx.written)}"
    )
    return 0


# === Entry point ===

def main(argv: Optional[list[str]] = None) -> int:
    """Entry point of the runner."""
    parser = argparse.ArgumentParser(
        prog="opuc",
        description="Experiment runner for Verblunsky sequences with Coulomb-type decay",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Subcommands:
  {subcommands}

Examples:
  python -m opuc.runner bs-density --config runs/zero.cfg --out outputs/zero
  python -m opuc.runner resonances --config runs/coulomb.cfg --threads 4
  python -m opuc.runner roundtrip --config runs/roundtrip.cfg --seed 7
        """.format(subcommands=", ".join(list_subcommands())),
    )
    parser.add_argument("subcommand", help="Subcommand to run")
    parser.add_argument("--config", required=True, help="Path of the key = value config file")
    parser.add_argument("--out", default=None, help=f"Output directory (default: {settings.runner.OPUC_OUTPUT_DIR})")
    parser.add_argument("--seed", type=int, default=None, help="Seed; overrides the config's seed")
    parser.add_argument(
        "--threads",
        type=int,
        default=None,
        help="Worker threads, 0 = all CPUs (default: OPUC_THREADS)"
    )
    args = parser.parse_args(argv)

    setup_logging("runner")
    logger.info(f"runner log: {get_log_file_path('runner')}")
    return run(args.subcommand, args.config, args.out, args.seed, args.threads)


if __name__ == "__main__":
    sys.exit(main())
