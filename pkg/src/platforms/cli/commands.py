from __future__ import annotations

import argparse
import asyncio
import logging
import re
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Sequence

from src.config.presets import DEFAULT_BATTERY_WH, DEFAULT_BLOCKLENGTH, EBCH128_CODES, URLLC_CONSTRAINTS
from src.config.settings import Settings
from src.db.connection import Database
from src.db.migrations import run_migrations
from src.db.repo.cep_repo import CepRunsRepository
from src.db.repo.gap_repo import GapPointsRepository
from src.domain.errors import (
    FitError,
    InfeasibleError,
    NotFoundError,
    StoreError,
    ToolkitError,
    ValidationError,
)
from src.domain.models import (
    BatteryState,
    CepEstimate,
    CodeSpec,
    DecoderConfig,
    GapPoint,
    Policy,
    QuadratureSpec,
    ScalarizationSpec,
)
from src.link.codec import bch_code, format_code, read_code
from src.link.fb_bounds import bounds_table, max_rate_curve_db
from src.link.gf2 import MAX_ENUM_K, min_distance
from src.link.os_decoder import cep_curve, complexity_per_info_bit, estimate_cep
from src.platforms.cli.config_file import KNOWN_KEYS, ExperimentConfig, parse_theta
from src.platforms.cli.csv_out import CsvReport, read_points_csv
from src.services.battery_sim import CASE_STUDY_SPEC, codeword_log, compare_policies, run_simulation
from src.services.moop import (
    DEFAULT_GRID_STEP_DB,
    boundary_shift_with_processor,
    classify_regime,
    pareto_boundary,
    reference_pair,
    select_index,
)
from src.services.tradeoff import (
    GapCampaign,
    GapSearch,
    constrained_rate_curve,
    fit_model,
    format_model,
    penalty_at_rate,
)
from src.utils.grids import parse_grid
from src.utils.units import db_to_linear

logger = logging.getLogger(__name__)

PROG = "urllc-toolkit"

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_IO = 4

# per-codeword battery logs beyond this are refused; `--log run` has no limit
MAX_CODEWORD_ROWS = 1_000_000

# `--snr-db -2:0.1:8` would otherwise be read as an unknown option
_NEGATIVE_VALUE = re.compile(r"^-\.?\d")

_POLICY_BY_THETA: dict[str, Policy] = {
    "1": "theta1",
    "1.0": "theta1",
    "theta1": "theta1",
    "inf": "thetainf",
    "thetainf": "thetainf",
    "fixed0": "fixed0",
    "fixed1": "fixed1",
}


class _Parser(argparse.ArgumentParser):
    """argparse that raises instead of exiting, so dispatch owns the exit code."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        raise ValidationError(message)


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, (ValidationError, FitError)):
        return EXIT_USAGE
    if isinstance(exc, (InfeasibleError, NotFoundError)):
        return EXIT_INFEASIBLE
    if isinstance(exc, (StoreError, OSError)):
        return EXIT_IO
    return EXIT_FAILURE


def join_negative_values(argv: Sequence[str]) -> list[str]:
    out: list[str] = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok.startswith("--") and "=" not in tok and i + 1 < len(argv) and _NEGATIVE_VALUE.match(argv[i + 1]):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


# =====================
# PARSER
# =====================

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value experiment file")
    p.add_argument("--out", help="output file (default: stdout)")


def _add_link_level(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", dest="n", type=int, help="blocklength in channel uses")
    p.add_argument("--eps", dest="eps_m", type=float, help="target codeword error probability")


def _add_constraints(p: argparse.ArgumentParser) -> None:
    _add_link_level(p)
    p.add_argument("--L-m", dest="L_m", type=float, help="latency deadline (s)")
    p.add_argument("--T-s", dest="T_s", type=float, help="symbol time (s)")
    p.add_argument("--T-b", dest="T_b", type=float, help="time per binary operation (s)")
    p.add_argument("--r-m", dest="r_m", type=float, help="minimum rate (bits/use)")
    p.add_argument("--rho-m-db", dest="rho_m_db", type=float, help="SNR budget (dB)")
    p.add_argument("--model", dest="model", help="model preset name or model file")
    p.add_argument("--a", dest="a", type=float)
    p.add_argument("--b", dest="b", type=float)


def _add_decoder(p: argparse.ArgumentParser) -> None:
    p.add_argument("--code", dest="code", help="code file (n k header + hex rows)")
    p.add_argument("--q", type=int, default=8, help="quantisation bits in the complexity formula")
    p.add_argument("--trials", type=int, default=10_000, help="maximum Monte Carlo trials per point")
    p.add_argument("--target-errors", type=int, default=100, help="stop once this many errors are seen (0: never)")
    p.add_argument("--seed", dest="seed", type=int)
    p.add_argument("--threads", dest="threads", type=int)
    p.add_argument("--db", help="results store (default: URLLC_RESULTS_DB)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog=PROG, description="Finite-blocklength URLLC toolkit")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("bounds", help="capacity, dispersion and maximal rate over an SNR grid")
    _add_common(p)
    _add_link_level(p)
    p.add_argument("--snr-db", required=True, help="grid start:step:stop or comma list")
    p.set_defaults(handler="bounds")

    p = sub.add_parser("codec", help="build or inspect code files")
    codec = p.add_subparsers(dest="codec_command", required=True, metavar="action")
    b = codec.add_parser("build", help="extended BCH generator matrix")
    _add_common(b)
    b.add_argument("--m", type=int, help="field degree (cyclic length 2^m - 1)")
    b.add_argument("--t", type=int, help="designed error-correcting capability")
    b.add_argument("--preset", choices=sorted(EBCH128_CODES), help="named (m, t) pair")
    b.add_argument("--extend", action=argparse.BooleanOptionalAction, default=True)
    b.set_defaults(handler="codec_build")
    i = codec.add_parser("info", help="n, k, rate and (small k) minimum distance")
    _add_common(i)
    i.add_argument("--code", dest="code", required=True)
    i.set_defaults(handler="codec_info")

    p = sub.add_parser("simulate-cep", help="Monte Carlo CEP of order-s OS decoding")
    _add_common(p)
    _add_decoder(p)
    p.add_argument("--order", type=int, required=True, help="reprocessing order s")
    p.add_argument("--metric", choices=("correlation", "hamming"), default="correlation")
    p.add_argument("--fast", action="store_true", help="skip TEPs that cannot beat order 0")
    p.add_argument("--snr-db", required=True)
    p.set_defaults(handler="simulate_cep")

    p = sub.add_parser("measure-gap", help="power gap of each order at a target CEP")
    _add_common(p)
    _add_decoder(p)
    p.add_argument("--eps", dest="eps_m", type=float, help="target CEP of the search")
    p.add_argument("--orders", required=True, help="comma list of orders, e.g. 0,1,2")
    p.add_argument("--window-db", default="-2:12", help="SNR search window LO:HI")
    p.add_argument("--bracket-db", type=float, default=0.05)
    p.add_argument("--reference-snr-db", type=float, help="reference SNR (default: normal approximation)")
    p.set_defaults(handler="measure_gap")

    p = sub.add_parser("fit-model", help="fit (a, b) of the complexity/penalty law")
    _add_common(p)
    p.add_argument("--points", help="CSV with delta_rho_db, log2_k columns")
    p.add_argument("--db", help="read gap points from the results store")
    p.add_argument("--code", dest="code", help="code file whose points to read from --db")
    p.add_argument("--eps", dest="eps_m", type=float)
    p.set_defaults(handler="fit_model")

    p = sub.add_parser("constrained-rate", help="maximal rate with and without the deadline")
    _add_common(p)
    _add_constraints(p)
    p.add_argument("--snr-db", required=True)
    p.set_defaults(handler="constrained_rate")

    p = sub.add_parser("pareto", help="Pareto boundary of (delta_r, delta_rho)")
    _add_common(p)
    _add_constraints(p)
    p.add_argument("--rate", type=float, required=True, help="reference rate r_s")
    p.add_argument("--grid-step-db", dest="grid_step_db", type=float)
    p.add_argument("--T-b-sweep", help="processor speeds (comma list) to sweep")
    p.set_defaults(handler="pareto")

    p = sub.add_parser("scalarize-sweep", help="selected pair as the weight alpha sweeps")
    _add_common(p)
    _add_constraints(p)
    p.add_argument("--rate", type=float, required=True)
    p.add_argument("--theta", dest="theta", help="1, inf or any value >= 1")
    p.add_argument("--alphas", default="0:0.005:1")
    p.add_argument("--power-cost-mode", dest="power_cost_mode", choices=("shannon_log", "raw_db_log"))
    p.add_argument("--grid-step-db", dest="grid_step_db", type=float)
    p.set_defaults(handler="scalarize_sweep")

    p = sub.add_parser("battery", help="drain a battery under one selection policy")
    _add_common(p)
    _add_constraints(p)
    _add_battery(p)
    p.add_argument("--rate", type=float, required=True)
    p.add_argument("--theta", dest="theta", help="1, inf, fixed0 or fixed1")
    p.add_argument("--log", choices=("codeword", "run"), default="codeword", help="one row per codeword or per run")
    p.set_defaults(handler="battery")

    p = sub.add_parser("battery-compare", help="all policies over a list of reference rates")
    _add_common(p)
    _add_constraints(p)
    _add_battery(p)
    p.add_argument("--rates", default="0.3:0.1:0.9")
    p.set_defaults(handler="battery_compare")

    p = sub.add_parser("regime", help="low / medium / high SNR regime of each rate")
    _add_common(p)
    _add_constraints(p)
    p.add_argument("--rates", required=True)
    p.set_defaults(handler="regime")

    return parser


def _add_battery(p: argparse.ArgumentParser) -> None:
    p.add_argument("--capacity-wh", dest="capacity_wh", type=float)
    p.add_argument("--alpha-scale", dest="alpha_scale", choices=("formula", "unit"))
    p.add_argument("--t-scale", dest="t_scale", choices=("fraction", "percent"))
    p.add_argument("--power-cost-mode", dest="power_cost_mode", choices=("shannon_log", "raw_db_log"))
    p.add_argument("--grid-step-db", dest="grid_step_db", type=float)
    p.add_argument("--pathloss-ref-db", dest="pathloss_ref_db", type=float)
    p.add_argument("--pathloss-exponent", dest="pathloss_exponent", type=float)
    p.add_argument("--noise-dbm", dest="noise_dbm", type=float)
    p.add_argument("--distance-m", dest="distance_m", type=float)


# =====================
# COMMANDS
# =====================

class ToolkitCommands:
    """
    One method per subcommand. Each returns the full output (a CsvReport
    or plain text); nothing is written until the command has succeeded.
    """

    def __init__(self, settings: Settings) -> None:
        self.settings = settings

    # ---- helpers ----

    def _out_path(self, raw: str | None) -> Path | None:
        if not raw or raw == "-":
            return None
        path = Path(raw)
        return path if path.is_absolute() else self.settings.output_dir / path

    def _db_path(self, raw: str | None) -> Path | None:
        path = Path(raw) if raw else self.settings.results_db
        if path is not None:
            path.parent.mkdir(parents=True, exist_ok=True)
        return path

    def _code(self, cfg: ExperimentConfig) -> CodeSpec:
        path = cfg.get("code", str, required=True)
        return read_code(path)

    def _threads(self, cfg: ExperimentConfig) -> int:
        # worker count never changes results, so it stays out of the echo
        threads = cfg.get("threads", int, self.settings.threads, record=False)
        if threads < 1:
            raise ValidationError(f"threads must be >= 1, got {threads}")
        return threads

    def _reference_rate(self, args: argparse.Namespace, cfg: ExperimentConfig) -> float:
        cfg.note("r_s", args.rate)
        return float(args.rate)

    # ---- bounds ----

    def bounds(self, args: argparse.Namespace, cfg: ExperimentConfig) -> CsvReport:
        n = cfg.get("n", int, DEFAULT_BLOCKLENGTH)
        eps = cfg.get("eps_m", float, URLLC_CONSTRAINTS.eps_m)
        grid = parse_grid(args.snr_db)
        cfg.note("snr_db", args.snr_db)
        quad = QuadratureSpec(order=self.settings.quadrature_order)
        cfg.note("quadrature_order", quad.order)

        report = CsvReport(["snr_db", "capacity", "dispersion", "rate"])
        report.extend(bounds_table(n, eps, grid, quad))
        return report

    # ---- codec ----

    def codec_build(self, args: argparse.Namespace, cfg: ExperimentConfig) -> str:
        if args.preset:
            m, t = EBCH128_CODES[args.preset]
        elif args.m is not None and args.t is not None:
            m, t = args.m, args.t
        else:
            raise ValidationError("give --m and --t, or --preset")
        if args.preset:
            cfg.note("preset", args.preset)
        cfg.note("m", m)
        cfg.note("t", t)
        cfg.note("extended", int(args.extend))
        code = bch_code(m, t, extend=args.extend)
        logger.info("built (%s, %s) code from m=%s t=%s extended=%s", code.n, code.k, m, t, args.extend)
        return format_code(code)

    def codec_info(self, args: argparse.Namespace, cfg: ExperimentConfig) -> CsvReport:
        code = self._code(cfg)
        d = min_distance(code.matrix) if code.k <= MAX_ENUM_K else ""
        report = CsvReport(["n", "k", "rate", "min_distance", "digest"])
        report.add(code.n, code.k, code.rate, d, code.digest)
        return report

    # ---- Monte Carlo ----

    def simulate_cep(self, args: argparse.Namespace, cfg: ExperimentConfig) -> CsvReport:
        code = self._code(cfg)
        seed = cfg.get("seed", int, required=True)
        threads = self._threads(cfg)
        config = DecoderConfig(s=args.order, q=args.q, metric=args.metric, fast=args.fast)
        grid = parse_grid(args.snr_db)
        for key in ("order", "q", "metric", "trials", "target_errors", "snr_db"):
            cfg.note(key, getattr(args, key))

        db_path = self._db_path(args.db)
        if db_path is None:
            estimates = cep_curve(code, config, grid, args.trials, args.target_errors, seed, threads=threads)
        else:
            estimates = asyncio.run(
                self._ceps_with_store(db_path, code, config, grid, args.trials, args.target_errors, seed, threads)
            )

        k_complexity = complexity_per_info_bit(code.n, code.k, config.s, config.q)
        report = CsvReport(["snr_db", "order", "trials", "errors", "cep", "ci_low", "ci_high", "k_complexity"])
        for est in estimates:
            report.add(est.snr_db, est.order, est.trials, est.errors, est.cep, est.ci_low, est.ci_high, k_complexity)
        return report

    async def _ceps_with_store(
        self,
        db_path: Path,
        code: CodeSpec,
        config: DecoderConfig,
        grid,
        max_trials: int,
        target_errors: int,
        seed: int,
        threads: int,
    ) -> list[CepEstimate]:
        out: list[CepEstimate] = []
        async with Database(db_path) as db:
            await run_migrations(db)
            repo = CepRunsRepository(db)
            for x in grid:
                snr_db = float(x)
                keys = dict(code=code, config=config, max_trials=max_trials, target_errors=target_errors, seed=seed)
                est = await repo.get(snr_db=snr_db, **keys)
                if est is not None:
                    logger.info("reusing stored cep at %.4g dB: %s/%s", snr_db, est.errors, est.trials)
                else:
                    est = estimate_cep(
                        code, config, db_to_linear(snr_db), max_trials, target_errors, seed,
                        threads=threads, snr_db=snr_db,
                    )
                    await repo.save(estimate=est, **keys)
                out.append(est)
        return out

    def measure_gap(self, args: argparse.Namespace, cfg: ExperimentConfig) -> CsvReport:
        code = self._code(cfg)
        seed = cfg.get("seed", int, required=True)
        threads = self._threads(cfg)
        eps = cfg.get("eps_m", float, URLLC_CONSTRAINTS.eps_m)
        orders = _parse_orders(args.orders)
        window = _parse_window(args.window_db)
        for key in ("orders", "q", "trials", "target_errors", "window_db", "bracket_db"):
            cfg.note(key, getattr(args, key))

        search = GapSearch(
            max_trials=args.trials,
            target_errors=args.target_errors,
            seed=seed,
            window_db=window,
            bracket_db=args.bracket_db,
            threads=threads,
        )
        campaign = GapCampaign(code=code, eps_target=eps, search=search)
        ref = campaign.normal_reference_db() if args.reference_snr_db is None else float(args.reference_snr_db)
        cfg.note("reference_snr_db", ref)
        points = campaign.measure_gap_points(orders, q=args.q, reference_snr_db=ref)

        db_path = self._db_path(args.db)
        if db_path is not None:
            asyncio.run(self._save_gap_points(db_path, code, points, eps, seed))

        report = CsvReport(["order", "delta_rho_db", "log2_k"])
        for p in points:
            report.add(p.order, p.delta_rho_db, p.log2_K)
        return report

    async def _save_gap_points(self, db_path: Path, code: CodeSpec, points: list[GapPoint], eps: float, seed: int) -> None:
        async with Database(db_path) as db:
            await run_migrations(db)
            stored = await GapPointsRepository(db).save_many(code=code, points=points, eps_target=eps, seed=seed)
        logger.info("stored %s gap points in %s", stored, db_path)

    # ---- trade-off ----

    def fit_model(self, args: argparse.Namespace, cfg: ExperimentConfig) -> str:
        if args.points:
            cfg.note("points", args.points)
            points = _gap_points_from_csv(Path(args.points))
        elif args.db:
            cfg.note("db", args.db)
            code = self._code(cfg)
            eps = cfg.get("eps_m", float, None)
            points = asyncio.run(self._load_gap_points(Path(args.db), code.digest, eps))
        else:
            raise ValidationError("give --points or --db")
        return format_model(fit_model(points))

    async def _load_gap_points(self, db_path: Path, digest: str, eps: float | None) -> list[GapPoint]:
        if not db_path.is_file():
            raise FileNotFoundError(f"results store not found: {db_path}")
        async with Database(db_path) as db:
            await run_migrations(db)
            return await GapPointsRepository(db).list_for_code(code_digest=digest, eps_target=eps)

    def constrained_rate(self, args: argparse.Namespace, cfg: ExperimentConfig) -> CsvReport:
        n = cfg.get("n", int, DEFAULT_BLOCKLENGTH)
        constraints = cfg.constraints()
        model = cfg.model()
        grid = parse_grid(args.snr_db)
        cfg.note("snr_db", args.snr_db)

        unconstrained = max_rate_curve_db(n, grid, constraints.eps_m)
        constrained = constrained_rate_curve(n, grid, constraints.eps_m, model, constraints)
        report = CsvReport(["snr_db", "rate_unconstrained", "rate_constrained", "delta_rho_min_db"])
        for x, r, m in zip(grid, unconstrained, constrained):
            report.add(float(x), float(r), float(m), penalty_at_rate(model, constraints, n, float(m)))
        return report

    # ---- multi-objective ----

    def pareto(self, args: argparse.Namespace, cfg: ExperimentConfig) -> CsvReport:
        n = cfg.get("n", int, DEFAULT_BLOCKLENGTH)
        constraints = cfg.constraints()
        model = cfg.model()
        step = cfg.get("grid_step_db", float, DEFAULT_GRID_STEP_DB)
        ref = reference_pair(n, self._reference_rate(args, cfg), constraints.eps_m)
        columns = ["delta_rho_db", "delta_r", "rate", "snr_db"]

        if args.T_b_sweep:
            cfg.note("T_b_sweep", args.T_b_sweep)
            report = CsvReport(["T_b", *columns])
            for T_b, boundary in boundary_shift_with_processor(ref, constraints, model, parse_grid(args.T_b_sweep), step):
                if boundary is None:
                    report.footer(f"T_b = {T_b:.12g}: infeasible")
                    continue
                for p in boundary.points:
                    report.add(T_b, p.delta_rho_db, p.delta_r, p.rate, p.snr_db)
            return report

        boundary = pareto_boundary(ref, constraints, model, step)
        report = CsvReport(columns)
        for p in boundary.points:
            report.add(p.delta_rho_db, p.delta_r, p.rate, p.snr_db)
        report.footer(f"rho_s_db = {ref.rho_s_db:.12g}")
        report.footer(f"delta_rho_s_min_db = {boundary.delta_rho_s_min:.12g}")
        report.footer(f"delta_r_s_min = {boundary.delta_r_s_min:.12g}")
        return report

    def scalarize_sweep(self, args: argparse.Namespace, cfg: ExperimentConfig) -> CsvReport:
        n = cfg.get("n", int, DEFAULT_BLOCKLENGTH)
        constraints = cfg.constraints()
        model = cfg.model()
        step = cfg.get("grid_step_db", float, DEFAULT_GRID_STEP_DB)
        theta = cfg.get("theta", parse_theta, 1.0)
        mode = cfg.get("power_cost_mode", str, "shannon_log")
        alphas = parse_grid(args.alphas)
        cfg.note("alphas", args.alphas)
        ref = reference_pair(n, self._reference_rate(args, cfg), constraints.eps_m)

        boundary = pareto_boundary(ref, constraints, model, step)
        spec = ScalarizationSpec(theta=theta, power_cost_mode=mode)
        report = CsvReport(["alpha", "chosen_delta_r", "chosen_delta_rho_db"])
        hits: set[int] = set()
        for alpha in alphas:
            idx = select_index(boundary, spec.with_alpha(float(alpha)))
            hits.add(idx)
            p = boundary.points[idx]
            report.add(float(alpha), p.delta_r, p.delta_rho_db)
        report.footer(f"accessible_points = {len(hits)} of {len(boundary)}")
        return report

    def regime(self, args: argparse.Namespace, cfg: ExperimentConfig) -> CsvReport:
        n = cfg.get("n", int, DEFAULT_BLOCKLENGTH)
        constraints = cfg.constraints()
        model = cfg.model()
        cfg.note("rates", args.rates)

        report = CsvReport(["r_s", "rho_s_db", "rho_i_db", "rho_i_shifted_db", "regime"])
        for r_s in parse_grid(args.rates):
            ref = reference_pair(n, float(r_s), constraints.eps_m)
            reg = classify_regime(ref, constraints.eps_m, model, constraints)
            report.add(float(r_s), reg.rho_s_db, reg.rho_i_db, reg.rho_i_shifted_db, reg.name)
        return report

    # ---- battery ----

    def _battery_options(self, cfg: ExperimentConfig) -> dict[str, Any]:
        return {
            "spec": replace(
                CASE_STUDY_SPEC,
                power_cost_mode=cfg.get("power_cost_mode", str, CASE_STUDY_SPEC.power_cost_mode),
            ),
            "alpha_scale": cfg.get("alpha_scale", str, "formula"),
            "t_scale": cfg.get("t_scale", str, "fraction"),
            "grid_step_db": cfg.get("grid_step_db", float, DEFAULT_GRID_STEP_DB),
        }

    def battery(self, args: argparse.Namespace, cfg: ExperimentConfig) -> CsvReport:
        n = cfg.get("n", int, DEFAULT_BLOCKLENGTH)
        constraints = cfg.constraints()
        model = cfg.model()
        link = cfg.link()
        capacity = cfg.get("capacity_wh", float, DEFAULT_BATTERY_WH)
        policy = _policy_for(cfg.get("theta", str, "1"))
        options = self._battery_options(cfg)
        ref = reference_pair(n, self._reference_rate(args, cfg), constraints.eps_m)

        result = run_simulation(ref, constraints, model, policy, link, BatteryState.full(capacity), **options)
        cfg.note("log", args.log)

        if args.log == "run":
            report = CsvReport(["step", "t", "alpha", "rate", "snr_db", "energy_j", "codewords"])
            for i, s in enumerate(result.steps):
                report.add(i, s.t, s.alpha, s.rate, s.snr_db, s.energy_j, s.codewords)
        else:
            if result.total_transmissions > MAX_CODEWORD_ROWS:
                raise ValidationError(
                    f"{result.total_transmissions} codewords is more than {MAX_CODEWORD_ROWS} log rows; "
                    "lower --capacity-wh or pass --log run"
                )
            report = CsvReport(["codeword", "t", "alpha", "rate", "snr_db", "energy_j"])
            for row in codeword_log(result):
                report.add(row.index, row.t, row.alpha, row.rate, row.snr_db, row.energy_j)
        report.footer(
            f"summary transmissions={result.total_transmissions} "
            f"bits={result.total_info_bits:.12g} bits_per_joule={result.efficiency_bits_per_joule:.12g}"
        )
        return report

    def battery_compare(self, args: argparse.Namespace, cfg: ExperimentConfig) -> CsvReport:
        n = cfg.get("n", int, DEFAULT_BLOCKLENGTH)
        constraints = cfg.constraints()
        model = cfg.model()
        link = cfg.link()
        capacity = cfg.get("capacity_wh", float, DEFAULT_BATTERY_WH)
        options = self._battery_options(cfg)
        cfg.note("rates", args.rates)

        summaries = compare_policies(
            [float(r) for r in parse_grid(args.rates)],
            n=n, constraints=constraints, model=model, link=link, capacity_wh=capacity, **options,
        )
        report = CsvReport(["r_s", "policy", "transmissions", "info_bits", "bits_per_joule", "ratio_to_full_power"])
        for s in summaries:
            report.add(s.r_s, s.policy, s.transmissions, s.info_bits, s.efficiency_bits_per_joule, s.ratio_to_full_power)
        return report


# =====================
# INPUT PARSING
# =====================

def _parse_orders(raw: str) -> list[int]:
    try:
        orders = [int(v) for v in raw.split(",") if v.strip()]
    except ValueError as exc:
        raise ValidationError(f"orders must be a comma list of integers, got {raw!r}") from exc
    if not orders:
        raise ValidationError("no orders given")
    return orders


def _parse_window(raw: str) -> tuple[float, float]:
    parts = raw.split(":")
    try:
        lo, hi = (float(v) for v in parts)
    except ValueError as exc:
        raise ValidationError(f"window must be LO:HI, got {raw!r}") from exc
    if not lo < hi:
        raise ValidationError(f"empty window {raw!r}")
    return lo, hi


def _policy_for(raw: str) -> Policy:
    policy = _POLICY_BY_THETA.get(str(raw).strip().lower())
    if policy is None:
        raise ValidationError(f"battery theta must be 1, inf, fixed0 or fixed1, got {raw!r}")
    return policy


def _gap_points_from_csv(path: Path) -> list[GapPoint]:
    rows = read_points_csv(path)
    try:
        return [
            GapPoint(
                delta_rho_db=float(r["delta_rho_db"]),
                log2_K=float(r["log2_k"]),
                order=int(r["order"]) if r.get("order") not in (None, "") else None,
            )
            for r in rows
        ]
    except KeyError as exc:
        raise ValidationError(f"{path} lacks column {exc}") from exc
    except ValueError as exc:
        raise ValidationError(f"bad number in {path}: {exc}") from exc


def _write_text(target: Path | None, text: str) -> None:
    if target is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(text, encoding="utf-8")


# =====================
# DISPATCH
# =====================

def dispatch(argv: Sequence[str], settings: Settings | None = None) -> int:
    """Parse, run one subcommand, write its output. Returns the exit code."""
    try:
        args = build_parser().parse_args(join_negative_values(list(argv)))
        settings = settings or Settings.load()

        overrides = {k: v for k, v in vars(args).items() if k in KNOWN_KEYS}
        cfg = ExperimentConfig.load(args.config, overrides)
        commands = ToolkitCommands(settings)
        output = getattr(commands, args.handler)(args, cfg)
        target = commands._out_path(args.out)

        header = [f"{PROG} {args.command}" + (f" {args.codec_command}" if args.command == "codec" else "")]
        if cfg.source is not None:
            header.append(f"config = {cfg.source.as_posix()}")
        header.extend(cfg.echo())

        if isinstance(output, CsvReport):
            for line in header:
                output.comment(line)
            output.write(target)
        else:
            # code and model files skip `#` lines when read back
            _write_text(target, "".join(f"# {line}\n" for line in header) + output)
        if target is not None:
            logger.info("wrote %s", target)
        return EXIT_OK

    except SystemExit as exc:
        # --help / --version
        return int(exc.code or 0)
    except (ToolkitError, OSError) as exc:
        code = exit_code_for(exc)
        logger.debug("command failed", exc_info=True)
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return code


__all__ = [
    "EXIT_FAILURE",
    "EXIT_INFEASIBLE",
    "EXIT_IO",
    "EXIT_OK",
    "EXIT_USAGE",
    "ToolkitCommands",
    "build_parser",
    "dispatch",
    "exit_code_for",
    "join_negative_values",
]
