import os
import sys

import numpy as np
import pandas as pd

from termsv import TermSV, TermSVError
from termsv.data import (DEFAULT_SCHEDULE, load_panel, load_schedule,
                         simulate_panel, term_structure_stats)
from termsv.diagnostics import realized_covariance
from termsv.exceptions import DomainError
from termsv.forecast import (Portfolio, extract_factors_ls, records_frame,
                             summarize_backtest)
from termsv.gibbs import load_draws, summarize
from termsv.io import provenance
from termsv.model import ModelSpec, Params, ewma_innovation_cov, price_moments
from termsv.oracles import self_check

from .argparser import parser
from .console import ConsoleOutput
from .constants import (CONFIG_FILES, DEFAULT_OUTPUT_DIR, DIAGNOSE_CONTRACTS,
                        DIAGNOSE_DAYS, OUTPUT_DIR_ENV, SIMULATION_DEFAULTS)
from .output import Output

args = console = session = None

#: Parameters reported x100 in the estimation summary
SCALED_PREFIXES = ("alpha", "lambda", "sigma_y")
BACKTEST_ORIGINS = 250
VAR_SUMMARY_COLUMNS = ["portfolio", "level", "source", "hit_rate", "uc_p",
                       "uc_mark", "cc_p", "cc_mark"]


def create_output(inputs=()):
    """Opens the output directory with a provenance header."""
    directory = args.out or os.environ.get(OUTPUT_DIR_ENV) or DEFAULT_OUTPUT_DIR
    command = " ".join(["termsv"] + sys.argv[1:])
    spec = model_spec()
    header = provenance(command, session.get_option("seed"), inputs, model=spec.name)
    output = Output(directory, header)

    try:
        output.open()
    except (IOError, OSError) as err:
        console.exit("Failed to open output directory {0}: {1}", directory, err)

    return output


def model_spec():
    return ModelSpec(args.model, args.sv)


def read_panel():
    if len(args.inputs) != 1:
        console.exit("The {0} command needs exactly one panel file", args.command)

    path = args.inputs[0]
    panel = load_panel(path)
    console.logger.info("Loaded {0} dates of {1} contracts from {2}",
                        panel.T, panel.N, path)
    return path, panel


def read_params(path):
    try:
        with open(path) as fd:
            return Params.from_text(fd.read())
    except (IOError, OSError) as err:
        console.exit("Failed to read parameter file {0}: {1}", path, err)


def read_point_params():
    """Parameters from --params or the posterior mean of --draws."""
    if args.params:
        return read_params(args.params), [args.params]
    elif args.draws:
        return load_draws(args.draws[0]).posterior_mean(), [args.draws[0]]

    return None, []


def simulation_params(spec):
    m = spec.m
    defaults = SIMULATION_DEFAULTS
    lambdas = (defaults["lambda1"], defaults["lambda2"])[:spec.n_lambda]
    innovation = np.diag(np.square(defaults["innovation_sd"][:m]))
    nu = defaults["nu"] if spec.sv else None
    Sigma0 = innovation * (nu - m) if spec.sv else innovation

    return Params(spec, lambdas, defaults["sigma_y"], nu=nu,
                  beta0=defaults["beta0"][:m], Sigma0=Sigma0)


def parse_portfolios(names, N):
    portfolios = []
    for name in names or ["equal", "bullspread"]:
        if name == "equal":
            portfolios.append(Portfolio.equal(N))
        elif name == "bullspread":
            if N < 8:
                console.logger.warning("Skipping the bull spread, the panel has "
                                       "only {0} contracts", N)
                continue
            portfolios.append(Portfolio.bull_spread(N))
        else:
            portfolio = Portfolio.from_file(name, os.path.splitext(os.path.basename(name))[0])
            portfolio.check(N)
            portfolios.append(portfolio)

    return portfolios


def read_reference(path):
    frame = pd.read_csv(path, comment="#", parse_dates=["target_date"])
    return dict(zip(frame["target_date"], frame["log_pd"]))


def cmd_simulate():
    if args.params:
        params = read_params(args.params)
        spec = params.spec
    else:
        spec = model_spec()
        params = simulation_params(spec)

    schedule = load_schedule(args.schedule) if args.schedule else DEFAULT_SCHEDULE
    panel, truth = simulate_panel(params, schedule, args.dates, args.contracts,
                                  session.get_option("seed"), args.start_date)

    output = create_output([path for path in (args.params, args.schedule) if path])
    output.panel("panel.csv", panel, schedule)
    output.text("params.txt", params.to_text())
    output.states("states.bin", [truth])

    console.msg("Simulated {0} from {1}: {2} dates, {3} contracts, {4} roll-overs",
                output.filename("panel.csv"), spec.name, panel.T, panel.N,
                int(panel.rollover_flags.sum()))


def cmd_estimate():
    path, panel = read_panel()
    spec = model_spec()
    init = read_params(args.params) if args.params else None
    if init is not None and init.spec != spec:
        raise DomainError("Parameter file is for {0}, not {1}".format(init.spec.name, spec.name))

    sample = session.estimate(panel, spec, init)

    summary = summarize(sample)
    scale = np.where(summary["parameter"].str.startswith(SCALED_PREFIXES), 100.0, 1.0)
    summary["scale"] = scale
    summary["scaled_mean"] = summary["mean"] * scale
    summary["scaled_sd"] = summary["sd"] * scale
    timing = pd.DataFrame([{"parameter": "seconds_per_cycle", "mean": sample.timing}])
    summary = pd.concat([summary, timing], ignore_index=True)

    factors = pd.DataFrame(sample.mean_beta[1:],
                           columns=["beta{0}".format(i + 1) for i in range(spec.m)])
    factors.insert(0, "date", panel.dates.strftime("%Y-%m-%d"))

    output = create_output([path] + ([args.params] if args.params else []))
    output.draws("draws.csv", sample)
    output.table("summary.csv", summary)
    output.table("factors.csv", factors)
    if sample.states:
        output.states("states.bin", sample.states)

    for row in summary.itertuples():
        if row.parameter == "seconds_per_cycle":
            continue
        console.msg("{0:>10} {1:12.6g} ({2:.3g})  ESS {3:.0f}", row.parameter,
                    row.mean, row.sd, row.ess)
    console.msg("{0} draws in {1:.3f} s per cycle", len(sample), sample.timing)


def cmd_loglik():
    path, panel = read_panel()
    params, sources = read_point_params()
    if params is None:
        console.exit("The loglik command needs --params or --draws")

    result = session.loglik(panel, params)
    output = create_output([path] + sources)

    if params.spec.sv:
        row = {"model": params.spec.name, "loglik": result.loglik,
               "replicate_sd": result.replicate_sd, "particles": result.n_particles,
               "replicates": session.get_option("smc-replicates"),
               "resample": session.get_option("smc-resample")}
        contributions = pd.DataFrame({"date": panel.dates.strftime("%Y-%m-%d"),
                                      "contribution": result.contributions,
                                      "ess": result.ess})
        output.table("loglik_contributions.csv", contributions)
        loglik = result.loglik
    else:
        loglik = result
        row = {"model": params.spec.name, "loglik": loglik}

    output.table("loglik.csv", pd.DataFrame([row]))
    console.msg("log likelihood of {0}: {1:.6f}", params.spec.name, loglik)


def cmd_dic():
    path, panel = read_panel()
    if not args.draws or len(args.draws) > 2:
        console.exit("The dic command needs one or two --draws files")

    rows = []
    for draws in args.draws:
        posterior = load_draws(draws)
        result = session.dic(panel, posterior)
        rows.append({"model": posterior.spec.name, "draws": draws,
                     "dic": result.dic, "p_d": result.p_d,
                     "loglik_at_mean": result.loglik_at_mean,
                     "mean_loglik": result.mean_loglik, "n_eval": result.n_eval,
                     "particles": session.get_option("smc-particles")
                     if posterior.spec.sv else None})
        console.msg("{0}: DIC {1:.3f}, p_D {2:.3f}", posterior.spec.name,
                    result.dic, result.p_d)

    if len(rows) == 2:
        difference = rows[0]["dic"] - rows[1]["dic"]
        rows.append({"model": "difference", "dic": difference})
        console.msg("DIC difference ({0} - {1}): {2:.3f}", rows[0]["model"],
                    rows[1]["model"], difference)

    output = create_output([path] + args.draws)
    output.table("dic.csv", pd.DataFrame(rows))


def cmd_backtest():
    path, panel = read_panel()
    spec = model_spec()
    start, stop = args.window
    stop = panel.T if stop is None else stop
    if start is None:
        start = max(stop - BACKTEST_ORIGINS, 2 * spec.m + 2)

    portfolios = parse_portfolios(args.portfolio, panel.N)
    result = session.backtest(panel, spec, start, stop, portfolios)
    if not result.records:
        console.exit("All {0} forecast origins failed", stop - start)

    reference = read_reference(args.reference) if args.reference else None
    summary = summarize_backtest(result.records, reference)

    output = create_output([path] + ([args.reference] if args.reference else []))
    output.table("forecasts.csv", records_frame(result.records))
    output.table("summary_logpl.csv", summary.log_pl)
    output.table("summary_rmsfe.csv", summary.rmsfe)
    output.table("summary_residuals.csv", summary.residuals)
    output.table("summary_var.csv", summary.var)
    if summary.accumulated is not None:
        output.table("accumulated.csv", summary.accumulated)
    if result.failures:
        output.table("failures.csv", pd.DataFrame(result.failures, columns=["origin", "error"]))

    console.msg("{0} origins, {1} failed, log-PL {2:.4f}", len(result.records),
                len(result.failures), summary.log_pl["log_pd"].sum())
    console.table(summary.rmsfe)
    console.table(summary.var, VAR_SUMMARY_COLUMNS)


def moment_curves(panel, params, factors):
    mean = factors.mean(axis=0)
    cov = np.atleast_2d(np.cov(factors, rowvar=False))
    days = min(DIAGNOSE_DAYS, panel.T)

    frames = []
    for contract in DIAGNOSE_CONTRACTS:
        if contract > panel.N:
            continue
        taus = panel.maturities[:days, contract - 1]
        price_mean, price_var = price_moments(params, mean, cov, taus)
        frames.append(pd.DataFrame({
            "contract": contract, "day": np.arange(1, days + 1),
            "maturity_days": taus, "rollover": panel.rollover_flags[:days].astype(int),
            "mean": price_mean, "variance": price_var,
        }))

    return pd.concat(frames, ignore_index=True)


def covariance_curves(panel, params, factors):
    """Realized covariances of the extracted factors next to the
    model's one-step innovation covariance forecasts."""
    m = params.m
    positions, realized = realized_covariance(factors)
    if params.spec.sv:
        eta = np.diff(factors, axis=0) - params.alpha
        model = ewma_innovation_cov(eta, params)[positions - 1]
    else:
        model = np.broadcast_to(params.Sigma0, realized.shape)

    rows, cols = np.tril_indices(m)
    frame = pd.DataFrame({"date": panel.dates[positions].strftime("%Y-%m-%d")})
    for r, c in zip(rows, cols):
        frame["rc_{0}{1}".format(r + 1, c + 1)] = realized[:, r, c]
        frame["model_{0}{1}".format(r + 1, c + 1)] = model[:, r, c]

    return frame


def cmd_diagnose():
    path, panel = read_panel()
    params, sources = read_point_params()
    stats = term_structure_stats(panel)

    output = create_output([path] + sources)
    output.table("term_structure.csv", stats)
    if params is None:
        console.msg("Wrote term structure statistics; pass --params or --draws "
                    "for moment curves")
        return

    factors = extract_factors_ls(panel, params.lambdas, params.m)
    output.table("moments.csv", moment_curves(panel, params, factors))
    output.table("realized_cov.csv", covariance_curves(panel, params, factors))
    console.msg("Wrote term structure statistics, moment and covariance curves")


def cmd_self_check():
    reports = self_check(seed=session.get_option("seed"))
    output = create_output()
    output.table("self_check.csv", pd.DataFrame([r.to_row() for r in reports]))

    failed = [r for r in reports if not r.passed]
    for report in reports:
        console.msg("{0:<6} {1}: oracle {2:.10g}, termsv {3:.10g}",
                    "ok" if report.passed else "FAILED", report.quantity,
                    report.oracle, report.artifact)
    if failed:
        console.exit("{0} of {1} checks failed", len(failed), len(reports))


COMMAND_HANDLERS = {
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
    "loglik": cmd_loglik,
    "dic": cmd_dic,
    "backtest": cmd_backtest,
    "diagnose": cmd_diagnose,
    "self-check": cmd_self_check,
}


def setup_args(config_files=[]):
    """Parses arguments."""
    global args
    arglist = sys.argv[1:]

    # Load arguments from config files
    for config_file in filter(os.path.isfile, config_files):
        arglist.insert(0, "@" + config_file)

    args = parser.parse_args(arglist)
    if args.self_check:
        args.command = "self-check"


def setup_config_args():
    config_files = []

    if args.config:
        # We want the config specified last to get highest priority
        config_files += list(reversed(args.config))
    else:
        # Only load first available default config
        for config_file in filter(os.path.isfile, CONFIG_FILES):
            config_files.append(config_file)
            break

    if config_files:
        setup_args(config_files)


def setup_console():
    """Console setup."""
    global console

    # All console related operations is handled via the ConsoleOutput class
    console = ConsoleOutput(sys.stdout, session)
    try:
        console.set_level("none" if args.quiet else args.loglevel)
    except TermSVError as err:
        console.exit("{0}", err)


def setup_session():
    """Creates the termsv session."""
    global session

    session = TermSV()


def setup_options():
    """Sets termsv options."""
    options = [
        ("seed", args.seed),
        ("threads", args.threads),
        ("gibbs-iterations", args.iters),
        ("gibbs-burnin", args.burnin),
        ("gibbs-keep-states", args.keep_states),
        ("smc-particles", args.particles),
        ("smc-replicates", args.replicates),
        ("smc-resample", args.resample),
        ("dic-thin", args.dic_thin),
        ("dic-draws", args.dic_draws),
        ("forecast-draws", args.forecast_draws),
        ("backtest-update", args.backtest_update),
        ("backtest-cycles", args.backtest_cycles),
        ("var-levels", args.var_levels),
    ]
    for key, value in options:
        if value is not None:
            session.set_option(key, value)

    if args.benchmark_lambdas:
        session.set_option("benchmark-lambdas", ",".join(args.benchmark_lambdas))


def main():
    setup_args()
    setup_session()
    setup_config_args()
    setup_console()

    if args.help:
        parser.print_help()
    elif args.command:
        try:
            setup_options()
            COMMAND_HANDLERS[args.command]()
        except TermSVError as err:
            console.exit("{0}", err)
        except KeyboardInterrupt:
            console.msg("Interrupted! Exiting...")
            sys.exit(1)
    else:
        usage = parser.format_usage()
        msg = (
            "{usage}\nUse -h/--help to see the available options."
        ).format(usage=usage)
        console.msg(msg)
