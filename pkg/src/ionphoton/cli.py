"""Batch front-end: couplings, emission, gates and run subcommands.

Each subcommand reads one plain-text config (``--config`` file or a named
``--preset``), computes its artifacts and writes a reproducible report
bundle to ``--out``.  Exit codes: 0 success, 2 configuration problem,
3 numerical/solver failure.  Environment variables are never consulted.
"""

import sys
from pathlib import Path

import click

from . import cavity, config, crystal, gates, protocol, reports
from .errors import (
    ConfigError,
    DomainError,
    InstabilityError,
    IonPhotonError,
    SolverError,
    UncompilableError,
    UnstableConfigurationError,
)

_NUMERIC_ERRORS = (
    SolverError,
    InstabilityError,
    UnstableConfigurationError,
    UncompilableError,
    DomainError,
)


def _explain_units(ctx, param, value):
    if not value or ctx.resilient_parsing:
        return
    click.echo(config.UNITS_HELP, nl=False)
    ctx.exit(0)


@click.group()
@click.option(
    "--explain-units", is_flag=True, expose_value=False, is_eager=True,
    callback=_explain_units, help="Print the unit conventions and exit.",
)
def main():
    """Trapped-ion entangled-photon source simulator."""


def _common(fn):
    fn = click.option(
        "--format", "fmt", type=click.Choice(["csv", "json"]), default="csv",
        help="Primary table format.",
    )(fn)
    fn = click.option("--seed", type=int, default=None, help="Override the config seed.")(fn)
    fn = click.option(
        "--out", "out_dir", required=True, type=click.Path(file_okay=False),
        help="Output directory for the report bundle.",
    )(fn)
    fn = click.option("--preset", default=None, help="Name of an embedded preset config.")(fn)
    fn = click.option(
        "--config", "config_path", default=None,
        type=click.Path(exists=True, dir_okay=False),
        help="Path to a config file.",
    )(fn)
    return fn


def _load_config(config_path, preset) -> config.ConfigData:
    if (config_path is None) == (preset is None):
        raise ConfigError("give exactly one of --config or --preset")
    text = (
        config.preset_text(preset)
        if preset is not None
        else Path(config_path).read_text()
    )
    return config.load_config(text)


def _run_guarded(body):
    try:
        body()
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(2)
    except _NUMERIC_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(3)
    except IonPhotonError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(3)


@main.command()
@_common
def couplings(config_path, preset, out_dir, seed, fmt):
    """Chain equilibria, modes, sideband and coupling tables."""

    def body():
        cfg = _load_config(config_path, preset)
        cases = config.crystal_cases(cfg)
        bundle = reports.couplings_bundle(cases, fmt)
        out = bundle.write(out_dir)
        click.echo(f"wrote {len(bundle.files) + 1} files to {out}")

    _run_guarded(body)


@main.command()
@_common
def emission(config_path, preset, out_dir, seed, fmt):
    """Photon-emission success-rate sweep over (detuning, decay-rate)."""

    def body():
        cfg = _load_config(config_path, preset)
        setup = config.cavity_from(cfg)
        deltas, kappas = config.sweep_grid(cfg)
        omega = setup.channel_g.omega_laser
        h = setup.channel_g.g_cav
        sweep = cavity.fig2_sweep(omega, h, deltas, kappas)
        summary = []
        for delta in deltas:
            w = cavity.effective_rabi(cavity.RamanChannel(omega, h, delta))
            tau = cavity.optimal_emission_time(w, setup.kappa)
            p1 = cavity.success_probability(w, setup.kappa, tau)
            summary.append([delta, w, setup.kappa, tau, p1, p1 * p1])
        bundle = reports.emission_bundle(sweep, summary, fmt)
        out = bundle.write(out_dir)
        click.echo(f"wrote {len(bundle.files) + 1} files to {out}")

    _run_guarded(body)


@main.command(name="gates")
@_common
def gates_cmd(config_path, preset, out_dir, seed, fmt):
    """CNOT polarity checks and refocusing verification."""

    def body():
        cfg = _load_config(config_path, preset)
        cases = config.crystal_cases(cfg)
        if len(cases) != 1:
            raise ConfigError("gates command needs exactly one [crystal] section")
        case = cases[0]
        _, _, coupling, _ = crystal.solve_chain(case.traps, case.gradient, case.species)

        prod_g = gates.cnot_product_matrix(active_on="g")
        prod_e = gates.cnot_product_matrix(active_on="e")
        fid_g = gates.gate_fidelity(prod_g, gates.ideal_cnot(2, 0, 1, "g"))
        fid_e = gates.gate_fidelity(prod_e, gates.ideal_cnot(2, 0, 1, "e"))

        lines = [
            "two-qubit controlled-X product checks",
            f"  fidelity(six-factor product, ideal CX active on |g>) = {fid_g!r}",
            f"  fidelity(control-z-negated variant, ideal CX active on |e>) = {fid_e!r}",
            "  six-factor product matrix, basis |ee>,|eg>,|ge>,|gg>:",
        ]
        lines += reports.matrix_lines(prod_g, ["ee", "eg", "ge", "gg"])
        lines.append(gates.POLARITY_DIAGNOSTIC)
        lines.append("refocusing verification over the configured couplings:")

        n = case.traps.n_ions
        refocused = []
        for target in range(1, n):
            seq = gates.cnot_sequence(coupling.J, 0, target, active_on="e")
            u = gates.sequence_unitary(seq, coupling.J, n)
            ideal = gates.ideal_cnot(n, 0, target, "e")
            fid = gates.gate_fidelity(u, ideal)
            refocused.append(
                {"target": target + 1, "fidelity": fid,
                 "duration_s": seq.total_duration}
            )
            lines.append(
                f"  CNOT 1->{target + 1}: fidelity deficit = {1.0 - fid!r}, "
                f"duration = {seq.total_duration!r} s"
            )

        report = {
            "fidelity_product_vs_g_active": fid_g,
            "fidelity_variant_vs_e_active": fid_e,
            "refocused_cnots": refocused,
            "diagnostic": gates.POLARITY_DIAGNOSTIC,
        }
        bundle = reports.gates_bundle(report, lines)
        out = bundle.write(out_dir)
        click.echo("\n".join(lines))
        click.echo(f"wrote {len(bundle.files) + 1} files to {out}")

    _run_guarded(body)


@main.command()
@_common
@click.option("--trials", type=int, default=None, help="Override the config trial count.")
def run(config_path, preset, out_dir, seed, fmt, trials):
    """Full protocol: emission, entangling gates, outcome table, sampling."""

    def body():
        cfg = _load_config(config_path, preset)
        experiment = config.experiment_from(cfg, seed_override=seed)
        n_trials = trials if trials is not None else config.trials_from(cfg)
        if n_trials < 1:
            raise ConfigError("--trials must be >= 1")
        report = protocol.sample_run(experiment, n_trials)
        bundle = reports.run_bundle(report, fmt)
        out = bundle.write(out_dir)
        click.echo(
            f"N={experiment.n_ions}  p_total={report.p_total:.6f}  "
            f"success {report.n_success}/{report.trials}  "
            f"timing {report.timing_s:.6e} s"
        )
        click.echo(f"wrote {len(bundle.files) + 1} files to {out}")

    _run_guarded(body)


if __name__ == "__main__":
    main()
