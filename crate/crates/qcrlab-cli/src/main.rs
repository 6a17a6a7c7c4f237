//! `qcrlab` — simulate a noise-driven quantum-circuit refrigerator and
//! fit its models to measured data.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qcrlab::constants::angular;
use qcrlab::estimation::{fit_iv_curve, FitResult, IvFitMode, IvFitOptions, VacMode};
use qcrlab::photon_assisted::{dbm_to_watts, vac_from_power, watts_to_dbm};
use qcrlab::quadrature::QuadratureConfig;
use qcrlab::resonator::{bose_occupation, temp_from_occupation};
use qcrlab::spectroscopy::{
    default_grid, fit_population, poisson_distribution, synthesize_spectrum,
    thermal_distribution, DistributionFamily,
};

use qcrlab_cli::config::{split_number_unit, DeviceConfig, SCHEMA};
use qcrlab_cli::csvio::{format_cell, read_iv_csv, read_spectrum_csv, standard_metadata, write_table};
use qcrlab_cli::sweep::{run_sweep, DriveFixes, Observable, SweepSpec, SweepVariable};
use qcrlab_cli::CliError;

#[derive(Parser)]
#[command(name = "qcrlab", version, about = "Noise-driven quantum-circuit refrigerator toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Device configuration file (bundled defaults when omitted).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output path, or '-' for standard output.
    #[arg(long, default_value = "-")]
    output: String,
    /// Override a config key or drive setting, e.g. t_qp=248mK,
    /// p_noise=-70dBm, omega_ac=3.6GHz, v_dc=150uV, p_in=-134.3dBm.
    #[arg(long = "fix", value_name = "KEY=VALUE")]
    fixes: Vec<String>,
    /// Relative quadrature tolerance override.
    #[arg(long = "tol")]
    rel_tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate an IV curve (columns v_dc_volts, current_amps).
    Iv {
        #[command(flatten)]
        common: CommonArgs,
        /// Sweep as v_dc:START:STOP:POINTS (volts).
        #[arg(long, default_value = "v_dc:-400e-6:400e-6:201")]
        sweep: String,
    },
    /// Sweep a drive variable and emit requested observables.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Sweep as VAR:START:STOP:POINTS with VAR one of v_dc (volts),
        /// p_noise (dBm), p_in (dBm).
        #[arg(long)]
        sweep: String,
        /// Comma-separated observables: current, gamma_qcr, t_qcr, n_bar, t_eff.
        #[arg(long)]
        outputs: Option<String>,
    },
    /// Fit junction parameters to an IV dataset.
    FitIv {
        #[command(flatten)]
        common: CommonArgs,
        /// Input CSV with header v_dc_volts,current_amps.
        #[arg(long)]
        data: PathBuf,
        /// Excitation model used during the fit.
        #[arg(long, value_enum, default_value_t = FitMode::Dc)]
        mode: FitMode,
        /// Fit the drive amplitude instead of fixing it from p_noise.
        #[arg(long)]
        fit_vac: bool,
    },
    /// Fit a photon-number distribution to a qubit spectrum.
    FitSpectrum {
        #[command(flatten)]
        common: CommonArgs,
        /// Input CSV with header detuning_hz,magnitude.
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum)]
        family: Family,
        /// Peak full width at half maximum, e.g. 0.5MHz.
        #[arg(long, default_value = "0.5MHz")]
        linewidth: String,
        /// Initial mean photon number.
        #[arg(long, default_value_t = 0.7)]
        init_nbar: f64,
    },
    /// Synthesize a qubit spectrum for a photon-number distribution.
    SynthSpectrum {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum)]
        family: Family,
        /// Mean photon number of the distribution.
        #[arg(long)]
        n_bar: f64,
        /// Peak full width at half maximum, e.g. 0.5MHz.
        #[arg(long, default_value = "0.5MHz")]
        linewidth: String,
        /// Constant background level.
        #[arg(long, default_value_t = 0.0)]
        baseline: f64,
    },
    /// Unit and observable conversions.
    Convert {
        #[command(subcommand)]
        what: Conversion,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FitMode {
    Dc,
    Noise,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Thermal,
    Poisson,
}

impl From<Family> for DistributionFamily {
    fn from(f: Family) -> Self {
        match f {
            Family::Thermal => DistributionFamily::Thermal,
            Family::Poisson => DistributionFamily::Poisson,
        }
    }
}

#[derive(Subcommand)]
enum Conversion {
    /// Mean occupation → effective temperature (K).
    NbarTemp {
        #[arg(long)]
        n_bar: f64,
        /// Mode frequency, e.g. 4.671GHz.
        #[arg(long)]
        freq: String,
    },
    /// Temperature → mean occupation.
    TempNbar {
        /// Temperature, e.g. 305mK.
        #[arg(long)]
        temp: String,
        #[arg(long)]
        freq: String,
    },
    /// dBm → watts.
    DbmWatts {
        #[arg(long, allow_hyphen_values = true)]
        dbm: f64,
    },
    /// Watts → dBm.
    WattsDbm {
        #[arg(long)]
        watts: f64,
    },
    /// Noise power (dBm) → junction drive amplitude (V).
    PnVac {
        #[arg(long, allow_hyphen_values = true)]
        dbm: f64,
        #[arg(long, default_value_t = 50.0)]
        z0: f64,
    },
    /// Drive amplitude (V) → noise power (dBm).
    VacPn {
        #[arg(long)]
        vac: f64,
        #[arg(long, default_value_t = 50.0)]
        z0: f64,
    },
}

/// Drive settings accepted through `--fix` in addition to config keys.
fn apply_fixes(
    config: &mut DeviceConfig,
    fixes: &mut DriveFixes,
    args: &[String],
) -> Result<(), CliError> {
    for fix in args {
        let (key, value) = fix
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--fix expects KEY=VALUE, got '{fix}'")))?;
        let key = key.trim();
        let token = value.trim();
        match key {
            "v_dc" => {
                let (v, unit) = split_number_unit(token)?;
                fixes.v_dc = match unit.as_str() {
                    "V" => v,
                    "mV" => v * 1e-3,
                    "uV" => v * 1e-6,
                    _ => {
                        return Err(CliError::Usage(format!(
                            "v_dc needs a voltage unit (V/mV/uV), got '{token}'"
                        )))
                    }
                };
            }
            "p_noise" => {
                let (v, unit) = split_number_unit(token)?;
                if unit != "dBm" {
                    return Err(CliError::Usage(format!(
                        "p_noise must be in dBm, got '{token}'"
                    )));
                }
                fixes.p_noise_dbm = Some(v);
            }
            "p_in" => {
                let (v, unit) = split_number_unit(token)?;
                if unit != "dBm" {
                    return Err(CliError::Usage(format!("p_in must be in dBm, got '{token}'")));
                }
                fixes.p_in_dbm = Some(v);
            }
            "omega_ac" => {
                let (v, unit) = split_number_unit(token)?;
                let hz = match unit.as_str() {
                    "Hz" => v,
                    "kHz" => v * 1e3,
                    "MHz" => v * 1e6,
                    "GHz" => v * 1e9,
                    _ => {
                        return Err(CliError::Usage(format!(
                            "omega_ac needs a frequency unit, got '{token}'"
                        )))
                    }
                };
                fixes.omega_ac = Some(angular(hz));
            }
            _ if SCHEMA.iter().any(|(k, _, _)| *k == key) => config.set(key, token)?,
            other => {
                return Err(CliError::Usage(format!("unknown --fix key '{other}'")));
            }
        }
    }
    Ok(())
}

fn load_config(common: &CommonArgs) -> Result<(DeviceConfig, DriveFixes, QuadratureConfig), CliError> {
    let mut config = match &common.config {
        Some(path) => DeviceConfig::parse(&fs::read_to_string(path)?)?,
        None => DeviceConfig::default_device(),
    };
    let mut fixes = DriveFixes::default();
    apply_fixes(&mut config, &mut fixes, &common.fixes)?;
    let mut quad = QuadratureConfig::default();
    if let Some(tol) = common.rel_tol {
        // keep the absolute floor consistent with the requested precision
        quad.abs_tol *= tol / quad.rel_tol;
        quad.rel_tol = tol;
        quad.validate()?;
    }
    Ok((config, fixes, quad))
}

fn parse_sweep_token(token: &str, variable_hint: Option<SweepVariable>) -> Result<(SweepVariable, f64, f64, usize), CliError> {
    let parts: Vec<&str> = token.split(':').collect();
    if parts.len() != 4 {
        return Err(CliError::Usage(format!(
            "--sweep expects VAR:START:STOP:POINTS, got '{token}'"
        )));
    }
    let variable = SweepVariable::parse(parts[0])?;
    if let Some(hint) = variable_hint {
        if variable != hint {
            return Err(CliError::Usage(format!(
                "this command sweeps {}, got '{}'",
                hint.column_name(),
                parts[0]
            )));
        }
    }
    let start: f64 = parts[1]
        .parse()
        .map_err(|_| CliError::Usage(format!("bad sweep start '{}'", parts[1])))?;
    let stop: f64 = parts[2]
        .parse()
        .map_err(|_| CliError::Usage(format!("bad sweep stop '{}'", parts[2])))?;
    let points: usize = parts[3]
        .parse()
        .map_err(|_| CliError::Usage(format!("bad sweep point count '{}'", parts[3])))?;
    Ok((variable, start, stop, points))
}

fn open_output(path: &str) -> Result<Box<dyn Write>, CliError> {
    if path == "-" {
        Ok(Box::new(std::io::stdout().lock()))
    } else {
        Ok(Box::new(fs::File::create(path)?))
    }
}

fn command_line() -> String {
    let args: Vec<String> = std::env::args().collect();
    args.join(" ")
}

fn write_fit_result(
    out: &mut dyn Write,
    fit: &FitResult,
    command: &str,
    config_hash: u64,
) -> Result<(), CliError> {
    for (key, value) in standard_metadata(command, Some(config_hash)) {
        writeln!(out, "# {key}: {value}")?;
    }
    writeln!(out, "# residual_norm: {}", format_cell(fit.residual_norm))?;
    writeln!(out, "# converged: {}", fit.converged)?;
    writeln!(out, "# iterations: {}", fit.iterations)?;
    writeln!(out, "# singular_jacobian: {}", fit.singular_jacobian)?;
    writeln!(out, "parameter,value,sigma")?;
    for ((name, value), sigma) in fit.params.iter().zip(&fit.sigma) {
        writeln!(out, "{name},{},{}", format_cell(*value), format_cell(*sigma))?;
    }
    Ok(())
}

fn run() -> Result<(), CliError> {
    let cli = Cli::try_parse().map_err(|e| {
        // help/version requests are successful exits
        if e.use_stderr() {
            CliError::Usage(e.to_string())
        } else {
            print!("{e}");
            std::process::exit(0);
        }
    })?;
    match cli.command {
        Command::Iv { common, sweep } => {
            let (config, fixes, quad) = load_config(&common)?;
            let (variable, start, stop, points) =
                parse_sweep_token(&sweep, Some(SweepVariable::VDc))?;
            let spec = SweepSpec {
                variable,
                start,
                stop,
                points,
                fixed: fixes,
                outputs: vec![Observable::CurrentA],
            };
            let table = run_sweep(&config, &spec, &quad)?;
            let mut out = open_output(&common.output)?;
            let mut metadata = standard_metadata(&command_line(), Some(config.hash()));
            metadata.extend(table.metadata.iter().skip(1).cloned());
            write_table(
                &mut out,
                &metadata,
                &["v_dc_volts".to_string(), "current_amps".to_string()],
                &table.rows,
            )?;
        }
        Command::Sweep {
            common,
            sweep,
            outputs,
        } => {
            let (config, fixes, quad) = load_config(&common)?;
            let (variable, start, stop, points) = parse_sweep_token(&sweep, None)?;
            let outputs = match outputs {
                Some(list) => list
                    .split(',')
                    .map(|s| Observable::parse(s.trim()))
                    .collect::<Result<Vec<_>, _>>()?,
                None => SweepSpec::default_outputs(variable),
            };
            let spec = SweepSpec {
                variable,
                start,
                stop,
                points,
                fixed: fixes,
                outputs,
            };
            let table = run_sweep(&config, &spec, &quad)?;
            let mut out = open_output(&common.output)?;
            let metadata = standard_metadata(&command_line(), Some(config.hash()));
            write_table(&mut out, &metadata, &table.columns, &table.rows)?;
        }
        Command::FitIv {
            common,
            data,
            mode,
            fit_vac,
        } => {
            let (config, fixes, quad) = load_config(&common)?;
            let dataset = read_iv_csv(&fs::read_to_string(&data)?)?;
            let iv_mode = match mode {
                FitMode::Dc => IvFitMode::DcOnly,
                FitMode::Noise => {
                    let omega_ac = fixes
                        .omega_ac
                        .unwrap_or_else(|| config.si("omega_n_afm"));
                    let v_ac_known = fixes
                        .p_noise_dbm
                        .map(|dbm| vac_from_power(dbm_to_watts(dbm), config.si("z_0")));
                    let v_ac = if fit_vac {
                        VacMode::Fit {
                            init: v_ac_known.unwrap_or(1e-4),
                        }
                    } else {
                        VacMode::Fixed(v_ac_known.ok_or_else(|| {
                            CliError::Usage(
                                "noise mode needs --fix p_noise=<dBm> (or --fit-vac)".into(),
                            )
                        })?)
                    };
                    IvFitMode::NoiseDriven { omega_ac, v_ac }
                }
            };
            let fit = fit_iv_curve(
                &dataset,
                &config.junction(),
                iv_mode,
                &quad,
                &IvFitOptions::default(),
            )?;
            let mut out = open_output(&common.output)?;
            write_fit_result(&mut out, &fit, &command_line(), config.hash())?;
        }
        Command::FitSpectrum {
            common,
            data,
            family,
            linewidth,
            init_nbar,
        } => {
            let (config, _fixes, _quad) = load_config(&common)?;
            let trace = read_spectrum_csv(&fs::read_to_string(&data)?)?;
            let width_hz = parse_frequency_hz(&linewidth)?;
            let peaks = config.peak_model(width_hz, 0.0);
            let n_max = config.si("n_max") as usize;
            let fit = fit_population(&trace, family.into(), &peaks, n_max, init_nbar)?;
            let mut out = open_output(&common.output)?;
            write_fit_result(&mut out, &fit, &command_line(), config.hash())?;
            // convenience: effective temperature of the fitted occupation
            let n_bar = fit.value("n_bar").unwrap();
            if n_bar > 0.0 {
                writeln!(
                    out,
                    "t_eff_K,{},{}",
                    format_cell(temp_from_occupation(n_bar, config.si("omega_r"))),
                    format_cell(f64::NAN)
                )?;
            }
        }
        Command::SynthSpectrum {
            common,
            family,
            n_bar,
            linewidth,
            baseline,
        } => {
            let (config, _fixes, _quad) = load_config(&common)?;
            let n_max = config.si("n_max") as usize;
            let dist = match family {
                Family::Thermal => thermal_distribution(n_bar, n_max),
                Family::Poisson => poisson_distribution(n_bar, n_max),
            };
            let width_hz = parse_frequency_hz(&linewidth)?;
            let peaks = config.peak_model(width_hz, baseline);
            let grid = default_grid(&peaks, n_max);
            let trace = synthesize_spectrum(&dist, &peaks, &grid)?;
            let rows: Vec<Vec<f64>> = trace
                .detuning
                .iter()
                .zip(&trace.magnitude)
                .map(|(&d, &m)| vec![d, m])
                .collect();
            let mut out = open_output(&common.output)?;
            write_table(
                &mut out,
                &standard_metadata(&command_line(), Some(config.hash())),
                &["detuning_hz".to_string(), "magnitude".to_string()],
                &rows,
            )?;
        }
        Command::Convert { what } => {
            let mut out = std::io::stdout().lock();
            match what {
                Conversion::NbarTemp { n_bar, freq } => {
                    let omega = angular(parse_frequency_hz(&freq)?);
                    writeln!(out, "t_K,{}", format_cell(temp_from_occupation(n_bar, omega)))?;
                }
                Conversion::TempNbar { temp, freq } => {
                    let (value, unit) = split_number_unit(&temp)?;
                    let kelvin = match unit.as_str() {
                        "K" => value,
                        "mK" => value * 1e-3,
                        _ => {
                            return Err(CliError::Usage(format!(
                                "temperature needs K or mK, got '{temp}'"
                            )))
                        }
                    };
                    let omega = angular(parse_frequency_hz(&freq)?);
                    writeln!(out, "n_bar,{}", format_cell(bose_occupation(kelvin, omega)))?;
                }
                Conversion::DbmWatts { dbm } => {
                    writeln!(out, "p_W,{}", format_cell(dbm_to_watts(dbm)))?;
                }
                Conversion::WattsDbm { watts } => {
                    if watts <= 0.0 {
                        return Err(CliError::Usage("power must be positive".into()));
                    }
                    writeln!(out, "p_dbm,{}", format_cell(watts_to_dbm(watts)))?;
                }
                Conversion::PnVac { dbm, z0 } => {
                    if z0 <= 0.0 {
                        return Err(CliError::Usage("impedance must be positive".into()));
                    }
                    writeln!(
                        out,
                        "v_ac_volts,{}",
                        format_cell(vac_from_power(dbm_to_watts(dbm), z0))
                    )?;
                }
                Conversion::VacPn { vac, z0 } => {
                    if vac <= 0.0 || z0 <= 0.0 {
                        return Err(CliError::Usage(
                            "amplitude and impedance must be positive".into(),
                        ));
                    }
                    // invert V_ac = 2 sqrt(2 P Z)
                    let p = vac * vac / (8.0 * z0);
                    writeln!(out, "p_n_dbm,{}", format_cell(watts_to_dbm(p)))?;
                }
            }
        }
    }
    Ok(())
}

fn parse_frequency_hz(token: &str) -> Result<f64, CliError> {
    let (value, unit) = split_number_unit(token)?;
    let hz = match unit.as_str() {
        "Hz" => value,
        "kHz" => value * 1e3,
        "MHz" => value * 1e6,
        "GHz" => value * 1e9,
        _ => {
            return Err(CliError::Usage(format!(
                "expected a frequency with unit (Hz/kHz/MHz/GHz), got '{token}'"
            )))
        }
    };
    Ok(hz)
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
