//! `goldenrate`: correlation functions, golden-rule rates and self-checks from
//! a JSON run config or command-line flags.

mod config;
mod output;

use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use goldenrate::correlations::CorrelationModel;
use goldenrate::fock_oracle::oracle_sweep;
use goldenrate::presets::{BathPreset, ModelCase};
use goldenrate::rate_engine::{kappa, PreparedRate, RateError};
use goldenrate::spectral_density::CrossBoundReport;
use goldenrate::units::constants::PER_PS_TO_PER_NS;
use goldenrate::units::NdcUnit;
use goldenrate::{EnergyUnit, EnergyValue};

use config::{Bath, GapRange, Gaps, Input, Resolved, RouteChoice, RunConfig, Thermal};
use output::{header, num, open, print, write_table};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Bound(CrossBoundReport),
    Numerical(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Bound(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Bound(r) => write!(f, "cross-channel bound |J_F| <= (J + J_D)/2 violated:\n{r}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
        }
    }
}

impl From<RateError> for CliError {
    fn from(e: RateError) -> Self {
        match e {
            RateError::Invalid(m) => CliError::Config(m),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "goldenrate", version, about = "Golden-rule rates with derivative couplings")]
struct Cli {
    #[command(flatten)]
    opts: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// K(t), D(t), F(t) on a uniform time grid.
    Corr {
        /// Last time (ps, or 1/ω_c in reduced units).
        #[arg(long)]
        t_end: Option<f64>,
    },
    /// Rate at a single gap.
    Rate,
    /// Rates over a list or range of gaps.
    Scan,
    /// Check the cross-channel bound and report violations.
    Validate,
    /// Fock-space check of the single-mode trace identities.
    Oracle {
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// ωt samples in [0, 4π].
        #[arg(long, default_value_t = 64)]
        points: usize,
    },
}

#[derive(Args)]
struct Overrides {
    /// JSON run config; flags below override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Named reduced-unit model case (I-A … II-C).
    #[arg(long, global = true, conflicts_with = "modes")]
    case: Option<ModelCase>,
    /// Mode table (wavenumber_cm1, g, ndc_im).
    #[arg(long, global = true)]
    modes: Option<PathBuf>,
    /// Unit of ndc_im when the file does not declare one (au or sqrt_radps).
    #[arg(long, global = true, value_parser = parse_ndc)]
    ndc_unit: Option<NdcUnit>,
    /// Bath preset A–E for mode input.
    #[arg(long, global = true)]
    bath: Option<BathPreset>,
    /// Temperature in K (dimensional input).
    #[arg(long, global = true, conflicts_with_all = ["kbt", "zero_temperature"])]
    temperature: Option<f64>,
    /// k_B T in the input's energy unit.
    #[arg(long, global = true, conflicts_with = "zero_temperature")]
    kbt: Option<f64>,
    #[arg(long, global = true)]
    zero_temperature: bool,
    /// Gap E₁ − E₂, e.g. `1.7816eV`, `14500cm-1` or a bare reduced value.
    /// Repeatable.
    #[arg(long, global = true, allow_hyphen_values = true)]
    gap: Vec<String>,
    /// Gap range start:stop:step, in --gap-unit.
    #[arg(long, global = true, allow_hyphen_values = true)]
    gaps: Option<String>,
    #[arg(long, global = true)]
    gap_unit: Option<EnergyUnit>,
    #[arg(long, global = true, value_parser = parse_route)]
    route: Option<RouteChoice>,
    /// Write CSV here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Validate and print the resolved parameters as JSON without computing.
    #[arg(long, global = true)]
    dry_run: bool,
    #[arg(long, short, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

fn parse_ndc(s: &str) -> Result<NdcUnit, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_route(s: &str) -> Result<RouteChoice, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| format!("unknown route '{s}' (auto, closed_form, quadrature, discrete)"))
}

impl Overrides {
    fn merged(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(c) = self.case {
            cfg.input = Some(Input::Case(c));
        }
        if let Some(path) = &self.modes {
            cfg.input = Some(Input::Modes {
                path: path.clone(),
                ndc_unit: self.ndc_unit.unwrap_or_default(),
            });
            cfg.base_dir = None;
        } else if let (Some(u), Some(Input::Modes { ndc_unit, .. })) = (self.ndc_unit, cfg.input.as_mut()) {
            *ndc_unit = u;
        }
        if let Some(b) = self.bath {
            cfg.bath = Some(Bath::Preset(b));
        }
        if let Some(t) = self.temperature {
            cfg.thermal = Some(Thermal::TemperatureK(t));
        }
        if let Some(k) = self.kbt {
            cfg.thermal = Some(Thermal::Kbt(k));
        }
        if self.zero_temperature {
            cfg.thermal = Some(Thermal::Zero);
        }
        if !self.gap.is_empty() || self.gaps.is_some() {
            cfg.gaps = Some(self.gap_block()?);
        } else if let (Some(u), Some(g)) = (self.gap_unit, cfg.gaps.as_mut()) {
            g.unit = Some(u);
        }
        if let Some(r) = self.route {
            cfg.grid.route = r;
        }
        Ok(cfg)
    }

    fn gap_block(&self) -> Result<Gaps, CliError> {
        let mut unit = self.gap_unit;
        let mut values = Vec::new();
        for s in &self.gap {
            if let Ok(x) = s.trim().parse::<f64>() {
                values.push(x);
                continue;
            }
            let v: EnergyValue = s.parse().map_err(|e| CliError::Config(format!("--gap {s}: {e}")))?;
            match unit {
                Some(u) if u != v.unit => {
                    return Err(CliError::Config(format!("--gap {s}: mixed units {u} and {}", v.unit)))
                }
                _ => unit = Some(v.unit),
            }
            values.push(v.value);
        }
        let range = match &self.gaps {
            None => None,
            Some(s) => {
                let parts: Vec<f64> = s
                    .split(':')
                    .map(|p| p.trim().parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| CliError::Config(format!("--gaps {s}: expected start:stop:step")))?;
                match parts[..] {
                    [start, stop, step] => Some(GapRange { start, stop, step }),
                    _ => return Err(CliError::Config(format!("--gaps {s}: expected start:stop:step"))),
                }
            }
        };
        Ok(Gaps { values, range, unit })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.opts.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("goldenrate: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: &Cli) -> Result<u8, CliError> {
    if let Command::Oracle { tol, points } = cli.command {
        return oracle(cli, tol, points);
    }
    let cfg = cli.opts.merged()?;
    let canonical = cfg.canonical_json();
    if let Command::Validate = cli.command {
        return validate(cli, &cfg);
    }
    let resolved = cfg.resolve()?;
    if cli.opts.dry_run {
        print(&serde_json::to_string_pretty(&resolved).expect("resolved parameters serialize"))?;
        return Ok(0);
    }
    let model = resolved.model()?;
    info!("route {}, λ = {:.6e}", model.route(), resolved.lambda);
    match cli.command {
        Command::Corr { t_end } => corr(cli, &resolved, model.as_ref(), &canonical, t_end),
        Command::Rate => {
            if resolved.gaps.len() != 1 {
                return Err(CliError::Config(format!(
                    "rate needs exactly one gap, got {} (use scan for several)",
                    resolved.gaps.len()
                )));
            }
            rates(cli, "rate", &resolved, model.as_ref(), &canonical)
        }
        Command::Scan => {
            if resolved.gaps.is_empty() {
                return Err(CliError::Config("scan needs gaps (--gap, --gaps or a gaps block)".into()));
            }
            rates(cli, "scan", &resolved, model.as_ref(), &canonical)
        }
        Command::Validate | Command::Oracle { .. } => unreachable!(),
    }
}

fn units_line(r: &Resolved) -> (&'static str, String) {
    if r.dimensional {
        ("units", "time=ps energy=rad_per_ps".into())
    } else {
        ("units", "reduced (hbar = k_B = omega_c = 1)".into())
    }
}

fn corr(
    cli: &Cli,
    r: &Resolved,
    model: &dyn CorrelationModel,
    canonical: &str,
    t_end: Option<f64>,
) -> Result<u8, CliError> {
    let t_end = match t_end.or(r.rate_options.t_max) {
        Some(t) if t > 0.0 && t.is_finite() => t,
        Some(t) => return Err(CliError::Config(format!("t_end must be positive, got {t}"))),
        None => 4.0 * PI / model.max_frequency().max(f64::MIN_POSITIVE),
    };
    let n = r.corr_points;
    let rows: Vec<Vec<String>> = (0..n)
        .map(|i| {
            let t = t_end * i as f64 / (n - 1) as f64;
            let s = model.sample(t);
            [t, s.k.re, s.k.im, s.d.re, s.d.im, s.f.re, s.f.im].iter().map(|&x| num(x)).collect()
        })
        .collect();
    let t_col = if r.dimensional { "t_ps" } else { "t" };
    let head = header(
        "corr",
        canonical,
        &[units_line(r), ("route", model.route().to_string()), ("lambda", num(r.lambda))],
    );
    let mut out = open(cli.opts.output.as_deref())?;
    write_table(&mut *out, &head, &[t_col, "K_re", "K_im", "D_re", "D_im", "F_re", "F_im"], &rows)?;
    Ok(0)
}

fn rates(
    cli: &Cli,
    command: &str,
    r: &Resolved,
    model: &dyn CorrelationModel,
    canonical: &str,
) -> Result<u8, CliError> {
    let prepared = PreparedRate::from_model(model, &r.gaps, &r.rate_options)?;
    let results = prepared.scan(&r.gaps);
    let (scale, rate_unit) = if r.dimensional {
        (PER_PS_TO_PER_NS, "ns^-1")
    } else {
        (1.0, "reduced (omega_c)")
    };
    let with_kappa = r.flags.kappa && !r.dimensional;
    let kbt = r.thermal.kbt();

    let mut failures = 0;
    let mut rows = Vec::with_capacity(results.len());
    for (given, res) in r.gaps_given.iter().zip(&results) {
        let mut row = vec![num(*given)];
        match res {
            Ok(k) => {
                row.push(num(k.k_fgr * scale));
                row.push(k.k_condon.map_or(String::new(), |c| num(c * scale)));
                if with_kappa {
                    row.push(num(kappa(k.k_fgr, kbt, k.lambda).ln()));
                }
                row.push(num(k.imag_residual));
                row.push("ok".into());
            }
            Err(e) => {
                failures += 1;
                row.extend(std::iter::repeat_n(String::new(), if with_kappa { 4 } else { 3 }));
                row.push(format!("error: {e}"));
            }
        }
        rows.push(row);
    }

    let mut columns = vec!["gap", "k_fgr", "k_condon"];
    if with_kappa {
        columns.push("ln_kappa");
    }
    columns.extend(["imag_residual", "status"]);
    let extra = [
        units_line(r),
        ("gap_unit", r.gap_unit_label().to_string()),
        ("rate_unit", rate_unit.to_string()),
        ("kappa", "sqrt(k_B T lambda / pi) * k_fgr".into()),
        ("route", model.route().to_string()),
        ("lambda", num(r.lambda)),
        ("dt", num(prepared.grid().dt)),
        ("t_max", num(prepared.t_max())),
    ];
    let head = header(command, canonical, &extra);
    let mut out = open(cli.opts.output.as_deref())?;
    write_table(&mut *out, &head, &columns, &rows)?;
    if failures == results.len() {
        return Err(CliError::Numerical(format!("all {failures} gaps failed")));
    }
    Ok(if failures > 0 { 2 } else { 0 })
}

fn validate(cli: &Cli, cfg: &RunConfig) -> Result<u8, CliError> {
    match cfg.resolve() {
        Ok(resolved) => {
            if cli.opts.dry_run {
                print(&serde_json::to_string_pretty(&resolved).expect("resolved parameters serialize"))?;
            } else {
                print(&format!("ok: cross-channel bound satisfied; λ = {}", num(resolved.lambda)))?;
            }
            Ok(0)
        }
        Err(CliError::Bound(report)) => {
            print(&format!("bound violated:\n{report}"))?;
            Ok(1)
        }
        Err(e) => Err(e),
    }
}

fn oracle(cli: &Cli, tol: f64, points: usize) -> Result<u8, CliError> {
    if points < 2 || !(tol > 0.0) {
        return Err(CliError::Config("oracle needs points >= 2 and tol > 0".into()));
    }
    let gs = [0.1, 0.5, 1.0];
    let bws = [0.5, 1.0, 5.0, f64::INFINITY];
    let wts: Vec<f64> = (0..points).map(|i| 4.0 * PI * i as f64 / (points - 1) as f64).collect();
    if cli.opts.dry_run {
        print(&serde_json::json!({ "g": gs, "beta_omega": ["0.5", "1", "5", "inf"], "points": points, "tol": tol }).to_string())?;
        return Ok(0);
    }
    let rows = oracle_sweep(&gs, &bws, &wts).map_err(|e| CliError::Numerical(e.to_string()))?;
    let names = ["C", "C_p1", "C_p2", "C_pp"];
    let mut table = Vec::new();
    let mut all_pass = true;
    for (i, name) in names.iter().enumerate() {
        let worst = rows
            .iter()
            .max_by(|a, b| a.deviation[i].total_cmp(&b.deviation[i]))
            .expect("sweep is non-empty");
        let pass = worst.deviation[i] <= tol;
        all_pass &= pass;
        table.push(vec![
            name.to_string(),
            num(worst.deviation[i]),
            num(worst.g),
            if worst.beta_omega.is_infinite() { "inf".into() } else { num(worst.beta_omega) },
            num(worst.omega_t),
            if pass { "PASS" } else { "FAIL" }.into(),
        ]);
    }
    let canonical = format!("{{\"oracle\":{{\"points\":{points},\"tol\":{tol:e}}}}}");
    let head = header("oracle", &canonical, &[("tolerance", num(tol))]);
    let mut out = open(cli.opts.output.as_deref())?;
    write_table(&mut *out, &head, &["identity", "max_abs_dev", "at_g", "at_beta_omega", "at_omega_t", "result"], &table)?;
    Ok(if all_pass { 0 } else { 2 })
}
