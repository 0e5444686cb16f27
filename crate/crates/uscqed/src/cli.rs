//! Command-line front end: parse a TOML run configuration, dispatch to the
//! compute modules, and emit CSV tables, JSON summaries, SVG plots, and a
//! run manifest.
//!
//! Unit boundary: everything here speaks fF, nH, GHz (ordinary frequency),
//! ns, and mK; conversion to SI happens once, on resolution. Unknown config
//! keys are errors, not warnings. Identical config + seed produces
//! byte-identical CSV output; the manifest differs only in wall time.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::circuit::{
    derive_effective_params, CircuitSpec, DerivedParams, OneCpbSpec, TwoCpbSpec,
    TwoOscillatorSpec,
};
use crate::constants::{
    ghz_to_joule, ghz_to_rad_per_s, mhz_to_rad_per_s, mk_to_kelvin, rad_per_s_to_ghz,
    FEMTOFARAD, H_PLANCK, NANOHENRY, NANOSECOND,
};
use crate::dynamics::{
    run_transfer_noisy, run_transfer_unitary, NoiseSpec, QstProtocol, QstSummary, Trajectory,
    DEFAULT_SAMPLE_STEP, DEFAULT_TIME_STEP,
};
use crate::error::{Error, Result};
use crate::models::{recommended_n_fock, MediatorParams, DEFAULT_N_MAX};
use crate::optimize::{
    coupling_ratio, coupling_ratios_two_cpb, minimize, Bound, Objective, OneCpbSpace,
    SearchSpace, TwoCpbSpace,
};
use crate::plot;
use crate::spectrum::{
    forbidden_transitions, mediator_dressed, ratio_sweep, spectrum_sweep, RatioGrid,
    DEFAULT_FORBIDDEN_TOL, FORBIDDEN_SCAN_LEVELS,
};

/// Version tag of the manifest layout.
pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

/// Default simplex restarts for the search command.
pub const DEFAULT_RESTARTS: usize = 32;

/// Default iteration budget per restart.
pub const DEFAULT_MAX_ITERS: usize = 1200;

// ---------------------------------------------------------------------------
// command line

#[derive(Parser, Clone, Debug)]
#[command(
    name = "uscqed",
    version,
    about = "Design and simulate ultrastrongly coupled charge-qubit circuits"
)]
pub struct Cli {
    /// TOML run configuration (sections [circuit], [spectrum], ...).
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Output directory for all artifacts; created if missing.
    #[arg(long, global = true, default_value = "out", value_name = "DIR")]
    pub out_dir: PathBuf,

    /// Override one config key before parsing, e.g. --set qst.n_fock=24.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,

    /// Seed for the stochastic commands; recorded in every manifest.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Clone, Debug)]
pub enum Command {
    /// Reduce a circuit spec to effective parameters (frequencies,
    /// impedance, couplings, coupling ratio).
    Derive,

    /// Lowest levels of the circuit-reduced model and the Rabi model
    /// across a normalized coupling grid.
    Spectrum {
        /// Largest g_tilde / omega_r; the grid steps by 0.01.
        #[arg(long)]
        g_max: Option<f64>,
        /// Levels per model.
        #[arg(long)]
        levels: Option<usize>,
    },

    /// Coupling ratio and resonance mismatch along a design axis.
    RatioSweep {
        /// "josephson_energy" or "impedance_scale".
        #[arg(long)]
        axis: Option<String>,
        /// Grid size.
        #[arg(long)]
        points: Option<usize>,
    },

    /// Search the fabrication box for the best circuit under a built-in
    /// objective.
    Optimize {
        /// "f1" (single CPB) or "f2" (two CPBs).
        #[arg(long)]
        objective: Option<String>,
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long)]
        max_iters: Option<usize>,
    },

    /// Simulate the mediated state transfer and track the fidelity peak.
    SimulateQst {
        /// Mediator coupling g_tilde / omega_r.
        #[arg(long)]
        g_ratio: Option<f64>,
        /// "noisy" (master equation) or "unitary" (three-level transmons).
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        t_final_ns: Option<f64>,
        #[arg(long)]
        dt_ns: Option<f64>,
        #[arg(long)]
        temperature_mk: Option<f64>,
    },

    /// Scan the dressed charge operator for transitions it cannot drive.
    Forbidden {
        #[arg(long)]
        g_ratio: Option<f64>,
        #[arg(long)]
        from_level: Option<usize>,
        /// Flag |X_jk| below this fraction of max |X|.
        #[arg(long)]
        tol: Option<f64>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Derive => "derive",
            Command::Spectrum { .. } => "spectrum",
            Command::RatioSweep { .. } => "ratio-sweep",
            Command::Optimize { .. } => "optimize",
            Command::SimulateQst { .. } => "simulate-qst",
            Command::Forbidden { .. } => "forbidden",
        }
    }
}

/// One fully specified run: what to do, where to read knobs, where to write.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: Command,
    pub config_path: Option<PathBuf>,
    pub out_dir: PathBuf,
    /// Dotted-key overrides applied to the file config before parsing.
    pub overrides: Vec<(String, String)>,
    pub seed: u64,
}

impl Cli {
    pub fn into_run_config(self) -> Result<RunConfig> {
        let overrides = self
            .overrides
            .iter()
            .map(|kv| {
                kv.split_once('=')
                    .map(|(k, v)| (k.trim().to_string(), v.to_string()))
                    .ok_or_else(|| {
                        Error::Config(format!("--set expects KEY=VALUE, got {kv:?}"))
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RunConfig {
            command: self.command,
            config_path: self.config,
            out_dir: self.out_dir,
            overrides,
            seed: self.seed,
        })
    }
}

// ---------------------------------------------------------------------------
// config file schema (input units: fF, nH, GHz, ns, mK)

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub circuit: Option<CircuitSection>,
    pub spectrum: Option<SpectrumSection>,
    pub ratio_sweep: Option<RatioSweepSection>,
    pub optimize: Option<OptimizeSection>,
    pub qst: Option<QstSection>,
    pub noise: Option<NoiseSection>,
    pub forbidden: Option<ForbiddenSection>,
}

/// Circuit element values. Which fields apply depends on `topology`; setting
/// a field the topology does not use is an error.
#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitSection {
    /// "one_cpb", "two_oscillator", or "two_cpb".
    pub topology: Option<String>,
    pub c_g: Option<f64>,
    pub c_j: Option<f64>,
    pub c_c: Option<f64>,
    pub c_r: Option<f64>,
    pub c_p: Option<f64>,
    pub l_r: Option<f64>,
    pub e_j: Option<f64>,
    pub n_g: Option<f64>,
    pub l_j: Option<f64>,
    pub c_g1: Option<f64>,
    pub c_j1: Option<f64>,
    pub c_g2: Option<f64>,
    pub c_j2: Option<f64>,
    pub e_j1: Option<f64>,
    pub e_j2: Option<f64>,
    pub n_g1: Option<f64>,
    pub n_g2: Option<f64>,
}

#[derive(Clone, Copy, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    pub g_max: Option<f64>,
    pub levels: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RatioSweepSection {
    /// "josephson_energy" (GHz grid) or "impedance_scale" (dimensionless).
    pub axis: Option<String>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub points: Option<usize>,
    /// "log" or "linear".
    pub spacing: Option<String>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeSection {
    /// "f1" or "f2".
    pub objective: Option<String>,
    pub restarts: Option<usize>,
    pub max_iters: Option<usize>,
    /// Capacitance box, fF.
    pub cap_lo: Option<f64>,
    pub cap_hi: Option<f64>,
    /// Inductance box, nH.
    pub ind_lo: Option<f64>,
    pub ind_hi: Option<f64>,
    /// Josephson energy box, GHz.
    pub ej_lo: Option<f64>,
    pub ej_hi: Option<f64>,
    /// Gate charge, pinned (not searched).
    pub n_g: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct QstSection {
    pub g_ratio: Option<f64>,
    pub omega_r_ghz: Option<f64>,
    pub lambda_ratio: Option<f64>,
    pub g12_ratio: Option<f64>,
    pub n_fock: Option<usize>,
    pub dressed_levels: Option<usize>,
    pub anharmonicity: Option<f64>,
    /// "noisy" or "unitary".
    pub mode: Option<String>,
    pub t_final_ns: Option<f64>,
    pub dt_ns: Option<f64>,
    pub sample_dt_ns: Option<f64>,
}

#[derive(Clone, Copy, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub temperature_mk: Option<f64>,
    pub kappa_mhz: Option<f64>,
    pub gamma_mhz: Option<f64>,
    pub gamma_phi_cpb_mhz: Option<f64>,
    pub gamma_m_mhz: Option<f64>,
    pub gamma_phi_m_mhz: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ForbiddenSection {
    pub g_ratio: Option<f64>,
    pub omega_r_ghz: Option<f64>,
    pub g12_ratio: Option<f64>,
    pub from_level: Option<usize>,
    pub tol: Option<f64>,
    pub n_fock: Option<usize>,
    pub dressed_levels: Option<usize>,
}

/// Load the config file (or start empty), apply `--set` overrides onto the
/// raw TOML tree, then parse. Unknown keys anywhere fail the parse.
pub fn load_config(path: Option<&Path>, overrides: &[(String, String)]) -> Result<FileConfig> {
    let mut table = match path {
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
            text.parse::<toml::Table>()
                .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
        }
        None => toml::Table::new(),
    };
    for (key, value) in overrides {
        apply_override(&mut table, key, value)?;
    }
    toml::Value::Table(table)
        .try_into::<FileConfig>()
        .map_err(|e| Error::Config(e.to_string().trim().to_string()))
}

/// Set one dotted key in the raw tree, parsing the value as a TOML literal
/// (falling back to a string).
fn apply_override(table: &mut toml::Table, key: &str, value: &str) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("malformed override key {key:?}")));
    }
    let parsed = format!("v = {value}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()));
    let mut node = table;
    for part in &parts[..parts.len() - 1] {
        node = node
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| {
                Error::Config(format!("override key {key:?} descends into a non-table value"))
            })?;
    }
    node.insert(parts[parts.len() - 1].to_string(), parsed);
    Ok(())
}

// ---------------------------------------------------------------------------
// resolution helpers

fn req(section: &str, name: &str, v: Option<f64>) -> Result<f64> {
    v.ok_or_else(|| Error::Config(format!("[{section}] is missing required field {name}")))
}

fn reject_unused(topology: &str, set_fields: &[(&str, bool)], allowed: &[&str]) -> Result<()> {
    for &(name, is_set) in set_fields {
        if is_set && !allowed.contains(&name) {
            return Err(Error::Config(format!(
                "[circuit] field {name} does not apply to topology {topology}"
            )));
        }
    }
    Ok(())
}

/// Circuit section -> SI spec plus the resolved input-unit view for the
/// manifest.
fn resolve_circuit(section: Option<&CircuitSection>) -> Result<(CircuitSpec, serde_json::Value)> {
    let sec = section.ok_or_else(|| {
        Error::Config("this command needs a [circuit] section (fF / nH / GHz)".into())
    })?;
    let topology = sec.topology.as_deref().ok_or_else(|| {
        Error::Config("[circuit] needs topology = one_cpb | two_oscillator | two_cpb".into())
    })?;
    let set_fields = [
        ("c_g", sec.c_g.is_some()),
        ("c_j", sec.c_j.is_some()),
        ("c_c", sec.c_c.is_some()),
        ("c_r", sec.c_r.is_some()),
        ("c_p", sec.c_p.is_some()),
        ("l_r", sec.l_r.is_some()),
        ("e_j", sec.e_j.is_some()),
        ("n_g", sec.n_g.is_some()),
        ("l_j", sec.l_j.is_some()),
        ("c_g1", sec.c_g1.is_some()),
        ("c_j1", sec.c_j1.is_some()),
        ("c_g2", sec.c_g2.is_some()),
        ("c_j2", sec.c_j2.is_some()),
        ("e_j1", sec.e_j1.is_some()),
        ("e_j2", sec.e_j2.is_some()),
        ("n_g1", sec.n_g1.is_some()),
        ("n_g2", sec.n_g2.is_some()),
    ];
    match topology {
        "one_cpb" => {
            reject_unused(
                topology,
                &set_fields,
                &["c_g", "c_j", "c_c", "c_r", "c_p", "l_r", "e_j", "n_g"],
            )?;
            let (c_g, c_j, c_c, c_r, c_p, l_r, e_j) = (
                req("circuit", "c_g", sec.c_g)?,
                req("circuit", "c_j", sec.c_j)?,
                req("circuit", "c_c", sec.c_c)?,
                req("circuit", "c_r", sec.c_r)?,
                req("circuit", "c_p", sec.c_p)?,
                req("circuit", "l_r", sec.l_r)?,
                req("circuit", "e_j", sec.e_j)?,
            );
            let n_g = sec.n_g.unwrap_or(0.5);
            let spec = CircuitSpec::OneCpb(OneCpbSpec {
                c_g: c_g * FEMTOFARAD,
                c_j: c_j * FEMTOFARAD,
                c_c: c_c * FEMTOFARAD,
                c_r: c_r * FEMTOFARAD,
                c_p: c_p * FEMTOFARAD,
                l_r: l_r * NANOHENRY,
                e_j: ghz_to_joule(e_j),
                n_g,
            });
            let view = json!({
                "topology": "one_cpb",
                "c_g_ff": c_g, "c_j_ff": c_j, "c_c_ff": c_c, "c_r_ff": c_r,
                "c_p_ff": c_p, "l_r_nh": l_r, "e_j_ghz": e_j, "n_g": n_g,
            });
            Ok((spec, view))
        }
        "two_oscillator" => {
            reject_unused(
                topology,
                &set_fields,
                &["c_g", "c_j", "c_c", "c_r", "c_p", "l_r", "l_j"],
            )?;
            let (c_g, c_j, c_c, c_r, c_p, l_r, l_j) = (
                req("circuit", "c_g", sec.c_g)?,
                req("circuit", "c_j", sec.c_j)?,
                req("circuit", "c_c", sec.c_c)?,
                req("circuit", "c_r", sec.c_r)?,
                req("circuit", "c_p", sec.c_p)?,
                req("circuit", "l_r", sec.l_r)?,
                req("circuit", "l_j", sec.l_j)?,
            );
            let spec = CircuitSpec::TwoOscillator(TwoOscillatorSpec {
                c_g: c_g * FEMTOFARAD,
                c_j: c_j * FEMTOFARAD,
                c_c: c_c * FEMTOFARAD,
                c_r: c_r * FEMTOFARAD,
                c_p: c_p * FEMTOFARAD,
                l_r: l_r * NANOHENRY,
                l_j: l_j * NANOHENRY,
            });
            let view = json!({
                "topology": "two_oscillator",
                "c_g_ff": c_g, "c_j_ff": c_j, "c_c_ff": c_c, "c_r_ff": c_r,
                "c_p_ff": c_p, "l_r_nh": l_r, "l_j_nh": l_j,
            });
            Ok((spec, view))
        }
        "two_cpb" => {
            reject_unused(
                topology,
                &set_fields,
                &[
                    "c_g1", "c_j1", "c_g2", "c_j2", "c_c", "c_r", "l_r", "e_j1", "e_j2", "n_g1",
                    "n_g2",
                ],
            )?;
            let (c_g1, c_j1, c_g2, c_j2, c_c, c_r, l_r, e_j1, e_j2) = (
                req("circuit", "c_g1", sec.c_g1)?,
                req("circuit", "c_j1", sec.c_j1)?,
                req("circuit", "c_g2", sec.c_g2)?,
                req("circuit", "c_j2", sec.c_j2)?,
                req("circuit", "c_c", sec.c_c)?,
                req("circuit", "c_r", sec.c_r)?,
                req("circuit", "l_r", sec.l_r)?,
                req("circuit", "e_j1", sec.e_j1)?,
                req("circuit", "e_j2", sec.e_j2)?,
            );
            let n_g1 = sec.n_g1.unwrap_or(0.5);
            let n_g2 = sec.n_g2.unwrap_or(0.5);
            let spec = CircuitSpec::TwoCpb(TwoCpbSpec {
                c_g1: c_g1 * FEMTOFARAD,
                c_j1: c_j1 * FEMTOFARAD,
                c_g2: c_g2 * FEMTOFARAD,
                c_j2: c_j2 * FEMTOFARAD,
                c_c: c_c * FEMTOFARAD,
                c_r: c_r * FEMTOFARAD,
                l_r: l_r * NANOHENRY,
                e_j1: ghz_to_joule(e_j1),
                e_j2: ghz_to_joule(e_j2),
                n_g1,
                n_g2,
            });
            let view = json!({
                "topology": "two_cpb",
                "c_g1_ff": c_g1, "c_j1_ff": c_j1, "c_g2_ff": c_g2, "c_j2_ff": c_j2,
                "c_c_ff": c_c, "c_r_ff": c_r, "l_r_nh": l_r,
                "e_j1_ghz": e_j1, "e_j2_ghz": e_j2, "n_g1": n_g1, "n_g2": n_g2,
            });
            Ok((spec, view))
        }
        other => Err(Error::Config(format!(
            "unknown topology {other:?}; expected one_cpb, two_oscillator, or two_cpb"
        ))),
    }
}

fn resolve_noise(section: Option<&NoiseSection>, temperature_mk: Option<f64>) -> (NoiseSpec, f64) {
    let sec = section.copied().unwrap_or_default();
    let t_mk = temperature_mk.or(sec.temperature_mk).unwrap_or(50.0);
    let mut noise = NoiseSpec::reference(mk_to_kelvin(t_mk));
    if let Some(v) = sec.kappa_mhz {
        noise.kappa = mhz_to_rad_per_s(v);
    }
    if let Some(v) = sec.gamma_mhz {
        noise.gamma = mhz_to_rad_per_s(v);
    }
    if let Some(v) = sec.gamma_phi_cpb_mhz {
        noise.gamma_phi_cpb = mhz_to_rad_per_s(v);
    }
    if let Some(v) = sec.gamma_m_mhz {
        noise.gamma_m = [mhz_to_rad_per_s(v); 2];
    }
    if let Some(v) = sec.gamma_phi_m_mhz {
        noise.gamma_phi_m = [mhz_to_rad_per_s(v); 2];
    }
    (noise, t_mk)
}

// ---------------------------------------------------------------------------
// artifact plumbing

/// Scientific notation with fixed width; the byte format of every CSV value.
fn sci(v: f64) -> String {
    format!("{v:.12e}")
}

struct Artifacts {
    dir: PathBuf,
    names: Vec<String>,
}

impl Artifacts {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Artifacts {
            dir: dir.to_path_buf(),
            names: Vec::new(),
        })
    }

    fn write_text(&mut self, name: &str, contents: &str) -> Result<()> {
        fs::write(self.dir.join(name), contents)?;
        self.names.push(name.to_string());
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| Error::Internal(format!("serializing {name}: {e}")))?;
        text.push('\n');
        self.write_text(name, &text)
    }

    fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).map_err(csv_err)?;
        for row in rows {
            w.write_record(row).map_err(csv_err)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::Internal(format!("flushing {name}: {e}")))?;
        fs::write(self.dir.join(name), bytes)?;
        self.names.push(name.to_string());
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

#[derive(Serialize)]
struct Manifest {
    schema_version: u32,
    command: String,
    package: &'static str,
    package_version: &'static str,
    seed: u64,
    wall_time_s: f64,
    resolved_config: serde_json::Value,
    outputs: Vec<String>,
}

/// Where a run landed: the manifest plus everything it references.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub manifest_path: PathBuf,
    pub outputs: Vec<String>,
}

/// Execute one command: resolve the config, write all artifacts, then the
/// manifest that references them.
pub fn run(config: &RunConfig) -> Result<RunReport> {
    let started = Instant::now();
    let file = load_config(config.config_path.as_deref(), &config.overrides)?;
    let mut artifacts = Artifacts::new(&config.out_dir)?;
    let resolved = match &config.command {
        Command::Derive => cmd_derive(&file, &mut artifacts)?,
        Command::Spectrum { g_max, levels } => {
            cmd_spectrum(&file, *g_max, *levels, &mut artifacts)?
        }
        Command::RatioSweep { axis, points } => {
            cmd_ratio_sweep(&file, axis.as_deref(), *points, &mut artifacts)?
        }
        Command::Optimize {
            objective,
            restarts,
            max_iters,
        } => cmd_optimize(
            &file,
            objective.as_deref(),
            *restarts,
            *max_iters,
            config.seed,
            &mut artifacts,
        )?,
        Command::SimulateQst {
            g_ratio,
            mode,
            t_final_ns,
            dt_ns,
            temperature_mk,
        } => cmd_simulate_qst(
            &file,
            *g_ratio,
            mode.as_deref(),
            *t_final_ns,
            *dt_ns,
            *temperature_mk,
            &mut artifacts,
        )?,
        Command::Forbidden {
            g_ratio,
            from_level,
            tol,
        } => cmd_forbidden(&file, *g_ratio, *from_level, *tol, &mut artifacts)?,
    };
    let manifest = Manifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        command: config.command.name().to_string(),
        package: env!("CARGO_PKG_NAME"),
        package_version: env!("CARGO_PKG_VERSION"),
        seed: config.seed,
        wall_time_s: started.elapsed().as_secs_f64(),
        resolved_config: resolved,
        outputs: artifacts.names.clone(),
    };
    let manifest_path = config.out_dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::Internal(format!("serializing manifest: {e}")))?;
    text.push('\n');
    fs::write(&manifest_path, text)?;
    Ok(RunReport {
        manifest_path,
        outputs: manifest.outputs,
    })
}

/// The one-line machine-parsable error report shape.
pub fn format_error_line(e: &Error) -> String {
    format!("error kind={} msg={:?}", e.kind(), e.to_string())
}

/// Full process entry: parse arguments, run, report. Returns the exit code.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    use clap::error::ErrorKind;
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("bad arguments");
            eprintln!("{}", format_error_line(&Error::Config(first.to_string())));
            return 1;
        }
    };
    let run_config = match cli.into_run_config() {
        Ok(rc) => rc,
        Err(e) => {
            eprintln!("{}", format_error_line(&e));
            return e.exit_code();
        }
    };
    match run(&run_config) {
        Ok(report) => {
            println!("manifest: {}", report.manifest_path.display());
            0
        }
        Err(e) => {
            eprintln!("{}", format_error_line(&e));
            e.exit_code()
        }
    }
}

// ---------------------------------------------------------------------------
// derive

/// Ordered human-unit summary of derived parameters; the row order is the
/// CSV contract.
fn derive_summary(derived: &DerivedParams) -> Result<Vec<(&'static str, f64)>> {
    let ghz = |omega: f64| rad_per_s_to_ghz(omega);
    match derived {
        DerivedParams::OneCpb(p) => {
            let t = p.qubit_transition(DEFAULT_N_MAX)?;
            let ratio = coupling_ratio(derived, t.omega_q)?;
            Ok(vec![
                ("eff_c_j_ff", p.eff_c_j / FEMTOFARAD),
                ("eff_c_r_ff", p.eff_c_r / FEMTOFARAD),
                ("c_jr_ff", p.c_jr / FEMTOFARAD),
                ("e_c_ghz", p.e_c / H_PLANCK / 1e9),
                ("e_j_ghz", p.e_j / H_PLANCK / 1e9),
                ("ej_over_ec", p.e_j / p.e_c),
                ("omega_r_ghz", ghz(p.omega_r)),
                ("omega_q_ghz", ghz(t.omega_q)),
                ("z_r_kohm", p.z_r / 1e3),
                ("gamma_ratio", p.gamma_ratio),
                ("g_ghz", ghz(p.g)),
                ("g_tilde_ghz", ghz(p.g_tilde())),
                ("charge_matrix_element", t.n_matrix_element),
                ("coupling_ratio", ratio),
                ("beta", t.omega_q / p.omega_r),
            ])
        }
        DerivedParams::TwoOscillator(p) => Ok(vec![
            ("eff_c_j_ff", p.eff_c_j / FEMTOFARAD),
            ("eff_c_r_ff", p.eff_c_r / FEMTOFARAD),
            ("c_jr_ff", p.c_jr / FEMTOFARAD),
            ("e_c_ghz", p.e_c / H_PLANCK / 1e9),
            ("omega_q_ghz", ghz(p.omega_q)),
            ("omega_r_ghz", ghz(p.omega_r)),
            ("z_r_kohm", p.z_r / 1e3),
            ("g_o_ghz", ghz(p.g_o)),
            ("bound_ratio", p.bound_ratio),
        ]),
        DerivedParams::TwoCpb(p) => {
            let t1 = p.qubit_transition_1(DEFAULT_N_MAX)?;
            let t2 = p.qubit_transition_2(DEFAULT_N_MAX)?;
            let (r1, r2) = coupling_ratios_two_cpb(p, t1.omega_q, t2.omega_q)?;
            Ok(vec![
                ("eff_c_j1_ff", p.eff_c_j1 / FEMTOFARAD),
                ("eff_c_j2_ff", p.eff_c_j2 / FEMTOFARAD),
                ("eff_c_r_ff", p.eff_c_r / FEMTOFARAD),
                ("c_1r_ff", p.c_1r / FEMTOFARAD),
                ("c_2r_ff", p.c_2r / FEMTOFARAD),
                ("c_12_ff", p.c_12 / FEMTOFARAD),
                ("e_c1_ghz", p.e_c1 / H_PLANCK / 1e9),
                ("e_c2_ghz", p.e_c2 / H_PLANCK / 1e9),
                ("omega_r_ghz", ghz(p.omega_r)),
                ("omega_q1_ghz", ghz(t1.omega_q)),
                ("omega_q2_ghz", ghz(t2.omega_q)),
                ("z_r_kohm", p.z_r / 1e3),
                ("g1_ghz", ghz(p.g1)),
                ("g2_ghz", ghz(p.g2)),
                ("g12_ghz", ghz(p.g12)),
                ("g_tilde_12_ghz", ghz(p.g_tilde_12())),
                ("coupling_ratio_1", r1),
                ("coupling_ratio_2", r2),
                ("beta_1", t1.omega_q / p.omega_r),
                ("beta_2", t2.omega_q / p.omega_r),
            ])
        }
    }
}

fn topology_label(derived: &DerivedParams) -> &'static str {
    match derived {
        DerivedParams::OneCpb(_) => "one_cpb",
        DerivedParams::TwoOscillator(_) => "two_oscillator",
        DerivedParams::TwoCpb(_) => "two_cpb",
    }
}

fn summary_table(title: &str, rows: &[(&'static str, f64)]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{title}");
    for (name, value) in rows {
        let _ = writeln!(out, "  {name:<24} {value:>16.6}");
    }
    out
}

fn cmd_derive(file: &FileConfig, artifacts: &mut Artifacts) -> Result<serde_json::Value> {
    let (spec, view) = resolve_circuit(file.circuit.as_ref())?;
    let derived = derive_effective_params(&spec)?;
    let summary = derive_summary(&derived)?;

    let csv_rows: Vec<Vec<String>> = summary
        .iter()
        .map(|(name, value)| vec![name.to_string(), sci(*value)])
        .collect();
    artifacts.write_csv("derived.csv", &["name", "value"], &csv_rows)?;

    let summary_map: serde_json::Map<String, serde_json::Value> = summary
        .iter()
        .map(|(name, value)| (name.to_string(), json!(value)))
        .collect();
    artifacts.write_json(
        "derived.json",
        &json!({
            "topology": topology_label(&derived),
            "input": view,
            "derived_si": derived,
            "summary": summary_map,
        }),
    )?;

    print!(
        "{}",
        summary_table(
            &format!("{} effective parameters", topology_label(&derived)),
            &summary
        )
    );
    Ok(json!({ "circuit": view }))
}

// ---------------------------------------------------------------------------
// spectrum

fn cmd_spectrum(
    file: &FileConfig,
    g_max_flag: Option<f64>,
    levels_flag: Option<usize>,
    artifacts: &mut Artifacts,
) -> Result<serde_json::Value> {
    let sec = file.spectrum.clone().unwrap_or_default();
    let g_max = g_max_flag.or(sec.g_max).unwrap_or(1.0);
    let levels = levels_flag.or(sec.levels).unwrap_or(6);
    if !(g_max > 0.0 && g_max <= 3.0) || !g_max.is_finite() {
        return Err(Error::Validation(format!(
            "g_max must lie in (0, 3], got {g_max}"
        )));
    }
    if levels == 0 || levels > 20 {
        return Err(Error::Validation(format!(
            "levels must lie in 1..=20, got {levels}"
        )));
    }
    // one point per 0.01 of coupling, endpoints included
    let points = (100.0 * g_max).round() as usize + 1;
    let grid: Vec<f64> = (0..points)
        .map(|i| g_max * i as f64 / (points - 1) as f64)
        .collect();
    let sweep = spectrum_sweep(&grid, levels)?;

    let mut rows = Vec::with_capacity(points * levels);
    for point in &sweep {
        for level in 0..levels {
            rows.push(vec![
                sci(point.g_over_wr),
                level.to_string(),
                sci(point.e_h1[level]),
                sci(point.e_qrm[level]),
            ]);
        }
    }
    artifacts.write_csv(
        "spectrum.csv",
        &[
            "g_tilde_over_omega_r",
            "level",
            "e_h1_over_omega_r",
            "e_qrm_over_omega_r",
        ],
        &rows,
    )?;

    let mut series = Vec::with_capacity(2 * levels);
    for level in 0..levels {
        series.push(plot::Series {
            color: Some(level),
            ..plot::Series::new(
                format!("h1 level {level}"),
                sweep.iter().map(|p| (p.g_over_wr, p.e_h1[level])).collect(),
            )
        });
        series.push(plot::Series {
            color: Some(level),
            dash: true,
            ..plot::Series::new(
                format!("qrm level {level}"),
                sweep.iter().map(|p| (p.g_over_wr, p.e_qrm[level])).collect(),
            )
        });
    }
    artifacts.write_text(
        "spectrum.svg",
        &plot::line_chart(&plot::ChartSpec {
            title: format!("Lowest {levels} levels: circuit model (solid) vs Rabi model (dashed)"),
            x_label: "g_tilde / omega_r".into(),
            y_label: "(E - E0) / omega_r".into(),
            series,
        })?,
    )?;

    println!("spectrum: {points} grid points, {levels} levels per model");
    Ok(json!({ "spectrum": { "g_max": g_max, "levels": levels, "points": points } }))
}

// ---------------------------------------------------------------------------
// ratio sweep

fn cmd_ratio_sweep(
    file: &FileConfig,
    axis_flag: Option<&str>,
    points_flag: Option<usize>,
    artifacts: &mut Artifacts,
) -> Result<serde_json::Value> {
    let (spec, circuit_view) = resolve_circuit(file.circuit.as_ref())?;
    let sec = file.ratio_sweep.clone().unwrap_or_default();
    let axis = axis_flag
        .map(str::to_string)
        .or(sec.axis)
        .unwrap_or_else(|| "josephson_energy".into());
    let points = points_flag.or(sec.points).unwrap_or(121);
    let spacing = sec.spacing.unwrap_or_else(|| "log".into());
    if points < 2 {
        return Err(Error::Validation(format!(
            "a sweep needs at least 2 points, got {points}"
        )));
    }
    let (default_lo, default_hi) = match axis.as_str() {
        "josephson_energy" => (1.0, 100.0), // GHz
        "impedance_scale" => (0.25, 4.0),   // times the base impedance
        other => {
            return Err(Error::Validation(format!(
                "unknown axis {other:?}; expected josephson_energy or impedance_scale"
            )))
        }
    };
    let lo = sec.min.unwrap_or(default_lo);
    let hi = sec.max.unwrap_or(default_hi);
    if !(lo > 0.0 && hi > lo) || !hi.is_finite() {
        return Err(Error::Validation(format!(
            "sweep range must satisfy 0 < min < max, got [{lo}, {hi}]"
        )));
    }
    let raw: Vec<f64> = match spacing.as_str() {
        "log" => (0..points)
            .map(|i| lo * (hi / lo).powf(i as f64 / (points - 1) as f64))
            .collect(),
        "linear" => (0..points)
            .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
            .collect(),
        other => {
            return Err(Error::Validation(format!(
                "unknown spacing {other:?}; expected log or linear"
            )))
        }
    };
    let grid = match axis.as_str() {
        "josephson_energy" => RatioGrid::JosephsonEnergy(raw.iter().map(|&g| ghz_to_joule(g)).collect()),
        _ => RatioGrid::ImpedanceScale(raw.clone()),
    };
    let sweep = ratio_sweep(&spec, &grid)?;

    let rows: Vec<Vec<String>> = sweep
        .iter()
        .zip(&raw)
        .map(|(p, &x)| {
            vec![
                sci(x), // input units: GHz for the energy axis, scale factor otherwise
                sci(p.ej_over_ec),
                sci(p.coupling_ratio),
                sci(p.beta),
            ]
        })
        .collect();
    artifacts.write_csv(
        "ratio_sweep.csv",
        &["x", "ej_over_ec", "coupling_ratio", "beta"],
        &rows,
    )?;

    artifacts.write_text(
        "ratio_sweep.svg",
        &plot::line_chart(&plot::ChartSpec {
            title: format!("Coupling ratio along {axis}"),
            x_label: "E_J / E_C".into(),
            y_label: "ratio".into(),
            series: vec![
                plot::Series::new(
                    "R = g / sqrt(omega_r omega_q)",
                    sweep.iter().map(|p| (p.ej_over_ec, p.coupling_ratio)).collect(),
                ),
                plot::Series::new(
                    "beta = omega_q / omega_r",
                    sweep.iter().map(|p| (p.ej_over_ec, p.beta)).collect(),
                ),
            ],
        })?,
    )?;

    let best = sweep
        .iter()
        .max_by(|a, b| a.coupling_ratio.total_cmp(&b.coupling_ratio))
        .expect("non-empty sweep");
    println!(
        "ratio sweep: {points} points on {axis}; max R = {:.4} at E_J/E_C = {:.4}",
        best.coupling_ratio, best.ej_over_ec
    );
    Ok(json!({
        "circuit": circuit_view,
        "ratio_sweep": {
            "axis": axis, "min": lo, "max": hi, "points": points, "spacing": spacing,
        },
    }))
}

// ---------------------------------------------------------------------------
// optimize

fn cmd_optimize(
    file: &FileConfig,
    objective_flag: Option<&str>,
    restarts_flag: Option<usize>,
    max_iters_flag: Option<usize>,
    seed: u64,
    artifacts: &mut Artifacts,
) -> Result<serde_json::Value> {
    let sec = file.optimize.clone().unwrap_or_default();
    let objective_name = objective_flag
        .map(str::to_string)
        .or(sec.objective)
        .unwrap_or_else(|| "f1".into());
    let objective = match objective_name.as_str() {
        "f1" => Objective::F1,
        "f2" => Objective::F2,
        other => {
            return Err(Error::Validation(format!(
                "unknown objective {other:?}; expected f1 or f2"
            )))
        }
    };
    let restarts = restarts_flag.or(sec.restarts).unwrap_or(DEFAULT_RESTARTS);
    let max_iters = max_iters_flag.or(sec.max_iters).unwrap_or(DEFAULT_MAX_ITERS);
    let cap_lo = sec.cap_lo.unwrap_or(0.11);
    let cap_hi = sec.cap_hi.unwrap_or(550.0);
    let ind_lo = sec.ind_lo.unwrap_or(100.0);
    let ind_hi = sec.ind_hi.unwrap_or(600.0);
    let ej_lo = sec.ej_lo.unwrap_or(6.0);
    let ej_hi = sec.ej_hi.unwrap_or(11.0);
    let n_g = sec.n_g.unwrap_or(0.5);

    let cap = Bound::new(cap_lo * FEMTOFARAD, cap_hi * FEMTOFARAD);
    let ind = Bound::new(ind_lo * NANOHENRY, ind_hi * NANOHENRY);
    let ej = Bound::new(ghz_to_joule(ej_lo), ghz_to_joule(ej_hi));
    let space = match objective {
        Objective::F1 => SearchSpace::OneCpb(OneCpbSpace {
            c_g: cap,
            c_j: cap,
            c_c: cap,
            c_r: cap,
            c_p: cap,
            l_r: ind,
            e_j: ej,
            n_g,
        }),
        Objective::F2 => SearchSpace::TwoCpb(TwoCpbSpace {
            c_g1: cap,
            c_j1: cap,
            c_g2: cap,
            c_j2: cap,
            c_c: cap,
            c_r: cap,
            l_r: ind,
            e_j1: ej,
            e_j2: ej,
            n_g1: n_g,
            n_g2: n_g,
        }),
    };

    let result = minimize(objective, &space, seed, restarts, max_iters)?;
    let summary = derive_summary(&result.derived)?;

    let best_view = best_spec_rows(&result.best);
    let summary_map: serde_json::Map<String, serde_json::Value> = summary
        .iter()
        .map(|(name, value)| (name.to_string(), json!(value)))
        .collect();
    let best_map: serde_json::Map<String, serde_json::Value> = best_view
        .iter()
        .map(|(name, value)| (name.to_string(), json!(value)))
        .collect();
    artifacts.write_json(
        "optimize.json",
        &json!({
            "objective": objective_name,
            "objective_value": result.objective_value,
            "ratios": result.ratios,
            "betas": result.betas,
            "iterations": result.iterations,
            "restarts": result.restarts,
            "seed": result.seed,
            "restart_values": result.restart_values,
            "best": best_map,
            "summary": summary_map,
            "result_si": result,
        }),
    )?;

    let mut table = String::new();
    let _ = writeln!(
        table,
        "objective {objective_name} = {:.9}  ({} restarts, {} iterations, seed {})",
        result.objective_value, result.restarts, result.iterations, result.seed
    );
    table.push_str(&summary_table("best circuit", &best_view));
    table.push_str(&summary_table("derived", &summary));
    artifacts.write_text("optimize_table.txt", &table)?;
    print!("{table}");

    Ok(json!({
        "optimize": {
            "objective": objective_name, "restarts": restarts, "max_iters": max_iters,
            "cap_lo_ff": cap_lo, "cap_hi_ff": cap_hi,
            "ind_lo_nh": ind_lo, "ind_hi_nh": ind_hi,
            "ej_lo_ghz": ej_lo, "ej_hi_ghz": ej_hi, "n_g": n_g,
        },
    }))
}

fn best_spec_rows(spec: &CircuitSpec) -> Vec<(&'static str, f64)> {
    match spec {
        CircuitSpec::OneCpb(s) => vec![
            ("c_g_ff", s.c_g / FEMTOFARAD),
            ("c_j_ff", s.c_j / FEMTOFARAD),
            ("c_c_ff", s.c_c / FEMTOFARAD),
            ("c_r_ff", s.c_r / FEMTOFARAD),
            ("c_p_ff", s.c_p / FEMTOFARAD),
            ("l_r_nh", s.l_r / NANOHENRY),
            ("e_j_ghz", s.e_j / H_PLANCK / 1e9),
            ("n_g", s.n_g),
        ],
        CircuitSpec::TwoOscillator(s) => vec![
            ("c_g_ff", s.c_g / FEMTOFARAD),
            ("c_j_ff", s.c_j / FEMTOFARAD),
            ("c_c_ff", s.c_c / FEMTOFARAD),
            ("c_r_ff", s.c_r / FEMTOFARAD),
            ("c_p_ff", s.c_p / FEMTOFARAD),
            ("l_r_nh", s.l_r / NANOHENRY),
            ("l_j_nh", s.l_j / NANOHENRY),
        ],
        CircuitSpec::TwoCpb(s) => vec![
            ("c_g1_ff", s.c_g1 / FEMTOFARAD),
            ("c_j1_ff", s.c_j1 / FEMTOFARAD),
            ("c_g2_ff", s.c_g2 / FEMTOFARAD),
            ("c_j2_ff", s.c_j2 / FEMTOFARAD),
            ("c_c_ff", s.c_c / FEMTOFARAD),
            ("c_r_ff", s.c_r / FEMTOFARAD),
            ("l_r_nh", s.l_r / NANOHENRY),
            ("e_j1_ghz", s.e_j1 / H_PLANCK / 1e9),
            ("e_j2_ghz", s.e_j2 / H_PLANCK / 1e9),
            ("n_g1", s.n_g1),
            ("n_g2", s.n_g2),
        ],
    }
}

// ---------------------------------------------------------------------------
// simulate-qst

fn cmd_simulate_qst(
    file: &FileConfig,
    g_ratio_flag: Option<f64>,
    mode_flag: Option<&str>,
    t_final_flag: Option<f64>,
    dt_flag: Option<f64>,
    temperature_flag: Option<f64>,
    artifacts: &mut Artifacts,
) -> Result<serde_json::Value> {
    let sec = file.qst.clone().unwrap_or_default();
    let g_ratio = g_ratio_flag.or(sec.g_ratio).unwrap_or(0.3);
    let mode = mode_flag
        .map(str::to_string)
        .or(sec.mode)
        .unwrap_or_else(|| "noisy".into());
    let mut proto = QstProtocol::reference(g_ratio);
    if let Some(v) = sec.omega_r_ghz {
        proto.omega_r = ghz_to_rad_per_s(v);
    }
    if let Some(v) = sec.lambda_ratio {
        proto.lambda_ratio = v;
    }
    if let Some(v) = sec.g12_ratio {
        proto.g12_ratio = v;
    }
    if let Some(v) = sec.n_fock {
        proto.n_fock = v;
    }
    if let Some(v) = sec.dressed_levels {
        proto.dressed_levels = v;
    }
    if let Some(v) = sec.anharmonicity {
        proto.anharmonicity = v;
    }
    let t_final = t_final_flag.or(sec.t_final_ns).map(|v| v * NANOSECOND);
    let dt = dt_flag.or(sec.dt_ns).map_or(DEFAULT_TIME_STEP, |v| v * NANOSECOND);
    let sample_dt = sec.sample_dt_ns.map_or(DEFAULT_SAMPLE_STEP, |v| v * NANOSECOND);

    let (noise, temperature_mk) = resolve_noise(file.noise.as_ref(), temperature_flag);
    let (summary, trajectory): (QstSummary, Trajectory) = match mode.as_str() {
        "noisy" => run_transfer_noisy(&proto, &noise, t_final, dt, sample_dt)?,
        "unitary" => run_transfer_unitary(&proto, t_final, dt, sample_dt)?,
        other => {
            return Err(Error::Validation(format!(
                "unknown mode {other:?}; expected noisy or unitary"
            )))
        }
    };

    let rows: Vec<Vec<String>> = trajectory
        .times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            vec![
                sci(t / NANOSECOND),
                sci(trajectory.pop_left_excited[i]),
                sci(trajectory.pop_right_excited[i]),
                sci(trajectory.fidelity[i]),
                sci(trajectory.trace[i]),
            ]
        })
        .collect();
    artifacts.write_csv(
        "trajectory.csv",
        &["time_ns", "pop_1psi0_0", "pop_0psi0_1", "fidelity", "trace"],
        &rows,
    )?;

    artifacts.write_json(
        "qst_summary.json",
        &json!({ "mode": mode, "summary": summary }),
    )?;

    let t_ns: Vec<f64> = trajectory.times.iter().map(|&t| t / NANOSECOND).collect();
    let pair = |ys: &[f64]| -> Vec<(f64, f64)> { t_ns.iter().copied().zip(ys.iter().copied()).collect() };
    artifacts.write_text(
        "qst.svg",
        &plot::line_chart(&plot::ChartSpec {
            title: format!("State transfer at g_tilde = {g_ratio} omega_r ({mode})"),
            x_label: "t (ns)".into(),
            y_label: "population / fidelity".into(),
            series: vec![
                plot::Series::new("P(1, psi0, 0)", pair(&trajectory.pop_left_excited)),
                plot::Series::new("P(0, psi0, 1)", pair(&trajectory.pop_right_excited)),
                plot::Series::new("fidelity", pair(&trajectory.fidelity)),
            ],
        })?,
    )?;

    println!(
        "peak fidelity {:.6} at {:.4} ns (perturbative estimate {:.4} ns)",
        summary.peak_fidelity, summary.peak_time_ns, summary.transfer_estimate_ns
    );
    let mut resolved = json!({
        "qst": {
            "g_ratio": g_ratio,
            "omega_r_ghz": rad_per_s_to_ghz(proto.omega_r),
            "lambda_ratio": proto.lambda_ratio,
            "g12_ratio": proto.g12_ratio,
            "n_fock": proto.n_fock,
            "dressed_levels": proto.dressed_levels,
            "anharmonicity": proto.anharmonicity,
            "mode": mode,
            "t_final_ns": summary.t_final_ns,
            "dt_ns": dt / NANOSECOND,
            "sample_dt_ns": sample_dt / NANOSECOND,
        },
    });
    if mode == "noisy" {
        resolved["noise"] = json!({
            "temperature_mk": temperature_mk,
            "kappa_mhz": noise.kappa / mhz_to_rad_per_s(1.0),
            "gamma_mhz": noise.gamma / mhz_to_rad_per_s(1.0),
            "gamma_phi_cpb_mhz": noise.gamma_phi_cpb / mhz_to_rad_per_s(1.0),
            "gamma_m_mhz": noise.gamma_m[0] / mhz_to_rad_per_s(1.0),
            "gamma_phi_m_mhz": noise.gamma_phi_m[0] / mhz_to_rad_per_s(1.0),
        });
    }
    Ok(resolved)
}

// ---------------------------------------------------------------------------
// forbidden

fn cmd_forbidden(
    file: &FileConfig,
    g_ratio_flag: Option<f64>,
    from_level_flag: Option<usize>,
    tol_flag: Option<f64>,
    artifacts: &mut Artifacts,
) -> Result<serde_json::Value> {
    let sec = file.forbidden.clone().unwrap_or_default();
    let g_ratio = g_ratio_flag.or(sec.g_ratio).unwrap_or(0.3);
    let omega_r_ghz = sec.omega_r_ghz.unwrap_or(8.13);
    let g12_ratio = sec.g12_ratio.unwrap_or(0.0);
    let from_level = from_level_flag.or(sec.from_level).unwrap_or(1);
    let tol = tol_flag.or(sec.tol).unwrap_or(DEFAULT_FORBIDDEN_TOL);
    let n_fock = sec.n_fock.unwrap_or_else(|| recommended_n_fock(g_ratio));
    let dressed_levels = sec.dressed_levels.unwrap_or(FORBIDDEN_SCAN_LEVELS);

    let omega_r = ghz_to_rad_per_s(omega_r_ghz);
    let params = MediatorParams::symmetric(omega_r, g_ratio * omega_r, g12_ratio * omega_r);
    let ds = mediator_dressed(&params, n_fock, dressed_levels)?;
    let x = ds.op("X")?;
    let max_abs = x.max_abs();

    let mut element_rows = Vec::with_capacity(dressed_levels * dressed_levels);
    let mut values = vec![vec![0.0; dressed_levels]; dressed_levels];
    for j in 0..dressed_levels {
        for k in 0..dressed_levels {
            let abs = x.entries()[(j, k)].norm();
            values[j][k] = abs;
            element_rows.push(vec![j.to_string(), k.to_string(), sci(abs)]);
        }
    }
    artifacts.write_csv("matrix_elements.csv", &["from", "to", "abs_element"], &element_rows)?;

    let flagged = forbidden_transitions(&ds, "X", from_level, tol)?;
    let forbidden_rows: Vec<Vec<String>> = flagged
        .iter()
        .map(|f| {
            vec![
                f.from.to_string(),
                f.to.to_string(),
                sci(rad_per_s_to_ghz(f.delta)),
                sci(f.element),
                sci(if max_abs > 0.0 { f.element / max_abs } else { 0.0 }),
            ]
        })
        .collect();
    artifacts.write_csv(
        "forbidden.csv",
        &["from", "to", "delta_ghz", "abs_element", "rel_element"],
        &forbidden_rows,
    )?;

    artifacts.write_text(
        "forbidden_map.svg",
        &plot::heatmap(&plot::HeatmapSpec {
            title: format!("|X_jk| at g_tilde = {g_ratio} omega_r (log color)"),
            x_label: "level k".into(),
            y_label: "level j".into(),
            values,
            log_scale: true,
        })?,
    )?;

    let list = flagged
        .iter()
        .map(|f| format!("({}, {})", f.from, f.to))
        .collect::<Vec<_>>()
        .join(", ");
    println!(
        "forbidden from level {from_level}: {}",
        if list.is_empty() { "none".to_string() } else { list }
    );
    Ok(json!({
        "forbidden": {
            "g_ratio": g_ratio, "omega_r_ghz": omega_r_ghz, "g12_ratio": g12_ratio,
            "from_level": from_level, "tol": tol,
            "n_fock": n_fock, "dressed_levels": dressed_levels,
        },
    }))
}
