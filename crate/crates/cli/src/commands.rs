use std::path::Path;
use std::time::Instant;

use anyhow::{anyhow, Context};
use finobs::constants::{cobs_bound, q_ratio, ObservabilityCertificate};
use finobs::evolution::{certify_de, time_pairs, DeCertificate, ExpBound, GridSpec};
use finobs::observation::{certify_ucp, UcpCertificate, UcpOptions};
use finobs::pipeline::{
    certify_instance, choose_window, compute_traces, derive_chain, epsilon_balance_check, random_balance_tuples,
    run_telescope, verify_obs, AuditMode, CertifiedBundle, Instance, ObsReport,
};
use finobs::time_sets::{build_sequence, DensitySequence};
use finobs::{Error, NormExponent, SetMode};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, SCHEMA_VERSION};
use crate::output::{r_tag, OutDir};
use crate::{exit, Command, Common};

pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    fn new(code: u8, error: impl Into<anyhow::Error>) -> Self {
        Failure {
            code,
            error: error.into(),
        }
    }

    fn config(error: impl Into<anyhow::Error>) -> Self {
        Failure::new(exit::CONFIG, error)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Certification(_) | Error::GridMismatch(_) => exit::CERTIFICATION,
            Error::Audit(_) => exit::AUDIT,
            Error::Domain(_)
            | Error::Invariant(_)
            | Error::NotDensityPoint(_)
            | Error::SequenceCertificate { .. }
            | Error::Json(_) => exit::CONFIG,
            Error::Io(_) => exit::OTHER,
        };
        Failure::new(code, e)
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::new(exit::OTHER, e)
    }
}

type Outcome = Result<u8, Failure>;

pub fn run(command: Command) -> Outcome {
    match command {
        Command::CertifyDe(c) => certify_de_cmd(&c),
        Command::CertifyUcp(c) => certify_ucp_cmd(&c),
        Command::Constants { common, bundle } => constants_cmd(&common, bundle.as_deref()),
        Command::DensitySeq(c) => density_seq_cmd(&c),
        Command::Verify { common, bundle } => verify_cmd(&common, bundle.as_deref()),
        Command::Report { out } => report_cmd(&out),
    }
}

fn load(common: &Common) -> Result<(ExperimentConfig, OutDir), Failure> {
    let mut config = ExperimentConfig::load(&common.config).map_err(Failure::config)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    let out = OutDir::create(&common.out)?;
    Ok((config, out))
}

/// Builds the instance; any failure here is a configuration problem except
/// an ellipticity failure, which is a certification failure.
fn instance(config: &ExperimentConfig) -> Result<Instance, Failure> {
    config.instance().map_err(Failure::from)
}

fn print_json<T: Serialize>(value: &T) -> Result<(), Failure> {
    println!("{}", serde_json::to_string_pretty(value).map_err(anyhow::Error::from)?);
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct Lineage {
    schema_version: u32,
    config_hash: String,
    instance_hash: String,
    seed: u64,
    grid: GridSpec,
}

impl Lineage {
    fn of(config: &ExperimentConfig) -> Self {
        Lineage {
            schema_version: SCHEMA_VERSION,
            config_hash: config.hash(),
            instance_hash: config.instance_hash(),
            seed: config.seed,
            grid: config.grid,
        }
    }
}

#[derive(Serialize)]
struct DeFile<'a> {
    #[serde(flatten)]
    lineage: Lineage,
    certificate: &'a DeCertificate,
}

fn certify_de_cmd(common: &Common) -> Outcome {
    let (config, out) = load(common)?;
    let family = config.family()?;
    let opts = config.certify_options();
    let pairs = if opts.de_pairs.is_empty() {
        time_pairs(family.horizon(), &family.symbol().mesh, 11)
    } else {
        opts.de_pairs.clone()
    };
    let cert = certify_de(
        &family,
        config.projector,
        &opts.de_lambdas,
        &pairs,
        opts.trials,
        opts.seed,
    )?;
    out.json(
        "de_certificate.json",
        &DeFile {
            lineage: Lineage::of(&config),
            certificate: &cert,
        },
    )?;
    print_json(&serde_json::json!({
        "d2": cert.d2, "d3": cert.d3, "gamma2": cert.gamma2, "gamma3": cert.gamma3, "gamma4": cert.gamma4,
    }))?;
    Ok(exit::PASS)
}

#[derive(Serialize)]
struct UcpFile<'a> {
    #[serde(flatten)]
    lineage: Lineage,
    certificate: &'a UcpCertificate,
}

fn certify_ucp_cmd(common: &Common) -> Outcome {
    let (config, out) = load(common)?;
    let inst = instance(&config)?;
    let c = &config.certify;
    let opts = UcpOptions {
        gamma1: c.gamma1,
        d1_min: c.d1_min,
        trials: c.trials,
        seed: config.seed,
    };
    let cert = certify_ucp(&inst.sensors, &inst.set, config.projector, &c.ucp_lambdas, &opts)?;
    out.json(
        "ucp_certificate.json",
        &UcpFile {
            lineage: Lineage::of(&config),
            certificate: &cert,
        },
    )?;
    print_json(&serde_json::json!({ "d0": cert.d0, "d1": cert.d1, "gamma1": cert.gamma1 }))?;
    Ok(exit::PASS)
}

/// A constant bundle on disk, with the certificates that produced it.
#[derive(Debug, Serialize, Deserialize)]
pub struct BundleFile {
    #[serde(flatten)]
    lineage: Lineage,
    bundle: CertifiedBundle,
    #[serde(default)]
    growth: Option<ExpBound>,
    #[serde(default)]
    dissipation: Option<DeCertificate>,
    #[serde(default)]
    uncertainty: Option<UcpCertificate>,
}

/// Loads `path` or certifies the instance; writes `bundle.json` either way.
fn obtain_bundle(
    config: &ExperimentConfig,
    inst: &Instance,
    path: Option<&Path>,
    mode: AuditMode,
    out: &OutDir,
) -> Result<CertifiedBundle, Failure> {
    let file = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading {}", p.display()))
                .map_err(Failure::config)?;
            let file: BundleFile = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", p.display()))
                .map_err(Failure::config)?;
            let expected = Lineage::of(config);
            if mode == AuditMode::Certify {
                if file.lineage.instance_hash != expected.instance_hash {
                    return Err(Failure::new(
                        exit::CERTIFICATION,
                        anyhow!("bundle {} was certified for a different configuration", p.display()),
                    ));
                }
                if file.lineage.seed != config.seed || file.bundle.grid != config.grid {
                    return Err(Failure::new(
                        exit::CERTIFICATION,
                        anyhow!("bundle seed or grid does not match the config"),
                    ));
                }
            }
            file
        }
        None => {
            let certs = certify_instance(inst, &config.certify_options())?;
            BundleFile {
                lineage: Lineage::of(config),
                bundle: certs.bundle,
                growth: Some(certs.growth),
                dissipation: Some(certs.dissipation),
                uncertainty: Some(certs.uncertainty),
            }
        }
    };
    out.json("bundle.json", &file)?;
    Ok(file.bundle)
}

#[derive(Serialize)]
struct ConstantsFile<'a> {
    #[serde(flatten)]
    lineage: Lineage,
    bundle: &'a CertifiedBundle,
    certificate: &'a ObservabilityCertificate,
    /// Envelope bound on `(ℓ, ℓ1)` for `r = 1`.
    #[serde(rename = "C_obs_bound", with = "finobs::float_serde")]
    cobs_bound: f64,
}

fn constants_cmd(common: &Common, bundle: Option<&Path>) -> Outcome {
    let (config, out) = load(common)?;
    let inst = instance(&config)?;
    let mode: AuditMode = common.mode.into();
    let bundle = obtain_bundle(&config, &inst, bundle, mode, &out)?;
    bundle.admit(&inst, mode)?;
    let der = derive_chain(&inst.set, &bundle.constants, config.mode, config.depth, config.ell1)?;
    let cert = &der.certificate;
    let bound = cobs_bound(
        cert.big1,
        cert.big2,
        cert.big3,
        cert.ell,
        cert.ell1,
        inst.horizon(),
        NormExponent::ONE,
        cert.kappa,
    )?;
    out.json(
        "constants.json",
        &ConstantsFile {
            lineage: Lineage::of(&config),
            bundle: &bundle,
            certificate: cert,
            cobs_bound: bound,
        },
    )?;
    print_json(&serde_json::json!({
        "q": cert.q, "c1": cert.c1, "c2": cert.c2, "c3": cert.c3, "c4": cert.c4,
        "ell": cert.ell, "ell1": cert.ell1, "C_obs": cert.cobs, "log_C_obs": cert.log_cobs,
    }))?;
    Ok(exit::PASS)
}

#[derive(Serialize)]
struct SequenceFile<'a> {
    #[serde(flatten)]
    lineage: Lineage,
    q: f64,
    sequence: &'a DensitySequence,
}

#[derive(Serialize)]
struct SequenceRow {
    m: usize,
    ell_m: f64,
    ell_next: f64,
    delta_m: f64,
    xi_m: f64,
    gap_measure: f64,
    xi_measure: f64,
}

fn density_seq_cmd(common: &Common) -> Outcome {
    let (config, out) = load(common)?;
    let set = config.time_set()?;
    let symbol = config.symbol()?;
    let q = q_ratio(config.certify.gamma1, symbol.degree as f64, 1.0)?;
    let (ell, ell1) = choose_window(&set, q, config.mode, config.ell1)?;
    let seq = build_sequence(&set, ell, ell1, q, config.depth, config.mode)?;
    out.json(
        "density_seq.json",
        &SequenceFile {
            lineage: Lineage::of(&config),
            q,
            sequence: &seq,
        },
    )?;
    out.csv("density_seq.csv", sequence_rows(&seq))?;
    println!("q = {q}, ell = {ell}, ell1 = {ell1}, depth = {}", seq.depth);
    Ok(exit::PASS)
}

fn sequence_rows(seq: &DensitySequence) -> Vec<SequenceRow> {
    seq.certificates
        .iter()
        .enumerate()
        .map(|(i, c)| SequenceRow {
            m: i + 1,
            ell_m: seq.points[i],
            ell_next: seq.points[i + 1],
            delta_m: seq.gaps[i],
            xi_m: seq.midpoints[i],
            gap_measure: c.gap_measure,
            xi_measure: c.xi_measure,
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BalanceRow {
    pub sample: usize,
    pub x0_id: usize,
    pub s: f64,
    pub t: f64,
    pub epsilon: f64,
    pub lambda: f64,
    #[serde(with = "finobs::float_serde")]
    pub lhs: f64,
    #[serde(with = "finobs::float_serde")]
    pub rhs: f64,
    #[serde(with = "finobs::float_serde")]
    pub slack: f64,
    #[serde(with = "finobs::float_serde")]
    pub min_step_slack: f64,
    pub failed_steps: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TelescopeRow {
    pub x0_id: usize,
    pub m: usize,
    pub ell_m: f64,
    pub delta_m: f64,
    pub epsilon_m: f64,
    #[serde(with = "finobs::float_serde")]
    pub lhs: f64,
    #[serde(with = "finobs::float_serde")]
    pub rhs: f64,
    #[serde(with = "finobs::float_serde")]
    pub slack: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TelescopeSummary {
    pub x0_id: usize,
    pub pass: bool,
    #[serde(with = "finobs::float_serde")]
    pub min_slack: f64,
    pub max_identity_error: f64,
    pub remainder: f64,
    #[serde(rename = "F_ell1")]
    pub f_ell1: f64,
    #[serde(rename = "F_T")]
    pub f_final: f64,
    pub quadrature_converged: bool,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BalanceSummary {
    pub samples: usize,
    #[serde(with = "finobs::float_serde")]
    pub min_slack: f64,
    #[serde(with = "finobs::float_serde")]
    pub min_step_slack: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub config_hash: String,
    pub instance_hash: String,
    pub seed: u64,
    pub version: String,
    pub grid: GridSpec,
    pub mode: AuditMode,
    pub set_mode: SetMode,
    pub bundle: CertifiedBundle,
    pub certificate: ObservabilityCertificate,
    pub sequence: DensitySequence,
    pub balance: BalanceSummary,
    pub telescope: Vec<TelescopeSummary>,
    pub obs: ObsReport,
    /// `None` in diagnostic mode.
    pub pass: Option<bool>,
}

#[derive(Serialize)]
struct TraceRow {
    t: f64,
    #[serde(rename = "F")]
    f: f64,
    #[serde(rename = "G")]
    g: f64,
}

#[derive(Serialize)]
struct Timings {
    certify_s: f64,
    balance_s: f64,
    telescope_s: f64,
    obs_s: f64,
    total_s: f64,
}

fn verify_cmd(common: &Common, bundle_path: Option<&Path>) -> Outcome {
    let start = Instant::now();
    let (config, out) = load(common)?;
    let mode: AuditMode = common.mode.into();
    let inst = instance(&config)?;
    let bundle = obtain_bundle(&config, &inst, bundle_path, mode, &out)?;
    bundle.admit(&inst, mode)?;
    let constants = &bundle.constants;
    let certify_s = start.elapsed().as_secs_f64();

    let der = derive_chain(&inst.set, constants, config.mode, config.depth, config.ell1)?;
    let batch = inst.random_batch(config.batch, config.seed);

    let phase = Instant::now();
    let mut balance_rows = Vec::with_capacity(config.balance_samples);
    for (i, tuple) in random_balance_tuples(&inst.set, config.balance_samples, config.seed)
        .into_iter()
        .enumerate()
    {
        let x0_id = i % batch.len();
        let a = epsilon_balance_check(&inst, constants, tuple.s, tuple.t, tuple.epsilon, &batch[x0_id])?;
        balance_rows.push(BalanceRow {
            sample: i,
            x0_id,
            s: a.s,
            t: a.t,
            epsilon: a.epsilon,
            lambda: a.lambda,
            lhs: a.lhs,
            rhs: a.rhs,
            slack: a.slack,
            min_step_slack: a.min_step_slack(),
            failed_steps: a.failed_steps().join("|"),
        });
    }
    let balance = BalanceSummary {
        samples: balance_rows.len(),
        min_slack: balance_rows.iter().map(|r| r.slack).fold(f64::INFINITY, f64::min),
        min_step_slack: balance_rows
            .iter()
            .map(|r| r.min_step_slack)
            .fold(f64::INFINITY, f64::min),
        failures: balance_rows.iter().filter(|r| !r.failed_steps.is_empty()).count(),
    };
    let balance_s = phase.elapsed().as_secs_f64();

    let phase = Instant::now();
    let mut telescope = Vec::with_capacity(batch.len());
    let mut telescope_rows = Vec::new();
    for (id, x0) in batch.iter().enumerate() {
        let audit = run_telescope(&inst, constants, &der, x0, id)?;
        telescope_rows.extend(audit.steps.iter().map(|s| TelescopeRow {
            x0_id: id,
            m: s.m,
            ell_m: s.ell_m,
            delta_m: s.delta_m,
            epsilon_m: s.epsilon_m,
            lhs: s.lhs,
            rhs: s.rhs,
            slack: s.slack,
        }));
        let min_slack = audit
            .steps
            .iter()
            .flat_map(|s| s.checks.iter())
            .chain(&audit.final_checks)
            .map(|c| c.slack)
            .fold(f64::INFINITY, f64::min);
        telescope.push(TelescopeSummary {
            x0_id: id,
            pass: audit.pass,
            min_slack,
            max_identity_error: audit.max_identity_error,
            remainder: audit.remainder,
            f_ell1: audit.f_ell1,
            f_final: audit.f_final,
            quadrature_converged: audit.quadrature_converged,
            failures: audit.failures(),
        });
    }
    let telescope_s = phase.elapsed().as_secs_f64();

    let phase = Instant::now();
    let obs = verify_obs(&inst, &bundle, &der, &config.r, &batch, mode)?;
    let obs_s = phase.elapsed().as_secs_f64();

    let times: Vec<f64> = (0..config.trace_points)
        .map(|k| inst.horizon() * k as f64 / (config.trace_points - 1) as f64)
        .collect();
    let trace = compute_traces(&inst, &batch[0], &times, 0)?;

    let all_pass = balance.failures == 0 && telescope.iter().all(|t| t.pass) && obs.pass.unwrap_or(true);
    let pass = (mode == AuditMode::Certify).then_some(all_pass);
    let lineage = Lineage::of(&config);
    let report = RunReport {
        schema_version: SCHEMA_VERSION,
        config_hash: lineage.config_hash,
        instance_hash: lineage.instance_hash,
        seed: config.seed,
        version: env!("CARGO_PKG_VERSION").into(),
        grid: config.grid,
        mode,
        set_mode: config.mode,
        bundle: bundle.clone(),
        certificate: der.certificate.clone(),
        sequence: der.sequence.clone(),
        balance,
        telescope,
        obs,
        pass,
    };

    out.json("report.json", &report)?;
    out.csv("balance.csv", &balance_rows)?;
    out.csv("telescope.csv", &telescope_rows)?;
    for table in &report.obs.tables {
        out.csv(&format!("obs_r{}.csv", r_tag(table.r)), &table.rows)?;
    }
    out.csv(
        "traces.csv",
        trace
            .times
            .iter()
            .zip(&trace.f)
            .zip(&trace.g)
            .map(|((&t, &f), &g)| TraceRow { t, f, g }),
    )?;
    out.json(
        "timings.json",
        &Timings {
            certify_s,
            balance_s,
            telescope_s,
            obs_s,
            total_s: start.elapsed().as_secs_f64(),
        },
    )?;
    print!("{}", summary(&report));
    Ok(match pass {
        Some(false) => exit::AUDIT,
        _ => exit::PASS,
    })
}

fn verdict(pass: Option<bool>) -> &'static str {
    match pass {
        Some(true) => "PASS",
        Some(false) => "FAIL",
        None => "n/a (diagnostic)",
    }
}

fn summary(report: &RunReport) -> String {
    let mut s = String::new();
    let cert = &report.certificate;
    s += &format!(
        "mode: {:?}, set mode: {:?}, seed {}\n",
        report.mode, report.set_mode, report.seed
    );
    s += &format!(
        "C_obs = {:e} (ln {:.6}), ell = {}, ell1 = {}\n",
        cert.cobs, cert.log_cobs, cert.ell, cert.ell1
    );
    s += &format!(
        "epsilon balance: {} samples, {} failing, min slack {:e}, min step slack {:e}\n",
        report.balance.samples, report.balance.failures, report.balance.min_slack, report.balance.min_step_slack
    );
    let failing = report.telescope.iter().filter(|t| !t.pass).count();
    s += &format!(
        "telescope: {} initial data, {} failing\n",
        report.telescope.len(),
        failing
    );
    for table in &report.obs.tables {
        s += &format!(
            "obs r = {}: C_obs(r) = {:e}, min margin {:e}, {}\n",
            table.r,
            table.cobs_r,
            table.min_margin,
            verdict(table.pass)
        );
    }
    s += &format!("overall: {}\n", verdict(report.pass));
    s
}

fn report_cmd(out: &Path) -> Outcome {
    let path = out.join("report.json");
    let text = std::fs::read_to_string(&path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::config)?;
    let report: RunReport = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(Failure::config)?;
    print!("{}", summary(&report));
    Ok(match report.pass {
        Some(false) => exit::AUDIT,
        _ => exit::PASS,
    })
}
