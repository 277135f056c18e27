use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use serde_json::json;

use oseen_spectral::acceptance;
use oseen_spectral::config::{Command, RawConfig, RawGrid, RawTolerances, RunConfig};
use oseen_spectral::ops::{assemble_hk, ModeParams};
use oseen_spectral::output::{self, GateRecord, OutputSet, SpectrumRow};
use oseen_spectral::semigroup::fitted_decay;
use oseen_spectral::spectral::{eig, eigenvalues, mode_operator, robust_flags, smoothed_gaussian_vectors};
use oseen_spectral::study::{self, ScanResolution, SweepOptions};
use oseen_spectral::Error;

/// Spectral and pseudospectral experiments for the linearized operators
/// around the Oseen vortex.
#[derive(Parser, Debug)]
#[command(name = "oseen-spectral", version)]
struct Cli {
    /// spectrum | sweep | gap-decay | coercivity | appendix-scan | figure-data | semigroup | selftest
    command: String,
    /// TOML file; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    n: Option<i64>,
    #[arg(long)]
    r_max: Option<f64>,
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    k: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    k_max: Option<i64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    k_list: Option<Vec<i64>>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    alpha_grid: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<f64>,
    #[arg(long)]
    delta_policy: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    n_regions: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    n_eigs: Option<i64>,
    #[arg(long)]
    lemma: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    n_coarse: Option<i64>,
    /// selftest: comma-separated criterion numbers to run.
    #[arg(long, value_delimiter = ',')]
    only: Option<Vec<u32>>,
}

impl Cli {
    fn raw(&self) -> Result<RawConfig, Error> {
        let command: Command = serde_json::from_value(json!(self.command))
            .map_err(|_| Error::param("command", format!("unknown command `{}`", self.command)))?;
        let grid = (self.n.is_some() || self.r_max.is_some() || self.scheme.is_some())
            .then(|| RawGrid { n: self.n, r_max: self.r_max, scheme: self.scheme.clone() });
        Ok(RawConfig {
            command: Some(command),
            grid,
            k: self.k,
            k_max: self.k_max,
            k_list: self.k_list.clone(),
            alpha: self.alpha,
            alpha_grid: self.alpha_grid.clone(),
            delta: self.delta,
            delta_policy: self.delta_policy.clone(),
            n_regions: self.n_regions,
            n_eigs: self.n_eigs,
            lemma: self.lemma.clone(),
            seed: self.seed,
            out_dir: self.out_dir.clone(),
            tolerances: self.n_coarse.map(|c| RawTolerances { n_coarse: Some(c), ..Default::default() }),
        })
    }
}

fn gate(name: &str, pass: bool, detail: impl Into<String>) -> GateRecord {
    GateRecord { name: name.to_string(), pass, detail: detail.into() }
}

fn run(cfg: &RunConfig, only: &[u32], out: &mut OutputSet) -> Result<Vec<GateRecord>, Error> {
    let mut gates = Vec::new();
    match cfg.command {
        Command::Spectrum => {
            let grid = study::grid_from(&cfg.grid)?;
            let spec = eig(&mode_operator(&grid, cfg.k, cfg.alpha)?)?;
            let fine = eigenvalues(&mode_operator(&grid.refined()?, cfg.k, cfg.alpha)?)?;
            let lead = spec.leading(cfg.n_eigs);
            let robust = robust_flags(lead, &fine.eigenvalues, cfg.tolerances.robust);
            let rows: Vec<SpectrumRow> = lead
                .iter()
                .zip(&robust)
                .map(|(z, &rb)| SpectrumRow { k: cfg.k, alpha: cfg.alpha, re: z.re, im: z.im, residual: spec.residual, grid_robust: rb })
                .collect();
            out.write_text("spectrum.csv", &output::spectrum_csv(&rows))?;
            gates.push(gate("leading eigenvalue grid-robust", robust.first().copied().unwrap_or(false), format!("{}", lead[0])));
        }
        Command::Sweep => {
            let opts = SweepOptions { n_coarse: cfg.tolerances.n_coarse, ordering_tol: cfg.tolerances.ordering, ..Default::default() };
            let res = study::run_sweep(&cfg.alpha_grid, cfg.k_max, &cfg.grid, &opts)?;
            out.write_text("sweep.csv", &output::sweep_csv(&res))?;
            out.write_json("sweep.json", &res)?;
            gates.push(gate("sigma >= psi >= 1", res.ordering_ok, ""));
            gates.push(gate("monotone mode bound", res.monotone_violations.is_empty(), res.monotone_violations.join("; ")));
            gates.push(gate("grid robustness", res.grid_robust.iter().all(|b| *b), res.warnings.join("; ")));
            println!("sigma exponent {:.4}, psi exponent {:.4}", res.sigma_exponent, res.psi_exponent);
        }
        Command::GapDecay => {
            let g = study::resolvent_gap_decay(&cfg.alpha_grid, cfg.k, &cfg.grid)?;
            let rows = (0..g.alphas.len()).map(|i| vec![g.alphas[i], g.betas[i], g.d[i]]);
            out.write_text("gap_decay.csv", &output::table_csv("alpha,beta,d", rows))?;
            out.write_json("gap_decay.json", &g)?;
            gates.push(gate("gap exponent", g.pass, format!("exponent {:.4}, C {:.4}", g.exponent, g.c_fit)));
        }
        Command::Coercivity => {
            let rep = study::coercivity_table(&cfg.alpha_grid, &cfg.k_list, &cfg.grid, cfg.seed)?;
            let mut csv = String::from("k,quantity,alpha,value\n");
            for e in &rep.entries {
                for (i, v) in e.values.iter().enumerate() {
                    let a = e.alphas.get(i).map_or("NaN".to_string(), |a| output::fmt_f64(*a));
                    csv.push_str(&format!("{},{},{},{}\n", e.k, e.quantity, a, output::fmt_f64(*v)));
                }
            }
            out.write_text("coercivity.csv", &csv)?;
            out.write_json("coercivity.json", &rep)?;
            gates.push(gate("coercivity bounds alpha-stable", rep.pass, ""));
        }
        Command::AppendixScan => {
            let res = ScanResolution { seed: cfg.seed, alphas: cfg.alpha_grid.clone(), ..Default::default() };
            let reports = cfg.lemmas.iter().map(|id| study::appendix_scan(*id, &res)).collect::<Result<Vec<_>, _>>()?;
            for r in &reports {
                gates.push(gate(&r.lemma_id.to_string(), r.pass, format!("{} violations in {} points, constant {}", r.violations, r.evaluations, r.fitted_constant)));
            }
            out.write_json("appendix_scan.json", &reports)?;
        }
        Command::FigureData => {
            let p = ModeParams::new(cfg.k, cfg.alpha)?;
            let data = study::figure_dataset(&p, cfg.delta_policy, cfg.n_regions, &cfg.grid)?;
            out.write_json("regions.json", &output::region_records(&data))?;
            let rows: Vec<SpectrumRow> = data
                .eigenvalues
                .iter()
                .map(|e| SpectrumRow { k: data.k, alpha: data.alpha, re: e.re, im: e.im, residual: e.residual, grid_robust: e.grid_robust })
                .collect();
            out.write_text("figure_eigenvalues.csv", &output::spectrum_csv(&rows))?;
            out.write_json("figure.json", &data)?;
            gates.push(gate("robust eigenvalues contained", data.all_contained, ""));
            gates.push(gate("regions nonempty", data.regions_nonempty, format!("{:?}", data.region_hits)));
        }
        Command::Semigroup => {
            let grid = study::grid_from(&cfg.grid)?;
            let op = assemble_hk(&grid, &ModeParams::new(cfg.k, cfg.alpha)?)?;
            let s = eigenvalues(&op)?.abscissa;
            let w0 = smoothed_gaussian_vectors(&grid, 1, cfg.seed)?.remove(0);
            let fit = fitted_decay(&op, &w0, s, 241)?;
            let rows = fit.taus.iter().zip(&fit.norms).map(|(t, v)| vec![*t, *v]);
            out.write_text("trajectory.csv", &output::table_csv("tau,norm", rows))?;
            out.write_json("decay.json", &json!({ "abscissa": s, "fit": fit }))?;
            let rel = (fit.rate - s).abs() / s.abs();
            gates.push(gate("decay rate within 2%", rel <= 0.02, format!("rate {} vs abscissa {s}", fit.rate)));
        }
        Command::Selftest => {
            let rep = acceptance::run(only, |c| println!("{}", c.line()))?;
            for c in &rep.criteria {
                gates.push(gate(&format!("criterion {}", c.id), c.pass, c.detail.clone()));
            }
            out.write_json("selftest.json", &rep)?;
        }
    }
    Ok(gates)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = output::now();
    let raw = match &cli.config {
        Some(path) => RawConfig::from_file(path).and_then(|f| Ok(f.merge(cli.raw()?))),
        None => cli.raw(),
    };
    let cfg = match raw.and_then(RunConfig::validate) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    let mut out = match OutputSet::create(&cfg.out_dir) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("cannot create output directory {}: {e}", cfg.out_dir.display());
            return ExitCode::from(2);
        }
    };
    let gates = match run(&cfg, cli.only.as_deref().unwrap_or(&[]), &mut out) {
        Ok(g) => g,
        Err(e @ (Error::Param { .. } | Error::Config(_))) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("{} failed: {e}", cfg.command);
            return ExitCode::from(1);
        }
    };
    let all = gates.iter().all(|g| g.pass);
    for g in &gates {
        println!("{} {}{}", if g.pass { "PASS" } else { "FAIL" }, g.name, if g.detail.is_empty() { String::new() } else { format!(": {}", g.detail) });
    }
    let config = serde_json::to_value(&cfg).unwrap_or_default();
    if let Err(e) = out.finish(config, started, gates) {
        eprintln!("cannot write manifest: {e}");
        return ExitCode::from(1);
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
