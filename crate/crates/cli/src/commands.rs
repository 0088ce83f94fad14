//! Subcommand implementations. Each writes its CSV files under the configured
//! output directory and returns a short text report.

use std::fmt::Write as _;

use qbm_core::mastereq::{kossakowski, nonmarkov_witness, Markovianity};
use qbm_core::moments::asymptotic_state_with;
use qbm_core::params::Switches;

use crate::config::RunConfig;
use crate::output::{ensure_dir, entry_path, write_csv, write_records};
use crate::pipeline::{self, describe, resolve_switches, Calibration, TARGET_RATIOS, TABLE1_NAMES};
use crate::CliError;

pub const TRAJECTORY_COLUMNS: [&str; 6] = ["t", "q_a", "p_a", "var_q", "var_p", "cov_qp"];
pub const COEFFICIENT_COLUMNS: [&str; 8] = ["t", "xi", "upsilon", "gamma_big", "theta", "gamma_small", "det_a", "masked"];
pub const GREENS_COLUMNS: [&str; 11] = ["t", "g", "g_dot", "g_ddot", "g1", "g2", "g3", "g4", "g5", "g6", "f"];
pub const WITNESS_COLUMNS: [&str; 6] = ["t", "det_a", "det_a_second_form", "eig_min", "eig_max", "masked"];

fn calibration_note(out: &mut String, cal: &Option<Calibration>) {
    if let Some(c) = cal {
        let _ = writeln!(out, "calibrated switches: {} (oracle error {:.3e})", describe(&c.selected), c.error);
    }
}

fn prepare(cfg: &RunConfig) -> Result<(Switches, String), CliError> {
    ensure_dir(&cfg.output)?;
    let (sw, cal) = resolve_switches(cfg)?;
    let mut report = String::new();
    calibration_note(&mut report, &cal);
    Ok((sw, report))
}

/// Trajectories for every mu and initial state, plus coefficient and witness tables.
pub fn simulate(cfg: &RunConfig) -> Result<String, CliError> {
    let (sw, mut report) = prepare(cfg)?;
    let manifest = cfg.manifest("simulate", &sw);
    let runs = pipeline::run_config(cfg, &sw, true)?;
    for r in &runs {
        for (k, tr) in r.trajectories.iter().enumerate() {
            write_csv(&entry_path(&cfg.output, "trajectory", r.mu, Some(k)), &manifest, &TRAJECTORY_COLUMNS, tr.csv_rows())?;
            match asymptotic_state_with(tr, cfg.window, cfg.drift_threshold) {
                Ok(a) => {
                    let s = a.state;
                    let _ = writeln!(
                        report,
                        "mu={} state={k}: asymptote var_q={:.6e} var_p={:.6e} cov_qp={:.6e} (drift {:.2e})",
                        r.mu, s.var_q, s.var_p, s.cov_qp, a.drift
                    );
                }
                Err(e) => {
                    let _ = writeln!(report, "mu={} state={k}: {e}", r.mu);
                }
            }
        }
        let c = r.coefficients.as_ref().expect("requested");
        write_csv(&entry_path(&cfg.output, "coefficients", r.mu, None), &manifest, &COEFFICIENT_COLUMNS, c.csv_rows())?;
        write_witness(cfg, &manifest, r.mu, c, &mut report)?;
    }
    Ok(report)
}

/// Master-equation coefficients and propagators.
pub fn coefficients(cfg: &RunConfig) -> Result<String, CliError> {
    let (sw, mut report) = prepare(cfg)?;
    let manifest = cfg.manifest("coefficients", &sw);
    let runs = pipeline::run_config(cfg, &sw, true)?;
    for r in &runs {
        let c = r.coefficients.as_ref().expect("requested");
        write_csv(&entry_path(&cfg.output, "coefficients", r.mu, None), &manifest, &COEFFICIENT_COLUMNS, c.csv_rows())?;
        write_csv(&entry_path(&cfg.output, "greens", r.mu, None), &manifest, &GREENS_COLUMNS, r.greens.csv_rows())?;
        let _ = writeln!(
            report,
            "mu={}: m'={:.6e} omega={:.6e} masked fraction {:.3e}{}",
            r.mu,
            r.consts.m_prime,
            r.consts.omega,
            c.masked_fraction(),
            if c.mask_warning() { " (WARNING: more than 10% of the grid is masked)" } else { "" }
        );
    }
    Ok(report)
}

fn write_witness(
    cfg: &RunConfig,
    manifest: &str,
    mu: f64,
    c: &qbm_core::mastereq::MasterEqCoefficients,
    report: &mut String,
) -> Result<(), CliError> {
    let w = nonmarkov_witness(c, cfg.witness_tolerance);
    let rows = (0..c.grid.len()).map(|i| {
        let eig = kossakowski(c, i).map(|k| k.eigenvalues()).unwrap_or([f64::NAN; 2]);
        [c.grid.t(i), w.det[i], w.det_second_form[i], eig[0], eig[1], if w.masked[i] { 1.0 } else { 0.0 }]
    });
    write_csv(&entry_path(&cfg.output, "witness", mu, None), manifest, &WITNESS_COLUMNS, rows)?;
    let class = match w.classification {
        Markovianity::NonMarkovian => "non-Markovian",
        Markovianity::SemigroupLimit => "semigroup limit",
    };
    let _ = writeln!(
        report,
        "mu={mu}: {class}; det A in [{:.4e}, {:.4e}]; second-form discrepancy {:.4e}{}",
        w.min_det(),
        w.max_det(),
        w.second_form_discrepancy(),
        if w.max_det() > cfg.witness_tolerance { "; WARNING: det A exceeds the tolerance" } else { "" }
    );
    Ok(())
}

/// Kossakowski determinant series and classification.
pub fn witness(cfg: &RunConfig) -> Result<String, CliError> {
    let (sw, mut report) = prepare(cfg)?;
    let manifest = cfg.manifest("witness", &sw);
    let runs = pipeline::run_config(cfg, &sw, true)?;
    for r in &runs {
        write_witness(cfg, &manifest, r.mu, r.coefficients.as_ref().expect("requested"), &mut report)?;
    }
    Ok(report)
}

/// Side-by-side oracle and analytic moments with their relative errors.
pub fn oracle_compare(cfg: &RunConfig) -> Result<String, CliError> {
    if !cfg.oracle {
        return Err(CliError::Config("oracle-compare requires oracle = true".into()));
    }
    let (sw, mut report) = prepare(cfg)?;
    let manifest = cfg.manifest("oracle-compare", &sw);
    let header = [
        "t", "q_a_oracle", "p_a_oracle", "var_q_oracle", "var_p_oracle", "cov_qp_oracle", "q_a", "p_a", "var_q",
        "var_p", "cov_qp",
    ];
    for c in pipeline::oracle_compare(cfg, &sw)? {
        let rows = c.times.iter().zip(c.oracle.iter().zip(&c.analytic)).map(|(t, (o, a))| {
            let mut row = vec![*t];
            row.extend(o.as_array());
            row.extend(a.as_array());
            row
        });
        write_csv(&entry_path(&cfg.output, "oracle", c.mu, None), &manifest, &header, rows)?;
        let e = c.errors;
        let _ = writeln!(
            report,
            "mu={}: relative error q_a {:.3e} p_a {:.3e} var_q {:.3e} var_p {:.3e} cov_qp {:.3e}",
            c.mu, e[0], e[1], e[2], e[3], e[4]
        );
    }
    Ok(report)
}

/// Asymptotic ratios for s = 1 (config gamma and t_end) and s = 2
/// (table1_gamma_s2, table1_t_end_s2). Non-converged runs are reported and
/// then turned into an error.
pub fn table1(cfg: &RunConfig) -> Result<String, CliError> {
    let (sw, mut report) = prepare(cfg)?;
    let manifest = cfg.manifest("table1", &sw);
    let columns = [
        pipeline::table1_column(cfg, &sw, 1.0, cfg.gamma, cfg.t_end)?,
        pipeline::table1_column(cfg, &sw, 2.0, cfg.table1_gamma_s2, cfg.table1_t_end_s2)?,
    ];
    let mut rows = Vec::new();
    let mut failed = Vec::new();
    for (col, (_, target)) in columns.iter().zip(TARGET_RATIOS) {
        let r = col.ratios();
        let converged = col.drift() <= cfg.drift_threshold;
        if !converged {
            failed.push(format!("s={} (drift {:.3e} over T={})", col.s, col.drift(), col.t_end));
        }
        for k in 0..3 {
            rows.push(vec![
                format!("{}", col.s),
                TABLE1_NAMES[k].to_string(),
                format!("{:e}", r[k]),
                format!("{}", target[k]),
                format!("{:e}", col.drift()),
                format!("{converged}"),
            ]);
            let _ = writeln!(
                report,
                "s={} {:<22} {:>9.4} (target {:.2}) drift {:.2e}{}",
                col.s,
                TABLE1_NAMES[k],
                r[k],
                target[k],
                col.drift(),
                if converged { "" } else { " NOT CONVERGED" }
            );
        }
    }
    write_records(
        &cfg.output.join("table1.csv"),
        &manifest,
        &["s", "ratio", "value", "target", "drift", "converged"],
        rows,
    )?;
    if !failed.is_empty() {
        print!("{report}");
        return Err(CliError::numerical(
            format!("table1 {}", failed.join(", ")),
            qbm_core::Error::NotConverged { drift: columns.iter().map(|c| c.drift()).fold(0.0, f64::max), threshold: cfg.drift_threshold },
        ));
    }
    Ok(report)
}

/// Ranks every switch combination against the oracle.
pub fn calibrate(cfg: &RunConfig) -> Result<String, CliError> {
    ensure_dir(&cfg.output)?;
    let mut forced = cfg.clone();
    forced.oracle = true;
    let cal = pipeline::calibrate(&forced)?;
    let manifest = cfg.manifest("calibrate", &cal.selected);
    let rows = cal.candidates.iter().map(|(s, e)| {
        vec![
            s.frequency.name().to_string(),
            s.sign.name().to_string(),
            s.noise.name().to_string(),
            format!("{e:e}"),
            format!("{}", *s == cal.selected),
        ]
    });
    write_records(&cfg.output.join("calibration.csv"), &manifest, &["frequency", "sign", "noise", "error", "selected"], rows)?;
    let mut report = String::new();
    for (s, e) in &cal.candidates {
        let _ = writeln!(report, "{:<55} {e:.3e}", describe(s));
    }
    let _ = writeln!(report, "selected: {}", describe(&cal.selected));
    Ok(report)
}
