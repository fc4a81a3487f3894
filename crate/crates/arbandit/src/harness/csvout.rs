//! CSV emission. Numbers are written with Rust's shortest round-trip float
//! formatting (locale-independent, full precision), so parsing a file
//! reproduces the in-memory table exactly. Cells for designs that were not
//! requested are written as NaN.

use std::io::{self, Write};

use super::runner::{BayesTable, ResultTable};
use crate::designs::Design;
use crate::equivtest::TestReport;

fn fmt(x: f64) -> String {
    format!("{x}")
}

/// One row per horizon:
/// `horizon,baseline_mean,baseline_lb,baseline_ub,AR_mean,AR_lb,AR_ub,
/// baseline_var,AR_var,baseline_num_interactions,AR_num_interactions`,
/// then `varT_pi<i>_<arm>` columns with per-arm pull-count variances over T
/// (taken from the replay design when it ran, otherwise from the first
/// design that did).
pub fn emit_csv<W: Write + ?Sized>(table: &ResultTable, w: &mut W) -> io::Result<()> {
    let vart_design = [Design::Ar, Design::Naive, Design::SharedStack]
        .into_iter()
        .find(|&d| table.rows.iter().all(|r| r.design(d).is_some()));

    write!(
        w,
        "horizon,baseline_mean,baseline_lb,baseline_ub,AR_mean,AR_lb,AR_ub,\
         baseline_var,AR_var,baseline_num_interactions,AR_num_interactions"
    )?;
    if vart_design.is_some() {
        for policy in 0..2 {
            for arm in 1..=table.k {
                write!(w, ",varT_pi{policy}_{arm}")?;
            }
        }
    }
    writeln!(w)?;

    for row in &table.rows {
        let naive = row.design(Design::Naive);
        let ar = row.design(Design::Ar);
        let get = |s: Option<&crate::harness::DesignStats>, f: fn(&crate::harness::DesignStats) -> f64| {
            s.map(f).unwrap_or(f64::NAN)
        };
        let cells = [
            f64::from(row.horizon),
            get(naive, |s| s.mean),
            get(naive, |s| s.lb),
            get(naive, |s| s.ub),
            get(ar, |s| s.mean),
            get(ar, |s| s.lb),
            get(ar, |s| s.ub),
            get(naive, |s| s.var),
            get(ar, |s| s.var),
            get(naive, |s| s.mean_interactions),
            get(ar, |s| s.mean_interactions),
        ];
        let mut line: Vec<String> = cells.iter().map(|&x| fmt(x)).collect();
        if let Some(d) = vart_design {
            let stats = row.design(d).expect("checked above");
            for policy in 0..2 {
                for arm in 0..table.k as usize {
                    line.push(fmt(stats.pull_var_over_t[policy][arm]));
                }
            }
        }
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

/// `test,statistic,p_value,pass` rows.
pub fn emit_test_reports_csv<W: Write + ?Sized>(reports: &[TestReport], w: &mut W) -> io::Result<()> {
    writeln!(w, "test,statistic,p_value,pass")?;
    for r in reports {
        writeln!(w, "{},{},{},{}", r.name, fmt(r.statistic), fmt(r.p_value), r.pass)?;
    }
    Ok(())
}

/// `horizon,bayes_mean,bayes_lb,bayes_ub,instances_m` rows.
pub fn emit_bayes_csv<W: Write + ?Sized>(table: &BayesTable, w: &mut W) -> io::Result<()> {
    writeln!(w, "horizon,bayes_mean,bayes_lb,bayes_ub,instances_m")?;
    for row in &table.rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            row.horizon,
            fmt(row.mean),
            fmt(row.lb),
            fmt(row.ub),
            row.instances_m
        )?;
    }
    Ok(())
}
