//! Command implementations behind the `snc` binary.
//!
//! Every command is a pure function of its config (given `--seed`) and writes
//! UTF-8, LF-terminated CSV. Keeping them here lets tests and examples drive
//! the exact code paths the binary exposes.

use crate::codec::{CodingMode, SncParams};
use crate::gf::FieldSpec;
use crate::model::Model;
use crate::sim::{self, compare, run_campaign, Campaign};
use crate::tuning::{optimize_schedule, ScheduleOptions, TuningSchedule};
use crate::{Error, Result};
use std::fmt::Write as _;
use std::path::Path;

/// Parsed scenario shared by the subcommands.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub n: usize,
    pub q: u16,
    /// row weight; exactly one of `w`/`p` is set
    pub w: Option<usize>,
    pub p: Option<f64>,
    pub epsilon: f64,
    pub trials: usize,
    pub m_max: usize,
    pub x_list: Vec<usize>,
    pub seed: u64,
    pub fast: bool,
}

impl ExperimentConfig {
    pub fn density(&self) -> Result<f64> {
        match (self.w, self.p) {
            (Some(_), Some(_)) => Err(Error::BadParams("give either --w or --p, not both".into())),
            (Some(w), None) => Ok(w as f64 / self.n as f64),
            (None, Some(p)) => Ok(p),
            (None, None) => Err(Error::BadParams("one of --w or --p is required".into())),
        }
    }

    pub fn params(&self, mode: CodingMode) -> Result<SncParams> {
        SncParams::new(self.n, FieldSpec::new(self.q)?, self.density()?, self.epsilon, mode)
    }

    pub fn effective_trials(&self) -> usize {
        if self.fast {
            self.trials.min(2000)
        } else {
            self.trials
        }
    }
}

/// Accepts 2, 16, 256 and the aliases 2^4 / 2^8.
pub fn parse_field_order(s: &str) -> Result<u16> {
    match s {
        "2" => Ok(2),
        "16" | "2^4" => Ok(16),
        "256" | "2^8" => Ok(256),
        other => Err(Error::BadParams(format!("unknown field order '{other}'"))),
    }
}

pub fn parse_x_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|e| Error::BadParams(format!("bad x-list entry '{t}': {e}")))
        })
        .collect()
}

fn write_out(path: Option<&Path>, contents: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, contents)?,
        None => print!("{contents}"),
    }
    Ok(())
}

/// `model`: write the analytical grid P(X>=x|M=m), P(X=x|M=m) as CSV.
pub fn cmd_model(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<()> {
    let p = cfg.density()?;
    let _ = cfg.params(CodingMode::FullyRandom)?; // validate
    let mut model = Model::from_parts(cfg.n, cfg.q, p);
    let table = if cfg.epsilon > 0.0 {
        // erasure variant: evaluate at effective reception counts
        let mut t = model.partial_decoding_table(cfg.m_max);
        let base = t.clone();
        for m in 0..=cfg.m_max {
            let m_eff = ((m as f64) * (1.0 - cfg.epsilon)).round() as usize;
            let m_eff = m_eff.min(cfg.m_max);
            t.exact[m] = base.exact[m_eff].clone();
            t.at_least[m] = base.at_least[m_eff].clone();
        }
        t
    } else {
        model.partial_decoding_table(cfg.m_max)
    };
    let mut csv = String::from("m,x,at_least,exact\n");
    for m in 0..=cfg.m_max {
        for &x in &cfg.x_list {
            if x > cfg.n {
                return Err(Error::BadParams(format!("x = {x} exceeds n = {}", cfg.n)));
            }
            writeln!(csv, "{},{},{},{}", m, x, table.at_least[m][x], table.exact[m][x]).unwrap();
        }
    }
    write_out(out, &csv)
}

/// `simulate`: run a campaign, write the empirical grid.
pub fn cmd_simulate(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<()> {
    let params = cfg.params(CodingMode::FullyRandom)?;
    let mut c = Campaign::new(params, cfg.effective_trials(), cfg.m_max, cfg.seed);
    c.x_list = cfg.x_list.clone();
    let r = run_campaign(&c);
    let mut csv = String::from("m,x,sim_at_least,sim_se,n_trials\n");
    let t = r.trials as f64;
    for m in 1..=cfg.m_max {
        for &x in &cfg.x_list {
            let v = r.at_least[x][m];
            let se = (v * (1.0 - v) / t).sqrt();
            writeln!(csv, "{},{},{},{},{}", m, x, v, se, r.trials).unwrap();
        }
    }
    write_out(out, &csv)?;
    eprintln!(
        "simulate: n={} q={} trials={} add={:.2} ant={:.2} (completed {}/{})",
        cfg.n,
        cfg.q,
        r.trials,
        r.add,
        r.ant,
        r.completed_trials,
        r.trials
    );
    Ok(())
}

/// `tune`: emit the density schedule CSV (and optional gnuplot script).
pub fn cmd_tune(
    n: usize,
    q: u16,
    ant_cap: Option<f64>,
    out: Option<&Path>,
    plot_script: Option<&Path>,
) -> Result<()> {
    let mut opts = ScheduleOptions::for_n(n);
    opts.ant_cap = ant_cap;
    let s = optimize_schedule(n, q, &opts)?;
    write_out(out, &s.to_csv())?;
    if let Some(ps) = plot_script {
        let data = out.map(|p| p.display().to_string()).unwrap_or_else(|| "schedule.csv".into());
        let script = format!(
            "set datafile separator ','\n\
             set xlabel 'm'\nset ylabel 'p'\nset key top left\n\
             plot '{data}' using 1:3 with linespoints title 'packet density (n={n}, q={q})', \\\n     '{data}' using 1:2 with lines title 'cumulative target'\n"
        );
        std::fs::write(ps, script)?;
    }
    eprintln!(
        "tune: n={n} q={q} m0={} model_add={:.2} model_ant={:.2}",
        s.m0, s.model_add, s.model_ant
    );
    Ok(())
}

/// `validate`: model + campaign + deviation report.
pub fn cmd_validate(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<f64> {
    let p = cfg.density()?;
    let params = cfg.params(CodingMode::FullyRandom)?;
    let mut model = Model::from_parts(cfg.n, cfg.q, p);
    let table = model.partial_decoding_table(cfg.m_max);
    let mut c = Campaign::new(params, cfg.effective_trials(), cfg.m_max, cfg.seed);
    c.x_list = cfg.x_list.clone();
    let r = run_campaign(&c);
    let rep = compare(&table, &r, &cfg.x_list)?;
    let mut csv = sim::result_csv(&table, &r, &cfg.x_list);
    csv.push_str(&format!("# mapd_pp,{}\n# mapd_relative_pct,{}\n", rep.mapd, rep.mapd_relative));
    write_out(out, &csv)?;
    eprintln!(
        "validate: n={} q={} p={:.4} trials={} MAPD = {:.2} pp (relative {:.1}%)",
        cfg.n,
        cfg.q,
        p,
        cfg.effective_trials(),
        rep.mapd,
        rep.mapd_relative
    );
    Ok(rep.mapd)
}

/// One row of the delay sweep.
#[derive(Debug, Clone)]
pub struct SweepEntry {
    pub label: String,
    pub add: f64,
    pub add_se: f64,
    pub ant: f64,
    pub ant_se: f64,
}

/// The full fixed-weight sweep plus RLNC and the tuned schedule, simulated.
pub fn delay_sweep(
    n: usize,
    q: u16,
    weights: &[usize],
    trials: usize,
    seed: u64,
) -> Result<(Vec<SweepEntry>, TuningSchedule)> {
    let mut entries = Vec::new();
    let m_max = 2 * n;
    for (i, &w) in weights.iter().enumerate() {
        let c = sim::fixed_weight_campaign(n, q, w, trials, m_max, seed.wrapping_add(i as u64))?;
        let r = run_campaign(&c);
        entries.push(SweepEntry {
            label: format!("w={w}"),
            add: r.add,
            add_se: r.add_se,
            ant: r.ant,
            ant_se: r.ant_se,
        });
    }
    // RLNC baseline
    let field = FieldSpec::new(q)?;
    let rlnc = SncParams::new(n, field.clone(), SncParams::rlnc_density(q), 0.0, CodingMode::FullyRandom)?;
    let c = Campaign::new(rlnc, trials, m_max, seed.wrapping_add(100));
    let r = run_campaign(&c);
    entries.push(SweepEntry {
        label: "rlnc".into(),
        add: r.add,
        add_se: r.add_se,
        ant: r.ant,
        ant_se: r.ant_se,
    });
    // tuned schedule, transmitted with constrained-weight rows
    let schedule = optimize_schedule(n, q, &ScheduleOptions::for_n(n))?;
    let tuned_params = SncParams::new(n, field, schedule.per_packet[0], 0.0, CodingMode::Constrained)?;
    let mut c = Campaign::new(tuned_params, trials, m_max, seed.wrapping_add(200));
    c.schedule = Some(schedule.clone());
    let r = run_campaign(&c);
    entries.push(SweepEntry {
        label: "tuning".into(),
        add: r.add,
        add_se: r.add_se,
        ant: r.ant,
        ant_se: r.ant_se,
    });
    Ok((entries, schedule))
}

/// `table1`: ADD/ANT sweep CSV for one (n, q) with the improvement column
/// (tuning vs RLNC).
pub fn cmd_table1(n: usize, q: u16, trials: usize, seed: u64, out: Option<&Path>) -> Result<()> {
    let weights = [1usize, 2, 3, 5, 10];
    let usable: Vec<usize> = weights.iter().copied().filter(|&w| w <= n).collect();
    let (entries, _) = delay_sweep(n, q, &usable, trials, seed)?;
    let rlnc = entries.iter().find(|e| e.label == "rlnc").unwrap().clone();
    let tuned = entries.iter().find(|e| e.label == "tuning").unwrap().clone();
    let mut csv = String::from("metric");
    for e in &entries {
        write!(csv, ",{}", e.label).unwrap();
    }
    csv.push_str(",improvement_pct\n");
    let imp_add = 100.0 * (tuned.add - rlnc.add) / rlnc.add;
    let imp_ant = 100.0 * (tuned.ant - rlnc.ant) / rlnc.ant;
    csv.push_str("add");
    for e in &entries {
        write!(csv, ",{:.4}", e.add).unwrap();
    }
    writeln!(csv, ",{imp_add:.2}").unwrap();
    csv.push_str("ant");
    for e in &entries {
        write!(csv, ",{:.4}", e.ant).unwrap();
    }
    writeln!(csv, ",{imp_ant:.2}").unwrap();
    write_out(out, &csv)?;
    eprintln!("table1: n={n} q={q} trials={trials}: tuning add {:.2} ({:+.1}% vs rlnc), ant {:.2} ({:+.1}%)",
        tuned.add, imp_add, tuned.ant, imp_ant);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_order_aliases() {
        assert_eq!(parse_field_order("2^4").unwrap(), 16);
        assert_eq!(parse_field_order("2^8").unwrap(), 256);
        assert_eq!(parse_field_order("256").unwrap(), 256);
        assert!(parse_field_order("64").is_err());
    }

    #[test]
    fn x_list_parsing() {
        assert_eq!(parse_x_list("1,5,10,32").unwrap(), vec![1, 5, 10, 32]);
        assert!(parse_x_list("1,x").is_err());
    }

    #[test]
    fn config_density_rules() {
        let mut cfg = ExperimentConfig {
            n: 32,
            q: 2,
            w: Some(2),
            p: None,
            epsilon: 0.0,
            trials: 10,
            m_max: 5,
            x_list: vec![1],
            seed: 0,
            fast: false,
        };
        assert!((cfg.density().unwrap() - 0.0625).abs() < 1e-12);
        cfg.p = Some(0.1);
        assert!(cfg.density().is_err());
        cfg.w = None;
        assert!((cfg.density().unwrap() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn model_csv_round_trips_library_values() {
        let cfg = ExperimentConfig {
            n: 3,
            q: 2,
            w: None,
            p: Some(0.5),
            epsilon: 0.0,
            trials: 1,
            m_max: 4,
            x_list: vec![0, 1, 2, 3],
            seed: 0,
            fast: false,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("grid.csv");
        cmd_model(&cfg, Some(&path)).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut model = Model::from_parts(3, 2, 0.5);
        let table = model.partial_decoding_table(4);
        let mut cells = 0;
        for line in text.lines().skip(1) {
            let f: Vec<&str> = line.split(',').collect();
            let (m, x): (usize, usize) = (f[0].parse().unwrap(), f[1].parse().unwrap());
            let al: f64 = f[2].parse().unwrap();
            let ex: f64 = f[3].parse().unwrap();
            assert_eq!(al, table.at_least[m][x], "at m={m} x={x}");
            assert_eq!(ex, table.exact[m][x]);
            cells += 1;
        }
        assert_eq!(cells, 5 * 4);
    }

    #[test]
    fn seeded_runs_are_identical() {
        let cfg = ExperimentConfig {
            n: 4,
            q: 2,
            w: None,
            p: Some(0.5),
            epsilon: 0.0,
            trials: 200,
            m_max: 6,
            x_list: vec![1, 2],
            seed: 31,
            fast: false,
        };
        let dir = tempfile::tempdir().unwrap();
        let (p1, p2) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
        cmd_simulate(&cfg, Some(&p1)).unwrap();
        cmd_simulate(&cfg, Some(&p2)).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }
}
