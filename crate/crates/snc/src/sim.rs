//! Monte Carlo campaign runner and model-vs-simulation comparison.
//!
//! Trials are mutually independent: trial `k` uses the stream derived from
//! `(base_seed, k)`, so any trial is reproducible in isolation and results are
//! identical for any worker count. Per-trial statistics are accumulated as
//! exact integer counts and merged by commutative, associative addition.

use crate::codec::{draw_with_density, CodingMode, DecoderState, SncParams};
use crate::model::PartialDecodingTable;
use crate::rng::RandomStream;
use crate::tuning::TuningSchedule;
use crate::{Error, Result};
use rayon::prelude::*;

/// One simulation campaign.
#[derive(Debug, Clone)]
pub struct Campaign {
    pub params: SncParams,
    pub trials: usize,
    pub m_max: usize,
    /// decoded-count thresholds of interest (for the at-least grid)
    pub x_list: Vec<usize>,
    /// density schedule; `None` runs at the constant params density
    pub schedule: Option<TuningSchedule>,
    pub base_seed: u64,
    /// hard cap on transmissions per trial when running to completion
    pub completion_cap: usize,
}

impl Campaign {
    pub fn new(params: SncParams, trials: usize, m_max: usize, base_seed: u64) -> Campaign {
        let n = params.n;
        Campaign {
            params,
            trials,
            m_max,
            x_list: (1..=n).collect(),
            schedule: None,
            base_seed,
            completion_cap: 600 * n,
        }
    }

    fn density_at(&self, i: usize) -> f64 {
        match &self.schedule {
            Some(s) => s.density_at(i),
            None => self.params.p,
        }
    }
}

/// Exact-integer accumulator merged across trials.
#[derive(Debug, Clone)]
struct Accum {
    /// at_least[x][m] = number of trials with X >= x after m transmissions
    at_least: Vec<Vec<u64>>,
    /// sum of decoded counts per m
    decoded_sum: Vec<u64>,
    /// rank histogram per m: rank_count[r][m]
    rank_count: Vec<Vec<u64>>,
    /// per-trial sum of decode times (completed trials only)
    add_sum: u128,
    add_sq_sum: u128,
    ant_sum: u128,
    ant_sq_sum: u128,
    completed: u64,
}

impl Accum {
    fn new(n: usize, m_max: usize) -> Accum {
        Accum {
            at_least: vec![vec![0; m_max + 1]; n + 1],
            decoded_sum: vec![0; m_max + 1],
            rank_count: vec![vec![0; m_max + 1]; n + 1],
            add_sum: 0,
            add_sq_sum: 0,
            ant_sum: 0,
            ant_sq_sum: 0,
            completed: 0,
        }
    }

    fn merge(mut self, other: Accum) -> Accum {
        for (a, b) in self.at_least.iter_mut().zip(other.at_least) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        for (a, b) in self.decoded_sum.iter_mut().zip(other.decoded_sum) {
            *a += b;
        }
        for (a, b) in self.rank_count.iter_mut().zip(other.rank_count) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        self.add_sum += other.add_sum;
        self.add_sq_sum += other.add_sq_sum;
        self.ant_sum += other.ant_sum;
        self.ant_sq_sum += other.ant_sq_sum;
        self.completed += other.completed;
        self
    }
}

/// Empirical grids and delay metrics from one campaign.
#[derive(Debug, Clone)]
pub struct CampaignResult {
    pub n: usize,
    pub m_max: usize,
    pub trials: usize,
    /// empirical P(X >= x | M = m), indices [x][m]
    pub at_least: Vec<Vec<f64>>,
    /// empirical E(X | M = m)
    pub expected_curve: Vec<f64>,
    /// empirical rank distribution per m, indices [r][m]
    pub rank_dist: Vec<Vec<f64>>,
    /// mean transmissions per decoded packet (completed trials)
    pub add: f64,
    pub add_se: f64,
    /// mean transmissions to decode the whole generation
    pub ant: f64,
    pub ant_se: f64,
    pub completed_trials: u64,
}

/// Run the campaign. Each trial decodes until both `m_max` transmissions have
/// been simulated and the generation is complete (or the completion cap hits).
pub fn run_campaign(c: &Campaign) -> CampaignResult {
    let n = c.params.n;
    let m_max = c.m_max;
    let acc = (0..c.trials as u64)
        .into_par_iter()
        .fold(
            || Accum::new(n, m_max),
            |mut acc, k| {
                run_trial(c, k, &mut acc);
                acc
            },
        )
        .reduce(|| Accum::new(n, m_max), Accum::merge);

    let t = c.trials as f64;
    let at_least = acc
        .at_least
        .iter()
        .map(|row| row.iter().map(|&v| v as f64 / t).collect())
        .collect();
    let expected_curve = acc.decoded_sum.iter().map(|&v| v as f64 / t).collect();
    let rank_dist = acc
        .rank_count
        .iter()
        .map(|row| row.iter().map(|&v| v as f64 / t).collect())
        .collect();
    let nc = acc.completed as f64;
    let (add, add_se, ant, ant_se) = if acc.completed > 0 {
        // per-trial add_i = (sum of decode times)/n; moments from exact sums
        let add_mean = acc.add_sum as f64 / (nc * n as f64);
        let add_second = acc.add_sq_sum as f64 / (nc * (n as f64) * (n as f64));
        let add_var = add_second - add_mean * add_mean;
        let ant_mean = acc.ant_sum as f64 / nc;
        let ant_var = acc.ant_sq_sum as f64 / nc - ant_mean * ant_mean;
        (
            add_mean,
            (add_var.max(0.0) / nc).sqrt(),
            ant_mean,
            (ant_var.max(0.0) / nc).sqrt(),
        )
    } else {
        (f64::NAN, f64::NAN, f64::NAN, f64::NAN)
    };
    CampaignResult {
        n,
        m_max,
        trials: c.trials,
        at_least,
        expected_curve,
        rank_dist,
        add,
        add_se,
        ant,
        ant_se,
        completed_trials: acc.completed,
    }
}

fn run_trial(c: &Campaign, k: u64, acc: &mut Accum) {
    let n = c.params.n;
    let mut rng = RandomStream::for_trial(c.base_seed, k);
    let mut state = DecoderState::new(c.params.field.clone(), n);
    let mut decode_time_sum: u64 = 0;
    let mut decoded = 0usize;
    let mut completion: Option<usize> = None;
    let mut m = 0usize;
    while m < c.completion_cap {
        m += 1;
        let v = draw_with_density(&c.params, c.density_at(m), &mut rng);
        let erased = c.params.epsilon > 0.0 && rng.next_f64() < c.params.epsilon;
        if !erased {
            let rep = state.receive(&v).expect("dimensions match");
            for _ in &rep.newly_decoded {
                decode_time_sum += m as u64;
                decoded += 1;
            }
        }
        if m <= c.m_max {
            acc.decoded_sum[m] += decoded as u64;
            acc.rank_count[state.rank()][m] += 1;
            for x in 0..=decoded {
                acc.at_least[x][m] += 1;
            }
        }
        if completion.is_none() && decoded == n {
            completion = Some(m);
        }
        if completion.is_some() && m >= c.m_max {
            break;
        }
    }
    // at_least[0][.] counts every trial even before any transmission
    acc.at_least[0][0] += 1;
    acc.rank_count[0][0] += 1;
    if let Some(done) = completion {
        acc.completed += 1;
        acc.add_sum += decode_time_sum as u128;
        acc.add_sq_sum += (decode_time_sum as u128) * (decode_time_sum as u128);
        acc.ant_sum += done as u128;
        acc.ant_sq_sum += (done as u128) * (done as u128);
    }
}

/// Mean absolute deviation between model and simulation grids.
#[derive(Debug, Clone)]
pub struct DeviationReport {
    /// mean |model - empirical| in percentage points over (x in x_list, m in 1..=m_max)
    pub mapd: f64,
    /// relative variant: mean |model - empirical| / empirical over cells with
    /// empirical mass >= 1%
    pub mapd_relative: f64,
    /// worst cells (x, m, model, empirical), most deviant first
    pub per_cell: Vec<(usize, usize, f64, f64)>,
}

/// Compare a model table against an empirical campaign on the same grid.
pub fn compare(model: &PartialDecodingTable, result: &CampaignResult, x_list: &[usize]) -> Result<DeviationReport> {
    if model.n != result.n {
        return Err(Error::GridMismatch(format!("model n = {}, sim n = {}", model.n, result.n)));
    }
    let m_max = model.m_max.min(result.m_max);
    if model.m_max != result.m_max {
        return Err(Error::GridMismatch(format!(
            "model m_max = {}, sim m_max = {}",
            model.m_max, result.m_max
        )));
    }
    let mut devs = Vec::new();
    let mut rel = Vec::new();
    for &x in x_list {
        if x > model.n {
            return Err(Error::GridMismatch(format!("x = {x} > n = {}", model.n)));
        }
        for m in 1..=m_max {
            let mv = model.at_least[m][x];
            let ev = result.at_least[x][m];
            devs.push((x, m, mv, ev));
            if ev >= 0.01 {
                rel.push((mv - ev).abs() / ev);
            }
        }
    }
    let mapd = 100.0 * devs.iter().map(|(_, _, a, b)| (a - b).abs()).sum::<f64>() / devs.len() as f64;
    let mapd_relative = if rel.is_empty() {
        0.0
    } else {
        100.0 * rel.iter().sum::<f64>() / rel.len() as f64
    };
    let mut per_cell = devs;
    per_cell.sort_by(|a, b| {
        let da = (a.2 - a.3).abs();
        let db = (b.2 - b.3).abs();
        db.partial_cmp(&da).unwrap()
    });
    per_cell.truncate(16);
    Ok(DeviationReport { mapd, mapd_relative, per_cell })
}

/// Result CSV: columns (m, x, model_at_least, sim_at_least, sim_se, n_trials).
pub fn result_csv(model: &PartialDecodingTable, result: &CampaignResult, x_list: &[usize]) -> String {
    let mut out = String::from("m,x,model_at_least,sim_at_least,sim_se,n_trials\n");
    let t = result.trials as f64;
    for m in 1..=model.m_max.min(result.m_max) {
        for &x in x_list {
            let sim = result.at_least[x][m];
            let se = (sim * (1.0 - sim) / t).sqrt();
            out.push_str(&format!("{},{},{},{},{},{}\n", m, x, model.at_least[m][x], sim, se, result.trials));
        }
    }
    out
}

/// Metrics CSV row: (config_id, n, q, w_or_tuned, add, add_se, ant, ant_se).
pub fn metrics_csv_header() -> &'static str {
    "config_id,n,q,w_or_tuned,add,add_se,ant,ant_se\n"
}

pub fn metrics_csv_row(config_id: &str, n: usize, q: u16, w_or_tuned: &str, r: &CampaignResult) -> String {
    format!(
        "{},{},{},{},{},{},{},{}\n",
        config_id, n, q, w_or_tuned, r.add, r.add_se, r.ant, r.ant_se
    )
}

/// Convenience: campaign for one fixed-weight configuration.
pub fn fixed_weight_campaign(
    n: usize,
    q: u16,
    w: usize,
    trials: usize,
    m_max: usize,
    seed: u64,
) -> Result<Campaign> {
    let field = crate::gf::FieldSpec::new(q)?;
    let params = SncParams::from_weight(n, field, w, 0.0, CodingMode::FullyRandom)?;
    Ok(Campaign::new(params, trials, m_max, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::FieldSpec;

    fn small_campaign(trials: usize, seed: u64) -> Campaign {
        let params = SncParams::new(
            4,
            FieldSpec::new(2).unwrap(),
            0.5,
            0.0,
            CodingMode::FullyRandom,
        )
        .unwrap();
        Campaign::new(params, trials, 8, seed)
    }

    #[test]
    fn determinism_across_runs() {
        let c = small_campaign(500, 99);
        let a = run_campaign(&c);
        let b = run_campaign(&c);
        assert_eq!(a.at_least, b.at_least);
        assert_eq!(a.add.to_bits(), b.add.to_bits());
        assert_eq!(a.ant.to_bits(), b.ant.to_bits());
    }

    #[test]
    fn determinism_across_worker_counts() {
        let c = small_campaign(300, 7);
        let pool1 = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let pool4 = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = pool1.install(|| run_campaign(&c));
        let b = pool4.install(|| run_campaign(&c));
        assert_eq!(a.at_least, b.at_least);
        assert_eq!(a.add.to_bits(), b.add.to_bits());
    }

    #[test]
    fn full_erasure_never_decodes() {
        let mut c = small_campaign(50, 3);
        c.params.epsilon = 0.999_999;
        c.completion_cap = 200;
        let r = run_campaign(&c);
        for x in 1..=4 {
            for m in 1..=8 {
                assert_eq!(r.at_least[x][m], 0.0);
            }
        }
    }

    #[test]
    fn at_least_grid_is_monotone_and_consistent() {
        let c = small_campaign(2000, 21);
        let r = run_campaign(&c);
        for m in 1..=8 {
            for x in 1..=4 {
                assert!(r.at_least[x][m] <= r.at_least[x - 1][m] + 1e-12);
            }
        }
        for x in 0..=4 {
            for m in 2..=8 {
                assert!(r.at_least[x][m] + 1e-12 >= r.at_least[x][m - 1]);
            }
        }
        // E(X|m) equals the sum over x >= 1 of the at-least grid
        for m in 1..=8 {
            let s: f64 = (1..=4).map(|x| r.at_least[x][m]).sum();
            assert!((s - r.expected_curve[m]).abs() < 1e-9);
        }
    }

    #[test]
    fn add_matches_hand_rolled_average() {
        // with q=256 dense rows, every trial completes in ~n transmissions and
        // ADD is close to ANT
        let params = SncParams::new(
            8,
            FieldSpec::new(256).unwrap(),
            255.0 / 256.0,
            0.0,
            CodingMode::FullyRandom,
        )
        .unwrap();
        let c = Campaign::new(params, 400, 8, 5);
        let r = run_campaign(&c);
        assert_eq!(r.completed_trials, 400);
        assert!(r.ant >= 8.0 && r.ant < 8.3, "ant = {}", r.ant);
        assert!(r.add <= r.ant && r.add > 7.0, "add = {}", r.add);
    }

    #[test]
    fn compare_rejects_mismatched_grids() {
        let c = small_campaign(100, 1);
        let r = run_campaign(&c);
        let mut model = crate::model::Model::from_parts(4, 2, 0.5);
        let table = model.partial_decoding_table(6);
        assert!(compare(&table, &r, &[1]).is_err());
    }

    #[test]
    fn compare_zero_for_identical_grids() {
        let c = small_campaign(400, 13);
        let r = run_campaign(&c);
        // build a fake "model" table equal to the empirical grid
        let mut model = crate::model::Model::from_parts(4, 2, 0.5);
        let mut table = model.partial_decoding_table(8);
        for m in 0..=8 {
            for x in 0..=4 {
                table.at_least[m][x] = r.at_least[x][m];
            }
        }
        let rep = compare(&table, &r, &[1, 2, 3, 4]).unwrap();
        assert_eq!(rep.mapd, 0.0);
    }
}
