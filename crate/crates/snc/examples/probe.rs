//! scratch probe (removed before release)
use snc::tuning::SequenceModel;

fn eval(n: usize, q: u16, k: usize, plateau_w: f64, label: &str) {
    let mut sm = SequenceModel::new(n, q);
    for i in 0..(4 * n) {
        let p = if i < k { 1.0 / n as f64 } else { plateau_w / n as f64 };
        sm.push(p);
        if sm.expected[sm.expected.len() - 1] >= n as f64 - 1e-6
            && sm.full_prob[sm.full_prob.len() - 1] >= 1.0 - 1e-9
        {
            break;
        }
    }
    println!(
        "{label}: K={k} model_add={:.2} model_ant={:.2}",
        sm.add_area(),
        sm.ant_area()
    );
}

fn main() {
    for k in [0usize, 4, 8, 12, 16] {
        eval(32, 2, k, 16.0, "q2n32");
    }
    println!("sim truth: K=8: add 26.4 ant 34.5 ; K=0(rlnc): add 32.0 ant 33.6");
    for k in [0usize, 6, 10, 14] {
        eval(64, 256, k, 32.0, "q256n64");
    }
}
