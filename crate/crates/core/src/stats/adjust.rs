use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Correction {
    #[default]
    BenjaminiYekutieli,
    BenjaminiHochberg,
}

/// Step-up adjustment `min over j >= i of (m * c / j) * p_(j)`, clipped to 1,
/// returned in input order.
fn step_up(p: &[f64], c: f64) -> Vec<f64> {
    let m = p.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]).then(a.cmp(&b)));
    let mut adjusted = vec![0.0; m];
    let mut running = 1.0_f64;
    for (rank, &i) in order.iter().enumerate().rev() {
        let v = (m as f64 * c / (rank + 1) as f64 * p[i]).min(1.0);
        running = running.min(v);
        adjusted[i] = running;
    }
    adjusted
}

pub fn bh_adjust(p: &[f64]) -> Vec<f64> {
    step_up(p, 1.0)
}

/// Benjamini-Yekutieli: BH scaled by the harmonic number `c(m)`.
pub fn by_adjust(p: &[f64]) -> Vec<f64> {
    let c: f64 = (1..=p.len()).map(|i| 1.0 / i as f64).sum();
    step_up(p, c)
}

pub fn adjust(p: &[f64], correction: Correction) -> Vec<f64> {
    match correction {
        Correction::BenjaminiYekutieli => by_adjust(p),
        Correction::BenjaminiHochberg => bh_adjust(p),
    }
}
