use crate::domain::DiscretizedDomain;
use crate::operators::Field;

const LEVELS: usize = 16;
const MAX_SET: usize = 400;

fn tau_audit(dom: &DiscretizedDomain, grid: &[f64]) -> f64 {
    let nx = dom.nx;
    let mut m = 0.0f64;
    for (k, &g) in dom.interior.iter().enumerate() {
        if dom.is_full_interior(k) {
            m = m.max((grid[g + 1] - 2.0 * grid[g] + grid[g - 1]).abs());
            m = m.max((grid[g + nx] - 2.0 * grid[g] + grid[g - nx]).abs());
        }
    }
    10.0 * m
}

/// Worst shortfall `ℓ − τ − f(m)` over superlevel sets `{f > ℓ}` and
/// midpoints `m` of node pairs in the same set; `0` when every midpoint passes.
pub fn quasiconcavity_defect(dom: &DiscretizedDomain, f: &Field) -> f64 {
    let grid = dom.to_grid(&f.values);
    let tau = tau_audit(dom, &grid);
    let fmax = f.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(fmax > 0.0) {
        return 0.0;
    }
    let mut worst = 0.0f64;
    for j in 1..=LEVELS {
        let level = fmax * j as f64 / (LEVELS + 1) as f64;
        let set: Vec<usize> = (0..f.values.len()).filter(|&k| f.values[k] > level).collect();
        let stride = set.len().div_ceil(MAX_SET).max(1);
        let sub: Vec<usize> = set.iter().copied().step_by(stride).collect();
        for (a, &i) in sub.iter().enumerate() {
            let p = dom.node(i);
            for &k in &sub[a + 1..] {
                let q = dom.node(k);
                let m = [(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0];
                if let Some(v) = dom.interpolate(&grid, m) {
                    worst = worst.max(level - tau - v);
                }
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DomainSpec;
    use crate::operators::Time;

    fn sample(dom: &DiscretizedDomain, f: impl Fn(f64, f64) -> f64) -> Field {
        Field::new((0..dom.n_unknowns()).map(|k| f(dom.node(k)[0], dom.node(k)[1])).collect(), Time::Finite(0.0))
    }

    #[test]
    fn concave_and_radial_fields_pass() {
        let dom = DiscretizedDomain::build(DomainSpec::UnitSquare, 1.0 / 32.0).unwrap();
        let concave = sample(&dom, |x, y| x * (1.0 - x) * 4.0 + y * (1.0 - y));
        assert_eq!(quasiconcavity_defect(&dom, &concave), 0.0);
        let radial = sample(&dom, |x, y| (-((x - 0.5).powi(2) + (y - 0.5).powi(2)) * 8.0).exp());
        assert_eq!(quasiconcavity_defect(&dom, &radial), 0.0);
    }

    #[test]
    fn two_bumps_fail() {
        let dom = DiscretizedDomain::build(DomainSpec::UnitSquare, 1.0 / 64.0).unwrap();
        let bump = |x: f64, y: f64, cx: f64| (-((x - cx).powi(2) + (y - 0.5).powi(2)) / 0.02).exp();
        let f = sample(&dom, |x, y| bump(x, y, 0.2) + bump(x, y, 0.8));
        assert!(quasiconcavity_defect(&dom, &f) > 0.3);
    }
}
