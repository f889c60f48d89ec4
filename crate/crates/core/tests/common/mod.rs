//! Independent oracles shared by the integration tests. Nothing here calls
//! into the library's link or fitting code.

#![allow(dead_code)]

use linkselect::{Dataset, LinkSpec, Partition};

pub const MU_FLOOR: f64 = 1e-10;

/// `(F(x), 1 − F(x))` from textbook formulas.
pub fn oracle_cdf_pair(link: LinkSpec, x: f64) -> (f64, f64) {
    match link {
        LinkSpec::Probit => {
            let z = x / std::f64::consts::SQRT_2;
            (0.5 * libm::erfc(-z), 0.5 * libm::erfc(z))
        }
        LinkSpec::Logit => (1.0 / (1.0 + (-x).exp()), 1.0 / (1.0 + x.exp())),
        LinkSpec::Cauchit => {
            let a = x.atan() / std::f64::consts::PI;
            if x < 0.0 {
                let lower = (-1.0 / x).atan() / std::f64::consts::PI;
                (lower, 1.0 - lower)
            } else {
                (0.5 + a, 0.5 - a)
            }
        }
        LinkSpec::CLogLog => {
            let s = (-x.exp()).exp();
            (1.0 - s, s)
        }
    }
}

/// Bernoulli log-likelihood with fitted probabilities clamped to
/// `[MU_FLOOR, 1 − MU_FLOOR]`.
pub fn oracle_log_likelihood(beta: &[f64], data: &Dataset, link: LinkSpec) -> f64 {
    let x = data.design();
    let mut total = 0.0;
    for (i, &y) in data.response().iter().enumerate() {
        let eta: f64 = (0..x.ncols()).map(|j| x[(i, j)] * beta[j]).sum();
        let (p, q) = oracle_cdf_pair(link, eta);
        let p = p.clamp(MU_FLOOR, 1.0 - MU_FLOOR);
        let q = q.clamp(MU_FLOOR, 1.0 - MU_FLOOR);
        total += if y == 1 { p.ln() } else { q.ln() };
    }
    total
}

pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub converged: bool,
}

/// Nelder–Mead minimization with standard coefficients.
pub fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, start: &[f64], scale: f64, max_iter: usize) -> Minimum {
    let d = start.len();
    let mut simplex: Vec<Vec<f64>> = vec![start.to_vec()];
    for j in 0..d {
        let mut p = start.to_vec();
        p[j] += scale;
        simplex.push(p);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| f(p)).collect();
    let mut converged = false;
    for _ in 0..max_iter {
        let mut order: Vec<usize> = (0..=d).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = values[d] - values[0];
        let diameter = simplex[1..]
            .iter()
            .flat_map(|p| p.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if spread <= 1e-14 * (1.0 + values[0].abs()) && diameter <= 1e-10 {
            converged = true;
            break;
        }

        let centroid: Vec<f64> = (0..d).map(|j| simplex[..d].iter().map(|p| p[j]).sum::<f64>() / d as f64).collect();
        let along = |t: f64| -> Vec<f64> { (0..d).map(|j| centroid[j] + t * (simplex[d][j] - centroid[j])).collect() };

        let reflected = along(-1.0);
        let fr = f(&reflected);
        if fr < values[0] {
            let expanded = along(-2.0);
            let fe = f(&expanded);
            if fe < fr {
                simplex[d] = expanded;
                values[d] = fe;
            } else {
                simplex[d] = reflected;
                values[d] = fr;
            }
        } else if fr < values[d - 1] {
            simplex[d] = reflected;
            values[d] = fr;
        } else {
            let contracted = if fr < values[d] { along(-0.5) } else { along(0.5) };
            let fc = f(&contracted);
            if fc < fr.min(values[d]) {
                simplex[d] = contracted;
                values[d] = fc;
            } else {
                let best = simplex[0].clone();
                for i in 1..=d {
                    simplex[i] = (0..d).map(|j| best[j] + 0.5 * (simplex[i][j] - best[j])).collect();
                    values[i] = f(&simplex[i]);
                }
            }
        }
    }
    let best = (0..=d).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap();
    Minimum {
        x: simplex[best].clone(),
        value: values[best],
        converged,
    }
}

pub struct MleOracle {
    pub coefficients: Vec<f64>,
    pub log_likelihood: f64,
    pub converged: bool,
}

/// Maximizes the oracle log-likelihood directly: Nelder–Mead from 8 starts,
/// then two restarts from the best point to shake out a collapsed simplex.
pub fn direct_mle(data: &Dataset, link: LinkSpec) -> MleOracle {
    let p = data.design().ncols();
    let neg = |b: &[f64]| -oracle_log_likelihood(b, data, link);
    let mut starts = vec![vec![0.0; p]];
    for s in 1..8u32 {
        starts.push((0..p).map(|j| (((s * 7 + j as u32 * 3) % 11) as f64 - 5.0) / 4.0).collect());
    }
    let mut best = starts
        .iter()
        .map(|s| nelder_mead(&neg, s, 0.5, 20_000))
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .unwrap();
    for _ in 0..2 {
        let again = nelder_mead(&neg, &best.x, 0.05, 20_000);
        let stable = (best.value - again.value).abs() <= 1e-10;
        if again.value <= best.value {
            best = Minimum {
                converged: again.converged && stable,
                ..again
            };
        }
    }
    MleOracle {
        coefficients: best.x,
        log_likelihood: -best.value,
        converged: best.converged,
    }
}

/// AUC by comparing every positive with every negative.
pub fn pairwise_auc(labels: &[u8], scores: &[f64]) -> f64 {
    let pairs = || labels.iter().zip(scores);
    let mut twice_wins = 0u64;
    let mut count = 0u64;
    for (_, &sp) in pairs().filter(|(&l, _)| l == 1) {
        for (_, &sn) in pairs().filter(|(&l, _)| l == 0) {
            twice_wins += match sp.partial_cmp(&sn).unwrap() {
                std::cmp::Ordering::Greater => 2,
                std::cmp::Ordering::Equal => 1,
                std::cmp::Ordering::Less => 0,
            };
            count += 1;
        }
    }
    twice_wins as f64 / (2 * count) as f64
}

/// Checks that `parts` are valid splits of `0..n`: sorted, disjoint within a
/// split, train ∪ test = all indices, and (for fold schemes) the test sets
/// tile `0..n` exactly once with sizes differing by at most one.
pub fn check_partitions(parts: &[Partition], n: usize, tiling: bool) -> Result<(), String> {
    let mut covered = vec![0usize; n];
    for (f, part) in parts.iter().enumerate() {
        if !part.train.windows(2).all(|w| w[0] < w[1]) || !part.test.windows(2).all(|w| w[0] < w[1]) {
            return Err(format!("fold {f}: indices not strictly increasing"));
        }
        if part.test.is_empty() || part.train.is_empty() {
            return Err(format!("fold {f}: empty side"));
        }
        if part.train.len() + part.test.len() != n {
            return Err(format!("fold {f}: sizes do not add to n"));
        }
        let mut seen = vec![false; n];
        for &i in part.train.iter().chain(&part.test) {
            if i >= n || seen[i] {
                return Err(format!("fold {f}: index {i} repeated or out of range"));
            }
            seen[i] = true;
        }
        for &i in &part.test {
            covered[i] += 1;
        }
    }
    if tiling {
        if let Some(i) = covered.iter().position(|&c| c != 1) {
            return Err(format!("index {i} tested {} times", covered[i]));
        }
        let sizes: Vec<usize> = parts.iter().map(|p| p.test.len()).collect();
        let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
        if hi - lo > 1 {
            return Err(format!("unbalanced fold sizes {sizes:?}"));
        }
    }
    Ok(())
}
