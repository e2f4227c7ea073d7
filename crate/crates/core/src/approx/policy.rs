use rand::Rng;
use rand_distr::StandardNormal;

pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_7;

/// Diagonal Gaussian action distribution with state-independent log std.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPolicyOutput {
    pub mean: Vec<f64>,
    pub log_std: Vec<f64>,
}

impl GaussianPolicyOutput {
    /// Clamps `log_std` into `[LOG_STD_MIN, LOG_STD_MAX]`.
    pub fn new(mean: Vec<f64>, log_std: &[f64]) -> Self {
        assert_eq!(mean.len(), log_std.len(), "mean and log_std lengths differ");
        let log_std = log_std.iter().map(|s| clamp_log_std(*s)).collect();
        Self { mean, log_std }
    }

    pub fn action_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<f64>, f64) {
        let action: Vec<f64> = self
            .mean
            .iter()
            .zip(&self.log_std)
            .map(|(m, s)| {
                let z: f64 = rng.sample(StandardNormal);
                m + s.exp() * z
            })
            .collect();
        let lp = self.log_prob(&action);
        (action, lp)
    }

    pub fn log_prob(&self, action: &[f64]) -> f64 {
        self.mean
            .iter()
            .zip(&self.log_std)
            .zip(action)
            .map(|((m, s), a)| {
                let z = (a - m) / s.exp();
                -0.5 * z * z - s - HALF_LN_2PI
            })
            .sum()
    }

    pub fn entropy(&self) -> f64 {
        self.log_std.iter().map(|s| s + 0.5 + HALF_LN_2PI).sum()
    }
}

pub fn clamp_log_std(s: f64) -> f64 {
    s.clamp(LOG_STD_MIN, LOG_STD_MAX)
}

/// Derivatives of `log_prob(action)` with respect to the mean and the
/// (unclamped) log std. The log-std gradient is zero where the clamp is active.
pub fn log_prob_grads(mean: &[f64], log_std: &[f64], action: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut d_mean = Vec::with_capacity(mean.len());
    let mut d_log_std = Vec::with_capacity(mean.len());
    for ((m, &raw), a) in mean.iter().zip(log_std).zip(action) {
        let s = clamp_log_std(raw);
        let var = (2.0 * s).exp();
        let diff = a - m;
        d_mean.push(diff / var);
        let inside = raw > LOG_STD_MIN && raw < LOG_STD_MAX;
        d_log_std.push(if inside { diff * diff / var - 1.0 } else { 0.0 });
    }
    (d_mean, d_log_std)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn clamps_log_std() {
        let out = GaussianPolicyOutput::new(vec![0.0, 0.0], &[f64::NEG_INFINITY, 9.0]);
        assert_eq!(out.log_std, vec![-5.0, 2.0]);
    }

    #[test]
    fn standard_normal_mode_density() {
        for d in 1..5 {
            let out = GaussianPolicyOutput::new(vec![0.0; d], &vec![0.0; d]);
            let expected = -0.5 * d as f64 * (2.0 * std::f64::consts::PI).ln();
            assert!((out.log_prob(&vec![0.0; d]) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn near_degenerate_sample_stays_at_mean() {
        let out = GaussianPolicyOutput::new(vec![0.3, -0.7], &[-1e9, -1e9]);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let (a, _) = out.sample(&mut rng);
            for (ai, mi) in a.iter().zip(&out.mean) {
                // 6 sigma at log_std = -5
                assert!((ai - mi).abs() < 6.0 * (-5.0f64).exp());
            }
        }
    }

    #[test]
    fn sample_log_prob_matches_density() {
        let out = GaussianPolicyOutput::new(vec![1.0, 2.0, -1.0], &[0.1, -0.3, 0.5]);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (a, lp) = out.sample(&mut rng);
        assert_eq!(lp, out.log_prob(&a));
    }

    #[test]
    fn same_rng_state_same_sample() {
        let out = GaussianPolicyOutput::new(vec![0.0; 4], &[0.0; 4]);
        let mut r1 = ChaCha8Rng::seed_from_u64(77);
        let mut r2 = r1.clone();
        assert_eq!(out.sample(&mut r1), out.sample(&mut r2));
    }

    #[test]
    fn grads_match_finite_differences() {
        let mean = [0.2, -0.4];
        let log_std = [0.3, -0.6];
        let action = [1.0, 0.1];
        let (dm, ds) = log_prob_grads(&mean, &log_std, &action);
        let lp = |m: &[f64], s: &[f64]| GaussianPolicyOutput::new(m.to_vec(), s).log_prob(&action);
        let h = 1e-6;
        for i in 0..2 {
            let mut mp = mean;
            let mut mm = mean;
            mp[i] += h;
            mm[i] -= h;
            let fd = (lp(&mp, &log_std) - lp(&mm, &log_std)) / (2.0 * h);
            assert!((fd - dm[i]).abs() < 1e-6);
            let mut sp = log_std;
            let mut sm = log_std;
            sp[i] += h;
            sm[i] -= h;
            let fd = (lp(&mean, &sp) - lp(&mean, &sm)) / (2.0 * h);
            assert!((fd - ds[i]).abs() < 1e-6);
        }
    }
}
