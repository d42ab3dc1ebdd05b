use super::ProfileError;

/// Samples of `G` with monotone piecewise-cubic Hermite interpolation
/// (Fritsch–Carlson slopes).
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    samples: Vec<(f64, f64)>,
    slopes: Vec<f64>,
}

impl Table {
    pub fn new(samples: Vec<(f64, f64)>) -> Result<Table, ProfileError> {
        if samples.len() < 2 {
            return Err(ProfileError::InvalidTable("need at least two samples".into()));
        }
        if samples.iter().any(|(r, v)| !r.is_finite() || !v.is_finite()) {
            return Err(ProfileError::InvalidTable("non-finite sample".into()));
        }
        if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(ProfileError::InvalidTable(
                "radii must be strictly increasing".into(),
            ));
        }
        let slopes = fritsch_carlson(&samples);
        Ok(Table { samples, slopes })
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn range(&self) -> (f64, f64) {
        (self.samples[0].0, self.samples[self.samples.len() - 1].0)
    }

    pub fn eval(&self, r: f64) -> Result<f64, ProfileError> {
        let (lo, hi) = self.range();
        if !(lo..=hi).contains(&r) {
            return Err(ProfileError::OutOfRange { r, lo, hi });
        }
        let i = self
            .samples
            .partition_point(|&(x, _)| x <= r)
            .saturating_sub(1)
            .min(self.samples.len() - 2);
        let (x0, y0) = self.samples[i];
        let (x1, y1) = self.samples[i + 1];
        if r == x0 {
            return Ok(y0);
        }
        if r == x1 {
            return Ok(y1);
        }
        let h = x1 - x0;
        let s = (r - x0) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        Ok(h00 * y0 + h10 * h * self.slopes[i] + h01 * y1 + h11 * h * self.slopes[i + 1])
    }
}

fn fritsch_carlson(samples: &[(f64, f64)]) -> Vec<f64> {
    let n = samples.len();
    let secants: Vec<f64> = samples
        .windows(2)
        .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
        .collect();
    let mut m = vec![0.0; n];
    m[0] = secants[0];
    m[n - 1] = secants[n - 2];
    for i in 1..n - 1 {
        m[i] = if secants[i - 1] * secants[i] <= 0.0 {
            0.0
        } else {
            0.5 * (secants[i - 1] + secants[i])
        };
    }
    for i in 0..n - 1 {
        let d = secants[i];
        if d == 0.0 {
            m[i] = 0.0;
            m[i + 1] = 0.0;
            continue;
        }
        let a = m[i] / d;
        let b = m[i + 1] / d;
        let norm = a * a + b * b;
        if norm > 9.0 {
            let tau = 3.0 / norm.sqrt();
            m[i] = tau * a * d;
            m[i + 1] = tau * b * d;
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_nodes_and_linear_data() {
        let t = Table::new((0..6).map(|i| (i as f64, 2.0 * i as f64 + 1.0)).collect()).unwrap();
        for i in 0..6 {
            assert_eq!(t.eval(i as f64).unwrap(), 2.0 * i as f64 + 1.0);
        }
        assert!((t.eval(2.5).unwrap() - 6.0).abs() < 1e-14);
    }

    #[test]
    fn monotone_data_stays_monotone() {
        let t = Table::new(vec![(0.0, 0.0), (1.0, 0.1), (2.0, 5.0), (3.0, 5.1)]).unwrap();
        let mut prev = t.eval(0.0).unwrap();
        for i in 1..=300 {
            let v = t.eval(i as f64 * 0.01).unwrap();
            assert!(v >= prev - 1e-15);
            prev = v;
        }
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(Table::new(vec![(0.0, 1.0)]).is_err());
        assert!(Table::new(vec![(0.0, 1.0), (0.0, 2.0)]).is_err());
        assert!(Table::new(vec![(0.0, f64::NAN), (1.0, 2.0)]).is_err());
    }
}
