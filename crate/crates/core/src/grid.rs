//! Piecewise-linear functions on the signed grid {j/Δ : j ∈ [j_min, j_max]}.

/// A real function given by its values at consecutive integer grid indices
/// j ∈ [j_min, j_min + len - 1], where knot j sits at position j/Δ.
/// Evaluation between knots is linear interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    j_min: i64,
    delta: u64,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(j_min: i64, delta: u64, values: Vec<f64>) -> Self {
        assert!(delta >= 1, "grid scale Δ must be >= 1");
        assert!(!values.is_empty(), "grid function needs at least one knot");
        Self {
            j_min,
            delta,
            values,
        }
    }

    pub fn j_min(&self) -> i64 {
        self.j_min
    }

    pub fn j_max(&self) -> i64 {
        self.j_min + self.values.len() as i64 - 1
    }

    pub fn delta(&self) -> u64 {
        self.delta
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn alpha_min(&self) -> f64 {
        self.j_min as f64 / self.delta as f64
    }

    pub fn alpha_max(&self) -> f64 {
        self.j_max() as f64 / self.delta as f64
    }

    /// Knot position j/Δ for grid index j.
    pub fn alpha_of(&self, j: i64) -> f64 {
        j as f64 / self.delta as f64
    }

    pub fn contains_j(&self, j: i64) -> bool {
        j >= self.j_min && j <= self.j_max()
    }

    pub fn value_at_j(&self, j: i64) -> Option<f64> {
        if self.contains_j(j) {
            Some(self.values[(j - self.j_min) as usize])
        } else {
            None
        }
    }

    /// Linear interpolation at α ∈ [j_min/Δ, j_max/Δ].
    pub fn eval(&self, alpha: f64) -> f64 {
        self.try_eval(alpha)
            .unwrap_or_else(|| panic!("α = {alpha} outside grid [{}, {}]", self.alpha_min(), self.alpha_max()))
    }

    pub fn try_eval(&self, alpha: f64) -> Option<f64> {
        let mut t = alpha * self.delta as f64 - self.j_min as f64;
        // knot positions are exact rationals; snap away float fuzz at knots
        let r = t.round();
        if (t - r).abs() < 1e-9 {
            t = r;
        }
        if t < 0.0 || t > (self.values.len() - 1) as f64 {
            return None;
        }
        let idx = (t.floor() as usize).min(self.values.len() - 2);
        if self.values.len() == 1 {
            return Some(self.values[0]);
        }
        let frac = t - idx as f64;
        Some(self.values[idx] * (1.0 - frac) + self.values[idx + 1] * frac)
    }

    /// Smallest grid index attaining the minimum value.
    pub fn argmin_knot(&self) -> (i64, f64) {
        let mut best = 0usize;
        for (i, v) in self.values.iter().enumerate() {
            if *v < self.values[best] {
                best = i;
            }
        }
        (self.j_min + best as i64, self.values[best])
    }

    pub fn iter_knots(&self) -> impl Iterator<Item = (i64, f64, f64)> + '_ {
        let d = self.delta as f64;
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &v)| (self.j_min + i as i64, (self.j_min + i as i64) as f64 / d, v))
    }

    /// New grid function with the same knots and mapped values.
    pub fn map(&self, f: impl Fn(i64, f64) -> f64) -> GridFunction {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| f(self.j_min + i as i64, v))
            .collect();
        GridFunction::new(self.j_min, self.delta, values)
    }

    /// Pointwise combination of two functions on the identical grid.
    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> GridFunction {
        assert_eq!(self.j_min, other.j_min, "grid mismatch");
        assert_eq!(self.delta, other.delta, "grid mismatch");
        assert_eq!(self.values.len(), other.values.len(), "grid mismatch");
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        GridFunction::new(self.j_min, self.delta, values)
    }
}

/// A function sampled on the uniform grid i/(len-1) over [0, 1],
/// evaluated between nodes by linear interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitGridFunction {
    values: Vec<f64>,
}

impl UnitGridFunction {
    pub fn new(values: Vec<f64>) -> Self {
        assert!(values.len() >= 2, "unit grid needs at least two nodes");
        Self { values }
    }

    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Self {
        let step = 1.0 / (n - 1) as f64;
        Self::new((0..n).map(|i| f((i as f64 * step).min(1.0))).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        1.0 / (self.values.len() - 1) as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, x: f64) -> f64 {
        let t = (x.clamp(0.0, 1.0)) * (self.values.len() - 1) as f64;
        let idx = (t.floor() as usize).min(self.values.len() - 2);
        let frac = t - idx as f64;
        self.values[idx] * (1.0 - frac) + self.values[idx + 1] * frac
    }
}
