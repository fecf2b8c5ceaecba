use rand::Rng;

/// Negative-sampling distribution: unigram counts raised to `power`.
#[derive(Debug, Clone)]
pub struct UnigramTable {
    cumulative: Vec<f64>,
}

impl UnigramTable {
    pub const DEFAULT_POWER: f64 = 0.75;

    pub fn new(frequencies: &[u64], power: f64) -> Self {
        let mut acc = 0.0;
        let cumulative = frequencies
            .iter()
            .map(|&f| {
                acc += (f as f64).powf(power);
                acc
            })
            .collect();
        UnigramTable { cumulative }
    }

    pub fn len(&self) -> usize {
        self.cumulative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cumulative.is_empty()
    }

    pub fn probability(&self, id: usize) -> f64 {
        let total = *self.cumulative.last().unwrap_or(&0.0);
        let lo = if id == 0 { 0.0 } else { self.cumulative[id - 1] };
        (self.cumulative[id] - lo) / total
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().expect("empty unigram table");
        let x = rng.gen::<f64>() * total;
        self.cumulative
            .partition_point(|&c| c <= x)
            .min(self.cumulative.len() - 1)
    }
}
