use rand::Rng;

/// A fixed set of named parameter arrays.
///
/// Gradients use the same type as the parameters they belong to, so a
/// gradient bundle always mirrors the parameter layout exactly.
pub trait Parameters: Clone {
    /// Arrays in a stable order, with names for diagnostics.
    fn arrays(&self) -> Vec<(&'static str, &[f64])>;
    fn arrays_mut(&mut self) -> Vec<(&'static str, &mut [f64])>;

    fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.fill(0.0);
        z
    }

    fn fill(&mut self, value: f64) {
        for (_, a) in self.arrays_mut() {
            a.fill(value);
        }
    }

    fn scale(&mut self, factor: f64) {
        for (_, a) in self.arrays_mut() {
            a.iter_mut().for_each(|v| *v *= factor);
        }
    }

    /// `self += other`; both must share a layout.
    fn add_assign(&mut self, other: &Self) {
        for ((_, a), (_, b)) in self.arrays_mut().into_iter().zip(other.arrays()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    fn num_params(&self) -> usize {
        self.arrays().iter().map(|(_, a)| a.len()).sum()
    }

    fn is_finite(&self) -> bool {
        self.arrays()
            .iter()
            .all(|(_, a)| a.iter().all(|v| v.is_finite()))
    }

    fn shapes_match(&self, other: &Self) -> bool {
        let a = self.arrays();
        let b = other.arrays();
        a.len() == b.len()
            && a.iter()
                .zip(&b)
                .all(|(x, y)| x.0 == y.0 && x.1.len() == y.1.len())
    }

    /// All values concatenated in array order.
    fn flatten(&self) -> Vec<f64> {
        self.arrays()
            .into_iter()
            .flat_map(|(_, a)| a.iter().copied())
            .collect()
    }
}

/// Shape-matched gradients for a parameter set, plus the gradient with
/// respect to the input sequence when one was requested.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBundle<P> {
    pub params: P,
    pub input: Vec<f64>,
}

pub(crate) fn fill_uniform<R: Rng>(values: &mut [f64], bound: f64, rng: &mut R) {
    for v in values {
        *v = rng.gen_range(-bound..bound);
    }
}
