use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

/// Unnormalized d-dimensional FFT over a row-major array.
pub(crate) struct FftNd {
    n: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

thread_local! {
    // Plans are cached per worker thread; nothing here is shared across threads.
    static PLANS: RefCell<HashMap<Vec<usize>, Rc<FftNd>>> = RefCell::new(HashMap::new());
}

impl FftNd {
    pub(crate) fn get(n: &[usize]) -> Rc<FftNd> {
        PLANS.with(|plans| {
            plans
                .borrow_mut()
                .entry(n.to_vec())
                .or_insert_with(|| Rc::new(FftNd::plan(n)))
                .clone()
        })
    }

    fn plan(n: &[usize]) -> FftNd {
        let mut planner = FftPlanner::new();
        FftNd {
            n: n.to_vec(),
            forward: n.iter().map(|&k| planner.plan_fft_forward(k)).collect(),
            inverse: n.iter().map(|&k| planner.plan_fft_inverse(k)).collect(),
        }
    }

    pub(crate) fn forward(&self, data: &mut [Complex64]) {
        self.run(data, FftDirection::Forward);
    }

    pub(crate) fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, FftDirection::Inverse);
    }

    fn run(&self, data: &mut [Complex64], dir: FftDirection) {
        let plans = match dir {
            FftDirection::Forward => &self.forward,
            FftDirection::Inverse => &self.inverse,
        };
        let d = self.n.len();
        let total: usize = self.n.iter().product();
        debug_assert_eq!(data.len(), total);

        let scratch_len = plans.iter().map(|p| p.get_inplace_scratch_len()).max().unwrap_or(0);
        let mut scratch = vec![Complex64::new(0.0, 0.0); scratch_len];

        // Last axis is contiguous.
        plans[d - 1].process_with_scratch(data, &mut scratch);

        let mut line = Vec::new();
        let mut stride = self.n[d - 1];
        for axis in (0..d - 1).rev() {
            let len = self.n[axis];
            let block = stride * len;
            line.resize(len, Complex64::new(0.0, 0.0));
            for outer in (0..total).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    for (k, v) in line.iter_mut().enumerate() {
                        *v = data[base + k * stride];
                    }
                    plans[axis].process_with_scratch(&mut line, &mut scratch);
                    for (k, v) in line.iter().enumerate() {
                        data[base + k * stride] = *v;
                    }
                }
            }
            stride = block;
        }
    }
}
