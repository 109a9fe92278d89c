//! Two-input, one-output Mamdani controller that turns the pose error `e` and
//! its rate `de` (both on `[0, 1]`) into the gain offset `k_op` on `[0, 100]`.
//!
//! Both inputs share one five-term triangular partition (VS, S, M, L, VL)
//! parameterized by `k1..k11`; the output partition uses `k12..k22`. The rule
//! base is fixed; only the 22 membership parameters are tuned. Inference is
//! min/max Mamdani with centroid defuzzification on a uniform grid.

use crate::{Error, Result};

/// Number of tunable membership parameters.
pub const PARAM_COUNT: usize = 22;

/// Grid points used for centroid defuzzification (and coverage checks).
pub const CENTROID_RESOLUTION: usize = 1001;

/// Output universe upper end; the input universe is `[0, 1]`.
pub const OUTPUT_SPAN: f64 = 100.0;

/// Box bound `(lo, hi)` for each of `k1..k22`, in order.
pub const PARAM_BOUNDS: [(f64, f64); PARAM_COUNT] = [
    (0.0, 0.15), // k1: right foot of input VS
    (0.0, 0.2),  // k2..k4: input S
    (0.0, 0.2),
    (0.1, 0.2),
    (0.05, 0.2), // k5..k7: input M
    (0.1, 0.3),
    (0.1, 0.4),
    (0.1, 0.4), // k8..k10: input L
    (0.2, 0.8),
    (0.3, 0.8),
    (0.2, 0.7),  // k11: left foot of input VL
    (0.0, 10.0), // k12: right foot of output VS
    (0.0, 10.0), // k13..k15: output S
    (0.0, 20.0),
    (5.0, 30.0),
    (5.0, 20.0), // k16..k18: output M
    (10.0, 50.0),
    (20.0, 50.0),
    (20.0, 50.0), // k19..k21: output L
    (20.0, 70.0),
    (40.0, 90.0),
    (30.0, 70.0), // k22: left foot of output VL
];

/// Linguistic terms, ordered from smallest to largest.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Term {
    VerySmall,
    Small,
    Medium,
    Large,
    VeryLarge,
}

pub const TERMS: [Term; 5] = [
    Term::VerySmall,
    Term::Small,
    Term::Medium,
    Term::Large,
    Term::VeryLarge,
];

/// Consequent for each `(e term, de term)` pair, indexed `RULES[e][de]` with
/// terms in ascending order. High error always asks for a very large gain;
/// small error with small rate settles on a very small gain.
pub const RULES: [[Term; 5]; 5] = {
    use Term::*;
    [
        [VerySmall, Small, Medium, Medium, Large], // e = VS
        [Small, Medium, Medium, Large, Large],     // e = S
        [Medium, Medium, Large, VeryLarge, VeryLarge], // e = M
        [VeryLarge; 5],                            // e = L
        [VeryLarge; 5],                            // e = VL
    ]
};

/// Triangular membership function `(left foot, peak, right foot)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TriangularMf {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl TriangularMf {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        debug_assert!(a <= b && b <= c);
        TriangularMf { a, b, c }
    }
}

/// Membership degree of `x` in `mf`: piecewise linear, 1 at the peak, with
/// shoulder triples (`a = b` or `b = c`) evaluating to 1 at the flat end.
pub fn tri_mu(x: f64, mf: &TriangularMf) -> f64 {
    if x < mf.a || x > mf.c {
        0.0
    } else if x == mf.b {
        1.0
    } else if x < mf.b {
        (x - mf.a) / (mf.b - mf.a)
    } else {
        (mf.c - x) / (mf.c - mf.b)
    }
}

/// The 22 raw membership parameters `k1..k22`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlcParams {
    pub values: [f64; PARAM_COUNT],
}

impl FlcParams {
    pub fn from_slice(values: &[f64]) -> Result<Self> {
        let values: [f64; PARAM_COUNT] = values.try_into().map_err(|_| {
            Error::Validation(format!(
                "expected {PARAM_COUNT} parameters, got {}",
                values.len()
            ))
        })?;
        Ok(FlcParams { values })
    }

    /// Midpoint of every box bound; the canonical untuned starting point.
    pub fn midpoint() -> Self {
        let mut values = [0.0; PARAM_COUNT];
        for (v, (lo, hi)) in values.iter_mut().zip(PARAM_BOUNDS) {
            *v = 0.5 * (lo + hi);
        }
        FlcParams { values }
    }

    /// Clamp every parameter into its box, then sort each membership triple
    /// non-decreasing. Keeps arbitrary search positions buildable.
    pub fn repaired(&self) -> FlcParams {
        let mut values = self.values;
        for (v, (lo, hi)) in values.iter_mut().zip(PARAM_BOUNDS) {
            *v = v.clamp(lo, hi);
        }
        // triples at k2..k4, k5..k7, k8..k10, k13..k15, k16..k18, k19..k21
        for start in [1, 4, 7, 12, 15, 18] {
            values[start..start + 3].sort_by(|a, b| a.total_cmp(b));
        }
        FlcParams { values }
    }

    /// The first parameter violating its box, as `(index, value, lo, hi)`.
    pub fn bound_violation(&self) -> Option<(usize, f64, f64, f64)> {
        self.values
            .iter()
            .zip(PARAM_BOUNDS)
            .enumerate()
            .find(|(_, (v, (lo, hi)))| !(**v >= *lo && **v <= *hi))
            .map(|(i, (v, (lo, hi)))| (i, *v, lo, hi))
    }
}

/// A built controller: repaired parameters, the two partitions, the rule
/// table, and the output memberships pre-evaluated on the centroid grid.
#[derive(Clone, Debug)]
pub struct FlcModel {
    params: FlcParams,
    input: [TriangularMf; 5],
    output: [TriangularMf; 5],
    /// `output_grid[i][term]` = membership of grid point `i` in output term.
    output_grid: Vec<[f64; 5]>,
}

/// Build a controller from raw parameters.
///
/// Out-of-box values are clamped and each triple sorted ([`FlcParams::repaired`]);
/// building therefore succeeds for any finite input, which keeps every search
/// position evaluable. Uncovered stretches of a universe are legal — inputs
/// falling there fire no rule and yield `k_op = 0` — and can be audited with
/// [`FlcModel::coverage_gaps`] or rejected with [`FlcModel::require_full_coverage`].
pub fn build_model(params: &FlcParams) -> Result<FlcModel> {
    for (i, v) in params.values.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::Validation(format!("k{} is not finite", i + 1)));
        }
    }
    let k = params.repaired().values;
    let input = [
        TriangularMf::new(0.0, 0.0, k[0]),
        TriangularMf::new(k[1], k[2], k[3]),
        TriangularMf::new(k[4], k[5], k[6]),
        TriangularMf::new(k[7], k[8], k[9]),
        TriangularMf::new(k[10], 1.0, 1.0),
    ];
    let output = [
        TriangularMf::new(0.0, 0.0, k[11]),
        TriangularMf::new(k[12], k[13], k[14]),
        TriangularMf::new(k[15], k[16], k[17]),
        TriangularMf::new(k[18], k[19], k[20]),
        TriangularMf::new(k[21], OUTPUT_SPAN, OUTPUT_SPAN),
    ];
    let output_grid = (0..CENTROID_RESOLUTION)
        .map(|i| {
            let x = OUTPUT_SPAN * i as f64 / (CENTROID_RESOLUTION - 1) as f64;
            std::array::from_fn(|t| tri_mu(x, &output[t]))
        })
        .collect();
    Ok(FlcModel {
        params: FlcParams { values: k },
        input,
        output,
        output_grid,
    })
}

impl FlcModel {
    /// The repaired parameters this model was built from.
    pub fn params(&self) -> &FlcParams {
        &self.params
    }

    pub fn input_partition(&self) -> &[TriangularMf; 5] {
        &self.input
    }

    pub fn output_partition(&self) -> &[TriangularMf; 5] {
        &self.output
    }

    /// Membership of `x` in each input term.
    fn fuzzify(&self, x: f64) -> [f64; 5] {
        std::array::from_fn(|t| tri_mu(x, &self.input[t]))
    }

    /// Mamdani inference: rule strength `min(mu_e, mu_de)`, per-term
    /// aggregation by max, centroid of the clipped union over the grid.
    /// Zero aggregate area yields 0.
    pub fn infer_kop(&self, e: f64, de: f64) -> f64 {
        let mu_e = self.fuzzify(e.clamp(0.0, 1.0));
        let mu_de = self.fuzzify(de.clamp(0.0, 1.0));

        let mut clip = [0.0f64; 5];
        for (i, mu_i) in mu_e.iter().enumerate() {
            if *mu_i == 0.0 {
                continue;
            }
            for (j, mu_j) in mu_de.iter().enumerate() {
                let strength = mu_i.min(*mu_j);
                let term = RULES[i][j] as usize;
                if strength > clip[term] {
                    clip[term] = strength;
                }
            }
        }

        let step = OUTPUT_SPAN / (CENTROID_RESOLUTION - 1) as f64;
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, grid) in self.output_grid.iter().enumerate() {
            let mut agg = 0.0f64;
            for t in 0..5 {
                agg = agg.max(clip[t].min(grid[t]));
            }
            num += agg * i as f64 * step;
            den += agg;
        }
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    }

    /// Maximal grid intervals of a universe where no term has membership > 0.
    /// `input` selects which universe to scan.
    pub fn coverage_gaps(&self, input: bool) -> Vec<(f64, f64)> {
        let (mfs, span): (&[TriangularMf; 5], f64) = if input {
            (&self.input, 1.0)
        } else {
            (&self.output, OUTPUT_SPAN)
        };
        let mut gaps = Vec::new();
        let mut open: Option<f64> = None;
        for i in 0..CENTROID_RESOLUTION {
            let x = span * i as f64 / (CENTROID_RESOLUTION - 1) as f64;
            let covered = mfs.iter().any(|mf| tri_mu(x, mf) > 0.0);
            match (covered, open) {
                (false, None) => open = Some(x),
                (true, Some(lo)) => {
                    let prev = span * (i - 1) as f64 / (CENTROID_RESOLUTION - 1) as f64;
                    gaps.push((lo, prev));
                    open = None;
                }
                _ => {}
            }
        }
        if let Some(lo) = open {
            gaps.push((lo, span));
        }
        gaps
    }

    /// Error on the first uncovered interval of either universe.
    pub fn require_full_coverage(&self) -> Result<()> {
        if let Some(&(lo, hi)) = self.coverage_gaps(true).first() {
            return Err(Error::CoverageGap {
                universe: "input",
                lo,
                hi,
            });
        }
        if let Some(&(lo, hi)) = self.coverage_gaps(false).first() {
            return Err(Error::CoverageGap {
                universe: "output",
                lo,
                hi,
            });
        }
        Ok(())
    }
}

/// Feedback gain from the controller output: `K = 1 + k_op`.
pub fn gain_from_kop(k_op: f64) -> f64 {
    1.0 + k_op
}
