//! Closed-form counts of the extra multiplications the corrected cascade
//! needs over the naive one, and reconciliation with measured counters.
//!
//! Two accounting conventions are in use:
//!
//! * **scalar**: the products `h^(i)(0)u(n)` are free, being paid for by the
//!   feedthrough that `h̄^(i)` no longer needs, and the `1/2` of `p = 2` is
//!   scaled explicitly. Per sample `A_S = p(p-2) + 2`.
//! * **matrix**: `H^(i)(0)u(n)` costs `μ_i` (its nonzero count) and `h̄^(i)`
//!   is assumed as expensive as `h^(i)`. For `p = 2` the `1/2` is folded into
//!   `H^(1)(0)`:
//!
//! ```text
//! A_M = μ_1 + M_1                                              p = 2
//! A_M = μ_{p-1} + p M_{p-1} + Σ_{i=1..p-2} [μ_i + i(μ_i + M_i)]   p > 2
//! ```
//!
//! The stage `p-1` term assumes `M_{p-2} = M_{p-1}`, which holds for every
//! bilinear chain; other chains may measure differently there.

use crate::cascade::OpCounter;
use crate::error::{invalid, Result};
use crate::system::FactorChain;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convention {
    Scalar,
    Matrix,
}

impl std::fmt::Display for Convention {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Convention::Scalar => "scalar",
            Convention::Matrix => "matrix",
        })
    }
}

/// Interface widths and sparsities of one separable kernel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComplexityProfile {
    order: usize,
    dims: Vec<usize>,
    sparsities: Vec<usize>,
}

impl ComplexityProfile {
    /// `dims = [M_1, …, M_{p-1}]`, `sparsities = [μ_1, …, μ_{p-1}]`.
    pub fn new(order: usize, dims: Vec<usize>, sparsities: Vec<usize>) -> Result<Self> {
        if order < 2 {
            return invalid("complexity profiles need order p >= 2");
        }
        if dims.len() != order - 1 || sparsities.len() != order - 1 {
            return invalid(format!(
                "order {order} needs {} widths and sparsities, got {} and {}",
                order - 1,
                dims.len(),
                sparsities.len()
            ));
        }
        if dims.contains(&0) {
            return invalid("interface widths must be positive");
        }
        let mut prev = 1;
        for (i, (&m, &mu)) in dims.iter().zip(&sparsities).enumerate() {
            if mu > m * prev {
                return invalid(format!("μ_{} = {mu} exceeds M_{} · M_{} = {}", i + 1, i + 1, i, m * prev));
            }
            prev = m;
        }
        Ok(Self { order, dims, sparsities })
    }

    /// Profile of a chain, with `μ_i` the exact nonzero count of `H^(i)(0)`.
    pub fn from_chain<T: Scalar>(chain: &FactorChain<T>) -> Result<Self> {
        let p = chain.order();
        let factors = &chain.factors()[..p.saturating_sub(1)];
        Self::new(
            p,
            factors.iter().map(|f| f.output_width()).collect(),
            factors.iter().map(|f| f.at_zero().nnz()).collect(),
        )
    }

    /// All widths and sparsities one.
    pub fn scalar(order: usize) -> Result<Self> {
        Self::new(order, vec![1; order.saturating_sub(1)], vec![1; order.saturating_sub(1)])
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// `M_i`, with `M_0 = M_p = 1`.
    pub fn dim(&self, i: usize) -> usize {
        if i == 0 || i == self.order {
            1
        } else {
            self.dims[i - 1]
        }
    }

    /// `μ_i` for `1 ≤ i ≤ p-1`.
    pub fn sparsity(&self, i: usize) -> usize {
        self.sparsities[i - 1]
    }
}

/// `A_S = p(p-2) + 2`.
pub fn a_scalar(p: usize) -> Result<u64> {
    if p < 2 {
        return invalid("A_S is defined for p >= 2");
    }
    Ok((p * (p - 2) + 2) as u64)
}

/// `A_M` exactly as stated, under the matrix convention.
pub fn a_matrix(profile: &ComplexityProfile) -> u64 {
    a_matrix_with(profile, Convention::Matrix)
}

/// The matrix-case count under either convention.
///
/// Under the scalar convention the `μ_i` charged for `H^(i)(0)u(n)` are
/// waived and `p = 2` uses the unfolded branch, giving
/// `p M_{p-1} + Σ_{i=1..p-2} i(μ_i + M_i)`; with every `M_i = μ_i = 1` this
/// is `A_S`.
pub fn a_matrix_with(profile: &ComplexityProfile, convention: Convention) -> u64 {
    let p = profile.order;
    let m = |i| profile.dim(i);
    let mu = |i| profile.sparsity(i);
    let stages: usize = (1..=p.saturating_sub(2)).map(|i| i * (mu(i) + m(i))).sum();
    let count = match convention {
        Convention::Matrix if p == 2 => mu(1) + m(1),
        Convention::Matrix => mu(p - 1) + p * m(p - 1) + (1..=p - 2).map(mu).sum::<usize>() + stages,
        Convention::Scalar => p * m(p - 1) + stages,
    };
    count as u64
}

/// One counter category in a reconciliation report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryDelta {
    pub name: &'static str,
    pub corrected: u64,
    pub naive: u64,
}

impl CategoryDelta {
    pub fn difference(&self) -> i64 {
        self.corrected as i64 - self.naive as i64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconciliation {
    pub convention: Convention,
    pub samples: u64,
    pub categories: Vec<CategoryDelta>,
    /// Extra multiplications per input sample under `convention`.
    pub additional_per_sample: f64,
    pub predicted: u64,
    pub matches: bool,
}

/// Compares the extra multiplications of a corrected run over a naive run
/// against a predicted per-sample count.
///
/// Under [`Convention::Matrix`] the extra work is everything in the
/// correction and feedthrough categories. Under [`Convention::Scalar`] it is
/// the difference of total counts, so the feedthrough products dropped from
/// the `h̄` blocks are credited against the `h^(i)(0)u(n)` products.
pub fn reconcile(
    measured: &OpCounter,
    baseline: &OpCounter,
    predicted: u64,
    convention: Convention,
) -> Result<Reconciliation> {
    if measured.samples != baseline.samples {
        return invalid(format!("counters cover different run lengths: {} vs {}", measured.samples, baseline.samples));
    }
    if measured.samples == 0 {
        return invalid("counters cover no samples");
    }
    let rows = [
        ("base_filter", measured.base_filter, baseline.base_filter),
        ("base_product", measured.base_product, baseline.base_product),
        ("correction_product", measured.correction_product, baseline.correction_product),
        ("correction_scaling", measured.correction_scaling, baseline.correction_scaling),
        ("feedthrough_product", measured.feedthrough_product, baseline.feedthrough_product),
    ];
    let categories: Vec<CategoryDelta> =
        rows.iter().map(|&(name, corrected, naive)| CategoryDelta { name, corrected, naive }).collect();
    let additional: i64 = match convention {
        Convention::Matrix => categories[2..].iter().map(CategoryDelta::difference).sum(),
        Convention::Scalar => measured.total() as i64 - baseline.total() as i64,
    };
    let samples = measured.samples;
    Ok(Reconciliation {
        convention,
        samples,
        categories,
        additional_per_sample: additional as f64 / samples as f64,
        predicted,
        matches: additional == predicted as i64 * samples as i64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_formula() {
        let values: Vec<u64> = (2..=5).map(|p| a_scalar(p).unwrap()).collect();
        assert_eq!(values, vec![2, 5, 10, 17]);
        assert!(a_scalar(1).is_err());
    }

    #[test]
    fn matrix_formula_examples() {
        assert_eq!(a_matrix(&ComplexityProfile::new(2, vec![3], vec![3]).unwrap()), 6);
        // μ_2 + 3 M_2 + [μ_1 + 1·(μ_1 + M_1)] = 4 + 6 + 2 + 4
        assert_eq!(a_matrix(&ComplexityProfile::new(3, vec![2, 2], vec![2, 4]).unwrap()), 16);
        // 1 + 4 + (1 + 2) + (1 + 4): the H(0)u products are charged
        assert_eq!(a_matrix(&ComplexityProfile::scalar(4).unwrap()), 13);
    }

    #[test]
    fn matrix_formula_reduces_under_scalar_convention() {
        for p in 2..=8 {
            let profile = ComplexityProfile::scalar(p).unwrap();
            assert_eq!(a_matrix_with(&profile, Convention::Scalar), a_scalar(p).unwrap(), "p = {p}");
        }
    }

    #[test]
    fn profile_validation() {
        assert!(ComplexityProfile::new(1, vec![], vec![]).is_err());
        assert!(ComplexityProfile::new(3, vec![2], vec![2]).is_err());
        // μ_1 ≤ M_1 · M_0 = 2
        assert!(ComplexityProfile::new(3, vec![2, 2], vec![3, 4]).is_err());
        assert!(ComplexityProfile::new(3, vec![2, 0], vec![2, 0]).is_err());
    }

    #[test]
    fn reconcile_rejects_length_mismatch() {
        let a = OpCounter { samples: 3, ..OpCounter::default() };
        let b = OpCounter { samples: 4, ..OpCounter::default() };
        assert!(reconcile(&a, &b, 0, Convention::Scalar).is_err());
    }

    #[test]
    fn identical_counters_add_nothing() {
        let a = OpCounter { base_filter: 30, base_product: 10, samples: 10, ..OpCounter::default() };
        for convention in [Convention::Scalar, Convention::Matrix] {
            let r = reconcile(&a, &a, 0, convention).unwrap();
            assert!(r.matches);
            assert_eq!(r.additional_per_sample, 0.0);
        }
    }
}
