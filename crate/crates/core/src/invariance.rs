//! Multiplicity-corrected impulse invariance for Volterra kernels.
//!
//! Sampling a continuous triangular kernel on the lattice `τ_i = n_i T` is
//! exact in the interior of the domain `τ_1 < … < τ_p`. On its border each
//! group of `m` coincident times weighs the sample by `1/m!`. In gap (regular)
//! coordinates `n_1 = τ_p - τ_{p-1}, …, n_p = τ_1` the coincidences become
//! runs of zero gaps among `n_1..n_{p-1}`, a run of `L` zeros contributing
//! `1/(L+1)!`.

use num_rational::Ratio;

use crate::error::{invalid, Result};
use crate::system::{kernel_value, FactorChain};
use crate::Scalar;

// 20! is the largest factorial representable in u64.
const MAX_FACTORIAL: usize = 20;

fn factorial(n: usize) -> Result<u64> {
    if n > MAX_FACTORIAL {
        return invalid(format!("multiplicity {n} exceeds the supported maximum {MAX_FACTORIAL}"));
    }
    Ok((1..=n as u64).product())
}

/// A group of tied lags: `multiplicity` entries starting at `start`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LagGroup {
    pub start: usize,
    pub multiplicity: usize,
}

/// Exact factor `1 / (m_1! ··· m_q!)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiplicityFactor {
    value: Ratio<u64>,
    groups: Vec<LagGroup>,
}

impl MultiplicityFactor {
    fn from_groups(groups: Vec<LagGroup>) -> Result<Self> {
        let mut den = 1u64;
        for g in &groups {
            den = den
                .checked_mul(factorial(g.multiplicity)?)
                .ok_or_else(|| crate::Error::Validation("multiplicity denominator overflows".into()))?;
        }
        Ok(Self { value: Ratio::new(1, den), groups })
    }

    pub fn value(&self) -> Ratio<u64> {
        self.value
    }

    pub fn denominator(&self) -> u64 {
        *self.value.denom()
    }

    /// The groups whose factorials form the denominator.
    pub fn groups(&self) -> &[LagGroup] {
        &self.groups
    }

    pub fn is_one(&self) -> bool {
        self.denominator() == 1
    }

    pub fn to_scalar<T: Scalar>(&self) -> T {
        T::one() / T::from_u64(self.denominator()).expect("u64 fits every float")
    }
}

impl std::fmt::Display for MultiplicityFactor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.value.numer(), self.value.denom())
    }
}

/// Triangular-convention factor: one group per distinct value of the
/// nondecreasing `taus`.
pub fn m_tri(taus: &[usize]) -> Result<MultiplicityFactor> {
    check_nondecreasing(taus)?;
    let mut groups: Vec<LagGroup> = Vec::new();
    for (i, &t) in taus.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if taus[g.start] == t => g.multiplicity += 1,
            _ => groups.push(LagGroup { start: i, multiplicity: 1 }),
        }
    }
    MultiplicityFactor::from_groups(groups)
}

/// Regular-convention factor over the leading gaps `n_1..n_{p-1}`: a run of
/// `L` consecutive zeros forms a group of multiplicity `L + 1`.
pub fn m_reg(gaps: &[usize]) -> Result<MultiplicityFactor> {
    let mut groups: Vec<LagGroup> = Vec::new();
    let mut in_run = false;
    for (i, &n) in gaps.iter().enumerate() {
        if n == 0 {
            match groups.last_mut() {
                Some(g) if in_run => g.multiplicity += 1,
                _ => groups.push(LagGroup { start: i, multiplicity: 2 }),
            }
            in_run = true;
        } else {
            in_run = false;
        }
    }
    MultiplicityFactor::from_groups(groups)
}

fn check_nondecreasing(taus: &[usize]) -> Result<()> {
    if let Some(i) = taus.windows(2).position(|w| w[0] > w[1]) {
        return invalid(format!(
            "triangular lags must be nondecreasing, found {} > {} at position {}",
            taus[i],
            taus[i + 1],
            i + 1
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexConvention {
    Regular,
    Triangular,
}

/// Lag tuple in either kernel convention.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KernelIndex {
    convention: IndexConvention,
    lags: Vec<usize>,
}

impl KernelIndex {
    pub fn regular(lags: Vec<usize>) -> Self {
        Self { convention: IndexConvention::Regular, lags }
    }

    pub fn triangular(lags: Vec<usize>) -> Result<Self> {
        check_nondecreasing(&lags)?;
        Ok(Self { convention: IndexConvention::Triangular, lags })
    }

    pub fn convention(&self) -> IndexConvention {
        self.convention
    }

    pub fn lags(&self) -> &[usize] {
        &self.lags
    }

    pub fn order(&self) -> usize {
        self.lags.len()
    }

    pub fn to_triangular(&self) -> Self {
        match self.convention {
            IndexConvention::Triangular => self.clone(),
            IndexConvention::Regular => {
                Self { convention: IndexConvention::Triangular, lags: regular_to_triangular(&self.lags) }
            }
        }
    }

    pub fn to_regular(&self) -> Self {
        match self.convention {
            IndexConvention::Regular => self.clone(),
            IndexConvention::Triangular => Self {
                convention: IndexConvention::Regular,
                lags: triangular_to_regular(&self.lags).expect("validated at construction"),
            },
        }
    }

    /// Multiplicity factor in this index's own convention.
    pub fn multiplicity(&self) -> Result<MultiplicityFactor> {
        match self.convention {
            IndexConvention::Triangular => m_tri(&self.lags),
            IndexConvention::Regular => m_reg(leading_gaps(&self.lags)),
        }
    }

    /// Impulse-invariant sample `v_p` of `chain` at this index.
    pub fn sample<T: Scalar>(&self, chain: &FactorChain<T>) -> Result<T> {
        match self.convention {
            IndexConvention::Regular => sample_regular(chain, &self.lags),
            IndexConvention::Triangular => sample_triangular(chain, &self.lags),
        }
    }
}

fn leading_gaps(ns: &[usize]) -> &[usize] {
    &ns[..ns.len().saturating_sub(1)]
}

/// Gaps to times: `τ_k = n_{p-k+1} + … + n_p`.
pub fn regular_to_triangular(ns: &[usize]) -> Vec<usize> {
    ns.iter()
        .rev()
        .scan(0, |acc, &n| {
            *acc += n;
            Some(*acc)
        })
        .collect()
}

/// Times to gaps: `θ_k = τ_{p-k+1} - τ_{p-k}` with `τ_0 = 0`.
pub fn triangular_to_regular(taus: &[usize]) -> Result<Vec<usize>> {
    check_nondecreasing(taus)?;
    let p = taus.len();
    Ok((0..p)
        .map(|k| {
            let hi = taus[p - 1 - k];
            let lo = if k + 1 < p { taus[p - 2 - k] } else { 0 };
            hi - lo
        })
        .collect())
}

/// Input lags `n̄_i = n_i + … + n_p` at which a regular tuple reads `u`.
pub fn suffix_sums(ns: &[usize]) -> Vec<usize> {
    let mut out = vec![0; ns.len()];
    let mut acc = 0;
    for (o, &n) in out.iter_mut().zip(ns).rev() {
        acc += n;
        *o = acc;
    }
    out
}

/// `v_p(n_1, …, n_p) = m(n_1..n_{p-1}) · h_p(n_1 T, …, n_p T)`.
pub fn sample_regular<T: Scalar>(chain: &FactorChain<T>, ns: &[usize]) -> Result<T> {
    check_arity(chain, ns)?;
    let m = m_reg(leading_gaps(ns))?;
    let taus: Vec<T> = ns.iter().map(|&n| T::of_usize(n) * chain.period()).collect();
    Ok(m.to_scalar::<T>() * kernel_value(chain, &taus)?)
}

/// `v_p^tri(τ) = m_tri(τ) · h_p^tri(τ T)`, the triangular kernel being the
/// regular one evaluated at the gaps of `τ`.
pub fn sample_triangular<T: Scalar>(chain: &FactorChain<T>, taus: &[usize]) -> Result<T> {
    check_arity(chain, taus)?;
    let m = m_tri(taus)?;
    let gaps: Vec<T> = triangular_to_regular(taus)?.into_iter().map(|n| T::of_usize(n) * chain.period()).collect();
    Ok(m.to_scalar::<T>() * kernel_value(chain, &gaps)?)
}

fn check_arity<T: Scalar>(chain: &FactorChain<T>, lags: &[usize]) -> Result<()> {
    if lags.len() != chain.order() {
        return invalid(format!("order-{} kernel needs {} lags, got {}", chain.order(), chain.order(), lags.len()));
    }
    Ok(())
}
