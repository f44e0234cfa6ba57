//! Brute-force homogeneous outputs straight from the sampled kernels.
//!
//! Both evaluators visit every lag tuple whose total lag is at most the
//! memory bound `L` (`n̄_1 ≤ L` regular, `τ_p ≤ L` triangular), so the two
//! forms sum exactly the same terms in different orders. Cost is `O(L^p)` per
//! output sample; this is the slow trusted path, not a filter.

use crate::error::{invalid, Result};
use crate::invariance::{m_reg, m_tri, triangular_to_regular};
use crate::matexp::Matrix;
use crate::system::{check_same_period, decay_length, FactorChain, Signal};
use crate::Scalar;

/// Tolerance on `‖exp(A L T)‖` used to pick the memory bound automatically.
pub const AUTO_MEMORY_TOL: f64 = 1e-12;
const AUTO_MEMORY_CAP: usize = 1 << 16;

/// Smallest `L` with `‖exp(A_i L T)‖_F < 1e-12` for every factor of the chain.
pub fn auto_memory<T: Scalar>(chain: &FactorChain<T>) -> Result<usize> {
    let states: Vec<Matrix<T>> = chain.factors().iter().map(|f| f.a().clone()).collect();
    decay_length(&states, chain.period(), T::of(AUTO_MEMORY_TOL), AUTO_MEMORY_CAP)
}

/// `y_p(n) = Σ v_p(n_1..n_p) Π_i u(n - n̄_i)` with `n̄_i = n_i + … + n_p`.
pub fn eval_regular<T: Scalar>(chain: &FactorChain<T>, u: &Signal<T>, memory: usize) -> Result<Signal<T>> {
    regular_sum(chain, u, memory, |gaps| Ok(m_reg(gaps)?.to_scalar()))
}

/// [`eval_regular`] with every multiplicity factor replaced by one, i.e. the
/// plain sampled kernel `h_p(n_1 T, …, n_p T)`.
pub fn eval_regular_uncorrected<T: Scalar>(chain: &FactorChain<T>, u: &Signal<T>, memory: usize) -> Result<Signal<T>> {
    regular_sum(chain, u, memory, |_| Ok(T::one()))
}

fn regular_sum<T, W>(chain: &FactorChain<T>, u: &Signal<T>, memory: usize, weight: W) -> Result<Signal<T>>
where
    T: Scalar,
    W: Fn(&[usize]) -> Result<T>,
{
    check_same_period(chain.period(), u.period())?;
    let reach = memory.min(u.len().saturating_sub(1));
    let tables = chain.sampled_factors(reach + 1)?;
    let p = chain.order();
    let mut out = Vec::with_capacity(u.len());
    let mut lags = vec![0usize; p];
    for n in 0..u.len() {
        let mut acc = T::zero();
        let ctx = RegularWalk { tables: &tables, u, n, budget: memory.min(n), weight: &weight };
        // The output row starts as the 1x1 identity; factors are consumed
        // from H^(p) down to H^(1).
        ctx.descend(p, 0, &[T::one()], &mut lags, &mut acc)?;
        out.push(acc);
    }
    Signal::new(out, u.period())
}

struct RegularWalk<'a, T, W> {
    tables: &'a [Vec<Matrix<T>>],
    u: &'a Signal<T>,
    n: usize,
    budget: usize,
    weight: &'a W,
}

impl<T: Scalar, W: Fn(&[usize]) -> Result<T>> RegularWalk<'_, T, W> {
    /// Chooses `n_i` given the partial row `row = u(..)·H^(p)(n_p)···` and
    /// the running suffix sum `used = n_{i+1} + … + n_p`.
    fn descend(&self, i: usize, used: usize, row: &[T], lags: &mut [usize], acc: &mut T) -> Result<()> {
        if i == 0 {
            let w = (self.weight)(&lags[..lags.len() - 1])?;
            *acc += w * row[0];
            return Ok(());
        }
        for lag in 0..=self.budget - used {
            let total = used + lag;
            let x = self.u.at(self.n as isize - total as isize);
            if x.is_zero() {
                continue;
            }
            lags[i - 1] = lag;
            let next: Vec<T> = self.tables[i - 1][lag].vec_mul(row).into_iter().map(|v| v * x).collect();
            self.descend(i - 1, total, &next, lags, acc)?;
        }
        Ok(())
    }
}

/// `y_p(n) = Σ_{0 ≤ τ_1 ≤ … ≤ τ_p ≤ L} v_p^tri(τ) Π_i u(n - τ_i)`.
pub fn eval_triangular<T: Scalar>(chain: &FactorChain<T>, u: &Signal<T>, memory: usize) -> Result<Signal<T>> {
    check_same_period(chain.period(), u.period())?;
    let reach = memory.min(u.len().saturating_sub(1));
    let tables = chain.sampled_factors(reach + 1)?;
    let p = chain.order();
    let mut out = Vec::with_capacity(u.len());
    let mut taus = vec![0usize; p];
    for n in 0..u.len() {
        let mut acc = T::zero();
        let limit = memory.min(n);
        triangular_walk(&tables, u, n, limit, 0, 0, &mut taus, &mut acc)?;
        out.push(acc);
    }
    Signal::new(out, u.period())
}

#[allow(clippy::too_many_arguments)]
fn triangular_walk<T: Scalar>(
    tables: &[Vec<Matrix<T>>],
    u: &Signal<T>,
    n: usize,
    limit: usize,
    k: usize,
    lower: usize,
    taus: &mut [usize],
    acc: &mut T,
) -> Result<()> {
    if k == taus.len() {
        let inputs: T = taus.iter().map(|&t| u.at(n as isize - t as isize)).fold(T::one(), |a, b| a * b);
        if inputs.is_zero() {
            return Ok(());
        }
        let gaps = triangular_to_regular(taus)?;
        let mut kernel: Option<Matrix<T>> = None;
        for (table, &g) in tables.iter().zip(&gaps) {
            let h = &table[g];
            kernel = Some(match kernel {
                None => h.clone(),
                Some(prev) => h * &prev,
            });
        }
        let m = m_tri(taus)?.to_scalar::<T>();
        *acc += m * kernel.expect("chain is nonempty")[(0, 0)] * inputs;
        return Ok(());
    }
    for t in lower..=limit {
        taus[k] = t;
        triangular_walk(tables, u, n, limit, k + 1, t, taus, acc)?;
    }
    Ok(())
}

/// Sum of the regular-form outputs of all `chains` (one per order).
pub fn total_output<T: Scalar>(chains: &[FactorChain<T>], u: &Signal<T>, memory: usize) -> Result<Signal<T>> {
    let Some(first) = chains.first() else {
        return invalid("need at least one kernel");
    };
    let mut total = Signal::zeros(u.len(), first.period())?;
    for chain in chains {
        check_same_period(first.period(), chain.period())?;
        total = total.try_add(&eval_regular(chain, u, memory)?)?;
    }
    Ok(total)
}
