//! Discrete realizations of separable kernels.
//!
//! Each continuous factor `H^(i)` becomes an impulse-invariant state-space
//! block. The naive cascade alternates those blocks with multiplications by
//! the input and realizes the plain sampled kernel. The corrected cascade
//! realizes the multiplicity-corrected kernel with the auxiliary signals
//! `z_{i,j}`:
//!
//! ```text
//! z_{0,1}(n) = u(n)
//! z_{i,1}(n) = [h̄^(i) * Σ_{j=1..i} z_{i-1,j}/j!](n) · u(n)
//! z_{i,j}(n) = H^(i)(0) · z_{i-1,j-1}(n) · u(n),        j = 2..i+1
//! y_p(n)     = [h^(p) * Σ_{j=1..p} z_{p-1,j}/j!](n)
//! ```
//!
//! where `h̄^(i)` is `h^(i)` with its sample at the origin removed. At stage
//! `p-1` the tail `Σ_{j≥2} z_{p-1,j}/j!` is formed as
//! `H^(p-1)(0) · (Σ_{j≥2} z_{p-2,j-1}/j!) · u(n)`, which needs one matrix
//! product instead of `p-1`.
//!
//! Every scalar multiplication is tallied in an [`OpCounter`].

use std::ops::AddAssign;

use crate::error::{dim_err, invalid, Result};
use crate::matexp::{expm, Matrix};
use crate::system::{check_same_period, FactorChain, LtiFactor, Signal};
use crate::Scalar;

/// Impulse-invariant discrete block for one factor.
///
/// With feedthrough the impulse response is `C·exp(A n T)·B` for `n ≥ 0`;
/// without it the `n = 0` sample is dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteFactor<T> {
    a_d: Matrix<T>,
    b_d: Matrix<T>,
    c: Matrix<T>,
    d: Matrix<T>,
    feedthrough: bool,
}

impl<T: Scalar> DiscreteFactor<T> {
    pub fn a_d(&self) -> &Matrix<T> {
        &self.a_d
    }

    pub fn b_d(&self) -> &Matrix<T> {
        &self.b_d
    }

    pub fn c(&self) -> &Matrix<T> {
        &self.c
    }

    /// `H(0) = C·B`, kept even when feedthrough is disabled.
    pub fn d(&self) -> &Matrix<T> {
        &self.d
    }

    pub fn feedthrough_enabled(&self) -> bool {
        self.feedthrough
    }

    pub fn input_width(&self) -> usize {
        self.b_d.cols()
    }

    pub fn output_width(&self) -> usize {
        self.c.rows()
    }

    pub fn state_dim(&self) -> usize {
        self.a_d.rows()
    }

    /// Multiplications per time step.
    pub fn step_cost(&self) -> u64 {
        let s = self.state_dim();
        let dense = s * s + s * self.input_width() + self.output_width() * s;
        (dense + if self.feedthrough { self.d.nnz() } else { 0 }) as u64
    }

    /// First `len` matrix samples of the impulse response.
    pub fn impulse_response(&self, len: usize) -> Vec<Matrix<T>> {
        let mut out = Vec::with_capacity(len);
        // state after the first input is B_d, then A_d^k B_d
        let mut state = self.b_d.clone();
        for n in 0..len {
            if n == 0 {
                out.push(if self.feedthrough {
                    self.d.clone()
                } else {
                    Matrix::zeros(self.output_width(), self.input_width())
                });
            } else {
                out.push(&self.c * &state);
                state = &self.a_d * &state;
            }
        }
        out
    }
}

/// `A_d = exp(A T)`, `B_d = A_d B`, `D = C B`.
pub fn discretize_factor<T: Scalar>(factor: &LtiFactor<T>, period: T, feedthrough: bool) -> Result<DiscreteFactor<T>> {
    if !(period.is_finite() && period > T::zero()) {
        return invalid("sampling period must be positive and finite");
    }
    let a_d = expm(&factor.a().scale(period))?;
    let b_d = &a_d * factor.b();
    Ok(DiscreteFactor { a_d, b_d, c: factor.c().clone(), d: factor.at_zero(), feedthrough })
}

/// Multiplication tallies by category.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounter {
    /// State-space block updates, including their own feedthrough products.
    pub base_filter: u64,
    /// Products of a block output with `u(n)` on the main path.
    pub base_product: u64,
    /// `H^(i)(0)u(n)·z` style products forming the correction signals.
    pub correction_product: u64,
    /// `1/j!` scalings.
    pub correction_scaling: u64,
    /// Products with `H^(i)(0)` outside a block (`W_i = H^(i)(0)u(n)`).
    pub feedthrough_product: u64,
    /// Time steps processed.
    pub samples: u64,
}

impl OpCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn total(&self) -> u64 {
        self.base_filter
            + self.base_product
            + self.correction_product
            + self.correction_scaling
            + self.feedthrough_product
    }
}

impl AddAssign for OpCounter {
    fn add_assign(&mut self, rhs: Self) {
        self.base_filter += rhs.base_filter;
        self.base_product += rhs.base_product;
        self.correction_product += rhs.correction_product;
        self.correction_scaling += rhs.correction_scaling;
        self.feedthrough_product += rhs.feedthrough_product;
        self.samples += rhs.samples;
    }
}

/// Running state of one block.
struct FilterState<'a, T> {
    block: &'a DiscreteFactor<T>,
    xi: Vec<T>,
}

impl<'a, T: Scalar> FilterState<'a, T> {
    fn new(block: &'a DiscreteFactor<T>) -> Self {
        Self { block, xi: vec![T::zero(); block.state_dim()] }
    }

    fn step(&mut self, v: &[T], counter: &mut OpCounter) -> Vec<T> {
        let b = self.block;
        let mut out = b.c.mul_vec(&self.xi);
        if b.feedthrough {
            for (o, dv) in out.iter_mut().zip(sparse_mul_vec(&b.d, v)) {
                *o += dv;
            }
        }
        let drive = b.b_d.mul_vec(v);
        self.xi = b.a_d.mul_vec(&self.xi).into_iter().zip(drive).map(|(x, d)| x + d).collect();
        counter.base_filter += b.step_cost();
        out
    }
}

/// `M v` skipping structural zeros of `M`.
fn sparse_mul_vec<T: Scalar>(m: &Matrix<T>, v: &[T]) -> Vec<T> {
    (0..m.rows())
        .map(|i| {
            m.row_slice(i).iter().zip(v).filter(|(a, _)| !a.is_zero()).fold(T::zero(), |acc, (&a, &x)| acc + a * x)
        })
        .collect()
}

fn scale_by<T: Scalar>(v: &[T], k: T) -> Vec<T> {
    v.iter().map(|&x| x * k).collect()
}

fn add_into<T: Scalar>(acc: &mut [T], v: &[T]) {
    for (a, &x) in acc.iter_mut().zip(v) {
        *a += x;
    }
}

/// Runs a block over a vector-valued input from zero initial state.
pub fn filter_run<T: Scalar>(block: &DiscreteFactor<T>, input: &[Vec<T>]) -> Result<Vec<Vec<T>>> {
    if let Some(bad) = input.iter().position(|v| v.len() != block.input_width()) {
        return dim_err(format!("sample {bad} has width {}, block expects {}", input[bad].len(), block.input_width()));
    }
    let mut state = FilterState::new(block);
    let mut counter = OpCounter::new();
    Ok(input.iter().map(|v| state.step(v, &mut counter)).collect())
}

/// Impulse-invariant linear response of a scalar factor.
pub fn order1<T: Scalar>(factor: &LtiFactor<T>, u: &Signal<T>, period: T) -> Result<Signal<T>> {
    if factor.input_width() != 1 || factor.output_width() != 1 {
        return dim_err(format!(
            "order-1 realization needs a scalar factor, got {} inputs and {} outputs",
            factor.input_width(),
            factor.output_width()
        ));
    }
    check_same_period(period, u.period())?;
    let block = discretize_factor(factor, period, true)?;
    let input: Vec<Vec<T>> = u.samples().iter().map(|&x| vec![x]).collect();
    let out = filter_run(&block, &input)?;
    Signal::new(out.into_iter().map(|v| v[0]).collect(), period)
}

fn check_cascade_input<T: Scalar>(chain: &FactorChain<T>, u: &Signal<T>) -> Result<()> {
    if chain.order() < 2 {
        return invalid("cascade realizations need order p >= 2; use order1 for p = 1");
    }
    check_same_period(chain.period(), u.period())
}

/// Plain cascade realizing `h_p(n_1 T, …, n_p T)` without multiplicity
/// corrections.
pub fn naive_cascade<T: Scalar>(chain: &FactorChain<T>, u: &Signal<T>, counter: &mut OpCounter) -> Result<Signal<T>> {
    check_cascade_input(chain, u)?;
    let blocks =
        chain.factors().iter().map(|f| discretize_factor(f, chain.period(), true)).collect::<Result<Vec<_>>>()?;
    let mut states: Vec<FilterState<T>> = blocks.iter().map(FilterState::new).collect();
    let (last, stages) = states.split_last_mut().expect("order >= 2");
    let mut out = Vec::with_capacity(u.len());
    for &x in u.samples() {
        let mut z = vec![x];
        for stage in stages.iter_mut() {
            z = scale_by(&stage.step(&z, counter), x);
            counter.base_product += z.len() as u64;
        }
        out.push(last.step(&z, counter)[0]);
        counter.samples += 1;
    }
    Signal::new(out, u.period())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CascadeOptions {
    /// For `p = 2`, fold the `1/2` into `H^(1)(0)` instead of scaling the
    /// signal each sample.
    pub absorb_half: bool,
}

/// Time series of the correction signals of a corrected-cascade run.
#[derive(Debug, Clone, Default)]
pub struct CascadeTrace<T> {
    /// `z[i-1][j-1][n]` is `z_{i,j}(n)`, for `i = 1..p-1` and `j = 1..i+1`.
    pub z: Vec<Vec<Vec<Vec<T>>>>,
}

impl<T: Scalar> CascadeTrace<T> {
    /// `z_{i,j}` as a signal of vectors (1-based indices as in the recursion).
    pub fn signal(&self, i: usize, j: usize) -> &[Vec<T>] {
        &self.z[i - 1][j - 1]
    }
}

/// Corrected cascade realizing the multiplicity-corrected kernel
/// `m(n_1..n_{p-1}) · h_p(n_1 T, …, n_p T)`.
pub fn corrected_cascade<T: Scalar>(
    chain: &FactorChain<T>,
    u: &Signal<T>,
    counter: &mut OpCounter,
) -> Result<Signal<T>> {
    corrected_cascade_with(chain, u, counter, CascadeOptions::default())
}

pub fn corrected_cascade_with<T: Scalar>(
    chain: &FactorChain<T>,
    u: &Signal<T>,
    counter: &mut OpCounter,
    options: CascadeOptions,
) -> Result<Signal<T>> {
    Corrected::new(chain, options)?.run(u, counter, None)
}

/// [`corrected_cascade_with`] also returning every `z_{i,j}`. The extra
/// signals needed only for the trace are not counted.
pub fn corrected_cascade_traced<T: Scalar>(
    chain: &FactorChain<T>,
    u: &Signal<T>,
    counter: &mut OpCounter,
    options: CascadeOptions,
) -> Result<(Signal<T>, CascadeTrace<T>)> {
    let p = chain.order();
    let mut trace = CascadeTrace { z: (1..p).map(|i| vec![Vec::with_capacity(u.len()); i + 1]).collect() };
    let y = Corrected::new(chain, options)?.run(u, counter, Some(&mut trace))?;
    Ok((y, trace))
}

struct Corrected<T> {
    order: usize,
    period: T,
    /// `h̄^(1..p-1)` followed by `h^(p)`.
    blocks: Vec<DiscreteFactor<T>>,
    /// `1/j!` for `j = 0..=p`.
    inv_factorial: Vec<T>,
    absorb_half: bool,
}

impl<T: Scalar> Corrected<T> {
    fn new(chain: &FactorChain<T>, options: CascadeOptions) -> Result<Self> {
        let p = chain.order();
        if p < 2 {
            return invalid("cascade realizations need order p >= 2; use order1 for p = 1");
        }
        let blocks = chain
            .factors()
            .iter()
            .enumerate()
            .map(|(i, f)| discretize_factor(f, chain.period(), i + 1 == p))
            .collect::<Result<Vec<_>>>()?;
        let mut inv_factorial = vec![T::one(); p + 1];
        for j in 1..=p {
            inv_factorial[j] = inv_factorial[j - 1] / T::of_usize(j);
        }
        Ok(Self { order: p, period: chain.period(), blocks, inv_factorial, absorb_half: options.absorb_half && p == 2 })
    }

    fn run(
        &self,
        u: &Signal<T>,
        counter: &mut OpCounter,
        mut trace: Option<&mut CascadeTrace<T>>,
    ) -> Result<Signal<T>> {
        check_same_period(self.period, u.period())?;
        let p = self.order;
        let half_d = self.blocks[0].d.scale(self.inv_factorial[2]);
        let mut states: Vec<FilterState<T>> = self.blocks.iter().map(FilterState::new).collect();
        let mut out = Vec::with_capacity(u.len());

        for &x in u.samples() {
            // z_{i-1, j} for j = 1..=i
            let mut prev: Vec<Vec<T>> = vec![vec![x]];
            let mut tail_sum = Vec::new();
            for i in 1..p {
                let d = &self.blocks[i - 1].d;
                let mut s = prev[0].clone();
                for j in 2..=i {
                    add_into(&mut s, &scale_by(&prev[j - 1], self.inv_factorial[j]));
                    counter.correction_scaling += prev[j - 1].len() as u64;
                }
                let z1 = scale_by(&states[i - 1].step(&s, counter), x);
                counter.base_product += z1.len() as u64;

                if i + 1 < p {
                    // W_i = H^(i)(0) u(n), then z_{i,j} = W_i z_{i-1,j-1}
                    let w = d.scale(x);
                    counter.feedthrough_product += d.nnz() as u64;
                    let mut next = Vec::with_capacity(i + 1);
                    next.push(z1);
                    for z in &prev {
                        next.push(sparse_mul_vec(&w, z));
                        counter.correction_product += d.nnz() as u64;
                    }
                    if let Some(t) = trace.as_deref_mut() {
                        for (j, z) in next.iter().enumerate() {
                            t.z[i - 1][j].push(z.clone());
                        }
                    }
                    prev = next;
                } else {
                    // Stage p-1: H^(p-1)(0) · (Σ_{j=2..p} z_{p-2,j-1}/j!) · u(n)
                    let q = if self.absorb_half {
                        counter.feedthrough_product += half_d.nnz() as u64;
                        sparse_mul_vec(&half_d, &prev[0])
                    } else {
                        let mut r = vec![T::zero(); prev[0].len()];
                        for (k, z) in prev.iter().enumerate() {
                            add_into(&mut r, &scale_by(z, self.inv_factorial[k + 2]));
                            counter.correction_scaling += z.len() as u64;
                        }
                        counter.feedthrough_product += d.nnz() as u64;
                        sparse_mul_vec(d, &r)
                    };
                    let tail = scale_by(&q, x);
                    counter.correction_product += tail.len() as u64;

                    if let Some(t) = trace.as_deref_mut() {
                        t.z[i - 1][0].push(z1.clone());
                        for (k, z) in prev.iter().enumerate() {
                            t.z[i - 1][k + 1].push(scale_by(&sparse_mul_vec(d, z), x));
                        }
                    }
                    let mut s_final = z1;
                    add_into(&mut s_final, &tail);
                    tail_sum = s_final;
                }
            }
            out.push(states[p - 1].step(&tail_sum, counter)[0]);
            counter.samples += 1;
        }
        Signal::new(out, u.period())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{BilinearSystem, Vector};

    fn scalar_chain(p: usize) -> FactorChain<f64> {
        BilinearSystem::new(
            Matrix::new(1, 1, vec![-1.0]).unwrap(),
            Matrix::new(1, 1, vec![1.0]).unwrap(),
            Vector::new(vec![1.0]).unwrap(),
            Vector::new(vec![1.0]).unwrap(),
            1.0,
        )
        .unwrap()
        .to_chain(p)
        .unwrap()
    }

    #[test]
    fn scalar_block_impulse_response() {
        let f = LtiFactor::first_order(-1.0, 1.0).unwrap();
        for feedthrough in [true, false] {
            let block = discretize_factor(&f, 1.0, feedthrough).unwrap();
            let mut input = vec![vec![0.0]; 6];
            input[0][0] = 1.0;
            let y = filter_run(&block, &input).unwrap();
            for (n, v) in y.iter().enumerate() {
                let expected = if n == 0 && !feedthrough { 0.0 } else { (-(n as f64)).exp() };
                assert!((v[0] - expected).abs() < 1e-15, "n = {n}");
            }
        }
    }

    #[test]
    fn filter_run_checks_width() {
        let f = LtiFactor::first_order(-1.0, 1.0).unwrap();
        let block = discretize_factor(&f, 1.0, true).unwrap();
        assert!(filter_run(&block, &[vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn order1_impulse() {
        let f = LtiFactor::first_order(-0.5, 2.0).unwrap();
        let y = order1(&f, &Signal::impulse(5, 1.0).unwrap(), 1.0).unwrap();
        for (n, &v) in y.samples().iter().enumerate() {
            assert!((v - 2.0 * (-0.5 * n as f64).exp()).abs() < 1e-14);
        }
        let wide =
            LtiFactor::new(Matrix::identity(2), Matrix::column(&[1.0, 1.0]).unwrap(), Matrix::identity(2)).unwrap();
        assert!(order1(&wide, &Signal::impulse(5, 1.0).unwrap(), 1.0).is_err());
    }

    #[test]
    fn corrected_order_two_impulse() {
        let y = corrected_cascade(&scalar_chain(2), &Signal::impulse(10, 1.0).unwrap(), &mut OpCounter::new()).unwrap();
        for (n, &v) in y.samples().iter().enumerate() {
            assert!((v - (-(n as f64)).exp() / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn absorbing_the_half_keeps_values() {
        let u = Signal::new(vec![0.3, -1.2, 0.8, 0.5, -0.1, 0.0, 0.9], 1.0).unwrap();
        let chain = scalar_chain(2);
        let a = corrected_cascade(&chain, &u, &mut OpCounter::new()).unwrap();
        let b =
            corrected_cascade_with(&chain, &u, &mut OpCounter::new(), CascadeOptions { absorb_half: true }).unwrap();
        for (x, y) in a.samples().iter().zip(b.samples()) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn cascades_reject_order_one() {
        let u = Signal::impulse(3, 1.0).unwrap();
        assert!(naive_cascade(&scalar_chain(1), &u, &mut OpCounter::new()).is_err());
        assert!(corrected_cascade(&scalar_chain(1), &u, &mut OpCounter::new()).is_err());
    }

    #[test]
    fn scalar_additional_counts() {
        // correction products plus scalings per sample: p(p-2)+2
        let u = Signal::new(vec![0.5; 7], 1.0).unwrap();
        for p in 2..=6 {
            let mut c = OpCounter::new();
            corrected_cascade(&scalar_chain(p), &u, &mut c).unwrap();
            assert_eq!(c.samples, 7);
            assert_eq!((c.correction_product + c.correction_scaling) / 7, (p * (p - 2) + 2) as u64, "p = {p}");
        }
    }

    #[test]
    fn trace_layout() {
        let u = Signal::new(vec![1.0, 0.5, -0.5], 1.0).unwrap();
        let (_, trace) =
            corrected_cascade_traced(&scalar_chain(4), &u, &mut OpCounter::new(), CascadeOptions::default()).unwrap();
        assert_eq!(trace.z.len(), 3);
        for i in 1..=3 {
            assert_eq!(trace.z[i - 1].len(), i + 1);
            for j in 1..=i + 1 {
                assert_eq!(trace.signal(i, j).len(), 3);
            }
        }
    }
}
