//! Continuous-time reference: bilinear systems, separable factor chains,
//! exact kernel evaluation and exact impulse-train simulation.

use crate::error::{dim_err, invalid, Result};
use crate::matexp::{expm, impulse_jump, least_squares, Matrix, Vector};
use crate::Scalar;

/// Finite discrete-time signal with its sampling period.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal<T> {
    samples: Vec<T>,
    period: T,
}

impl<T: Scalar> Signal<T> {
    pub fn new(samples: Vec<T>, period: T) -> Result<Self> {
        check_period(period)?;
        if samples.iter().any(|x| !x.is_finite()) {
            return invalid("signal samples must be finite");
        }
        Ok(Self { samples, period })
    }

    pub fn zeros(len: usize, period: T) -> Result<Self> {
        Self::new(vec![T::zero(); len], period)
    }

    /// Unit impulse at `n = 0`.
    pub fn impulse(len: usize, period: T) -> Result<Self> {
        let mut s = vec![T::zero(); len];
        if let Some(first) = s.first_mut() {
            *first = T::one();
        }
        Self::new(s, period)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<T> {
        self.samples
    }

    pub fn period(&self) -> T {
        self.period
    }

    /// Sample `k`, with zero outside the stored support.
    pub fn at(&self, k: isize) -> T {
        usize::try_from(k).ok().and_then(|k| self.samples.get(k)).copied().unwrap_or_else(T::zero)
    }

    pub fn scaled(&self, alpha: T) -> Self {
        Self { samples: self.samples.iter().map(|&x| x * alpha).collect(), period: self.period }
    }

    /// Delays by `d` samples, keeping the length.
    pub fn delayed(&self, d: usize) -> Self {
        let n = self.len();
        let samples = (0..n).map(|k| if k >= d { self.samples[k - d] } else { T::zero() }).collect();
        Self { samples, period: self.period }
    }

    pub fn max_abs(&self) -> T {
        self.samples.iter().map(|x| x.abs()).fold(T::zero(), T::max)
    }

    /// Sample-wise sum of two signals of equal length.
    pub fn try_add(&self, other: &Self) -> Result<Self> {
        if self.len() != other.len() {
            return dim_err(format!("signal lengths differ: {} vs {}", self.len(), other.len()));
        }
        let samples = self.samples.iter().zip(&other.samples).map(|(&a, &b)| a + b).collect();
        Ok(Self { samples, period: self.period })
    }
}

fn check_period<T: Scalar>(period: T) -> Result<()> {
    if !(period.is_finite() && period > T::zero()) {
        return invalid("sampling period must be positive and finite");
    }
    Ok(())
}

pub(crate) fn check_same_period<T: Scalar>(a: T, b: T) -> Result<()> {
    if (a - b).abs() > T::of(1e-12) * a.abs().max(b.abs()) {
        return invalid(format!("sampling periods differ: {a} vs {b}"));
    }
    Ok(())
}

/// Continuous LTI factor with impulse response `H(τ) = C·exp(Aτ)·B`, `τ ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LtiFactor<T> {
    a: Matrix<T>,
    b: Matrix<T>,
    c: Matrix<T>,
}

impl<T: Scalar> LtiFactor<T> {
    pub fn new(a: Matrix<T>, b: Matrix<T>, c: Matrix<T>) -> Result<Self> {
        if !a.is_square() {
            return dim_err("factor state matrix must be square");
        }
        if b.rows() != a.rows() || c.cols() != a.rows() {
            return dim_err(format!(
                "factor with {} states needs B with {} rows and C with {} cols, got {}x{} and {}x{}",
                a.rows(),
                a.rows(),
                a.rows(),
                b.rows(),
                b.cols(),
                c.rows(),
                c.cols()
            ));
        }
        Ok(Self { a, b, c })
    }

    /// Scalar first-order factor `gain·exp(pole·τ)`.
    pub fn first_order(pole: T, gain: T) -> Result<Self> {
        Self::new(Matrix::new(1, 1, vec![pole])?, Matrix::new(1, 1, vec![gain])?, Matrix::identity(1))
    }

    pub fn a(&self) -> &Matrix<T> {
        &self.a
    }

    pub fn b(&self) -> &Matrix<T> {
        &self.b
    }

    pub fn c(&self) -> &Matrix<T> {
        &self.c
    }

    pub fn state_dim(&self) -> usize {
        self.a.rows()
    }

    pub fn input_width(&self) -> usize {
        self.b.cols()
    }

    pub fn output_width(&self) -> usize {
        self.c.rows()
    }

    /// `H(τ)`.
    pub fn response(&self, tau: T) -> Result<Matrix<T>> {
        if tau.is_nan() || tau < T::zero() {
            return invalid(format!("kernel lag must be nonnegative, got {tau}"));
        }
        let e = expm(&self.a.scale(tau))?;
        Ok(&(&self.c * &e) * &self.b)
    }

    /// `H(0) = C·B`.
    pub fn at_zero(&self) -> Matrix<T> {
        &self.c * &self.b
    }

    /// Same factor with the output scaled by `alpha`.
    pub fn scaled(&self, alpha: T) -> Self {
        Self { a: self.a.clone(), b: self.b.clone(), c: self.c.scale(alpha) }
    }
}

/// Ordered factors `[H^(1), …, H^(p)]` of one separable kernel
/// `h_p(τ_1, …, τ_p) = H^(p)(τ_p)···H^(1)(τ_1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorChain<T> {
    factors: Vec<LtiFactor<T>>,
    period: T,
}

impl<T: Scalar> FactorChain<T> {
    pub fn new(factors: Vec<LtiFactor<T>>, period: T) -> Result<Self> {
        check_period(period)?;
        let (first, last) = match (factors.first(), factors.last()) {
            (Some(f), Some(l)) => (f, l),
            _ => return invalid("a factor chain needs at least one factor"),
        };
        if first.input_width() != 1 {
            return dim_err("first factor must take a scalar input");
        }
        if last.output_width() != 1 {
            return dim_err("last factor must produce a scalar output");
        }
        for (i, pair) in factors.windows(2).enumerate() {
            if pair[0].output_width() != pair[1].input_width() {
                return dim_err(format!(
                    "factor {} outputs width {} but factor {} takes width {}",
                    i + 1,
                    pair[0].output_width(),
                    i + 2,
                    pair[1].input_width()
                ));
            }
        }
        Ok(Self { factors, period })
    }

    pub fn order(&self) -> usize {
        self.factors.len()
    }

    pub fn period(&self) -> T {
        self.period
    }

    pub fn factors(&self) -> &[LtiFactor<T>] {
        &self.factors
    }

    /// Interface widths `M_0, …, M_p` (with `M_0 = M_p = 1`).
    pub fn widths(&self) -> Vec<usize> {
        std::iter::once(1).chain(self.factors.iter().map(LtiFactor::output_width)).collect()
    }

    /// Copy with factor `i` (0-based) replaced.
    pub fn with_factor(&self, i: usize, factor: LtiFactor<T>) -> Result<Self> {
        let mut factors = self.factors.clone();
        factors[i] = factor;
        Self::new(factors, self.period)
    }

    /// Samples `H^(i)(kT)` for `k = 0..=len-1`, one table per factor.
    pub(crate) fn sampled_factors(&self, len: usize) -> Result<Vec<Vec<Matrix<T>>>> {
        self.factors
            .iter()
            .map(|f| {
                let step = expm(&f.a.scale(self.period))?;
                let mut state = Matrix::identity(f.state_dim());
                let mut table = Vec::with_capacity(len);
                for _ in 0..len {
                    table.push(&(&f.c * &state) * &f.b);
                    state = &state * &step;
                }
                Ok(table)
            })
            .collect()
    }
}

/// Continuous-time bilinear system `x' = F x + G x u + b u`, `y = cᵀ x`.
#[derive(Debug, Clone, PartialEq)]
pub struct BilinearSystem<T> {
    f: Matrix<T>,
    g: Matrix<T>,
    b: Vector<T>,
    c: Vector<T>,
    period: T,
}

impl<T: Scalar> BilinearSystem<T> {
    pub fn new(f: Matrix<T>, g: Matrix<T>, b: Vector<T>, c: Vector<T>, period: T) -> Result<Self> {
        check_period(period)?;
        let n = f.rows();
        if !f.is_square() || g.rows() != n || g.cols() != n || b.dim() != n || c.dim() != n {
            return dim_err(format!("bilinear system needs F, G of size {n}x{n} and b, c of length {n}"));
        }
        Ok(Self { f, g, b, c, period })
    }

    pub fn state_dim(&self) -> usize {
        self.f.rows()
    }

    pub fn f(&self) -> &Matrix<T> {
        &self.f
    }

    pub fn g(&self) -> &Matrix<T> {
        &self.g
    }

    pub fn b(&self) -> &Vector<T> {
        &self.b
    }

    pub fn c(&self) -> &Vector<T> {
        &self.c
    }

    pub fn period(&self) -> T {
        self.period
    }

    /// The linear part alone (`G = 0`).
    pub fn linearized(&self) -> Self {
        let n = self.state_dim();
        Self { g: Matrix::zeros(n, n), ..self.clone() }
    }

    /// Order-`p` kernel as a factor chain:
    /// `[e^{Fτ}b, e^{Fτ}G, …, e^{Fτ}G, cᵀe^{Fτ}G]`, or `cᵀe^{Fτ}b` for `p = 1`.
    pub fn to_chain(&self, p: usize) -> Result<FactorChain<T>> {
        if p < 1 {
            return invalid("kernel order must be at least 1");
        }
        let n = self.state_dim();
        let b = Matrix::column(&self.b)?;
        let ct = Matrix::row(&self.c)?;
        let factor = |input: &Matrix<T>, output: Matrix<T>| LtiFactor::new(self.f.clone(), input.clone(), output);
        let factors = if p == 1 {
            vec![factor(&b, ct)?]
        } else {
            let mut v = Vec::with_capacity(p);
            v.push(factor(&b, Matrix::identity(n))?);
            for _ in 1..p - 1 {
                v.push(factor(&self.g, Matrix::identity(n))?);
            }
            v.push(factor(&self.g, ct)?);
            v
        };
        FactorChain::new(factors, self.period)
    }

    /// Exact sampled output `y_c(nT⁺)` for the impulse train `Σ u(n) δ(t - nT)`.
    ///
    /// Each impulse applies the jump map of [`impulse_jump`]; between impulses
    /// the state flows freely under `exp(F T)`.
    pub fn impulse_train_response(&self, u: &Signal<T>) -> Result<Signal<T>> {
        check_same_period(self.period, u.period())?;
        let n = self.state_dim();
        let flow = expm(&self.f.scale(self.period))?;
        let mut x = vec![T::zero(); n];
        let mut y = Vec::with_capacity(u.len());
        for &w in u.samples() {
            if !w.is_zero() {
                let (jump, offset) = impulse_jump(&self.g, &self.b, w)?;
                x = jump.mul_vec(&x).into_iter().zip(offset).map(|(a, d)| a + d).collect();
            }
            y.push(self.c.dot(&x));
            x = flow.mul_vec(&x);
        }
        Signal::new(y, self.period)
    }

    /// Smallest `L` with `‖exp(F L T)‖_F < tol`, searched up to `max_len`.
    pub fn decay_length(&self, tol: T, max_len: usize) -> Result<usize> {
        decay_length(std::slice::from_ref(&self.f), self.period, tol, max_len)
    }
}

pub(crate) fn decay_length<T: Scalar>(states: &[Matrix<T>], period: T, tol: T, max_len: usize) -> Result<usize> {
    let mut worst = 0;
    for a in states {
        let step = expm(&a.scale(period))?;
        let mut power = Matrix::identity(a.rows());
        let mut len = 0;
        while power.norm_fro() >= tol {
            if len >= max_len {
                return Err(crate::Error::Numerical(format!(
                    "state response does not decay below {tol} within {max_len} samples"
                )));
            }
            power = &power * &step;
            len += 1;
        }
        worst = worst.max(len);
    }
    Ok(worst)
}

/// Kernel value `H^(p)(τ_p)···H^(1)(τ_1)`.
pub fn kernel_value<T: Scalar>(chain: &FactorChain<T>, taus: &[T]) -> Result<T> {
    if taus.len() != chain.order() {
        return invalid(format!("order-{} kernel needs {} lags, got {}", chain.order(), chain.order(), taus.len()));
    }
    let mut acc: Option<Matrix<T>> = None;
    for (factor, &tau) in chain.factors().iter().zip(taus) {
        let h = factor.response(tau)?;
        acc = Some(match acc {
            None => h,
            Some(prev) => &h * &prev,
        });
    }
    Ok(acc.expect("chain is nonempty")[(0, 0)])
}

/// Per-order outputs recovered from a sweep of input amplitudes.
#[derive(Debug, Clone)]
pub struct HomogeneousFit<T> {
    /// Estimated `y_{c,p}(nT)` for `p = 1..=P`.
    pub orders: Vec<Signal<T>>,
    /// 1-norm condition number of the amplitude-power (Vandermonde) matrix.
    pub condition: T,
    /// Set when the condition number exceeds `1e12`.
    pub ill_conditioned: bool,
}

/// `±ε` pairs for each base amplitude.
pub fn symmetric_epsilons<T: Scalar>(base: &[T]) -> Vec<T> {
    base.iter().flat_map(|&e| [e, -e]).collect()
}

/// Separates the homogeneous orders `1..=max_order` of the exact response by
/// fitting `y(ε u) = Σ_p ε^p y_p` across the amplitudes `epsilons`.
pub fn extract_homogeneous<T: Scalar>(
    sys: &BilinearSystem<T>,
    u: &Signal<T>,
    max_order: usize,
    epsilons: &[T],
) -> Result<HomogeneousFit<T>> {
    if max_order < 1 {
        return invalid("need at least one order to extract");
    }
    if epsilons.len() < max_order + 1 {
        return invalid(format!(
            "extracting {max_order} orders needs at least {} amplitudes, got {}",
            max_order + 1,
            epsilons.len()
        ));
    }
    if epsilons.iter().any(|e| e.is_zero() || !e.is_finite()) {
        return invalid("amplitudes must be finite and nonzero");
    }
    for (i, a) in epsilons.iter().enumerate() {
        if epsilons[i + 1..].iter().any(|b| b == a) {
            return invalid(format!("duplicate amplitude {a}"));
        }
    }

    let responses = epsilons.iter().map(|&e| sys.impulse_train_response(&u.scaled(e))).collect::<Result<Vec<_>>>()?;
    separate_orders(epsilons, &responses, max_order)
}

/// Least-squares fit of `responses[k] = Σ_{p=1..max_order} ε_k^p y_p`,
/// sample by sample.
pub fn separate_orders<T: Scalar>(
    epsilons: &[T],
    responses: &[Signal<T>],
    max_order: usize,
) -> Result<HomogeneousFit<T>> {
    let k = epsilons.len();
    if responses.len() != k || k < max_order || max_order == 0 {
        return invalid(format!(
            "need one response per amplitude and at least {max_order} amplitudes, got {k} amplitudes and {} responses",
            responses.len()
        ));
    }
    let len = responses[0].len();
    let period = responses[0].period();
    if responses.iter().any(|r| r.len() != len) {
        return dim_err("responses differ in length");
    }
    let mut vander = Matrix::zeros(k, max_order);
    for (r, &e) in epsilons.iter().enumerate() {
        let mut pow = e;
        for c in 0..max_order {
            vander[(r, c)] = pow;
            pow *= e;
        }
    }
    let mut orders = vec![vec![T::zero(); len]; max_order];
    let mut condition = T::one();
    if len > 0 {
        let mut rhs = Matrix::zeros(k, len);
        for (r, y) in responses.iter().enumerate() {
            for (n, &v) in y.samples().iter().enumerate() {
                rhs[(r, n)] = v;
            }
        }
        let (coef, cond) = least_squares(&vander, &rhs)?;
        condition = cond;
        for (p, out) in orders.iter_mut().enumerate() {
            for (n, v) in out.iter_mut().enumerate() {
                *v = coef[(p, n)];
            }
        }
    }
    let orders = orders.into_iter().map(|s| Signal::new(s, period)).collect::<Result<Vec<_>>>()?;
    Ok(HomogeneousFit { orders, condition, ill_conditioned: condition > T::of(1e12) })
}
