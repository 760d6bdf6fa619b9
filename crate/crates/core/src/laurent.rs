//! Single-band Laurent-polynomial Bloch symbols.
//!
//! A symbol `h(k) = Σ_{s=-n}^{m} t_s e^{iks}` is stored as its coefficient
//! table. Substituting `e^{ik} -> β` gives the analytic continuation used by
//! non-Bloch band theory; the roots of `β^n (h(β) - E)` drive everything in
//! [`crate::gbz`].

use std::collections::BTreeMap;
use std::fmt;

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance under which two root moduli count as equal when ordering.
const MODULUS_TIE_RTOL: f64 = 1e-12;

/// Bloch symbol `h(k) = Σ_s t_s e^{iks}` with finitely many nonzero `t_s`.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(i32, f64, f64)>", into = "Vec<(i32, f64, f64)>")]
pub struct LaurentOperator {
    coeffs: BTreeMap<i32, Complex64>,
}

impl LaurentOperator {
    /// Builds a symbol from `(s, t_s)` pairs. Repeated powers are summed and
    /// exact zeros dropped.
    pub fn new(terms: impl IntoIterator<Item = (i32, Complex64)>) -> Result<Self> {
        let mut coeffs = BTreeMap::new();
        for (s, t) in terms {
            if !(t.re.is_finite() && t.im.is_finite()) {
                return Err(Error::MalformedOperator(format!("coefficient t_{s} = {t} is not finite")));
            }
            *coeffs.entry(s).or_insert(Complex64::new(0.0, 0.0)) += t;
        }
        coeffs.retain(|_, t| *t != Complex64::new(0.0, 0.0));
        if coeffs.is_empty() {
            return Err(Error::EmptySymbol);
        }
        Ok(Self { coeffs })
    }

    /// Builds a symbol from `(s, Re t_s, Im t_s)` triples, the config-file form.
    pub fn from_triples(triples: &[(i32, f64, f64)]) -> Result<Self> {
        Self::new(triples.iter().map(|&(s, re, im)| (s, Complex64::new(re, im))))
    }

    pub fn monomial(power: i32, amplitude: Complex64) -> Result<Self> {
        Self::new([(power, amplitude)])
    }

    pub fn constant(value: Complex64) -> Result<Self> {
        Self::monomial(0, value)
    }

    /// `2t cos k + s1 e^{2ik} + s2 e^{-2ik}`.
    pub fn next_nearest(t: f64, s1: Complex64, s2: Complex64) -> Self {
        let t = Complex64::new(t, 0.0);
        Self::new([(1, t), (-1, t), (2, s1), (-2, s2)]).expect("nonzero hopping")
    }

    /// `2t cos k + s1 e^{ik} + s2 e^{-ik}`, i.e. a Hatano-Nelson chain with
    /// right hopping `t + s1` and left hopping `t + s2`.
    pub fn nearest(t: f64, s1: f64, s2: f64) -> Self {
        Self::hatano_nelson(t + s1, t + s2)
    }

    /// `a e^{ik} + b e^{-ik}`.
    pub fn hatano_nelson(a: f64, b: f64) -> Self {
        Self::new([(1, Complex64::new(a, 0.0)), (-1, Complex64::new(b, 0.0))]).expect("nonzero hopping")
    }

    pub fn coeffs(&self) -> &BTreeMap<i32, Complex64> {
        &self.coeffs
    }

    pub fn coeff(&self, s: i32) -> Complex64 {
        self.coeffs.get(&s).copied().unwrap_or_default()
    }

    pub fn lowest_power(&self) -> i32 {
        *self.coeffs.keys().next().expect("nonempty")
    }

    pub fn highest_power(&self) -> i32 {
        *self.coeffs.keys().next_back().expect("nonempty")
    }

    /// Range of negative powers, `n` in `Σ_{s=-n}^{m}`.
    pub fn n(&self) -> usize {
        (-self.lowest_power()).max(0) as usize
    }

    /// Range of positive powers, `m` in `Σ_{s=-n}^{m}`.
    pub fn m(&self) -> usize {
        self.highest_power().max(0) as usize
    }

    /// Largest hopping distance `max(n, m)`.
    pub fn hop_range(&self) -> usize {
        self.n().max(self.m())
    }

    pub fn max_coeff_abs(&self) -> f64 {
        self.coeffs.values().map(|t| t.norm()).fold(0.0, f64::max)
    }

    /// True when `t_{-s} = conj(t_s)` for every `s`, i.e. `h(k)` is real.
    pub fn is_hermitian(&self) -> bool {
        let tol = 1e-14 * self.max_coeff_abs().max(1.0);
        let powers: std::collections::BTreeSet<i32> = self.coeffs.keys().flat_map(|&s| [s, -s]).collect();
        powers.into_iter().all(|s| (self.coeff(-s) - self.coeff(s).conj()).norm() <= tol)
    }

    pub fn eval_k(&self, k: f64) -> Complex64 {
        self.coeffs.iter().map(|(&s, &t)| t * Complex64::from_polar(1.0, k * s as f64)).sum()
    }

    pub fn eval_beta(&self, beta: Complex64) -> Result<Complex64> {
        if beta == Complex64::new(0.0, 0.0) {
            return Err(Error::ZeroBeta);
        }
        Ok(self.eval_beta_unchecked(beta))
    }

    pub(crate) fn eval_beta_unchecked(&self, beta: Complex64) -> Complex64 {
        self.coeffs.iter().map(|(&s, &t)| t * beta.powi(s)).sum()
    }

    /// `h(k - iμ)`, the symbol on the circle `|β| = e^{μ}`.
    pub fn eval_deformed(&self, k: f64, mu: f64) -> Complex64 {
        self.coeffs.iter().map(|(&s, &t)| t * Complex64::from_polar((mu * s as f64).exp(), k * s as f64)).sum()
    }

    /// Coefficient convolution: the symbol of `h_a(k) h_b(k)`.
    pub fn product(&self, other: &Self) -> Self {
        let mut out: BTreeMap<i32, Complex64> = BTreeMap::new();
        for (&sa, &ta) in &self.coeffs {
            for (&sb, &tb) in &other.coeffs {
                *out.entry(sa + sb).or_default() += ta * tb;
            }
        }
        // Cancellation to exact zero can only happen in interior powers.
        let extremes = [self.lowest_power() + other.lowest_power(), self.highest_power() + other.highest_power()];
        out.retain(|s, t| extremes.contains(s) || *t != Complex64::new(0.0, 0.0));
        Self { coeffs: out }
    }

    pub fn square(&self) -> Self {
        self.product(self)
    }

    /// Imaginary-gauge transform `t_s -> t_s r^s`, i.e. `h'(β) = h(rβ)`.
    pub fn gauge(&self, r: f64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|(&s, &t)| (s, t * r.powi(s))).collect() }
    }

    pub fn scale(&self, factor: Complex64) -> Result<Self> {
        Self::new(self.coeffs.iter().map(|(&s, &t)| (s, t * factor)))
    }

    /// Coefficients of `P(β) = β^n (h(β) - E)` in ascending powers of `β`.
    fn char_poly(&self, energy: Complex64) -> Vec<Complex64> {
        let n = self.n() as i32;
        let degree = self.m() + self.n();
        let mut poly = vec![Complex64::new(0.0, 0.0); degree + 1];
        for (&s, &t) in &self.coeffs {
            poly[(s + n) as usize] += t;
        }
        poly[n as usize] -= energy;
        poly
    }

    /// All `m + n` roots of `β^n (h(β) - E)`, sorted by modulus (ties by phase).
    pub fn roots_sorted(&self, energy: Complex64) -> Result<RootList> {
        let poly = self.char_poly(energy);
        let degree = poly.len() - 1;
        if degree == 0 {
            return Err(Error::MalformedOperator("characteristic polynomial has degree 0".into()));
        }
        let scale = poly.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let lead = poly[degree];
        if lead.norm() <= 1e-14 * scale {
            return Err(Error::MalformedOperator(format!(
                "leading coefficient of the characteristic polynomial vanishes at E = {energy}"
            )));
        }
        let mut roots = if degree == 1 {
            vec![-poly[0] / poly[1]]
        } else {
            let companion = Mat::<Complex64>::from_fn(degree, degree, |i, j| {
                if j == degree - 1 {
                    -poly[i] / lead
                } else if i == j + 1 {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            });
            companion.eigenvalues().map_err(|_| Error::EigenNonConvergence)?
        };
        for root in &mut roots {
            *root = polish_root(&poly, *root);
        }
        sort_by_modulus(&mut roots);
        Ok(RootList { roots, energy, n: self.n() })
    }
}

/// Two guarded Newton steps; a step is only kept if it lowers the residual.
fn polish_root(poly: &[Complex64], mut z: Complex64) -> Complex64 {
    for _ in 0..2 {
        let (p, dp) = horner_with_derivative(poly, z);
        if dp.norm() == 0.0 {
            break;
        }
        let candidate = z - p / dp;
        if horner_with_derivative(poly, candidate).0.norm() < p.norm() {
            z = candidate;
        } else {
            break;
        }
    }
    z
}

fn horner_with_derivative(poly: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in poly.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

pub(crate) fn sort_by_modulus(roots: &mut [Complex64]) {
    roots.sort_by(|a, b| {
        let (ra, rb) = (a.norm(), b.norm());
        if (ra - rb).abs() <= MODULUS_TIE_RTOL * ra.max(rb) {
            a.arg().total_cmp(&b.arg())
        } else {
            ra.total_cmp(&rb)
        }
    });
}

impl fmt::Debug for LaurentOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.coeffs.iter()).finish()
    }
}

impl TryFrom<Vec<(i32, f64, f64)>> for LaurentOperator {
    type Error = Error;

    fn try_from(triples: Vec<(i32, f64, f64)>) -> Result<Self> {
        Self::from_triples(&triples)
    }
}

impl From<LaurentOperator> for Vec<(i32, f64, f64)> {
    fn from(op: LaurentOperator) -> Self {
        op.coeffs.iter().map(|(&s, t)| (s, t.re, t.im)).collect()
    }
}

/// A Bloch symbol in one or two dimensions. Two-dimensional symbols are
/// separable, `h(k_x, k_y) = h_x(k_x) + h_y(k_y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlochSymbol {
    Chain(LaurentOperator),
    Separable(LaurentOperator, LaurentOperator),
}

impl BlochSymbol {
    pub fn dim(&self) -> usize {
        match self {
            Self::Chain(_) => 1,
            Self::Separable(..) => 2,
        }
    }

    pub fn axes(&self) -> Vec<&LaurentOperator> {
        match self {
            Self::Chain(h) => vec![h],
            Self::Separable(hx, hy) => vec![hx, hy],
        }
    }

    /// `h(k - iμ)`; `k` and `mu` carry one entry per dimension.
    pub fn eval_deformed(&self, k: &[f64], mu: &[f64]) -> Complex64 {
        self.axes().iter().enumerate().map(|(i, h)| h.eval_deformed(k[i], mu[i])).sum()
    }

    pub fn is_hermitian(&self) -> bool {
        self.axes().iter().all(|h| h.is_hermitian())
    }
}

/// Roots of the characteristic equation at one energy, sorted as
/// `|β_1| <= ... <= |β_{m+n}|`.
#[derive(Debug, Clone)]
pub struct RootList {
    pub roots: Vec<Complex64>,
    pub energy: Complex64,
    n: usize,
}

impl RootList {
    /// The middle pair `(β_n, β_{n+1})`.
    pub fn middle(&self) -> (Complex64, Complex64) {
        (self.roots[self.n - 1], self.roots[self.n])
    }

    /// `||β_n| - |β_{n+1}|| / |β_{n+1}|`.
    pub fn middle_gap(&self) -> f64 {
        let (lo, hi) = self.middle();
        (hi.norm() - lo.norm()).abs() / hi.norm()
    }

    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    /// The `n` of the generating symbol (number of roots inside the GBZ).
    pub fn n(&self) -> usize {
        self.n
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn chain_model() -> LaurentOperator {
        LaurentOperator::next_nearest(1.0, c(0.5, 0.0), c(0.0, 0.2))
    }

    /// Independent convolution: expand both symbols on a DFT grid and
    /// recover coefficients from the pointwise product.
    fn dft_product_coeff(a: &LaurentOperator, b: &LaurentOperator, s: i32) -> Complex64 {
        let grid = 64;
        (0..grid)
            .map(|j| {
                let k = 2.0 * PI * j as f64 / grid as f64;
                a.eval_k(k) * b.eval_k(k) * Complex64::from_polar(1.0, -k * s as f64)
            })
            .sum::<Complex64>()
            / grid as f64
    }

    #[test]
    fn eval_k_examples() {
        let h = chain_model();
        assert!((h.eval_k(0.0) - c(2.5, 0.2)).norm() < 1e-14);
        assert!((h.eval_k(PI) - c(-1.5, 0.2)).norm() < 1e-14);
    }

    #[test]
    fn eval_beta_examples() {
        let h = chain_model();
        assert!((h.eval_beta(c(1.0, 0.0)).unwrap() - h.eval_k(0.0)).norm() < 1e-14);
        let hn = LaurentOperator::hatano_nelson(1.2, 1.1);
        let r = (1.1f64 / 1.2).sqrt();
        let expected = 2.0 * (1.2f64 * 1.1).sqrt();
        assert!((hn.eval_beta(c(r, 0.0)).unwrap() - c(expected, 0.0)).norm() < 1e-12);
        assert!((expected - 2.29783).abs() < 1e-5);
        let shift = LaurentOperator::monomial(1, c(1.0, 0.0)).unwrap();
        assert_eq!(shift.eval_beta(c(2.0, 0.0)).unwrap(), c(2.0, 0.0));
        assert!(matches!(h.eval_beta(c(0.0, 0.0)), Err(Error::ZeroBeta)));
    }

    #[test]
    fn product_examples() {
        let h = chain_model();
        let h2 = h.square();
        assert_eq!(h2.lowest_power(), -4);
        assert_eq!(h2.highest_power(), 4);
        assert!((h2.coeff(4) - c(0.25, 0.0)).norm() < 1e-15);
        let oracle = dft_product_coeff(&h, &h, 0);
        assert!((oracle - c(2.0, 0.2)).norm() < 1e-12);
        assert!((h2.coeff(0) - oracle).norm() < 1e-12);
        for s in -4..=4 {
            assert!((h2.coeff(s) - dft_product_coeff(&h, &h, s)).norm() < 1e-12, "s = {s}");
        }
        let one = LaurentOperator::constant(c(1.0, 0.0)).unwrap();
        assert_eq!(h.product(&one), h);
    }

    #[test]
    fn roots_examples() {
        let hn = LaurentOperator::hatano_nelson(1.2, 1.1);
        let roots = hn.roots_sorted(c(0.0, 0.0)).unwrap();
        let r = (1.1f64 / 1.2).sqrt();
        assert_eq!(roots.len(), 2);
        for z in &roots.roots {
            assert!((z.norm() - r).abs() < 1e-12);
            assert!(z.re.abs() < 1e-12);
        }
        assert!((r - 0.95743).abs() < 1e-5);
        // equal moduli: ascending phase puts -i first
        assert!(roots.roots[0].im < 0.0);

        let h = chain_model();
        for e in [c(0.3, -0.1), c(2.0, 1.0), c(-4.0, 0.0)] {
            let list = h.roots_sorted(e).unwrap();
            let prod: f64 = list.roots.iter().map(|z| z.norm()).product();
            assert!((prod - 0.4).abs() < 1e-10);
            for w in list.roots.windows(2) {
                assert!(w[0].norm() <= w[1].norm() * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn degenerate_leading_coefficient() {
        // h = 1 + e^{-ik}: m = 0 and the leading coefficient t_0 - E vanishes at E = 1
        let op = LaurentOperator::new([(0, c(1.0, 0.0)), (-1, c(1.0, 0.0))]).unwrap();
        assert!(matches!(op.roots_sorted(c(1.0, 0.0)), Err(Error::MalformedOperator(_))));
    }

    #[test]
    fn hermitian_detection() {
        assert!(LaurentOperator::next_nearest(1.0, c(0.3, 0.0), c(0.3, 0.0)).is_hermitian());
        assert!(!chain_model().is_hermitian());
        assert!(!LaurentOperator::hatano_nelson(1.2, 1.1).is_hermitian());
    }

    #[test]
    fn serde_triples() {
        let h = chain_model();
        let json = serde_json::to_string(&h).unwrap();
        let back: LaurentOperator = serde_json::from_str(&json).unwrap();
        assert_eq!(back, h);
        assert!(serde_json::from_str::<LaurentOperator>("[]").is_err());
    }

    fn arb_symbol() -> impl Strategy<Value = LaurentOperator> {
        (1i32..=3, 1i32..=3).prop_flat_map(|(n, m)| {
            prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), (n + m + 1) as usize).prop_map(move |v| {
                let mut terms: Vec<(i32, Complex64)> =
                    v.iter().enumerate().map(|(i, &(re, im))| (i as i32 - n, c(re, im))).collect();
                // keep the range tight
                terms[0].1 += c(2.5, 0.0);
                terms.last_mut().unwrap().1 += c(0.0, 2.5);
                LaurentOperator::new(terms).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn eval_k_matches_eval_beta(op in arb_symbol()) {
            for j in 0..256 {
                let k = 2.0 * PI * j as f64 / 256.0;
                let d = (op.eval_k(k) - op.eval_beta(Complex64::from_polar(1.0, k)).unwrap()).norm();
                prop_assert!(d < 1e-12);
            }
        }

        #[test]
        fn product_is_pointwise(a in arb_symbol(), b in arb_symbol(), re in 0.3f64..2.0, ph in -3.0f64..3.0) {
            let p = a.product(&b);
            prop_assert_eq!(p.lowest_power(), a.lowest_power() + b.lowest_power());
            prop_assert_eq!(p.highest_power(), a.highest_power() + b.highest_power());
            let beta = Complex64::from_polar(re, ph);
            let sq = a.square().eval_beta(beta).unwrap();
            let direct = a.eval_beta(beta).unwrap().powi(2);
            prop_assert!((sq - direct).norm() <= 1e-12 * direct.norm().max(1.0));
        }

        #[test]
        fn roots_satisfy_polynomial_and_vieta(op in arb_symbol(), er in -3.0f64..3.0, ei in -3.0f64..3.0) {
            let e = c(er, ei);
            let list = op.roots_sorted(e).unwrap();
            prop_assert_eq!(list.len(), op.m() + op.n());
            let poly = op.char_poly(e);
            let scale = poly.iter().map(|z| z.norm()).fold(0.0, f64::max);
            for &z in &list.roots {
                let (p, _) = horner_with_derivative(&poly, z);
                prop_assert!(p.norm() < 1e-8 * scale, "residual {}", p.norm());
            }
            let degree = poly.len() - 1;
            let prod: Complex64 = list.roots.iter().product();
            let sign = if degree % 2 == 0 { 1.0 } else { -1.0 };
            let vieta = poly[0] / poly[degree] * sign;
            prop_assert!((prod - vieta).norm() <= 1e-10 * vieta.norm().max(1e-300));
        }
    }
}
