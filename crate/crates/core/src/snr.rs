//! The analytic law of the zero-forcing SNR for the detected stream.
//!
//! Under Rician-Rayleigh fading the SNR is an infinite linear combination
//! of gamma distributions with common scale `Gamma1` and coefficients
//! `A_n(a) = (N)_n/(NR)_n a^n/n!`: the m.g.f., p.d.f., CDF (outage), and
//! moments all instantiate one summation template over per-shape kernels
//! `f`. [`GammaMixture`] owns that template in two algebraically equal
//! groupings:
//!
//! - `sum_n A_n(a) sum_{m=0}^{n} C(n,m) (-1)^m f(N + n - m)` — the
//!   alternating double series
//!   ([`GammaMixture::weighted_alternating_sum`]), whose cancellation
//!   envelope is part of the behavior contract for the capacity series;
//! - `sum_j w_j f(N + j)` with nonnegative weights
//!   ([`GammaMixture::stable_mixture_sum`]), used by the distribution
//!   and error-probability evaluations where accuracy must survive large
//!   mixture parameters.
//!
//! The free functions below bind the template to [`DerivedParams`].

use crate::channel::{DerivedParams, FadingCase};
use crate::error::{Error, Result};
use crate::series::{sum_series, SeriesPolicy, SeriesResult};
use crate::special::{gamma_pdf, ln_gamma, pochhammer, reg_lower_gamma_real};
use crate::{CMat, Cx};

/// Which m.g.f. route to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MgfMethod {
    /// `(1 - Gamma1 s)^-N 1F1(N; NR; a Gamma1 s / (1 - Gamma1 s))` with the
    /// hypergeometric factor summed as a series.
    Hypergeometric,
    /// Same expression with the finite closed form of the hypergeometric
    /// factor (exponential branch for `N = NR`).
    ClosedForm,
    /// The recast double series of gamma m.g.f.s.
    Series,
}

/// Coefficient structure of the gamma-mixture SNR law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaMixture {
    /// Shape offset `N = NR - NT + 1` (diversity order).
    pub n_div: u32,
    /// Receive antenna count (second 1F1 parameter).
    pub nr: u32,
    /// Common gamma scale, linear.
    pub gamma1: f64,
    /// Mixture parameter `a = rinv11 ||mu||^2`; zero collapses the law to
    /// a single `Gamma(N, Gamma1)`.
    pub a_param: f64,
}

/// Result of a mixture-template summation: the truncated series plus the
/// largest intermediate product `|A_n C(n,m) f|` seen, which bounds the
/// cancellation noise floor.
#[derive(Debug, Clone, Copy)]
pub struct MixtureSum {
    pub series: SeriesResult,
    pub peak_intermediate: f64,
}

impl GammaMixture {
    pub fn new(n_div: u32, nr: u32, gamma1: f64, a_param: f64) -> Result<Self> {
        if n_div == 0 || nr == 0 || n_div > nr {
            return Err(Error::Parameter(format!("mixture requires 1 <= N <= NR, got N={n_div}, NR={nr}")));
        }
        if !(gamma1 > 0.0) {
            return Err(Error::Parameter(format!("mixture scale must be > 0, got {gamma1}")));
        }
        if !(a_param >= 0.0) {
            return Err(Error::Parameter(format!("mixture parameter a must be >= 0, got {a_param}")));
        }
        Ok(GammaMixture { n_div, nr, gamma1, a_param })
    }

    pub fn from_params(p: &DerivedParams) -> Self {
        GammaMixture { n_div: p.n_div, nr: p.nr as u32, gamma1: p.gamma1, a_param: p.a_param }
    }

    /// Mixture coefficient `A_n(a) = (N)_n / (NR)_n a^n / n!`.
    pub fn coefficient(&self, n: u32) -> f64 {
        if n == 0 {
            return 1.0;
        }
        if self.a_param == 0.0 {
            return 0.0;
        }
        (ln_pochhammer_ratio(self.n_div, self.nr, n) + n as f64 * self.a_param.ln()
            - ln_gamma(n as f64 + 1.0))
        .exp()
    }

    /// Evaluate `sum_n A_n(a) sum_m C(n,m)(-1)^m f(N + n - m)` under the
    /// given stopping policy. `f` is called once per shape, in increasing
    /// order starting at `N`.
    pub fn weighted_alternating_sum<F>(&self, mut f: F, policy: &SeriesPolicy) -> Result<MixtureSum>
    where
        F: FnMut(u32) -> Result<f64>,
    {
        let nf = self.n_div as f64;
        let nrf = self.nr as f64;
        let a = self.a_param;
        let mut shape_vals: Vec<f64> = Vec::new();
        let mut binom_row: Vec<f64> = vec![1.0]; // Pascal row for the current n
        let mut a_n = 1.0f64;
        let mut peak = 0.0f64;
        let series = sum_series(
            |n| {
                shape_vals.push(f(self.n_div + n as u32)?);
                if n > 0 {
                    // exact Pascal-row update keeps binomials integral
                    binom_row.push(1.0);
                    for m in (1..n).rev() {
                        binom_row[m] += binom_row[m - 1];
                    }
                }
                // inner alternating sum with compensated accumulation
                let mut inner = 0.0f64;
                let mut comp = 0.0f64;
                for (m, &c) in binom_row.iter().enumerate() {
                    let term = c * shape_vals[n - m] * if m % 2 == 0 { 1.0 } else { -1.0 };
                    peak = peak.max((a_n * c * shape_vals[n - m]).abs());
                    let t = inner + term;
                    comp += if inner.abs() >= term.abs() { (inner - t) + term } else { (term - t) + inner };
                    inner = t;
                }
                let t_n = a_n * (inner + comp);
                a_n *= a * (nf + n as f64) / ((nrf + n as f64) * (n as f64 + 1.0));
                Ok(t_n)
            },
            policy,
        )?;
        Ok(MixtureSum { series, peak_intermediate: peak })
    }

    /// Evaluate `sum_j w_j f(N + j)` over the nonnegative mixture weights
    /// `w_j = A_j(a) e^-a 1F1(NR-N; NR+j; a)`.
    ///
    /// This is the alternating double series regrouped: conditioned on the
    /// Beta-distributed interference fraction `eta`, the SNR is a
    /// noncentral quadratic form, i.e. a Poisson-weighted family of
    /// `Gamma(N+j, Gamma1)` laws with rate `a eta`; averaging the Poisson
    /// weights over `eta` gives `w_j >= 0` with `sum_j w_j = 1`. Unlike
    /// the alternating grouping, whose intermediate terms reach `e^a`
    /// before cancelling, every partial quantity here is a probability,
    /// so the evaluation stays accurate for any mixture parameter.
    pub fn stable_mixture_sum<F>(&self, mut f: F, policy: &SeriesPolicy) -> Result<MixtureSum>
    where
        F: FnMut(u32) -> Result<f64>,
    {
        let nf = self.n_div as f64;
        let nrf = self.nr as f64;
        let a = self.a_param;
        let hyp_order = self.nr - self.n_div; // 0 collapses the tilt to 1
        let mut ln_a_j = 0.0f64; // ln A_j(a)
        let mut peak = 0.0f64;
        let series = sum_series(
            |j| {
                let fv = f(self.n_div + j as u32)?;
                if a == 0.0 {
                    return Ok(if j == 0 { fv } else { 0.0 });
                }
                let ln_f1 = if hyp_order == 0 {
                    0.0
                } else {
                    crate::special::log_series_1f1(hyp_order, self.nr + j as u32, a, 1e-14, 2000)?.value
                };
                let w = (ln_a_j - a + ln_f1).exp();
                ln_a_j += a.ln() + ((nf + j as f64) / ((nrf + j as f64) * (j as f64 + 1.0))).ln();
                peak = peak.max((w * fv).abs());
                Ok(w * fv)
            },
            policy,
        )?;
        Ok(MixtureSum { series, peak_intermediate: peak })
    }

    /// Moment generating function `E[e^{s gamma1}]` for real `s < 1/Gamma1`.
    pub fn mgf(&self, s: f64, method: MgfMethod) -> Result<f64> {
        if !(s < 1.0 / self.gamma1) {
            return Err(Error::Domain("m.g.f. requires s < 1/Gamma1"));
        }
        let gs = self.gamma1 * s;
        let front = (1.0 - gs).powi(-(self.n_div as i32));
        let sigma = self.a_param * gs / (1.0 - gs);
        match method {
            MgfMethod::Hypergeometric => {
                let policy = SeriesPolicy::default();
                let r = crate::special::hyp1f1_series(self.n_div, self.nr, sigma, policy.tol, policy.cap)?;
                if !r.converged {
                    return Err(Error::Unstable { value: front * r.value, dynamic_range: f64::NAN });
                }
                Ok(front * r.value)
            }
            MgfMethod::ClosedForm => {
                if sigma == 0.0 {
                    // closed form excludes sigma = 0; the exact value there is 1
                    return Ok(front);
                }
                if self.n_div == self.nr {
                    return Ok(front * sigma.exp());
                }
                Ok(front * crate::special::hyp1f1_closed(self.n_div, self.nr, sigma)?)
            }
            MgfMethod::Series => {
                let x = 1.0 / (1.0 - gs);
                let ln_x = x.ln();
                // the mixture-weight tail stretches to roughly the mixture
                // parameter itself; 600 terms cover every K this crate can
                // evaluate elsewhere
                let sum = self.stable_mixture_sum(
                    |shape| Ok((shape as f64 * ln_x).exp()),
                    &SeriesPolicy { tol: 1e-12, cap: 600, min_terms: 3 },
                )?;
                if !sum.series.converged {
                    return Err(Error::Unstable { value: sum.series.value, dynamic_range: f64::NAN });
                }
                Ok(sum.series.value)
            }
        }
    }

    /// Probability density of the SNR at `t >= 0`, truncated at the given
    /// relative tolerance. [`GammaMixture::pdf`] clamps the result at
    /// zero; with the nonnegative-weight grouping the clamp only guards
    /// truncation artifacts at the underflow scale.
    pub fn pdf_raw(&self, t: f64, tol: f64) -> Result<SeriesResult> {
        if !(t >= 0.0) {
            return Err(Error::Domain("p.d.f. requires t >= 0"));
        }
        let policy = SeriesPolicy::with_tol(tol);
        let sum = self.stable_mixture_sum(|shape| Ok(gamma_pdf(shape, self.gamma1, t)), &policy)?;
        Ok(sum.series)
    }

    /// Density clamped at zero for presentation.
    pub fn pdf(&self, t: f64, tol: f64) -> Result<SeriesResult> {
        Ok(self.pdf_raw(t, tol)?.map_value(|v| v.max(0.0)))
    }

    /// Outage probability (SNR CDF) at threshold `gamma_th >= 0`, clamped
    /// into `[0, 1]`.
    pub fn outage(&self, gamma_th: f64, tol: f64) -> Result<SeriesResult> {
        Ok(self.outage_raw(gamma_th, tol)?.map_value(|v| v.clamp(0.0, 1.0)))
    }

    /// Outage before clamping; used by tests that bound the truncation
    /// artifacts.
    pub fn outage_raw(&self, gamma_th: f64, tol: f64) -> Result<SeriesResult> {
        if !(gamma_th >= 0.0) {
            return Err(Error::Domain("outage requires gamma_th >= 0"));
        }
        let x = gamma_th / self.gamma1;
        let policy = SeriesPolicy::with_tol(tol);
        // regularized incomplete gamma ladder:
        // P(k+1, x) = P(k, x) - x^k e^-x / k!
        let mut next_shape = self.n_div;
        let mut p = reg_lower_gamma_real(self.n_div as f64, x);
        let mut dec = if x > 0.0 {
            (self.n_div as f64 * x.ln() - x - ln_gamma(self.n_div as f64 + 1.0)).exp()
        } else {
            0.0
        };
        let sum = self.stable_mixture_sum(
            |shape| {
                debug_assert_eq!(shape, next_shape);
                let value = p;
                p -= dec;
                dec *= x / (next_shape as f64 + 1.0);
                next_shape += 1;
                Ok(value)
            },
            &policy,
        )?;
        Ok(sum.series)
    }

    /// Moment of order `p`: `Gamma1^p sum_n A_n sum_m C(n,m)(-1)^m (N+n-m)_p`.
    pub fn moment(&self, p: u32, tol: f64) -> Result<SeriesResult> {
        let policy = SeriesPolicy::with_tol(tol);
        let sum = self.stable_mixture_sum(|shape| Ok(pochhammer(shape as f64, p)), &policy)?;
        Ok(sum.series.map_value(|v| v * self.gamma1.powi(p as i32)))
    }

    /// Amount of fading `variance / mean^2` in closed form:
    /// `(1/N) [1 - (N+1)/(NR+1) a^2/(a+NR)^2]`.
    pub fn amount_of_fading(&self) -> f64 {
        let nf = self.n_div as f64;
        let nrf = self.nr as f64;
        let a = self.a_param;
        (1.0 - (nf + 1.0) / (nrf + 1.0) * (a / (a + nrf)).powi(2)) / nf
    }

    /// Closed-form mean `N Gamma1 (1 + a/NR)`.
    pub fn mean(&self) -> f64 {
        self.n_div as f64 * self.gamma1 * (1.0 + self.a_param / self.nr as f64)
    }
}

fn ln_pochhammer_ratio(n: u32, nr: u32, k: u32) -> f64 {
    if k == 0 {
        return 0.0;
    }
    crate::special::ln_pochhammer(n as f64, k) - crate::special::ln_pochhammer(nr as f64, k)
}

/// m.g.f. of the ZF SNR for the scenario.
pub fn snr_mgf(params: &DerivedParams, s: f64, method: MgfMethod) -> Result<f64> {
    GammaMixture::from_params(params).mgf(s, method)
}

/// SNR density at `t` (clamped at zero).
pub fn snr_pdf(params: &DerivedParams, t: f64, tol: f64) -> Result<SeriesResult> {
    GammaMixture::from_params(params).pdf(t, tol)
}

/// SNR density before clamping.
pub fn snr_pdf_raw(params: &DerivedParams, t: f64, tol: f64) -> Result<SeriesResult> {
    GammaMixture::from_params(params).pdf_raw(t, tol)
}

/// Outage probability at the linear threshold `gamma_th`.
pub fn snr_outage(params: &DerivedParams, gamma_th: f64, tol: f64) -> Result<SeriesResult> {
    GammaMixture::from_params(params).outage(gamma_th, tol)
}

/// Moment of order `p` of the SNR.
pub fn snr_moment(params: &DerivedParams, p: u32, tol: f64) -> Result<SeriesResult> {
    GammaMixture::from_params(params).moment(p, tol)
}

/// Amount of fading of the SNR.
pub fn amount_of_fading(params: &DerivedParams) -> f64 {
    GammaMixture::from_params(params).amount_of_fading()
}

/// Residual-mean tolerance for the exact Rayleigh-Rician gamma law.
pub const RAYLEIGH_RICIAN_MU_TOL: f64 = 1e-10;

/// Exact SNR law for a Rayleigh-fading detected stream whose fading is
/// uncorrelated with the (possibly Rician) interferers: `Gamma(N, Gamma1)`.
///
/// Returns `(shape, scale)`. Fails with [`Error::ExactLawUnavailable`]
/// when the mean-correlation condition `mu = 0` does not hold, in which
/// case no exact law is known and only simulation applies.
pub fn rayleigh_rician_law(params: &DerivedParams) -> Result<(u32, f64)> {
    if params.fading_case != FadingCase::RayleighRician {
        return Err(Error::Parameter("rayleigh_rician_law applies to RayleighRician scenarios".into()));
    }
    let mu_norm = params.mu_norm();
    if mu_norm > RAYLEIGH_RICIAN_MU_TOL {
        return Err(Error::ExactLawUnavailable { mu_norm, tol: RAYLEIGH_RICIAN_MU_TOL });
    }
    Ok((params.n_div, params.gamma1))
}

/// Virtual central-Wishart approximation of the SNR law.
#[derive(Debug, Clone)]
pub struct VirtualApprox {
    /// Scale of the virtual gamma law `Gamma(N, gamma1_hat)`.
    pub gamma1_hat: f64,
    /// Equal-mean virtual column covariance `R_{T,K} + H_d^H H_d / NR`.
    pub rhat: CMat,
}

/// Build the virtual central-Wishart approximation from the scenario
/// covariance and a mean matrix (normally `params.h_d`).
pub fn virtual_central_approx(params: &DerivedParams, h_d: &CMat) -> Result<VirtualApprox> {
    let nr = params.nr as f64;
    let rhat = &params.rtk + h_d.adjoint() * h_d / Cx::new(nr, 0.0);
    let inv = rhat.clone().try_inverse().ok_or(Error::SingularMatrix("virtual column covariance"))?;
    let rinv11 = inv[(0, 0)].re;
    if !(rinv11 > 0.0) {
        return Err(Error::SingularMatrix("virtual column covariance"));
    }
    Ok(VirtualApprox { gamma1_hat: params.gamma_s / rinv11, rhat })
}

/// Least-squares estimate of the diversity order from the high-SNR tail
/// of an error-probability curve given as `(gamma_b_db, aep)` points.
///
/// Fits `-log10(aep)` against `gamma_b_db / 10` over the top decade of
/// `gamma_b_db`; the slope of an exact `c Gamma_b^-N` law is `N`.
pub fn diversity_order_estimate(aep_curve: &[(f64, f64)]) -> Result<f64> {
    let usable: Vec<(f64, f64)> = aep_curve
        .iter()
        .filter(|(gb, p)| gb.is_finite() && *p > 0.0 && p.is_finite())
        .cloned()
        .collect();
    let max_gb = usable.iter().map(|(gb, _)| *gb).fold(f64::NEG_INFINITY, f64::max);
    let window: Vec<(f64, f64)> = usable.into_iter().filter(|(gb, _)| *gb >= max_gb - 10.0).collect();
    if window.len() < 2 {
        return Err(Error::Parameter("diversity fit needs at least 2 positive high-SNR points".into()));
    }
    let n = window.len() as f64;
    let mean_x = window.iter().map(|(gb, _)| gb / 10.0).sum::<f64>() / n;
    let mean_y = window.iter().map(|(_, p)| -p.log10()).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (gb, p) in &window {
        let dx = gb / 10.0 - mean_x;
        let dy = -p.log10() - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
    }
    if sxx == 0.0 {
        return Err(Error::Parameter("diversity fit needs distinct SNR points".into()));
    }
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::adaptive_simpson;

    fn mixture(n: u32, nr: u32, g: f64, a: f64) -> GammaMixture {
        GammaMixture::new(n, nr, g, a).unwrap()
    }

    // Closed-form first and second moments used as the test oracle.
    fn table_mean(m: &GammaMixture) -> f64 {
        m.n_div as f64 * m.gamma1 * (1.0 + m.a_param / m.nr as f64)
    }
    fn table_second(m: &GammaMixture) -> f64 {
        let nf = m.n_div as f64;
        let nrf = m.nr as f64;
        let a = m.a_param;
        nf * (nf + 1.0)
            * m.gamma1.powi(2)
            * ((1.0 + a / nrf).powi(2) - a * a / (nrf * nrf * (nrf + 1.0)))
    }

    #[test]
    fn mgf_normalizes_at_zero() {
        for n in 1..=4u32 {
            for &a in &[0.0, 1.0, 5.0, 13.34] {
                let m = mixture(n, 4, 2.0, a);
                for method in [MgfMethod::Hypergeometric, MgfMethod::ClosedForm, MgfMethod::Series] {
                    let v = m.mgf(0.0, method).unwrap();
                    assert!((v - 1.0).abs() <= 1e-10, "N={n} a={a} {method:?}: {v}");
                }
            }
        }
    }

    #[test]
    fn mgf_rayleigh_reduction() {
        // a = 0 collapses to (1 - Gamma1 s)^-N
        let m = mixture(3, 4, 1.5, 0.0);
        for &s in &[-1.0, -0.25, 0.1] {
            let expect = (1.0f64 - 1.5 * s).powi(-3);
            for method in [MgfMethod::Hypergeometric, MgfMethod::ClosedForm, MgfMethod::Series] {
                let v = m.mgf(s, method).unwrap();
                assert!((v - expect).abs() <= 1e-12 * expect, "{method:?} s={s}");
            }
        }
        let m = mixture(2, 4, 1.0, 0.0);
        let v = m.mgf(-1.0, MgfMethod::Series).unwrap();
        assert!((v - 0.25).abs() < 1e-14);
    }

    #[test]
    fn mgf_methods_agree() {
        let m = mixture(1, 4, 2.0, 5.0);
        let s = -0.5;
        let hyp = m.mgf(s, MgfMethod::Hypergeometric).unwrap();
        let closed = m.mgf(s, MgfMethod::ClosedForm).unwrap();
        let series = m.mgf(s, MgfMethod::Series).unwrap();
        assert!((hyp - closed).abs() <= 1e-8 * hyp.abs(), "hyp {hyp} closed {closed}");
        assert!((hyp - series).abs() <= 1e-8 * hyp.abs(), "hyp {hyp} series {series}");
        // ... and against quadrature of e^{st} pdf(t)
        let quad = adaptive_simpson(
            |t| (s * t).exp() * m.pdf(t, 1e-12).unwrap().value,
            0.0,
            250.0,
            1e-11,
        )
        .unwrap();
        assert!((hyp - quad).abs() <= 1e-7 * hyp.abs(), "hyp {hyp} quad {quad}");
    }

    #[test]
    fn mgf_domain_checks() {
        let m = mixture(2, 4, 2.0, 1.0);
        assert!(m.mgf(0.5, MgfMethod::Hypergeometric).is_err());
        assert!(m.mgf(0.49, MgfMethod::Hypergeometric).is_ok());
    }

    #[test]
    fn pdf_rayleigh_reduction_is_exact() {
        let m = mixture(2, 4, 3.0, 0.0);
        for &t in &[0.0, 0.5, 2.0, 11.0] {
            let v = m.pdf(t, 1e-10).unwrap().value;
            let expect = gamma_pdf(2, 3.0, t);
            assert_eq!(v, expect, "t={t}");
        }
    }

    #[test]
    fn pdf_zero_at_origin_for_n_ge_2() {
        let m = mixture(2, 4, 1.0, 4.0);
        assert_eq!(m.pdf(0.0, 1e-10).unwrap().value, 0.0);
        // N = 1 has positive density at zero
        let m1 = mixture(1, 4, 1.0, 4.0);
        assert!(m1.pdf(0.0, 1e-10).unwrap().value > 0.0);
        assert!(m1.pdf(-0.1, 1e-10).is_err());
    }

    #[test]
    fn pdf_integrates_to_one() {
        let m = mixture(1, 4, 1.35, 21.0);
        let mass = adaptive_simpson(|t| m.pdf(t, 1e-10).unwrap().value, 0.0, 400.0 * 1.35, 1e-9).unwrap();
        assert!((mass - 1.0).abs() < 1e-6, "mass = {mass}");
    }

    #[test]
    fn outage_reference_behavior() {
        let m = mixture(2, 4, 2.0, 6.0);
        assert_eq!(m.outage(0.0, 1e-10).unwrap().value, 0.0);
        let big = m.outage(1e4, 1e-10).unwrap().value;
        assert!((big - 1.0).abs() < 1e-9);
        // a = 0 single-term gamma CDF
        let m0 = mixture(3, 4, 2.0, 0.0);
        let v = m0.outage(4.0, 1e-10).unwrap().value;
        let expect = crate::special::reg_lower_inc_gamma(3, 2.0).unwrap();
        assert!((v - expect).abs() < 1e-14);
        // CDF is nondecreasing and bounded on a grid
        let mut prev = -1.0;
        for i in 0..=100 {
            let th = 0.4 * i as f64;
            let raw = m.outage_raw(th, 1e-10).unwrap().value;
            assert!((-1e-9..=1.0 + 1e-9).contains(&raw), "raw outage {raw}");
            let v = m.outage(th, 1e-10).unwrap().value;
            assert!(v >= prev - 1e-12);
            prev = v;
        }
        // CDF route matches quadrature of the density
        let th = 5.0;
        let quad = adaptive_simpson(|t| m.pdf(t, 1e-12).unwrap().value, 0.0, th, 1e-11).unwrap();
        let v = m.outage(th, 1e-10).unwrap().value;
        assert!((v - quad).abs() < 1e-8, "outage {v} quad {quad}");
    }

    #[test]
    fn moments_match_closed_forms() {
        for n in 1..=4u32 {
            for &a in &[0.0, 1.0, 5.0, 13.34] {
                let m = mixture(n, 4, 2.2, a);
                let m0 = m.moment(0, 1e-12).unwrap().value;
                assert!((m0 - 1.0).abs() < 1e-11, "N={n} a={a} m0={m0}");
                let m1 = m.moment(1, 1e-10).unwrap().value;
                assert!((m1 - table_mean(&m)).abs() <= 1e-9 * table_mean(&m), "N={n} a={a}");
                let m2 = m.moment(2, 1e-10).unwrap().value;
                assert!((m2 - table_second(&m)).abs() <= 1e-9 * table_second(&m), "N={n} a={a}");
            }
        }
    }

    #[test]
    fn amount_of_fading_consistent_with_moments() {
        for n in 1..=4u32 {
            for &a in &[0.0, 1.0, 5.0, 13.34] {
                let m = mixture(n, 4, 0.8, a);
                let m1 = m.moment(1, 1e-12).unwrap().value;
                let m2 = m.moment(2, 1e-12).unwrap().value;
                let from_moments = (m2 - m1 * m1) / (m1 * m1);
                let closed = m.amount_of_fading();
                assert!((closed - from_moments).abs() <= 1e-9 * closed, "N={n} a={a}");
            }
        }
        assert!((mixture(3, 4, 1.0, 0.0).amount_of_fading() - 1.0 / 3.0).abs() < 1e-15);
        // a -> inf limit: (1/N)(1 - (N+1)/(NR+1))
        let lim = mixture(3, 4, 1.0, 1e9).amount_of_fading();
        assert!((lim - (1.0 - 4.0 / 5.0) / 3.0).abs() < 1e-7, "lim = {lim}");
    }

    #[test]
    fn array_gain_identity() {
        // mean(Rician)/mean(Rayleigh at the same scale) = 1 + a/NR
        for &a in &[0.5, 5.0, 21.0] {
            let rice = mixture(2, 4, 1.7, a);
            let ray = mixture(2, 4, 1.7, 0.0);
            let gain = rice.moment(1, 1e-12).unwrap().value / ray.moment(1, 1e-12).unwrap().value;
            assert!((gain - (1.0 + a / 4.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn mixture_coefficient_matches_first_principles() {
        let m = mixture(2, 4, 1.0, 7.5);
        for n in 0..25u32 {
            let direct = pochhammer(2.0, n) / pochhammer(4.0, n) * 7.5f64.powi(n as i32)
                / (crate::special::ln_gamma(n as f64 + 1.0)).exp();
            let c = m.coefficient(n);
            assert!((c - direct).abs() <= 1e-11 * direct.abs().max(1e-300), "n={n}: {c} vs {direct}");
        }
        assert_eq!(mixture(2, 4, 1.0, 0.0).coefficient(0), 1.0);
        assert_eq!(mixture(2, 4, 1.0, 0.0).coefficient(3), 0.0);
    }

    #[test]
    fn mixture_rejects_bad_parameters() {
        assert!(GammaMixture::new(0, 4, 1.0, 0.0).is_err());
        assert!(GammaMixture::new(5, 4, 1.0, 0.0).is_err());
        assert!(GammaMixture::new(2, 4, 0.0, 0.0).is_err());
        assert!(GammaMixture::new(2, 4, 1.0, -1.0).is_err());
    }

    #[test]
    fn rayleigh_rician_law_reference_cases() {
        use crate::channel::{derive_params, identity_correlation, ChannelConfig, FadingCase};
        // uncorrelated antennas: Gamma(N, Gamma_s/(K+1)) regardless of the
        // interferer mean
        let mut cfg = ChannelConfig::a1(4, 4, FadingCase::RayleighRician);
        cfg.correlation_override = Some(identity_correlation(4));
        cfg.interferer_mean = Some(crate::CMat::from_element(4, 3, crate::Cx::new(0.3, -0.8)));
        cfg.snr_per_symbol_db = crate::linear_to_db(12.0);
        let p = derive_params(&cfg).unwrap();
        let (shape, scale) = rayleigh_rician_law(&p).unwrap();
        assert_eq!(shape, 1);
        assert!((scale - 12.0 / (p.k_linear + 1.0)).abs() < 1e-10);
        // K = 0 leaves the plain Rayleigh scale
        cfg.fading_case = FadingCase::RayleighRayleigh;
        let p0 = derive_params(&cfg).unwrap();
        assert!((p0.gamma1 - 12.0).abs() < 1e-10);
        // correlated detected stream: the exact law does not apply
        let mut corr = ChannelConfig::a1(4, 4, FadingCase::RayleighRician);
        corr.azimuth_spread_deg = 2.0;
        corr.interferer_mean = Some(crate::CMat::from_element(4, 3, crate::Cx::new(1.0, 0.0)));
        let pc = derive_params(&corr).unwrap();
        assert!(matches!(rayleigh_rician_law(&pc), Err(Error::ExactLawUnavailable { .. })));
        // wrong fading case is a parameter error
        let pr = derive_params(&ChannelConfig::a1(4, 4, FadingCase::RicianRayleigh)).unwrap();
        assert!(matches!(rayleigh_rician_law(&pr), Err(Error::Parameter(_))));
    }

    #[test]
    fn diversity_fit_recovers_power_law() {
        let curve: Vec<(f64, f64)> = (0..=10).map(|i| {
            let gb_db = 10.0 + i as f64 * 2.0;
            let gb = 10f64.powf(gb_db / 10.0);
            (gb_db, 3.7 * gb.powi(-2))
        }).collect();
        let slope = diversity_order_estimate(&curve).unwrap();
        assert!((slope - 2.0).abs() < 1e-6, "slope = {slope}");
        assert!(diversity_order_estimate(&[(10.0, 0.1)]).is_err());
        // zero/negative aep points are ignored
        let mut with_zero = curve.clone();
        with_zero.push((31.0, 0.0));
        let slope = diversity_order_estimate(&with_zero).unwrap();
        assert!((slope - 2.0).abs() < 1e-6);
    }
}
