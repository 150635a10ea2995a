//! Scenario construction: transmit-correlation matrix from the azimuth
//! spread, channel mean from the K-factor and direction, and the derived
//! parameters `(N, Gamma1, a, mu)` that every analytic formula consumes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::adaptive_simpson;
use crate::{db_to_linear, CMat, CVec, Cx};

/// Which streams carry a deterministic (line-of-sight) component.
/// The first name refers to the detected stream, the second to the
/// interfering streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FadingCase {
    /// Detected stream Rician, interferers Rayleigh.
    RicianRayleigh,
    /// Detected stream Rayleigh, interferers Rician.
    RayleighRician,
    /// Everything Rayleigh (K is forced to zero).
    RayleighRayleigh,
}

/// User-facing scenario description.
///
/// Matrices serialize as nested arrays of `[re, im]` pairs; the file
/// schema uses exactly these field names.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelConfig {
    /// Receive antennas.
    pub nr: usize,
    /// Transmit antennas (one stream per antenna), `nt <= nr`.
    pub nt: usize,
    /// Rician K-factor in dB. Ignored (treated as zero) for
    /// [`FadingCase::RayleighRayleigh`].
    pub k_factor_db: f64,
    /// Azimuth spread in degrees; standard deviation of the Laplacian
    /// power azimuth spectrum. Must be positive unless
    /// `correlation_override` is supplied.
    pub azimuth_spread_deg: f64,
    /// Central azimuth of the power azimuth spectrum, degrees.
    pub theta_c_deg: f64,
    /// Interelement distance of the uniform linear array, in
    /// half-wavelengths.
    pub antenna_spacing: f64,
    /// Unit-norm direction of the detected stream's mean, length `nr`.
    /// Defaults to `(1, 1, ..., 1)/sqrt(nr)` when absent.
    #[serde(default, with = "cx_serde::opt_vec", skip_serializing_if = "Option::is_none")]
    pub mean_direction: Option<Vec<Cx>>,
    /// Per-symbol input SNR in dB.
    pub snr_per_symbol_db: f64,
    /// Constellation size M (MPSK), `M >= 2`.
    pub modulation_order: u32,
    pub fading_case: FadingCase,
    /// Interferer mean shape, `nr x (nt-1)`; required for
    /// [`FadingCase::RayleighRician`] sampling. Rescaled so the mean
    /// matrix norm satisfies the K-factor normalization.
    #[serde(default, with = "cx_serde::opt_mat", skip_serializing_if = "Option::is_none")]
    pub interferer_mean: Option<CMat>,
    /// Bypass the power-azimuth-spectrum generator with an explicit
    /// `nt x nt` Hermitian unit-diagonal PSD transmit correlation.
    #[serde(default, with = "cx_serde::opt_mat", skip_serializing_if = "Option::is_none")]
    pub correlation_override: Option<CMat>,
}

/// Unit-norm all-ones direction vector of length `nr`.
pub fn uniform_direction(nr: usize) -> Vec<Cx> {
    let c = Cx::new(1.0 / (nr as f64).sqrt(), 0.0);
    vec![c; nr]
}

impl ChannelConfig {
    /// Indoor scenario preset: K = 7 dB, AS = 51 degrees, central azimuth
    /// 5 degrees, half-wavelength spacing, QPSK, uniform mean direction.
    pub fn a1(nr: usize, nt: usize, fading_case: FadingCase) -> Self {
        ChannelConfig {
            nr,
            nt,
            k_factor_db: 7.0,
            azimuth_spread_deg: 51.0,
            theta_c_deg: 5.0,
            antenna_spacing: 1.0,
            mean_direction: None,
            snr_per_symbol_db: 10.0,
            modulation_order: 4,
            fading_case,
            interferer_mean: None,
            correlation_override: None,
        }
    }

    /// Linear K-factor; zero for Rayleigh-Rayleigh scenarios.
    pub fn k_linear(&self) -> f64 {
        match self.fading_case {
            FadingCase::RayleighRayleigh => 0.0,
            _ => db_to_linear(self.k_factor_db),
        }
    }

    /// Linear per-symbol input SNR.
    pub fn gamma_s(&self) -> f64 {
        db_to_linear(self.snr_per_symbol_db)
    }

    /// Per-bit input SNR in dB for the configured constellation.
    pub fn gamma_b_db(&self) -> f64 {
        self.snr_per_symbol_db - 10.0 * (self.modulation_order as f64).log2().log10()
    }

    /// Set the per-symbol SNR from a per-bit SNR in dB.
    pub fn set_gamma_b_db(&mut self, gamma_b_db: f64) {
        self.snr_per_symbol_db = gamma_b_db + 10.0 * (self.modulation_order as f64).log2().log10();
    }

    /// The mean direction, defaulted to the uniform vector.
    pub fn direction(&self) -> Vec<Cx> {
        self.mean_direction.clone().unwrap_or_else(|| uniform_direction(self.nr))
    }

    pub fn validate(&self) -> Result<()> {
        if self.nr == 0 || self.nt == 0 {
            return Err(Error::Parameter("antenna counts must be >= 1".into()));
        }
        if self.nt > self.nr {
            return Err(Error::Parameter(format!("nt = {} exceeds nr = {}", self.nt, self.nr)));
        }
        if self.modulation_order < 2 {
            return Err(Error::Parameter(format!("modulation_order must be >= 2, got {}", self.modulation_order)));
        }
        if !(self.antenna_spacing > 0.0) {
            return Err(Error::Parameter("antenna_spacing must be > 0".into()));
        }
        if self.correlation_override.is_none() && !(self.azimuth_spread_deg > 0.0) {
            return Err(Error::Parameter("azimuth_spread_deg must be > 0".into()));
        }
        if let Some(d) = &self.mean_direction {
            if d.len() != self.nr {
                return Err(Error::Parameter(format!(
                    "mean_direction length {} does not match nr = {}",
                    d.len(),
                    self.nr
                )));
            }
            let norm_sq: f64 = d.iter().map(|z| z.norm_sqr()).sum();
            if (norm_sq.sqrt() - 1.0).abs() > 1e-12 {
                return Err(Error::Parameter(format!(
                    "mean_direction must be unit norm (got norm {})",
                    norm_sq.sqrt()
                )));
            }
        }
        if let Some(m) = &self.interferer_mean {
            if self.nt < 2 {
                return Err(Error::Parameter("interferer_mean requires nt >= 2".into()));
            }
            if m.nrows() != self.nr || m.ncols() != self.nt - 1 {
                return Err(Error::Parameter(format!(
                    "interferer_mean must be {} x {}, got {} x {}",
                    self.nr,
                    self.nt - 1,
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        if let Some(r) = &self.correlation_override {
            validate_correlation(r, self.nt)?;
        }
        Ok(())
    }
}

fn validate_correlation(r: &CMat, nt: usize) -> Result<()> {
    if r.nrows() != nt || r.ncols() != nt {
        return Err(Error::Parameter(format!(
            "correlation matrix must be {nt} x {nt}, got {} x {}",
            r.nrows(),
            r.ncols()
        )));
    }
    for i in 0..nt {
        if (r[(i, i)] - Cx::new(1.0, 0.0)).norm() > 1e-12 {
            return Err(Error::Parameter("correlation matrix must have unit diagonal".into()));
        }
        for j in 0..i {
            if (r[(i, j)] - r[(j, i)].conj()).norm() > 1e-12 {
                return Err(Error::Parameter("correlation matrix must be Hermitian".into()));
            }
        }
    }
    let eig = r.clone().symmetric_eigen();
    if eig.eigenvalues.iter().any(|&l| l < -1e-10) {
        return Err(Error::NotPositiveDefinite("correlation matrix"));
    }
    Ok(())
}

/// Transmit-correlation matrix of a uniform linear array under a
/// truncated Laplacian power azimuth spectrum.
///
/// `[R_T]_{p,q} = int_{-pi}^{pi} exp(j 2 pi d (q-p) sin(theta_c + phi)) p_L(phi) dphi`
/// where `p_L` is the Laplacian density with standard deviation
/// `azimuth_spread_deg` (in radians), truncated to `[-pi, pi]` and
/// renormalized. The diagonal is exactly 1 and the result is Hermitian.
pub fn laplacian_correlation(
    azimuth_spread_deg: f64,
    theta_c_deg: f64,
    antenna_spacing: f64,
    nt: usize,
) -> Result<CMat> {
    if !(azimuth_spread_deg > 0.0) {
        return Err(Error::Parameter("azimuth_spread_deg must be > 0".into()));
    }
    let sigma = azimuth_spread_deg.to_radians();
    let theta_c = theta_c_deg.to_radians();
    let pi = std::f64::consts::PI;
    // mass of the untruncated density on [-pi, pi]
    let mass = 1.0 - (-std::f64::consts::SQRT_2 * pi / sigma).exp();
    let density = move |phi: f64| {
        (-std::f64::consts::SQRT_2 * phi.abs() / sigma).exp() / (std::f64::consts::SQRT_2 * sigma) / mass
    };

    let mut rho = vec![Cx::new(1.0, 0.0); nt]; // rho[lag]
    for (lag, slot) in rho.iter_mut().enumerate().skip(1) {
        let omega = 2.0 * pi * antenna_spacing * lag as f64;
        let re_int = |phi: f64| (omega * (theta_c + phi).sin()).cos() * density(phi);
        let im_int = |phi: f64| (omega * (theta_c + phi).sin()).sin() * density(phi);
        // split at the density kink
        let re = adaptive_simpson(re_int, -pi, 0.0, 5e-12)? + adaptive_simpson(re_int, 0.0, pi, 5e-12)?;
        let im = adaptive_simpson(im_int, -pi, 0.0, 5e-12)? + adaptive_simpson(im_int, 0.0, pi, 5e-12)?;
        *slot = Cx::new(re, im);
    }

    let mut r = CMat::zeros(nt, nt);
    for p in 0..nt {
        for q in 0..nt {
            r[(p, q)] = match q.cmp(&p) {
                std::cmp::Ordering::Equal => Cx::new(1.0, 0.0),
                std::cmp::Ordering::Greater => rho[q - p],
                std::cmp::Ordering::Less => rho[p - q].conj(),
            };
        }
    }

    let eig = r.clone().symmetric_eigen();
    let min_eig = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_eig < -1e-10 {
        return Err(Error::NotPositiveDefinite("generated transmit correlation"));
    }
    if min_eig < 0.0 {
        // clip the tiny negative eigenvalues and restore the unit diagonal
        let mut vals = eig.eigenvalues.clone();
        vals.iter_mut().for_each(|l| *l = l.max(0.0));
        let q = &eig.eigenvectors;
        let clipped = q * CMat::from_diagonal(&vals.map(|l| Cx::new(l, 0.0))) * q.adjoint();
        let d: Vec<f64> = (0..nt).map(|i| clipped[(i, i)].re.sqrt()).collect();
        let mut out = clipped;
        for p in 0..nt {
            for qi in 0..nt {
                out[(p, qi)] /= Cx::new(d[p] * d[qi], 0.0);
            }
            out[(p, p)] = Cx::new(1.0, 0.0);
        }
        return Ok(out);
    }
    Ok(r)
}

/// Deterministic mean matrix `H_d` for the scenario, normalized so that
/// `||H_d||^2 = K/(K+1) nr nt`.
pub fn build_mean_matrix(config: &ChannelConfig) -> Result<CMat> {
    config.validate()?;
    let k = config.k_linear();
    let norm_sq = k / (k + 1.0) * (config.nr * config.nt) as f64;
    let mut h_d = CMat::zeros(config.nr, config.nt);
    if k == 0.0 {
        return Ok(h_d);
    }
    match config.fading_case {
        FadingCase::RicianRayleigh => {
            let scale = norm_sq.sqrt();
            for (i, z) in config.direction().iter().enumerate() {
                h_d[(i, 0)] = z * scale;
            }
        }
        FadingCase::RayleighRician => {
            let shape = config
                .interferer_mean
                .as_ref()
                .ok_or_else(|| Error::Parameter("RayleighRician requires interferer_mean".into()))?;
            let shape_norm = shape.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if shape_norm == 0.0 {
                return Err(Error::Parameter("interferer_mean must be nonzero for K > 0".into()));
            }
            let scale = norm_sq.sqrt() / shape_norm;
            for j in 0..config.nt - 1 {
                for i in 0..config.nr {
                    h_d[(i, j + 1)] = shape[(i, j)] * scale;
                }
            }
        }
        FadingCase::RayleighRayleigh => {}
    }
    Ok(h_d)
}

/// Sufficient statistics of a scenario. Immutable once built; every
/// analytic formula reads `(n_div, gamma1, a_param)` plus the matrices
/// needed by the Monte Carlo sampler.
#[derive(Debug, Clone)]
pub struct DerivedParams {
    /// Diversity order `N = nr - nt + 1`.
    pub n_div: u32,
    pub nr: usize,
    pub nt: usize,
    /// Common scale of the gamma-mixture SNR law (linear).
    pub gamma1: f64,
    /// Noncentrality-like mixture parameter `a = rinv11 ||mu||^2`.
    pub a_param: f64,
    /// Conditional-mean residual `mu = h_d1 - H_d2 r21`.
    pub mu: CVec,
    /// Interference regression vector, empty for `nt = 1`.
    pub r21: CVec,
    /// Transmit correlation (unit diagonal).
    pub rt: CMat,
    /// K-scaled transmit covariance `R_T / (K+1)`.
    pub rtk: CMat,
    /// `[R_{T,K}^{-1}]_{1,1}`, via the Schur complement.
    pub rinv11: f64,
    /// Channel mean matrix.
    pub h_d: CMat,
    /// Linear per-symbol input SNR.
    pub gamma_s: f64,
    /// Linear K-factor.
    pub k_linear: f64,
    pub fading_case: FadingCase,
}

/// Build [`DerivedParams`] from a scenario description.
pub fn derive_params(config: &ChannelConfig) -> Result<DerivedParams> {
    config.validate()?;
    let k = config.k_linear();
    let gamma_s = config.gamma_s();
    let rt = match &config.correlation_override {
        Some(r) => r.clone(),
        None => laplacian_correlation(
            config.azimuth_spread_deg,
            config.theta_c_deg,
            config.antenna_spacing,
            config.nt,
        )?,
    };
    let rtk = rt.map(|z| z / (k + 1.0));
    let h_d = build_mean_matrix(config)?;
    let h_d1 = CVec::from_iterator(config.nr, h_d.column(0).iter().cloned());

    let (r21, rinv11, mu) = if config.nt == 1 {
        (CVec::zeros(0), k + 1.0, h_d1)
    } else {
        let lower = rtk.view((1, 1), (config.nt - 1, config.nt - 1)).into_owned();
        let cross = CVec::from_iterator(config.nt - 1, rtk.view((1, 0), (config.nt - 1, 1)).iter().cloned());
        let chol = lower
            .clone()
            .cholesky()
            .ok_or(Error::SingularMatrix("interference block of the transmit covariance"))?;
        let r21 = chol.solve(&cross);
        let quad: Cx = cross.dotc(&r21); // r~^H R~^{-1} r~, real for Hermitian PSD
        let schur = rtk[(0, 0)].re - quad.re;
        if !(schur > 0.0) {
            return Err(Error::SingularMatrix("Schur complement of the transmit covariance"));
        }
        let h_d2 = h_d.view((0, 1), (config.nr, config.nt - 1)).into_owned();
        let mu = &h_d1 - &h_d2 * &r21;
        (r21, 1.0 / schur, mu)
    };

    // Under Rician-Rayleigh the mean enters only through its norm, which
    // the K normalization fixes exactly; using the closed value keeps the
    // derived parameters bit-identical across direction choices.
    let mu_norm_sq = match config.fading_case {
        FadingCase::RicianRayleigh => k / (k + 1.0) * (config.nr * config.nt) as f64,
        _ => mu.iter().map(|z| z.norm_sqr()).sum(),
    };

    Ok(DerivedParams {
        n_div: (config.nr - config.nt + 1) as u32,
        nr: config.nr,
        nt: config.nt,
        gamma1: gamma_s / rinv11,
        a_param: rinv11 * mu_norm_sq,
        mu,
        r21,
        rt,
        rtk,
        rinv11,
        h_d,
        gamma_s,
        k_linear: k,
        fading_case: config.fading_case,
    })
}

impl DerivedParams {
    /// `[R_{T,K}^{-1}]_{1,1}` recomputed through the full matrix inverse,
    /// as an independent cross-check of the Schur-complement route.
    pub fn rinv11_via_full_inverse(&self) -> Result<f64> {
        let inv = self
            .rtk
            .clone()
            .try_inverse()
            .ok_or(Error::SingularMatrix("transmit covariance"))?;
        Ok(inv[(0, 0)].re)
    }

    /// Norm of the conditional-mean residual.
    pub fn mu_norm(&self) -> f64 {
        self.mu.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Built-in scenario presets with provenance notes.
pub mod presets {
    /// A named default parameter set for the correlation and K-factor.
    #[derive(Debug, Clone, Copy)]
    pub struct Preset {
        pub name: &'static str,
        pub k_factor_db: f64,
        /// `None` means the azimuth spread must be supplied by the user.
        pub azimuth_spread_deg: Option<f64>,
        pub theta_c_deg: f64,
        pub antenna_spacing: f64,
        pub notes: &'static str,
    }

    /// The shipped presets. A1 is complete; C2 and D1 share the average
    /// K-factor but need a user-supplied azimuth spread.
    pub const ALL: [Preset; 3] = [
        Preset {
            name: "a1",
            k_factor_db: 7.0,
            azimuth_spread_deg: Some(51.0),
            theta_c_deg: 5.0,
            antenna_spacing: 1.0,
            notes: "indoor office; averages of the scenario K and AS distributions",
        },
        Preset {
            name: "c2",
            k_factor_db: 7.0,
            azimuth_spread_deg: None,
            theta_c_deg: 5.0,
            antenna_spacing: 1.0,
            notes: "typical urban macrocell; average K, azimuth spread must be supplied",
        },
        Preset {
            name: "d1",
            k_factor_db: 7.0,
            azimuth_spread_deg: None,
            theta_c_deg: 5.0,
            antenna_spacing: 1.0,
            notes: "rural macrocell; average K, azimuth spread must be supplied",
        },
    ];

    pub fn by_name(name: &str) -> Option<&'static Preset> {
        ALL.iter().find(|p| p.name.eq_ignore_ascii_case(name))
    }
}

/// Serde helpers representing complex values as `[re, im]` pairs.
mod cx_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub mod opt_vec {
        use super::*;
        use serde::{Deserialize, Serialize};

        pub fn serialize<S: Serializer>(v: &Option<Vec<Cx>>, s: S) -> std::result::Result<S::Ok, S::Error> {
            v.as_ref()
                .map(|v| v.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>())
                .serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Vec<Cx>>, D::Error> {
            let raw = Option::<Vec<[f64; 2]>>::deserialize(d)?;
            Ok(raw.map(|v| v.into_iter().map(|[re, im]| Cx::new(re, im)).collect()))
        }
    }

    pub mod opt_mat {
        use super::*;
        use serde::{Deserialize, Serialize};

        pub fn serialize<S: Serializer>(v: &Option<CMat>, s: S) -> std::result::Result<S::Ok, S::Error> {
            v.as_ref()
                .map(|m| {
                    (0..m.nrows())
                        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect::<Vec<_>>())
                        .collect::<Vec<_>>()
                })
                .serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<CMat>, D::Error> {
            let raw = Option::<Vec<Vec<[f64; 2]>>>::deserialize(d)?;
            match raw {
                None => Ok(None),
                Some(rows) => {
                    let nrows = rows.len();
                    let ncols = rows.first().map_or(0, Vec::len);
                    if rows.iter().any(|r| r.len() != ncols) {
                        return Err(serde::de::Error::custom("ragged complex matrix"));
                    }
                    let mut m = CMat::zeros(nrows, ncols);
                    for (i, row) in rows.iter().enumerate() {
                        for (j, &[re, im]) in row.iter().enumerate() {
                            m[(i, j)] = Cx::new(re, im);
                        }
                    }
                    Ok(Some(m))
                }
            }
        }
    }
}

/// Convenience constructor for explicit complex matrices in tests and
/// configs assembled in code.
pub fn cmat_from_rows(rows: &[Vec<Cx>]) -> CMat {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    CMat::from_fn(nrows, ncols, |i, j| rows[i][j])
}

/// Identity transmit correlation of the given size.
pub fn identity_correlation(nt: usize) -> CMat {
    CMat::identity(nt, nt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear_to_db;

    fn a1_config() -> ChannelConfig {
        ChannelConfig::a1(4, 4, FadingCase::RicianRayleigh)
    }

    #[test]
    fn laplacian_diagonal_is_exactly_one() {
        let r = laplacian_correlation(51.0, 5.0, 1.0, 4).unwrap();
        for i in 0..4 {
            assert_eq!(r[(i, i)], Cx::new(1.0, 0.0));
        }
        // Hermitian by construction
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(r[(i, j)], r[(j, i)].conj());
            }
        }
    }

    #[test]
    fn laplacian_limits_match_physics() {
        // wide spread decorrelates
        let wide = laplacian_correlation(51.0, 5.0, 1.0, 2).unwrap();
        assert!(wide[(0, 1)].norm() < 0.3, "|rho| = {}", wide[(0, 1)].norm());
        // vanishing spread approaches the rank-one limit
        let narrow = laplacian_correlation(0.1, 5.0, 1.0, 2).unwrap();
        assert!(narrow[(0, 1)].norm() > 0.99, "|rho| = {}", narrow[(0, 1)].norm());
        // spread monotonically weakens adjacent-element correlation
        let mid = laplacian_correlation(10.0, 5.0, 1.0, 2).unwrap();
        assert!(narrow[(0, 1)].norm() > mid[(0, 1)].norm());
        assert!(mid[(0, 1)].norm() > wide[(0, 1)].norm());
    }

    #[test]
    fn laplacian_matches_quadrature_oracle() {
        // independent check of one off-diagonal entry against direct
        // quadrature of the defining integral with the normalized density
        let sigma = 51.0f64.to_radians();
        let mass = 1.0 - (-std::f64::consts::SQRT_2 * std::f64::consts::PI / sigma).exp();
        let pi = std::f64::consts::PI;
        let f_re = |phi: f64| {
            (2.0 * pi * ((5.0f64).to_radians() + phi).sin()).cos()
                * (-std::f64::consts::SQRT_2 * phi.abs() / sigma).exp()
                / (std::f64::consts::SQRT_2 * sigma)
                / mass
        };
        let oracle = adaptive_simpson(f_re, -pi, 0.0, 1e-12).unwrap() + adaptive_simpson(f_re, 0.0, pi, 1e-12).unwrap();
        let r = laplacian_correlation(51.0, 5.0, 1.0, 2).unwrap();
        assert!((r[(0, 1)].re - oracle).abs() < 1e-10);
    }

    #[test]
    fn mean_matrix_norms() {
        // K = 0 dB is linear K = 1: ||H_d||^2 = 16/2 = 8
        let mut cfg = a1_config();
        cfg.k_factor_db = 0.0;
        let h = build_mean_matrix(&cfg).unwrap();
        let n2: f64 = h.iter().map(|z| z.norm_sqr()).sum();
        assert!((n2 - 8.0).abs() < 1e-12);
        // K -> -inf dB collapses the mean
        cfg.k_factor_db = f64::NEG_INFINITY;
        let h = build_mean_matrix(&cfg).unwrap();
        assert!(h.iter().all(|z| z.norm() == 0.0));
        // K = 7 dB: ||h_d1||^2 = 10^0.7/(10^0.7+1) * 16
        let cfg = a1_config();
        let h = build_mean_matrix(&cfg).unwrap();
        let n2: f64 = h.column(0).iter().map(|z| z.norm_sqr()).sum();
        let k = db_to_linear(7.0);
        assert!((n2 - k / (k + 1.0) * 16.0).abs() < 1e-10);
        assert!((n2 - 13.34).abs() < 5e-2);
        // interfering columns are zero
        assert!(h.view((0, 1), (4, 3)).iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn rayleigh_rician_mean_requires_interferers() {
        let mut cfg = ChannelConfig::a1(4, 4, FadingCase::RayleighRician);
        assert!(build_mean_matrix(&cfg).is_err());
        cfg.interferer_mean = Some(CMat::from_element(4, 3, Cx::new(1.0, 0.0)));
        let h = build_mean_matrix(&cfg).unwrap();
        let n2: f64 = h.iter().map(|z| z.norm_sqr()).sum();
        let k = db_to_linear(7.0);
        assert!((n2 - k / (k + 1.0) * 16.0).abs() < 1e-10);
        assert!(h.column(0).iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn derive_params_identity_correlation() {
        let mut cfg = a1_config();
        cfg.correlation_override = Some(identity_correlation(4));
        cfg.k_factor_db = linear_to_db(1.5);
        cfg.snr_per_symbol_db = linear_to_db(6.0);
        let p = derive_params(&cfg).unwrap();
        // Gamma1 = Gamma_s / (K+1), a = K nr nt
        assert!((p.gamma1 - 6.0 / 2.5).abs() < 1e-12);
        assert!((p.a_param - 1.5 * 16.0).abs() < 1e-10);
        assert_eq!(p.n_div, 1);
        assert!((p.rinv11 - 2.5).abs() < 1e-12);
        // K = 0 zeroes the mixture parameter
        let mut cfg0 = cfg.clone();
        cfg0.fading_case = FadingCase::RayleighRayleigh;
        let p0 = derive_params(&cfg0).unwrap();
        assert_eq!(p0.a_param, 0.0);
        assert!((p0.gamma1 - 6.0).abs() < 1e-12);
    }

    #[test]
    fn derive_params_schur_identities() {
        for nt in 2..=4usize {
            let cfg = ChannelConfig::a1(4, nt, FadingCase::RicianRayleigh);
            let p = derive_params(&cfg).unwrap();
            // full-inverse route agrees with the Schur route
            let full = p.rinv11_via_full_inverse().unwrap();
            assert!((full - p.rinv11).abs() < 1e-10 * p.rinv11, "nt={nt}");
            // Schur bound with equality iff r21 = 0
            assert!(p.rinv11 >= p.k_linear + 1.0 - 1e-12);
            // reconstruct the (1,1) Schur product: rinv11 (1/(K+1) - q) = 1
            let q = p.rtk[(0, 0)].re - 1.0 / p.rinv11;
            assert!((p.rinv11 * (p.rtk[(0, 0)].re - q) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn derive_params_nt1_degenerate() {
        let cfg = ChannelConfig::a1(4, 1, FadingCase::RicianRayleigh);
        let p = derive_params(&cfg).unwrap();
        assert_eq!(p.r21.len(), 0);
        assert!((p.rinv11 - (p.k_linear + 1.0)).abs() < 1e-12);
        assert_eq!(p.n_div, 4);
        let h = build_mean_matrix(&cfg).unwrap();
        for i in 0..4 {
            assert!((p.mu[i] - h[(i, 0)]).norm() < 1e-15);
        }
    }

    #[test]
    fn direction_invariance_is_bit_exact() {
        let base = derive_params(&a1_config()).unwrap();
        let dirs: Vec<Vec<Cx>> = vec![
            vec![Cx::new(1.0, 0.0), Cx::new(0.0, 0.0), Cx::new(0.0, 0.0), Cx::new(0.0, 0.0)],
            vec![Cx::new(0.5, 0.0), Cx::new(0.0, 0.5), Cx::new(-0.5, 0.0), Cx::new(0.0, -0.5)],
        ];
        for d in dirs {
            let mut cfg = a1_config();
            cfg.mean_direction = Some(d);
            let p = derive_params(&cfg).unwrap();
            assert_eq!(p.n_div, base.n_div);
            assert_eq!(p.gamma1, base.gamma1);
            assert_eq!(p.a_param, base.a_param);
        }
    }

    #[test]
    fn rayleigh_rician_uncorrelated_gives_zero_mu() {
        let mut cfg = ChannelConfig::a1(4, 4, FadingCase::RayleighRician);
        cfg.correlation_override = Some(identity_correlation(4));
        cfg.interferer_mean = Some(CMat::from_element(4, 3, Cx::new(1.0, 0.5)));
        let p = derive_params(&cfg).unwrap();
        assert!(p.mu_norm() < 1e-14);
        assert!(p.a_param < 1e-13);
    }

    #[test]
    fn config_validation_rejects_bad_inputs() {
        let mut cfg = a1_config();
        cfg.nt = 5;
        assert!(cfg.validate().is_err());
        let mut cfg = a1_config();
        cfg.mean_direction = Some(vec![Cx::new(1.0, 0.0); 4]); // norm 2
        assert!(cfg.validate().is_err());
        let mut cfg = a1_config();
        cfg.azimuth_spread_deg = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = a1_config();
        cfg.correlation_override = Some(CMat::from_element(4, 4, Cx::new(1.0, 0.0)) * Cx::new(2.0, 0.0));
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn config_json_round_trip() {
        let mut cfg = a1_config();
        cfg.mean_direction = Some(uniform_direction(4));
        cfg.correlation_override = Some(identity_correlation(4));
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        assert!(text.contains("\"k_factor_db\""));
        assert!(text.contains("\"fading_case\": \"RicianRayleigh\""));
        let back: ChannelConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back.nr, 4);
        assert_eq!(back.mean_direction.unwrap(), uniform_direction(4));
        assert_eq!(back.correlation_override.unwrap(), identity_correlation(4));
    }
}
