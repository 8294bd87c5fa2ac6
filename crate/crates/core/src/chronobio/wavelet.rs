//! Discrete wavelet transform with symmetric (half-point) extension.
//!
//! Coefficient layout and lengths follow the common convention: a signal of
//! length `n` filtered by a length-`f` filter yields `(n + f - 1) / 2`
//! coefficients per band.

/// Orthogonal wavelet given by its decomposition low-pass filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wavelet {
    pub dec_lo: &'static [f64],
}

pub const SYM3: Wavelet = Wavelet {
    dec_lo: &[
        0.035226291882100656,
        -0.08544127388224149,
        -0.13501102001039084,
        0.4598775021193313,
        0.8068915093133388,
        0.3326705529509569,
    ],
};

pub const SYM8: Wavelet = Wavelet {
    dec_lo: &[
        -0.0033824159510061256,
        -0.0005421323317911481,
        0.03169508781149298,
        0.007607487324917605,
        -0.1432942383508097,
        -0.061273359067658524,
        0.4813596512583722,
        0.7771857517005235,
        0.3644418948353314,
        -0.05194583810770904,
        -0.027219029917056003,
        0.049137179673607506,
        0.003808752013890615,
        -0.01495225833704823,
        -0.0003029205147213668,
        0.0018899503327594609,
    ],
};

impl Wavelet {
    pub fn len(&self) -> usize {
        self.dec_lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dec_lo.is_empty()
    }

    pub fn rec_lo(&self) -> Vec<f64> {
        self.dec_lo.iter().rev().copied().collect()
    }

    pub fn dec_hi(&self) -> Vec<f64> {
        self.rec_lo()
            .iter()
            .enumerate()
            .map(|(k, v)| if k % 2 == 0 { -v } else { *v })
            .collect()
    }

    pub fn rec_hi(&self) -> Vec<f64> {
        let mut h = self.dec_hi();
        h.reverse();
        h
    }
}

/// Sample of `x` at a possibly out-of-range index under half-point
/// symmetric extension (`x[-1] = x[0]`, `x[n] = x[n-1]`).
fn sym_at(x: &[f64], i: isize) -> f64 {
    let n = x.len() as isize;
    let period = 2 * n;
    let mut k = i.rem_euclid(period);
    if k >= n {
        k = period - 1 - k;
    }
    x[k as usize]
}

fn downsample(x: &[f64], h: &[f64]) -> Vec<f64> {
    let out_len = (x.len() + h.len() - 1) / 2;
    (0..out_len)
        .map(|o| {
            let i = (2 * o + 1) as isize;
            h.iter().enumerate().map(|(j, hj)| hj * sym_at(x, i - j as isize)).sum()
        })
        .collect()
}

/// One level of decomposition into `(approximation, detail)`.
pub fn dwt(x: &[f64], w: &Wavelet) -> (Vec<f64>, Vec<f64>) {
    assert!(!x.is_empty(), "dwt of an empty signal");
    (downsample(x, w.dec_lo), downsample(x, &w.dec_hi()))
}

/// Inverse of [`dwt`]. Output length is `2 * ca.len() - f + 2`; callers crop
/// to the original length.
pub fn idwt(ca: &[f64], cd: &[f64], w: &Wavelet) -> Vec<f64> {
    assert_eq!(ca.len(), cd.len(), "band lengths differ");
    let f = w.len();
    let (lo, hi) = (w.rec_lo(), w.rec_hi());
    let n = ca.len();
    let mut out = vec![0.0; (2 * n + 2).saturating_sub(f)];
    for (o, i) in (f / 2 - 1..n).enumerate() {
        let (mut even, mut odd) = (0.0, 0.0);
        for j in 0..f / 2 {
            even += lo[2 * j] * ca[i - j] + hi[2 * j] * cd[i - j];
            odd += lo[2 * j + 1] * ca[i - j] + hi[2 * j + 1] * cd[i - j];
        }
        out[2 * o] = even;
        out[2 * o + 1] = odd;
    }
    out
}

/// Multi-level decomposition; returns the coarsest approximation followed
/// by details from coarsest to finest.
pub fn wavedec(x: &[f64], w: &Wavelet, level: usize) -> Vec<Vec<f64>> {
    let mut details = Vec::with_capacity(level);
    let mut a = x.to_vec();
    for _ in 0..level {
        let (ca, cd) = dwt(&a, w);
        details.push(cd);
        a = ca;
    }
    details.reverse();
    let mut out = vec![a];
    out.extend(details);
    out
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// One-level wavelet shrinkage: soft thresholding of the detail band at the
/// universal threshold `sigma * sqrt(2 ln n)`, `sigma = MAD(cD) / 0.6745`.
pub fn denoise_level1(x: &[f64], w: &Wavelet) -> Vec<f64> {
    if x.len() < 2 {
        return x.to_vec();
    }
    let (ca, mut cd) = dwt(x, w);
    let mut abs: Vec<f64> = cd.iter().map(|v| v.abs()).collect();
    let sigma = median(&mut abs) / 0.6745;
    let thr = sigma * (2.0 * (x.len() as f64).ln()).sqrt();
    for v in &mut cd {
        *v = v.signum() * (v.abs() - thr).max(0.0);
    }
    let mut y = idwt(&ca, &cd, w);
    y.truncate(x.len());
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // Reference values computed with PyWavelets 1.8 (mode "symmetric").
    const SYM8_CA: [f64; 17] = [
        1.3962917356506521, 1.3280018181843547, 0.6893249018530223, 0.6081911667930001, 0.9226933032562692,
        1.3977105781941814, 1.4866866299026906, 0.6206312537676553, -0.5570379361098524, -1.2019105829718595,
        -0.7071051604515326, -0.38990154825580015, 0.7938312368739534, 1.2222935012532126, 0.24105140234632141,
        -0.4288828922840713, -1.0315986811020044,
    ];
    const SYM8_CD: [f64; 17] = [
        0.24576294186225212, -0.08128733568712777, -0.0030086889020995945, -0.12500241492795605, 0.1934040161218304,
        -0.0749446123359498, 0.038563862445862726, -0.39049302398745733, 0.03257996428517103, -0.017298312947966386,
        0.18393692421949787, 0.23264317352105673, -0.05342057045500293, -0.028550152773400946, 0.02632912688112841,
        0.01048214027729508, -0.386516280324296,
    ];
    const SYM3_CA7: [f64; 10] = [
        4.385170368983209, 4.346682809297333, 3.761924189513367, 3.813778361048193, 2.1412743324147865,
        1.706836847271646, 4.196779611863745, 6.459399132107885, 5.54300018665124, 3.5915236840320057,
    ];
    const SYM3_CA13: [f64; 9] = [
        0.6004202172520082, 0.025886748471449506, 0.23150645873311854, 0.7565204371007299, 1.1620964728258723,
        1.3842030276757593, 1.3934092216841043, 1.1372529224845933, 0.9707808379338729,
    ];
    const SYM3_CD13: [f64; 9] = [
        -0.039751325308605895, 0.042013258376659535, 0.0036283439360295412, 0.0023613024974270917,
        0.0007214633148137257, -0.0010322790616689517, -0.055837630633212426, 0.049157251778859615,
        0.007445825755530242,
    ];
    const SYM3_IDWT_HALF_DETAIL: [f64; 14] = [
        0.018809723316682167, 0.20156275410228908, 0.37267161481858746, 0.5723641808694946, 0.7160389446340386,
        0.8425866399758819, 0.9311533129315601, 0.9860524898864619, 1.0001963235445377, 0.9761156938670749,
        0.9050787338478639, 0.7933854352394593, 0.7011778765146679, 0.6771604794811259,
    ];

    fn close(a: &[f64], b: &[f64]) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert_relative_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn sym8_single_level_matches_reference() {
        let x: Vec<f64> = (0..20)
            .map(|i| (0.37 * i as f64).sin() + 0.01 * i as f64 + if i % 7 == 0 { 0.5 } else { 0.0 })
            .collect();
        let (ca, cd) = dwt(&x, &SYM8);
        close(&ca, &SYM8_CA);
        close(&cd, &SYM8_CD);
    }

    #[test]
    fn sym3_level7_gives_ten_coefficients() {
        let y: Vec<f64> = (0..672)
            .map(|i| {
                let i = i as f64;
                (std::f64::consts::TAU * i / 96.0).sin() + 0.3 * (std::f64::consts::TAU * i / 24.0).cos() + 0.001 * i
            })
            .collect();
        let c = wavedec(&y, &SYM3, 7);
        close(&c[0], &SYM3_CA7);
        assert_eq!(c.len(), 8);
    }

    #[test]
    fn sym3_odd_length_and_inverse() {
        let z: Vec<f64> = (0..13).map(|i| (0.2 * i as f64).sin()).collect();
        let (ca, cd) = dwt(&z, &SYM3);
        close(&ca, &SYM3_CA13);
        close(&cd, &SYM3_CD13);
        let half: Vec<f64> = cd.iter().map(|v| 0.5 * v).collect();
        close(&idwt(&ca, &half, &SYM3), &SYM3_IDWT_HALF_DETAIL);
    }

    #[test]
    fn perfect_reconstruction() {
        for n in [8usize, 15, 95, 96] {
            let x: Vec<f64> = (0..n).map(|i| ((i * 7919) % 31) as f64 / 31.0).collect();
            for w in [SYM3, SYM8] {
                let (ca, cd) = dwt(&x, &w);
                let y = idwt(&ca, &cd, &w);
                for (a, b) in x.iter().zip(&y) {
                    assert_relative_eq!(a, b, epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn filters_are_orthonormal() {
        for w in [SYM3, SYM8] {
            let s: f64 = w.dec_lo.iter().sum();
            assert_relative_eq!(s, std::f64::consts::SQRT_2, epsilon = 1e-12);
            let e: f64 = w.dec_lo.iter().map(|v| v * v).sum();
            // Published coefficients carry about 12 significant digits.
            assert_relative_eq!(e, 1.0, epsilon = 1e-10);
        }
    }

    const SYM8_DENOISED: [f64; 24] = [
        -0.17057051457873607, 0.1279822871706823, 0.5888755754937416, 0.839256582410517, 0.9355906716476807,
        0.977208590695139, 0.955549632790922, 0.9209627688633399, 0.8031245390245274, 0.47018440728320127,
        0.05544720085984798, -0.23570928867013943, -0.45459534476253227, -0.7057737871325934, -0.9162479665027451,
        -0.9923174529163669, -0.9627354962245027, -0.8780271378171198, -0.7294186078682087, -0.5074472330101643,
        -0.23951002357721746, 0.02137679976876164, 0.24008814245850083, 0.4270829009737453,
    ];

    #[test]
    fn denoise_matches_reference_shrinkage() {
        let x: Vec<f64> = (0..24).map(|i| (0.3 * i as f64).sin() + 0.2 * ((i * 37 % 11) as f64 / 5.0 - 1.0)).collect();
        let d = denoise_level1(&x, &SYM8);
        assert_eq!(d.len(), 24);
        for (a, b) in d.iter().zip(&SYM8_DENOISED) {
            assert_relative_eq!(a, b, epsilon = 1e-10);
        }
    }
}
