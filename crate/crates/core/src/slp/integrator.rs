//! Dormand-Prince 8(5,3) for linear matrix equations `Y' = F(t) Y`.
//!
//! Step-size control follows Hairer's DOP853 (Lund stabilization off).

use crate::linalg::RMat;
use nalgebra::ComplexField;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Options {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Initial step; chosen from the generator norm when `None`.
    pub h_init: Option<f64>,
}

impl Options {
    pub fn with_tol(tol: f64) -> Self {
        Options {
            rtol: tol,
            atol: tol,
            max_steps: 2_000_000,
            h_init: None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
    /// Last accepted step size, reusable for the next segment.
    pub last_h: f64,
}

impl StepStats {
    pub fn merge(&mut self, other: &StepStats) {
        self.accepted += other.accepted;
        self.rejected += other.rejected;
        self.evaluations += other.evaluations;
        self.last_h = other.last_h;
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Failure {
    NonFinite { t: f64 },
    StepBudget { t: f64 },
    StepTooSmall { t: f64 },
}

const SAFE: f64 = 0.9;
const FAC_MIN_INV: f64 = 1.0 / 0.333;
const FAC_MAX_INV: f64 = 1.0 / 6.0;

/// Integrates `Y' = F(t) Y` from `t0` to `t1 > t0`.
///
/// `hook(t, y)` runs after every accepted step and may modify `y` in
/// place, e.g. to re-orthonormalize a propagated frame.
pub fn integrate<F, H>(
    mut f: F,
    t0: f64,
    t1: f64,
    y0: RMat,
    opts: &Options,
    mut hook: H,
) -> Result<(RMat, StepStats), Failure>
where
    F: FnMut(f64) -> RMat,
    H: FnMut(f64, &mut RMat),
{
    let mut stats = StepStats::default();
    let span = t1 - t0;
    if span <= 0.0 {
        stats.last_h = opts.h_init.unwrap_or(0.0);
        return Ok((y0, stats));
    }
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t) * &y;
    stats.evaluations += 1;
    let mut h = match opts.h_init {
        Some(h) if h > 0.0 => h.min(span),
        _ => initial_step(&y, &k1, span, opts),
    };
    let mut last_rejected = false;
    let n_entries = y.len() as f64;

    while t < t1 {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Failure::StepBudget { t });
        }
        if h < 1e-14 * (t.abs() + span) {
            return Err(Failure::StepTooSmall { t });
        }
        let last = t + h >= t1 - 1e-14 * span;
        if last {
            h = t1 - t;
        }

        let s2 = &y + &k1 * (A21 * h);
        let k2 = f(t + C2 * h) * s2;
        let s3 = &y + (&k1 * A31 + &k2 * A32) * h;
        let k3 = f(t + C3 * h) * s3;
        let s4 = &y + (&k1 * A41 + &k3 * A43) * h;
        let k4 = f(t + C4 * h) * s4;
        let s5 = &y + (&k1 * A51 + &k3 * A53 + &k4 * A54) * h;
        let k5 = f(t + C5 * h) * s5;
        let s6 = &y + (&k1 * A61 + &k4 * A64 + &k5 * A65) * h;
        let k6 = f(t + C6 * h) * s6;
        let s7 = &y + (&k1 * A71 + &k4 * A74 + &k5 * A75 + &k6 * A76) * h;
        let k7 = f(t + C7 * h) * s7;
        let s8 = &y + (&k1 * A81 + &k4 * A84 + &k5 * A85 + &k6 * A86 + &k7 * A87) * h;
        let k8 = f(t + C8 * h) * s8;
        let s9 = &y + (&k1 * A91 + &k4 * A94 + &k5 * A95 + &k6 * A96 + &k7 * A97 + &k8 * A98) * h;
        let k9 = f(t + C9 * h) * s9;
        let s10 = &y
            + (&k1 * A101
                + &k4 * A104
                + &k5 * A105
                + &k6 * A106
                + &k7 * A107
                + &k8 * A108
                + &k9 * A109)
                * h;
        let k10 = f(t + C10 * h) * s10;
        let s11 = &y
            + (&k1 * A111
                + &k4 * A114
                + &k5 * A115
                + &k6 * A116
                + &k7 * A117
                + &k8 * A118
                + &k9 * A119
                + &k10 * A1110)
                * h;
        let k11 = f(t + C11 * h) * s11;
        let t_new = t + h;
        let s12 = &y
            + (&k1 * A121
                + &k4 * A124
                + &k5 * A125
                + &k6 * A126
                + &k7 * A127
                + &k8 * A128
                + &k9 * A129
                + &k10 * A1210
                + &k11 * A1211)
                * h;
        let k12 = f(t_new) * s12;
        stats.evaluations += 11;

        let incr = &k1 * B1
            + &k6 * B6
            + &k7 * B7
            + &k8 * B8
            + &k9 * B9
            + &k10 * B10
            + &k11 * B11
            + &k12 * B12;
        let y_new = &y + &incr * h;
        if !y_new.iter().all(|x| x.is_finite()) {
            return Err(Failure::NonFinite { t });
        }

        let mut err = 0.0;
        let mut err2 = 0.0;
        for i in 0..y.len() {
            let sk = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            let e2 = incr[i] - BHH1 * k1[i] - BHH2 * k9[i] - BHH3 * k12[i];
            err2 += (e2 / sk) * (e2 / sk);
            let e = ER1 * k1[i]
                + ER6 * k6[i]
                + ER7 * k7[i]
                + ER8 * k8[i]
                + ER9 * k9[i]
                + ER10 * k10[i]
                + ER11 * k11[i]
                + ER12 * k12[i];
            err += (e / sk) * (e / sk);
        }
        let mut deno = err + 0.01 * err2;
        if deno <= 0.0 {
            deno = 1.0;
        }
        let err = h.abs() * err * (1.0 / (deno * n_entries)).sqrt();

        let fac11 = err.powf(1.0 / 8.0);
        let fac = FAC_MAX_INV.max(FAC_MIN_INV.min(fac11 / SAFE));
        let mut h_new = h / fac;

        if err <= 1.0 {
            stats.accepted += 1;
            t = if last { t1 } else { t_new };
            y = y_new;
            hook(t, &mut y);
            k1 = f(t) * &y;
            stats.evaluations += 1;
            if last_rejected {
                h_new = h_new.min(h);
            }
            last_rejected = false;
            stats.last_h = if last { stats.last_h.max(h) } else { h };
        } else {
            h_new = h / FAC_MIN_INV.min(fac11 / SAFE);
            stats.rejected += 1;
            last_rejected = true;
        }
        h = h_new;
    }
    if stats.last_h == 0.0 {
        stats.last_h = h;
    }
    Ok((y, stats))
}

fn initial_step(y: &RMat, k1: &RMat, span: f64, opts: &Options) -> f64 {
    let n = y.len() as f64;
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for i in 0..y.len() {
        let sk = opts.atol + opts.rtol * y[i].abs();
        d0 += (y[i] / sk).powi(2);
        d1 += (k1[i] / sk).powi(2);
    }
    let (d0, d1) = ((d0 / n).sqrt(), (d1 / n).sqrt());
    let h = if d0 <= 1e-10 || d1 <= 1e-10 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h.min(span)
}

const A21: f64 = 5.26001519587677318785587544488E-2;
const A31: f64 = 1.97250569845378994544595329183E-2;
const A32: f64 = 5.91751709536136983633785987549E-2;
const A41: f64 = 2.95875854768068491816892993775E-2;
const A43: f64 = 8.87627564304205475450678981324E-2;
const A51: f64 = 2.41365134159266685502369798665E-1;
const A53: f64 = -8.84549479328286085344864962717E-1;
const A54: f64 = 9.24834003261792003115737966543E-1;
const A61: f64 = 3.7037037037037037037037037037E-2;
const A64: f64 = 1.70828608729473871279604482173E-1;
const A65: f64 = 1.25467687566822425016691814123E-1;
const A71: f64 = 3.7109375E-2;
const A74: f64 = 1.70252211019544039314978060272E-1;
const A75: f64 = 6.02165389804559606850219397283E-2;
const A76: f64 = -1.7578125E-2;
const A81: f64 = 3.70920001185047927108779319836E-2;
const A84: f64 = 1.70383925712239993810214054705E-1;
const A85: f64 = 1.07262030446373284651809199168E-1;
const A86: f64 = -1.53194377486244017527936158236E-2;
const A87: f64 = 8.27378916381402288758473766002E-3;
const A91: f64 = 6.24110958716075717114429577812E-1;
const A94: f64 = -3.36089262944694129406857109825E0;
const A95: f64 = -8.68219346841726006818189891453E-1;
const A96: f64 = 2.75920996994467083049415600797E1;
const A97: f64 = 2.01540675504778934086186788979E1;
const A98: f64 = -4.34898841810699588477366255144E1;
const A101: f64 = 4.77662536438264365890433908527E-1;
const A104: f64 = -2.48811461997166764192642586468E0;
const A105: f64 = -5.90290826836842996371446475743E-1;
const A106: f64 = 2.12300514481811942347288949897E1;
const A107: f64 = 1.52792336328824235832596922938E1;
const A108: f64 = -3.32882109689848629194453265587E1;
const A109: f64 = -2.03312017085086261358222928593E-2;
const A111: f64 = -9.3714243008598732571704021658E-1;
const A114: f64 = 5.18637242884406370830023853209E0;
const A115: f64 = 1.09143734899672957818500254654E0;
const A116: f64 = -8.14978701074692612513997267357E0;
const A117: f64 = -1.85200656599969598641566180701E1;
const A118: f64 = 2.27394870993505042818970056734E1;
const A119: f64 = 2.49360555267965238987089396762E0;
const A1110: f64 = -3.0467644718982195003823669022E0;
const A121: f64 = 2.27331014751653820792359768449E0;
const A124: f64 = -1.05344954667372501984066689879E1;
const A125: f64 = -2.00087205822486249909675718444E0;
const A126: f64 = -1.79589318631187989172765950534E1;
const A127: f64 = 2.79488845294199600508499808837E1;
const A128: f64 = -2.85899827713502369474065508674E0;
const A129: f64 = -8.87285693353062954433549289258E0;
const A1210: f64 = 1.23605671757943030647266201528E1;
const A1211: f64 = 6.43392746015763530355970484046E-1;

const B1: f64 = 5.42937341165687622380535766363E-2;
const B6: f64 = 4.45031289275240888144113950566E0;
const B7: f64 = 1.89151789931450038304281599044E0;
const B8: f64 = -5.8012039600105847814672114227E0;
const B9: f64 = 3.1116436695781989440891606237E-1;
const B10: f64 = -1.52160949662516078556178806805E-1;
const B11: f64 = 2.01365400804030348374776537501E-1;
const B12: f64 = 4.47106157277725905176885569043E-2;

const BHH1: f64 = 0.244094488188976377952755905512E+00;
const BHH2: f64 = 0.733846688281611857341361741547E+00;
const BHH3: f64 = 0.220588235294117647058823529412E-01;

const C2: f64 = 0.526001519587677318785587544488E-01;
const C3: f64 = 0.789002279381515978178381316732E-01;
const C4: f64 = 0.118350341907227396726757197510E+00;
const C5: f64 = 0.281649658092772603273242802490E+00;
const C6: f64 = 0.333333333333333333333333333333E+00;
const C7: f64 = 0.25E+00;
const C8: f64 = 0.307692307692307692307692307692E+00;
const C9: f64 = 0.651282051282051282051282051282E+00;
const C10: f64 = 0.6E+00;
const C11: f64 = 0.857142857142857142857142857142E+00;

const ER1: f64 = 0.1312004499419488073250102996E-01;
const ER6: f64 = -0.1225156446376204440720569753E+01;
const ER7: f64 = -0.4957589496572501915214079952E+00;
const ER8: f64 = 0.1664377182454986536961530415E+01;
const ER9: f64 = -0.3503288487499736816886487290E+00;
const ER10: f64 = 0.3341791187130174790297318841E+00;
const ER11: f64 = 0.8192320648511571246570742613E-01;
const ER12: f64 = -0.2235530786388629525884427845E-01;
