//! Dormand-Prince 8(5,3) explicit Runge-Kutta integrator with adaptive step
//! control, for complex state vectors. Each complex entry counts as two real
//! components in the error norm.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Upper bound on the step size (seconds); `f64::INFINITY` for none.
    pub h_max: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            rtol: 1e-8,
            atol: 1e-10,
            max_steps: 50_000_000,
            h_max: f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

const SAFE: f64 = 0.9;
const FAC1: f64 = 0.333;
const FAC2: f64 = 6.0;
const EXPO1: f64 = 1.0 / 8.0;

/// Integrator state: workspace for the twelve stages plus the FSAL derivative.
pub struct Dop853 {
    n: usize,
    k: [Vec<Complex64>; 12],
    ystage: Vec<Complex64>,
    ynew: Vec<Complex64>,
    /// Derivative at the current point (valid once `primed`).
    f0: Vec<Complex64>,
    primed: bool,
    /// Proposed next step.
    h: f64,
    last_rejected: bool,
    pub control: StepControl,
    pub stats: Stats,
}

impl Dop853 {
    pub fn new(n: usize, control: StepControl) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); n];
        Dop853 {
            n,
            k: std::array::from_fn(|_| z.clone()),
            ystage: z.clone(),
            ynew: z.clone(),
            f0: z,
            primed: false,
            h: 0.0,
            last_rejected: false,
            control,
            stats: Stats::default(),
        }
    }

    /// Drops the cached derivative, e.g. after the state was modified externally.
    pub fn invalidate(&mut self) {
        self.primed = false;
    }

    fn norm_scaled(&self, v: &[Complex64], y: &[Complex64]) -> f64 {
        let c = self.control;
        let mut s = 0.0;
        for (a, b) in v.iter().zip(y) {
            let sre = c.atol + c.rtol * b.re.abs();
            let sim = c.atol + c.rtol * b.im.abs();
            s += (a.re / sre).powi(2) + (a.im / sim).powi(2);
        }
        (s / (2 * self.n) as f64).sqrt()
    }

    fn initial_step<F>(&mut self, f: &mut F, t: f64, y: &[Complex64], span: f64) -> f64
    where
        F: FnMut(f64, &[Complex64], &mut [Complex64]),
    {
        let d0 = self.norm_scaled(y, y);
        let d1 = self.norm_scaled(&self.f0, y);
        let mut h0 = if d0 < 1e-10 || d1 < 1e-10 {
            1e-6 * span
        } else {
            0.01 * d0 / d1
        };
        h0 = h0.min(self.control.h_max).min(span);
        for i in 0..self.n {
            self.ystage[i] = y[i] + self.f0[i] * h0;
        }
        f(t + h0, &self.ystage, &mut self.k[1]);
        self.stats.evaluations += 1;
        let diff: Vec<Complex64> = self.k[1].iter().zip(&self.f0).map(|(a, b)| (a - b) / h0).collect();
        let d2 = self.norm_scaled(&diff, y);
        let dm = d1.max(d2);
        let h1 = if dm <= 1e-15 {
            (1e-6f64).max(h0 * 1e-3)
        } else {
            (0.01 / dm).powf(1.0 / 8.0)
        };
        (100.0 * h0).min(h1).min(self.control.h_max)
    }

    /// Advances `y` from `t` to `t_end` in place.
    pub fn integrate<F>(&mut self, f: &mut F, t: f64, t_end: f64, y: &mut [Complex64]) -> Result<()>
    where
        F: FnMut(f64, &[Complex64], &mut [Complex64]),
    {
        if t_end <= t {
            return Ok(());
        }
        let n = self.n;
        debug_assert_eq!(y.len(), n);
        if !self.primed {
            f(t, y, &mut self.f0);
            self.stats.evaluations += 1;
            self.primed = true;
        }
        if self.h <= 0.0 {
            self.h = self.initial_step(f, t, y, t_end - t);
        }
        let mut t = t;
        let mut steps = 0usize;
        loop {
            let remaining = t_end - t;
            let last = self.h >= remaining * (1.0 - 1e-12);
            let h = if last { remaining } else { self.h };
            if steps >= self.control.max_steps {
                return Err(Error::Integration {
                    t,
                    reason: "maximum number of steps reached".into(),
                });
            }
            if h.abs() <= 16.0 * f64::EPSILON * t.abs().max(1e-300) {
                return Err(Error::Integration {
                    t,
                    reason: format!("step size underflow (h = {h:e} s)"),
                });
            }
            steps += 1;

            self.stages(f, t, h, y);
            let (err, ok) = self.error_estimate(h, y);

            let fac11 = err.powf(EXPO1);
            let fac = (fac11 / SAFE).clamp(1.0 / FAC2, 1.0 / FAC1);
            if ok {
                self.stats.accepted += 1;
                t = if last { t_end } else { t + h };
                y.copy_from_slice(&self.ynew);
                // FSAL: derivative at the new point.
                f(t, y, &mut self.f0);
                self.stats.evaluations += 1;
                let mut h_new = h / fac;
                if self.last_rejected {
                    h_new = h_new.min(h);
                }
                self.last_rejected = false;
                if !last || h_new < self.h {
                    self.h = h_new.min(self.control.h_max);
                }
                if last {
                    return Ok(());
                }
            } else {
                self.stats.rejected += 1;
                self.last_rejected = true;
                self.h = h / (1.0 / FAC1).min(fac11 / SAFE);
            }
        }
    }

    fn stages<F>(&mut self, f: &mut F, t: f64, h: f64, y: &[Complex64])
    where
        F: FnMut(f64, &[Complex64], &mut [Complex64]),
    {
        self.k[0].copy_from_slice(&self.f0);
        for s in 1..12 {
            let row = &A[s];
            for i in 0..self.n {
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, &a) in row.iter().enumerate().take(s) {
                    if a != 0.0 {
                        acc += self.k[j][i] * a;
                    }
                }
                self.ystage[i] = y[i] + acc * h;
            }
            f(t + C[s] * h, &self.ystage, &mut self.k[s]);
        }
        self.stats.evaluations += 11;
        for i in 0..self.n {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, &b) in B.iter().enumerate() {
                if b != 0.0 {
                    acc += self.k[j][i] * b;
                }
            }
            self.ynew[i] = y[i] + acc * h;
        }
    }

    /// Combined 5th/3rd-order error estimate; returns (err, accepted).
    fn error_estimate(&self, h: f64, y: &[Complex64]) -> (f64, bool) {
        let c = self.control;
        let mut err = 0.0;
        let mut err2 = 0.0;
        for i in 0..self.n {
            let mut bsum = Complex64::new(0.0, 0.0);
            let mut esum = Complex64::new(0.0, 0.0);
            for j in 0..12 {
                if B[j] != 0.0 {
                    bsum += self.k[j][i] * B[j];
                }
                if ER[j] != 0.0 {
                    esum += self.k[j][i] * ER[j];
                }
            }
            let e2 = bsum - self.k[0][i] * BHH[0] - self.k[8][i] * BHH[1] - self.k[11][i] * BHH[2];
            let (a, b) = (y[i], self.ynew[i]);
            let sre = c.atol + c.rtol * a.re.abs().max(b.re.abs());
            let sim = c.atol + c.rtol * a.im.abs().max(b.im.abs());
            err2 += (e2.re / sre).powi(2) + (e2.im / sim).powi(2);
            err += (esum.re / sre).powi(2) + (esum.im / sim).powi(2);
        }
        let mut deno = err + 0.01 * err2;
        if deno <= 0.0 {
            deno = 1.0;
        }
        let err = h.abs() * err * (1.0 / (deno * (2 * self.n) as f64)).sqrt();
        (err, err <= 1.0)
    }
}

const C: [f64; 12] = [
    0.0,
    0.526001519587677318785587544488E-01,
    0.789002279381515978178381316732E-01,
    0.118350341907227396726757197510E+00,
    0.281649658092772603273242802490E+00,
    0.333333333333333333333333333333E+00,
    0.25E+00,
    0.307692307692307692307692307692E+00,
    0.651282051282051282051282051282E+00,
    0.6E+00,
    0.857142857142857142857142857142E+00,
    1.0,
];

#[rustfmt::skip]
const A: [[f64; 12]; 12] = [
    [0.0; 12],
    [5.26001519587677318785587544488E-2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.97250569845378994544595329183E-2, 5.91751709536136983633785987549E-2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [2.95875854768068491816892993775E-2, 0.0, 8.87627564304205475450678981324E-2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [2.41365134159266685502369798665E-1, 0.0, -8.84549479328286085344864962717E-1, 9.24834003261792003115737966543E-1, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.7037037037037037037037037037E-2, 0.0, 0.0, 1.70828608729473871279604482173E-1, 1.25467687566822425016691814123E-1, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.7109375E-2, 0.0, 0.0, 1.70252211019544039314978060272E-1, 6.02165389804559606850219397283E-2, -1.7578125E-2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.70920001185047927108779319836E-2, 0.0, 0.0, 1.70383925712239993810214054705E-1, 1.07262030446373284651809199168E-1, -1.53194377486244017527936158236E-2, 8.27378916381402288758473766002E-3, 0.0, 0.0, 0.0, 0.0, 0.0],
    [6.24110958716075717114429577812E-1, 0.0, 0.0, -3.36089262944694129406857109825E0, -8.68219346841726006818189891453E-1, 2.75920996994467083049415600797E1, 2.01540675504778934086186788979E1, -4.34898841810699588477366255144E1, 0.0, 0.0, 0.0, 0.0],
    [4.77662536438264365890433908527E-1, 0.0, 0.0, -2.48811461997166764192642586468E0, -5.90290826836842996371446475743E-1, 2.12300514481811942347288949897E1, 1.52792336328824235832596922938E1, -3.32882109689848629194453265587E1, -2.03312017085086261358222928593E-2, 0.0, 0.0, 0.0],
    [-9.3714243008598732571704021658E-1, 0.0, 0.0, 5.18637242884406370830023853209E0, 1.09143734899672957818500254654E0, -8.14978701074692612513997267357E0, -1.85200656599969598641566180701E1, 2.27394870993505042818970056734E1, 2.49360555267965238987089396762E0, -3.0467644718982195003823669022E0, 0.0, 0.0],
    [2.27331014751653820792359768449E0, 0.0, 0.0, -1.05344954667372501984066689879E1, -2.00087205822486249909675718444E0, -1.79589318631187989172765950534E1, 2.79488845294199600508499808837E1, -2.85899827713502369474065508674E0, -8.87285693353062954433549289258E0, 1.23605671757943030647266201528E1, 6.43392746015763530355970484046E-1, 0.0],
];

#[rustfmt::skip]
const B: [f64; 12] = [
    5.42937341165687622380535766363E-2, 0.0, 0.0, 0.0, 0.0,
    4.45031289275240888144113950566E0, 1.89151789931450038304281599044E0, -5.8012039600105847814672114227E0,
    3.1116436695781989440891606237E-1, -1.52160949662516078556178806805E-1, 2.01365400804030348374776537501E-1,
    4.47106157277725905176885569043E-2,
];

const BHH: [f64; 3] = [
    0.244094488188976377952755905512E+00,
    0.733846688281611857341361741547E+00,
    0.220588235294117647058823529412E-01,
];

#[rustfmt::skip]
const ER: [f64; 12] = [
    0.1312004499419488073250102996E-01, 0.0, 0.0, 0.0, 0.0,
    -0.1225156446376204440720569753E+01, -0.4957589496572501915214079952E+00, 0.1664377182454986536961530415E+01,
    -0.3503288487499736816886487290E+00, 0.3341791187130174790297318841E+00, 0.8192320648511571246570742613E-01,
    -0.2235530786388629525884427845E-01,
];
