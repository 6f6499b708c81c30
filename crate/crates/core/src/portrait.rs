//! Double-precision Filippov integration of switching systems and SVG phase
//! portraits.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::exactalg::MPoly;
use crate::sysmodel::{rational_to_f64, PlanarField, SwitchingSystem};

#[derive(Debug, thiserror::Error)]
pub enum PortraitError {
    #[error("system still has free parameters: {0:?}")]
    NotNumeric(Vec<String>),
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("empty window [{0}, {1}] x [{2}, {3}]")]
    EmptyWindow(f64, f64, f64, f64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Polynomial in `x`, `y` with f64 coefficients.
#[derive(Clone, Debug)]
struct CompiledPoly {
    terms: Vec<(f64, i32, i32)>,
}

impl CompiledPoly {
    fn new(p: &MPoly) -> Self {
        let terms = p
            .bivariate("x", "y")
            .into_iter()
            .map(|((i, j), c)| (rational_to_f64(&c.constant_term()), i as i32, j as i32))
            .collect();
        CompiledPoly { terms }
    }

    fn eval(&self, x: f64, y: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(c, i, j)| c * x.powi(i) * y.powi(j))
            .sum()
    }
}

#[derive(Clone, Debug)]
struct CompiledField {
    p: CompiledPoly,
    q: CompiledPoly,
}

impl CompiledField {
    fn new(f: &PlanarField) -> Self {
        CompiledField {
            p: CompiledPoly::new(&f.p),
            q: CompiledPoly::new(&f.q),
        }
    }

    fn eval(&self, x: f64, y: f64) -> [f64; 2] {
        [self.p.eval(x, y), self.q.eval(x, y)]
    }
}

/// A numeric switching system ready for integration.
#[derive(Clone, Debug)]
pub struct FilippovSystem {
    upper: CompiledField,
    lower: CompiledField,
}

impl FilippovSystem {
    pub fn new(sys: &SwitchingSystem) -> Result<Self, PortraitError> {
        let free = sys.parameters();
        if !free.is_empty() {
            return Err(PortraitError::NotNumeric(free));
        }
        Ok(FilippovSystem {
            upper: CompiledField::new(&sys.upper),
            lower: CompiledField::new(&sys.lower),
        })
    }

    pub fn upper(&self, x: f64, y: f64) -> [f64; 2] {
        self.upper.eval(x, y)
    }

    pub fn lower(&self, x: f64, y: f64) -> [f64; 2] {
        self.lower.eval(x, y)
    }

    /// Filippov sliding vector at `(x, 0)`, or `None` outside the sliding region.
    pub fn sliding(&self, x: f64) -> Option<f64> {
        let [pu, qu] = self.upper(x, 0.0);
        let [pl, ql] = self.lower(x, 0.0);
        if qu < 0.0 && ql > 0.0 {
            let lambda = ql / (ql - qu);
            Some(lambda * pu + (1.0 - lambda) * pl)
        } else {
            None
        }
    }

    fn rhs(&self, mode: Mode, s: [f64; 2]) -> [f64; 2] {
        match mode {
            Mode::Upper => self.upper(s[0], s[1]),
            Mode::Lower => self.lower(s[0], s[1]),
            Mode::Sliding => {
                let [pu, qu] = self.upper(s[0], 0.0);
                let [pl, ql] = self.lower(s[0], 0.0);
                let lambda = if ql == qu { 0.5 } else { ql / (ql - qu) };
                [lambda * pu + (1.0 - lambda) * pl, 0.0]
            }
        }
    }

    /// Where an orbit arriving at `(x, 0)` goes next.
    fn resolve(&self, x: f64) -> Arrival {
        let [pu, qu] = self.upper(x, 0.0);
        let [pl, ql] = self.lower(x, 0.0);
        if qu == 0.0 && ql == 0.0 {
            return if pu == 0.0 && pl == 0.0 {
                Arrival::Singular
            } else {
                Arrival::Tangent
            };
        }
        match (qu, ql) {
            (u, l) if u <= 0.0 && l <= 0.0 => Arrival::Cross(Mode::Lower),
            (u, l) if u >= 0.0 && l >= 0.0 => Arrival::Cross(Mode::Upper),
            (u, _) if u < 0.0 => Arrival::Slide,
            _ => Arrival::Escape,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Mode {
    Upper,
    Lower,
    Sliding,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Arrival {
    Cross(Mode),
    Slide,
    Escape,
    Tangent,
    Singular,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    Crossing,
    SlidingEntry,
    SlidingExit,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Event {
    pub t: f64,
    pub x: f64,
    pub kind: EventKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    /// Reached the end of the time span.
    Completed,
    /// Reached the requested number of crossings.
    CrossingLimit,
    /// Speed dropped below the tolerance, or a pseudo-equilibrium on the line.
    Singular,
    /// Arrived at an escaping point of the switching line.
    Escaping,
    /// Both normal components vanish on the switching line.
    Tangent,
    LeftBounds,
    /// The state grew past `1e10`.
    Diverged,
    StepLimit,
    StepUnderflow,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    /// `(t, x, y)` at every accepted step and every event.
    pub samples: Vec<[f64; 3]>,
    pub events: Vec<Event>,
    pub termination: Termination,
}

impl Trajectory {
    pub fn truncated(&self) -> bool {
        !matches!(
            self.termination,
            Termination::Completed | Termination::CrossingLimit | Termination::LeftBounds
        )
    }

    pub fn end(&self) -> [f64; 3] {
        *self.samples.last().expect("trajectories hold their start")
    }

    pub fn crossings(&self) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(|e| e.kind == EventKind::Crossing)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegrateOptions {
    pub t_end: f64,
    /// Used as both absolute and relative local error bound.
    pub tol: f64,
    pub h_max: f64,
    pub max_steps: usize,
    pub max_crossings: Option<usize>,
    /// `[x0, x1, y0, y1]`; leaving it stops the trajectory.
    pub bounds: Option<[f64; 4]>,
}

impl IntegrateOptions {
    pub fn new(t_end: f64, tol: f64) -> Self {
        IntegrateOptions {
            t_end,
            tol,
            h_max: 0.05,
            max_steps: 1_000_000,
            max_crossings: None,
            bounds: None,
        }
    }
}

const A: [&[f64]; 6] = [
    &[1.0 / 5.0],
    &[3.0 / 40.0, 9.0 / 40.0],
    &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
    &[
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
    ],
    &[
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
    ],
    &[
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// One Dormand-Prince 5(4) step: the fifth-order value and the error estimate.
fn dp_step(f: impl Fn([f64; 2]) -> [f64; 2], s: [f64; 2], h: f64) -> ([f64; 2], [f64; 2]) {
    let mut k = [[0.0; 2]; 7];
    k[0] = f(s);
    for (i, row) in A.iter().enumerate() {
        let mut y = s;
        for (a, kj) in row.iter().zip(&k) {
            y[0] += h * a * kj[0];
            y[1] += h * a * kj[1];
        }
        k[i + 1] = f(y);
        if i == 5 {
            let mut err = [0.0; 2];
            for (e, kj) in E.iter().zip(&k) {
                err[0] += h * e * kj[0];
                err[1] += h * e * kj[1];
            }
            return (y, err);
        }
    }
    unreachable!()
}

/// Illinois regula falsi for a sign change of `g` on `[0, h]`; `g(0)` and
/// `g(h)` must differ in sign.
fn locate(g: impl Fn(f64) -> f64, h: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, h);
    let (mut flo, mut fhi) = (g(lo), g(hi));
    let mut side = 0;
    for _ in 0..100 {
        if hi - lo <= 4.0 * f64::EPSILON * h {
            break;
        }
        let mut m = (lo * fhi - hi * flo) / (fhi - flo);
        if !(m > lo && m < hi) {
            m = 0.5 * (lo + hi);
        }
        let fm = g(m);
        if fm == 0.0 {
            return m;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = m;
            flo = fm;
            if side == -1 {
                fhi *= 0.5;
            }
            side = -1;
        } else {
            hi = m;
            fhi = fm;
            if side == 1 {
                flo *= 0.5;
            }
            side = 1;
        }
    }
    // the end on the far side of the switching line
    hi
}

/// Adaptive Filippov integration from `start` over `[0, t_end]`.
pub fn filippov_integrate(
    sys: &FilippovSystem,
    start: (f64, f64),
    t_end: f64,
    tol: f64,
) -> Result<Trajectory, PortraitError> {
    integrate_with(sys, start, &IntegrateOptions::new(t_end, tol))
}

pub fn integrate_with(
    sys: &FilippovSystem,
    start: (f64, f64),
    opts: &IntegrateOptions,
) -> Result<Trajectory, PortraitError> {
    if !(opts.tol > 0.0) {
        return Err(PortraitError::BadTolerance(opts.tol));
    }
    let mut run = Run {
        sys,
        opts,
        t: 0.0,
        s: [start.0, start.1],
        samples: vec![],
        events: vec![],
        crossings: 0,
    };
    let termination = run.go();
    Ok(Trajectory {
        samples: run.samples,
        events: run.events,
        termination,
    })
}

struct Run<'a> {
    sys: &'a FilippovSystem,
    opts: &'a IntegrateOptions,
    t: f64,
    s: [f64; 2],
    samples: Vec<[f64; 3]>,
    events: Vec<Event>,
    crossings: usize,
}

impl Run<'_> {
    fn push(&mut self) {
        self.samples.push([self.t, self.s[0], self.s[1]]);
    }

    fn event(&mut self, kind: EventKind) {
        self.events.push(Event {
            t: self.t,
            x: self.s[0],
            kind,
        });
        if kind == EventKind::Crossing {
            self.crossings += 1;
        }
    }

    /// Mode after arriving at the switching line at the current point.
    fn arrive(&mut self, from: Option<Mode>) -> Result<Mode, Termination> {
        match self.sys.resolve(self.s[0]) {
            Arrival::Cross(m) => {
                if from.is_some_and(|f| f != m) {
                    self.event(EventKind::Crossing);
                }
                Ok(m)
            }
            Arrival::Slide => {
                self.event(EventKind::SlidingEntry);
                Ok(Mode::Sliding)
            }
            Arrival::Escape => Err(Termination::Escaping),
            Arrival::Tangent => Err(Termination::Tangent),
            Arrival::Singular => Err(Termination::Singular),
        }
    }

    fn go(&mut self) -> Termination {
        self.push();
        let opts = self.opts;
        let tol = opts.tol;
        let mut mode = if self.s[1] > 0.0 {
            Mode::Upper
        } else if self.s[1] < 0.0 {
            Mode::Lower
        } else {
            match self.arrive(None) {
                Ok(m) => m,
                Err(t) => return t,
            }
        };
        let mut h = opts.h_max.min(0.01);
        for _ in 0..opts.max_steps {
            if opts.max_crossings.is_some_and(|n| self.crossings >= n) {
                return Termination::CrossingLimit;
            }
            if self.t >= opts.t_end {
                return Termination::Completed;
            }
            if let Some([x0, x1, y0, y1]) = opts.bounds {
                let [x, y] = self.s;
                if x < x0 || x > x1 || y < y0 || y > y1 {
                    return Termination::LeftBounds;
                }
            }
            if self.s[0].abs().max(self.s[1].abs()) > 1e10 {
                return Termination::Diverged;
            }
            let v = self.sys.rhs(mode, self.s);
            if v[0].hypot(v[1]) < tol {
                return Termination::Singular;
            }
            h = h.min(opts.h_max).min(opts.t_end - self.t);
            let f = |s: [f64; 2]| self.sys.rhs(mode, s);
            let (next, err) = dp_step(f, self.s, h);
            let scale = |i: usize| tol + tol * self.s[i].abs().max(next[i].abs());
            let norm = (err[0] / scale(0)).abs().max((err[1] / scale(1)).abs());
            if !norm.is_finite() || norm > 1.0 {
                h *= if norm.is_finite() {
                    (0.9 * norm.powf(-0.2)).max(0.2)
                } else {
                    0.2
                };
                if h < 1e-14 * (1.0 + self.t.abs()) {
                    return Termination::StepUnderflow;
                }
                continue;
            }
            let grow = if norm == 0.0 {
                5.0
            } else {
                (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0)
            };
            match mode {
                Mode::Upper | Mode::Lower => {
                    let sign = if mode == Mode::Upper { 1.0 } else { -1.0 };
                    if sign * next[1] > 0.0 {
                        self.t += h;
                        self.s = next;
                        self.push();
                        h *= grow;
                        continue;
                    }
                    if self.s[1] == 0.0 && h > 1e-12 {
                        // just left the line and the step dips back: shorten it
                        h *= 0.5;
                        continue;
                    }
                    let hit = if self.s[1] == 0.0 {
                        h
                    } else {
                        let s0 = self.s;
                        locate(|tau| sign * dp_step(f, s0, tau).0[1], h)
                    };
                    let at = dp_step(f, self.s, hit).0;
                    self.t += hit;
                    self.s = [at[0], 0.0];
                    self.push();
                    match self.arrive(Some(mode)) {
                        Ok(m) => mode = m,
                        Err(t) => return t,
                    }
                }
                Mode::Sliding => {
                    let margin = |x: f64| -> f64 {
                        let qu = self.sys.upper(x, 0.0)[1];
                        let ql = self.sys.lower(x, 0.0)[1];
                        (-qu).min(ql)
                    };
                    if margin(next[0]) > 0.0 {
                        if (next[0] - self.s[0]).abs() < tol * h {
                            self.t += h;
                            self.s = next;
                            self.push();
                            return Termination::Singular;
                        }
                        self.t += h;
                        self.s = next;
                        self.push();
                        h *= grow;
                        continue;
                    }
                    let s0 = self.s;
                    let hit = locate(|tau| margin(dp_step(f, s0, tau).0[0]), h);
                    let at = dp_step(f, self.s, hit).0;
                    self.t += hit;
                    self.s = [at[0], 0.0];
                    self.push();
                    self.event(EventKind::SlidingExit);
                    let qu = self.sys.upper(self.s[0], 0.0)[1];
                    let ql = self.sys.lower(self.s[0], 0.0)[1];
                    mode = if qu >= 0.0 && ql > 0.0 {
                        Mode::Upper
                    } else if ql <= 0.0 && qu < 0.0 {
                        Mode::Lower
                    } else {
                        return Termination::Escaping;
                    };
                }
            }
        }
        Termination::StepLimit
    }
}

/// Distance between `start` (on `y = 0`) and the point where the orbit next
/// arrives on the line from the same side, after two crossings.
pub fn return_proximity(
    sys: &FilippovSystem,
    x0: f64,
    tol: f64,
    t_max: f64,
) -> Result<Option<f64>, PortraitError> {
    let mut opts = IntegrateOptions::new(t_max, tol);
    opts.max_crossings = Some(2);
    let traj = integrate_with(sys, (x0, 0.0), &opts)?;
    Ok(match traj.events.as_slice() {
        [a, b, ..] if a.kind == EventKind::Crossing && b.kind == EventKind::Crossing => {
            Some((b.x - x0).abs())
        }
        _ => None,
    })
}

// ---------------------------------------------------------------------------
// rendering

#[derive(Clone, Debug, PartialEq)]
pub struct PortraitConfig {
    /// `[x0, x1, y0, y1]`.
    pub window: [f64; 4],
    pub t_end: f64,
    pub tol: f64,
    pub width: u32,
    pub markers: Vec<(f64, f64)>,
}

impl PortraitConfig {
    pub fn new(window: [f64; 4]) -> Self {
        PortraitConfig {
            window,
            t_end: 60.0,
            tol: 1e-9,
            width: 800,
            markers: vec![(-1.0, 0.0), (1.0, 0.0)],
        }
    }
}

/// `n x n` grid of seeds inside the window.
pub fn seed_grid(window: [f64; 4], n: usize) -> Vec<(f64, f64)> {
    let [x0, x1, y0, y1] = window;
    let at = |a: f64, b: f64, i: usize| a + (b - a) * (i as f64 + 0.5) / n as f64;
    (0..n)
        .flat_map(|i| (0..n).map(move |j| (at(x0, x1, i), at(y0, y1, j))))
        .collect()
}

/// Integrates every seed and returns the trajectories in seed order.
pub fn portrait_trajectories(
    sys: &FilippovSystem,
    seeds: &[(f64, f64)],
    cfg: &PortraitConfig,
) -> Result<Vec<Trajectory>, PortraitError> {
    let [x0, x1, y0, y1] = cfg.window;
    if !(x1 > x0 && y1 > y0) {
        return Err(PortraitError::EmptyWindow(x0, x1, y0, y1));
    }
    let (mx, my) = (0.5 * (x1 - x0), 0.5 * (y1 - y0));
    let mut opts = IntegrateOptions::new(cfg.t_end, cfg.tol);
    opts.bounds = Some([x0 - mx, x1 + mx, y0 - my, y1 + my]);
    opts.h_max = 0.01 * (x1 - x0).max(y1 - y0);
    opts.max_steps = 200_000;
    seeds
        .par_iter()
        .map(|&s| integrate_with(sys, s, &opts))
        .collect()
}

pub fn render_portrait(
    sys: &FilippovSystem,
    seeds: &[(f64, f64)],
    cfg: &PortraitConfig,
) -> Result<String, PortraitError> {
    let trajectories = portrait_trajectories(sys, seeds, cfg)?;
    Ok(svg(&trajectories, cfg))
}

pub fn write_portrait(
    sys: &FilippovSystem,
    seeds: &[(f64, f64)],
    cfg: &PortraitConfig,
    out: &Path,
) -> Result<(), PortraitError> {
    let text = render_portrait(sys, seeds, cfg)?;
    std::fs::write(out, text)?;
    Ok(())
}

fn svg(trajectories: &[Trajectory], cfg: &PortraitConfig) -> String {
    let [x0, x1, y0, y1] = cfg.window;
    let w = cfg.width as f64;
    let h = (w * (y1 - y0) / (x1 - x0)).round().max(1.0);
    let px = |x: f64| (x - x0) / (x1 - x0) * w;
    let py = |y: f64| (y1 - y) / (y1 - y0) * h;
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    if (y0..=y1).contains(&0.0) {
        let _ = writeln!(
            out,
            r##"<line x1="0" y1="{0:.2}" x2="{w}" y2="{0:.2}" stroke="#888888" stroke-width="1"/>"##,
            py(0.0)
        );
    }
    let _ = writeln!(
        out,
        r##"<g fill="none" stroke="#1f4e79" stroke-width="1">"##
    );
    for tr in trajectories {
        if tr.samples.len() < 2 {
            continue;
        }
        out.push_str("<polyline points=\"");
        for (i, [_, x, y]) in tr.samples.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{:.2},{:.2}", px(*x), py(*y));
        }
        out.push_str("\"/>\n");
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(out, r##"<g stroke="#c0392b" stroke-width="3">"##);
    for tr in trajectories {
        let mut entry = None;
        for e in &tr.events {
            match e.kind {
                EventKind::SlidingEntry => entry = Some(e.x),
                EventKind::SlidingExit => {
                    if let Some(a) = entry.take() {
                        let _ = writeln!(
                            out,
                            r#"<line x1="{:.2}" y1="{2:.2}" x2="{:.2}" y2="{2:.2}"/>"#,
                            px(a),
                            px(e.x),
                            py(0.0)
                        );
                    }
                }
                EventKind::Crossing => {}
            }
        }
        if let Some(a) = entry {
            let [_, x, _] = tr.end();
            let _ = writeln!(
                out,
                r#"<line x1="{:.2}" y1="{2:.2}" x2="{:.2}" y2="{2:.2}"/>"#,
                px(a),
                px(x),
                py(0.0)
            );
        }
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(out, r#"<g fill="black">"#);
    for &(mx, my) in &cfg.markers {
        let _ = writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="4"/>"#,
            px(mx),
            py(my)
        );
    }
    let _ = writeln!(out, "</g>");
    out.push_str("</svg>\n");
    out
}
