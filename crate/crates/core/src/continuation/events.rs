use faer::c64;
use serde::{Deserialize, Serialize};

use super::{count_unstable, physical_eigs, correct, Branch, ContinuationOptions, Hyperplane};
use crate::problems::ProblemDef;
use crate::stability::{leading_eigs, EigOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Fold,
    Hopf,
    /// Real eigenvalue crossing without a turning point.
    Pitchfork,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Fold => "fold",
            EventKind::Hopf => "hopf",
            EventKind::Pitchfork => "pitchfork",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    #[serde(rename = "type")]
    pub kind: EventKind,
    pub mu: f64,
    pub interval: [f64; 2],
    /// Bracketing branch indices.
    pub indices: [usize; 2],
    /// `|Im lambda|` of the crossing pair (Hopf only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub imag: Option<f64>,
    pub refined: bool,
    /// Whether the bracket carries a change in the unstable count.
    #[serde(skip)]
    pub count_bracket: bool,
}

fn complex_unstable(eigs: &[c64], zero_tol: f64, imag_tol: f64) -> usize {
    eigs.iter().filter(|z| z.re > zero_tol && z.im.abs() > imag_tol).count()
}

/// `|Im|` of the complex eigenvalue nearest the imaginary axis.
fn crossing_imag(eigs: &[c64], imag_tol: f64) -> Option<f64> {
    eigs.iter()
        .filter(|z| z.im.abs() > imag_tol)
        .min_by(|a, b| a.re.abs().total_cmp(&b.re.abs()))
        .map(|z| z.im.abs())
}

/// Tags folds and eigenvalue crossings on `branch` and returns unrefined events.
pub fn detect_events(branch: &mut Branch, opts: &ContinuationOptions) -> Vec<Event> {
    let (zt, it) = (opts.stability_zero_tol, opts.imag_tol);
    let pts = &mut branch.points;
    for p in pts.iter_mut() {
        p.tags.clear();
    }
    let n = pts.len();
    let mut events = Vec::new();

    let mut folds = Vec::new();
    for i in 1..n.saturating_sub(1) {
        if (pts[i + 1].mu - pts[i].mu) * (pts[i].mu - pts[i - 1].mu) < 0.0 {
            folds.push(i);
        }
    }

    let mut fold_brackets: Vec<Option<usize>> = vec![None; folds.len()];
    for i in 1..n {
        let (a, b) = (&pts[i - 1], &pts[i]);
        if a.leading_eigs.is_empty() || b.leading_eigs.is_empty() {
            continue;
        }
        let d_total = b.n_unstable as i64 - a.n_unstable as i64;
        if d_total == 0 {
            continue;
        }
        let d_cplx = complex_unstable(&b.leading_eigs, zt, it) as i64 - complex_unstable(&a.leading_eigs, zt, it) as i64;
        if d_cplx != 0 && d_cplx.signum() == d_total.signum() {
            events.push(Event {
                kind: EventKind::Hopf,
                mu: 0.5 * (a.mu + b.mu),
                interval: [a.mu.min(b.mu), a.mu.max(b.mu)],
                indices: [i - 1, i],
                imag: crossing_imag(&b.leading_eigs, it).or(crossing_imag(&a.leading_eigs, it)),
                refined: false,
                count_bracket: true,
            });
        } else if let Some(f) = folds.iter().position(|&k| k == i - 1 || k == i) {
            fold_brackets[f].get_or_insert(i);
        } else {
            events.push(Event {
                kind: EventKind::Pitchfork,
                mu: 0.5 * (a.mu + b.mu),
                interval: [a.mu.min(b.mu), a.mu.max(b.mu)],
                indices: [i - 1, i],
                imag: None,
                refined: false,
                count_bracket: true,
            });
        }
    }

    for (f, &i) in folds.iter().enumerate() {
        let (s0, s1, s2) = (pts[i - 1].s, pts[i].s, pts[i + 1].s);
        let (m0, m1, m2) = (pts[i - 1].mu, pts[i].mu, pts[i + 1].mu);
        let lo = m0.min(m1).min(m2);
        let hi = m0.max(m1).max(m2);
        // Vertex of the parabola through the three (s, mu) samples.
        let d1 = (m1 - m0) / (s1 - s0);
        let d2 = (m2 - m1) / (s2 - s1);
        let curv = (d2 - d1) / (s2 - s0);
        let vertex = if curv != 0.0 {
            let sv = 0.5 * (s0 + s1) - d1 / (2.0 * curv);
            m0 + d1 * (sv - s0) + curv * (sv - s0) * (sv - s1)
        } else {
            m1
        };
        let (indices, count_bracket) = match fold_brackets[f] {
            Some(j) => ([j - 1, j], true),
            None => ([i - 1, i + 1], false),
        };
        events.push(Event {
            kind: EventKind::Fold,
            mu: vertex.clamp(lo, hi),
            interval: [lo, hi],
            indices,
            imag: None,
            refined: false,
            count_bracket,
        });
    }

    // Folds are tagged at the turning point, crossings at the end of their bracket.
    for e in events.iter().filter(|e| e.kind != EventKind::Fold) {
        pts[e.indices[1]].tags.push(e.kind);
    }
    for &i in &folds {
        pts[i].tags.push(EventKind::Fold);
    }
    events.sort_by_key(|e| e.indices[0]);
    events
}

/// Narrows count-bracketed events by bisection. Midpoints are corrected on the
/// hyperplane through the chord midpoint orthogonal to the chord.
pub fn refine_events(problem: &ProblemDef, branch: &Branch, events: &mut [Event], opts: &ContinuationOptions, eig: &EigOptions) {
    let (zt, it) = (opts.stability_zero_tol, opts.imag_tol);
    let key = |kind: EventKind, eigs: &[c64]| match kind {
        EventKind::Hopf => complex_unstable(eigs, zt, it),
        _ => count_unstable(eigs, zt),
    };
    for e in events.iter_mut().filter(|e| e.count_bracket) {
        let (pa, pb) = (&branch.points[e.indices[0]], &branch.points[e.indices[1]]);
        let mut a = (pa.weights.clone(), pa.mu, problem.values(&pa.weights), pa.leading_eigs.clone());
        let mut b = (pb.weights.clone(), pb.mu, problem.values(&pb.weights), pb.leading_eigs.clone());
        let ka = key(e.kind, &a.3);
        for _ in 0..opts.max_bisections {
            if (a.1 - b.1).abs() <= opts.event_mu_tol {
                break;
            }
            let du = &b.2 - &a.2;
            let dmu = b.1 - a.1;
            let len = (du.squared_norm_l2() + dmu * dmu).sqrt();
            let plane = Hyperplane {
                anchor_u: faer::Scale(0.5) * (&a.2 + &b.2),
                anchor_mu: 0.5 * (a.1 + b.1),
                normal_u: du / len,
                normal_mu: dmu / len,
                offset: 0.0,
            };
            let w0 = faer::Scale(0.5) * (&a.0 + &b.0);
            let Ok(Some(c)) = correct(problem, &w0, plane.anchor_mu, &plane, &opts.corrector()) else {
                log::warn!("event bisection: corrector failed near mu = {}", plane.anchor_mu);
                break;
            };
            let Ok(s) = leading_eigs(problem, &c.weights, c.mu, eig) else {
                log::warn!("event bisection: eigensolve failed near mu = {}", c.mu);
                break;
            };
            let mid = (problem.values(&c.weights), physical_eigs(&s));
            let next = (c.weights, c.mu, mid.0, mid.1);
            if key(e.kind, &next.3) == ka {
                a = next;
            } else {
                b = next;
            }
        }
        e.mu = 0.5 * (a.1 + b.1);
        e.interval = [a.1.min(b.1), a.1.max(b.1)];
        e.refined = (a.1 - b.1).abs() <= opts.event_mu_tol;
        if e.kind == EventKind::Hopf {
            e.imag = crossing_imag(&b.3, it).or(crossing_imag(&a.3, it)).or(e.imag);
        }
    }
}
