//! Reference implementations the library is checked against. They favour
//! obviousness over speed and share no code with the crate.

#![allow(dead_code)]

use vrtraffic::trace::PacketRecord;

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
            + recurse(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, m, fm, whole, tol, 50)
}

/// A frame as the cut-at-gap definition describes it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleFrame {
    pub members: Vec<usize>,
    pub size: u64,
    pub first_tx: u64,
}

/// Two packets share a frame iff every gap between them is below the
/// threshold; checked pairwise against the first packet of each frame.
pub fn brute_force_frames(packets: &[PacketRecord], thr: u64) -> Vec<OracleFrame> {
    let same_frame = |i: usize, j: usize| (i..j).all(|k| packets[k + 1].ts - packets[k].ts < thr);
    let mut frames: Vec<OracleFrame> = Vec::new();
    for (j, p) in packets.iter().enumerate() {
        match frames.last_mut() {
            Some(f) if same_frame(f.members[0], j) => {
                f.members.push(j);
                f.size += u64::from(p.length);
            }
            _ => frames.push(OracleFrame { members: vec![j], size: u64::from(p.length), first_tx: p.ts }),
        }
    }
    frames
}
