//! An annulus of fixed width expanding about the centre of a square image,
//! filtered by lower stars.

use crate::filtration::{build_lower_star, Filtration};
use crate::reduce::Decomposition;

/// Frame geometry. Pixel `(r, c)` at frame time `τ ∈ [0, 1]` has intensity
/// `|d − ρ(τ)| / d_max`, where `d` is its distance to the centre,
/// `ρ(τ) = r_start + τ (r_end − r_start)` and `d_max` is the centre-to-corner
/// distance, so intensities stay in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnulusParams {
    pub size: usize,
    pub r_start: f64,
    pub r_end: f64,
    /// Half-width of the annulus, in pixels; the sublevel set at this
    /// distance is the annulus itself.
    pub half_width: f64,
}

impl Default for AnnulusParams {
    fn default() -> Self {
        AnnulusParams { size: 9, r_start: 0.0, r_end: 5.0, half_width: 0.75 }
    }
}

impl AnnulusParams {
    fn centre(&self) -> f64 {
        (self.size as f64 - 1.0) / 2.0
    }

    fn d_max(&self) -> f64 {
        self.centre() * std::f64::consts::SQRT_2
    }

    pub fn radius(&self, tau: f64) -> f64 {
        self.r_start + tau * (self.r_end - self.r_start)
    }

    /// Grade at which the lower-star filtration contains exactly the annulus.
    pub fn threshold(&self) -> f64 {
        self.half_width / self.d_max()
    }

    pub fn image(&self, tau: f64) -> Vec<Vec<f64>> {
        let (c, rho, dm) = (self.centre(), self.radius(tau), self.d_max());
        (0..self.size)
            .map(|i| {
                (0..self.size)
                    .map(|j| {
                        let d = (i as f64 - c).hypot(j as f64 - c);
                        ((d - rho).abs() / dm).clamp(0.0, 1.0)
                    })
                    .collect()
            })
            .collect()
    }

    pub fn frame(&self, tau: f64) -> Filtration {
        build_lower_star(&self.image(tau)).expect("square images are well formed")
    }

    /// Betti numbers `(β0, β1, β2)` of the annulus at time `tau`.
    pub fn betti(&self, tau: f64) -> [usize; 3] {
        let f = self.frame(tau);
        betti_of(&f, &Decomposition::from_filtration(&f), self.threshold())
    }
}

/// Betti numbers of the sublevel set at `t`, read from a decomposition that
/// realizes `f`.
pub fn betti_of(f: &Filtration, dec: &Decomposition, t: f64) -> [usize; 3] {
    let b = dec.pairs().betti_at_grade(f.grades(), t, 2);
    [b[0], b[1], b[2]]
}

/// Evenly spaced frame times `0, 1/(n−1), …, 1` (just `0` when `n = 1`).
pub fn frame_times(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|k| k as f64 / (n - 1) as f64).collect(),
    }
}

/// `n` evenly spaced frames, generated lazily.
pub fn annulus_family(params: AnnulusParams, n: usize) -> impl Iterator<Item = Filtration> {
    frame_times(n).into_iter().map(move |t| params.frame(t))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frames_have_fixed_size() {
        let p = AnnulusParams::default();
        for f in annulus_family(p, 4) {
            assert_eq!(f.len(), 417);
            assert_eq!(f.counts_by_dim(), vec![81, 208, 128]);
        }
    }

    #[test]
    fn snapshots_show_blob_ring_and_four_arcs() {
        let p = AnnulusParams::default();
        let got: Vec<[usize; 3]> = frame_times(5).into_iter().map(|t| p.betti(t)).collect();
        assert_eq!(got, vec![[1, 0, 0], [1, 1, 0], [1, 1, 0], [1, 1, 0], [4, 0, 0]]);
    }

    #[test]
    fn intensities_are_normalized() {
        let p = AnnulusParams::default();
        for t in frame_times(7) {
            assert!(p.image(t).iter().flatten().all(|&x| (0.0..=1.0).contains(&x)));
        }
        // the centre pixel sits on the ring at τ = 0
        assert_eq!(p.image(0.0)[4][4], 0.0);
    }

    #[test]
    fn regeneration_is_identical() {
        let p = AnnulusParams::default();
        assert_eq!(p.frame(0.3).to_text(), p.frame(0.3).to_text());
    }
}
