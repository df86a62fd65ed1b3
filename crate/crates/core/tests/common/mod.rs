//! Reference computations shared by the integration and acceptance tests.
//! Nothing here goes through ECDFs or cumulative tables.

#![allow(dead_code)]

use mes::{ExplanationFamily, FeatureVector};
use rand::Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, Normal};

/// Best `(family, threshold, score)` over every rule `g_i <= a` with `a`
/// drawn from the data values and `g_i(x)`, subject to `g_i(x) <= a`.
/// Ties keep the larger threshold within a family and the lower family
/// index across families. `None` when nothing scores above 0.
pub fn brute_force(
    data: &[FeatureVector],
    labels: &[bool],
    families: &[ExplanationFamily],
    x: &[f64],
) -> Option<(usize, f64, f64)> {
    let n_pos = labels.iter().filter(|l| **l).count();
    let n_neg = labels.len() - n_pos;
    let mut best: Option<(usize, f64, f64)> = None;
    for (i, fam) in families.iter().enumerate() {
        let gx = fam.eval(x).unwrap();
        let gs: Vec<f64> = data.iter().map(|d| fam.eval(d).unwrap()).collect();
        let mut family_best: Option<(f64, f64)> = None;
        for &a in gs.iter().chain([&gx]) {
            if a < gx {
                continue;
            }
            let (mut hp, mut hn) = (0usize, 0usize);
            for (g, &l) in gs.iter().zip(labels) {
                if *g <= a {
                    if l {
                        hp += 1;
                    } else {
                        hn += 1;
                    }
                }
            }
            let s = hp as f64 / n_pos as f64 - hn as f64 / n_neg as f64;
            let better = match family_best {
                None => true,
                Some((ba, bs)) => s > bs || (s == bs && a > ba),
            };
            if better {
                family_best = Some((a, s));
            }
        }
        if let Some((a, s)) = family_best {
            if s > 0.0 && best.is_none_or(|(_, _, bs)| s > bs) {
                best = Some((i, a, s));
            }
        }
    }
    best
}

pub fn phi(z: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().cdf(z)
}

/// True score of `x <= a` under `N(0, 1)` for the classifier `|x| <= 1`.
pub fn band_score(a: f64) -> f64 {
    let p1 = phi(1.0) - phi(-1.0);
    let in_band = (phi(a.clamp(-1.0, 1.0)) - phi(-1.0)).max(0.0);
    let out_band = phi(a.min(-1.0)) + (phi(a) - phi(1.0)).max(0.0);
    in_band / p1 - out_band / (1.0 - p1)
}

pub fn gaussian_vec<R: Rng>(rng: &mut R, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
}

pub fn fv(v: Vec<f64>) -> FeatureVector {
    FeatureVector::new(v).unwrap()
}

/// Rounds to one decimal so that samples collide and exercise ties.
pub fn coarse(v: Vec<f64>) -> Vec<f64> {
    v.into_iter().map(|x| (x * 10.0).round() / 10.0).collect()
}
