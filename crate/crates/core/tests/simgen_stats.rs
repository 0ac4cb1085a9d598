//! Distributional checks on the synthetic scenes.

use atd_core::simgen::{crack_length, gen_crack, gen_hotspot, CRACK_MEAN, CRACK_VARIANCE, IMAGES};

#[test]
fn crack_values_have_the_configured_mean_and_variance() {
    let mut vals = Vec::new();
    for seed in 0..20 {
        let s = gen_crack(seed);
        for (i, pixels) in s.support.iter().enumerate() {
            for &(r, c) in pixels {
                vals.push(s.x2_true.get(&[i + 1, r, c]));
            }
        }
    }
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let band = 3.0 * CRACK_VARIANCE.sqrt() / n.sqrt();
    assert!((mean - CRACK_MEAN).abs() <= band, "mean {mean} outside {CRACK_MEAN} +- {band}");
    // sd of the sample variance of a normal sample is sigma^2 sqrt(2/(n-1))
    let vband = 4.0 * CRACK_VARIANCE * (2.0 / (n - 1.0)).sqrt();
    assert!((var - CRACK_VARIANCE).abs() <= vband, "variance {var} outside {CRACK_VARIANCE} +- {vband}");
}

#[test]
fn crack_grows_as_a_connected_path() {
    for seed in 0..5 {
        let s = gen_crack(seed);
        assert_eq!(s.support.len(), IMAGES);
        for (i, pixels) in s.support.iter().enumerate() {
            assert_eq!(pixels.len(), crack_length(i + 1));
            for w in pixels.windows(2) {
                let (a, b) = (w[0], w[1]);
                assert!(a.0.abs_diff(b.0) <= 1 && a.1.abs_diff(b.1) <= 1, "{a:?} -> {b:?}");
                assert_ne!(a, b);
            }
            // each image extends the previous path
            if i > 0 {
                assert_eq!(&pixels[..s.support[i - 1].len()], &s.support[i - 1][..]);
            }
            let dims = s.x2_true.dims();
            let nonzero = (1..=dims[1])
                .flat_map(|r| (1..=dims[2]).map(move |c| (r, c)))
                .filter(|&(r, c)| s.x2_true.get(&[i + 1, r, c]) != 0.0)
                .count();
            assert_eq!(nonzero, pixels.len());
        }
    }
}

#[test]
fn scenes_add_up() {
    let s = gen_crack(4);
    assert!(s.x1_true.add(&s.x2_true).distance(&s.m) < 1e-12);
    let h = gen_hotspot(4);
    assert!(h.x1_true.add(&h.x2_true).add(&h.x3_true).distance(&h.m) < 1e-12);
}
