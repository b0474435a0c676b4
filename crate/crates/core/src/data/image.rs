/// Area-weighted resampling of a `src_w x src_h` greyscale image.
///
/// Each output pixel averages the input pixels it covers, weighted by the
/// exact overlap area. Everything is integer arithmetic; the final division
/// rounds half up.
pub fn rescale(src: &[u8], src_w: usize, src_h: usize, dst_w: usize, dst_h: usize) -> Vec<u8> {
    assert_eq!(src.len(), src_w * src_h, "source size");
    // In these units an output pixel spans src_w (src_h) and an input pixel
    // spans dst_w (dst_h).
    let spans = |dst: usize, src_n: usize, dst_n: usize| -> Vec<(usize, u64)> {
        let lo = dst * src_n;
        let hi = lo + src_n;
        let first = lo / dst_n;
        let last = (hi - 1) / dst_n;
        (first..=last)
            .map(|i| {
                let a = lo.max(i * dst_n);
                let b = hi.min((i + 1) * dst_n);
                (i, (b - a) as u64)
            })
            .collect()
    };
    let xs: Vec<_> = (0..dst_w).map(|x| spans(x, src_w, dst_w)).collect();
    let ys: Vec<_> = (0..dst_h).map(|y| spans(y, src_h, dst_h)).collect();
    let area = (src_w * src_h) as u64;
    let mut out = Vec::with_capacity(dst_w * dst_h);
    for ry in &ys {
        for rx in &xs {
            let mut acc = 0u64;
            for &(iy, wy) in ry {
                for &(ix, wx) in rx {
                    acc += wy * wx * src[iy * src_w + ix] as u64;
                }
            }
            out.push(((acc + area / 2) / area) as u8);
        }
    }
    out
}

/// 28x28 MNIST digit to 16x16.
pub fn rescale_16(img: &[u8]) -> Vec<u8> {
    rescale(img, 28, 28, 16, 16)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_images_are_preserved() {
        assert_eq!(rescale_16(&[0; 784]), vec![0; 256]);
        assert_eq!(rescale_16(&[255; 784]), vec![255; 256]);
        assert_eq!(rescale_16(&[77; 784]), vec![77; 256]);
    }

    /// Direct convolution oracle: box-filter every output pixel over the
    /// real-valued footprint [o * 1.75, (o + 1) * 1.75).
    fn footprint_mass(img: &[u8]) -> Vec<f64> {
        let s = 28.0 / 16.0;
        let overlap = |o: usize, i: usize| -> f64 {
            let (a, b) = (o as f64 * s, (o + 1) as f64 * s);
            ((b.min(i as f64 + 1.0)) - (a.max(i as f64))).max(0.0)
        };
        let mut out = vec![0.0; 256];
        for oy in 0..16 {
            for ox in 0..16 {
                let mut acc = 0.0;
                for iy in 0..28 {
                    for ix in 0..28 {
                        acc += overlap(oy, iy) * overlap(ox, ix) * img[iy * 28 + ix] as f64;
                    }
                }
                out[oy * 16 + ox] = acc / (s * s);
            }
        }
        out
    }

    #[test]
    fn single_pixel_spreads_to_at_most_four_outputs() {
        for (y, x) in [(0, 0), (13, 14), (3, 5), (27, 27), (6, 13)] {
            let mut img = [0u8; 784];
            img[y * 28 + x] = 255;
            let out = rescale_16(&img);
            let oracle = footprint_mass(&img);
            let touched = out.iter().filter(|&&v| v > 0).count();
            assert!(touched <= 4, "{touched} outputs lit");
            for (o, r) in out.iter().zip(&oracle) {
                assert!((*o as f64 - r).abs() <= 0.5 + 1e-9);
            }
            let mass: f64 = out.iter().map(|&v| v as f64).sum();
            let expected = 255.0 * (16.0 * 16.0) / (28.0 * 28.0);
            assert!((mass - expected).abs() <= touched as f64 * 0.5, "{mass} vs {expected}");
        }
    }

    #[test]
    fn agrees_with_oracle_on_a_gradient() {
        let img: Vec<u8> = (0..784).map(|i| ((i * 37) % 256) as u8).collect();
        let out = rescale_16(&img);
        for (o, r) in out.iter().zip(footprint_mass(&img)) {
            assert!((*o as f64 - r).abs() <= 0.5 + 1e-9);
        }
    }
}
