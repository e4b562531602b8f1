//! 3x3 census transform and the CENTRIST descriptor.

use crate::error::{Error, Result};
use crate::image::{normalize_l1, Descriptor, DescriptorKind, GrayImage};

/// Neighbour offsets in bit order, most significant bit first.
pub const NEIGHBOURS: [(isize, isize); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

/// Census codes of the interior pixels of a source image. The outer ring of
/// the source has no full neighbourhood and is dropped, so the dimensions
/// are two smaller than the source on each axis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CensusImage {
    width: usize,
    height: usize,
    codes: Vec<u8>,
}

impl CensusImage {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn codes(&self) -> &[u8] {
        &self.codes
    }

    /// The code raster as an ordinary image, for chaining and inspection.
    pub fn to_gray(&self) -> GrayImage {
        GrayImage::new(self.width, self.height, self.codes.clone())
            .expect("census image geometry is valid")
    }
}

/// Bit k of a pixel's code is set iff the pixel is greater than or equal to
/// its k-th neighbour.
pub fn census_transform(img: &GrayImage) -> Result<CensusImage> {
    let (w, h) = (img.width(), img.height());
    if w < 3 || h < 3 {
        return Err(Error::TooSmall(format!(
            "census transform needs at least 3x3, got {w}x{h}"
        )));
    }
    let px = img.pixels();
    let (ow, oh) = (w - 2, h - 2);
    let mut codes = Vec::with_capacity(ow * oh);
    for y in 1..h - 1 {
        let above = &px[(y - 1) * w..y * w];
        let row = &px[y * w..(y + 1) * w];
        let below = &px[(y + 1) * w..(y + 2) * w];
        for x in 1..w - 1 {
            let c = row[x];
            let code = ((c >= above[x - 1]) as u8) << 7
                | ((c >= above[x]) as u8) << 6
                | ((c >= above[x + 1]) as u8) << 5
                | ((c >= row[x - 1]) as u8) << 4
                | ((c >= row[x + 1]) as u8) << 3
                | ((c >= below[x - 1]) as u8) << 2
                | ((c >= below[x]) as u8) << 1
                | (c >= below[x + 1]) as u8;
            codes.push(code);
        }
    }
    Ok(CensusImage {
        width: ow,
        height: oh,
        codes,
    })
}

/// 256-bin histogram of census codes.
pub fn centrist(ct: &CensusImage, normalize: bool) -> Result<Descriptor> {
    if ct.codes.is_empty() {
        return Err(Error::InvalidParameter("empty census image".into()));
    }
    let mut hist = vec![0.0; 256];
    for &c in &ct.codes {
        hist[c as usize] += 1.0;
    }
    if normalize {
        normalize_l1(&mut hist);
    }
    Ok(Descriptor::new(hist, DescriptorKind::Centrist))
}

/// Census transform followed by the CENTRIST histogram.
pub fn centrist_of(img: &GrayImage, normalize: bool) -> Result<Descriptor> {
    centrist(&census_transform(img)?, normalize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Per-pixel comparator, written independently of the unrolled kernel.
    fn oracle(img: &GrayImage) -> Vec<u8> {
        let mut out = Vec::new();
        for y in 1..img.height() - 1 {
            for x in 1..img.width() - 1 {
                let centre = img.get(x, y);
                let mut bits = String::new();
                for dy in -1i32..=1 {
                    for dx in -1i32..=1 {
                        if dx == 0 && dy == 0 {
                            continue;
                        }
                        let n = img.get((x as i32 + dx) as usize, (y as i32 + dy) as usize);
                        bits.push(if centre >= n { '1' } else { '0' });
                    }
                }
                out.push(u8::from_str_radix(&bits, 2).unwrap());
            }
        }
        out
    }

    fn worked_example() -> GrayImage {
        GrayImage::new(3, 3, vec![26, 75, 65, 26, 46, 22, 26, 40, 65]).unwrap()
    }

    #[test]
    fn worked_example_is_158() {
        let ct = census_transform(&worked_example()).unwrap();
        assert_eq!((ct.width(), ct.height()), (1, 1));
        assert_eq!(ct.codes(), &[0b1001_1110]);
        assert_eq!(ct.codes()[0], 158);

        let hist = centrist(&ct, false).unwrap();
        assert_eq!(hist.values[158], 1.0);
        assert_eq!(hist.values.iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn constant_image_is_all_ones() {
        let img = GrayImage::filled(6, 4, 77).unwrap();
        let ct = census_transform(&img).unwrap();
        assert_eq!((ct.width(), ct.height()), (4, 2));
        assert!(ct.codes().iter().all(|&c| c == 255));
        let h = centrist(&ct, true).unwrap();
        assert_eq!(h.values[255], 1.0);
        assert_eq!(h.kind, DescriptorKind::Centrist);
    }

    #[test]
    fn rejects_small_images() {
        assert!(census_transform(&GrayImage::filled(2, 5, 0).unwrap()).is_err());
        assert!(census_transform(&GrayImage::filled(5, 2, 0).unwrap()).is_err());
    }

    #[test]
    fn matches_oracle_and_histogram_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let img = GrayImage::from_fn(10, 10, |_, _| rng.random_range(0..8u8) * 32).unwrap();
            let ct = census_transform(&img).unwrap();
            let codes = oracle(&img);
            assert_eq!(ct.codes(), codes.as_slice());
            let mut counts = vec![0.0; 256];
            for c in codes {
                counts[c as usize] += 1.0;
            }
            assert_eq!(centrist(&ct, false).unwrap().values, counts);
        }
    }

    proptest! {
        #[test]
        fn invariant_under_increasing_remap(
            w in 3usize..12,
            h in 3usize..12,
            seed in any::<u64>(),
            steps in proptest::collection::vec(1u8..=3, 256),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            // intensities below 80 keep the cumulative table under 256
            let img = GrayImage::from_fn(w, h, |_, _| rng.random_range(0..80u8)).unwrap();
            let mut lut = [0u8; 256];
            let mut acc = 0u32;
            for (i, s) in steps.iter().enumerate().take(80) {
                acc += *s as u32;
                lut[i] = acc as u8;
            }
            let a = census_transform(&img).unwrap();
            let b = census_transform(&img.map_lut(&lut)).unwrap();
            prop_assert_eq!(&a, &b);
            let n = (a.width() * a.height()) as f64;
            prop_assert_eq!(centrist(&a, false).unwrap().values.iter().sum::<f64>(), n);
        }
    }
}
