//! Synthetic vehicle crops and surveillance frames.
//!
//! Crops are side-view silhouettes of three archetypes (car, jeep, truck)
//! on a road background, rendered with random pose jitter, surface shade
//! and sensor noise. Day crops are colour on a bright road; night crops are
//! dim bodies on a dark road with bright head- and tail-lights.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::dataset::{Dataset, Item, Regime};
use crate::bgseg::BoundingBox;
use crate::error::{Error, Result};
use crate::image::{quantize, to_grayscale, GrayImage, Image, RgbImage};
use crate::par::{self, Parallelism};
use crate::pnm;

pub const CROP_WIDTH: usize = 96;
pub const CROP_HEIGHT: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Part {
    Body,
    Window,
    Wheel,
    Light,
}

#[derive(Debug, Clone)]
enum Shape {
    /// Convex polygon, vertices in order.
    Poly(Vec<(f64, f64)>),
    /// Centre and radius; radius in units of box width.
    Circle(f64, f64, f64),
}

fn rect(u0: f64, v0: f64, u1: f64, v1: f64) -> Shape {
    Shape::Poly(vec![(u0, v0), (u1, v0), (u1, v1), (u0, v1)])
}

impl Shape {
    fn contains(&self, u: f64, v: f64, aspect: f64) -> bool {
        match self {
            Shape::Poly(pts) => {
                let n = pts.len();
                let mut sign = 0.0;
                for i in 0..n {
                    let (x0, y0) = pts[i];
                    let (x1, y1) = pts[(i + 1) % n];
                    let cross = (x1 - x0) * (v - y0) - (y1 - y0) * (u - x0);
                    if cross != 0.0 {
                        if sign == 0.0 {
                            sign = cross.signum();
                        } else if cross.signum() != sign {
                            return false;
                        }
                    }
                }
                true
            }
            Shape::Circle(cu, cv, r) => {
                // v is scaled so circles stay round in pixel space
                let du = u - cu;
                let dv = (v - cv) / aspect;
                du * du + dv * dv <= r * r
            }
        }
    }
}

/// Parts in painting order, in box-normalized coordinates, plus the box
/// size relative to the crop.
fn archetype(regime: Regime, label: i32) -> (Vec<(Part, Shape)>, f64, f64) {
    let name = regime.class_name(label).expect("valid label");
    match name {
        "car" => (
            vec![
                (Part::Body, rect(0.0, 0.45, 1.0, 0.76)),
                (Part::Body, Shape::Poly(vec![(0.24, 0.46), (0.36, 0.18), (0.66, 0.18), (0.80, 0.46)])),
                (Part::Window, Shape::Poly(vec![(0.30, 0.43), (0.39, 0.24), (0.63, 0.24), (0.73, 0.43)])),
                (Part::Light, rect(0.96, 0.50, 1.0, 0.58)),
                (Part::Light, rect(0.0, 0.50, 0.03, 0.58)),
                (Part::Wheel, Shape::Circle(0.20, 0.76, 0.085)),
                (Part::Wheel, Shape::Circle(0.80, 0.76, 0.085)),
            ],
            0.90,
            0.55,
        ),
        "jeep" => (
            vec![
                (Part::Body, rect(0.0, 0.34, 1.0, 0.78)),
                (Part::Body, Shape::Poly(vec![(0.06, 0.36), (0.12, 0.04), (0.84, 0.04), (0.88, 0.36)])),
                (Part::Window, Shape::Poly(vec![(0.15, 0.32), (0.19, 0.10), (0.48, 0.10), (0.48, 0.32)])),
                (Part::Window, Shape::Poly(vec![(0.53, 0.32), (0.53, 0.10), (0.79, 0.10), (0.82, 0.32)])),
                (Part::Light, rect(0.95, 0.40, 1.0, 0.50)),
                (Part::Light, rect(0.0, 0.40, 0.03, 0.50)),
                (Part::Wheel, rect(0.0, 0.38, 0.05, 0.66)),
                (Part::Wheel, Shape::Circle(0.20, 0.78, 0.12)),
                (Part::Wheel, Shape::Circle(0.80, 0.78, 0.12)),
            ],
            0.80,
            0.72,
        ),
        _ => (
            vec![
                (Part::Body, rect(0.0, 0.0, 0.68, 0.78)),
                (Part::Body, Shape::Poly(vec![(0.71, 0.24), (0.88, 0.24), (1.0, 0.46), (1.0, 0.84), (0.71, 0.84)])),
                (Part::Wheel, rect(0.0, 0.78, 1.0, 0.85)),
                (Part::Window, Shape::Poly(vec![(0.76, 0.30), (0.86, 0.30), (0.95, 0.46), (0.76, 0.46)])),
                (Part::Light, rect(0.97, 0.60, 1.0, 0.70)),
                (Part::Light, rect(0.0, 0.66, 0.02, 0.76)),
                (Part::Wheel, Shape::Circle(0.12, 0.87, 0.065)),
                (Part::Wheel, Shape::Circle(0.28, 0.87, 0.065)),
                (Part::Wheel, Shape::Circle(0.85, 0.87, 0.065)),
            ],
            0.94,
            0.82,
        ),
    }
}

fn stream_id(regime: Regime, label: i32, index: usize) -> u64 {
    ((regime.code() as u64) << 48) | ((label as u64) << 40) | index as u64
}

/// Renders one vehicle crop. Day crops are colour, night crops grayscale.
/// The same `(seed, regime, label, index)` always yields the same image.
pub fn render_vehicle(regime: Regime, label: i32, seed: u64, index: usize) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(regime, label, index));
    let (parts, bw_frac, bh_frac) = archetype(regime, label);
    let (w, h) = (CROP_WIDTH as f64, CROP_HEIGHT as f64);

    let scale = rng.random_range(0.86..1.04);
    let bw = w * bw_frac * scale;
    let bh = h * bh_frac * scale * rng.random_range(0.95..1.05);
    let bx = rng.random_range(0.0..(w - bw).max(1.0));
    let by = (h - bh) * rng.random_range(0.55..0.95);
    let shear = rng.random_range(-0.04..0.04);
    let aspect = bh / bw;

    let day = regime == Regime::Day;
    let (bg_top, bg_bottom, noise_sigma) = if day {
        let b = rng.random_range(125.0..180.0);
        (b + rng.random_range(10.0..35.0), b, 4.0)
    } else {
        let b = rng.random_range(6.0..26.0);
        (b * 0.6, b, 3.0)
    };
    let body: [f64; 3] = if day {
        [
            rng.random_range(30.0..235.0),
            rng.random_range(30.0..235.0),
            rng.random_range(30.0..235.0),
        ]
    } else {
        [rng.random_range(36.0..72.0); 3]
    };
    let window = if day { rng.random_range(35.0..75.0) } else { rng.random_range(8.0..22.0) };
    let wheel = if day { rng.random_range(15.0..35.0) } else { rng.random_range(3.0..10.0) };
    let light = if day { None } else { Some(rng.random_range(225.0..255.0)) };
    let noise = Normal::new(0.0, noise_sigma).expect("positive sigma");

    let mut rgb = Vec::with_capacity(CROP_WIDTH * CROP_HEIGHT);
    const SS: [f64; 2] = [0.25, 0.75];
    for y in 0..CROP_HEIGHT {
        for x in 0..CROP_WIDTH {
            let mut acc = [0.0f64; 3];
            for sy in SS {
                for sx in SS {
                    let (px, py) = (x as f64 + sx, y as f64 + sy);
                    let t = py / h;
                    let bgv = bg_top * (1.0 - t) + bg_bottom * t;
                    let mut c = [bgv; 3];
                    let v = (py - by) / bh;
                    let u = (px - bx) / bw - shear * (v - 1.0);
                    for (part, shape) in &parts {
                        if shape.contains(u, v, aspect) {
                            c = match part {
                                Part::Body => body,
                                Part::Window => [window; 3],
                                Part::Wheel => [wheel; 3],
                                Part::Light => match light {
                                    Some(l) => [l; 3],
                                    None => body.map(|b| (b * 0.8 + 40.0).min(255.0)),
                                },
                            };
                        }
                    }
                    for k in 0..3 {
                        acc[k] += c[k] / 4.0;
                    }
                }
            }
            let n = noise.sample(&mut rng);
            rgb.push(acc.map(|a| quantize(a + n)));
        }
    }
    let img = RgbImage::new(CROP_WIDTH, CROP_HEIGHT, rgb).expect("fixed geometry");
    if day {
        Image::Rgb(img)
    } else {
        Image::Gray(to_grayscale(&img))
    }
}

/// `per_class` crops for each (regime, type) class, in class order.
pub fn synth_dataset(per_class: usize, seed: u64, mode: Parallelism) -> Dataset {
    let jobs: Vec<(Regime, i32, usize)> = Regime::ALL
        .iter()
        .flat_map(|&r| r.class_codes().into_iter().map(move |c| (r, c)))
        .flat_map(|(r, c)| (0..per_class).map(move |i| (r, c, i)))
        .collect();
    let items = par::map(mode, &jobs, |&(regime, label, i)| Item {
        source: format!(
            "synth:{seed}/{regime}/{}/{i:05}",
            regime.class_name(label).unwrap_or("?")
        ),
        regime,
        label,
        image: render_vehicle(regime, label, seed, i).into_gray(),
    });
    Dataset { items }
}

/// Writes a dataset tree `root/{day,night}/{class}/NNNNN.{ppm,pgm}`.
pub fn write_synth_dataset(root: &Path, per_class: usize, seed: u64) -> Result<usize> {
    let mut written = 0;
    for regime in Regime::ALL {
        for &(name, code) in regime.classes() {
            let dir = root.join(regime.name()).join(name);
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            let imgs = par::map_range(Parallelism::default(), per_class, |i| {
                render_vehicle(regime, code, seed, i)
            });
            for (i, img) in imgs.iter().enumerate() {
                match img {
                    Image::Rgb(c) => pnm::write_p6(c, dir.join(format!("{i:05}.ppm")))?,
                    Image::Gray(g) => pnm::write_p5(g, dir.join(format!("{i:05}.pgm")))?,
                }
                written += 1;
            }
        }
    }
    Ok(written)
}

/// A static textured scene crossed by a bright square after `burn_in`
/// frames. Returns the frames and the square's true bounds per frame.
pub fn moving_square_frames(
    width: usize,
    height: usize,
    frames: usize,
    burn_in: usize,
    side: usize,
    seed: u64,
) -> (Vec<GrayImage>, Vec<Option<BoundingBox>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let texture: Vec<f64> = (0..width * height)
        .map(|i| {
            let (x, y) = ((i % width) as f64, (i / width) as f64);
            70.0 + 25.0 * (x / 9.0).sin() * (y / 13.0).cos() + rng.random_range(-8.0..8.0)
        })
        .collect();
    let noise = Normal::new(0.0, 2.0).expect("positive sigma");
    let (span_x, span_y) = (width - side, height - side);
    let mut out = Vec::with_capacity(frames);
    let mut truth = Vec::with_capacity(frames);
    for t in 0..frames {
        let square = (t >= burn_in).then(|| {
            let s = t - burn_in;
            let bounce = |pos: usize, span: usize| {
                let p = pos % (2 * span);
                if p <= span {
                    p
                } else {
                    2 * span - p
                }
            };
            (bounce(2 * s + 3, span_x), bounce(s + 5, span_y))
        });
        let frame = GrayImage::from_fn(width, height, |x, y| {
            let inside = square
                .map(|(sx, sy)| x >= sx && x < sx + side && y >= sy && y < sy + side)
                .unwrap_or(false);
            let base = if inside { 210.0 } else { texture[y * width + x] };
            quantize(base + noise.sample(&mut rng))
        })
        .expect("valid geometry");
        out.push(frame);
        truth.push(square.map(|(x, y)| BoundingBox {
            x,
            y,
            w: side,
            h: side,
            area: side * side,
        }));
    }
    (out, truth)
}
