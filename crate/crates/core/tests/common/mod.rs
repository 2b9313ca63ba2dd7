#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use specfuse::fusion::DatasetInput;
use specfuse::model::{LabelMap, MergeTable, MergedClass};
use specfuse::{SpectralCube, WavelengthGrid};

/// Raw scene classes: 0 unlabeled, 1 trees, 2 meadow, 3 bare soil, 4 asphalt.
pub fn scene_merge_table() -> MergeTable {
    [
        (0, MergedClass::Unknown),
        (1, MergedClass::Vegetation),
        (2, MergedClass::Vegetation),
        (3, MergedClass::NonVegetation),
        (4, MergedClass::NonVegetation),
    ]
    .into_iter()
    .collect()
}

/// Per-pixel material parameters of a latent scene.
#[derive(Clone, Debug)]
pub struct Material {
    pub class: u32,
    pub level: f64,
    pub slope: f64,
    pub green: f64,
    pub nir: f64,
}

impl Material {
    /// Continuous reflectance at `nm`.
    pub fn reflectance(&self, nm: f64) -> f64 {
        let x = (nm - 400.0) / 500.0;
        match self.class {
            1 | 2 => {
                let green = self.green * (-((nm - 550.0) / 35.0).powi(2)).exp();
                let edge = self.nir / (1.0 + (-(nm - 715.0) / 15.0).exp());
                self.level + green + edge
            }
            _ => self.level + self.slope * x,
        }
    }
}

pub struct Scene {
    pub width: usize,
    pub height: usize,
    pub materials: Vec<Material>,
}

impl Scene {
    /// Random materials; about 3% of the pixels are left unlabeled.
    pub fn random(width: usize, height: usize, seed: u64) -> Scene {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let materials = (0..width * height)
            .map(|_| {
                let u: f64 = rng.gen();
                let class = if u < 0.03 {
                    0
                } else {
                    1 + ((u - 0.03) / 0.97 * 4.0).floor().min(3.0) as u32
                };
                match class {
                    1 | 2 => Material {
                        class,
                        level: rng.gen_range(0.02..0.06),
                        slope: 0.0,
                        green: rng.gen_range(0.03..0.08),
                        nir: rng.gen_range(0.3..0.5),
                    },
                    _ => Material {
                        class,
                        level: rng.gen_range(0.1..0.3),
                        slope: rng.gen_range(0.0..0.1),
                        green: 0.0,
                        nir: 0.0,
                    },
                }
            })
            .collect();
        Scene {
            width,
            height,
            materials,
        }
    }

    pub fn labels(&self) -> LabelMap {
        let classes = self.materials.iter().map(|m| m.class).collect();
        LabelMap::new(self.width, self.height, classes, scene_merge_table()).unwrap()
    }

    /// Samples the scene on `grid` with independent Gaussian-ish band noise.
    pub fn observe(&self, grid: &WavelengthGrid, noise: f64, seed: u64) -> SpectralCube {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (w, h) = (self.width, self.height);
        let mut data = vec![0.0f32; w * h * grid.len()];
        for (b, &nm) in grid.as_slice().iter().enumerate() {
            for p in 0..w * h {
                let e: f64 = (0..4).map(|_| rng.gen_range(-1.0..1.0)).sum::<f64>() * 0.5;
                let v = self.materials[p].reflectance(nm) + noise * e;
                data[b * w * h + p] = v.max(0.0) as f32;
            }
        }
        SpectralCube::new(w, h, grid.clone(), data).unwrap()
    }

    pub fn sensor(&self, name: &str, grid: &WavelengthGrid, noise: f64, seed: u64) -> DatasetInput {
        DatasetInput {
            name: name.to_string(),
            cube: self.observe(grid, noise, seed),
            labels: Some(self.labels()),
        }
    }
}

/// Sum of sinusoids with periods well above the sampling interval.
pub fn band_limited(width: usize, height: usize, grid: &WavelengthGrid, seed: u64) -> SpectralCube {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terms: Vec<Vec<(f64, f64, f64)>> = (0..width * height)
        .map(|_| {
            (0..3)
                .map(|_| {
                    (
                        rng.gen_range(0.05..0.3),
                        rng.gen_range(120.0..300.0),
                        rng.gen_range(0.0..std::f64::consts::TAU),
                    )
                })
                .collect()
        })
        .collect();
    SpectralCube::from_fn(width, height, grid.clone(), |b, r, c| {
        let nm = grid.as_slice()[b];
        let t = &terms[r * width + c];
        (1.0 + t.iter().map(|(a, p, ph)| a * (std::f64::consts::TAU * nm / p + ph).sin()).sum::<f64>()) as f32
    })
    .unwrap()
}

/// Strictly increasing random grid with gaps in `[min_gap, max_gap]`.
pub fn random_grid(rng: &mut ChaCha8Rng, n: usize, min_gap: f64, max_gap: f64) -> Vec<f64> {
    let mut x = rng.gen_range(350.0..450.0);
    (0..n)
        .map(|_| {
            let v = x;
            x += rng.gen_range(min_gap..max_gap);
            v
        })
        .collect()
}
