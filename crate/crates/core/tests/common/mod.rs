#![allow(dead_code)]

use std::path::Path;

use hsifc::data::{write_envi_cube, write_label_raster, LabelRaster, PixelDataset, SpectralCube};
use hsifc::registry::DatasetName;
use hsifc::rng;
use rand_distr::{Distribution, Normal};

/// Reference per-class (correct, test total) pairs, in registry class order.
pub fn reference_table(name: DatasetName) -> &'static [(u64, u64)] {
    match name {
        DatasetName::IndianPines => &[
            (10, 10),
            (266, 286),
            (142, 166),
            (46, 48),
            (95, 97),
            (144, 146),
            (6, 6),
            (96, 96),
            (4, 4),
            (185, 195),
            (446, 491),
            (117, 119),
            (40, 41),
            (244, 253),
            (68, 78),
            (19, 19),
        ],
        // Source rows for classes 4/7 and 12/16 are swapped relative to the registry.
        DatasetName::Salinas => &[
            (401, 402),
            (746, 746),
            (396, 396),
            (277, 279),
            (534, 536),
            (790, 792),
            (716, 716),
            (1967, 2255),
            (1241, 1241),
            (651, 656),
            (214, 214),
            (386, 386),
            (184, 184),
            (212, 214),
            (1290, 1454),
            (361, 362),
        ],
        DatasetName::Botswana => &[
            (54, 54),
            (21, 21),
            (51, 51),
            (43, 43),
            (48, 54),
            (52, 54),
            (52, 52),
            (41, 41),
            (62, 63),
            (49, 50),
            (60, 61),
            (37, 37),
            (54, 54),
            (19, 19),
        ],
        DatasetName::PaviaCentre => &[
            (13194, 13195),
            (1499, 1520),
            (602, 618),
            (524, 537),
            (1281, 1317),
            (1819, 1850),
            (1402, 1458),
            (8512, 8566),
            (573, 573),
        ],
        DatasetName::PaviaUniversity => &[
            (1274, 1327),
            (3679, 3730),
            (387, 420),
            (605, 613),
            (269, 269),
            (939, 1006),
            (260, 266),
            (670, 737),
            (190, 190),
        ],
    }
}

/// Confusion rows with the reference diagonal; each row's misses go to the
/// next class.
pub fn reference_confusion(name: DatasetName) -> Vec<Vec<u64>> {
    let table = reference_table(name);
    let c = table.len();
    (0..c)
        .map(|i| {
            let mut row = vec![0; c];
            row[i] = table[i].0;
            row[(i + 1) % c] += table[i].1 - table[i].0;
            row
        })
        .collect()
}

/// One-band dataset with the registered class counts.
pub fn registry_dataset(name: DatasetName) -> PixelDataset {
    let d = name.descriptor();
    let mut ds = PixelDataset::empty(1, d.num_classes() as u32);
    let mut p = 0;
    for (c, &n) in d.class_counts.iter().enumerate() {
        for _ in 0..n {
            ds.push(&[p as f64], c as u32 + 1, p).unwrap();
            p += 1;
        }
    }
    ds
}

/// Gaussian classes with unit variance; class `c` has mean `4 c` in every
/// band.
pub fn toy_dataset(bands: usize, counts: &[usize], seed: u64) -> PixelDataset {
    let mut rng = rng::seeded(seed);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let mut ds = PixelDataset::empty(bands, counts.len() as u32);
    let mut p = 0;
    for (c, &n) in counts.iter().enumerate() {
        for _ in 0..n {
            let sig: Vec<f64> = (0..bands)
                .map(|_| 4.0 * c as f64 + noise.sample(&mut rng))
                .collect();
            ds.push(&sig, c as u32 + 1, p).unwrap();
            p += 1;
        }
    }
    ds
}

/// Only band `informative` separates the classes; every other band is
/// class-independent noise.
pub fn single_informative_band(bands: usize, informative: usize, seed: u64) -> PixelDataset {
    let mut rng = rng::seeded(seed);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let mut ds = PixelDataset::empty(bands, 3);
    for p in 0..150 {
        let label = (p % 3) as u32 + 1;
        let sig: Vec<f64> = (0..bands)
            .map(|b| {
                let shift = if b == informative {
                    3.0 * label as f64
                } else {
                    0.0
                };
                shift + noise.sample(&mut rng)
            })
            .collect();
        ds.push(&sig, label, p).unwrap();
    }
    ds
}

/// A `lines x samples` scene with `classes` labeled blocks and a background
/// border; labeled pixels follow [`toy_dataset`]'s class means.
pub fn toy_scene(
    lines: usize,
    samples: usize,
    bands: usize,
    classes: u32,
    seed: u64,
) -> (SpectralCube, LabelRaster) {
    let mut rng = rng::seeded(seed);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let mut labels = vec![0u32; lines * samples];
    for l in 1..lines.saturating_sub(1) {
        for s in 0..samples {
            labels[l * samples + s] = (s * classes as usize / samples) as u32 + 1;
        }
    }
    let mut values = vec![0.0; lines * samples * bands];
    for b in 0..bands {
        for (p, &label) in labels.iter().enumerate() {
            let mean = 4.0 * label as f64;
            values[b * lines * samples + p] = (mean + noise.sample(&mut rng)) as f32 as f64;
        }
    }
    (
        SpectralCube::new(lines, samples, bands, values).unwrap(),
        LabelRaster::new(lines, samples, labels).unwrap(),
    )
}

pub fn write_scene(
    dir: &Path,
    cube: &SpectralCube,
    gt: &LabelRaster,
) -> (std::path::PathBuf, std::path::PathBuf) {
    let (c, g) = (dir.join("scene.hdr"), dir.join("scene_gt.hdr"));
    write_envi_cube(cube, &c).unwrap();
    write_label_raster(gt, &g).unwrap();
    (c, g)
}
