//! Public benchmark scenes: band counts, class inventories and the network
//! architecture registered for each.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetName {
    IndianPines,
    Salinas,
    PaviaCentre,
    PaviaUniversity,
    Botswana,
}

impl DatasetName {
    pub const ALL: [DatasetName; 5] = [
        DatasetName::IndianPines,
        DatasetName::Salinas,
        DatasetName::PaviaCentre,
        DatasetName::PaviaUniversity,
        DatasetName::Botswana,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DatasetName::IndianPines => "indian_pines",
            DatasetName::Salinas => "salinas",
            DatasetName::PaviaCentre => "pavia_centre",
            DatasetName::PaviaUniversity => "pavia_university",
            DatasetName::Botswana => "botswana",
        }
    }

    pub fn descriptor(self) -> &'static DatasetDescriptor {
        match self {
            DatasetName::IndianPines => &INDIAN_PINES,
            DatasetName::Salinas => &SALINAS,
            DatasetName::PaviaCentre => &PAVIA_CENTRE,
            DatasetName::PaviaUniversity => &PAVIA_UNIVERSITY,
            DatasetName::Botswana => &BOTSWANA,
        }
    }
}

impl fmt::Display for DatasetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DatasetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_lowercase().replace(['-', ' '], "_");
        match key.as_str() {
            "indian_pines" | "indianpines" | "inp" => Ok(DatasetName::IndianPines),
            "salinas" | "sal" => Ok(DatasetName::Salinas),
            "pavia_centre" | "pavia_center" | "paviacentre" | "pac" => Ok(DatasetName::PaviaCentre),
            "pavia_university" | "paviauniversity" | "pavia_u" | "pau" => {
                Ok(DatasetName::PaviaUniversity)
            }
            "botswana" | "bot" => Ok(DatasetName::Botswana),
            _ => Err(Error::Config(format!(
                "unknown dataset {s:?}; expected one of {}",
                DatasetName::ALL.map(|d| d.as_str()).join(", ")
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetDescriptor {
    pub name: DatasetName,
    pub bands: usize,
    pub class_names: &'static [&'static str],
    /// Full-scene labeled pixel count per class, in ground-truth label order.
    pub class_counts: &'static [usize],
    pub hidden_sizes: [usize; 4],
    /// Published overall / average accuracy, in percent.
    pub reference_oa: f64,
    pub reference_aa: f64,
}

impl DatasetDescriptor {
    pub fn num_classes(&self) -> usize {
        self.class_counts.len()
    }

    pub fn total_labeled(&self) -> usize {
        self.class_counts.iter().sum()
    }
}

pub static INDIAN_PINES: DatasetDescriptor = DatasetDescriptor {
    name: DatasetName::IndianPines,
    bands: 220,
    class_names: &[
        "alfalfa",
        "corn notill",
        "corn mintill",
        "corn",
        "grass pasture",
        "grass trees",
        "grass pasture mowed",
        "hay windrowed",
        "oats",
        "soybean notill",
        "soybean mintill",
        "soybean clean",
        "wheat",
        "woods",
        "building grass trees drives",
        "stone steel towers",
    ],
    class_counts: &[
        46, 1428, 830, 237, 483, 730, 28, 478, 20, 972, 2455, 593, 205, 1265, 386, 93,
    ],
    hidden_sizes: [250, 300, 400, 300],
    reference_oa: 93.8,
    reference_aa: 96.0,
};

pub static SALINAS: DatasetDescriptor = DatasetDescriptor {
    name: DatasetName::Salinas,
    bands: 224,
    class_names: &[
        "broccoli green weeds 1",
        "broccoli green weeds 2",
        "fallow",
        "fallow rough plow",
        "fallow smooth",
        "stubble",
        "celery",
        "grapes untrained",
        "soil vineyard develop",
        "corn senesced green weeds",
        "lettuce romaine 4wk",
        "lettuce romaine 5wk",
        "lettuce romaine 6wk",
        "lettuce romaine 7wk",
        "vineyard untrained",
        "vineyard vertical trellis",
    ],
    class_counts: &[
        2009, 3726, 1976, 1394, 2678, 3959, 3579, 11271, 6203, 3278, 1068, 1927, 916, 1070, 7268,
        1807,
    ],
    hidden_sizes: [250, 300, 400, 200],
    reference_oa: 95.7,
    reference_aa: 98.3,
};

pub static PAVIA_CENTRE: DatasetDescriptor = DatasetDescriptor {
    name: DatasetName::PaviaCentre,
    bands: 102,
    class_names: &[
        "water",
        "trees",
        "asphalt",
        "self-blocking bricks",
        "bitumen",
        "tiles",
        "shadows",
        "meadows",
        "bare soil",
    ],
    class_counts: &[65971, 7598, 3090, 2685, 6584, 9248, 7287, 42826, 2863],
    hidden_sizes: [250, 300, 400, 200],
    reference_oa: 99.2,
    reference_aa: 98.3,
};

pub static PAVIA_UNIVERSITY: DatasetDescriptor = DatasetDescriptor {
    name: DatasetName::PaviaUniversity,
    bands: 103,
    class_names: &[
        "asphalt",
        "meadows",
        "gravel",
        "trees",
        "painted metal sheets",
        "bare soil",
        "bitumen",
        "self-blocking bricks",
        "shadows",
    ],
    class_counts: &[6631, 18649, 2099, 3064, 1345, 5029, 1330, 3682, 947],
    hidden_sizes: [250, 300, 400, 200],
    reference_oa: 96.7,
    reference_aa: 96.4,
};

pub static BOTSWANA: DatasetDescriptor = DatasetDescriptor {
    name: DatasetName::Botswana,
    bands: 145,
    class_names: &[
        "water",
        "hippo grass",
        "floodplain grasses 1",
        "floodplain grasses 2",
        "reeds 1",
        "riparian",
        "firescar 2",
        "island interior",
        "acacia woodlands",
        "acacia shrublands",
        "acacia grasslands",
        "short mopane",
        "mixed mopane",
        "exposed soils",
    ],
    class_counts: &[
        270, 101, 251, 215, 269, 269, 259, 203, 314, 248, 305, 181, 268, 95,
    ],
    hidden_sizes: [250, 300, 400, 64],
    reference_oa: 98.3,
    reference_aa: 98.6,
};
