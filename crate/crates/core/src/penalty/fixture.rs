//! Reference dual-guidance penalty matrix over 12 head-tissue classes.

use super::{ClassSet, PenaltyMatrix, Provenance};

/// Class order of the reference matrix; also the default phantom class set.
pub const FIXTURE_CLASSES: [&str; 12] = [
    "BG", "WM", "GM", "Eyes", "CSF", "Air", "Blood", "CaB", "CoB", "Skin", "Fat", "Muscle",
];

#[rustfmt::skip]
const FIXTURE_VALUES: [[f64; 12]; 12] = [
    //  BG    WM    GM    Eyes  CSF   Air   Blood CaB   CoB   Skin  Fat   Muscle
    [0.0,  1.0,  1.0,  1.0,  1.0,  1.0,  1.0,  1.0,  1.0,  1.0,  1.0,  1.0 ], // BG
    [1.0,  0.0,  0.96, 1.0,  1.0,  1.0,  1.0,  1.0,  1.0,  1.0,  1.0,  1.0 ], // WM
    [1.0,  0.97, 0.0,  1.0,  0.91, 1.0,  1.0,  1.0,  1.0,  1.0,  1.0,  1.0 ], // GM
    [1.0,  1.0,  1.0,  0.0,  1.0,  1.0,  1.0,  1.0,  1.0,  1.0,  1.0,  1.0 ], // Eyes
    [1.0,  1.0,  0.96, 0.97, 0.0,  1.0,  0.97, 0.99, 0.93, 1.0,  1.0,  1.0 ], // CSF
    [1.0,  1.0,  1.0,  1.0,  1.0,  0.0,  1.0,  1.0,  0.98, 1.0,  1.0,  1.0 ], // Air
    [1.0,  1.0,  1.0,  1.0,  1.0,  1.0,  0.0,  1.0,  1.0,  1.0,  1.0,  1.0 ], // Blood
    [1.0,  1.0,  1.0,  1.0,  1.0,  1.0,  1.0,  0.0,  0.96, 1.0,  1.0,  0.99], // CaB
    [1.0,  1.0,  1.0,  1.0,  0.98, 0.91, 0.97, 0.84, 0.0,  1.0,  1.0,  0.97], // CoB
    [0.99, 1.0,  1.0,  1.0,  1.0,  0.99, 1.0,  1.0,  1.0,  0.0,  1.0,  1.0 ], // Skin
    [1.0,  1.0,  1.0,  0.98, 1.0,  1.0,  0.99, 1.0,  1.0,  0.94, 0.0,  0.99], // Fat
    [1.0,  1.0,  1.0,  0.96, 1.0,  0.99, 0.73, 0.99, 0.97, 0.83, 0.91, 0.0 ], // Muscle
];

/// Reference 12-class HCCM penalty matrix, values at two decimals.
pub fn figure2_fixture() -> PenaltyMatrix {
    let classes = ClassSet::new(FIXTURE_CLASSES).expect("fixture classes are valid");
    let values = FIXTURE_VALUES.iter().flatten().copied().collect();
    PenaltyMatrix::new(classes, values, Provenance::Fixture).expect("fixture matrix is valid")
}
