//! Reference best-mesh-error configurations, five per sensor count (all four
//! for two sensors), and the lowest mesh error (cm) of each count.
#![allow(dead_code)]

pub const BEST_MESH_CONFIGS: [&[usize]; 44] = [
    &[2, 0],
    &[7, 0],
    &[1, 0],
    &[20, 0],
    &[16, 17, 0],
    &[21, 22, 0],
    &[12, 13, 0],
    &[10, 11, 0],
    &[5, 6, 0],
    &[2, 16, 17, 0],
    &[7, 16, 17, 0],
    &[1, 16, 17, 0],
    &[7, 21, 22, 0],
    &[1, 21, 22, 0],
    &[5, 6, 21, 22, 0],
    &[5, 6, 16, 17, 0],
    &[2, 20, 16, 17, 0],
    &[1, 20, 16, 17, 0],
    &[2, 20, 21, 22, 0],
    &[7, 12, 13, 21, 22, 0],
    &[2, 10, 11, 21, 22, 0],
    &[7, 10, 11, 21, 22, 0],
    &[20, 5, 6, 16, 17, 0],
    &[7, 16, 17, 18, 19, 0],
    &[2, 20, 12, 13, 21, 22, 0],
    &[2, 20, 10, 11, 16, 17, 0],
    &[7, 20, 12, 13, 21, 22, 0],
    &[7, 20, 16, 17, 23, 24, 0],
    &[2, 20, 10, 11, 21, 22, 0],
    &[2, 10, 11, 18, 19, 21, 22, 0],
    &[2, 10, 11, 16, 17, 23, 24, 0],
    &[2, 12, 13, 21, 22, 23, 24, 0],
    &[20, 5, 6, 18, 19, 21, 22, 0],
    &[2, 10, 11, 14, 15, 16, 17, 0],
    &[2, 20, 12, 13, 18, 19, 21, 22, 0],
    &[7, 20, 12, 13, 18, 19, 21, 22, 0],
    &[2, 20, 10, 11, 18, 19, 21, 22, 0],
    &[2, 20, 12, 13, 21, 22, 23, 24, 0],
    &[7, 20, 10, 11, 18, 19, 21, 22, 0],
    &[1, 2, 20, 3, 4, 12, 13, 21, 22, 0],
    &[2, 5, 6, 12, 13, 18, 19, 21, 22, 0],
    &[1, 5, 6, 10, 11, 21, 22, 23, 24, 0],
    &[1, 5, 6, 12, 13, 18, 19, 21, 22, 0],
    &[2, 5, 6, 12, 13, 21, 22, 23, 24, 0],
];

/// (sensor count, lowest mesh error in cm, the configuration achieving it)
pub const BEST_MESH_PER_COUNT: [(usize, f64, &[usize]); 9] = [
    (2, 12.80, &[2, 0]),
    (3, 7.55, &[16, 17, 0]),
    (4, 6.03, &[2, 16, 17, 0]),
    (5, 5.59, &[5, 6, 21, 22, 0]),
    (6, 4.92, &[7, 12, 13, 21, 22, 0]),
    (7, 4.40, &[2, 20, 12, 13, 21, 22, 0]),
    (8, 3.80, &[2, 10, 11, 18, 19, 21, 22, 0]),
    (9, 3.22, &[2, 20, 12, 13, 18, 19, 21, 22, 0]),
    (10, 3.21, &[1, 2, 20, 3, 4, 12, 13, 21, 22, 0]),
];
