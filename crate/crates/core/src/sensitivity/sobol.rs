//! Unscrambled Sobol low-discrepancy points.
//!
//! Direction numbers are those of Joe & Kuo (`new-joe-kuo-6.21201`,
//! <https://web.maths.unsw.edu.au/~fkuo/sobol/>) for the first 16 dimensions.
//! Points are produced in Gray-code order and include the all-zeros point at
//! index 0.

use crate::error::{Error, Result};

const BITS: usize = 32;

/// `(degree s, coefficient a, initial m_1..m_s)` for dimensions 2..=16.
/// Dimension 1 uses `m_k = 1` for all k.
const JOE_KUO: [(u32, u32, &[u32]); 15] = [
    (1, 0, &[1]),
    (2, 1, &[1, 3]),
    (3, 1, &[1, 3, 1]),
    (3, 2, &[1, 1, 1]),
    (4, 1, &[1, 1, 3, 3]),
    (4, 4, &[1, 3, 5, 13]),
    (5, 2, &[1, 1, 5, 5, 17]),
    (5, 4, &[1, 1, 5, 5, 5]),
    (5, 7, &[1, 1, 7, 11, 19]),
    (5, 11, &[1, 1, 5, 1, 1]),
    (5, 13, &[1, 1, 1, 3, 11]),
    (5, 14, &[1, 3, 5, 5, 31]),
    (6, 1, &[1, 3, 3, 9, 7, 49]),
    (6, 13, &[1, 1, 1, 15, 21, 21]),
    (6, 16, &[1, 3, 1, 13, 27, 49]),
];

pub const MAX_DIMENSION: usize = JOE_KUO.len() + 1;

/// 32 direction integers `v_k = m_k 2^(32-k)` for one dimension (0-based).
pub fn direction_numbers(dim: usize) -> Result<[u32; BITS]> {
    if dim >= MAX_DIMENSION {
        return Err(Error::DimensionUnsupported {
            requested: dim + 1,
            max: MAX_DIMENSION,
        });
    }
    let mut v = [0u32; BITS];
    if dim == 0 {
        for (k, vk) in v.iter_mut().enumerate() {
            *vk = 1 << (BITS - 1 - k);
        }
        return Ok(v);
    }
    let (s, a, m) = JOE_KUO[dim - 1];
    let s = s as usize;
    for k in 0..s {
        v[k] = m[k] << (BITS - 1 - k);
    }
    for k in s..BITS {
        let mut x = v[k - s] ^ (v[k - s] >> s);
        for j in 1..s {
            if (a >> (s - 1 - j)) & 1 == 1 {
                x ^= v[k - j];
            }
        }
        v[k] = x;
    }
    Ok(v)
}

/// The first `n` points of the `dim`-dimensional Sobol sequence, row-major
/// (`n` rows of `dim` coordinates in `[0, 1)`).
pub fn sobol_points(dim: usize, n: usize) -> Result<Vec<Vec<f64>>> {
    if dim == 0 || n == 0 {
        return Err(Error::InvalidArgument(format!(
            "Sobol points need dim >= 1 and n >= 1, got dim={dim}, n={n}"
        )));
    }
    if n as u64 > 1u64 << BITS {
        return Err(Error::InvalidArgument(format!("at most 2^32 points, requested {n}")));
    }
    let directions = (0..dim).map(direction_numbers).collect::<Result<Vec<_>>>()?;
    let scale = 1.0 / (1u64 << BITS) as f64;
    let mut state = vec![0u32; dim];
    let mut out = Vec::with_capacity(n);
    out.push(vec![0.0; dim]);
    for i in 1..n {
        let c = (i as u64).trailing_zeros() as usize;
        for (x, v) in state.iter_mut().zip(&directions) {
            *x ^= v[c];
        }
        out.push(state.iter().map(|&x| x as f64 * scale).collect());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct evaluation: XOR of the direction numbers selected by the bits of
    /// the Gray code of `i`.
    fn gray_code_point(dirs: &[u32; BITS], i: u64) -> f64 {
        let g = i ^ (i >> 1);
        let mut x = 0u32;
        for (k, v) in dirs.iter().enumerate() {
            if (g >> k) & 1 == 1 {
                x ^= v;
            }
        }
        x as f64 / 4294967296.0
    }

    #[test]
    fn first_dimension_is_a_permutation_of_the_grid() {
        let pts = sobol_points(1, 8).unwrap();
        let mut scaled: Vec<u32> = pts.iter().map(|p| (p[0] * 8.0) as u32).collect();
        for p in &pts {
            assert_eq!(p[0] * 8.0, (p[0] * 8.0).floor());
        }
        scaled.sort();
        assert_eq!(scaled, (0..8).collect::<Vec<_>>());
        let mean = pts.iter().map(|p| p[0]).sum::<f64>() / 8.0;
        assert_eq!(mean, 7.0 / 16.0);
    }

    #[test]
    fn matches_gray_code_oracle() {
        let pts = sobol_points(2, 64).unwrap();
        let d0 = direction_numbers(0).unwrap();
        let d1 = direction_numbers(1).unwrap();
        for (i, p) in pts.iter().enumerate() {
            assert_eq!(p[0], gray_code_point(&d0, i as u64));
            assert_eq!(p[1], gray_code_point(&d1, i as u64));
        }
    }

    #[test]
    fn every_dimension_is_stratified() {
        // Each coordinate of the first 2^m points hits every cell of width 2^-m once.
        let pts = sobol_points(MAX_DIMENSION, 256).unwrap();
        for d in 0..MAX_DIMENSION {
            let mut cells: Vec<usize> = pts.iter().map(|p| (p[d] * 256.0) as usize).collect();
            cells.sort();
            assert_eq!(cells, (0..256).collect::<Vec<_>>(), "dimension {d}");
        }
    }

    #[test]
    fn known_leading_points() {
        let pts = sobol_points(3, 4).unwrap();
        assert_eq!(pts[0], vec![0.0, 0.0, 0.0]);
        assert_eq!(pts[1], vec![0.5, 0.5, 0.5]);
        assert_eq!(pts[2], vec![0.75, 0.25, 0.25]);
        assert_eq!(pts[3], vec![0.25, 0.75, 0.75]);
    }

    #[test]
    fn matches_published_table_fingerprints() {
        // Reference points (scaled by 2^32) from an independent Joe-Kuo implementation.
        let reference: [(usize, [u32; 16]); 4] = [
            (513, [2160066560, 3225419776, 1950351360, 2109734912, 4114612224, 281018368, 490733568, 1757413376, 3770679296, 1782579200, 2051014656, 1572864000, 2931818496, 3686793216, 3258974208, 1396703232]),
            (777, [2973761536, 4022337536, 700448768, 1178599424, 2730491904, 1530920960, 817889280, 3275751424, 1497366528, 1388314624, 3200253952, 2990538752, 1648361472, 2034237440, 2445279232, 2210398208]),
            (1000, [943718400, 415236096, 2227175424, 2906652672, 1203765248, 3896508416, 197132288, 3862953984, 2151677952, 297795584, 364904448, 1094713344, 692060160, 1648361472, 616562688, 1589641216]),
            (1023, [4194304, 3233808384, 2629828608, 624951296, 801112064, 1883242496, 599785472, 2654994432, 1480589312, 3653238784, 2915041280, 155189248, 557842432, 2856321024, 1556086784, 1992294400]),
        ];
        let pts = sobol_points(MAX_DIMENSION, 1024).unwrap();
        for (i, expected) in reference {
            let got: Vec<u32> = pts[i].iter().map(|x| (x * 4294967296.0) as u32).collect();
            assert_eq!(got, expected.to_vec(), "point {i}");
        }
    }

    #[test]
    fn rejects_unsupported_dimension() {
        assert!(matches!(
            sobol_points(MAX_DIMENSION + 1, 4).unwrap_err(),
            Error::DimensionUnsupported { .. }
        ));
        assert!(sobol_points(0, 4).is_err());
    }
}
