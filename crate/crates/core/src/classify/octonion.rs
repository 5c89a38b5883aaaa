//! Multiplication table for the seven imaginary octonion units.
//!
//! `octonion_mul(i, j)` returns `(sign, k)` with `e_i e_j = sign * e_k` for
//! `k >= 1`, and `k = 0` encoding a `sign * (-id)` contribution (so the
//! diagonal returns `(-1, 0)`).

/// table[i-1][j-1] = (sign, k)
const TABLE: [[(i8, usize); 7]; 7] = [
    [(-1, 0), (1, 3), (-1, 2), (1, 5), (-1, 4), (-1, 7), (1, 6)],
    [(-1, 3), (-1, 0), (1, 1), (1, 6), (1, 7), (-1, 4), (-1, 5)],
    [(1, 2), (-1, 1), (-1, 0), (1, 7), (-1, 6), (1, 5), (-1, 4)],
    [(-1, 5), (-1, 6), (-1, 7), (-1, 0), (1, 1), (1, 2), (1, 3)],
    [(1, 4), (-1, 7), (1, 6), (-1, 1), (-1, 0), (-1, 3), (1, 2)],
    [(1, 7), (1, 4), (-1, 5), (-1, 2), (1, 3), (-1, 0), (-1, 1)],
    [(-1, 6), (1, 5), (1, 4), (-1, 3), (-1, 2), (1, 1), (-1, 0)],
];

pub fn octonion_mul(i: usize, j: usize) -> (i8, usize) {
    assert!((1..=7).contains(&i) && (1..=7).contains(&j), "octonion units are 1..7");
    TABLE[i - 1][j - 1]
}

/// Quaternion units (the associative subalgebra spanned by the first three
/// imaginary units): `e1 e2 = e3` and cyclic.
pub fn quaternion_mul(i: usize, j: usize) -> (i8, usize) {
    assert!((1..=3).contains(&i) && (1..=3).contains(&j), "quaternion units are 1..3");
    if i == j {
        return (-1, 0);
    }
    match (i, j) {
        (1, 2) => (1, 3),
        (2, 3) => (1, 1),
        (3, 1) => (1, 2),
        (2, 1) => (-1, 3),
        (3, 2) => (-1, 1),
        (1, 3) => (-1, 2),
        _ => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_spot_values() {
        assert_eq!(octonion_mul(1, 2), (1, 3));
        assert_eq!(octonion_mul(4, 5), (1, 1));
        assert_eq!(octonion_mul(6, 6), (-1, 0));
    }

    #[test]
    fn anticommutative_off_diagonal() {
        for i in 1..=7 {
            for j in 1..=7 {
                if i == j {
                    assert_eq!(octonion_mul(i, j), (-1, 0));
                    continue;
                }
                let (s1, k1) = octonion_mul(i, j);
                let (s2, k2) = octonion_mul(j, i);
                assert_eq!(k1, k2);
                assert_eq!(s1, -s2, "e{i} e{j} must anticommute");
                assert!(k1 >= 1 && k1 <= 7);
            }
        }
    }

    #[test]
    fn closed_and_cancellative() {
        // each row and column hits every unit exactly once off the diagonal
        for i in 1..=7 {
            let mut seen = [false; 8];
            for j in 1..=7 {
                let (_, k) = octonion_mul(i, j);
                assert!(!seen[k], "row e{i} repeats e{k}");
                seen[k] = true;
            }
        }
        for j in 1..=7 {
            let mut seen = [false; 8];
            for i in 1..=7 {
                let (_, k) = octonion_mul(i, j);
                assert!(!seen[k], "column e{j} repeats e{k}");
                seen[k] = true;
            }
        }
    }

    #[test]
    fn quaternions_embed() {
        for i in 1..=3 {
            for j in 1..=3 {
                assert_eq!(quaternion_mul(i, j), octonion_mul(i, j));
            }
        }
    }
}
