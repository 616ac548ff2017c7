//! Reference polynomial data, transcribed for coefficient-level comparison.
//!
//! Nothing here feeds a computation; every value is compared against
//! polynomials extracted from the contraction engine.

use serde::Serialize;

use crate::cell::TransferPoly;
use crate::rational::{rat, MPoly, RatPoly, Rational};

fn poly(terms: &[(i64, i64, [u32; 3])]) -> MPoly {
    let mut p = MPoly::zero();
    for &(n, d, e) in terms {
        p.add_term(e, rat(n, d));
    }
    p
}

/// Square cell: `F(t) = −26t / (82 + 24t²)`.
pub fn square_cell() -> TransferPoly {
    TransferPoly {
        p: RatPoly::new(vec![rat(0, 1), rat(-26, 1)]),
        q: RatPoly::new(vec![rat(82, 1), rat(0, 1), rat(24, 1)]),
    }
}

/// Reference slope of the square cell.
pub fn square_slope() -> Rational {
    rat(-13, 41)
}

/// Reference form of a bilayer system.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum PrintedSystem {
    /// `f_c = num_c / den`, with `num` indexed by `(x1, x2, x3)` class.
    Ratio {
        #[serde(serialize_with = "ser_polys")]
        num: [MPoly; 3],
        #[serde(serialize_with = "ser_poly")]
        den: MPoly,
    },
    /// Two-cycle residual polynomials `f_1 + x1 f_0`, `f_2 − x2 f_0`, `f_3 − x3 f_0`.
    Combined {
        #[serde(serialize_with = "ser_polys")]
        polys: [MPoly; 3],
    },
}

fn ser_poly<S: serde::Serializer>(p: &MPoly, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&p.to_string())
}

fn ser_polys<S: serde::Serializer>(p: &[MPoly; 3], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(3))?;
    for q in p {
        seq.serialize_element(&q.to_string())?;
    }
    seq.end()
}

/// Reference system for splitting number `g`, reduced to `(x1, x2, x3)`.
pub fn bilayer_system(g: u32) -> Option<PrintedSystem> {
    match g {
        1 => Some(PrintedSystem::Ratio {
            num: [
                poly(&[(-1, 3, [1, 0, 0]), (-1, 9, [1, 0, 0])]),
                poly(&[(1, 9, [0, 1, 0])]),
                poly(&[(1, 1, [0, 0, 0]), (1, 9, [0, 0, 1])]),
            ],
            den: poly(&[(1, 1, [0, 0, 0]), (3, 9, [0, 0, 1])]),
        }),
        2 => Some(PrintedSystem::Ratio {
            num: [
                poly(&[
                    (-2, 3, [1, 0, 0]),
                    (-2, 9, [1, 0, 0]),
                    (-4, 15, [1, 0, 1]),
                    (-4, 45, [1, 1, 0]),
                    (-4, 9, [1, 1, 0]),
                ]),
                poly(&[
                    (2, 9, [0, 1, 0]),
                    (2, 9, [2, 0, 0]),
                    (2, 45, [2, 0, 0]),
                    (2, 75, [0, 1, 1]),
                    (2, 75, [0, 1, 1]),
                    (4, 225, [0, 1, 1]),
                    (2, 225, [0, 2, 0]),
                ]),
                poly(&[
                    (1, 9, [0, 0, 0]),
                    (2, 9, [0, 0, 1]),
                    (2, 9, [2, 0, 0]),
                    (2, 15, [2, 0, 0]),
                    (4, 45, [2, 0, 0]),
                    (1, 25, [0, 0, 2]),
                    (2, 75, [0, 2, 0]),
                    (6, 225, [0, 2, 0]),
                    (12, 225, [0, 0, 2]),
                ]),
            ],
            den: poly(&[
                (1, 1, [0, 0, 0]),
                (3, 3, [2, 0, 0]),
                (1, 9, [2, 0, 0]),
                (6, 9, [0, 0, 1]),
                (3, 9, [0, 0, 2]),
                (6, 9, [0, 2, 0]),
            ]),
        }),
        3 => Some(PrintedSystem::Combined {
            polys: [
                poly(&[
                    (-3, 1, [1, 0, 0]),
                    (-37, 15, [3, 0, 0]),
                    (-2, 5, [1, 2, 0]),
                    (-8, 15, [1, 0, 1]),
                    (-4, 25, [1, 1, 1]),
                    (-14, 75, [1, 2, 0]),
                    (8, 75, [1, 0, 2]),
                    (2, 25, [1, 0, 2]),
                    (22, 25, [1, 1, 1]),
                    (3, 25, [0, 0, 3]),
                    (4, 75, [0, 3, 0]),
                    (8, 25, [0, 2, 0]),
                    (2, 1, [0, 2, 0]),
                    (2, 1, [0, 0, 1]),
                    (6, 1, [2, 0, 0]),
                ]),
                poly(&[
                    (-2, 3, [0, 0, 0]),
                    (7, 5, [2, 0, 0]),
                    (14, 75, [0, 2, 0]),
                    (6, 25, [0, 0, 1]),
                    (1, 15, [0, 0, 2]),
                    (11, 75, [0, 1, 1]),
                    (22, 75, [2, 1, 0]),
                    (4, 25, [2, 0, 1]),
                    (4, 25, [2, 1, 0]),
                    (4, 75, [0, 2, 1]),
                    (2, 25, [0, 3, 0]),
                    (1, 25, [0, 0, 3]),
                ]),
                poly(&[
                    (-8, 9, [0, 0, 0]),
                    (142, 75, [2, 0, 0]),
                    (8, 25, [0, 2, 0]),
                    (1, 3, [0, 0, 1]),
                    (13, 75, [0, 0, 2]),
                    (1, 15, [0, 0, 3]),
                    (16, 75, [2, 1, 0]),
                    (8, 25, [0, 2, 1]),
                ]),
            ],
        }),
        _ => None,
    }
}

/// Reference two-cycle location for `g = 3`.
pub const BILAYER_G3_CYCLE: [f64; 3] = [0.3020, 0.0466, 0.1754];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_slope_matches_printed_poly() {
        let sq = square_cell();
        assert_eq!(sq.p.coeff(1) / sq.q.coeff(0), square_slope());
    }

    #[test]
    fn printed_systems_exist_for_small_g() {
        for g in 1..=3 {
            assert!(bilayer_system(g).is_some());
        }
        assert!(bilayer_system(4).is_none());
        let Some(PrintedSystem::Ratio { den, .. }) = bilayer_system(1) else {
            panic!("g=1 is a ratio system");
        };
        assert_eq!(den.coeff([0, 0, 1]), rat(1, 3));
    }
}
