//! Flag parsing shared by several commands, and random Rauzy paths.

use iet_core::matrix::VisitationMatrix;
use iet_core::perm::{hyperelliptic_permutation, rauzy_move, special_permutations, LabeledPermutation, Side};
use rand::Rng;

use crate::failure::Failure;

/// Sample counts written as `1000`, `1e6` or `2.5e5`.
pub fn parse_count(s: &str) -> Result<u64, String> {
    if let Ok(n) = s.parse::<u64>() {
        return Ok(n);
    }
    match s.parse::<f64>() {
        Ok(x) if x >= 0.0 && x.fract() == 0.0 && x < 1.8e19 => Ok(x as u64),
        _ => Err(format!("{s:?} is not a non-negative integer")),
    }
}

/// `s`, `sD`, `hyperelliptic`, `left`, `right`, `pre`, or explicit rows
/// such as `1 2 3/3 2 1`.
pub fn resolve_perm(spec: &str, d: usize) -> Result<LabeledPermutation, Failure> {
    let bad = |e: iet_core::perm::PermError| Failure::usage(format!("permutation {spec:?}: {e}"));
    let spec = spec.trim();
    if spec.contains('/') {
        let pi = LabeledPermutation::parse(spec).map_err(bad)?;
        if pi.d() != d {
            return Err(Failure::usage(format!("permutation {spec:?} has {} letters, expected {d}", pi.d())));
        }
        return Ok(pi);
    }
    let (name, size) = match spec.find(|c: char| c.is_ascii_digit()) {
        Some(i) => {
            let n: usize = spec[i..].parse().map_err(|_| Failure::usage(format!("bad permutation {spec:?}")))?;
            (&spec[..i], Some(n))
        }
        None => (spec, None),
    };
    if let Some(n) = size {
        if n != d {
            return Err(Failure::usage(format!("permutation {spec:?} does not have {d} letters")));
        }
    }
    match name {
        "s" | "hyperelliptic" => hyperelliptic_permutation(d).map_err(bad),
        "left" | "L" => special_permutations(d).map(|s| s.left).map_err(bad),
        "right" | "R" => special_permutations(d).map(|s| s.right).map_err(bad),
        "pre" => special_permutations(d).map(|s| s.pre_hyperelliptic).map_err(bad),
        _ => Err(Failure::usage(format!("unknown permutation {spec:?}"))),
    }
}

/// Uniformly random path of `len` moves from `start`: its matrix and end.
pub fn random_path<R: Rng + ?Sized>(
    start: &LabeledPermutation,
    len: usize,
    rng: &mut R,
) -> (VisitationMatrix, LabeledPermutation) {
    let mut m = VisitationMatrix::identity(start.d());
    let mut pi = start.clone();
    for _ in 0..len {
        let side = if rng.gen::<bool>() { Side::TopWins } else { Side::BottomWins };
        let e = rauzy_move(&pi, side).expect("class members are irreducible");
        m.push_step(e.winner, e.loser);
        pi = e.target;
    }
    (m, pi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        assert_eq!(parse_count("1e6"), Ok(1_000_000));
        assert_eq!(parse_count("250"), Ok(250));
        assert!(parse_count("1.5").is_err());
        assert!(parse_count("-3").is_err());
    }

    #[test]
    fn named_perms() {
        assert_eq!(resolve_perm("s2", 2).unwrap(), LabeledPermutation::parse("1 2/2 1").unwrap());
        assert_eq!(resolve_perm("s", 3).unwrap(), hyperelliptic_permutation(3).unwrap());
        assert!(resolve_perm("s3", 2).is_err());
        assert!(resolve_perm("left", 3).is_err());
        assert_eq!(resolve_perm("left", 4).unwrap(), special_permutations(4).unwrap().left);
    }
}
