//! Trial scoring between two supervectors.
//!
//! Dot products always sum over shared indices in increasing index order, so
//! scores are bit-identical under argument swap and agree between sparse and
//! dense storage.

use crate::error::{Error, Result};
use crate::supervector::{Storage, Supervector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScoringMethod {
    Cosine,
    InnerProduct,
}

impl ScoringMethod {
    pub fn name(self) -> &'static str {
        match self {
            ScoringMethod::Cosine => "cosine",
            ScoringMethod::InnerProduct => "inner",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "cosine" => Ok(ScoringMethod::Cosine),
            "inner" | "inner_product" => Ok(ScoringMethod::InnerProduct),
            other => Err(Error::Config(format!("unknown scoring method {other:?} (cosine|inner)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialScore {
    pub value: f64,
    pub method: ScoringMethod,
}

fn check_lengths(x: &Supervector, y: &Supervector) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: y.len() });
    }
    Ok(())
}

fn sparse_sparse(a: &[(usize, f64)], b: &[(usize, f64)]) -> f64 {
    // Walk the shorter support, looking each index up in the longer one.
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let mut sum = 0.0;
    let mut from = 0;
    for &(i, v) in short {
        match long[from..].binary_search_by_key(&i, |&(j, _)| j) {
            Ok(p) => {
                sum += v * long[from + p].1;
                from += p + 1;
            }
            Err(p) => from += p,
        }
        if from == long.len() {
            break;
        }
    }
    sum
}

fn sparse_dense(a: &[(usize, f64)], b: &[f64]) -> f64 {
    a.iter().map(|&(i, v)| v * b[i]).sum()
}

fn raw_dot(x: &Supervector, y: &Supervector) -> f64 {
    match (x.storage(), y.storage()) {
        (Storage::Dense(a), Storage::Dense(b)) => a.iter().zip(b).map(|(p, q)| p * q).sum(),
        (Storage::Sparse(a), Storage::Sparse(b)) => sparse_sparse(a, b),
        (Storage::Sparse(a), Storage::Dense(b)) | (Storage::Dense(b), Storage::Sparse(a)) => sparse_dense(a, b),
    }
}

pub fn squared_norm(x: &Supervector) -> f64 {
    match x.storage() {
        Storage::Dense(a) => a.iter().map(|v| v * v).sum(),
        Storage::Sparse(a) => a.iter().map(|(_, v)| v * v).sum(),
    }
}

pub fn inner_product(x: &Supervector, y: &Supervector) -> Result<TrialScore> {
    check_lengths(x, y)?;
    Ok(TrialScore { value: raw_dot(x, y), method: ScoringMethod::InnerProduct })
}

pub fn cosine(x: &Supervector, y: &Supervector) -> Result<TrialScore> {
    check_lengths(x, y)?;
    let nx = squared_norm(x).sqrt();
    let ny = squared_norm(y).sqrt();
    if nx == 0.0 || ny == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(TrialScore { value: raw_dot(x, y) / (nx * ny), method: ScoringMethod::Cosine })
}

pub fn score(x: &Supervector, y: &Supervector, method: ScoringMethod) -> Result<TrialScore> {
    match method {
        ScoringMethod::Cosine => cosine(x, y),
        ScoringMethod::InnerProduct => inner_product(x, y),
    }
}

/// Scales `x` to unit L2 norm.
pub fn l2_normalize(x: &Supervector) -> Result<Supervector> {
    let n = squared_norm(x).sqrt();
    if n == 0.0 {
        return Err(Error::ZeroVector);
    }
    x.scaled(1.0 / n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::supervector::ModelKind;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sparse(rng: &mut ChaCha8Rng, len: usize, nnz: usize) -> Supervector {
        let mut idx = rand::seq::index::sample(rng, len, nnz).into_vec();
        idx.sort_unstable();
        let entries = idx.into_iter().map(|i| (i, rng.random_range(0.0..1.0))).collect();
        Supervector::sparse(ModelKind::Ubsc, len, entries).unwrap()
    }

    fn dense_of(x: &Supervector) -> Supervector {
        Supervector::dense(x.kind(), x.to_dense()).unwrap()
    }

    fn dense_cosine(a: &[f64], b: &[f64]) -> f64 {
        let dot: f64 = a.iter().zip(b).map(|(p, q)| p * q).sum();
        let na: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        dot / (na * nb)
    }

    #[test]
    fn self_cosine_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_sparse(&mut rng, 500, 40);
        assert!((cosine(&x, &x).unwrap().value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_supports_are_orthogonal() {
        let a = Supervector::sparse(ModelKind::Ubsc, 8, vec![(0, 0.5), (1, 0.5), (4, 1.0)]).unwrap();
        let b = Supervector::sparse(ModelKind::Ubsc, 8, vec![(2, 1.0), (5, 0.25), (7, 0.75)]).unwrap();
        assert_eq!(cosine(&a, &b).unwrap().value, 0.0);
    }

    #[test]
    fn zero_vector_rejected() {
        let z = Supervector::sparse(ModelKind::Ubsc, 4, vec![]).unwrap();
        let a = Supervector::sparse(ModelKind::Ubsc, 4, vec![(1, 1.0)]).unwrap();
        assert!(matches!(cosine(&z, &a), Err(Error::ZeroVector)));
        assert_eq!(inner_product(&a, &z).unwrap().value, 0.0);
    }

    #[test]
    fn length_mismatch_rejected() {
        let a = Supervector::dense(ModelKind::Gmm, vec![1.0; 3]).unwrap();
        let b = Supervector::dense(ModelKind::Gmm, vec![1.0; 4]).unwrap();
        assert!(inner_product(&a, &b).is_err());
        assert!(cosine(&a, &b).is_err());
    }

    #[test]
    fn self_inner_product_is_squared_norm() {
        let x = Supervector::dense(ModelKind::Gmm, vec![3.0, -4.0, 0.0]).unwrap();
        assert_eq!(inner_product(&x, &x).unwrap().value, 25.0);
    }

    #[test]
    fn sparse_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let na = rng.random_range(1..300);
            let a = random_sparse(&mut rng, 2000, na);
            let nb = rng.random_range(1..300);
            let b = random_sparse(&mut rng, 2000, nb);
            let oracle = dense_cosine(&a.to_dense(), &b.to_dense());
            assert!((cosine(&a, &b).unwrap().value - oracle).abs() < 1e-12);
            assert!((cosine(&a, &dense_of(&b)).unwrap().value - oracle).abs() < 1e-12);
            assert!((cosine(&dense_of(&a), &dense_of(&b)).unwrap().value - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn normalized_inner_equals_cosine() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let a = random_sparse(&mut rng, 1000, 50);
            let b = random_sparse(&mut rng, 1000, 80);
            let ip = inner_product(&l2_normalize(&a).unwrap(), &l2_normalize(&b).unwrap()).unwrap().value;
            assert!((ip - cosine(&a, &b).unwrap().value).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn scores_are_symmetric(seed in any::<u64>(), na in 1usize..200, nb in 1usize..200) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_sparse(&mut rng, 400, na);
            let b = random_sparse(&mut rng, 400, nb);
            for m in [ScoringMethod::Cosine, ScoringMethod::InnerProduct] {
                prop_assert_eq!(score(&a, &b, m).unwrap().value.to_bits(), score(&b, &a, m).unwrap().value.to_bits());
                prop_assert_eq!(
                    score(&a, &dense_of(&b), m).unwrap().value.to_bits(),
                    score(&dense_of(&b), &a, m).unwrap().value.to_bits()
                );
            }
        }

        #[test]
        fn cosine_is_scale_invariant(seed in any::<u64>(), scale in 1e-3f64..1e3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_sparse(&mut rng, 300, 30);
            let b = random_sparse(&mut rng, 300, 60);
            let c0 = cosine(&a, &b).unwrap().value;
            let c1 = cosine(&a.scaled(scale).unwrap(), &b).unwrap().value;
            prop_assert!((c0 - c1).abs() <= 1e-12);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&c0));
        }

        #[test]
        fn inner_is_cosine_times_norms(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_sparse(&mut rng, 300, 30);
            let b = random_sparse(&mut rng, 300, 90);
            let ip = inner_product(&a, &b).unwrap().value;
            let via = cosine(&a, &b).unwrap().value * squared_norm(&a).sqrt() * squared_norm(&b).sqrt();
            prop_assert!((ip - via).abs() <= 1e-12 * ip.abs().max(1.0));
        }
    }
}
