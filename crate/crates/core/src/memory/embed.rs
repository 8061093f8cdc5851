use super::MemoryError;

/// Maps text to a fixed-size dense vector.
///
/// Implementations must be deterministic: the same text always yields the
/// same vector. One encoder is typically shared by every video worker.
pub trait Embedder: Send + Sync {
    fn dim(&self) -> usize;

    fn embed(&self, text: &str) -> Result<Vec<f64>, MemoryError>;
}

/// Hashed bag-of-words encoder.
///
/// Each lowercase whitespace token is hashed with 64-bit FNV-1a and counted in
/// bucket `hash % dim`; the count vector is then L2-normalized. Texts that
/// share words land close together, which is all the memory needs when no
/// sentence encoder is available.
#[derive(Clone, Debug)]
pub struct HashingEmbedder {
    dim: usize,
}

impl HashingEmbedder {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        HashingEmbedder { dim }
    }
}

impl Default for HashingEmbedder {
    fn default() -> Self {
        HashingEmbedder::new(384)
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(FNV_PRIME)
    })
}

impl Embedder for HashingEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, MemoryError> {
        if text.trim().is_empty() {
            return Err(MemoryError::EmptyText);
        }
        let mut v = vec![0.0; self.dim];
        for token in text.split_whitespace() {
            let bucket = fnv1a64(token.to_lowercase().as_bytes()) % self.dim as u64;
            v[bucket as usize] += 1.0;
        }
        normalize(v)
    }
}

/// Scales `v` to unit length.
pub fn normalize(mut v: Vec<f64>) -> Result<Vec<f64>, MemoryError> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(MemoryError::ZeroVector);
    }
    for x in &mut v {
        *x /= norm;
    }
    Ok(v)
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_reference_vectors() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn repeated_token_is_one_hot() {
        let e = HashingEmbedder::default().embed("a a a").unwrap();
        assert_eq!(e.len(), 384);
        let nonzero: Vec<f64> = e.iter().copied().filter(|&x| x != 0.0).collect();
        assert_eq!(nonzero, vec![1.0]);
        // "a" hashes to bucket 0xaf63dc4c8601ec8c % 384
        assert_eq!(e[(0xaf63dc4c8601ec8c_u64 % 384) as usize], 1.0);
    }

    #[test]
    fn case_insensitive_tokens() {
        let enc = HashingEmbedder::default();
        assert_eq!(enc.embed("Red CAR").unwrap(), enc.embed("red car").unwrap());
    }

    #[test]
    fn empty_text_is_rejected() {
        let err = HashingEmbedder::default().embed("  \n").unwrap_err();
        assert_eq!(err.to_string(), "empty embedding input");
    }

    /// Cosines frozen from an independent Python bag-of-words computation:
    /// 0.8660254037844388 (3 shared tokens of 3 vs 4) and 0.0 (no shared
    /// buckets).
    #[test]
    fn word_overlap_ranks_higher() {
        let enc = HashingEmbedder::default();
        let base = enc.embed("red car parked").unwrap();
        let near = enc.embed("red car parked lot").unwrap();
        let far = enc.embed("two people fighting").unwrap();
        let c_near = cosine(&base, &near);
        let c_far = cosine(&base, &far);
        assert!((c_near - NEAR_COSINE).abs() < 1e-12, "{c_near}");
        assert!((c_far - FAR_COSINE).abs() < 1e-12, "{c_far}");
        assert!(c_near > c_far);
    }

    const NEAR_COSINE: f64 = 0.8660254037844388;
    const FAR_COSINE: f64 = 0.0;

    #[test]
    fn deterministic_over_random_strings() {
        use rand::{Rng, SeedableRng};
        let enc = HashingEmbedder::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let len = rng.random_range(1..40);
            let s: String = (0..len)
                .map(|_| {
                    if rng.random_bool(0.2) {
                        ' '
                    } else {
                        rng.random_range('a'..='z')
                    }
                })
                .collect();
            let s = format!("x{s}");
            let a = enc.embed(&s).unwrap();
            let b = enc.embed(&s).unwrap();
            assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
            let norm: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!(norm > 0.0 && norm <= 1.0 + 1e-6);
        }
    }
}
