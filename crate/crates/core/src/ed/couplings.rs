use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{binomial, factorial};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub n_majorana: usize,
    pub q: usize,
    pub j_coupling: f64,
    pub seed: u64,
}

impl ModelParams {
    pub fn new(n_majorana: usize, q: usize, j_coupling: f64, seed: u64) -> Self {
        Self {
            n_majorana,
            q,
            j_coupling,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (n, q) = (self.n_majorana, self.q);
        if n == 0 || n % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "n_majorana must be even and positive, got {n}"
            )));
        }
        if q < 2 || q % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "q must be even and at least 2, got {q}"
            )));
        }
        if q > n {
            return Err(Error::InvalidParameter(format!("q = {q} exceeds N = {n}")));
        }
        if n > 16 {
            return Err(Error::TooLarge {
                n,
                limit: 16,
                what: "Majorana string masks",
            });
        }
        if !self.j_coupling.is_finite() {
            return Err(Error::InvalidParameter("J must be finite".into()));
        }
        Ok(())
    }

    /// Variance `(q−1)!·J²/N^{q−1}` of each independent coupling.
    pub fn coupling_variance(&self) -> f64 {
        factorial(self.q - 1) * self.j_coupling.powi(2)
            / (self.n_majorana as f64).powi(self.q as i32 - 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub indices: Vec<usize>,
    pub value: f64,
}

impl Coupling {
    pub fn mask(&self) -> u32 {
        self.indices.iter().fold(0u32, |m, &i| m | 1 << i)
    }
}

/// Independent couplings `J_{i₁…i_q}` over strictly increasing index tuples,
/// stored in lexicographic order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingTensor {
    pub n: usize,
    pub q: usize,
    pub entries: Vec<Coupling>,
}

fn increasing_tuples(n: usize, q: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(binomial(n, q));
    let mut idx: Vec<usize> = (0..q).collect();
    if q > n {
        return out;
    }
    loop {
        out.push(idx.clone());
        let Some(i) = (0..q).rev().find(|&i| idx[i] < n - q + i) else {
            return out;
        };
        idx[i] += 1;
        for k in i + 1..q {
            idx[k] = idx[k - 1] + 1;
        }
    }
}

impl CouplingTensor {
    /// Gaussian couplings drawn from ChaCha20 seeded with `params.seed`.
    pub fn sample(params: &ModelParams) -> Result<Self> {
        Self::sample_stream(params, 0)
    }

    /// Same generator on an independent stream; used to give each disorder
    /// realization its own fixed sequence.
    pub fn sample_stream(params: &ModelParams, stream: u64) -> Result<Self> {
        params.validate()?;
        let mut rng = ChaCha20Rng::seed_from_u64(params.seed);
        rng.set_stream(stream);
        let sd = params.coupling_variance().sqrt();
        let normal = Normal::new(0.0, 1.0).expect("unit normal");
        let entries = increasing_tuples(params.n_majorana, params.q)
            .into_iter()
            .map(|indices| Coupling {
                indices,
                value: sd * normal.sample(&mut rng),
            })
            .collect();
        Ok(Self {
            n: params.n_majorana,
            q: params.q,
            entries,
        })
    }

    pub fn single(n: usize, indices: Vec<usize>, value: f64) -> Result<Self> {
        let q = indices.len();
        if indices.windows(2).any(|w| w[0] >= w[1]) || indices.iter().any(|&i| i >= n) {
            return Err(Error::InvalidParameter(
                "coupling indices must be strictly increasing and below N".into(),
            ));
        }
        Ok(Self {
            n,
            q,
            entries: vec![Coupling { indices, value }],
        })
    }

    pub fn zero(n: usize, q: usize) -> Self {
        Self {
            n,
            q,
            entries: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
