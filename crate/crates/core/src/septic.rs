//! Exact multinomial split of the septic nonlinearity around the cone.
//!
//! With z = |1 − a| and a profile in expansion form
//!
//!     Q = z^{2/3} Q₁ + Q₂ + z^{β} Q₃,       β ∈ {7/3, 4/3},
//!
//! the power Q⁷ regroups as Σ_{j=0}^{2} z^{2j/3} N_j(z, Q₁, Q₂, Q₃) where
//! each N_j carries only integer powers of z. The terms are binned by the
//! residue of 2m₁ + 3β·m₃ mod 3 over the multinomial exponents
//! m₁ + m₂ + m₃ = 7. The same table drives the small near-cone systems
//! (β = 7/3) and the large-amplitude system (β = 4/3).

/// One multinomial term: coeff · z^pow · Q₁^{m₁} Q₂^{m₂} Q₃^{m₃}.
#[derive(Debug, Clone, Copy)]
struct Term {
    coeff: f64,
    pow: u32,
    m: [u32; 3],
}

#[derive(Debug, Clone)]
pub struct SepticSplit {
    bins: [Vec<Term>; 3],
    /// Numerator of the exponent β = beta3/3 on the third component.
    pub beta3: u32,
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(|k| k as f64).product::<f64>().max(1.0)
}

impl SepticSplit {
    /// Builds the split for third-component exponent β = beta3/3
    /// (beta3 = 7 for the small expansions, 4 for the large one).
    pub fn new(beta3: u32) -> Self {
        assert!(beta3 == 7 || beta3 == 4);
        let mut bins: [Vec<Term>; 3] = [Vec::new(), Vec::new(), Vec::new()];
        // class offsets: z^{2j/3} prefactors carry numerators 0, 2, 4
        let offsets = [0u32, 2, 4];
        for m1 in 0..=7u32 {
            for m3 in 0..=(7 - m1) {
                let m2 = 7 - m1 - m3;
                let coeff = factorial(7) / (factorial(m1) * factorial(m2) * factorial(m3));
                let n = 2 * m1 + beta3 * m3;
                let j = match n % 3 {
                    0 => 0usize,
                    2 => 1,
                    _ => 2,
                };
                debug_assert!(n >= offsets[j]);
                bins[j].push(Term {
                    coeff,
                    pow: (n - offsets[j]) / 3,
                    m: [m1, m2, m3],
                });
            }
        }
        SepticSplit { bins, beta3 }
    }

    /// N_j(z, q₁, q₂, q₃).
    pub fn eval(&self, j: usize, z: f64, q1: f64, q2: f64, q3: f64) -> f64 {
        let mut acc = 0.0;
        for t in &self.bins[j] {
            acc += t.coeff
                * z.powi(t.pow as i32)
                * q1.powi(t.m[0] as i32)
                * q2.powi(t.m[1] as i32)
                * q3.powi(t.m[2] as i32);
        }
        acc
    }

    /// The reassembled power Σ_j z^{2j/3} N_j; equals (z^{2/3}q₁ + q₂ + z^β q₃)⁷.
    pub fn reassemble(&self, z: f64, q1: f64, q2: f64, q3: f64) -> f64 {
        let z23 = z.powf(2.0 / 3.0);
        (0..3)
            .map(|j| z23.powi(j as i32) * self.eval(j, z, q1, q2, q3))
            .sum()
    }
}
