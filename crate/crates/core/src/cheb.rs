//! Piecewise Chebyshev dense output.
//!
//! Profiles and expansion components are stored as Chebyshev interpolants on
//! panel meshes. Construction samples at Chebyshev-Lobatto nodes, so a
//! fixed-point sweep can read the current iterate anywhere while writing the
//! next one at the same nodes. Meshes may be graded toward a singular
//! endpoint (algebraic grading, default exponent 3, which resolves the
//! (1-a)^{2/3} scale) or geometric for far-field decades.

#[derive(Debug, Clone, serde::Serialize)]
pub struct ChebPanel {
    pub lo: f64,
    pub hi: f64,
    /// Chebyshev coefficients of the interpolant, c_0 .. c_n.
    coef: Vec<f64>,
    /// Coefficients of the derivative (scaled to the panel).
    dcoef: Vec<f64>,
}

impl ChebPanel {
    /// Interpolant of `f` at the n+1 Lobatto nodes of [lo, hi].
    pub fn fit<F: FnMut(f64) -> f64>(lo: f64, hi: f64, degree: usize, mut f: F) -> Self {
        let vals: Vec<f64> = lobatto_nodes(lo, hi, degree).map(|x| f(x)).collect();
        Self::from_node_values(lo, hi, &vals)
    }

    /// Builds the interpolant from values at the Lobatto nodes as produced
    /// by [`lobatto_nodes`] (descending in angle, ascending in x).
    pub fn from_node_values(lo: f64, hi: f64, vals: &[f64]) -> Self {
        let n = vals.len() - 1;
        let mut coef = vec![0.0; n + 1];
        // Discrete cosine transform (type I), direct O(n^2) sum; panels are
        // small enough that an FFT buys nothing.
        for (k, c) in coef.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, v) in vals.iter().enumerate() {
                // vals[j] is at x_j = cos(pi (n-j)/n) in panel coordinates
                let theta = std::f64::consts::PI * ((n - j) as f64) * (k as f64) / n as f64;
                let w = if j == 0 || j == n { 0.5 } else { 1.0 };
                acc += w * v * theta.cos();
            }
            *c = 2.0 * acc / n as f64;
        }
        coef[0] *= 0.5;
        coef[n] *= 0.5;
        let dcoef = differentiate(&coef, lo, hi);
        ChebPanel { lo, hi, coef, dcoef }
    }

    fn xi(&self, x: f64) -> f64 {
        (2.0 * x - self.lo - self.hi) / (self.hi - self.lo)
    }

    pub fn eval(&self, x: f64) -> f64 {
        clenshaw(&self.coef, self.xi(x))
    }

    pub fn deriv(&self, x: f64) -> f64 {
        clenshaw(&self.dcoef, self.xi(x))
    }

    pub fn second_deriv(&self, x: f64) -> f64 {
        let d2 = differentiate(&self.dcoef, self.lo, self.hi);
        clenshaw(&d2, self.xi(x))
    }
}

/// Ascending Lobatto nodes of [lo, hi] for the given degree.
pub fn lobatto_nodes(lo: f64, hi: f64, degree: usize) -> impl Iterator<Item = f64> {
    let n = degree;
    (0..=n).map(move |j| {
        let t = (std::f64::consts::PI * (n - j) as f64 / n as f64).cos();
        0.5 * (lo + hi) + 0.5 * (hi - lo) * t
    })
}

fn clenshaw(coef: &[f64], xi: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &c in coef.iter().skip(1).rev() {
        let b0 = 2.0 * xi * b1 - b2 + c;
        b2 = b1;
        b1 = b0;
    }
    xi * b1 - b2 + coef[0]
}

/// Chebyshev derivative coefficients, including the 2/(hi-lo) chain factor.
fn differentiate(coef: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let n = coef.len() - 1;
    let mut d = vec![0.0; n + 1];
    if n == 0 {
        return d;
    }
    let scale = 2.0 / (hi - lo);
    d[n - 1] = 2.0 * n as f64 * coef[n];
    for k in (0..n.saturating_sub(1)).rev() {
        d[k] = d.get(k + 2).copied().unwrap_or(0.0) + 2.0 * (k + 1) as f64 * coef[k + 1];
    }
    d[0] *= 0.5;
    for v in d.iter_mut() {
        *v *= scale;
    }
    d
}

/// Which end of an interval carries the singular behavior a mesh should
/// resolve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradeToward {
    Lo,
    Hi,
}

/// Panel breakpoints.
pub fn uniform_mesh(lo: f64, hi: f64, panels: usize) -> Vec<f64> {
    crate::quad::linspace(lo, hi, panels.max(1))
}

/// Algebraically graded breakpoints, clustering toward the chosen end with
/// the given exponent.
pub fn graded_mesh(lo: f64, hi: f64, panels: usize, exponent: f64, toward: GradeToward) -> Vec<f64> {
    let n = panels.max(1);
    (0..=n)
        .map(|i| {
            let s = i as f64 / n as f64;
            match toward {
                GradeToward::Hi => lo + (hi - lo) * (1.0 - (1.0 - s).powf(exponent)),
                GradeToward::Lo => lo + (hi - lo) * s.powf(exponent),
            }
        })
        .collect()
}

/// Geometric breakpoints (for decades-spanning far fields).
pub fn geometric_mesh(lo: f64, hi: f64, per_octave: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo);
    let octaves = (hi / lo).log2().ceil().max(1.0) as usize;
    let n = (octaves * per_octave).max(1);
    let ratio = (hi / lo).powf(1.0 / n as f64);
    let mut out = Vec::with_capacity(n + 1);
    let mut x = lo;
    for _ in 0..n {
        out.push(x);
        x *= ratio;
    }
    out.push(hi);
    out
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct PiecewiseCheb {
    panels: Vec<ChebPanel>,
}

impl PiecewiseCheb {
    pub fn from_fn<F: FnMut(f64) -> f64>(mesh: &[f64], degree: usize, mut f: F) -> Self {
        assert!(mesh.len() >= 2);
        let panels = mesh
            .windows(2)
            .map(|w| ChebPanel::fit(w[0], w[1], degree, &mut f))
            .collect();
        PiecewiseCheb { panels }
    }

    /// All collocation nodes of the mesh, panel by panel (shared breakpoints
    /// appear once per adjacent panel; the assembly in the fixed-point
    /// solvers writes both copies with the same value).
    pub fn from_node_values(mesh: &[f64], degree: usize, vals: &[f64]) -> Self {
        let per = degree + 1;
        assert_eq!(vals.len(), (mesh.len() - 1) * per);
        let panels = mesh
            .windows(2)
            .enumerate()
            .map(|(i, w)| ChebPanel::from_node_values(w[0], w[1], &vals[i * per..(i + 1) * per]))
            .collect();
        PiecewiseCheb { panels }
    }

    pub fn collocation_nodes(mesh: &[f64], degree: usize) -> Vec<f64> {
        mesh.windows(2)
            .flat_map(|w| lobatto_nodes(w[0], w[1], degree))
            .collect()
    }

    pub fn lo(&self) -> f64 {
        self.panels[0].lo
    }

    pub fn hi(&self) -> f64 {
        self.panels[self.panels.len() - 1].hi
    }

    fn panel(&self, x: f64) -> &ChebPanel {
        // binary search on panel upper bounds
        let mut lo = 0usize;
        let mut hi = self.panels.len() - 1;
        while lo < hi {
            let mid = (lo + hi) / 2;
            if x <= self.panels[mid].hi {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        &self.panels[lo]
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.panel(x).eval(x)
    }

    pub fn deriv(&self, x: f64) -> f64 {
        self.panel(x).deriv(x)
    }

    pub fn second_deriv(&self, x: f64) -> f64 {
        self.panel(x).second_deriv(x)
    }

    pub fn panel_count(&self) -> usize {
        self.panels.len()
    }
}
