//! Single-digit quantum objects as small dense complex matrices.
//!
//! Conventions: `X|j⟩ = |j−1⟩`, `Z|j⟩ = ω^j|j⟩` with `ω = e^{2πi/d}`, and
//! `U = d^{−1/2} Σ ω^{jl} |j⟩⟨l|`, so that `UZU† = X` and `UXU† = Z^{−1}`.
//! A Pauli-type distribution `P(s,t)` refers to the error `X^s Z^t`.

use nalgebra::{Complex, DMatrix};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, parse_err, Error, Result};
use crate::gfvec::{check_prime, LinearCode, Word, DEFAULT_ENUMERATION_CAP};
use crate::typesys::JointDist;

pub type Complex64 = Complex<f64>;
pub type CMat = DMatrix<Complex64>;

/// Trace-preservation tolerance for [`KrausChannel::new`].
pub const TP_TOLERANCE: f64 = 1e-10;

/// Largest state-space dimension the dense mixture check will build.
pub const MAX_DENSE_DIM: usize = 16;

/// The Weyl operators and Fourier matrix for one digit.
#[derive(Clone, Debug)]
pub struct WeylOps {
    pub d: usize,
    pub omega: Complex64,
    pub x: CMat,
    pub z: CMat,
    pub u: CMat,
}

/// Largest entrywise deviations in the defining relations.
#[derive(Clone, Copy, Debug)]
pub struct RelationCheck {
    /// `XZ − ωZX`.
    pub commutation: f64,
    /// `UZU† − X`.
    pub fourier_z: f64,
    /// `UXU† − Z^{−1}`.
    pub fourier_x: f64,
    /// `UU† − I`.
    pub unitarity: f64,
}

impl RelationCheck {
    pub fn max(&self) -> f64 {
        self.commutation
            .max(self.fourier_z)
            .max(self.fourier_x)
            .max(self.unitarity)
    }
}

/// `ω^k`, with rounding-level components snapped to zero so that the
/// binary and ternary tables stay exact where they can.
pub fn root_of_unity(d: usize, k: usize) -> Complex64 {
    let c = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * (k % d) as f64 / d as f64);
    let snap = |x: f64| if x.abs() < 1e-15 { 0.0 } else { x };
    Complex64::new(snap(c.re), snap(c.im))
}

fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

pub fn weyl_ops(d: u32) -> Result<WeylOps> {
    let d = check_prime(d)? as usize;
    let omega = root_of_unity(d, 1);
    let x = CMat::from_fn(d, d, |r, c| {
        if (r + 1) % d == c {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let z = CMat::from_fn(d, d, |r, c| {
        if r == c {
            root_of_unity(d, r)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let norm = 1.0 / (d as f64).sqrt();
    let u = CMat::from_fn(d, d, |j, l| root_of_unity(d, j * l) * norm);
    Ok(WeylOps { d, omega, x, z, u })
}

impl WeylOps {
    /// `X^s Z^t`.
    pub fn weyl(&self, s: usize, t: usize) -> CMat {
        let mut m = CMat::identity(self.d, self.d);
        for _ in 0..s % self.d {
            m = &m * &self.x;
        }
        for _ in 0..t % self.d {
            m = &m * &self.z;
        }
        m
    }

    pub fn check_relations(&self) -> RelationCheck {
        let (x, z, u) = (&self.x, &self.z, &self.u);
        let ud = u.adjoint();
        let z_inv = z.adjoint();
        RelationCheck {
            commutation: max_abs(&(x * z - z * x * self.omega)),
            fourier_z: max_abs(&(u * z * &ud - x)),
            fourier_x: max_abs(&(u * x * &ud - z_inv)),
            unitarity: max_abs(&(u * &ud - CMat::identity(self.d, self.d))),
        }
    }
}

/// A CPTP map on one digit, `ρ ↦ Σ A_i ρ A_i†`.
#[derive(Clone, Debug)]
pub struct KrausChannel {
    d: usize,
    ops: Vec<CMat>,
}

impl KrausChannel {
    pub fn new(d: usize, ops: Vec<CMat>) -> Result<Self> {
        check_prime(d as u32)?;
        if ops.is_empty() {
            return Err(invalid("a channel needs at least one Kraus operator"));
        }
        if let Some(bad) = ops.iter().find(|a| a.nrows() != d || a.ncols() != d) {
            return Err(invalid(format!(
                "Kraus operator of shape {}x{}, expected {d}x{d}",
                bad.nrows(),
                bad.ncols()
            )));
        }
        let ch = Self { d, ops };
        let dev = ch.tp_deviation();
        if dev > TP_TOLERANCE {
            return Err(Error::NotTracePreserving(dev));
        }
        Ok(ch)
    }

    pub fn identity(d: usize) -> Result<Self> {
        Self::new(d, vec![CMat::identity(d, d)])
    }

    /// The Weyl-mixture channel `ρ ↦ Σ P(s,t) N ρ N†` with `N = X^s Z^t`.
    pub fn from_pauli(p: &JointDist) -> Result<Self> {
        let d = p.alphabet();
        let w = weyl_ops(d as u32)?;
        let mut ops = Vec::new();
        for s in 0..d {
            for t in 0..d {
                let prob = p.get(s, t);
                if prob > 0.0 {
                    ops.push(w.weyl(s, t) * Complex64::new(prob.sqrt(), 0.0));
                }
            }
        }
        Self::new(d, ops)
    }

    /// A random channel with `count` Kraus operators, cut from a random
    /// isometry `C^d → C^{count·d}`.
    pub fn random<R: Rng + ?Sized>(d: usize, count: usize, rng: &mut R) -> Result<Self> {
        let g = gaussian_matrix(count * d, d, rng);
        let q = g.qr().q();
        let ops = (0..count)
            .map(|i| q.view((i * d, 0), (d, d)).into_owned())
            .collect();
        Self::new(d, ops)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn ops(&self) -> &[CMat] {
        &self.ops
    }

    /// `max |Σ A_i†A_i − I|`.
    pub fn tp_deviation(&self) -> f64 {
        let mut acc = CMat::zeros(self.d, self.d);
        for a in &self.ops {
            acc += a.adjoint() * a;
        }
        max_abs(&(acc - CMat::identity(self.d, self.d)))
    }

    pub fn apply(&self, rho: &CMat) -> CMat {
        let mut out = CMat::zeros(self.d, self.d);
        for a in &self.ops {
            out += a * rho * a.adjoint();
        }
        out
    }

    /// Another Kraus list for the same map: `B_j = Σ_i W_{ji} A_i` for a
    /// unitary `W`.
    pub fn remixed(&self, w: &CMat) -> Result<Self> {
        let k = self.ops.len();
        if w.nrows() != k || w.ncols() != k {
            return Err(invalid("mixing matrix must be square of the Kraus count"));
        }
        let ops = (0..k)
            .map(|j| {
                let mut b = CMat::zeros(self.d, self.d);
                for (i, a) in self.ops.iter().enumerate() {
                    b += a * w[(j, i)];
                }
                b
            })
            .collect();
        Self::new(self.d, ops)
    }
}

fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// A random unitary from the QR decomposition of a complex Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMat {
    gaussian_matrix(dim, dim, rng).qr().q()
}

/// Clamps rounding-level negatives and renormalizes.
fn finish_dist(d: usize, mut table: Vec<f64>) -> Result<JointDist> {
    if let Some(&bad) = table.iter().find(|&&p| p < -1e-12) {
        return Err(invalid(format!("negative Pauli weight {bad}")));
    }
    for p in table.iter_mut() {
        *p = p.max(0.0);
    }
    let total: f64 = table.iter().sum();
    if (total - 1.0).abs() > 1e-10 {
        return Err(invalid(format!("Pauli weights sum to {total}")));
    }
    JointDist::new(d, table.into_iter().map(|p| p / total).collect())
}

/// `P_A(s,t) = Σ_i |d^{−1} Tr(A_i† X^s Z^t)|²`.
pub fn channel_to_dist(ch: &KrausChannel) -> Result<JointDist> {
    let d = ch.d;
    let w = weyl_ops(d as u32)?;
    let mut table = vec![0.0; d * d];
    for s in 0..d {
        for t in 0..d {
            let n = w.weyl(s, t);
            table[s * d + t] = ch
                .ops
                .iter()
                .map(|a| (a.adjoint() * &n).trace().norm_sqr())
                .sum::<f64>()
                / (d * d) as f64;
        }
    }
    finish_dist(d, table)
}

/// The same distribution computed from the Choi state: `P(s,t) = ⟨Ψ_y|M|Ψ_y⟩`
/// with `M = (I⊗A)(|Ψ⟩⟨Ψ|)` and `|Ψ_y⟩ = (I⊗X^sZ^t)|Ψ⟩`.
pub fn channel_to_dist_choi(ch: &KrausChannel) -> Result<JointDist> {
    let d = ch.d;
    let w = weyl_ops(d as u32)?;
    let id = CMat::identity(d, d);
    let psi = maximally_entangled(d);
    let mut choi = CMat::zeros(d * d, d * d);
    for a in &ch.ops {
        let v = id.kronecker(a) * &psi;
        choi += &v * v.adjoint();
    }
    let mut table = vec![0.0; d * d];
    for s in 0..d {
        for t in 0..d {
            let y = id.kronecker(&w.weyl(s, t)) * &psi;
            table[s * d + t] = (y.adjoint() * &choi * &y)[(0, 0)].re;
        }
    }
    finish_dist(d, table)
}

fn maximally_entangled(d: usize) -> CMat {
    let norm = 1.0 / (d as f64).sqrt();
    CMat::from_fn(d * d, 1, |r, _| {
        if r / d == r % d {
            Complex64::new(norm, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Largest deviation of the Gram matrix of `{(I⊗X^sZ^t)|Ψ⟩}` from the
/// identity; the family has d² members at one digit.
pub fn weyl_bell_orthonormality(d: u32) -> Result<f64> {
    let w = weyl_ops(d)?;
    let d = w.d;
    let id = CMat::identity(d, d);
    let psi = maximally_entangled(d);
    let vecs: Vec<CMat> = (0..d * d)
        .map(|y| id.kronecker(&w.weyl(y / d, y % d)) * &psi)
        .collect();
    let mut dev: f64 = 0.0;
    for (i, a) in vecs.iter().enumerate() {
        for (j, b) in vecs.iter().enumerate() {
            let g = (a.adjoint() * b)[(0, 0)];
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((g - Complex64::new(target, 0.0)).norm());
        }
    }
    Ok(dev)
}

/// `A′ = U⁻¹ A U`, with Kraus operators `U† A_i U`.
pub fn fourier_conjugate(ch: &KrausChannel) -> Result<KrausChannel> {
    let w = weyl_ops(ch.d as u32)?;
    let ud = w.u.adjoint();
    let ops = ch.ops.iter().map(|a| &ud * a * &w.u).collect();
    KrausChannel::new(ch.d, ops)
}

/// `max |P_{A′}(s,t) − P_A(t,−s)|`.
pub fn switch3_deviation(ch: &KrausChannel) -> Result<f64> {
    let p = channel_to_dist(ch)?;
    let p_conj = channel_to_dist(&fourier_conjugate(ch)?)?;
    let expected = p.fourier_relabel();
    Ok(p_conj
        .table()
        .iter()
        .zip(expected.table())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// Dense check of the coset-state mixture identity.
///
/// Builds `|φ_z⟩ = |C|^{−1/2} Σ_{w∈C} ω^{z·w} |w+v+x⟩` for one `z` per coset
/// of C⊥, averages their projectors, and returns the largest entrywise
/// distance to `|C|^{−1} Σ_{w∈C} |w+v+x⟩⟨w+v+x|`.
pub fn spmixed_check(c: &LinearCode, x: &Word, v: &Word) -> Result<f64> {
    let (d, n) = (c.d(), c.n());
    let dim = (d as usize)
        .checked_pow(n as u32)
        .filter(|&m| m <= MAX_DENSE_DIM)
        .ok_or(Error::CapExceeded {
            what: "dense state space",
            needed: (d as f64).powi(n as i32),
            cap: MAX_DENSE_DIM as u64,
        })?;
    if let Some((i, j)) = c.self_orthogonality_violation() {
        return Err(Error::NotSelfOrthogonal(i, j));
    }
    let shift = x.add(v)?;
    let words: Vec<Word> = c.codewords(DEFAULT_ENUMERATION_CAP)?.collect();
    let size = words.len() as f64;

    // One z per syndrome class: the first word (in index order) reaching it.
    let mut transversal: Vec<Word> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for i in 0..dim {
        let z = Word::from_basis_index(d, n, i)?;
        if seen.insert(c.syndrome(&z)?) {
            transversal.push(z);
        }
    }
    debug_assert_eq!(transversal.len(), words.len());

    let mut lhs = CMat::zeros(dim, dim);
    for z in &transversal {
        let mut phi = CMat::zeros(dim, 1);
        for w in &words {
            let idx = w.add(&shift)?.basis_index();
            phi[(idx, 0)] += root_of_unity(d as usize, z.dot(w)? as usize) / size.sqrt();
        }
        lhs += &phi * phi.adjoint();
    }
    lhs /= Complex64::new(transversal.len() as f64, 0.0);

    let mut rhs = CMat::zeros(dim, dim);
    for w in &words {
        let idx = w.add(&shift)?.basis_index();
        rhs[(idx, idx)] += Complex64::new(1.0 / size, 0.0);
    }
    Ok(max_abs(&(lhs - rhs)))
}

/// Parses a channel file: `d`, the operator count, then each operator as
/// `d` rows of `2d` numbers (`re im` pairs). Blank lines are ignored.
pub fn parse_kraus(text: &str) -> Result<KrausChannel> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let mut scalar = |what: &str| -> Result<usize> {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| parse_err(0, format!("missing {what}")))?;
        l.parse::<usize>()
            .map_err(|e| parse_err(ln, format!("bad {what} {l:?}: {e}")))
    };
    let d = scalar("dimension")?;
    let count = scalar("operator count")?;
    let mut ops = Vec::with_capacity(count);
    for _ in 0..count {
        let mut m = CMat::zeros(d, d);
        for r in 0..d {
            let (ln, l) = lines
                .next()
                .ok_or_else(|| parse_err(0, "operator rows end early"))?;
            let vals: Vec<f64> = l
                .split_whitespace()
                .map(str::parse::<f64>)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| parse_err(ln, format!("bad number: {e}")))?;
            if vals.len() != 2 * d {
                return Err(parse_err(ln, format!("expected {} numbers, got {}", 2 * d, vals.len())));
            }
            for c in 0..d {
                m[(r, c)] = Complex64::new(vals[2 * c], vals[2 * c + 1]);
            }
        }
        ops.push(m);
    }
    if let Some((ln, _)) = lines.next() {
        return Err(parse_err(ln, "trailing content after the last operator"));
    }
    KrausChannel::new(d, ops)
}

/// Inverse of [`parse_kraus`]; numbers use the shortest exact representation.
pub fn write_kraus(ch: &KrausChannel) -> String {
    let mut out = format!("{}\n{}\n", ch.d, ch.ops.len());
    for a in &ch.ops {
        for r in 0..ch.d {
            let row: Vec<String> = (0..ch.d)
                .map(|c| format!("{} {}", a[(r, c)].re, a[(r, c)].im))
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pauli(d: usize, table: &[f64]) -> KrausChannel {
        KrausChannel::from_pauli(&JointDist::new(d, table.to_vec()).unwrap()).unwrap()
    }

    #[test]
    fn binary_weyl_matrices() {
        let w = weyl_ops(2).unwrap();
        assert!((w.omega - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
        assert_eq!(w.x[(0, 1)], Complex64::new(1.0, 0.0));
        assert_eq!(w.x[(1, 0)], Complex64::new(1.0, 0.0));
        assert!((w.z[(1, 1)] + Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(weyl_ops(4).is_err());
    }

    #[test]
    fn relations_hold() {
        for d in [2, 3, 5, 7] {
            let dev = weyl_ops(d).unwrap().check_relations();
            assert!(dev.max() < 1e-12, "d={d}: {dev:?}");
        }
    }

    #[test]
    fn fourier_maps_z_basis_to_x_basis() {
        let w = weyl_ops(3).unwrap();
        for j in 0..3 {
            let mut e = CMat::zeros(3, 1);
            e[(j, 0)] = Complex64::new(1.0, 0.0);
            let xj = &w.u * e;
            // X-basis vectors are eigenvectors of X with eigenvalue ω^j.
            let dev = max_abs(&(&w.x * &xj - &xj * w.omega.powu(j as u32)));
            assert!(dev < 1e-12);
        }
    }

    #[test]
    fn distribution_examples() {
        let id = KrausChannel::identity(2).unwrap();
        assert_eq!(channel_to_dist(&id).unwrap().table(), &[1.0, 0.0, 0.0, 0.0]);

        let q: f64 = 0.07;
        let w = weyl_ops(2).unwrap();
        let deph = KrausChannel::new(
            2,
            vec![
                CMat::identity(2, 2) * Complex64::new((1.0 - q).sqrt(), 0.0),
                w.z.clone() * Complex64::new(q.sqrt(), 0.0),
            ],
        )
        .unwrap();
        let p = channel_to_dist(&deph).unwrap();
        // Layout (s,t): (0,0), (0,1), (1,0), (1,1).
        let expect = [1.0 - q, q, 0.0, 0.0];
        assert!(p.table().iter().zip(expect).all(|(a, b)| (a - b).abs() < 1e-12));

        let y = &w.x * &w.z;
        let depol = KrausChannel::new(
            2,
            vec![
                CMat::identity(2, 2) * Complex64::new((1.0 - q).sqrt(), 0.0),
                w.x.clone() * Complex64::new((q / 3.0).sqrt(), 0.0),
                y * Complex64::new((q / 3.0).sqrt(), 0.0),
                w.z.clone() * Complex64::new((q / 3.0).sqrt(), 0.0),
            ],
        )
        .unwrap();
        let p = channel_to_dist(&depol).unwrap();
        let expect = [1.0 - q, q / 3.0, q / 3.0, q / 3.0];
        assert!(p.table().iter().zip(expect).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn non_trace_preserving_rejected() {
        let half = CMat::identity(2, 2) * Complex64::new(0.5, 0.0);
        assert!(matches!(
            KrausChannel::new(2, vec![half]),
            Err(Error::NotTracePreserving(_))
        ));
    }

    #[test]
    fn x_flip_conjugates_to_z_flip() {
        let flip = pauli(2, &[0.0, 0.0, 1.0, 0.0]);
        let p = channel_to_dist(&fourier_conjugate(&flip).unwrap()).unwrap();
        assert!((p.get(0, 1) - 1.0).abs() < 1e-12);
        let id = KrausChannel::identity(3).unwrap();
        let p = channel_to_dist(&fourier_conjugate(&id).unwrap()).unwrap();
        assert!((p.get(0, 0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn choi_route_agrees() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for d in [2, 3] {
            let ch = KrausChannel::random(d, 3, &mut rng).unwrap();
            let a = channel_to_dist(&ch).unwrap();
            let b = channel_to_dist_choi(&ch).unwrap();
            let dev = a
                .table()
                .iter()
                .zip(b.table())
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            assert!(dev < 1e-12);
        }
    }

    #[test]
    fn weyl_bell_family_is_orthonormal() {
        for d in [2, 3, 5] {
            assert!(weyl_bell_orthonormality(d).unwrap() < 1e-12);
        }
    }

    #[test]
    fn spmixed_examples() {
        let c = LinearCode::from_strs(2, &["1111"]).unwrap();
        let zero = Word::zeros(2, 4).unwrap();
        assert!(spmixed_check(&c, &zero, &zero).unwrap() <= 1e-10);
        let x = Word::parse(2, "1000").unwrap();
        let v = Word::parse(2, "1100").unwrap();
        assert!(spmixed_check(&c, &x, &v).unwrap() <= 1e-10);
        let trivial = LinearCode::zero(2, 2).unwrap();
        let x = Word::parse(2, "10").unwrap();
        let z2 = Word::zeros(2, 2).unwrap();
        assert!(spmixed_check(&trivial, &x, &z2).unwrap() <= 1e-10);
        let big = LinearCode::from_strs(2, &["11111"]).unwrap();
        let z5 = Word::zeros(2, 5).unwrap();
        assert!(matches!(
            spmixed_check(&big, &z5, &z5),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn kraus_file_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ch = KrausChannel::random(3, 2, &mut rng).unwrap();
        let text = write_kraus(&ch);
        let back = parse_kraus(&text).unwrap();
        assert_eq!(back.ops(), ch.ops());
        assert_eq!(write_kraus(&back), text);
        assert!(parse_kraus("2\n1\n1 0 0 0\n").is_err());
    }
}
